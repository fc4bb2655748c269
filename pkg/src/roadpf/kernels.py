"""Backend dispatch for the numeric hot spots.

The compiled extension is used when it was built; otherwise the numpy
versions in ``_pykernels`` are used. ``set_backend`` switches explicitly
(tests and the benchmark use it to compare the two).
"""

from __future__ import annotations

import numpy as np

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(6)
# transition kernel support, in standard deviations around the control
TRANSITION_SPAN = 8.0

_impl = _ckernels if _ckernels is not None else _pykernels
BACKEND = "compiled" if _ckernels is not None else "python"


def available_backends() -> list[str]:
    return ["python"] + (["compiled"] if _ckernels is not None else [])


def set_backend(name: str) -> None:
    global _impl, BACKEND
    if name == "compiled":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not built; run `pip install -e .`")
        _impl = _ckernels
    elif name == "python":
        _impl = _pykernels
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name


def pair_transition_sum(prev_xy, coef, cur_xy, u: float, sigma: float) -> np.ndarray:
    return _impl.pair_transition_sum(prev_xy, coef, cur_xy, float(u), float(sigma))


def transition_mass(centers, seg_start, seg_dir, seg_len, u: float, sigma: float) -> np.ndarray:
    return _impl.transition_mass(centers, seg_start, seg_dir, seg_len, float(u), float(sigma),
                                 GL_NODES, GL_WEIGHTS, TRANSITION_SPAN)


def polyline_distance(points, verts) -> np.ndarray:
    return _impl.polyline_distance(points, verts)
