import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from roadpf import _pykernels, kernels
from roadpf.network import make_grid_network

from conftest import random_network
from oracles import point_polyline_distance

compiled = pytest.mark.skipif("compiled" not in kernels.available_backends(), reason="extension not built")


@pytest.fixture
def restore_backend():
    before = kernels.BACKEND
    yield
    kernels.set_backend(before)


class TestDispatch:
    def test_python_always_available(self):
        assert "python" in kernels.available_backends()

    def test_unknown_backend(self, restore_backend):
        with pytest.raises(ValueError):
            kernels.set_backend("fortran")

    def test_fallback_when_extension_missing(self):
        code = ("import sys; sys.modules['roadpf._ckernels'] = None\n"
                "from roadpf import kernels; print(kernels.BACKEND, kernels.available_backends())")
        out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True)
        assert out.stdout.strip() == "python ['python']"

    @compiled
    def test_compiled_is_default(self):
        code = "from roadpf import kernels; print(kernels.BACKEND)"
        out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True)
        assert out.stdout.strip() == "compiled"


class TestReference:
    def test_pair_sum_brute_force(self, restore_backend):
        rng = np.random.default_rng(0)
        prev, cur, coef = rng.uniform(0, 100, (7, 2)), rng.uniform(0, 100, (5, 2)), rng.random(7)
        u, s = 30.0, 4.0
        ref = [sum(c * np.exp(-0.5 * ((np.hypot(*(x - p)) - u) / s) ** 2) / (np.sqrt(2 * np.pi) * s)
                   for p, c in zip(prev, coef)) for x in cur]
        for b in kernels.available_backends():
            kernels.set_backend(b)
            assert np.allclose(kernels.pair_transition_sum(prev, coef, cur, u, s), ref, rtol=1e-13)

    def test_polyline_dense(self):
        rng = np.random.default_rng(1)
        verts = rng.uniform(0, 50, (6, 2))
        pts = rng.uniform(-10, 60, (40, 2))
        ref = [point_polyline_distance(p, verts, step=0.005) for p in pts]
        assert np.allclose(_pykernels.polyline_distance(pts, verts), ref, atol=0.005)

    def test_pair_sum_chunking(self):
        rng = np.random.default_rng(2)
        prev, cur, coef = rng.uniform(0, 100, (30, 2)), rng.uniform(0, 100, (25, 2)), rng.random(30)
        a = _pykernels.pair_transition_sum(prev, coef, cur, 20.0, 3.0, chunk=4)
        b = _pykernels.pair_transition_sum(prev, coef, cur, 20.0, 3.0)
        assert np.allclose(a, b, rtol=1e-14)


@compiled
class TestBackendAgreement:
    @given(st.integers(0, 2**32 - 1), st.floats(0, 300), st.floats(0.5, 40))
    def test_pair_transition_sum(self, seed, u, sigma):
        rng = np.random.default_rng(seed)
        prev, cur, coef = rng.uniform(0, 500, (40, 2)), rng.uniform(0, 500, (30, 2)), rng.random(40)
        a = _pykernels.pair_transition_sum(prev, coef, cur, u, sigma)
        from roadpf import _ckernels
        b = _ckernels.pair_transition_sum(prev, coef, cur, u, sigma)
        # exponents up to ~700 amplify last-bit differences in the distance
        assert np.allclose(a, b, rtol=1e-10, atol=1e-300)

    @given(st.integers(0, 2**32 - 1), st.floats(0, 300), st.floats(0.5, 40))
    def test_transition_mass(self, seed, u, sigma):
        rng = np.random.default_rng(seed)
        net = random_network(rng, 8, 12)
        centers = net.points(rng.integers(0, net.n_segments, 20), rng.uniform(0, 1, 20) * 1.0)
        args = (centers, net.seg_start, net.seg_dir, net.seg_len, u, sigma,
                kernels.GL_NODES, kernels.GL_WEIGHTS, kernels.TRANSITION_SPAN)
        from roadpf import _ckernels
        assert np.allclose(_pykernels.transition_mass(*args), _ckernels.transition_mass(*args),
                           rtol=1e-12, atol=1e-14)

    @given(st.integers(0, 2**32 - 1), st.integers(1, 12))
    def test_polyline_distance(self, seed, nv):
        rng = np.random.default_rng(seed)
        verts, pts = rng.uniform(0, 100, (nv, 2)), rng.uniform(-50, 150, (25, 2))
        from roadpf import _ckernels
        assert np.allclose(_pykernels.polyline_distance(pts, verts), _ckernels.polyline_distance(pts, verts),
                           rtol=1e-12, atol=1e-12)

    def test_filters_agree_across_backends(self, restore_backend):
        from roadpf.filter import StepInput, improved_update, init_from_observation
        from roadpf.sensor_models import ObservationModel, TransitionModel
        net = make_grid_network(3, 50.0)
        obs, trans = ObservationModel(5.0), TransitionModel()
        out = {}
        for b in ("python", "compiled"):
            kernels.set_backend(b)
            rng = np.random.default_rng(7)
            bel = init_from_observation(obs, net, (20.0, 1.0), 200, rng)
            bel = improved_update(bel, StepInput((30.0, 2.0), 10.0), obs, trans, net, rng)
            out[b] = bel.weights
        assert np.allclose(out["python"], out["compiled"], rtol=1e-10)
