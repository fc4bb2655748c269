"""Vehicle tracking on road networks with bootstrap and observation-driven particle filters."""

from .network import NetworkError, NetworkPosition, RoadNetwork, Segment, make_grid_network
from .sensor_models import (NoCandidateSegments, ObservationModel, ObservationProposal,
                            TransitionModel, observation_density, proposal_density,
                            sample_observation_proposal, transition_density)
from .filter import (Belief, Particle, StepInput, detect_failure, effective_sample_size,
                     improved_update, init_from_observation, recover, standard_update)
from .trajectory import BeliefHistory, Trajectory, extract_fragments, extract_path, extract_path_viterbi
from .simulator import GpsTrace, SpeedProfile, TruePath, generate_route, observe
from .tracker import track
from .evaluation import ExperimentConfig, MetricsRecord, holdout_split, prediction_error, run_experiment, sweep
from .grid_oracle import DiscreteStateSpace, exact_filter, exact_filter_step, tv_distance

__version__ = "0.1.0"
