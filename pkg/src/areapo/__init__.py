from ._version import __version__

from . import dynamics
from . import environment
from . import oracle
from . import network
from . import learner
from . import evaluation
from . import event
from . import io

from .dynamics import ActuationConfig, ModelParams, PendulumState
from .environment import EnvSpec, PendulumEnv, VectorPendulumEnv
from .learner import LearnerConfig, train
from .evaluation import compute_criteria, robustness_suite, run_episode
