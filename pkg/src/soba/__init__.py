"""Second-order bandit multiclass learning: learners, baselines, datasets and an experiment harness."""

from .baselines import Banditron, Perceptron, banditron_update, perceptron_bound_rhs
from .bounds import TuningInput, fallback_gamma, selfconfident_check, regret_tuned_gamma
from .datasets import (Dataset, DatasetSpec, generate_synnonsep, generate_synsep, load_dataset,
                       load_libsvm, load_snapshot, save_libsvm, save_snapshot)
from .errors import (ConfigurationError, GenerationError, InputError, ParseError,
                     ProtocolError)
from .learners import LearnerConfig, Soba, soba, soba_adaptive, soba_diag
from .losses import eta_loss, eta_loss_scalar, multiclass_hinge, multiclass_margin

__version__ = "0.1.0"
