"""Multi-label TSK fuzzy system with label-correlation learning."""

from .antecedent import AntecedentParams, FcmResult, estimate_antecedents, fcm_cluster
from .correlation import CorrelationMatrix, build_R, pearson
from .dataset import Dataset, FoldPlan, Standardizer, fit_standardizer, load_arff, load_csv, load_dataset, make_folds
from .errors import (DegenerateClusterError, DivergenceError, MlTskError, NumericalError, ParseError,
                     UnsupportedAttributeError, UnsupportedVersionError, ValidationError)
from .evaluation import (MetricsReport, RankTable, average_precision, bonferroni_dunn_cd, coverage, evaluate,
                         friedman_statistic, hamming_loss, one_error, ranking_loss)
from .fuzzify import firing_strengths, fuzzy_map, membership
from .kernels import BACKEND
from .model import MlTskModel, load_model, predict_labels, predict_scores, save_model, train
from .solver import SolverState, TrainConfig, fit, grad_smooth, init_P, lipschitz, objective, soft_threshold

__version__ = "0.1.0"
