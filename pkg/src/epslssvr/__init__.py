"""LS-SVR and its Bayesian RBF-network counterpart, the epsilon-LS-SVR."""

from .bayes import (
    EpsLssvrConfig,
    GaussianPosterior,
    PredictiveMoments,
    build_prior,
    map_estimate,
    posterior,
    posterior_covariance_sm,
    predictive,
    predictive_table,
)
from .data import Dataset, gen_sinc, grid, load_csv, standardize
from .equivalence import arse, gap_closed_form, gap_direct, kkt_check, sweep
from .errors import InvalidArgumentError, SingularSystemError
from .kernel import KernelConfig, cross_gram, gram, rbf
from .lssvr import LssvrConfig, LssvrModel, fit, fit_rbf_ls, predict, predict_many

__version__ = "0.1.0"
