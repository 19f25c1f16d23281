"""Semiparametric Bayesian networks over continuous data.

Nodes are either linear Gaussian or kernel-based; the kernel conditionals
come in an exact form (CKDE) and two binned accelerations: a sparse binned
kernel sum (SBKDE) and an FFT-convolution density grid (FKDE).  Structures
are learned by greedy hill climbing with a cross-validated log-likelihood
score and patience.
"""

from .binned_kde import (
    DENSITY_FLOOR,
    FkdeCpd,
    FkdeDimensionError,
    FkdeGuardConfig,
    FkdeModel,
    SbkdeCpd,
    SbkdeModel,
    fkde_truncation_radius,
    padded_size,
)
from .binning import (
    BinningRule,
    Grid,
    SparseWeightTensor,
    bin_dataset,
    bin_univariate,
    build_grid,
)
from .core import (
    CycleError,
    Dag,
    Dataset,
    NetworkModel,
    NodeType,
    is_acyclic,
    topological_order,
)
from .experiments import (
    ExperimentConfig,
    IngestionError,
    RunReport,
    load_csv,
    load_network,
    run_experiment,
    save_network,
    write_report,
)
from .kde import (
    BandwidthMatrix,
    CkdeCpd,
    FitError,
    KdeModel,
    gaussian_log_kernel,
    mixture_logpdf,
    normal_reference_bandwidth,
)
from .learning import (
    HcConfig,
    HillClimbResult,
    LgCpd,
    cv_folds,
    cv_score,
    fit,
    hill_climb,
    loglik,
)
from .metrics import LoglikErrors, RunTiming, hmd, loglik_errors, shd, speed_ratio, thmd
from .synth import GenerativeSpec, SamplingError, build_synthetic, sample

__version__ = "0.1.0"
