"""Maximum-likelihood reconstruction of the 1-to-2 qubit cloner's process matrix."""

from ._kernels import NUMBA_ENABLED, backend
from .channel import (
    ChoiMatrix,
    apply_choi,
    choi_from_action,
    choi_from_action_pauli,
    clone_apply,
    clone_choi,
    kraus_from_choi,
    max_entangled,
    pauli_basis,
    symmetric_projector,
    tp_residual,
)
from .estimator import (
    EstimationResult,
    EstimatorConfig,
    error_metric,
    error_metric_real,
    estimate,
    log_likelihood,
    nelder_mead,
    penalized_objective,
    q_column,
    scaling_study,
)
from .experiment import (
    Dataset,
    MeasurementRecord,
    MeasurementSetting,
    Outcome,
    PureState,
    generate_dataset,
    prob_closed,
    prob_trace,
    read_dataset,
    sample_outcome,
    write_dataset,
)

__version__ = "0.1.0"
