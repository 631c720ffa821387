"""Prediction-based generalization-bound estimation for supervised learners.

The package estimates how much a learner's predictions on a held-out pairing
structure reveal about which half was used for training, turns those
information estimates into generalization-gap bounds, and verifies every
underlying inequality numerically on enumerable instances.
"""

from .bounds import (
    BoundReport,
    StabilityConstants,
    cmi_weight_bound,
    deterministic_stability_bound,
    deterministic_stability_squared_bound,
    ensemble_fcmi_bound,
    fcmi_bound_general_m,
    fcmi_bound_m1,
    fcmi_bound_mn,
    fcmi_squared_bound,
    gaussian_shift_kl,
    optimal_noise_variance,
    stability_fcmi_bound,
    stability_fcmi_squared_bound,
    stability_kl_decomposition,
    vc_fcmi_bound,
)
from .core import (
    ContractViolation,
    LabeledExample,
    PredictionSpace,
    PredictionTable,
    SizeError,
    SplitMask,
    SubsetIndex,
    Supersample,
    TrialRecord,
    aggregate_gap,
    complement_set,
    enumerate_splits,
    gap_estimate,
    select_train_set,
)
from .datagen import GeneratorSpec, sample_examples, sample_supersample
from .harness import (
    ConfigError,
    ExperimentConfig,
    ExperimentReport,
    UnsupportedCombinationError,
    curve_rows,
    curve_table_csv,
    load_report,
    persist,
    run_experiment,
    sweep,
)
from .infotheory import (
    AbsoluteContinuityError,
    JointHistogram,
    SplitEnumeration,
    conditional_mutual_information,
    entropy,
    exact_fcmi_enumeration,
    kl_divergence,
    mutual_information,
    plugin_mi_from_samples,
)
from .learners import (
    LearnerOutput,
    LearnerSpec,
    ensemble_combine,
    estimate_stability,
    noisy_predict,
    threshold_erm_fit,
    train_predict,
)

__version__ = "0.1.0"
