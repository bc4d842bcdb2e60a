"""Deterministic smoothing certificates for decision stump ensembles."""

from stumpcert.data import Dataset, DatasetSpec, SplitSpec, class_balance, load_and_split, make_dataset
from stumpcert.ensemble import (
    CategoricalStump,
    DecisionStump,
    MetaStump,
    StumpEnsemble,
    TreeLeaf,
    TreeRegionStump,
    TreeSplit,
    group_into_meta_stumps,
    load_ensemble,
    save_ensemble,
    tree_to_region_stump,
)
from stumpcert.noise import (
    DEFAULT_RADIUS_CAP,
    NoiseKind,
    NoiseModel,
    interval_prob,
    prob_from_radius,
    radius_from_prob,
)
from stumpcert.rs_baseline import RsConfig, rs_certify
from stumpcert.smoothing import (
    CategoricalShift,
    CertOutcome,
    OutputPDF,
    categorical_worst_case,
    cdf,
    certify_at_radius,
    certify_radius,
    compute_pdf,
    inverse_cdf,
    joint_certify,
    smoothed_predict,
    success_probability,
)
from stumpcert.training import (
    TrainConfig,
    class_branch_probs,
    entropy_impurity,
    fit_categorical_stump,
    fit_independent_ensemble,
    fit_stump,
)
from stumpcert.boosting import (
    AdaBoostEnsemble,
    TreeBoostConfig,
    certifiable_prediction,
    robadaboost_certify,
    robadaboost_fit,
    robtreeboost_fit,
    robtreeboost_step,
)

__version__ = "0.1.0"
