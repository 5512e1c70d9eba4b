"""Snowflake embeddings, metric invariants and distortion measurement for finite data."""

__version__ = "0.1.0"

from .assouad import (  # noqa: E402
    BoundConstants,
    EmbeddingWindow,
    PsiFamily,
    bound_constants,
    certify_window,
    embed_real,
    embed_seq,
    psi,
    psi_jk,
)
from .errors import SnowlabError  # noqa: E402
from .invariants import (  # noqa: E402
    CriticalExponentReport,
    CubeAssignment,
    critical_exponent,
    enflo_defect,
    roundness_defect,
    space_enflo,
    space_roundness,
    transfer_check,
)
from .lp_spaces import PExponent, SparseSeq, StepFunction, dist_Lp, dist_lp, indicator_embed  # noqa: E402
from .mendel_naor import MNKernel, kernel_distance, mn_isometry_check, normalizer  # noqa: E402
from .metric_core import (  # noqa: E402
    FiniteMetricSpace,
    PointMap,
    Validity,
    distortion,
    moduli,
    snowflake,
    validate,
)

__all__ = [
    "BoundConstants", "CriticalExponentReport", "CubeAssignment", "EmbeddingWindow", "FiniteMetricSpace",
    "MNKernel", "PExponent", "PointMap", "PsiFamily", "SnowlabError", "SparseSeq", "StepFunction",
    "Validity", "bound_constants", "certify_window", "critical_exponent", "dist_Lp", "dist_lp",
    "distortion", "embed_real", "embed_seq", "enflo_defect", "indicator_embed", "kernel_distance",
    "mn_isometry_check", "moduli", "normalizer", "psi", "psi_jk", "roundness_defect", "snowflake",
    "space_enflo", "space_roundness", "transfer_check", "validate",
]
