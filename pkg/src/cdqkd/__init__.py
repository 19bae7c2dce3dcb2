"""Three-party collective-detection QKD over collective-noise channels."""

from .bases import LogicalEncoding, NoiseKind, make_encoding
from .channels import NoiseModel, Sampling
from .discrimination import analyze_operator_set, min_error_probability, polygon_distance_r
from .operators import ComplementRecipe, OperatorSet, build_operator_set, reference_instance
from .protocol import ProtocolConfig, SessionResult, Variant, run_session

__version__ = "0.1.0"
ARTIFACT_VERSION = "v" + __version__

__all__ = [
    "ARTIFACT_VERSION",
    "ComplementRecipe",
    "LogicalEncoding",
    "NoiseKind",
    "NoiseModel",
    "OperatorSet",
    "ProtocolConfig",
    "Sampling",
    "SessionResult",
    "Variant",
    "__version__",
    "analyze_operator_set",
    "build_operator_set",
    "make_encoding",
    "min_error_probability",
    "reference_instance",
    "polygon_distance_r",
    "run_session",
]
