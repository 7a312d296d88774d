"""Semi-dense coarse-to-fine image matching with covisibility-guided attention and bilateral subpixel refinement."""

from . import kernels
from .config import RunConfig, load_config
from .errors import DegenerateGeometryError, ShapeError, TensorFormatError
from .geometry import Intrinsics, RelativePose
from .matcher import MatchResult, Model, OracleFeatures, match_pipeline
from .model import build_model, load_model, save_model

__version__ = "0.1.0"

__all__ = [
    "DegenerateGeometryError",
    "Intrinsics",
    "MatchResult",
    "Model",
    "OracleFeatures",
    "RelativePose",
    "RunConfig",
    "ShapeError",
    "TensorFormatError",
    "build_model",
    "kernels",
    "load_config",
    "load_model",
    "match_pipeline",
    "save_model",
]
