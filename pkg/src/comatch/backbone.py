"""Down-sampling ResNet-18 style feature pyramid (1/2, 1/4, 1/8)."""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .tensor import as_tensor, conv2d, relu

STEM_WIDTH = 64
STAGE_WIDTHS = (64, 128, 256)
BLOCKS_PER_STAGE = 2


@dataclass(frozen=True)
class PyramidFeatures:
    f2: np.ndarray  # [H/2, W/2, 64]
    f4: np.ndarray  # [H/4, W/4, 128]
    f8: np.ndarray  # [H/8, W/8, 256]


def backbone_shapes():
    """Parameter name -> shape for the whole backbone."""
    shapes = {"stem.w": (3, 3, 1, STEM_WIDTH), "stem.b": (STEM_WIDTH,)}
    cin = STEM_WIDTH
    for si, width in enumerate(STAGE_WIDTHS):
        for bi in range(BLOCKS_PER_STAGE):
            p = f"stage{si + 1}.block{bi + 1}"
            c_first = cin if bi == 0 else width
            shapes[f"{p}.conv1.w"] = (3, 3, c_first, width)
            shapes[f"{p}.conv1.b"] = (width,)
            shapes[f"{p}.conv2.w"] = (3, 3, width, width)
            shapes[f"{p}.conv2.b"] = (width,)
            if bi == 0:
                shapes[f"{p}.down.w"] = (1, 1, c_first, width)
                shapes[f"{p}.down.b"] = (width,)
        cin = width
    return shapes


def init_backbone(seed):
    """He (fan-in) normal weights, zero biases; reproducible per seed."""
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in backbone_shapes().items():
        if name.endswith(".b"):
            params[name] = np.zeros(shape, dtype=np.float32)
        else:
            fan_in = shape[0] * shape[1] * shape[2]
            params[name] = (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(np.float32)
    return params


def _block(x, params, prefix, stride):
    y = relu(conv2d(x, params[f"{prefix}.conv1.w"], stride=stride, bias=params[f"{prefix}.conv1.b"]))
    y = conv2d(y, params[f"{prefix}.conv2.w"], bias=params[f"{prefix}.conv2.b"])
    if f"{prefix}.down.w" in params:
        x = conv2d(x, params[f"{prefix}.down.w"], stride=stride, bias=params[f"{prefix}.down.b"])
    return relu(x + y)


def extract_features(image, params):
    """Run the backbone on a grayscale image in [0, 1].

    ``image`` may be ``[H, W]`` or ``[H, W, 1]``; H and W must be multiples
    of 8 so the three pyramid levels are exact.
    """
    img = as_tensor(image)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3 or img.shape[2] != 1:
        raise ShapeError(f"extract_features: expected a single-channel image, got shape {img.shape}")
    H, W, _ = img.shape
    if H % 8 or W % 8:
        raise ShapeError(f"extract_features: image {H}x{W} must have sides divisible by 8; pad or resize it first")
    x = relu(conv2d(img, params["stem.w"], bias=params["stem.b"]))
    levels = []
    for si in range(len(STAGE_WIDTHS)):
        for bi in range(BLOCKS_PER_STAGE):
            x = _block(x, params, f"stage{si + 1}.block{bi + 1}", 2 if bi == 0 else 1)
        levels.append(x)
    return PyramidFeatures(f2=levels[0], f4=levels[1], f8=levels[2])
