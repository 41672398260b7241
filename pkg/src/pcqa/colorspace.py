"""Color transforms and channel decomposition.

Two opponent-style spaces are provided on top of raw RGB:

* "gcm": a Gaussian color model giving one luminance-like and two
  chromatic channels via a fixed 3x3 matrix.
* "yuv": BT.709 full-range luma/chroma, with U and V centered at 0.5 so
  all channels stay in [0, 1].

All transforms take RGB already rescaled to [0, 1]; `decompose` handles the
0-255 -> 0-1 rescale from stored cloud colors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud
from .errors import DomainError
from .graph import SignalAttribute

GCM_MATRIX = np.array([
    [0.06, 0.63, 0.27],
    [0.30, 0.04, -0.35],
    [0.34, -0.60, 0.17],
])

SPACES = ("gcm", "yuv", "rgb")

# Pooling weights per channel, chosen so the luminance-like channel
# dominates in the opponent spaces while green dominates in raw RGB.
DEFAULT_CHANNEL_WEIGHTS = {
    "gcm": (6.0, 1.0, 1.0),
    "yuv": (6.0, 1.0, 1.0),
    "rgb": (1.0, 2.0, 1.0),
}

CHANNEL_LABELS = {
    "gcm": ("lum", "chroma1", "chroma2"),
    "yuv": ("y", "u", "v"),
    "rgb": ("r", "g", "b"),
}


@dataclass(frozen=True)
class ColorSpaceConfig:
    """Channel decomposition choice plus per-channel pooling weights."""

    space: str = "gcm"
    weights: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.space not in SPACES:
            raise DomainError(f"unknown color space '{self.space}'")
        if self.weights is not None:
            w = tuple(float(v) for v in self.weights)
            if len(w) != 3 or any(v < 0 for v in w) or sum(w) <= 0:
                raise DomainError("channel weights must be 3 non-negative values "
                                  "with a positive sum")
            object.__setattr__(self, "weights", w)

    @property
    def resolved_weights(self) -> tuple[float, float, float]:
        return self.weights if self.weights is not None \
            else DEFAULT_CHANNEL_WEIGHTS[self.space]

    @property
    def labels(self) -> tuple[str, str, str]:
        return CHANNEL_LABELS[self.space]


def to_gcm(rgb) -> np.ndarray:
    """Gaussian color model channels for RGB input in [0, 1].

    Accepts a single (3,) triple or an (N, 3) array; linear, so
    to_gcm(a*x + b*y) == a*to_gcm(x) + b*to_gcm(y).
    """
    rgb = np.asarray(rgb, dtype=np.float64)
    return rgb @ GCM_MATRIX.T


def to_yuv(rgb) -> np.ndarray:
    """BT.709 full-range YUV for RGB input in [0, 1]; output in [0, 1]^3."""
    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = 0.2126 * r + 0.7152 * g + 0.0722 * b
    u = (b - y) / 1.8556 + 0.5
    v = (r - y) / 1.5748 + 0.5
    return np.stack([y, u, v], axis=-1)


def decompose(cloud: PointCloud, config: ColorSpaceConfig | None = None) -> SignalAttribute:
    """Per-point color channels of a cloud in the configured space.

    Stored colors (integer 0-255) are rescaled to [0, 1] before the
    transform. Raises DomainError when the cloud has no colors.
    """
    config = config or ColorSpaceConfig()
    if not cloud.has_colors:
        raise DomainError("cloud has no colors to decompose")
    rgb = cloud.colors / 255.0
    if config.space == "gcm":
        values = to_gcm(rgb)
    elif config.space == "yuv":
        values = to_yuv(rgb)
    else:
        values = rgb
    return SignalAttribute(values=values, kind="color", labels=config.labels)
