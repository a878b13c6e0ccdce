"""Motion map thresholding, min-max normalization, and map combination."""

from __future__ import annotations

import numpy as np

from .config import FusionWeights
from .errors import ParameterError


def adaptive_threshold(
    magnitude: np.ndarray, threshold_percent: float = 10.0, window: int | None = None
) -> np.ndarray:
    """Binary map: 0 where a pixel is more than T percent below the mean of
    its window x window neighbourhood, 1 otherwise.

    Neighbourhood means come from an integral image with edge-clipped
    windows, so border pixels average over their in-bounds neighbours only.
    The predicate compares against a local mean, which makes the result
    invariant to positive rescaling of the input.
    """
    magnitude = np.asarray(magnitude, dtype=np.float64)
    if magnitude.ndim != 2:
        raise ParameterError("expected a 2D magnitude grid")
    if not 0 <= threshold_percent <= 100:
        raise ParameterError("threshold_percent must be in [0, 100]")
    height, width = magnitude.shape
    if window is None:
        window = max(1, width // 8)
    if window < 1:
        raise ParameterError("window must be >= 1")

    integral = np.zeros((height + 1, width + 1))
    integral[1:, 1:] = magnitude.cumsum(axis=0).cumsum(axis=1)
    half = window // 2
    rows = np.arange(height)
    cols = np.arange(width)
    top = np.clip(rows - half, 0, height)[:, None]
    bottom = np.clip(rows + half + 1, 0, height)[:, None]
    left = np.clip(cols - half, 0, width)[None, :]
    right = np.clip(cols + half + 1, 0, width)[None, :]
    sums = (
        integral[bottom, right]
        - integral[top, right]
        - integral[bottom, left]
        + integral[top, left]
    )
    counts = (bottom - top) * (right - left)
    averages = sums / counts
    keep_factor = 1.0 - threshold_percent / 100.0
    return np.where(magnitude < keep_factor * averages, 0.0, 1.0)


def minmax_normalize(values: np.ndarray) -> np.ndarray:
    """Linear map onto [0, 1]; a constant map becomes all zeros."""
    values = np.asarray(values, dtype=np.float64)
    lo = values.min()
    hi = values.max()
    if not np.isfinite(lo) or not np.isfinite(hi):
        raise ParameterError("map contains non-finite values")
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def combine(
    visual: np.ndarray,
    audio: np.ndarray,
    motion: np.ndarray,
    weights: FusionWeights | None = None,
) -> np.ndarray:
    """Weighted average of the three [0, 1] maps; output stays in [0, 1]."""
    if weights is None:
        weights = FusionWeights()
    weights.validate()
    visual = np.asarray(visual, dtype=np.float64)
    audio = np.asarray(audio, dtype=np.float64)
    motion = np.asarray(motion, dtype=np.float64)
    if visual.shape != audio.shape or visual.shape != motion.shape:
        raise ParameterError("maps must share dimensions")
    total = weights.visual + weights.audio + weights.motion
    return (weights.visual * visual + weights.audio * audio + weights.motion * motion) / total
