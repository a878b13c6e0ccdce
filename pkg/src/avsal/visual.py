"""Graph-based visual saliency.

Five feature channels (intensity, color opponency, Gabor orientation energy,
flicker, flow magnitude) are computed at a reduced node resolution. Each
channel map defines a fully connected Markov chain whose transition weights
combine value dissimilarity |log(M_i/M_j)| with a Gaussian distance falloff;
the chain's equilibrium accumulates mass at dissimilar nodes (activation). A
second, activation-weighted chain concentrates that mass, and the per-channel
results are summed and upsampled to frame resolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from skimage.filters import gabor_kernel

from .errors import ParameterError
from .flow import FlowField, luma

CHANNELS = ("intensity", "color", "orientation", "flicker", "motion")

_GABOR_THETAS = (0.0, 45.0, 90.0, 135.0)
_GABOR_FREQUENCY = 0.25


@dataclass
class FeatureMap:
    values: np.ndarray
    channel: str


@dataclass
class MarkovGraph:
    """Column-stochastic transition matrix over the nodes of one feature map."""

    matrix: np.ndarray
    shape: tuple[int, int]


def gabor_energy(image: np.ndarray, theta_degrees: float) -> np.ndarray:
    """Squared magnitude of the complex Gabor response at one orientation."""
    kernel = gabor_kernel(_GABOR_FREQUENCY, theta=np.deg2rad(theta_degrees))
    real = ndimage.convolve(image, np.real(kernel), mode="nearest")
    imag = ndimage.convolve(image, np.imag(kernel), mode="nearest")
    return real**2 + imag**2


def _block_mean(image: np.ndarray, factor: int) -> np.ndarray:
    """Area-averaging downsample; trailing rows/cols beyond a full block are
    folded into the last block."""
    if factor <= 1:
        return image.astype(np.float64)
    height, width = image.shape
    out_h = max(1, height // factor)
    out_w = max(1, width // factor)
    crop = image[: out_h * factor, : out_w * factor].reshape(out_h, factor, out_w, factor)
    out = crop.mean(axis=(1, 3))
    return out


def _node_factor(width: int, height: int, base: int, max_w: int, max_h: int) -> int:
    factor = base
    while width // factor > max_w or height // factor > max_h:
        factor += 1
    return factor


def extract_feature_maps(
    frame: np.ndarray,
    prev_frame: np.ndarray | None,
    mean_flow: FlowField | None,
    downsample: int = 4,
    max_nodes_w: int = 64,
    max_nodes_h: int = 48,
) -> list[FeatureMap]:
    """The five channel maps at node resolution.

    With no previous frame the flicker channel is zero; with no flow the
    motion channel is zero. Orientation is the average Gabor energy over
    0/45/90/135 degrees, color the average absolute red-green and blue-yellow
    opponency (intensity-normalized, so it is invariant to global rescaling
    of the frame).
    """
    rgb = np.asarray(frame, dtype=np.float64) / 255.0
    if rgb.ndim != 3:
        raise ParameterError("extract_feature_maps expects an RGB frame")
    height, width = rgb.shape[:2]
    factor = _node_factor(width, height, downsample, max_nodes_w, max_nodes_h)

    lum = luma(frame) / 255.0
    red, green, blue = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    intensity_floor = np.maximum((red + green + blue) / 3.0, 0.1)
    color = (np.abs(red - green) + np.abs(blue - (red + green) / 2.0)) / (2.0 * intensity_floor)

    orientation = np.zeros_like(lum)
    for theta in _GABOR_THETAS:
        orientation += gabor_energy(lum, theta)
    orientation /= len(_GABOR_THETAS)

    if prev_frame is not None:
        flicker = np.abs(lum - luma(prev_frame) / 255.0)
    else:
        flicker = np.zeros_like(lum)

    if mean_flow is not None:
        if mean_flow.shape != lum.shape:
            raise ParameterError("flow dimensions do not match the frame")
        motion = mean_flow.magnitude()
    else:
        motion = np.zeros_like(lum)

    planes = {
        "intensity": lum,
        "color": color,
        "orientation": orientation,
        "flicker": flicker,
        "motion": motion,
    }
    return [FeatureMap(values=_block_mean(planes[name], factor), channel=name) for name in CHANNELS]


_kernel_cache: dict[tuple[int, int, float], np.ndarray] = {}


def _distance_kernel(shape: tuple[int, int], sigma: float) -> np.ndarray:
    key = (shape[0], shape[1], float(sigma))
    cached = _kernel_cache.get(key)
    if cached is None:
        rows, cols = np.mgrid[0 : shape[0], 0 : shape[1]]
        dr = rows.ravel().astype(np.float64)
        dc = cols.ravel().astype(np.float64)
        d2 = (dr[:, None] - dr[None, :]) ** 2 + (dc[:, None] - dc[None, :]) ** 2
        cached = np.exp(-d2 / (2.0 * sigma * sigma))
        if len(_kernel_cache) > 8:
            _kernel_cache.clear()
        _kernel_cache[key] = cached
    return cached


def _column_normalize(weights: np.ndarray) -> np.ndarray:
    sums = weights.sum(axis=0)
    if np.any(sums <= 0):
        raise ParameterError("graph has an unreachable node (zero column)")
    return weights / sums


def log_dissimilarity(values: np.ndarray) -> np.ndarray:
    """Pairwise |log(M_i / M_j)| over the flattened map.

    Values are min-shifted to strict positivity first; the shift epsilon is
    relative to the value range, which keeps the result exactly invariant
    under positive rescaling of the map. Requires a non-constant map.
    """
    flat = np.asarray(values, dtype=np.float64).ravel()
    value_range = flat.max() - flat.min()
    if value_range <= 0:
        raise ParameterError("dissimilarity of a constant map is identically zero")
    log_values = np.log((flat - flat.min()) + 1e-12 * value_range)
    return np.abs(log_values[:, None] - log_values[None, :])


def build_markov_graph(values: np.ndarray, sigma_frac: float = 0.15) -> MarkovGraph:
    """Dissimilarity-weighted chain over one feature map.

    w(i, j) = |log(M_i / M_j)| * exp(-dist^2 / (2 sigma^2)) with sigma a
    fraction of the node-grid width; columns are normalized to sum 1. A
    constant map has zero dissimilarity everywhere and degenerates to the
    uniform transition matrix.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.size < 2:
        raise ParameterError("feature map must be 2D with at least 2 nodes")
    n = values.size
    flat = values.ravel()
    if flat.max() - flat.min() <= 0:
        return MarkovGraph(matrix=np.full((n, n), 1.0 / n), shape=values.shape)
    weights = log_dissimilarity(values) * _distance_kernel(
        values.shape, sigma_frac * values.shape[1]
    )
    return MarkovGraph(matrix=_column_normalize(weights), shape=values.shape)


def equilibrium(
    graph: MarkovGraph,
    tol: float = 1e-7,
    max_iter: int = 10000,
) -> tuple[np.ndarray, bool]:
    """Stationary distribution by power iteration from the uniform vector.

    The iteration is damped (averaged with the previous iterate), which has
    the same fixed points but also converges for periodic chains; two-valued
    maps produce bipartite dissimilarity graphs that would otherwise
    oscillate. Returns the distribution reshaped to the node grid and a
    convergence flag; on hitting the iteration cap the last iterate is
    returned with the flag cleared.
    """
    n = graph.matrix.shape[0]
    pi = np.full(n, 1.0 / n)
    converged = False
    for _ in range(max_iter):
        nxt = (graph.matrix @ pi + pi) / 2.0
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) < tol:
            pi = nxt
            converged = True
            break
        pi = nxt
    return pi.reshape(graph.shape), converged


def concentrate_mass(activation: np.ndarray, sigma_frac: float = 0.15) -> tuple[np.ndarray, bool]:
    """Second chain whose weights pull mass toward high-activation nodes.

    w(target i, source j) = A_i * exp(-dist^2 / (2 sigma^2)); its equilibrium
    sharpens the activation. Constant activation degenerates to the uniform
    matrix, leaving the map uniform.
    """
    activation = np.asarray(activation, dtype=np.float64)
    if activation.min() < 0:
        raise ParameterError("activation must be nonnegative")
    n = activation.size
    flat = activation.ravel()
    if flat.max() - flat.min() <= 0:
        matrix = np.full((n, n), 1.0 / n)
    else:
        weights = flat[:, None] * _distance_kernel(
            activation.shape, sigma_frac * activation.shape[1]
        )
        matrix = _column_normalize(weights)
    return equilibrium(MarkovGraph(matrix=matrix, shape=activation.shape))


def gbvs_saliency(
    frame: np.ndarray,
    prev_frame: np.ndarray | None,
    mean_flow: FlowField | None,
    downsample: int = 4,
    sigma_frac: float = 0.15,
    max_nodes_w: int = 64,
    max_nodes_h: int = 48,
) -> np.ndarray:
    """Sum of concentrated channel activations, upsampled to frame size."""
    maps = extract_feature_maps(
        frame,
        prev_frame,
        mean_flow,
        downsample=downsample,
        max_nodes_w=max_nodes_w,
        max_nodes_h=max_nodes_h,
    )
    total = None
    for feature in maps:
        activation, _ = equilibrium(build_markov_graph(feature.values, sigma_frac))
        concentrated, _ = concentrate_mass(activation, sigma_frac)
        total = concentrated if total is None else total + concentrated
    height, width = np.asarray(frame).shape[:2]
    out = ndimage.zoom(
        total,
        (height / total.shape[0], width / total.shape[1]),
        order=1,
        mode="nearest",
        grid_mode=True,
    )
    return np.maximum(out, 0.0)
