"""Dense optical flow (pyramidal Horn-Schunck), mean velocity and
acceleration fields, and the flow color wheel rendering.

Flow fields always express per-pixel displacement in pixels. ``direction``
records which neighbour frame the displacement points to: ``forward`` means
toward t+1, ``backward`` toward t-1, ``mean`` a velocity toward t+1 averaged
from both.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import ParameterError

# Jacobi neighbourhood average used by the Horn-Schunck update.
_HS_KERNEL = np.array(
    [[1 / 12, 1 / 6, 1 / 12], [1 / 6, 0.0, 1 / 6], [1 / 12, 1 / 6, 1 / 12]]
)

# fourth-order derivative kernel; plain central differences overshoot the
# displacement on short-wavelength texture
_DERIV_KERNEL = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


@dataclass
class FlowField:
    u: np.ndarray
    v: np.ndarray
    direction: str = "forward"
    frame_index: int = 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.shape

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.u, self.v)


def luma(frame: np.ndarray) -> np.ndarray:
    """Rec.601 luma in [0, 255] as float64; accepts uint8 RGB or grayscale."""
    arr = np.asarray(frame, dtype=np.float64)
    if arr.ndim == 2:
        return arr
    return 0.299 * arr[..., 0] + 0.587 * arr[..., 1] + 0.114 * arr[..., 2]


def _gradients(image: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # replicated borders ('nearest')
    gx = ndimage.correlate1d(image, _DERIV_KERNEL, axis=1, mode="nearest")
    gy = ndimage.correlate1d(image, _DERIV_KERNEL, axis=0, mode="nearest")
    return gx, gy


def _downsample(image: np.ndarray) -> np.ndarray:
    return ndimage.gaussian_filter(image, sigma=1.0, mode="nearest")[::2, ::2]


def _resize_bilinear(grid: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    if grid.shape == shape:
        return grid
    return ndimage.zoom(
        grid,
        (shape[0] / grid.shape[0], shape[1] / grid.shape[1]),
        order=1,
        mode="nearest",
        grid_mode=True,
    )


def _warp(image: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    rows, cols = np.mgrid[0 : image.shape[0], 0 : image.shape[1]].astype(np.float64)
    return ndimage.map_coordinates(image, [rows + v, cols + u], order=1, mode="nearest")


def _hs_increment(
    src: np.ndarray, dst: np.ndarray, alpha: float, iterations: int
) -> tuple[np.ndarray, np.ndarray]:
    gx, gy = _gradients((src + dst) / 2.0)
    gt = dst - src
    denom = alpha * alpha + gx * gx + gy * gy
    # premultiplied gradients keep the Jacobi update to two convolutions and
    # a handful of in-place passes per iteration
    gxd = gx / denom
    gyd = gy / denom
    du = np.zeros_like(src)
    dv = np.zeros_like(src)
    du_avg = np.empty_like(src)
    dv_avg = np.empty_like(src)
    t = np.empty_like(src)
    for _ in range(iterations):
        ndimage.convolve(du, _HS_KERNEL, output=du_avg, mode="nearest")
        ndimage.convolve(dv, _HS_KERNEL, output=dv_avg, mode="nearest")
        np.multiply(gx, du_avg, out=t)
        t += gy * dv_avg
        t += gt
        np.multiply(gxd, t, out=du)
        np.subtract(du_avg, du, out=du)
        np.multiply(gyd, t, out=dv)
        np.subtract(dv_avg, dv, out=dv)
    return du, dv


def dense_flow(
    src: np.ndarray,
    dst: np.ndarray,
    alpha: float = 15.0,
    iterations: int = 100,
    levels: int = 3,
    warps: int = 2,
    median_size: int = 5,
    direction: str = "forward",
    frame_index: int = 0,
) -> FlowField:
    """Per-pixel displacement from *src* toward *dst*.

    Coarse-to-fine Horn-Schunck; each pyramid level spends its fixed
    iteration budget across ``warps`` relinearizations, with a median filter
    on the field after each warp to stop resampling noise from accumulating.
    Fixed budgets keep the result deterministic. Frames may be RGB or
    grayscale; luma is used internally.
    """
    g_src = luma(src)
    g_dst = luma(dst)
    if g_src.shape != g_dst.shape:
        raise ParameterError(f"frame shapes differ: {g_src.shape} vs {g_dst.shape}")
    if iterations < 1 or levels < 1 or warps < 1:
        raise ParameterError("iterations, levels and warps must be >= 1")

    pyramid = [(g_src, g_dst)]
    while len(pyramid) < levels and min(pyramid[-1][0].shape) >= 16:
        a, b = pyramid[-1]
        pyramid.append((_downsample(a), _downsample(b)))

    per_warp = max(1, iterations // warps)
    u = np.zeros_like(pyramid[-1][0])
    v = np.zeros_like(pyramid[-1][0])
    for level_src, level_dst in reversed(pyramid):
        if u.shape != level_src.shape:
            scale_x = level_src.shape[1] / u.shape[1]
            scale_y = level_src.shape[0] / u.shape[0]
            u = _resize_bilinear(u, level_src.shape) * scale_x
            v = _resize_bilinear(v, level_src.shape) * scale_y
        for _ in range(warps):
            warped = _warp(level_dst, u, v)
            du, dv = _hs_increment(level_src, warped, alpha, per_warp)
            u = u + du
            v = v + dv
            if median_size > 1:
                u = ndimage.median_filter(u, size=median_size, mode="nearest")
                v = ndimage.median_filter(v, size=median_size, mode="nearest")
    return FlowField(u=u, v=v, direction=direction, frame_index=frame_index)


def mean_velocity_flow(fwd: FlowField, bwd: FlowField) -> FlowField:
    """Velocity toward t+1 averaged from forward and (negated) backward flow."""
    if fwd.shape != bwd.shape:
        raise ParameterError("flow fields must share dimensions")
    return FlowField(
        u=(fwd.u - bwd.u) / 2.0,
        v=(fwd.v - bwd.v) / 2.0,
        direction="mean",
        frame_index=fwd.frame_index,
    )


def acceleration_field(fwd: FlowField, bwd: FlowField) -> np.ndarray:
    """Discrete acceleration g = forward + backward flow, shape (H, W, 2).

    With the backward flow kept in its native toward-t-1 sign, constant
    velocity cancels and only velocity change survives.
    """
    if fwd.shape != bwd.shape:
        raise ParameterError("flow fields must share dimensions")
    return np.stack([fwd.u + bwd.u, fwd.v + bwd.v], axis=-1)


def _hsv_to_rgb(h: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    # vectorized standard HSV -> RGB, h/s/v in [0, 1]
    i = np.floor(h * 6.0).astype(int) % 6
    f = h * 6.0 - np.floor(h * 6.0)
    p = v * (1.0 - s)
    q = v * (1.0 - f * s)
    t = v * (1.0 - (1.0 - f) * s)
    rgb = np.zeros(h.shape + (3,))
    for idx, channels in enumerate(
        [(v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q)]
    ):
        mask = i == idx
        for channel in range(3):
            rgb[..., channel][mask] = channels[channel][mask]
    return rgb


def flow_to_color(flow: FlowField, max_mag: float | None = None) -> np.ndarray:
    """Flow color wheel image: hue = direction, saturation = magnitude.

    Zero flow renders white. ``max_mag=None`` auto-scales to the field's 99th
    percentile magnitude.
    """
    mag = flow.magnitude()
    if max_mag is None:
        max_mag = float(np.percentile(mag, 99))
        if max_mag <= 0:
            max_mag = 1.0
    elif max_mag <= 0:
        raise ParameterError("max_mag must be > 0")
    hue = (np.arctan2(flow.v, flow.u) / (2 * np.pi)) % 1.0
    sat = np.minimum(1.0, mag / max_mag)
    val = np.ones_like(sat)
    rgb = _hsv_to_rgb(hue, sat, val)
    return np.rint(rgb * 255.0).astype(np.uint8)


def write_flo(flow: FlowField, file: str | Path) -> None:
    """Dump flow in the common ``.flo`` layout (magic PIEH, w, h, u/v pairs)."""
    height, width = flow.shape
    with open(Path(file), "wb") as handle:
        handle.write(struct.pack("<fii", 202021.25, width, height))
        interleaved = np.empty((height, width, 2), dtype="<f4")
        interleaved[..., 0] = flow.u
        interleaved[..., 1] = flow.v
        handle.write(interleaved.tobytes())


def read_flo(file: str | Path) -> FlowField:
    with open(Path(file), "rb") as handle:
        magic, width, height = struct.unpack("<fii", handle.read(12))
        if abs(magic - 202021.25) > 1e-3:
            raise ParameterError(f"{file}: bad flo magic {magic}")
        data = np.frombuffer(handle.read(width * height * 8), dtype="<f4")
    grid = data.reshape(height, width, 2).astype(np.float64)
    return FlowField(u=grid[..., 0], v=grid[..., 1])
