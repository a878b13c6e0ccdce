"""Moving-region segmentation of flow color images.

Joint spatial-range mean shift in LUV produces an oversegmentation; adjacent
regions closer than a CIE76 deltaE threshold are merged smallest-difference
first, small regions are dropped as noise, and near-static regions can be
relabeled as background before tracking.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from numba import njit
from skimage.color import rgb2hsv, rgb2lab, rgb2luv

from .errors import ParameterError
from .flow import FlowField

# LUV extremes of the sRGB gamut, used as fixed histogram bin ranges
_LUV_RANGES = ((0.0, 100.0), (-134.0, 220.0), (-140.0, 122.0))
_HSV_RANGES = ((0.0, 1.0), (0.0, 1.0), (0.0, 1.0))


@dataclass
class SegmentationMap:
    """Label image; 0 is background/filtered, positive labels are regions."""

    labels: np.ndarray

    @property
    def region_ids(self) -> list[int]:
        ids = np.unique(self.labels)
        return [int(i) for i in ids if i > 0]

    def pixel_count(self, region_id: int) -> int:
        return int(np.count_nonzero(self.labels == region_id))


@dataclass
class Region:
    id: int
    rows: np.ndarray
    cols: np.ndarray
    centroid: tuple[float, float]  # (x, y) in pixels
    histogram: np.ndarray          # L1-normalized color histogram

    @property
    def pixel_count(self) -> int:
        return len(self.rows)


@njit(cache=True)
def _mean_shift_modes(features, h_s, h_r, max_iter, tol):
    height, width = features.shape[0], features.shape[1]
    modes = np.empty((height, width, 5))
    hs2 = h_s * h_s
    hr2 = h_r * h_r
    tol2 = tol * tol
    for row in range(height):
        for col in range(width):
            my = float(row)
            mx = float(col)
            mc0 = features[row, col, 0]
            mc1 = features[row, col, 1]
            mc2 = features[row, col, 2]
            for _ in range(max_iter):
                y0 = max(0, int(my - h_s))
                y1 = min(height - 1, int(my + h_s) + 1)
                x0 = max(0, int(mx - h_s))
                x1 = min(width - 1, int(mx + h_s) + 1)
                sy = 0.0
                sx = 0.0
                s0 = 0.0
                s1 = 0.0
                s2 = 0.0
                count = 0
                for ny in range(y0, y1 + 1):
                    dy = ny - my
                    for nx in range(x0, x1 + 1):
                        dx = nx - mx
                        if dy * dy + dx * dx > hs2:
                            continue
                        c0 = features[ny, nx, 0]
                        c1 = features[ny, nx, 1]
                        c2 = features[ny, nx, 2]
                        d0 = c0 - mc0
                        d1 = c1 - mc1
                        d2 = c2 - mc2
                        if d0 * d0 + d1 * d1 + d2 * d2 > hr2:
                            continue
                        sy += ny
                        sx += nx
                        s0 += c0
                        s1 += c1
                        s2 += c2
                        count += 1
                if count == 0:
                    break
                ny_ = sy / count
                nx_ = sx / count
                n0 = s0 / count
                n1 = s1 / count
                n2 = s2 / count
                shift = (
                    (ny_ - my) ** 2
                    + (nx_ - mx) ** 2
                    + (n0 - mc0) ** 2
                    + (n1 - mc1) ** 2
                    + (n2 - mc2) ** 2
                )
                my, mx, mc0, mc1, mc2 = ny_, nx_, n0, n1, n2
                if shift < tol2:
                    break
            modes[row, col, 0] = my
            modes[row, col, 1] = mx
            modes[row, col, 2] = mc0
            modes[row, col, 3] = mc1
            modes[row, col, 4] = mc2
    return modes


def _mode_links(modes: np.ndarray, h_s: float, h_r: float) -> np.ndarray:
    """Edges (a, b) between 4-adjacent pixels whose modes agree within the
    joint bandwidth."""
    height, width = modes.shape[:2]
    index = np.arange(height * width).reshape(height, width)
    edges = []
    for left, right in (
        (index[:, :-1], index[:, 1:]),
        (index[:-1, :], index[1:, :]),
    ):
        flat = modes.reshape(-1, 5)
        a = flat[left.ravel()]
        b = flat[right.ravel()]
        spatial = ((a[:, :2] - b[:, :2]) ** 2).sum(axis=1) <= h_s * h_s
        chromatic = ((a[:, 2:] - b[:, 2:]) ** 2).sum(axis=1) <= h_r * h_r
        keep = spatial & chromatic
        edges.append(np.stack([left.ravel()[keep], right.ravel()[keep]], axis=1))
    return np.concatenate(edges)


def mean_shift_segment(
    image: np.ndarray,
    spatial_bandwidth: float = 8.0,
    range_bandwidth: float = 8.0,
    max_iter: int = 20,
    tol: float = 0.05,
) -> SegmentationMap:
    """Segment an RGB image by joint spatial-range mean shift in LUV.

    Adjacent pixels whose converged modes agree within the bandwidth are
    linked; each connected component of links becomes one region, so labels
    are spatially connected by construction and regions are numbered in
    row-major order of first occurrence.
    """
    image = np.asarray(image)
    if image.size == 0:
        raise ParameterError("cannot segment an empty image")
    luv = np.ascontiguousarray(rgb2luv(image))
    modes = _mean_shift_modes(luv, float(spatial_bandwidth), float(range_bandwidth), max_iter, tol)

    n = luv.shape[0] * luv.shape[1]
    parent = np.arange(n)

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in _mode_links(modes, float(spatial_bandwidth), float(range_bandwidth)):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    roots = np.fromiter((find(i) for i in range(n)), dtype=np.int64, count=n)
    _, labels = np.unique(roots, return_inverse=True)
    return SegmentationMap(labels=(labels + 1).astype(np.int32).reshape(luv.shape[:2]))


def _compact(labels: np.ndarray) -> np.ndarray:
    """Renumber positive labels to 1..k in ascending original order."""
    out = np.zeros_like(labels)
    for new_id, old_id in enumerate(sorted(np.unique(labels[labels > 0])), start=1):
        out[labels == old_id] = new_id
    return out


def merge_regions(
    seg: SegmentationMap,
    image: np.ndarray,
    deltae_threshold: float = 10.0,
) -> SegmentationMap:
    """Merge adjacent regions whose mean CIE76 deltaE is below the threshold.

    Pairs are merged smallest-difference first (lazy-deletion heap; means and
    adjacency updated after every merge) until no pair qualifies, which makes
    the fixpoint deterministic.
    """
    if deltae_threshold <= 0:
        raise ParameterError("deltae_threshold must be > 0")
    labels = seg.labels.copy()
    lab = rgb2lab(np.asarray(image))
    ids = np.unique(labels)
    ids = ids[ids > 0]
    if ids.size == 0:
        return SegmentationMap(labels=labels)

    size = int(ids.max()) + 1
    sums = np.zeros((size, 3))
    counts = np.zeros(size, dtype=np.int64)
    flat_labels = labels.ravel()
    flat_lab = lab.reshape(-1, 3)
    np.add.at(sums, flat_labels, flat_lab)
    np.add.at(counts, flat_labels, 1)

    adjacency: dict[int, set[int]] = {int(i): set() for i in ids}
    for a, b in _adjacent_pairs(labels):
        adjacency[a].add(b)
        adjacency[b].add(a)

    def delta_e(a: int, b: int) -> float:
        diff = sums[a] / counts[a] - sums[b] / counts[b]
        return float(np.sqrt((diff * diff).sum()))

    heap = [
        (delta_e(a, b), a, b)
        for a in adjacency
        for b in adjacency[a]
        if a < b and delta_e(a, b) < deltae_threshold
    ]
    heapq.heapify(heap)

    parent = {int(i): int(i) for i in ids}

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    while heap:
        d, a, b = heapq.heappop(heap)
        if a not in adjacency or b not in adjacency or b not in adjacency[a]:
            continue
        if abs(delta_e(a, b) - d) > 1e-12:  # stale entry, cost changed
            continue
        sums[a] += sums[b]
        counts[a] += counts[b]
        parent[b] = a
        adjacency[a] |= adjacency[b] - {a, b}
        for other in adjacency[b]:
            adjacency[other].discard(b)
            if other not in (a, b):
                adjacency[other].add(a)
        del adjacency[b]
        for other in sorted(adjacency[a]):
            cost = delta_e(a, other)
            if cost < deltae_threshold:
                heapq.heappush(heap, (cost, min(a, other), max(a, other)))

    root_of = np.arange(size, dtype=labels.dtype)
    for old in ids:
        root_of[old] = find(int(old))
    return SegmentationMap(labels=_compact(root_of[labels]))


def _adjacent_pairs(labels: np.ndarray):
    right = np.stack([labels[:, :-1].ravel(), labels[:, 1:].ravel()], axis=1)
    down = np.stack([labels[:-1, :].ravel(), labels[1:, :].ravel()], axis=1)
    both = np.concatenate([right, down])
    both = np.sort(both, axis=1)
    pairs = np.unique(both, axis=0)
    keep = (pairs[:, 0] > 0) & (pairs[:, 0] != pairs[:, 1])
    return [(int(a), int(b)) for a, b in pairs[keep]]


def filter_small(seg: SegmentationMap, min_pixels: int = 200) -> SegmentationMap:
    """Relabel regions smaller than *min_pixels* to background."""
    if min_pixels < 0:
        raise ParameterError("min_pixels must be >= 0")
    labels = seg.labels.copy()
    for region_id in seg.region_ids:
        if np.count_nonzero(labels == region_id) < min_pixels:
            labels[labels == region_id] = 0
    return SegmentationMap(labels=_compact(labels))


def suppress_static_regions(
    seg: SegmentationMap,
    flow: FlowField,
    min_mean_magnitude: float = 0.25,
) -> SegmentationMap:
    """Relabel regions with mean flow magnitude below the threshold to 0.

    The zero-flow background of a flow color image survives segmentation as
    one large region; it is not a moving object and must not be tracked.
    """
    labels = seg.labels.copy()
    mag = flow.magnitude()
    for region_id in seg.region_ids:
        mask = labels == region_id
        if float(mag[mask].mean()) < min_mean_magnitude:
            labels[mask] = 0
    return SegmentationMap(labels=_compact(labels))


def color_histogram(
    pixels: np.ndarray, bins: int = 8, space: str = "luv"
) -> np.ndarray:
    """L1-normalized bins^3 histogram of RGB pixels in LUV or HSV."""
    if space == "luv":
        converted = rgb2luv(pixels.reshape(1, -1, 3)).reshape(-1, 3)
        ranges = _LUV_RANGES
    elif space == "hsv":
        converted = rgb2hsv(pixels.reshape(1, -1, 3)).reshape(-1, 3)
        ranges = _HSV_RANGES
    else:
        raise ParameterError(f"unknown histogram space {space!r}")
    hist, _ = np.histogramdd(converted, bins=(bins, bins, bins), range=ranges)
    total = hist.sum()
    if total > 0:
        hist /= total
    return hist


def extract_regions(
    seg: SegmentationMap,
    source_frame: np.ndarray,
    bins: int = 8,
    space: str = "luv",
) -> list[Region]:
    """Build Region records (centroid + color histogram) from a label map.

    Histograms are computed over the original video frame's pixels, not the
    flow color image the labels came from.
    """
    frame = np.asarray(source_frame)
    if frame.shape[:2] != seg.labels.shape:
        raise ParameterError("segmentation and frame dimensions differ")
    regions = []
    for region_id in seg.region_ids:
        rows, cols = np.nonzero(seg.labels == region_id)
        centroid = (float(cols.mean()), float(rows.mean()))
        hist = color_histogram(frame[rows, cols], bins=bins, space=space)
        regions.append(
            Region(id=region_id, rows=rows, cols=cols, centroid=centroid, histogram=hist)
        )
    return regions
