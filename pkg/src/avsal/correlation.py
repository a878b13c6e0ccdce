"""Audio-to-object matching in rank correlation space.

Both the audio energy series and each track's acceleration series are hashed
window-by-window with a shared Winner-Take-All permutation set; the codes
depend only on value orderings, so any strictly increasing rescaling of a
descriptor leaves its code unchanged. Normalized Hamming agreement between
the audio code and a track's code scores how well that object's motion
follows the sound.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import ParameterError
from .segmentation import SegmentationMap
from .tracking import Track


@dataclass
class WtaPermutations:
    """First S indices of N seeded permutations of a length-L window."""

    indices: np.ndarray  # (N, S) int32
    window_len: int
    seed: int

    @property
    def count(self) -> int:
        return self.indices.shape[0]

    @property
    def subset(self) -> int:
        return self.indices.shape[1]


@dataclass
class CorrelationScore:
    track_id: int
    frame: int
    score: float


def make_permutations(
    window_len: int, count: int = 2000, subset: int = 5, seed: int = 42
) -> WtaPermutations:
    """Generate the shared permutation set for both descriptor hashes."""
    if subset < 2:
        raise ParameterError("subset size must be >= 2")
    if window_len < subset:
        raise ParameterError(f"window_len {window_len} is shorter than subset {subset}")
    rng = np.random.default_rng(seed)
    indices = np.empty((count, subset), dtype=np.int32)
    for row in range(count):
        indices[row] = rng.permutation(window_len)[:subset]
    return WtaPermutations(indices=indices, window_len=window_len, seed=seed)


def wta_hash(window: np.ndarray, perms: WtaPermutations) -> np.ndarray:
    """WTA code: per permutation, the argmax position among the first S

    permuted elements (ties resolve to the lowest index). Returns (N,) uint8.
    """
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 1 or len(window) != perms.window_len:
        raise ParameterError(
            f"window of length {window.shape} does not match permutation set "
            f"built for length {perms.window_len}"
        )
    return np.argmax(window[perms.indices], axis=1).astype(np.uint8)


def hamming_distance(a: np.ndarray, b: np.ndarray) -> int:
    """Number of positions where two codes differ."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ParameterError(f"code lengths differ: {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b))


def _window(series: np.ndarray, frame: int, length: int) -> np.ndarray:
    """series[frame-length+1 .. frame], zero padded before index 0."""
    start = frame - length + 1
    if start >= 0:
        return series[start : frame + 1]
    return np.concatenate([np.zeros(-start), series[: frame + 1]])


def correlate_tracks(
    audio_values: np.ndarray,
    tracks: list[Track],
    frame: int,
    perms: WtaPermutations,
) -> list[CorrelationScore]:
    """Score every track alive at *frame* against the audio descriptor.

    score = 1 - hamming/N between the WTA codes of the two descriptors'
    trailing windows, both hashed with the same permutation set.
    """
    audio_values = np.asarray(audio_values, dtype=np.float64)
    length = perms.window_len
    code_audio = wta_hash(_window(audio_values, frame, length), perms)
    scores = []
    for track in sorted(tracks, key=lambda t: t.id):
        if not track.alive_at(frame):
            continue
        series = np.asarray(track.acceleration, dtype=np.float64)
        code_motion = wta_hash(_window(series, frame, length), perms)
        score = 1.0 - hamming_distance(code_audio, code_motion) / perms.count
        scores.append(CorrelationScore(track_id=track.id, frame=frame, score=score))
    return scores


def render_audio_saliency(
    scores: list[CorrelationScore],
    seg: SegmentationMap,
    tracks: list[Track],
    blur_sigma: float = 10.0,
) -> np.ndarray:
    """Paint each scored track's current region with its score, then blur.

    The result is not normalized; the fusion stage does that per frame.
    """
    out = np.zeros(seg.labels.shape, dtype=np.float64)
    by_id = {t.id: t for t in tracks}
    for item in sorted(scores, key=lambda s: s.track_id):
        track = by_id.get(item.track_id)
        if track is None:
            continue
        region_id = track.assignments.get(item.frame)
        if region_id is None:
            continue
        out[seg.labels == region_id] = item.score
    if blur_sigma > 0:
        out = ndimage.gaussian_filter(out, sigma=blur_sigma, mode="reflect")
    return out


def dump_scores_csv(scores: list[CorrelationScore], file: str | Path) -> None:
    """Debug dump of per-track correlation scores."""
    with open(Path(file), "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["track_id", "frame", "score"])
        for item in sorted(scores, key=lambda s: (s.frame, s.track_id)):
            writer.writerow([item.track_id, item.frame, f"{item.score:.6f}"])
