"""Frame-to-frame region tracking and per-track acceleration descriptors.

A track keeps the centroid and color histogram of its most recent region.
New regions are matched to active tracks within a search radius by maximum
histogram cosine similarity; matches below the similarity threshold start
new tracks instead. Every track records one acceleration value per processed
frame (0 where unassigned) so all tracks share one time axis.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import gaussian_smooth_1d
from .errors import ParameterError
from .segmentation import Region, SegmentationMap


@dataclass
class TrackerConfig:
    search_radius: float = 100.0
    cos_threshold: float = 0.8
    max_missed: int = 10
    smoothing_sigma: float = 2.0

    def validate(self) -> None:
        if self.search_radius <= 0:
            raise ParameterError("search_radius must be > 0")
        if not 0 < self.cos_threshold <= 1:
            raise ParameterError("cos_threshold must be in (0, 1]")


@dataclass
class Track:
    id: int
    centroid: tuple[float, float]
    histogram: np.ndarray
    created_frame: int
    assignments: dict[int, int] = field(default_factory=dict)  # frame -> region id
    centroids: dict[int, tuple[float, float]] = field(default_factory=dict)
    acceleration: list[float] = field(default_factory=list)
    active: bool = True
    missed: int = 0
    deactivated_frame: int | None = None

    def alive_at(self, frame: int) -> bool:
        if frame < self.created_frame:
            return False
        return self.deactivated_frame is None or frame < self.deactivated_frame


@dataclass
class Assignment:
    """Audit record of one accepted region-to-track match."""

    frame: int
    track_id: int
    region_id: int
    distance: float
    cosine: float


def centroid_distance(region: Region, track: Track) -> float:
    """Euclidean distance between a region's and a track's centroid."""
    dx = region.centroid[0] - track.centroid[0]
    dy = region.centroid[1] - track.centroid[1]
    return math.hypot(dx, dy)


def histogram_similarity(h_new: np.ndarray, h_existing: np.ndarray) -> float:
    """Cosine similarity of two nonnegative histograms, in [0, 1]."""
    a = np.asarray(h_new, dtype=np.float64).ravel()
    b = np.asarray(h_existing, dtype=np.float64).ravel()
    norm_a = np.linalg.norm(a)
    norm_b = np.linalg.norm(b)
    if norm_a == 0 or norm_b == 0:
        raise ParameterError("histogram similarity undefined for zero histograms")
    return float(np.dot(a, b) / (norm_a * norm_b))


def _normalized(hist: np.ndarray) -> np.ndarray:
    total = hist.sum()
    return hist / total if total > 0 else hist


def assign_regions(
    tracks: list[Track],
    regions: list[Region],
    frame: int,
    config: TrackerConfig,
) -> tuple[list[Track], list[Assignment]]:
    """Match one frame's regions to tracks; unmatched regions start tracks.

    Candidate pairs are gated by the search radius, then accepted greedily by
    descending cosine similarity (each track takes at most one region per
    frame). Tracks unassigned for ``max_missed`` consecutive frames are
    deactivated. Returns the created tracks and the accepted assignments.
    """
    config.validate()
    candidates = []
    for region in regions:
        for track in tracks:
            if not track.active:
                continue
            distance = centroid_distance(region, track)
            if distance > config.search_radius:
                continue
            cosine = histogram_similarity(region.histogram, track.histogram)
            candidates.append((cosine, region, track, distance))
    # descending similarity; ties broken by region then track id for determinism
    candidates.sort(key=lambda item: (-item[0], item[1].id, item[2].id))

    assigned_regions: set[int] = set()
    assigned_tracks: set[int] = set()
    log: list[Assignment] = []
    for cosine, region, track, distance in candidates:
        if cosine <= config.cos_threshold:
            break
        if region.id in assigned_regions or track.id in assigned_tracks:
            continue
        track.centroid = region.centroid
        track.histogram = _normalized((track.histogram + region.histogram) / 2.0)
        track.assignments[frame] = region.id
        track.centroids[frame] = region.centroid
        track.missed = 0
        assigned_regions.add(region.id)
        assigned_tracks.add(track.id)
        log.append(
            Assignment(
                frame=frame,
                track_id=track.id,
                region_id=region.id,
                distance=distance,
                cosine=cosine,
            )
        )

    next_id = max((t.id for t in tracks), default=0) + 1
    created = []
    for region in regions:
        if region.id in assigned_regions:
            continue
        track = Track(
            id=next_id,
            centroid=region.centroid,
            histogram=_normalized(region.histogram.copy()),
            created_frame=frame,
        )
        track.acceleration = [0.0] * frame
        track.assignments[frame] = region.id
        track.centroids[frame] = region.centroid
        created.append(track)
        next_id += 1

    for track in tracks:
        if not track.active or track.id in assigned_tracks:
            continue
        track.missed += 1
        if track.missed >= config.max_missed:
            track.active = False
            track.deactivated_frame = frame
    return created, log


def track_acceleration(track: Track, frame: int, seg: SegmentationMap, g: np.ndarray) -> float:
    """Mean Euclidean norm of the acceleration field over the track's region."""
    region_id = track.assignments.get(frame)
    if region_id is None:
        raise ParameterError(f"track {track.id} has no region in frame {frame}")
    mask = seg.labels == region_id
    if not mask.any():
        raise ParameterError(f"region {region_id} is empty in frame {frame}")
    norms = np.hypot(g[..., 0][mask], g[..., 1][mask])
    return float(norms.mean())


def smooth_descriptor(track: Track, sigma: float = 2.0) -> Track:
    """Gaussian-smooth the track's acceleration series in place."""
    track.acceleration = list(gaussian_smooth_1d(np.asarray(track.acceleration), sigma))
    return track


class Tracker:
    """Sequential multi-frame tracking driver."""

    def __init__(self, config: TrackerConfig | None = None):
        self.config = config or TrackerConfig()
        self.tracks: list[Track] = []
        self.log: list[Assignment] = []
        self._frames_processed = 0

    def step(
        self,
        frame: int,
        regions: list[Region],
        seg: SegmentationMap,
        g: np.ndarray,
    ) -> None:
        if frame != self._frames_processed:
            raise ParameterError(
                f"tracker expected frame {self._frames_processed}, got {frame}"
            )
        created, log = assign_regions(self.tracks, regions, frame, self.config)
        self.tracks.extend(created)
        self.log.extend(log)
        for track in self.tracks:
            if frame in track.assignments:
                if len(track.acceleration) == frame:
                    track.acceleration.append(track_acceleration(track, frame, seg, g))
            else:
                track.acceleration.append(0.0)
        self._frames_processed += 1

    def finalize(self) -> list[Track]:
        """Smooth every track's acceleration series and return the tracks."""
        for track in self.tracks:
            smooth_descriptor(track, self.config.smoothing_sigma)
        return self.tracks

    def dump_csv(self, file: str | Path) -> None:
        """Debug dump: one row per (track, frame) with centroid + descriptor."""
        with open(Path(file), "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["track_id", "frame", "cx", "cy", "m"])
            for track in sorted(self.tracks, key=lambda t: t.id):
                for frame in sorted(track.assignments):
                    cx, cy = track.centroids[frame]
                    writer.writerow(
                        [track.id, frame, f"{cx:.3f}", f"{cy:.3f}", f"{track.acceleration[frame]:.6f}"]
                    )
