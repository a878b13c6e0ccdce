"""Saliency evaluation against eye fixations: AUC, KL divergence, NSS, CC.

Frames where a metric is undefined (no fixations, constant map) yield NaN
and are excluded from per-video averages. All randomness (the AUC negative
sampling) is driven by an explicit seed so reports reproduce bit for bit.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import ParameterError
from .media_io import FixationSet

METRIC_NAMES = ("auc", "kl", "nss", "cc")


@dataclass
class MetricReport:
    video: str
    frames: list[int] = field(default_factory=list)
    per_frame: dict[str, list[float]] = field(
        default_factory=lambda: {name: [] for name in METRIC_NAMES}
    )

    def add(self, frame: int, auc_v: float, kl_v: float, nss_v: float, cc_v: float) -> None:
        self.frames.append(frame)
        self.per_frame["auc"].append(auc_v)
        self.per_frame["kl"].append(kl_v)
        self.per_frame["nss"].append(nss_v)
        self.per_frame["cc"].append(cc_v)

    def mean(self, name: str) -> float:
        values = np.asarray(self.per_frame[name])
        if values.size == 0 or np.all(np.isnan(values)):
            return math.nan
        return float(np.nanmean(values))

    def means(self) -> dict[str, float]:
        return {name: self.mean(name) for name in METRIC_NAMES}

    @property
    def defined_frames(self) -> int:
        return int(np.count_nonzero(~np.isnan(self.per_frame["auc"])))


def fixation_density(
    fixations: list[tuple[float, float]],
    width: int,
    height: int,
    sigma: float,
) -> np.ndarray:
    """Sum of Gaussians at the fixation points, normalized to total mass 1.

    No fixations gives the all-zero map (callers treat it as undefined).
    """
    if sigma <= 0:
        raise ParameterError("sigma must be > 0")
    out = np.zeros((height, width))
    if not fixations:
        return out
    cols = np.arange(width, dtype=np.float64)
    rows = np.arange(height, dtype=np.float64)
    for x, y in fixations:
        out += np.outer(
            np.exp(-((rows - y) ** 2) / (2 * sigma * sigma)),
            np.exp(-((cols - x) ** 2) / (2 * sigma * sigma)),
        )
    return out / out.sum()


def _fixation_pixels(
    fixations: list[tuple[float, float]], width: int, height: int
) -> np.ndarray:
    """Round fixation coordinates to pixel indices, clipped in bounds."""
    pts = np.asarray(fixations, dtype=np.float64)
    cols = np.clip(np.rint(pts[:, 0]).astype(int), 0, width - 1)
    rows = np.clip(np.rint(pts[:, 1]).astype(int), 0, height - 1)
    return rows * width + cols


def _roc_area(positives: np.ndarray, negatives: np.ndarray) -> float:
    """Trapezoidal ROC area sweeping all observed values as thresholds.

    Ties sit on a diagonal ROC segment, so a constant map scores exactly 0.5.
    """
    thresholds = np.unique(np.concatenate([positives, negatives]))[::-1]
    tpr = [0.0]
    fpr = [0.0]
    for threshold in thresholds:
        tpr.append(np.count_nonzero(positives >= threshold) / len(positives))
        fpr.append(np.count_nonzero(negatives >= threshold) / len(negatives))
    return float(np.trapezoid(tpr, fpr))


def auc(
    sal: np.ndarray,
    fixations: list[tuple[float, float]],
    repetitions: int = 10,
    seed: int = 42,
    negative_samples: int | None = None,
) -> float:
    """ROC area with sampled negatives.

    Positives are the saliency values at the fixation pixels; each repetition
    draws as many random non-fixation pixels as there are fixations (from the
    given seed) and the areas are averaged.
    """
    sal = np.asarray(sal, dtype=np.float64)
    if not fixations:
        return math.nan
    if repetitions < 1:
        raise ParameterError("repetitions must be >= 1")
    height, width = sal.shape
    flat = sal.ravel()
    pixels = _fixation_pixels(fixations, width, height)
    positives = flat[pixels]
    candidates = np.setdiff1d(np.arange(flat.size), np.unique(pixels))
    if candidates.size == 0:
        return math.nan
    count = negative_samples if negative_samples is not None else len(positives)
    rng = np.random.default_rng(seed)
    areas = []
    for _ in range(repetitions):
        sample = rng.choice(candidates, size=count, replace=True)
        areas.append(_roc_area(positives, flat[sample]))
    return float(np.mean(areas))


def kl_divergence(
    sal: np.ndarray, fixmap: np.ndarray, epsilon: float = 1e-12
) -> float:
    """Information lost using the saliency map to approximate the fixation
    density: sum of M_f * ln(M_f / M_s) after epsilon regularization."""
    sal = np.asarray(sal, dtype=np.float64)
    fixmap = np.asarray(fixmap, dtype=np.float64)
    if sal.shape != fixmap.shape:
        raise ParameterError("maps must share dimensions")
    if fixmap.sum() <= 0:
        return math.nan
    p = fixmap / fixmap.sum()
    total = sal.sum()
    q = sal / total if total > 0 else np.zeros_like(sal)
    p = (p + epsilon) / (1.0 + epsilon * p.size)
    q = (q + epsilon) / (1.0 + epsilon * q.size)
    return float(np.sum(p * np.log(p / q)))


def nss(sal: np.ndarray, fixations: list[tuple[float, float]]) -> float:
    """Mean z-scored saliency at the fixation points (bilinear sampling)."""
    sal = np.asarray(sal, dtype=np.float64)
    if not fixations:
        return math.nan
    std = sal.std()
    if std == 0:
        return math.nan
    z = (sal - sal.mean()) / std
    pts = np.asarray(fixations, dtype=np.float64)
    samples = ndimage.map_coordinates(z, [pts[:, 1], pts[:, 0]], order=1, mode="nearest")
    return float(samples.mean())


def cc(sal: np.ndarray, fixmap: np.ndarray) -> float:
    """Pearson correlation between the two maps over all pixels."""
    sal = np.asarray(sal, dtype=np.float64).ravel()
    fixmap = np.asarray(fixmap, dtype=np.float64).ravel()
    if sal.shape != fixmap.shape:
        raise ParameterError("maps must share dimensions")
    sal_std = sal.std()
    fix_std = fixmap.std()
    if sal_std == 0 or fix_std == 0:
        return math.nan
    cov = np.mean((sal - sal.mean()) * (fixmap - fixmap.mean()))
    return float(cov / (sal_std * fix_std))


def evaluate_video(
    maps: list[np.ndarray],
    fixations: FixationSet,
    video: str = "video",
    frame_limit: int = 300,
    fixation_sigma_frac: float = 0.04,
    auc_repetitions: int = 10,
    seed: int = 42,
) -> MetricReport:
    """Per-frame metrics over the first *frame_limit* frames, NaN where
    undefined; the report's means skip undefined frames."""
    report = MetricReport(video=video)
    if not maps:
        return report
    height, width = np.asarray(maps[0]).shape
    sigma = max(1e-9, fixation_sigma_frac * width)
    for frame in range(min(frame_limit, len(maps))):
        sal = np.asarray(maps[frame], dtype=np.float64)
        pts = fixations.for_frame(frame)
        if not pts:
            report.add(frame, math.nan, math.nan, math.nan, math.nan)
            continue
        density = fixation_density(pts, width, height, sigma)
        report.add(
            frame,
            auc(sal, pts, repetitions=auc_repetitions, seed=seed + frame),
            kl_divergence(sal, density),
            nss(sal, pts),
            cc(sal, density),
        )
    return report


def _fmt(value: float) -> str:
    return "" if math.isnan(value) else f"{value:.6f}"


def write_report_csv(reports: list[MetricReport], file: str | Path) -> None:
    with open(Path(file), "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["video", "frame", "auc", "kl", "nss", "cc"])
        for report in reports:
            for idx, frame in enumerate(report.frames):
                writer.writerow(
                    [report.video, frame]
                    + [_fmt(report.per_frame[name][idx]) for name in METRIC_NAMES]
                )


def write_report_json(reports: list[MetricReport], file: str | Path) -> None:
    """Per-video and corpus-level means, one row per metric."""
    videos = {report.video: report.means() for report in reports}
    corpus = {}
    for name in METRIC_NAMES:
        values = [v[name] for v in videos.values() if not math.isnan(v[name])]
        corpus[name] = float(np.mean(values)) if values else None
    payload = {
        "videos": {
            video: {k: (None if math.isnan(v) else v) for k, v in means.items()}
            for video, means in videos.items()
        },
        "corpus": corpus,
    }
    Path(file).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
