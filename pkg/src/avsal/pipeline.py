"""Full pipeline: descriptors -> audio saliency -> visual saliency + motion
map -> normalization and combination, per video.

Within one video, flows, descriptors and maps are computed in frame order
(tracking must be sequential); different videos are independent and can run
in a worker pool. Every stage is deterministic given the config and seed, so
two runs produce byte-identical outputs.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from . import correlation, flow, fusion, media_io, segmentation, visual
from .audio import energy_descriptor
from .config import FusionWeights, PipelineConfig
from .errors import AvsalError, PipelineError
from .tracking import Track, Tracker, TrackerConfig


@dataclass
class PipelineResult:
    final_maps: list[np.ndarray]
    audio_maps: list[np.ndarray]
    visual_maps: list[np.ndarray]
    motion_maps: list[np.ndarray]
    tracks: list[Track]
    scores: list[list[correlation.CorrelationScore]]
    assignment_log: list
    segmentations: list = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    frame_count: int = 0


class _StageTimer:
    def __init__(self):
        self.seconds: dict[str, float] = {}

    def add(self, stage: str, t0: float) -> float:
        now = time.perf_counter()
        self.seconds[stage] = self.seconds.get(stage, 0.0) + (now - t0)
        return now


@contextmanager
def _stage(name: str):
    """Wrap stage exceptions with the failing stage's name."""
    try:
        yield
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(f"stage '{name}' failed: {exc}") from exc


def compute_saliency(
    clip: media_io.VideoClip,
    audio: media_io.AudioTrack | None,
    config: PipelineConfig | None = None,
) -> PipelineResult:
    """Run all stages on an in-memory clip; audio=None runs visual+motion only."""
    cfg = config or PipelineConfig()
    cfg.validate()
    timer = _StageTimer()
    n = clip.frame_count
    zero = flow.FlowField(
        u=np.zeros((clip.height, clip.width)), v=np.zeros((clip.height, clip.width))
    )

    t0 = time.perf_counter()
    with _stage("optical_flow"):
        grays = [flow.luma(frame) for frame in clip.frames]
        forward = [
            flow.dense_flow(
                grays[t],
                grays[t + 1],
                alpha=cfg.flow_alpha,
                iterations=cfg.flow_iterations,
                levels=cfg.flow_levels,
                direction="forward",
                frame_index=t,
            )
            for t in range(n - 1)
        ]
        forward.append(zero)
        backward = [zero] + [
            flow.dense_flow(
                grays[t],
                grays[t - 1],
                alpha=cfg.flow_alpha,
                iterations=cfg.flow_iterations,
                levels=cfg.flow_levels,
                direction="backward",
                frame_index=t,
            )
            for t in range(1, n)
        ]
        mean_flows = [flow.mean_velocity_flow(forward[t], backward[t]) for t in range(n)]
        accelerations = [flow.acceleration_field(forward[t], backward[t]) for t in range(n)]
    t0 = timer.add("optical_flow", t0)

    with _stage("audio_descriptor"):
        descriptor = None
        if audio is not None:
            descriptor = energy_descriptor(
                audio, clip, smoothing_sigma=cfg.audio_smoothing_sigma
            )
    t0 = timer.add("audio_descriptor", t0)

    with _stage("segmentation"):
        segmentations = []
        for t in range(n):
            color_image = flow.flow_to_color(mean_flows[t])
            seg = segmentation.mean_shift_segment(
                color_image,
                spatial_bandwidth=cfg.ms_spatial_bandwidth,
                range_bandwidth=cfg.ms_range_bandwidth,
            )
            seg = segmentation.merge_regions(seg, color_image, cfg.merge_deltae_threshold)
            seg = segmentation.filter_small(seg, cfg.min_region_pixels)
            seg = segmentation.suppress_static_regions(
                seg, mean_flows[t], cfg.min_region_motion
            )
            segmentations.append(seg)
    t0 = timer.add("segmentation", t0)

    with _stage("tracking"):
        tracker = Tracker(
            TrackerConfig(
                search_radius=cfg.search_radius,
                cos_threshold=cfg.cos_threshold,
                max_missed=cfg.track_max_missed,
                smoothing_sigma=cfg.track_smoothing_sigma,
            )
        )
        for t in range(n):
            regions = segmentation.extract_regions(
                segmentations[t],
                clip.frames[t],
                bins=cfg.histogram_bins,
                space=cfg.histogram_space,
            )
            tracker.step(t, regions, segmentations[t], accelerations[t])
        tracks = tracker.finalize()
    t0 = timer.add("tracking", t0)

    with _stage("av_correlation"):
        scores_per_frame: list[list[correlation.CorrelationScore]] = []
        audio_maps = []
        if descriptor is not None:
            perms = correlation.make_permutations(
                cfg.correlation_window,
                count=cfg.wta_permutations,
                subset=cfg.wta_window,
                seed=cfg.seed,
            )
            for t in range(n):
                scores = correlation.correlate_tracks(descriptor.values, tracks, t, perms)
                scores_per_frame.append(scores)
                audio_maps.append(
                    correlation.render_audio_saliency(
                        scores, segmentations[t], tracks, blur_sigma=cfg.audio_blur_sigma
                    )
                )
        else:
            scores_per_frame = [[] for _ in range(n)]
            audio_maps = [np.zeros((clip.height, clip.width)) for _ in range(n)]
    t0 = timer.add("av_correlation", t0)

    with _stage("visual_saliency"):
        visual_maps = [
            visual.gbvs_saliency(
                clip.frames[t],
                clip.frames[t - 1] if t > 0 else None,
                mean_flows[t],
                downsample=cfg.gbvs_downsample,
                sigma_frac=cfg.gbvs_sigma_frac,
                max_nodes_w=cfg.gbvs_max_nodes_w,
                max_nodes_h=cfg.gbvs_max_nodes_h,
            )
            for t in range(n)
        ]
    t0 = timer.add("visual_saliency", t0)

    with _stage("motion_map"):
        motion_maps = [
            fusion.adaptive_threshold(
                mean_flows[t].magnitude(), cfg.motion_threshold_percent
            )
            for t in range(n)
        ]
    t0 = timer.add("motion_map", t0)

    with _stage("fusion"):
        weights = cfg.weights
        if descriptor is None:
            weights = FusionWeights(visual=cfg.weights.visual, audio=0.0, motion=cfg.weights.motion)
        final_maps = []
        norm_audio = []
        norm_visual = []
        for t in range(n):
            v_norm = fusion.minmax_normalize(visual_maps[t])
            a_norm = fusion.minmax_normalize(audio_maps[t])
            final_maps.append(fusion.combine(v_norm, a_norm, motion_maps[t], weights))
            norm_visual.append(v_norm)
            norm_audio.append(a_norm)
    timer.add("fusion", t0)

    return PipelineResult(
        final_maps=final_maps,
        audio_maps=norm_audio,
        visual_maps=norm_visual,
        motion_maps=motion_maps,
        tracks=tracks,
        scores=scores_per_frame,
        assignment_log=tracker.log,
        segmentations=segmentations,
        timings=timer.seconds,
        frame_count=n,
    )


def run_pipeline(
    frames_dir: str | Path,
    wav_path: str | Path | None,
    config: PipelineConfig | None = None,
    out_dir: str | Path | None = None,
    dump_intermediate: bool = False,
) -> PipelineResult:
    """Load inputs, compute saliency, and (optionally) write map files.

    Maps are written as ``saliency_%06d.png`` plus lossless ``.f32`` dumps;
    with ``dump_intermediate`` the per-stage maps and tracking/score CSVs are
    written alongside under ``audio/``, ``visual/`` and ``motion/``.
    """
    cfg = config or PipelineConfig()
    clip = media_io.load_frame_sequence(frames_dir, cfg.fps)
    audio = media_io.load_wav(wav_path) if wav_path is not None else None
    result = compute_saliency(clip, audio, cfg)

    if out_dir is not None:
        t0 = time.perf_counter()
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for t, final in enumerate(result.final_maps):
            media_io.write_saliency_map(final, out / f"saliency_{t:06d}.png")
        if dump_intermediate:
            for name, maps in (
                ("audio", result.audio_maps),
                ("visual", result.visual_maps),
                ("motion", result.motion_maps),
            ):
                sub = out / name
                sub.mkdir(exist_ok=True)
                for t, values in enumerate(maps):
                    media_io.write_saliency_map(values, sub / f"{name}_{t:06d}.png")
            correlation.dump_scores_csv(
                [s for frame in result.scores for s in frame], out / "scores.csv"
            )
        result.timings["io"] = time.perf_counter() - t0
    return result


def _run_job(job: tuple) -> str:
    frames_dir, wav_path, config, out_dir = job
    run_pipeline(frames_dir, wav_path, config, out_dir)
    return str(out_dir)


def run_batch(
    jobs: list[tuple[str | Path, str | Path | None, PipelineConfig, str | Path]],
    workers: int = 1,
) -> list[str]:
    """Process (frames_dir, wav, config, out_dir) jobs, optionally in parallel.

    Outputs are independent per job, so worker count never changes results.
    """
    if workers <= 1 or len(jobs) <= 1:
        return [_run_job(job) for job in jobs]
    ctx = get_context("fork")
    with ctx.Pool(processes=workers) as pool:
        return pool.map(_run_job, jobs)


def stage_table(result: PipelineResult) -> str:
    """Per-stage seconds/frame table for the bench command."""
    lines = [f"{'stage':<18}{'total s':>10}{'s/frame':>10}"]
    total = 0.0
    for stage, seconds in result.timings.items():
        total += seconds
        lines.append(f"{stage:<18}{seconds:>10.3f}{seconds / max(result.frame_count, 1):>10.3f}")
    lines.append(f"{'all':<18}{total:>10.3f}{total / max(result.frame_count, 1):>10.3f}")
    return "\n".join(lines)


def check_inputs(frames_dir: str | Path, wav_path: str | Path | None) -> None:
    """Raise the appropriate error early for missing inputs."""
    if not Path(frames_dir).is_dir():
        raise AvsalError(f"frame directory not found: {frames_dir}")
    if wav_path is not None and not Path(wav_path).is_file():
        raise AvsalError(f"audio file not found: {wav_path}")
