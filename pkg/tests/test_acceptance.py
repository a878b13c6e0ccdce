"""Acceptance suite: every criterion prints one PASS/FAIL line.

Run with ``pytest -v -s tests/test_acceptance.py`` to see the lines live.
The heavyweight benchmark artifacts are shared session fixtures.
"""

import math
import time

import numpy as np
import pytest
from scipy import ndimage

from avsal import cli, correlation, fusion, media_io, metrics, pipeline, synth, visual
from avsal.config import PipelineConfig


def _criterion(name: str, passed: bool, detail: str) -> None:
    print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    assert passed, f"{name}: {detail}"


# --- criterion 1: metric oracle equivalence --------------------------------


def _roc_oracle(positives, negatives):
    thresholds = sorted(set(positives) | set(negatives), reverse=True)
    points = [(0.0, 0.0)]
    for threshold in thresholds:
        points.append(
            (
                sum(1 for n in negatives if n >= threshold) / len(negatives),
                sum(1 for p in positives if p >= threshold) / len(positives),
            )
        )
    area = 0.0
    for (f0, t0), (f1, t1) in zip(points, points[1:]):
        area += (f1 - f0) * (t1 + t0) / 2.0
    return area


def _auc_oracle(sal, fixations, repetitions, seed):
    height, width = sal.shape
    flat = sal.ravel()
    pix = [
        min(max(int(round(y)), 0), height - 1) * width + min(max(int(round(x)), 0), width - 1)
        for x, y in fixations
    ]
    positives = flat[pix]
    candidates = np.setdiff1d(np.arange(flat.size), np.unique(pix))
    rng = np.random.default_rng(seed)
    areas = [
        _roc_oracle(list(positives), list(flat[rng.choice(candidates, len(positives), replace=True)]))
        for _ in range(repetitions)
    ]
    return float(np.mean(areas))


def _bilinear(z, x, y):
    x0, y0 = int(math.floor(x)), int(math.floor(y))
    fx, fy = x - x0, y - y0
    return (
        z[y0, x0] * (1 - fy) * (1 - fx)
        + z[y0 + 1, x0] * fy * (1 - fx)
        + z[y0, x0 + 1] * (1 - fy) * fx
        + z[y0 + 1, x0 + 1] * fy * fx
    )


def test_criterion_1_metric_oracle_equivalence():
    rng = np.random.default_rng(1001)
    t0 = time.perf_counter()
    max_auc = max_kl = max_nss = max_cc = 0.0
    for case in range(100):
        sal = rng.uniform(0, 1, (16, 16))
        n_fix = int(rng.integers(2, 7))
        fixations = [ (float(rng.uniform(0, 14.9)), float(rng.uniform(0, 14.9))) for _ in range(n_fix) ]
        fixmap = rng.uniform(0, 1, (16, 16))
        fixmap /= fixmap.sum()

        ours = metrics.auc(sal, fixations, repetitions=3, seed=2000 + case)
        oracle = _auc_oracle(sal, fixations, repetitions=3, seed=2000 + case)
        max_auc = max(max_auc, abs(ours - oracle))

        eps = 1e-12
        q = sal / sal.sum()
        p = (fixmap + eps) / (1 + eps * fixmap.size)
        q = (q + eps) / (1 + eps * q.size)
        max_kl = max(max_kl, abs(metrics.kl_divergence(sal, fixmap) - np.sum(p * np.log(p / q))))

        z = (sal - sal.mean()) / sal.std()
        nss_oracle = np.mean([_bilinear(z, x, y) for x, y in fixations])
        max_nss = max(max_nss, abs(metrics.nss(sal, fixations) - nss_oracle))

        cov = np.mean((sal - sal.mean()) * (fixmap - fixmap.mean()))
        max_cc = max(max_cc, abs(metrics.cc(sal, fixmap) - cov / (sal.std() * fixmap.std())))
    elapsed = time.perf_counter() - t0
    detail = (
        f"100 pairs: |dAUC|={max_auc:.2e} (<=1e-12), |dKL|={max_kl:.2e}, "
        f"|dNSS|={max_nss:.2e}, |dCC|={max_cc:.2e} (<=1e-9), {elapsed:.2f}s (<5s)"
    )
    passed = (
        max_auc <= 1e-12
        and max_kl <= 1e-9
        and max_nss <= 1e-9
        and max_cc <= 1e-9
        and elapsed < 5.0
    )
    _criterion("metric oracle equivalence", passed, detail)


# --- criterion 2: metric analytic anchors -----------------------------------


def test_criterion_2_metric_analytic_anchors():
    rng = np.random.default_rng(1002)
    fixmap = rng.uniform(0.05, 1.0, (16, 16))
    fixmap /= fixmap.sum()
    kl_self = metrics.kl_divergence(fixmap.copy(), fixmap)
    cc_self = metrics.cc(fixmap.copy(), fixmap)

    constant = np.full((16, 16), 0.3)
    fixations = [(3.0, 4.0), (10.0, 2.0), (7.0, 12.0)]
    auc_const = metrics.auc(constant, fixations, repetitions=5, seed=7)

    sal = rng.uniform(0, 1, (16, 16))
    nss_a = metrics.nss(sal, fixations)
    nss_b = metrics.nss(4.0 * sal + 2.0, fixations)
    auc_a = metrics.auc(sal, fixations, repetitions=5, seed=9)
    auc_b = metrics.auc(np.exp(sal), fixations, repetitions=5, seed=9)

    passed = (
        abs(kl_self) <= 1e-9
        and abs(cc_self - 1.0) <= 1e-9
        and abs(auc_const - 0.5) <= 1e-9
        and nss_a == nss_b
        and auc_a == auc_b
    )
    detail = (
        f"KL(self)={kl_self:.2e}, CC(self)-1={cc_self - 1:.2e}, "
        f"AUC(const)-0.5={auc_const - 0.5:.2e}, NSS affine exact={nss_a == nss_b}, "
        f"AUC monotone exact={auc_a == auc_b}"
    )
    _criterion("metric analytic anchors", passed, detail)


# --- criterion 3: WTA correctness --------------------------------------------


def test_criterion_3_wta_correctness():
    rng = np.random.default_rng(1003)
    perms = correlation.make_permutations(32, count=2000, subset=5, seed=42)
    exact = True
    for _ in range(1000):
        window = rng.normal(size=32)
        base = correlation.wta_hash(window, perms)
        transformed = correlation.wta_hash(3.0 * window + 11.0, perms)
        if not np.array_equal(base, transformed):
            exact = False
            break
    a = correlation.wta_hash(rng.normal(size=32), perms)
    b = correlation.wta_hash(rng.normal(size=32), perms)
    normalized = correlation.hamming_distance(a, b) / perms.count
    passed = exact and abs(normalized - 0.8) <= 0.03
    _criterion(
        "WTA correctness",
        passed,
        f"monotone equality on 1000 windows={exact}, "
        f"independent-vector normalized Hamming={normalized:.3f} (0.8 +/- 0.03)",
    )


# --- criteria 4-6, 8, 9 share the benchmark ----------------------------------


def _main_tracks(bench, result):
    """Map each disc to the track that follows it across the clip."""
    chosen = {}
    for disc in range(len(bench.spec.objects)):
        best = None
        for track in result.tracks:
            if len(track.assignments) < 10:
                continue
            dists = [
                math.hypot(
                    track.centroids[f][0] - bench.positions[disc, f, 0],
                    track.centroids[f][1] - bench.positions[disc, f, 1],
                )
                for f in track.assignments
            ]
            mean_dist = float(np.mean(dists))
            if mean_dist < 6.0 and (best is None or len(track.assignments) > best[1]):
                best = (track.id, len(track.assignments))
        if best is not None:
            chosen[disc] = best[0]
    return chosen


def _disc_mask(bench, disc, frame):
    yy, xx = np.mgrid[0 : bench.spec.height, 0 : bench.spec.width]
    cx, cy = bench.positions[disc, frame]
    radius = bench.spec.objects[disc].radius
    return (xx - cx) ** 2 + (yy - cy) ** 2 <= radius * radius


def test_criterion_4_av_sync_discrimination(bench, bench_av):
    cfg = PipelineConfig()
    bound = bench.spec.audio_bound
    other = 1 - bound
    tracks = _main_tracks(bench, bench_av)
    assert set(tracks) == {0, 1}, f"main tracks not identified: {tracks}"

    wins = valid = 0
    for frame in range(cfg.correlation_window - 1, bench.spec.frames):
        by_id = {s.track_id: s.score for s in bench_av.scores[frame]}
        if tracks[bound] in by_id and tracks[other] in by_id:
            valid += 1
            wins += by_id[tracks[bound]] > by_id[tracks[other]]
    score_rate = wins / max(valid, 1)

    map_wins = 0
    for frame in range(bench.spec.frames):
        final = bench_av.final_maps[frame]
        map_wins += (
            final[_disc_mask(bench, bound, frame)].mean()
            > final[_disc_mask(bench, other, frame)].mean()
        )
    map_rate = map_wins / bench.spec.frames
    wall = bench_av.timings.get("wall", float("inf"))

    passed = score_rate >= 0.90 and map_rate >= 0.75 and wall < 120.0
    _criterion(
        "AV-sync discrimination",
        passed,
        f"score wins {wins}/{valid} ({score_rate:.0%} >= 90%), "
        f"map wins {map_wins}/{bench.spec.frames} ({map_rate:.0%} >= 75%), "
        f"runtime {wall:.1f}s (< 120s)",
    )


def test_criterion_5_fusion_improvement(bench, bench_av, bench_visual_only, bench_fixations):
    cfg = PipelineConfig()

    def mean_auc(result):
        report = metrics.evaluate_video(
            result.final_maps,
            bench_fixations,
            frame_limit=cfg.frame_limit,
            fixation_sigma_frac=cfg.fixation_sigma_frac,
            auc_repetitions=cfg.auc_repetitions,
            seed=cfg.metric_seed,
        )
        return report.mean("auc")

    auc_av = mean_auc(bench_av)
    auc_vo = mean_auc(bench_visual_only)
    gain = auc_av - auc_vo
    _criterion(
        "fusion improvement proxy",
        gain >= 0.02,
        f"AUC audiovisual={auc_av:.4f}, visual-only={auc_vo:.4f}, gain={gain:.4f} (>= 0.02)",
    )


def test_criterion_6_numerical_structural_invariants(bench, bench_clip, bench_av):
    cfg = PipelineConfig()
    problems = []

    # transition matrices and equilibrium residual on one benchmark frame
    flow_field = None
    maps = visual.extract_feature_maps(bench_clip.frames[10], bench_clip.frames[9], flow_field)
    for feature in maps:
        graph = visual.build_markov_graph(feature.values, cfg.gbvs_sigma_frac)
        col_err = np.abs(graph.matrix.sum(axis=0) - 1.0).max()
        if col_err > 1e-12:
            problems.append(f"{feature.channel} column sums off by {col_err:.2e}")
        act, converged = visual.equilibrium(graph)
        residual = np.abs(graph.matrix @ act.ravel() - act.ravel()).max()
        if not converged or residual >= 1e-5:
            problems.append(f"{feature.channel} residual {residual:.2e}")

    for frame in range(bench_av.frame_count):
        final = bench_av.final_maps[frame]
        for name, values in (
            ("final", final),
            ("audio", bench_av.audio_maps[frame]),
            ("visual", bench_av.visual_maps[frame]),
        ):
            if values.min() < 0.0 or values.max() > 1.0:
                problems.append(f"{name} map {frame} outside [0,1]")
                break
        motion = bench_av.motion_maps[frame]
        if not set(np.unique(motion)) <= {0.0, 1.0}:
            problems.append(f"motion map {frame} not binary")
            break
        lo = np.minimum(np.minimum(bench_av.visual_maps[frame], bench_av.audio_maps[frame]), motion)
        hi = np.maximum(np.maximum(bench_av.visual_maps[frame], bench_av.audio_maps[frame]), motion)
        if np.any(final < lo - 1e-12) or np.any(final > hi + 1e-12):
            problems.append(f"fusion output escapes convex bounds at frame {frame}")
            break

    for frame, seg in enumerate(bench_av.segmentations):
        for region_id in seg.region_ids:
            if seg.pixel_count(region_id) < cfg.min_region_pixels:
                problems.append(f"region {region_id} in frame {frame} below 200 px")

    for entry in bench_av.assignment_log:
        if entry.distance > cfg.search_radius or entry.cosine <= cfg.cos_threshold:
            problems.append(
                f"assignment frame {entry.frame} d={entry.distance:.1f} cos={entry.cosine:.3f}"
            )

    _criterion(
        "numerical/structural invariants",
        not problems,
        "all invariants hold" if not problems else "; ".join(problems[:5]),
    )


def test_criterion_7_optical_flow_accuracy():
    from avsal import flow

    rng = np.random.default_rng(1007)
    tex = ndimage.gaussian_filter(rng.uniform(0, 255, (64, 64)), 2.0, mode="wrap")
    tex = (tex - tex.min()) / (tex.max() - tex.min()) * 255.0

    same = flow.dense_flow(tex, tex)
    same_max = max(np.abs(same.u).max(), np.abs(same.v).max())

    shifted = flow.dense_flow(tex, np.roll(tex, 1, axis=1))
    aepe = np.hypot(shifted.u - 1.0, shifted.v).mean()

    g = flow.acceleration_field(
        flow.dense_flow(tex, np.roll(tex, 1, axis=1)),
        flow.dense_flow(tex, np.roll(tex, -1, axis=1)),
    )
    g_mean = np.hypot(g[..., 0], g[..., 1]).mean()

    passed = aepe < 0.5 and same_max < 1e-6 and g_mean < 0.1
    _criterion(
        "optical flow accuracy",
        passed,
        f"1px AEPE={aepe:.3f} (<0.5), identical-frame max={same_max:.1e} (<1e-6), "
        f"constant-velocity mean |g|={g_mean:.3f} (<0.1)",
    )


def test_criterion_8_determinism(bench, tmp_path):
    frames = bench.out_dir / "frames"
    wav = bench.out_dir / "audio.wav"
    fixations = bench.out_dir / "fixations.csv"
    outputs = []
    for run in ("one", "two"):
        out = tmp_path / run
        assert (
            cli.main(
                ["saliency", "--frames", str(frames), "--audio", str(wav), "--out", str(out)]
            )
            == 0
        )
        assert (
            cli.main(
                [
                    "eval",
                    "--maps",
                    str(out),
                    "--fixations",
                    str(fixations),
                    "--out",
                    str(out / "report"),
                ]
            )
            == 0
        )
        payload = b"".join(p.read_bytes() for p in sorted(out.glob("*.f32")))
        payload += (out / "report.csv").read_bytes() + (out / "report.json").read_bytes()
        outputs.append(payload)
    identical = outputs[0] == outputs[1]
    _criterion(
        "determinism",
        identical,
        f"two saliency+eval runs produced byte-identical maps and reports={identical}",
    )


def test_criterion_9_desk_scale_performance(bench, bench_av, tmp_path):
    wall = bench_av.timings.get("wall", float("inf"))
    single_ok = wall < 120.0

    spec = synth.two_disc_spec(frames=36)
    clip_dir = tmp_path / "clip"
    synth.generate(spec, clip_dir, seed=17)
    cfg = PipelineConfig()
    jobs = [
        (clip_dir / "frames", clip_dir / "audio.wav", cfg, tmp_path / f"out{i}")
        for i in range(4)
    ]
    t0 = time.perf_counter()
    pipeline.run_batch(jobs, workers=1)
    sequential = time.perf_counter() - t0
    t0 = time.perf_counter()
    pipeline.run_batch(jobs, workers=4)
    parallel = time.perf_counter() - t0
    speedup = sequential / parallel

    passed = single_ok and speedup >= 1.5
    _criterion(
        "desk-scale performance",
        passed,
        f"120-frame clip single-threaded {wall:.1f}s (<120s); 4-video batch "
        f"sequential {sequential:.1f}s vs 4 workers {parallel:.1f}s = {speedup:.2f}x (>=1.5x)",
    )
