import time

import pytest

from avsal import media_io, pipeline, synth
from avsal.config import PipelineConfig


@pytest.fixture(scope="session")
def bench(tmp_path_factory):
    """The standard two-disc benchmark clip with ground truth on disk."""
    out = tmp_path_factory.mktemp("bench")
    spec = synth.two_disc_spec()
    result = synth.generate(spec, out, seed=42)
    return result


@pytest.fixture(scope="session")
def bench_clip(bench):
    cfg = PipelineConfig()
    return media_io.load_frame_sequence(bench.out_dir / "frames", cfg.fps)


@pytest.fixture(scope="session")
def bench_audio(bench):
    return media_io.load_wav(bench.out_dir / "audio.wav")


@pytest.fixture(scope="session")
def bench_av(bench_clip, bench_audio):
    """Full audiovisual run on the benchmark; also records its wall time."""
    cfg = PipelineConfig()
    t0 = time.perf_counter()
    result = pipeline.compute_saliency(bench_clip, bench_audio, cfg)
    result.timings["wall"] = time.perf_counter() - t0
    return result


@pytest.fixture(scope="session")
def bench_visual_only(bench_clip):
    cfg = PipelineConfig()
    return pipeline.compute_saliency(bench_clip, None, cfg)


@pytest.fixture(scope="session")
def bench_fixations(bench):
    return media_io.load_fixations(
        bench.out_dir / "fixations.csv",
        width=bench.spec.width,
        height=bench.spec.height,
    )
