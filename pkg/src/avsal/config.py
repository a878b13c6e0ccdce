"""Pipeline configuration: one flat set of tunables with file + CLI overrides.

Config files are plain text, one ``key = value`` per line, ``#`` comments.
Every knob of every stage is exposed here so a run is fully described by
(config, seed) and can be reproduced bit for bit.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParameterError


@dataclass
class FusionWeights:
    """Relative weights of the three maps in the final linear combination."""

    visual: float = 1.0 / 3.0
    audio: float = 1.0 / 3.0
    motion: float = 1.0 / 3.0

    def validate(self) -> None:
        if min(self.visual, self.audio, self.motion) < 0:
            raise ParameterError("fusion weights must be >= 0")
        if self.visual + self.audio + self.motion <= 0:
            raise ParameterError("fusion weights must not all be zero")


@dataclass
class PipelineConfig:
    # global
    fps: float = 30.0
    seed: int = 42
    frame_limit: int = 300
    workers: int = 1

    # region tracking
    search_radius: float = 100.0          # px, candidate gate for assignment
    cos_threshold: float = 0.8            # histogram cosine acceptance
    track_max_missed: int = 10            # frames before a track goes inactive
    track_smoothing_sigma: float = 2.0    # frames, on per-track acceleration

    # audio-video correlation
    wta_permutations: int = 2000          # N
    wta_window: int = 5                   # S
    correlation_window: int = 32          # L, frames per descriptor window
    audio_blur_sigma: float = 10.0        # px, blur of the painted score map

    # motion map
    motion_threshold_percent: float = 10.0  # T

    # audio descriptor
    audio_smoothing_sigma: float = 2.0    # frames

    # optical flow
    flow_alpha: float = 15.0
    flow_iterations: int = 100
    flow_levels: int = 3

    # segmentation
    ms_spatial_bandwidth: float = 8.0     # px
    ms_range_bandwidth: float = 8.0       # LUV units
    merge_deltae_threshold: float = 10.0  # CIE76
    min_region_pixels: int = 200
    min_region_motion: float = 0.25       # px mean flow; below = static background
    histogram_bins: int = 8
    histogram_space: str = "luv"          # luv | hsv

    # visual saliency
    gbvs_downsample: int = 4
    gbvs_sigma_frac: float = 0.15
    gbvs_max_nodes_w: int = 64
    gbvs_max_nodes_h: int = 48

    # metrics
    fixation_sigma_frac: float = 0.04     # of frame width
    auc_repetitions: int = 10
    metric_seed: int = 42

    # fusion
    weights: FusionWeights = field(default_factory=FusionWeights)

    def validate(self) -> None:
        if self.fps <= 0:
            raise ParameterError("fps must be > 0")
        if self.search_radius <= 0:
            raise ParameterError("search_radius must be > 0")
        if not 0 < self.cos_threshold <= 1:
            raise ParameterError("cos_threshold must be in (0, 1]")
        if self.wta_window < 2:
            raise ParameterError("wta_window must be >= 2")
        if self.correlation_window < self.wta_window:
            raise ParameterError("correlation_window must be >= wta_window")
        if not 0 <= self.motion_threshold_percent <= 100:
            raise ParameterError("motion_threshold_percent must be in [0, 100]")
        if self.histogram_space not in ("luv", "hsv"):
            raise ParameterError("histogram_space must be 'luv' or 'hsv'")
        if self.workers < 1:
            raise ParameterError("workers must be >= 1")
        self.weights.validate()


_WEIGHT_KEYS = {"w_visual": "visual", "w_audio": "audio", "w_motion": "motion"}


def _coerce(name: str, raw: str, kind: type):
    try:
        if kind is bool:
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValueError as exc:
        raise ParameterError(f"config key {name!r}: cannot parse {raw!r} as {kind.__name__}") from exc


def apply_overrides(config: PipelineConfig, pairs: dict[str, str]) -> PipelineConfig:
    """Return a copy of *config* with string key=value overrides applied."""
    cfg = dataclasses.replace(config, weights=dataclasses.replace(config.weights))
    fields = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}
    for key, raw in pairs.items():
        if key in _WEIGHT_KEYS:
            setattr(cfg.weights, _WEIGHT_KEYS[key], _coerce(key, raw, float))
            continue
        if key not in fields or key == "weights":
            raise ParameterError(f"unknown config key {key!r}")
        current = getattr(cfg, key)
        setattr(cfg, key, _coerce(key, raw, type(current)))
    cfg.validate()
    return cfg


def parse_config_text(text: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ParameterError(f"config line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        pairs[key.strip()] = value.strip()
    return pairs


def load_config(path: str | Path | None, overrides: dict[str, str] | None = None) -> PipelineConfig:
    """Build a config from defaults, an optional file, and optional overrides."""
    cfg = PipelineConfig()
    if path is not None:
        cfg = apply_overrides(cfg, parse_config_text(Path(path).read_text()))
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    cfg.validate()
    return cfg
