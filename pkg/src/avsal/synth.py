"""Synthetic audiovisual clips with known ground truth.

Renders anti-aliased discs orbiting on a static textured background. One
disc is audio-bound: the soundtrack is a tone whose amplitude follows that
disc's per-frame speed, so sound energy and object motion share rank order
by construction. Fixation ground truth jitters around the bound disc's
centre. Everything derives from one seed and regenerates bit-identically.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage
from scipy.io import wavfile

from .errors import ParameterError


@dataclass
class DiscSpec:
    color: tuple[int, int, int]
    radius: float
    center: tuple[float, float]   # orbit centre (x, y)
    orbit_radius: float
    phase: float = 0.0
    speed: float | None = None          # constant px/frame
    speed_min: float | None = None      # modulated profile
    speed_max: float | None = None
    period: float | None = None

    def speed_series(self, frames: int) -> np.ndarray:
        if self.speed is not None:
            return np.full(frames, float(self.speed))
        if None in (self.speed_min, self.speed_max, self.period):
            raise ParameterError(
                "disc needs either 'speed' or 'speed_min'/'speed_max'/'period'"
            )
        t = np.arange(frames)
        envelope = 0.5 * (1.0 - np.cos(2 * np.pi * t / self.period))
        return self.speed_min + (self.speed_max - self.speed_min) * envelope


@dataclass
class SyntheticSpec:
    frames: int = 120
    fps: float = 30.0
    width: int = 64
    height: int = 64
    sample_rate: int = 16000
    carrier_hz: float = 440.0
    audio_bound: int = 0
    fixations_per_frame: int = 3
    fixation_jitter: float = 2.0
    objects: list[DiscSpec] = field(default_factory=list)

    def validate(self) -> None:
        if self.frames < 2 or self.fps <= 0 or self.width < 8 or self.height < 8:
            raise ParameterError("spec needs frames >= 2, fps > 0 and a usable resolution")
        if len(self.objects) < 2:
            raise ParameterError("spec needs at least 2 objects")
        if not 0 <= self.audio_bound < len(self.objects):
            raise ParameterError("audio_bound must index an object")
        for index, disc in enumerate(self.objects):
            reach_x = disc.orbit_radius + disc.radius
            reach_y = disc.orbit_radius + disc.radius
            if (
                disc.center[0] - reach_x < 0
                or disc.center[0] + reach_x > self.width
                or disc.center[1] - reach_y < 0
                or disc.center[1] + reach_y > self.height
            ):
                raise ParameterError(f"object {index} trajectory leaves the frame")


@dataclass
class SyntheticResult:
    spec: SyntheticSpec
    positions: np.ndarray  # (objects, frames, 2) as (x, y)
    speeds: np.ndarray     # (objects, frames)
    out_dir: Path


def two_disc_spec(
    frames: int = 120, fps: float = 30.0, width: int = 64, height: int = 64
) -> SyntheticSpec:
    """The standard benchmark: one audio-bound disc, one constant-speed disc."""
    return SyntheticSpec(
        frames=frames,
        fps=fps,
        width=width,
        height=height,
        audio_bound=0,
        objects=[
            DiscSpec(
                color=(220, 205, 60),
                radius=11.0,
                center=(width * 0.3, height * 0.3),
                orbit_radius=3.5,
                phase=0.0,
                speed_min=0.8,
                speed_max=2.5,
                period=24.0,
            ),
            DiscSpec(
                color=(30, 60, 190),
                radius=11.0,
                center=(width * 0.7, height * 0.7),
                orbit_radius=3.5,
                phase=math.pi,
                speed=1.5,
            ),
        ],
    )


def load_spec(file: str | Path) -> SyntheticSpec:
    """Read a spec from JSON; see :func:`save_spec` for the layout."""
    try:
        data = json.loads(Path(file).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParameterError(f"cannot read synthetic spec {file}: {exc}") from exc
    objects = [
        DiscSpec(
            color=tuple(obj["color"]),
            radius=float(obj["radius"]),
            center=tuple(obj["center"]),
            orbit_radius=float(obj["orbit_radius"]),
            phase=float(obj.get("phase", 0.0)),
            speed=obj.get("speed"),
            speed_min=obj.get("speed_min"),
            speed_max=obj.get("speed_max"),
            period=obj.get("period"),
        )
        for obj in data.get("objects", [])
    ]
    spec = SyntheticSpec(
        frames=int(data.get("frames", 120)),
        fps=float(data.get("fps", 30.0)),
        width=int(data.get("width", 64)),
        height=int(data.get("height", 64)),
        sample_rate=int(data.get("sample_rate", 16000)),
        carrier_hz=float(data.get("carrier_hz", 440.0)),
        audio_bound=int(data.get("audio_bound", 0)),
        fixations_per_frame=int(data.get("fixations_per_frame", 3)),
        fixation_jitter=float(data.get("fixation_jitter", 2.0)),
        objects=objects,
    )
    spec.validate()
    return spec


def save_spec(spec: SyntheticSpec, file: str | Path) -> None:
    data = {
        "frames": spec.frames,
        "fps": spec.fps,
        "width": spec.width,
        "height": spec.height,
        "sample_rate": spec.sample_rate,
        "carrier_hz": spec.carrier_hz,
        "audio_bound": spec.audio_bound,
        "fixations_per_frame": spec.fixations_per_frame,
        "fixation_jitter": spec.fixation_jitter,
        "objects": [
            {
                "color": list(disc.color),
                "radius": disc.radius,
                "center": list(disc.center),
                "orbit_radius": disc.orbit_radius,
                "phase": disc.phase,
                **(
                    {"speed": disc.speed}
                    if disc.speed is not None
                    else {
                        "speed_min": disc.speed_min,
                        "speed_max": disc.speed_max,
                        "period": disc.period,
                    }
                ),
            }
            for disc in spec.objects
        ],
    }
    Path(file).write_text(json.dumps(data, indent=2) + "\n")


def _trajectories(spec: SyntheticSpec) -> tuple[np.ndarray, np.ndarray]:
    positions = np.zeros((len(spec.objects), spec.frames, 2))
    speeds = np.zeros((len(spec.objects), spec.frames))
    for index, disc in enumerate(spec.objects):
        speeds[index] = disc.speed_series(spec.frames)
        theta = disc.phase
        for t in range(spec.frames):
            positions[index, t, 0] = disc.center[0] + disc.orbit_radius * math.cos(theta)
            positions[index, t, 1] = disc.center[1] + disc.orbit_radius * math.sin(theta)
            if disc.orbit_radius > 0:
                theta += speeds[index, t] / disc.orbit_radius
    return positions, speeds


def _background(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    # strong high-frequency texture so optical flow has data support; the
    # background itself never moves
    noise = rng.uniform(0.0, 1.0, size=(spec.height, spec.width))
    smooth = ndimage.gaussian_filter(noise, sigma=0.8, mode="wrap")
    lo, hi = smooth.min(), smooth.max()
    gray = 64.0 + 128.0 * (smooth - lo) / max(hi - lo, 1e-12)
    return np.repeat(gray[:, :, None], 3, axis=2)


def _disc_texture(rng: np.random.Generator, size: int = 48) -> np.ndarray:
    """Rigid additive brightness pattern in [-1, 1] carried by a disc.

    Additive (not multiplicative) so dark discs get the same optical flow
    anchoring as bright ones.
    """
    noise = rng.uniform(-1.0, 1.0, size=(size, size))
    smooth = ndimage.gaussian_filter(noise, sigma=1.0, mode="wrap")
    peak = np.abs(smooth).max()
    return smooth / max(peak, 1e-12)


def _draw_disc(
    canvas: np.ndarray,
    x: float,
    y: float,
    radius: float,
    color,
    texture: np.ndarray | None = None,
) -> None:
    rows = np.arange(canvas.shape[0], dtype=np.float64)
    cols = np.arange(canvas.shape[1], dtype=np.float64)
    dist = np.hypot(cols[None, :] - x, rows[:, None] - y)
    alpha = np.clip(radius + 0.5 - dist, 0.0, 1.0)
    shade = np.zeros_like(alpha)
    if texture is not None:
        # sample in disc-local coordinates so the pattern translates rigidly
        size = texture.shape[0]
        ty = np.clip(rows[:, None] - y + size / 2.0, 0, size - 1.001)
        tx = np.clip(cols[None, :] - x + size / 2.0, 0, size - 1.001)
        y0 = np.floor(ty).astype(int)
        x0 = np.floor(tx).astype(int)
        fy = ty - y0
        fx = tx - x0
        shade = (
            texture[y0, x0] * (1 - fy) * (1 - fx)
            + texture[y0 + 1, x0] * fy * (1 - fx)
            + texture[y0, x0 + 1] * (1 - fy) * fx
            + texture[y0 + 1, x0 + 1] * fy * fx
        ) * 28.0
    for channel in range(3):
        painted = np.clip(float(color[channel]) + shade, 0.0, 255.0)
        canvas[..., channel] = canvas[..., channel] * (1 - alpha) + painted * alpha


def _audio_samples(spec: SyntheticSpec, speeds: np.ndarray) -> np.ndarray:
    bound_speed = speeds[spec.audio_bound]
    peak = bound_speed.max()
    n_samples = math.floor(spec.frames * spec.sample_rate / spec.fps)
    if peak <= 0:
        return np.zeros(n_samples, dtype=np.float32)
    frame_of_sample = np.arange(n_samples) * spec.fps / spec.sample_rate
    amplitude = 0.8 * np.interp(frame_of_sample, np.arange(spec.frames), bound_speed) / peak
    t = np.arange(n_samples) / spec.sample_rate
    return (amplitude * np.sin(2 * np.pi * spec.carrier_hz * t)).astype(np.float32)


def generate(spec: SyntheticSpec, out_dir: str | Path, seed: int = 42) -> SyntheticResult:
    """Write frames/, audio.wav, fixations.csv and objects.csv under out_dir."""
    spec.validate()
    out = Path(out_dir)
    frames_dir = out / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    positions, speeds = _trajectories(spec)
    background = _background(spec, rng)
    textures = [_disc_texture(rng) for _ in spec.objects]
    for t in range(spec.frames):
        canvas = background.copy()
        for index in range(len(spec.objects)):
            x, y = positions[index, t]
            _draw_disc(
                canvas,
                x,
                y,
                spec.objects[index].radius,
                spec.objects[index].color,
                textures[index],
            )
        image = np.rint(canvas).clip(0, 255).astype(np.uint8)
        Image.fromarray(image, mode="RGB").save(frames_dir / f"{t:06d}.png")

    wavfile.write(out / "audio.wav", spec.sample_rate, _audio_samples(spec, speeds))

    with open(out / "fixations.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["frame", "x", "y"])
        bound = positions[spec.audio_bound]
        for t in range(spec.frames):
            for _ in range(spec.fixations_per_frame):
                x = bound[t, 0] + rng.uniform(-spec.fixation_jitter, spec.fixation_jitter)
                y = bound[t, 1] + rng.uniform(-spec.fixation_jitter, spec.fixation_jitter)
                x = min(max(x, 0.0), spec.width - 1e-6)
                y = min(max(y, 0.0), spec.height - 1e-6)
                writer.writerow([t, f"{x:.3f}", f"{y:.3f}"])

    with open(out / "objects.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["frame", "object", "cx", "cy", "radius", "speed"])
        for t in range(spec.frames):
            for index in range(len(spec.objects)):
                writer.writerow(
                    [
                        t,
                        index,
                        f"{positions[index, t, 0]:.4f}",
                        f"{positions[index, t, 1]:.4f}",
                        f"{spec.objects[index].radius:.2f}",
                        f"{speeds[index, t]:.4f}",
                    ]
                )
    return SyntheticResult(spec=spec, positions=positions, speeds=speeds, out_dir=out)
