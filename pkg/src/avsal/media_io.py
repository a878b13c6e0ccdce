"""Loading of frame sequences, PCM audio and fixation ground truth, plus
saliency map output.

Formats handled here are deliberately narrow and fully decoded:

* frames: PNG or binary PPM (P6), zero-padded numeric file names;
* audio: RIFF WAVE, PCM 16-bit or IEEE float 32-bit, mono or stereo;
* fixations: CSV ``frame,x,y`` with a header row, 0-based frame index;
* saliency output: 8-bit grayscale PNG for inspection plus a lossless
  ``.f32`` dump (row-major little-endian float32) for metric computation.

All returned objects are plain data and never mutated by this module.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.io import wavfile

from .errors import FormatError, InputError

_FRAME_SUFFIXES = (".png", ".ppm")
_FRAME_NAME = re.compile(r"^0*(\d+)$")


@dataclass
class VideoClip:
    """An ordered, uniform frame sequence. ``frames[t]`` is (H, W, 3) uint8."""

    frames: list[np.ndarray]
    width: int
    height: int
    fps: float

    @property
    def frame_count(self) -> int:
        return len(self.frames)


@dataclass
class AudioTrack:
    """Mono audio samples in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass
class FixationSet:
    """Gaze points grouped per frame; frames not present have no points.

    ``dropped`` counts points rejected at load time for being out of bounds.
    """

    points: dict[int, list[tuple[float, float]]] = field(default_factory=dict)
    dropped: int = 0

    def for_frame(self, frame: int) -> list[tuple[float, float]]:
        return self.points.get(frame, [])

    @property
    def total(self) -> int:
        return sum(len(v) for v in self.points.values())

    @property
    def frames(self) -> list[int]:
        return sorted(self.points)


def load_frame_sequence(dir_path: str | Path, fps: float) -> VideoClip:
    """Load a numbered image directory as a clip.

    Frames are ordered by the integer value of their file stem. At least two
    frames are required and all must share one resolution.
    """
    directory = Path(dir_path)
    if not directory.is_dir():
        raise InputError(f"frame directory not found: {directory}")
    entries = []
    for path in directory.iterdir():
        if path.suffix.lower() not in _FRAME_SUFFIXES:
            continue
        match = _FRAME_NAME.match(path.stem)
        if match is None:
            continue
        entries.append((int(match.group(1)), path))
    if len(entries) < 2:
        raise InputError(
            f"need at least 2 numbered frames in {directory}, found {len(entries)}"
        )
    entries.sort(key=lambda item: item[0])

    frames = []
    for _, path in entries:
        with Image.open(path) as img:
            frames.append(np.asarray(img.convert("RGB"), dtype=np.uint8))
    height, width = frames[0].shape[:2]
    for index, frame in enumerate(frames):
        if frame.shape[:2] != (height, width):
            raise FormatError(
                f"frame {entries[index][1].name} is {frame.shape[1]}x{frame.shape[0]}, "
                f"expected {width}x{height}"
            )
    if fps <= 0:
        raise InputError("fps must be > 0")
    return VideoClip(frames=frames, width=width, height=height, fps=float(fps))


def load_wav(file: str | Path) -> AudioTrack:
    """Load a PCM16 or float32 WAV as mono samples in [-1, 1].

    Stereo is averaged to mono. Other encodings raise FormatError.
    """
    path = Path(file)
    if not path.is_file():
        raise InputError(f"audio file not found: {path}")
    try:
        rate, data = wavfile.read(str(path))
    except ValueError as exc:
        raise FormatError(f"unsupported WAV encoding in {path}: {exc}") from exc
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise FormatError(
            f"unsupported WAV sample format {data.dtype} in {path}; "
            "expected PCM 16-bit or IEEE float 32-bit"
        )
    if samples.ndim == 2:
        if samples.shape[1] > 2:
            raise FormatError(f"{path}: expected 1 or 2 channels, got {samples.shape[1]}")
        samples = samples.mean(axis=1)
    return AudioTrack(samples=samples, sample_rate=int(rate))


def load_fixations(
    file: str | Path,
    width: int | None = None,
    height: int | None = None,
) -> FixationSet:
    """Parse a ``frame,x,y`` CSV into per-frame point lists.

    Points with negative coordinates, or coordinates outside the given frame
    dimensions (when provided), are dropped and counted in ``dropped``.
    """
    path = Path(file)
    if not path.is_file():
        raise InputError(f"fixation file not found: {path}")
    points: dict[int, list[tuple[float, float]]] = {}
    dropped = 0
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:3]] != ["frame", "x", "y"]:
            raise FormatError(f"{path}: expected header 'frame,x,y'")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                frame = int(row[0])
                x = float(row[1])
                y = float(row[2])
            except (IndexError, ValueError) as exc:
                raise FormatError(f"{path}:{lineno}: non-numeric fixation row {row!r}") from exc
            out = x < 0 or y < 0 or frame < 0
            if width is not None:
                out = out or x >= width
            if height is not None:
                out = out or y >= height
            if out:
                dropped += 1
                continue
            points.setdefault(frame, []).append((x, y))
    return FixationSet(points=points, dropped=dropped)


def write_saliency_map(values: np.ndarray, file: str | Path) -> None:
    """Write a [0, 1] map as 8-bit grayscale PNG plus a lossless ``.f32`` dump.

    The ``.f32`` companion (same stem) holds the row-major little-endian
    float32 values and is the format the metrics operate on.
    """
    path = Path(file)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise FormatError("saliency map must be 2D")
    try:
        pixels = np.rint(values * 255.0).clip(0, 255).astype(np.uint8)
        Image.fromarray(pixels, mode="L").save(path)
        values.astype("<f4").tofile(path.with_suffix(".f32"))
    except OSError as exc:
        raise InputError(f"cannot write saliency map to {path}: {exc}") from exc


def read_saliency_map(file: str | Path) -> np.ndarray:
    """Read a map written by :func:`write_saliency_map`.

    Prefers the lossless ``.f32`` companion (dimensions taken from the PNG);
    falls back to the PNG pixels / 255 if the dump is missing.
    """
    path = Path(file)
    png = path if path.suffix.lower() == ".png" else path.with_suffix(".png")
    raw = path.with_suffix(".f32")
    if not png.is_file():
        raise InputError(f"saliency map not found: {png}")
    with Image.open(png) as img:
        width, height = img.size
        pixels = np.asarray(img.convert("L"), dtype=np.float64)
    if raw.is_file():
        values = np.fromfile(raw, dtype="<f4").astype(np.float64)
        if values.size != width * height:
            raise FormatError(f"{raw}: expected {width * height} floats, got {values.size}")
        return values.reshape(height, width)
    return pixels / 255.0


def write_label_map(labels: np.ndarray, file: str | Path) -> None:
    """Debug dump of a segmentation label map as 16-bit grayscale PNG."""
    data = np.asarray(labels)
    if data.min() < 0 or data.max() > 65535:
        raise FormatError("label map values must fit in uint16")
    Image.fromarray(data.astype(np.uint16), mode="I;16").save(Path(file))
