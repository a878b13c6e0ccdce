"""Audio energy descriptor: one spectrogram-energy value per video frame.

The audio signal is cut into one slice per video frame, each slice is
transformed with a Hann-windowed STFT at 50% overlap, and the squared
magnitudes are summed over all windows and frequency bins. A 1D Gaussian
smooths the resulting series over frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .media_io import AudioTrack, VideoClip


@dataclass
class Spectrogram:
    """One-sided STFT magnitudes, rows = windows, cols = frequency bins."""

    magnitudes: np.ndarray
    hop: int
    window_len: int


@dataclass
class AudioEnergyDescriptor:
    """Per-video-frame spectrogram energy, already smoothed."""

    values: np.ndarray


def default_window_len(sample_rate: int, fps: float) -> int:
    """STFT window as the next power of two of a quarter video frame.

    Gives roughly four windows per video frame at 50% overlap.
    """
    if fps <= 0:
        raise ParameterError("fps must be > 0")
    return 2 ** math.ceil(math.log2(max(2.0, sample_rate / fps / 4.0)))


def segment_audio(audio: AudioTrack, fps: float, frame_count: int) -> list[np.ndarray]:
    """Cut samples into one slice per video frame.

    Slice k covers samples [k*sr/fps, (k+1)*sr/fps); audio shorter than the
    clip is treated as trailing silence (zero padding).
    """
    if fps <= 0:
        raise ParameterError("fps must be > 0")
    if frame_count < 0:
        raise ParameterError("frame_count must be >= 0")
    if frame_count == 0:
        return []
    step = audio.sample_rate / fps
    needed = math.floor(frame_count * step)
    samples = audio.samples
    if len(samples) < needed:
        samples = np.concatenate([samples, np.zeros(needed - len(samples))])
    slices = []
    for k in range(frame_count):
        start = math.floor(k * step)
        end = math.floor((k + 1) * step)
        slices.append(samples[start:end])
    return slices


def stft_spectrogram(samples: np.ndarray, window_len: int) -> Spectrogram:
    """Hann-windowed one-sided STFT magnitudes at 50% overlap."""
    samples = np.asarray(samples, dtype=np.float64)
    if window_len < 2:
        raise ParameterError("window_len must be >= 2")
    if len(samples) < window_len:
        raise ParameterError(
            f"slice of {len(samples)} samples is shorter than one window ({window_len})"
        )
    hop = window_len // 2
    window = np.hanning(window_len)
    starts = range(0, len(samples) - window_len + 1, hop)
    mags = np.empty((len(starts), window_len // 2 + 1))
    for row, start in enumerate(starts):
        mags[row] = np.abs(np.fft.rfft(samples[start : start + window_len] * window))
    return Spectrogram(magnitudes=mags, hop=hop, window_len=window_len)


def gaussian_smooth_1d(series: np.ndarray, sigma: float) -> np.ndarray:
    """Truncated-Gaussian smoothing (radius 3*sigma), kernel sum 1.

    Near the edges the kernel is renormalized over its valid support, so a
    constant series passes through unchanged.
    """
    if sigma < 0:
        raise ParameterError("sigma must be >= 0")
    series = np.asarray(series, dtype=np.float64)
    if sigma == 0 or len(series) == 0:
        return series.copy()
    radius = math.ceil(3 * sigma)
    offsets = np.arange(-radius, radius + 1)
    kernel = np.exp(-(offsets.astype(np.float64) ** 2) / (2 * sigma * sigma))
    kernel /= kernel.sum()
    # slice the full convolution explicitly: np.convolve(..., "same") returns
    # the wrong length when the kernel is longer than the series
    num = np.convolve(series, kernel, mode="full")[radius : radius + len(series)]
    den = np.convolve(np.ones_like(series), kernel, mode="full")[radius : radius + len(series)]
    return num / den


def energy_descriptor(
    audio: AudioTrack,
    clip: VideoClip,
    smoothing_sigma: float = 2.0,
    window_len: int | None = None,
) -> AudioEnergyDescriptor:
    """Sum of squared STFT magnitudes per video frame, Gaussian smoothed."""
    if window_len is None:
        window_len = default_window_len(audio.sample_rate, clip.fps)
    slices = segment_audio(audio, clip.fps, clip.frame_count)
    energies = np.empty(len(slices))
    for index, chunk in enumerate(slices):
        spec = stft_spectrogram(chunk, window_len)
        energies[index] = np.sum(spec.magnitudes**2)
    return AudioEnergyDescriptor(values=gaussian_smooth_1d(energies, smoothing_sigma))
