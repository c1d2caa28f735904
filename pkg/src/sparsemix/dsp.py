"""Core DSP: windowed STFT/ISTFT, log-Mel features, speech energy, SNR gains.

Conventions used throughout the toolkit:

* mono float waveforms, nominal range [-1, 1]
* frame count ``T = 1 + floor((n_samples - win_len) / hop_len)``, no padding;
  trailing samples not covered by a full window are ignored
* periodic Hann analysis window; the inverse transform is weighted
  overlap-add normalized per sample by the summed squared window
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.signal import get_window

DEFAULT_SAMPLE_RATE = 16000
LOG_MEL_FLOOR = 1e-10


@dataclass(frozen=True)
class AudioBuffer:
    """Mono sampled waveform plus its sample rate."""

    samples: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"expected mono 1-D samples, got shape {samples.shape}")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValueError("samples contain NaN or Inf")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class StftParams:
    """Analysis parameters: window/hop in milliseconds plus DFT size.

    Defaults are the separation setting (32 ms window, 8 ms hop, 512-point
    DFT); use :meth:`features` for the feature-extraction setting
    (25 ms / 10 ms).
    """

    window_ms: float = 32.0
    hop_ms: float = 8.0
    dft_size: int = 512
    window_kind: str = "hann"

    def __post_init__(self) -> None:
        if self.window_ms <= 0 or self.hop_ms <= 0:
            raise ValueError("window_ms and hop_ms must be positive")
        if self.hop_ms > self.window_ms:
            raise ValueError(
                f"hop_ms ({self.hop_ms}) must not exceed window_ms ({self.window_ms})"
            )
        if self.dft_size < 1:
            raise ValueError("dft_size must be a positive integer")
        if self.window_kind != "hann":
            raise ValueError(f"unsupported window kind {self.window_kind!r}; only 'hann'")

    @classmethod
    def separation(cls) -> "StftParams":
        return cls(window_ms=32.0, hop_ms=8.0, dft_size=512)

    @classmethod
    def features(cls) -> "StftParams":
        return cls(window_ms=25.0, hop_ms=10.0, dft_size=512)

    def win_length(self, sample_rate: int) -> int:
        return int(round(self.window_ms * sample_rate / 1000.0))

    def hop_length(self, sample_rate: int) -> int:
        return int(round(self.hop_ms * sample_rate / 1000.0))

    def validate_for(self, sample_rate: int) -> None:
        win = self.win_length(sample_rate)
        hop = self.hop_length(sample_rate)
        if win < 1 or hop < 1:
            raise ValueError(
                f"window/hop of {self.window_ms}/{self.hop_ms} ms collapse to zero "
                f"samples at {sample_rate} Hz"
            )
        if self.dft_size < win:
            raise ValueError(
                f"dft_size {self.dft_size} is smaller than the {win}-sample window"
            )


def frame_count(n_samples: int, win_len: int, hop_len: int) -> int:
    """Number of full analysis frames for a signal of ``n_samples``."""
    if n_samples < win_len:
        raise ValueError(
            f"signal of {n_samples} samples is shorter than one {win_len}-sample window"
        )
    return 1 + (n_samples - win_len) // hop_len


@dataclass(frozen=True)
class Spectrogram:
    """Complex STFT grid, frames x frequency bins, plus its analysis parameters."""

    bins: np.ndarray
    params: StftParams
    sample_rate: int

    def __post_init__(self) -> None:
        bins = np.asarray(self.bins, dtype=np.complex128)
        if bins.ndim != 2:
            raise ValueError(f"expected [frames, bins] grid, got shape {bins.shape}")
        expected = self.params.dft_size // 2 + 1
        if bins.shape[1] != expected:
            raise ValueError(
                f"frequency axis has {bins.shape[1]} bins, expected {expected} "
                f"for a {self.params.dft_size}-point DFT"
            )
        if bins.size and not np.all(np.isfinite(bins)):
            raise ValueError("spectrogram contains NaN or Inf")
        object.__setattr__(self, "bins", bins)

    @property
    def n_frames(self) -> int:
        return int(self.bins.shape[0])

    @property
    def n_bins(self) -> int:
        return int(self.bins.shape[1])


@dataclass(frozen=True)
class ActivityTrack:
    """Sample-resolution speech/no-speech mask paired with some waveform."""

    mask: np.ndarray

    def __post_init__(self) -> None:
        mask = np.asarray(self.mask, dtype=bool)
        if mask.ndim != 1:
            raise ValueError(f"expected 1-D mask, got shape {mask.shape}")
        object.__setattr__(self, "mask", mask)

    def __len__(self) -> int:
        return int(self.mask.size)

    @property
    def n_active(self) -> int:
        return int(self.mask.sum())

    @classmethod
    def from_runs(cls, runs: Sequence[Sequence[int]], length: int) -> "ActivityTrack":
        mask = np.zeros(length, dtype=bool)
        for start, end in runs:
            if not 0 <= start <= end <= length:
                raise ValueError(f"run [{start}, {end}) outside [0, {length})")
            mask[start:end] = True
        return cls(mask)

    def to_runs(self) -> list[list[int]]:
        """Maximal active runs as half-open ``[start, end)`` sample pairs."""
        runs: list[list[int]] = []
        padded = np.concatenate(([False], self.mask, [False]))
        flips = np.flatnonzero(padded[1:] != padded[:-1])
        for i in range(0, flips.size, 2):
            runs.append([int(flips[i]), int(flips[i + 1])])
        return runs

    def frame_activity(
        self, params: StftParams, sample_rate: int, n_frames: Optional[int] = None
    ) -> np.ndarray:
        """Per-frame activity: a frame is active if >= 50% of its hop span is."""
        win = params.win_length(sample_rate)
        hop = params.hop_length(sample_rate)
        if n_frames is None:
            n_frames = frame_count(self.mask.size, win, hop)
        spans = self.mask[: n_frames * hop].reshape(n_frames, hop)
        return spans.mean(axis=1) >= 0.5


def _hann(win_len: int) -> np.ndarray:
    return get_window("hann", win_len, fftbins=True)


def stft(audio: AudioBuffer, params: Optional[StftParams] = None) -> Spectrogram:
    """Short-time Fourier transform with a periodic Hann window.

    Frames start at multiples of the hop; only full windows are analyzed.
    Raises ``ValueError`` for a signal shorter than one window.
    """
    params = params or StftParams.separation()
    params.validate_for(audio.sample_rate)
    win_len = params.win_length(audio.sample_rate)
    hop = params.hop_length(audio.sample_rate)
    n_frames = frame_count(len(audio), win_len, hop)
    window = _hann(win_len)
    idx = np.arange(n_frames)[:, None] * hop + np.arange(win_len)[None, :]
    frames = audio.samples[idx] * window
    bins = np.fft.rfft(frames, n=params.dft_size, axis=1)
    return Spectrogram(bins=bins, params=params, sample_rate=audio.sample_rate)


def cola_norm(window: np.ndarray, hop: int) -> float:
    """Steady-state value of ``sum_t w^2(n - t*hop)``; raises if not constant.

    Constancy of the squared-window overlap-add sum is the condition that
    makes the constant-normalizer weighted overlap-add below an exact inverse
    on the interior; the periodic Hann at 75% overlap satisfies it (value 1.5).
    """
    wsq = window * window
    phases = np.zeros(hop)
    for offset in range(0, window.size, hop):
        chunk = wsq[offset : offset + hop]
        phases[: chunk.size] += chunk
    mean = float(phases.mean())
    if mean <= 0.0 or float(np.abs(phases - mean).max()) > 1e-8 * mean:
        raise ValueError(
            f"window of {window.size} samples with hop {hop} violates the "
            "constant-overlap-add (COLA) condition: the summed squared "
            "synthesis window is not constant across sample phases"
        )
    return mean


def istft(spec: Spectrogram, out_len: Optional[int] = None) -> AudioBuffer:
    """Weighted overlap-add inverse of :func:`stft`.

    Each frame is windowed again on synthesis and the overlap-add sum is
    divided by the constant COLA normalizer, so a lone nonzero frame comes
    back as a single windowed grain and reconstruction is exact on the
    interior. Raises ``ValueError`` when the window/hop pair violates the
    COLA condition.
    """
    params = spec.params
    win_len = params.win_length(spec.sample_rate)
    hop = params.hop_length(spec.sample_rate)
    window = _hann(win_len)
    norm = cola_norm(window, hop)
    frames = np.fft.irfft(spec.bins, n=params.dft_size, axis=1)[:, :win_len]
    n_frames = spec.n_frames
    natural_len = (n_frames - 1) * hop + win_len
    acc = np.zeros(natural_len)
    for t in range(n_frames):
        o = t * hop
        acc[o : o + win_len] += frames[t] * window
    out = acc / norm
    if out_len is None:
        out_len = natural_len
    if out_len <= natural_len:
        out = out[:out_len]
    else:
        out = np.concatenate([out, np.zeros(out_len - natural_len)])
    return AudioBuffer(out, spec.sample_rate)


def hz_to_mel(f: np.ndarray | float) -> np.ndarray | float:
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m: np.ndarray | float) -> np.ndarray | float:
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, dft_size: int, sample_rate: int) -> np.ndarray:
    """Triangular mel filterbank, HTK scale, 0 Hz to Nyquist, peak 1 (no area norm).

    Returns a ``[n_mels, dft_size // 2 + 1]`` weight matrix.
    """
    n_bins = dft_size // 2 + 1
    if n_mels < 1:
        raise ValueError("n_mels must be >= 1")
    if n_mels + 2 > n_bins:
        raise ValueError(
            f"n_mels={n_mels} exceeds the {n_bins} usable bins of a "
            f"{dft_size}-point DFT"
        )
    freqs = np.arange(n_bins) * sample_rate / dft_size
    edges = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(sample_rate / 2.0), n_mels + 2))
    lower, center, upper = edges[:-2], edges[1:-1], edges[2:]
    rising = (freqs[None, :] - lower[:, None]) / (center - lower)[:, None]
    falling = (upper[:, None] - freqs[None, :]) / (upper - center)[:, None]
    return np.clip(np.minimum(rising, falling), 0.0, None)


def log_mel(
    audio: AudioBuffer,
    n_mels: int = 80,
    params: Optional[StftParams] = None,
    floor: float = LOG_MEL_FLOOR,
) -> np.ndarray:
    """Unnormalized log-mel filterbank features, ``[frames, n_mels]``.

    Row t is ``log(filterbank @ |stft frame t|**2 + floor)`` with natural log;
    no mean or variance normalization is applied.
    """
    params = params or StftParams.features()
    spec = stft(audio, params)
    power = np.abs(spec.bins) ** 2
    fb = mel_filterbank(n_mels, params.dft_size, audio.sample_rate)
    return np.log(power @ fb.T + floor)


def speech_energy(audio: AudioBuffer, activity: ActivityTrack) -> float:
    """Sum of squared samples over the active region (0 for all-inactive)."""
    if len(audio) != len(activity):
        raise ValueError(
            f"audio has {len(audio)} samples but activity covers {len(activity)}"
        )
    return float(np.sum(audio.samples[activity.mask] ** 2))


def gain_for_snr(target_snr_db: float, ref_energy: float, other_energy: float) -> float:
    """Amplitude gain for the interferer so that ref vs gained-interferer hits the SNR.

    ``g = sqrt(ref / (other * 10**(snr/10)))``; both energies must be positive
    (a zero energy means the caller mixed a silent track).
    """
    if ref_energy <= 0.0:
        raise ValueError(f"reference speech energy must be positive, got {ref_energy}")
    if other_energy <= 0.0:
        raise ValueError(f"interferer speech energy must be positive, got {other_energy}")
    return float(np.sqrt(ref_energy / (other_energy * 10.0 ** (target_snr_db / 10.0))))
