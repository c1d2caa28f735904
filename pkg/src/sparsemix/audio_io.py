"""WAV and activity-track file I/O.

WAV support is deliberately narrow: RIFF mono, 16-bit signed PCM or IEEE
float32. 16-bit samples map to floats as ``x / 32768``; writing 16-bit rounds
to nearest with clipping. Activity tracks are stored as JSON run-length lists
``[[start_sample, end_sample], ...]``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .dsp import ActivityTrack, AudioBuffer


def read_wav(path: str | Path) -> AudioBuffer:
    sample_rate, data = wavfile.read(str(path))
    if data.ndim != 1:
        raise ValueError(f"{path}: only mono WAV files are supported, got {data.ndim} channels")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise ValueError(
            f"{path}: unsupported WAV sample format {data.dtype}; "
            "expected 16-bit PCM or IEEE float32"
        )
    return AudioBuffer(samples, int(sample_rate))


def write_wav(path: str | Path, audio: AudioBuffer, sample_format: str = "float32") -> None:
    if sample_format == "float32":
        wavfile.write(str(path), audio.sample_rate, audio.samples.astype(np.float32))
    elif sample_format == "pcm16":
        scaled = np.rint(audio.samples * 32768.0)
        pcm = np.clip(scaled, -32768, 32767).astype(np.int16)
        wavfile.write(str(path), audio.sample_rate, pcm)
    else:
        raise ValueError(f"unknown sample_format {sample_format!r}; use 'float32' or 'pcm16'")


def save_activity(path: str | Path, activity: ActivityTrack) -> None:
    payload = {"length": len(activity), "runs": activity.to_runs()}
    Path(path).write_text(json.dumps(payload) + "\n")


def load_activity(path: str | Path) -> ActivityTrack:
    payload = json.loads(Path(path).read_text())
    return ActivityTrack.from_runs(payload["runs"], payload["length"])
