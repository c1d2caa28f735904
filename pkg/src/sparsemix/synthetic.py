"""Synthetic toy corpora for demos and testing.

Each speaker gets a distinct bin-exact tone; utterances are padded with low
level noise so the trimming step has real silence to harvest, and exact CTM
alignment files accompany every WAV.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence, Tuple

import numpy as np

from . import audio_io
from .dsp import AudioBuffer

GENDERS = ("male", "female")


def speaker_tone_hz(speaker_index: int, sample_rate: int = 16000, dft_size: int = 512) -> float:
    """Bin-exact tone frequency for a synthetic speaker (bins 8, 12, 16, ...)."""
    return (8 + 4 * speaker_index) * sample_rate / dft_size


def make_utterance(
    speaker_index: int,
    duration_s: float,
    pad_s: Tuple[float, float] = (0.25, 0.2),
    sample_rate: int = 16000,
    pad_level_dbfs: float = -60.0,
    edge_ramp_s: float = 0.03,
    seed: int = 0,
) -> Tuple[AudioBuffer, float, float]:
    """One padded tone burst; returns (audio, speech_start_s, speech_end_s).

    A raised-cosine ramp at both speech edges mimics natural onsets and
    offsets instead of instantaneous full-amplitude steps.
    """
    rng = np.random.default_rng(seed)
    n_speech = int(round(duration_s * sample_rate))
    n_lead = int(round(pad_s[0] * sample_rate))
    n_trail = int(round(pad_s[1] * sample_rate))
    t = np.arange(n_speech) / sample_rate
    tone = speaker_tone_hz(speaker_index, sample_rate)
    speech = 0.3 * np.sin(2 * np.pi * tone * t) * (1.0 + 0.1 * np.sin(2 * np.pi * 2.0 * t))
    n_ramp = min(int(round(edge_ramp_s * sample_rate)), n_speech // 2)
    if n_ramp > 0:
        ramp = 0.5 * (1.0 - np.cos(np.pi * np.arange(n_ramp) / n_ramp))
        speech[:n_ramp] *= ramp
        speech[-n_ramp:] *= ramp[::-1]
    pad_amp = 10.0 ** (pad_level_dbfs / 20.0)
    lead = pad_amp * rng.standard_normal(n_lead)
    trail = pad_amp * rng.standard_normal(n_trail)
    samples = np.concatenate([lead, speech, trail])
    start_s = n_lead / sample_rate
    end_s = (n_lead + n_speech) / sample_rate
    return AudioBuffer(samples, sample_rate), start_s, end_s


def make_toy_corpus(
    out_dir: str | Path,
    n_speakers: int = 4,
    durations_s: Sequence[float] = (0.8, 1.1, 0.6),
    pad_s: Tuple[float, float] = (0.25, 0.2),
    sample_rate: int = 16000,
    seed: int = 1234,
    with_alignments: bool = True,
) -> Path:
    """Write a toy corpus (WAVs, CTM alignments, JSONL manifest); returns the
    manifest path. Every speaker has the same total speech duration, so even
    an overlap target of 1.0 is feasible."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for spk in range(n_speakers):
        speaker_id = f"spk{spk}"
        gender = GENDERS[spk % 2]
        for u, dur in enumerate(durations_s):
            utt_id = f"{speaker_id}_utt{u}"
            audio, start_s, end_s = make_utterance(
                spk, dur, pad_s, sample_rate, seed=seed + 97 * spk + u
            )
            wav_name = f"{utt_id}.wav"
            audio_io.write_wav(out_dir / wav_name, audio)
            words = [f"w{spk}{u}{i}" for i in range(3)]
            row = {
                "id": utt_id,
                "speaker_id": speaker_id,
                "gender": gender,
                "wav_path": wav_name,
                "transcript": " ".join(words),
            }
            if with_alignments:
                ctm_name = f"{utt_id}.ctm"
                bounds = np.linspace(start_s, end_s, len(words) + 1)
                lines = [
                    f"{utt_id} 1 {bounds[i]:.6f} {bounds[i + 1] - bounds[i]:.6f} {w}"
                    for i, w in enumerate(words)
                ]
                (out_dir / ctm_name).write_text("\n".join(lines) + "\n")
                row["alignment_path"] = ctm_name
            rows.append(row)
    manifest = out_dir / "manifest.jsonl"
    with manifest.open("w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return manifest
