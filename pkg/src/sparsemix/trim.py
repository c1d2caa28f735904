"""Silence-trimming authorities: forced-alignment word times and an energy VAD."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .dsp import ActivityTrack, AudioBuffer


@dataclass(frozen=True)
class Alignment:
    """Word intervals (seconds) from a forced alignment, CTM-style."""

    words: Tuple[Tuple[float, float, str], ...]  # (start_s, end_s, word)

    @classmethod
    def from_ctm(cls, path: str | Path, utterance_id: Optional[str] = None) -> "Alignment":
        """Parse ``<utt-id> <channel> <start-sec> <dur-sec> <word>`` lines.

        Lines starting with ``;;`` or ``#`` are ignored; extra trailing
        columns (confidence) are tolerated.
        """
        words = []
        for raw in Path(path).read_text().splitlines():
            line = raw.strip()
            if not line or line.startswith(";;") or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 5:
                raise ValueError(f"{path}: malformed CTM line {raw!r}")
            utt, _chan, start, dur, word = parts[:5]
            if utterance_id is not None and utt != utterance_id:
                continue
            start_s = float(start)
            words.append((start_s, start_s + float(dur), word))
        words.sort()
        return cls(tuple(words))

    def sample_mask(self, audio: AudioBuffer) -> np.ndarray:
        mask = np.zeros(len(audio), dtype=bool)
        sr = audio.sample_rate
        for start_s, end_s, _word in self.words:
            lo = max(0, int(np.floor(start_s * sr)))
            hi = min(len(audio), int(np.ceil(end_s * sr)))
            mask[lo:hi] = True
        return mask


@dataclass(frozen=True)
class EnergyVad:
    """Frame-power VAD: dBFS threshold with a trailing hangover."""

    threshold_dbfs: float = -40.0
    frame_ms: float = 10.0
    hangover_ms: float = 10.0

    def sample_mask(self, audio: AudioBuffer) -> np.ndarray:
        frame = max(1, int(round(self.frame_ms * audio.sample_rate / 1000.0)))
        n = len(audio)
        n_frames = (n + frame - 1) // frame
        padded = np.zeros(n_frames * frame)
        padded[:n] = audio.samples
        power = (padded.reshape(n_frames, frame) ** 2).mean(axis=1)
        power_db = 10.0 * np.log10(power + 1e-30)
        active = power_db >= self.threshold_dbfs
        hang = int(np.ceil(self.hangover_ms / self.frame_ms))
        if hang > 0 and active.any():
            extended = active.copy()
            for k in range(1, hang + 1):
                extended[k:] |= active[:-k]
            active = extended
        return np.repeat(active, frame)[:n]


def trim_silence(utterance, authority) -> tuple:
    """Split an utterance into (trimmed utterance, leading clip, trailing clip).

    The authority (``Alignment`` or ``EnergyVad``) supplies a sample-level
    speech mask; the three pieces concatenate back to the original signal
    bit-exactly. Raises ``ValueError`` when the authority marks the whole
    utterance as silence.
    """
    from .simulate import Utterance  # local import, avoids a module cycle

    audio = utterance.audio
    if len(audio) == 0:
        raise ValueError(f"utterance {utterance.id}: empty audio")
    mask = authority.sample_mask(audio)
    if not mask.any():
        raise ValueError(
            f"utterance {utterance.id}: the trimming authority marks the whole "
            "utterance as silence; utterance is unusable"
        )
    start = int(np.argmax(mask))
    end = len(mask) - int(np.argmax(mask[::-1]))
    lead = AudioBuffer(audio.samples[:start], audio.sample_rate)
    trail = AudioBuffer(audio.samples[end:], audio.sample_rate)
    trimmed = Utterance(
        id=utterance.id,
        speaker_id=utterance.speaker_id,
        gender=utterance.gender,
        audio=AudioBuffer(audio.samples[start:end], audio.sample_rate),
        activity=ActivityTrack(mask[start:end]),
        transcript=utterance.transcript,
        lead_silence_power=float(np.mean(lead.samples**2)) if len(lead) else None,
        trail_silence_power=float(np.mean(trail.samples**2)) if len(trail) else None,
    )
    return trimmed, lead, trail
