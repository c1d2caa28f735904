"""Two-speaker sparse-overlap mixture simulation.

Builds per-speaker signal tracks from three trimmed utterances each, samples
silence-gap lengths so the mixed activity hits a target overlap ratio while
the no-speech fraction of the timeline stays below a threshold, fills gaps
with silence drawn from a bank of trimmed lead/trail clips, and mixes the
tracks at a target speech-only SNR.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import audio_io
from .dsp import ActivityTrack, AudioBuffer, gain_for_snr, speech_energy
from .trim import Alignment, EnergyVad, trim_silence

log = logging.getLogger("sparsemix.simulate")

DEFAULT_MAX_NO_SPEECH = 0.10
DEFAULT_OVERLAP_TOL = 0.01
PEAK_LIMIT = 0.99


@dataclass(frozen=True)
class Utterance:
    id: str
    speaker_id: str
    gender: str = "unknown"
    audio: AudioBuffer = None
    activity: Optional[ActivityTrack] = None
    transcript: Optional[str] = None
    lead_silence_power: Optional[float] = None
    trail_silence_power: Optional[float] = None


@dataclass(frozen=True)
class SilenceClip:
    audio: AudioBuffer
    source_id: str

    @property
    def power(self) -> float:
        return float(np.mean(self.audio.samples**2)) if len(self.audio) else 0.0


@dataclass
class SilenceBank:
    clips: List[SilenceClip] = field(default_factory=list)

    def add(self, audio: AudioBuffer, source_id: str) -> None:
        if len(audio):
            self.clips.append(SilenceClip(audio, source_id))

    def __len__(self) -> int:
        return len(self.clips)


@dataclass(frozen=True)
class GapFillPiece:
    clip_index: int
    clip_offset: int
    length: int
    gain: float


@dataclass(frozen=True)
class GapFill:
    start: int
    end: int
    pieces: Tuple[GapFillPiece, ...] = ()


@dataclass(frozen=True)
class TrackPlan:
    utterance_ids: Tuple[str, ...]
    start_offsets: Tuple[int, ...]
    gap_fills: Tuple[GapFill, ...] = ()

    def to_dict(self) -> dict:
        return {
            "utterance_ids": list(self.utterance_ids),
            "start_offsets": list(self.start_offsets),
            "gap_fills": [
                {
                    "start": g.start,
                    "end": g.end,
                    "pieces": [
                        [p.clip_index, p.clip_offset, p.length, p.gain] for p in g.pieces
                    ],
                }
                for g in self.gap_fills
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrackPlan":
        return cls(
            utterance_ids=tuple(d["utterance_ids"]),
            start_offsets=tuple(int(x) for x in d["start_offsets"]),
            gap_fills=tuple(
                GapFill(
                    start=int(g["start"]),
                    end=int(g["end"]),
                    pieces=tuple(
                        GapFillPiece(int(p[0]), int(p[1]), int(p[2]), float(p[3]))
                        for p in g["pieces"]
                    ),
                )
                for g in d["gap_fills"]
            ),
        )


@dataclass(frozen=True)
class MixtureRecord:
    mixture_id: str
    speaker_a: dict
    speaker_b: dict
    plan_a: TrackPlan
    plan_b: TrackPlan
    relative_shift: int
    timeline_len: int
    target_overlap: float
    achieved_overlap: float
    target_snr_db: float
    interferer_gain: float
    no_speech_ratio: float
    peak_scale: float
    seed: int
    paths: dict

    def to_dict(self) -> dict:
        d = {
            "mixture_id": self.mixture_id,
            "speaker_a": self.speaker_a,
            "speaker_b": self.speaker_b,
            "plan_a": self.plan_a.to_dict(),
            "plan_b": self.plan_b.to_dict(),
            "relative_shift": self.relative_shift,
            "timeline_len": self.timeline_len,
            "target_overlap": self.target_overlap,
            "achieved_overlap": self.achieved_overlap,
            "target_snr_db": self.target_snr_db,
            "interferer_gain": self.interferer_gain,
            "no_speech_ratio": self.no_speech_ratio,
            "peak_scale": self.peak_scale,
            "seed": self.seed,
            "paths": self.paths,
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MixtureRecord":
        return cls(
            mixture_id=d["mixture_id"],
            speaker_a=d["speaker_a"],
            speaker_b=d["speaker_b"],
            plan_a=TrackPlan.from_dict(d["plan_a"]),
            plan_b=TrackPlan.from_dict(d["plan_b"]),
            relative_shift=int(d["relative_shift"]),
            timeline_len=int(d["timeline_len"]),
            target_overlap=float(d["target_overlap"]),
            achieved_overlap=float(d["achieved_overlap"]),
            target_snr_db=float(d["target_snr_db"]),
            interferer_gain=float(d["interferer_gain"]),
            no_speech_ratio=float(d["no_speech_ratio"]),
            peak_scale=float(d["peak_scale"]),
            seed=int(d["seed"]),
            paths=d["paths"],
        )


class InfeasibleOverlapError(ValueError):
    """Raised when no gap/shift placement can satisfy the overlap target."""

    def __init__(self, message: str, feasible_lo: float, feasible_hi: float, constraint: str):
        super().__init__(message)
        self.feasible_lo = feasible_lo
        self.feasible_hi = feasible_hi
        self.constraint = constraint


def measure_overlap(
    act_a: ActivityTrack, act_b: ActivityTrack, definition: str = "iou"
) -> Tuple[float, float]:
    """Overlap ratio and no-speech ratio of two activities on one timeline.

    ``definition='iou'`` divides the simultaneous-speech count by the union of
    speech (0 when the union is empty); ``'mixture_length'`` divides by the
    timeline length.
    """
    if len(act_a) != len(act_b):
        raise ValueError(f"activity lengths differ: {len(act_a)} vs {len(act_b)}")
    total = len(act_a)
    if total == 0:
        raise ValueError("empty activity tracks")
    inter = int((act_a.mask & act_b.mask).sum())
    union = int((act_a.mask | act_b.mask).sum())
    if definition == "iou":
        overlap = inter / union if union else 0.0
    elif definition == "mixture_length":
        overlap = inter / total
    else:
        raise ValueError(f"unknown overlap definition {definition!r}")
    return overlap, 1.0 - union / total


# ---------------------------------------------------------------------------
# Track planning
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlanOutcome:
    plan_a: TrackPlan
    plan_b: TrackPlan
    relative_shift: int
    achieved_overlap: float
    no_speech_ratio: float
    timeline_len: int


def _intervals(lengths: Sequence[int], gaps: Sequence[int]) -> List[Tuple[int, int]]:
    """Speech intervals of a track pattern starting at 0: utt, gap, utt, ..."""
    out = []
    pos = 0
    for i, n in enumerate(lengths):
        out.append((pos, pos + n))
        pos += n
        if i < len(gaps):
            pos += gaps[i]
    return out


def _intersection(a: Sequence[Tuple[int, int]], b: Sequence[Tuple[int, int]], shift: int) -> int:
    total = 0
    for a0, a1 in a:
        for b0, b1 in b:
            lo = max(a0, b0 + shift)
            hi = min(a1, b1 + shift)
            if hi > lo:
                total += hi - lo
    return total


def _placement_stats(
    a: Sequence[Tuple[int, int]],
    b: Sequence[Tuple[int, int]],
    shift: int,
    speech_total: int,
    definition: str,
) -> Tuple[float, float, int, int]:
    """(overlap, no_speech, timeline_len, intersection) for one shift."""
    inter = _intersection(a, b, shift)
    union = speech_total - inter
    end_a = a[-1][1]
    end_b = b[-1][1] + shift
    t0 = min(0, shift)
    t1 = max(end_a, end_b)
    timeline = t1 - t0
    if definition == "iou":
        overlap = inter / union if union else 0.0
    else:
        overlap = inter / timeline
    return overlap, 1.0 - union / timeline, timeline, inter


def plan_tracks(
    utts_a: Sequence[Utterance],
    utts_b: Sequence[Utterance],
    target_overlap: float,
    max_no_speech: float = DEFAULT_MAX_NO_SPEECH,
    tol: float = DEFAULT_OVERLAP_TOL,
    rng_seed: int = 0,
    max_retries: int = 100,
    definition: str = "iou",
) -> PlanOutcome:
    """Place two three-utterance tracks so their mixed activity hits the target.

    Track A's inner gaps are drawn from a seeded budget, track B's gaps
    likewise; the relative shift of B is then found by a 1-D search (the
    intersection is piecewise linear in the shift). Unmet tolerance triggers
    seeded redraws, up to ``max_retries``.
    """
    if not 0.0 <= target_overlap <= 1.0:
        raise ValueError(f"target_overlap must be in [0, 1], got {target_overlap}")
    len_a = [len(u.audio) for u in utts_a]
    len_b = [len(u.audio) for u in utts_b]
    if min(len_a + len_b) <= 0:
        raise ValueError("empty utterance in track plan")
    speech_a, speech_b = sum(len_a), sum(len_b)
    speech_total = speech_a + speech_b
    max_iou = min(speech_a, speech_b) / max(speech_a, speech_b)
    if definition == "iou" and target_overlap > max_iou + tol:
        raise InfeasibleOverlapError(
            f"target overlap {target_overlap} exceeds the feasible maximum "
            f"{max_iou:.4f} set by the unequal total speech durations "
            f"({speech_a} vs {speech_b} samples); feasible interval is "
            f"[0.0, {max_iou:.4f}]",
            feasible_lo=0.0,
            feasible_hi=max_iou,
            constraint="total speech duration ratio",
        )

    rng = np.random.default_rng(rng_seed)
    # Gap budget: keeps no-speech <= max_no_speech for any contiguous-union
    # shift (dead time <= total gaps) and keeps the intersection target
    # reachable (misalignment loss <= total gaps).
    if definition == "iou":
        union_target = speech_total / (1.0 + target_overlap)
        inter_target = speech_total - union_target
    else:
        inter_target = target_overlap * speech_total  # refined per draw below
        union_target = speech_total - inter_target
    headroom = max_no_speech / (1.0 - max_no_speech)
    budget = 0.9 * max(
        0.0, min(headroom * union_target, min(speech_a, speech_b) - inter_target)
    )

    last_best: Optional[Tuple[float, float]] = None
    for _attempt in range(max_retries):
        g_total = rng.uniform(0.0, budget) if budget > 0 else 0.0
        weights = rng.random(4)
        weights = weights / weights.sum() if weights.sum() > 0 else np.full(4, 0.25)
        gaps = np.rint(g_total * weights).astype(int)
        gaps_a, gaps_b = [int(gaps[0]), int(gaps[1])], [int(gaps[2]), int(gaps[3])]
        ivs_a = _intervals(len_a, gaps_a)
        ivs_b = _intervals(len_b, gaps_b)
        end_a, end_b = ivs_a[-1][1], ivs_b[-1][1]

        edges_a = [e for iv in ivs_a for e in iv]
        edges_b = [e for iv in ivs_b for e in iv]
        bps = {ea - eb for ea in edges_a for eb in edges_b}
        bps.update({-end_b, end_a, 0, end_a - end_b})
        bps = sorted(s for s in bps if -end_b <= s <= end_a)

        inter_at = {s: _intersection(ivs_a, ivs_b, s) for s in bps}
        candidates = set(bps)
        for s0, s1 in zip(bps[:-1], bps[1:]):
            i0, i1 = inter_at[s0], inter_at[s1]
            if definition == "iou":
                f0, f1 = i0 - inter_target, i1 - inter_target
            else:
                _, _, t0, _ = _placement_stats(ivs_a, ivs_b, s0, speech_total, definition)
                _, _, t1, _ = _placement_stats(ivs_a, ivs_b, s1, speech_total, definition)
                f0 = i0 - target_overlap * t0
                f1 = i1 - target_overlap * t1
            if f0 == 0.0:
                candidates.add(s0)
            if f0 * f1 < 0:
                frac = f0 / (f0 - f1)
                s_star = int(round(s0 + frac * (s1 - s0)))
                candidates.update({s_star - 1, s_star, s_star + 1})

        best = None
        for s in sorted(candidates):
            if not -end_b <= s <= end_a:
                continue
            overlap, no_speech, timeline, _ = _placement_stats(
                ivs_a, ivs_b, s, speech_total, definition
            )
            key = (abs(overlap - target_overlap), no_speech, abs(s), s)
            if best is None or key < best[0]:
                best = (key, s, overlap, no_speech, timeline)
        if best is None:
            continue
        _, shift, overlap, no_speech, timeline = best
        last_best = (overlap, no_speech)
        if abs(overlap - target_overlap) <= tol and no_speech <= max_no_speech:
            t0 = min(0, shift)
            offs_a = tuple(iv[0] - t0 for iv in ivs_a)
            offs_b = tuple(iv[0] + shift - t0 for iv in ivs_b)
            return PlanOutcome(
                plan_a=TrackPlan(tuple(u.id for u in utts_a), offs_a),
                plan_b=TrackPlan(tuple(u.id for u in utts_b), offs_b),
                relative_shift=shift,
                achieved_overlap=overlap,
                no_speech_ratio=no_speech,
                timeline_len=timeline,
            )

    detail = ""
    if last_best is not None:
        detail = (
            f"; closest placement reached overlap {last_best[0]:.4f} with "
            f"no-speech {last_best[1]:.4f}"
        )
    raise InfeasibleOverlapError(
        f"no placement within tolerance {tol} of overlap {target_overlap} and "
        f"no-speech <= {max_no_speech} after {max_retries} retries"
        f"{detail}; feasible overlap interval is [0.0, {max_iou:.4f}]",
        feasible_lo=0.0,
        feasible_hi=max_iou,
        constraint="overlap tolerance vs no-speech threshold",
    )


# ---------------------------------------------------------------------------
# Gap filling and rendering
# ---------------------------------------------------------------------------


def _speech_spans(
    plan: TrackPlan, utterances: Dict[str, Utterance]
) -> List[Tuple[int, int, Utterance]]:
    spans = []
    for uid, off in zip(plan.utterance_ids, plan.start_offsets):
        u = utterances[uid]
        spans.append((off, off + len(u.audio), u))
    spans.sort(key=lambda s: s[0])
    for (s0, e0, _), (s1, _, _) in zip(spans[:-1], spans[1:]):
        if s1 < e0:
            raise ValueError("utterances overlap within one track plan")
    return spans


def _gap_regions(
    spans: Sequence[Tuple[int, int, Utterance]], timeline_len: int
) -> List[Tuple[int, int, Optional[Utterance], Optional[Utterance]]]:
    """Non-speech runs as (start, end, left neighbor, right neighbor)."""
    regions = []
    if spans[0][0] > 0:
        regions.append((0, spans[0][0], None, spans[0][2]))
    for (s0, e0, u0), (s1, _e1, u1) in zip(spans[:-1], spans[1:]):
        if s1 > e0:
            regions.append((e0, s1, u0, u1))
    if spans[-1][1] < timeline_len:
        regions.append((spans[-1][1], timeline_len, spans[-1][2], None))
    return regions


def _gap_target_power(left: Optional[Utterance], right: Optional[Utterance]) -> Optional[float]:
    """Mean of the adjacent original lead/trail silence powers, if known."""
    vals = []
    if left is not None and left.trail_silence_power is not None:
        vals.append(left.trail_silence_power)
    if right is not None and right.lead_silence_power is not None:
        vals.append(right.lead_silence_power)
    if not vals:
        return None
    return float(np.mean(vals))


def assign_gap_fills(
    plan: TrackPlan,
    utterances: Dict[str, Utterance],
    bank: SilenceBank,
    timeline_len: int,
    rng: np.random.Generator,
) -> TrackPlan:
    """Choose seeded bank draws and gains for every non-speech run of a plan.

    Clips shorter than a gap are concatenated from multiple draws; longer
    clips are cropped from a seeded offset. Each piece is gain-scaled from its
    own mean power so the rendered gap hits the target per-sample power.
    """
    spans = _speech_spans(plan, utterances)
    regions = _gap_regions(spans, timeline_len)
    if not regions:
        return replace(plan, gap_fills=())
    if len(bank) == 0:
        raise ValueError("silence bank is empty but the plan contains gaps")
    fills = []
    for start, end, left, right in regions:
        target = _gap_target_power(left, right)
        pieces = []
        remaining = end - start
        while remaining > 0:
            idx = int(rng.integers(len(bank.clips)))
            clip = bank.clips[idx]
            clip_len = len(clip.audio)
            if clip_len > remaining:
                offset = int(rng.integers(0, clip_len - remaining + 1))
                length = remaining
            else:
                offset, length = 0, clip_len
            piece_power = float(np.mean(clip.audio.samples[offset : offset + length] ** 2))
            if target is None:
                gain = 1.0
            elif piece_power <= 0.0:
                gain = 0.0
            else:
                gain = float(np.sqrt(target / piece_power))
            pieces.append(GapFillPiece(idx, offset, length, gain))
            remaining -= length
        fills.append(GapFill(start, end, tuple(pieces)))
    return replace(plan, gap_fills=tuple(fills))


def render_track(
    plan: TrackPlan,
    utterances: Dict[str, Utterance],
    bank: SilenceBank,
    timeline_len: int,
    sample_rate: int,
) -> Tuple[AudioBuffer, ActivityTrack]:
    """Materialize a plan: speech copied verbatim, gaps from scaled bank pieces.

    The returned activity is true exactly on the speech spans.
    """
    spans = _speech_spans(plan, utterances)
    if spans[-1][1] > timeline_len or spans[0][0] < 0:
        raise ValueError("plan offsets fall outside the timeline")
    samples = np.zeros(timeline_len)
    mask = np.zeros(timeline_len, dtype=bool)
    for start, end, u in spans:
        samples[start:end] = u.audio.samples
        mask[start:end] = True
    regions = _gap_regions(spans, timeline_len)
    if regions and not plan.gap_fills:
        raise ValueError(
            "plan has unfilled gaps; run assign_gap_fills before render_track"
        )
    covered = {(g.start, g.end) for g in plan.gap_fills}
    needed = {(r[0], r[1]) for r in regions}
    if covered != needed:
        raise ValueError(f"gap fills {sorted(covered)} do not match gaps {sorted(needed)}")
    for gap in plan.gap_fills:
        pos = gap.start
        for piece in gap.pieces:
            if piece.clip_index >= len(bank.clips):
                raise ValueError(f"gap fill references missing bank clip {piece.clip_index}")
            clip = bank.clips[piece.clip_index].audio.samples
            chunk = clip[piece.clip_offset : piece.clip_offset + piece.length]
            samples[pos : pos + piece.length] = piece.gain * chunk
            pos += piece.length
        if pos != gap.end:
            raise ValueError(f"gap [{gap.start}, {gap.end}) not fully covered by pieces")
    return AudioBuffer(samples, sample_rate), ActivityTrack(mask)


def mix(
    track_a: AudioBuffer,
    track_b: AudioBuffer,
    act_a: ActivityTrack,
    act_b: ActivityTrack,
    target_snr_db: float,
) -> Tuple[AudioBuffer, float]:
    """Mix two tracks at a target speech-only SNR: ``a + g * b``.

    Energies count speech spans only (the silence fills do not enter the SNR).
    """
    if len(track_a) != len(track_b):
        raise ValueError("tracks must share one timeline")
    e_a = speech_energy(track_a, act_a)
    e_b = speech_energy(track_b, act_b)
    gain = gain_for_snr(target_snr_db, e_a, e_b)
    mixture = AudioBuffer(track_a.samples + gain * track_b.samples, track_a.sample_rate)
    return mixture, gain


def finalize_mixture(
    track_a: AudioBuffer, track_b: AudioBuffer, gain: float, peak_limit: float = PEAK_LIMIT
) -> Tuple[AudioBuffer, AudioBuffer, AudioBuffer, float]:
    """Produce float32-exact stems and mixture plus the common peak scale.

    Stems are rounded to float32 first and the mixture is their float32 sum,
    so the emitted files satisfy stem0 + stem1 == mixture bit-exactly. If any
    peak exceeds ``peak_limit`` all three are scaled by the same factor.
    """
    sr = track_a.sample_rate
    stem0 = track_a.samples.astype(np.float32)
    stem1 = (gain * track_b.samples).astype(np.float32)
    mixture = stem0 + stem1
    peak = float(max(np.abs(mixture).max(initial=0.0), np.abs(stem0).max(initial=0.0), np.abs(stem1).max(initial=0.0)))
    scale = 1.0
    if peak > peak_limit:
        scale = float(np.float32(peak_limit / peak))
        stem0 = (np.float32(scale) * stem0).astype(np.float32)
        stem1 = (np.float32(scale) * stem1).astype(np.float32)
        mixture = stem0 + stem1
    return (
        AudioBuffer(mixture.astype(np.float64), sr),
        AudioBuffer(stem0.astype(np.float64), sr),
        AudioBuffer(stem1.astype(np.float64), sr),
        scale,
    )


# ---------------------------------------------------------------------------
# Corpus loading and full simulation
# ---------------------------------------------------------------------------


@dataclass
class Corpus:
    utterances: Dict[str, Utterance]
    speakers: Dict[str, List[str]]
    bank: SilenceBank
    sample_rate: int


def load_corpus(
    manifest_path: str | Path,
    vad: Optional[EnergyVad] = None,
) -> Corpus:
    """Load a JSONL corpus manifest, trim utterances, and build the silence bank.

    Each line: ``{"id", "speaker_id", "gender", "wav_path", "transcript"?,
    "alignment_path"?}``. Paths resolve relative to the manifest. Utterances
    with an alignment use it as the trimming authority; the energy VAD is the
    fallback.
    """
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    vad = vad or EnergyVad()
    utterances: Dict[str, Utterance] = {}
    speakers: Dict[str, List[str]] = {}
    bank = SilenceBank()
    sample_rate = None
    for line in manifest_path.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        row = json.loads(line)
        wav_path = Path(row["wav_path"])
        if not wav_path.is_absolute():
            wav_path = base / wav_path
        audio = audio_io.read_wav(wav_path)
        if sample_rate is None:
            sample_rate = audio.sample_rate
        elif audio.sample_rate != sample_rate:
            raise ValueError(
                f"{row['id']}: sample rate {audio.sample_rate} differs from corpus "
                f"rate {sample_rate}"
            )
        raw = Utterance(
            id=row["id"],
            speaker_id=row["speaker_id"],
            gender=row.get("gender", "unknown"),
            audio=audio,
            transcript=row.get("transcript"),
        )
        if row.get("alignment_path"):
            align_path = Path(row["alignment_path"])
            if not align_path.is_absolute():
                align_path = base / align_path
            authority = Alignment.from_ctm(align_path, utterance_id=row["id"])
        else:
            authority = vad
        trimmed, lead, trail = trim_silence(raw, authority)
        utterances[trimmed.id] = trimmed
        speakers.setdefault(trimmed.speaker_id, []).append(trimmed.id)
        bank.add(lead, trimmed.id)
        bank.add(trail, trimmed.id)
    if sample_rate is None:
        raise ValueError(f"{manifest_path}: empty corpus manifest")
    return Corpus(utterances, speakers, bank, sample_rate)


def mixture_seed(global_seed: int, index: int) -> int:
    """Stable per-mixture seed derived from the global seed and index."""
    ss = np.random.SeedSequence([int(global_seed), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _uniform_snr_sampler(lo: float, hi: float) -> Callable[[np.random.Generator], float]:
    def sample(rng: np.random.Generator) -> float:
        return float(rng.uniform(lo, hi))

    return sample


def build_mixture(
    corpus: Corpus,
    target_overlap: float,
    seed: int,
    snr_sampler: Callable[[np.random.Generator], float],
    max_no_speech: float = DEFAULT_MAX_NO_SPEECH,
    tol: float = DEFAULT_OVERLAP_TOL,
    definition: str = "iou",
    utts_per_speaker: int = 3,
):
    """Build one mixture: sample speakers/utterances, plan, render, mix.

    Returns ``(record_fields, mixture, stem_a, stem_b, act_a, act_b)`` where
    ``record_fields`` lacks only the id and file paths.
    """
    rng = np.random.default_rng(seed)
    eligible = sorted(s for s, uids in corpus.speakers.items() if len(uids) >= utts_per_speaker)
    if len(eligible) < 2:
        raise ValueError(
            f"corpus needs >= 2 speakers with >= {utts_per_speaker} utterances, "
            f"found {len(eligible)}"
        )
    pair = rng.choice(len(eligible), size=2, replace=False)
    spk_a, spk_b = eligible[int(pair[0])], eligible[int(pair[1])]
    ids_a = [corpus.speakers[spk_a][i] for i in rng.permutation(len(corpus.speakers[spk_a]))[:utts_per_speaker]]
    ids_b = [corpus.speakers[spk_b][i] for i in rng.permutation(len(corpus.speakers[spk_b]))[:utts_per_speaker]]
    utts_a = [corpus.utterances[u] for u in ids_a]
    utts_b = [corpus.utterances[u] for u in ids_b]

    outcome = plan_tracks(
        utts_a,
        utts_b,
        target_overlap,
        max_no_speech=max_no_speech,
        tol=tol,
        rng_seed=seed,
        definition=definition,
    )
    plan_a = assign_gap_fills(
        outcome.plan_a, corpus.utterances, corpus.bank, outcome.timeline_len, rng
    )
    plan_b = assign_gap_fills(
        outcome.plan_b, corpus.utterances, corpus.bank, outcome.timeline_len, rng
    )
    track_a, act_a = render_track(
        plan_a, corpus.utterances, corpus.bank, outcome.timeline_len, corpus.sample_rate
    )
    track_b, act_b = render_track(
        plan_b, corpus.utterances, corpus.bank, outcome.timeline_len, corpus.sample_rate
    )
    measured, no_speech = measure_overlap(act_a, act_b, definition)
    if abs(measured - outcome.achieved_overlap) > 1e-9:
        raise AssertionError(
            f"planned overlap {outcome.achieved_overlap} disagrees with rendered "
            f"activity {measured}"
        )
    snr_db = snr_sampler(rng)
    _, gain = mix(track_a, track_b, act_a, act_b, snr_db)
    mixture, stem_a, stem_b, peak_scale = finalize_mixture(track_a, track_b, gain)

    def _meta(spk: str, utts: List[Utterance]) -> dict:
        transcript = " ".join(u.transcript for u in utts if u.transcript) or None
        return {"id": spk, "gender": utts[0].gender, "transcript": transcript}

    fields = dict(
        speaker_a=_meta(spk_a, utts_a),
        speaker_b=_meta(spk_b, utts_b),
        plan_a=plan_a,
        plan_b=plan_b,
        relative_shift=outcome.relative_shift,
        timeline_len=outcome.timeline_len,
        target_overlap=float(target_overlap),
        achieved_overlap=float(measured),
        target_snr_db=float(snr_db),
        interferer_gain=float(gain),
        no_speech_ratio=float(no_speech),
        peak_scale=float(peak_scale),
        seed=int(seed),
    )
    return fields, mixture, stem_a, stem_b, act_a, act_b


def resynthesize(record: MixtureRecord, corpus: Corpus):
    """Rebuild (mixture, stem_a, stem_b) bit-exactly from a record and corpus."""
    track_a, act_a = render_track(
        record.plan_a, corpus.utterances, corpus.bank, record.timeline_len, corpus.sample_rate
    )
    track_b, act_b = render_track(
        record.plan_b, corpus.utterances, corpus.bank, record.timeline_len, corpus.sample_rate
    )
    mixture, stem_a, stem_b, scale = finalize_mixture(track_a, track_b, record.interferer_gain)
    if abs(scale - record.peak_scale) > 0:
        raise AssertionError("peak scale drifted during re-synthesis")
    return mixture, stem_a, stem_b, act_a, act_b


_WORKER_CORPUS: Optional[Corpus] = None


def _worker_init(corpus: Corpus) -> None:
    global _WORKER_CORPUS
    _WORKER_CORPUS = corpus


def _emit_mixture(args):
    (corpus, target, index, global_seed, snr_lo, snr_hi, max_no_speech, tol, definition, out_dir) = args
    if corpus is None:
        corpus = _WORKER_CORPUS
    seed = mixture_seed(global_seed, index)
    sampler = _uniform_snr_sampler(snr_lo, snr_hi)
    try:
        fields, mixture, stem_a, stem_b, act_a, act_b = build_mixture(
            corpus, target, seed, sampler, max_no_speech=max_no_speech, tol=tol,
            definition=definition,
        )
    except InfeasibleOverlapError as exc:
        return index, None, {
            "index": index,
            "target_overlap": target,
            "reason": str(exc),
        }
    mix_id = f"mix{index:05d}_ov{int(round(target * 100)):03d}"
    paths = {
        "mixture_wav": f"{mix_id}_mix.wav",
        "stem_wavs": [f"{mix_id}_stem0.wav", f"{mix_id}_stem1.wav"],
        "activity_files": [f"{mix_id}_act0.json", f"{mix_id}_act1.json"],
    }
    out_dir = Path(out_dir)
    audio_io.write_wav(out_dir / paths["mixture_wav"], mixture)
    audio_io.write_wav(out_dir / paths["stem_wavs"][0], stem_a)
    audio_io.write_wav(out_dir / paths["stem_wavs"][1], stem_b)
    audio_io.save_activity(out_dir / paths["activity_files"][0], act_a)
    audio_io.save_activity(out_dir / paths["activity_files"][1], act_b)
    record = MixtureRecord(mixture_id=mix_id, paths=paths, **fields)
    return index, record, None


def simulate_corpus(
    corpus: Corpus,
    targets: Sequence[float],
    per_target: int,
    out_dir: str | Path,
    rng_seed: int = 0,
    snr_range: Tuple[float, float] = (0.0, 5.0),
    max_no_speech: float = DEFAULT_MAX_NO_SPEECH,
    tol: float = DEFAULT_OVERLAP_TOL,
    definition: str = "iou",
    jobs: int = 1,
) -> Tuple[List[MixtureRecord], List[dict]]:
    """Simulate ``per_target`` mixtures per overlap target into ``out_dir``.

    Deterministic for a given seed regardless of ``jobs``: every mixture is
    seeded independently from (seed, index). Infeasible mixtures are skipped
    with a logged reason and reported in the returned skip list.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = []
    index = 0
    corpus_arg = corpus if jobs <= 1 else None
    for target in targets:
        for _ in range(per_target):
            tasks.append(
                (corpus_arg, target, index, rng_seed, snr_range[0], snr_range[1],
                 max_no_speech, tol, definition, out_dir)
            )
            index += 1
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(
            max_workers=jobs, initializer=_worker_init, initargs=(corpus,)
        ) as pool:
            results = list(pool.map(_emit_mixture, tasks))
    else:
        results = [_emit_mixture(t) for t in tasks]
    results.sort(key=lambda r: r[0])
    records = [r[1] for r in results if r[1] is not None]
    skips = [r[2] for r in results if r[2] is not None]
    for skip in skips:
        log.warning(
            "skipped mixture index=%d target=%.3f reason=%s",
            skip["index"], skip["target_overlap"], skip["reason"],
        )
    manifest = out_dir / "mixtures.jsonl"
    with manifest.open("w") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict()) + "\n")
    if skips:
        with (out_dir / "skips.jsonl").open("w") as fh:
            for skip in skips:
                fh.write(json.dumps(skip) + "\n")
    return records, skips


def load_records(mixtures_dir: str | Path) -> List[MixtureRecord]:
    path = Path(mixtures_dir) / "mixtures.jsonl"
    records = []
    for line in path.read_text().splitlines():
        if line.strip():
            records.append(MixtureRecord.from_dict(json.loads(line)))
    return records
