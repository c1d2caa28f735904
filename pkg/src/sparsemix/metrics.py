"""Separation and transcription quality metrics plus report aggregation."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .dsp import AudioBuffer

SDR_CAP_DB = 100.0

CONDITIONS = (
    "clean",
    "no_separation_oracle_segperm",
    "full_sequence",
    "segmented_oracle",
    "segmented_affinity",
    "segmented_speaker_id",
)


def _as_samples(x) -> np.ndarray:
    return x.samples if isinstance(x, AudioBuffer) else np.asarray(x, dtype=np.float64)


def si_sdr(reference, estimate, cap_db: float = SDR_CAP_DB) -> float:
    """Scale-invariant signal-to-distortion ratio in dB.

    The estimate is projected onto the reference; the ratio of projected
    energy to residual energy is returned, capped to +-``cap_db`` so means
    over perfect or orthogonal estimates stay finite.
    """
    ref = _as_samples(reference)
    est = _as_samples(estimate)
    if ref.size != est.size:
        raise ValueError(f"length mismatch: reference {ref.size}, estimate {est.size}")
    ref_energy = float(ref @ ref)
    if ref_energy <= 0.0:
        raise ValueError("silent reference")
    alpha = float(est @ ref) / ref_energy
    target = alpha * ref
    residual = est - target
    e_target = float(target @ target)
    e_residual = float(residual @ residual)
    if e_target == 0.0:
        return -cap_db
    if e_residual <= e_target * 10.0 ** (-cap_db / 10.0):
        return cap_db
    return float(np.clip(10.0 * np.log10(e_target / e_residual), -cap_db, cap_db))


def sdr(reference, estimate, cap_db: float = SDR_CAP_DB) -> float:
    """Plain (non-scale-invariant) SDR: reference energy over error energy, in dB."""
    ref = _as_samples(reference)
    est = _as_samples(estimate)
    if ref.size != est.size:
        raise ValueError(f"length mismatch: reference {ref.size}, estimate {est.size}")
    ref_energy = float(ref @ ref)
    if ref_energy <= 0.0:
        raise ValueError("silent reference")
    err = float(((ref - est) ** 2).sum())
    if err <= ref_energy * 10.0 ** (-cap_db / 10.0):
        return cap_db
    return float(np.clip(10.0 * np.log10(ref_energy / err), -cap_db, cap_db))


@dataclass(frozen=True)
class SeparationScore:
    """Per-stem scores under the SI-SDR-sum-maximizing track pairing."""

    pairing: Tuple[int, int]  # stem i was matched with track pairing[i]
    si_sdr_db: Tuple[float, float]
    si_sdr_improvement_db: Tuple[float, float]
    sdr_db: Tuple[float, float]
    sdr_improvement_db: Tuple[float, float]


def score_separation(
    stems: Sequence[AudioBuffer],
    tracks: Sequence[AudioBuffer],
    mixture: AudioBuffer,
) -> SeparationScore:
    """Score two estimated tracks against the stems.

    Both track-to-stem bijections are evaluated and the SI-SDR-sum maximizer
    kept; improvements are measured against the mixture used as a degenerate
    estimate of each stem.
    """
    if len(stems) != 2 or len(tracks) != 2:
        raise ValueError("score_separation expects exactly 2 stems and 2 tracks")
    scores = [[si_sdr(s, t) for t in tracks] for s in stems]
    straight = scores[0][0] + scores[1][1]
    crossed = scores[0][1] + scores[1][0]
    pairing = (0, 1) if straight >= crossed else (1, 0)
    baseline = [si_sdr(s, mixture) for s in stems]
    baseline_sdr = [sdr(s, mixture) for s in stems]
    si = tuple(scores[i][pairing[i]] for i in range(2))
    plain = tuple(sdr(stems[i], tracks[pairing[i]]) for i in range(2))
    return SeparationScore(
        pairing=pairing,
        si_sdr_db=si,
        si_sdr_improvement_db=tuple(si[i] - baseline[i] for i in range(2)),
        sdr_db=plain,
        sdr_improvement_db=tuple(plain[i] - baseline_sdr[i] for i in range(2)),
    )


@dataclass(frozen=True)
class WerResult:
    substitutions: int
    deletions: int
    insertions: int
    reference_words: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def undefined(self) -> bool:
        return self.reference_words == 0 and self.errors > 0

    @property
    def wer(self) -> float:
        if self.reference_words == 0:
            return 0.0 if self.errors == 0 else math.inf
        return self.errors / self.reference_words


def wer(reference: Sequence[str], hypothesis: Sequence[str]) -> WerResult:
    """Word error rate from one minimum-cost Levenshtein alignment.

    Unit costs; when several minimum-cost backtraces exist the tie order is
    substitution > deletion > insertion. Empty inputs are legal; an empty
    reference with a nonempty hypothesis yields an undefined-flagged result.
    """
    ref = list(reference)
    hyp = list(hypothesis)
    n, m = len(ref), len(hyp)
    dist = np.zeros((n + 1, m + 1), dtype=np.int64)
    dist[:, 0] = np.arange(n + 1)
    dist[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            sub = dist[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1])
            dist[i, j] = min(sub, dist[i - 1, j] + 1, dist[i, j - 1] + 1)
    s = d = ins = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and dist[i, j] == dist[i - 1, j - 1]:
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and dist[i, j] == dist[i - 1, j - 1] + 1:
            s += 1
            i, j = i - 1, j - 1
        elif i > 0 and dist[i, j] == dist[i - 1, j] + 1:
            d += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return WerResult(substitutions=s, deletions=d, insertions=ins, reference_words=n)


@dataclass(frozen=True)
class ReportRow:
    bin_lo: float
    bin_hi: float
    condition: str
    gender_pairing: str
    mean_wer: Optional[float]
    mean_si_sdr_improvement: Optional[float]
    mean_sdr_improvement: Optional[float]
    n: int
    total_errors: Optional[int]
    total_reference_words: Optional[int]

    @property
    def overlap_bin(self) -> str:
        return f"{self.bin_lo:.2f}-{self.bin_hi:.2f}"

    def to_dict(self) -> dict:
        return {
            "overlap_bin": self.overlap_bin,
            "bin_lo": self.bin_lo,
            "bin_hi": self.bin_hi,
            "condition": self.condition,
            "gender_pairing": self.gender_pairing,
            "mean_wer": self.mean_wer,
            "mean_si_sdr_improvement": self.mean_si_sdr_improvement,
            "mean_sdr_improvement": self.mean_sdr_improvement,
            "n": self.n,
            "total_errors": self.total_errors,
            "total_reference_words": self.total_reference_words,
        }


def _bin_index(value: float, edges: Sequence[float]) -> Optional[int]:
    if value < edges[0] or value > edges[-1]:
        return None
    if value == edges[-1]:
        return len(edges) - 2
    return int(np.searchsorted(edges, value, side="right")) - 1


def aggregate(
    records: Sequence[dict],
    bins: Sequence[float],
    wer_pooling: str = "words",
) -> List[ReportRow]:
    """Pool per-mixture results into (overlap bin x condition x gender pairing) rows.

    WER pools word-weighted by default (total errors over total reference
    words; ``wer_pooling='utterances'`` averages per-mixture WERs instead);
    SI-SDR improvements average unweighted. Gender pairings 'same' and
    'different' come from the records; every record also feeds the 'all' row.
    Empty cells produce no row.
    """
    edges = [float(e) for e in bins]
    if len(edges) < 2 or any(hi <= lo for lo, hi in zip(edges[:-1], edges[1:])):
        raise ValueError(f"bin edges must be strictly increasing, got {edges}")
    if wer_pooling not in ("words", "utterances"):
        raise ValueError(f"unknown wer_pooling {wer_pooling!r}")
    cells: Dict[Tuple[int, str, str], List[dict]] = {}
    for rec in records:
        idx = _bin_index(float(rec["achieved_overlap"]), edges)
        if idx is None:
            continue
        condition = rec["condition"]
        pairings = ["all"]
        if rec.get("gender_pairing") in ("same", "different"):
            pairings.append(rec["gender_pairing"])
        for pairing in pairings:
            cells.setdefault((idx, condition, pairing), []).append(rec)

    rows: List[ReportRow] = []
    order = {"same": 0, "different": 1, "all": 2}
    for (idx, condition, pairing) in sorted(
        cells, key=lambda k: (k[0], k[1], order[k[2]])
    ):
        group = cells[(idx, condition, pairing)]
        wer_group = [r for r in group if r.get("wer_reference_words") is not None]
        total_errors = total_words = None
        mean_wer = None
        if wer_group:
            total_errors = int(sum(r["wer_errors"] for r in wer_group))
            total_words = int(sum(r["wer_reference_words"] for r in wer_group))
            if wer_pooling == "words":
                mean_wer = total_errors / total_words if total_words else math.inf
            else:
                per = [
                    r["wer_errors"] / r["wer_reference_words"]
                    for r in wer_group
                    if r["wer_reference_words"]
                ]
                mean_wer = float(np.mean(per)) if per else None
        si_vals = [
            float(r["si_sdr_improvement_db"])
            for r in group
            if r.get("si_sdr_improvement_db") is not None
        ]
        sdr_vals = [
            float(r["sdr_improvement_db"])
            for r in group
            if r.get("sdr_improvement_db") is not None
        ]
        rows.append(
            ReportRow(
                bin_lo=edges[idx],
                bin_hi=edges[idx + 1],
                condition=condition,
                gender_pairing=pairing,
                mean_wer=mean_wer,
                mean_si_sdr_improvement=float(np.mean(si_vals)) if si_vals else None,
                mean_sdr_improvement=float(np.mean(sdr_vals)) if sdr_vals else None,
                n=len(group),
                total_errors=total_errors,
                total_reference_words=total_words,
            )
        )
    return rows


def rows_to_csv(rows: Sequence[ReportRow]) -> str:
    """Render report rows with the fixed header used by the report command."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(
        ["overlap_bin", "condition", "gender_pairing", "mean_wer", "mean_si_sdr_improvement", "n"]
    )
    for row in rows:
        writer.writerow(
            [
                row.overlap_bin,
                row.condition,
                row.gender_pairing,
                "" if row.mean_wer is None else f"{row.mean_wer:.6f}",
                ""
                if row.mean_si_sdr_improvement is None
                else f"{row.mean_si_sdr_improvement:.6f}",
                row.n,
            ]
        )
    return buf.getvalue()
