"""Segment-wise separation and the segment permutation problem.

The mixture timeline is split into single-speaker, multi-speaker, and
no-speech segments (from oracle activity). Multi-speaker segments are
separated by clustering their embeddings locally; single-speaker segments
pass through unprocessed. Three resolvers allocate the per-segment outputs
onto two global speaker tracks: ground-truth correlation against the stems,
grouping of the segments' mean embeddings (affinity), and the same grouping
driven by a second speaker-identification embedding space.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .dsp import ActivityTrack, AudioBuffer, Spectrogram, StftParams, istft
from .separation import (
    EmbeddingTensor,
    kmeans_embed,
    low_energy_exclusion,
    masks_from_labels,
)

SINGLE = "single"
MULTI = "multi"
NONE = "none"

MIN_SEGMENT_FRAMES = 5
EXHAUSTIVE_LIMIT = 20


@dataclass(frozen=True)
class Segment:
    """Frame interval of constant speaker count, half-open in STFT frames."""

    start_frame: int
    end_frame: int
    kind: str
    active: frozenset = frozenset()

    def __post_init__(self) -> None:
        if self.end_frame <= self.start_frame:
            raise ValueError(f"empty segment [{self.start_frame}, {self.end_frame})")
        if self.kind not in (SINGLE, MULTI, NONE):
            raise ValueError(f"unknown segment kind {self.kind!r}")

    @property
    def n_frames(self) -> int:
        return self.end_frame - self.start_frame


@dataclass
class SegmentOutput:
    """Per-segment separation products: local masked spectra and mean embeddings."""

    segment: Segment
    local_specs: Tuple[np.ndarray, ...]
    mean_embeddings: Tuple[np.ndarray, ...]
    speaker_id_means: Optional[Tuple[np.ndarray, ...]] = None


@dataclass
class Assignment:
    """Map from each segment's local speakers to the two global tracks."""

    method: str
    mapping: Dict[int, Tuple[int, ...]]
    fallback_used: bool = False
    flags: Tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "segments": [
                {"segment_index": i, "mapping": list(self.mapping[i])}
                for i in sorted(self.mapping)
            ],
            "fallback_used": self.fallback_used,
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Assignment":
        return cls(
            method=d["method"],
            mapping={int(s["segment_index"]): tuple(s["mapping"]) for s in d["segments"]},
            fallback_used=bool(d.get("fallback_used", False)),
            flags=tuple(d.get("flags", ())),
        )


def save_segments(path: str | Path, segments: Sequence[Segment]) -> None:
    rows = []
    for seg in segments:
        row = {"start_frame": seg.start_frame, "end_frame": seg.end_frame, "kind": seg.kind}
        if seg.active:
            row["speakers"] = sorted(seg.active)
        rows.append(row)
    Path(path).write_text(json.dumps(rows) + "\n")


def load_segments(path: str | Path) -> List[Segment]:
    rows = json.loads(Path(path).read_text())
    return [
        Segment(
            start_frame=int(r["start_frame"]),
            end_frame=int(r["end_frame"]),
            kind=r["kind"],
            active=frozenset(r.get("speakers", ())),
        )
        for r in rows
    ]


def _merge_runs(runs: List[list], min_len: int) -> List[list]:
    """Absorb runs shorter than min_len into a neighboring multi segment if
    any, else into the longer neighbor; coalesce equal neighbors afterwards."""

    def coalesce(rs: List[list]) -> List[list]:
        out = [rs[0]]
        for r in rs[1:]:
            if r[2] == out[-1][2] and r[3] == out[-1][3]:
                out[-1][1] = r[1]
            else:
                out.append(r)
        return out

    runs = coalesce(runs)
    while len(runs) > 1:
        short = None
        for i, run in enumerate(runs):
            if run[1] - run[0] < min_len:
                short = i
                break
        if short is None:
            break
        left = runs[short - 1] if short > 0 else None
        right = runs[short + 1] if short + 1 < len(runs) else None
        candidates = [r for r in (left, right) if r is not None]
        multis = [r for r in candidates if r[2] == MULTI]
        pool = multis if multis else candidates
        # longer neighbor wins; ties go left
        target = max(pool, key=lambda r: (r[1] - r[0], r is left))
        if target is left:
            left[1] = runs[short][1]
        else:
            right[0] = runs[short][0]
        del runs[short]
        runs = coalesce(runs)
    return runs


def oracle_segments(
    act_a: ActivityTrack,
    act_b: ActivityTrack,
    params: StftParams,
    sample_rate: int = 16000,
    min_len_frames: int = MIN_SEGMENT_FRAMES,
) -> List[Segment]:
    """Oracle segmentation from the two ground-truth activity tracks.

    A frame counts as active for a speaker when at least half of its hop span
    is active; maximal runs of constant (kind, speaker set) become segments,
    and runs shorter than ``min_len_frames`` are merged away. The result is
    sorted, disjoint, and covers every frame.
    """
    if len(act_a) != len(act_b):
        raise ValueError(f"activity lengths differ: {len(act_a)} vs {len(act_b)}")
    fa = act_a.frame_activity(params, sample_rate)
    fb = act_b.frame_activity(params, sample_rate)
    n = fa.size
    runs: List[list] = []  # [start, end, kind, active frozenset]
    for t in range(n):
        active = frozenset(i for i, on in enumerate((fa[t], fb[t])) if on)
        kind = (NONE, SINGLE, MULTI)[len(active)]
        if runs and runs[-1][2] == kind and runs[-1][3] == active:
            runs[-1][1] = t + 1
        else:
            runs.append([t, t + 1, kind, active])
    runs = _merge_runs(runs, min_len_frames)
    return [Segment(r[0], r[1], r[2], r[3]) for r in runs]


def _local_mean(emb_values: np.ndarray, bin_mask: Optional[np.ndarray]) -> np.ndarray:
    flat = emb_values.reshape(-1, emb_values.shape[-1]).astype(np.float64)
    if bin_mask is None:
        return flat.mean(axis=0)
    sel = flat[bin_mask.reshape(-1)]
    return sel.mean(axis=0) if sel.size else np.zeros(flat.shape[1])


def compute_segment_outputs(
    mix_spec: Spectrogram,
    emb: EmbeddingTensor,
    segments: Sequence[Segment],
    k: int = 2,
    seed: int = 0,
    stiffness: float = 50.0,
    iters: int = 20,
    speaker_id_emb: Optional[EmbeddingTensor] = None,
    mask_multi: bool = True,
    exclude_below_db: Optional[float] = None,
) -> List[SegmentOutput]:
    """Cluster each multi segment locally and collect per-segment outputs.

    Single-speaker segments are copied unprocessed (one local speaker);
    no-speech segments produce no locals. With ``mask_multi=False`` the multi
    segments are not separated: both locals carry the unmasked region (the
    no-separation reference condition).
    """
    if emb.n_frames != mix_spec.n_frames or emb.n_bins != mix_spec.n_bins:
        raise ValueError(
            f"embedding grid {emb.values.shape[:2]} does not match spectrogram "
            f"{mix_spec.bins.shape}"
        )
    if speaker_id_emb is not None and (
        speaker_id_emb.n_frames != mix_spec.n_frames
        or speaker_id_emb.n_bins != mix_spec.n_bins
    ):
        raise ValueError("speaker-Id embedding grid does not match the spectrogram")
    outputs = []
    for seg in segments:
        region = (seg.start_frame, seg.end_frame)
        spec_region = mix_spec.bins[seg.start_frame : seg.end_frame]
        emb_region = emb.values[seg.start_frame : seg.end_frame]
        sid_region = (
            speaker_id_emb.values[seg.start_frame : seg.end_frame]
            if speaker_id_emb is not None
            else None
        )
        if seg.kind == NONE:
            outputs.append(SegmentOutput(seg, (), ()))
            continue
        if seg.kind == SINGLE:
            means = (_local_mean(emb_region, None),)
            sid = (_local_mean(sid_region, None),) if sid_region is not None else None
            outputs.append(SegmentOutput(seg, (spec_region.copy(),), means, sid))
            continue
        if not mask_multi:
            mean = _local_mean(emb_region, None)
            sid_mean = _local_mean(sid_region, None) if sid_region is not None else None
            outputs.append(
                SegmentOutput(
                    seg,
                    (spec_region.copy(), spec_region.copy()),
                    (mean, mean.copy()),
                    (sid_mean, sid_mean.copy()) if sid_mean is not None else None,
                )
            )
            continue
        exclude = (
            low_energy_exclusion(mix_spec, exclude_below_db, region=region)
            if exclude_below_db is not None
            else None
        )
        result = kmeans_embed(
            emb, k, region=region, iters=iters, stiffness=stiffness, seed=seed,
            exclude=exclude,
        )
        mask = masks_from_labels(result)
        local_specs = tuple(spec_region * mask.values[j] for j in range(k))
        means = []
        for j in range(k):
            sel = mask.values[j]
            m = _local_mean(emb_region, sel)
            if not sel.any():
                m = result.centroids[j].copy()
            means.append(m)
        sid = (
            tuple(_local_mean(sid_region, mask.values[j]) for j in range(k))
            if sid_region is not None
            else None
        )
        outputs.append(SegmentOutput(seg, local_specs, tuple(means), sid))
    return outputs


# ---------------------------------------------------------------------------
# Resolvers
# ---------------------------------------------------------------------------


def _local_waveform(local_spec: np.ndarray, segment: Segment, mix_spec: Spectrogram) -> np.ndarray:
    """Waveform of one local output over its segment span (zero-padded grid)."""
    grid = np.zeros(mix_spec.bins.shape, dtype=np.complex128)
    grid[segment.start_frame : segment.end_frame] = local_spec
    buf = istft(Spectrogram(grid, mix_spec.params, mix_spec.sample_rate))
    hop = mix_spec.params.hop_length(mix_spec.sample_rate)
    win = mix_spec.params.win_length(mix_spec.sample_rate)
    lo = segment.start_frame * hop
    hi = min((segment.end_frame - 1) * hop + win, len(buf))
    return buf.samples[lo:hi]


def _norm_corr(x: np.ndarray, y: np.ndarray) -> float:
    nx = float(np.linalg.norm(x))
    ny = float(np.linalg.norm(y))
    if nx == 0.0 or ny == 0.0:
        return 0.0
    return float(np.dot(x, y) / (nx * ny))


def resolve_oracle(
    seg_outputs: Sequence[SegmentOutput],
    stems: Sequence[AudioBuffer],
    mix_spec: Spectrogram,
) -> Assignment:
    """Allocate each local output to the stem it correlates with most.

    Zero-lag normalized correlation over the segment's sample span; multi
    segments pick the correlation-sum-maximizing bijection. Segments whose
    stems are silent over the span go to track 0 and are flagged.
    """
    if len(stems) != 2:
        raise ValueError("oracle resolver expects exactly 2 stems")
    params = mix_spec.params
    sr = mix_spec.sample_rate
    hop = params.hop_length(sr)
    mapping: Dict[int, Tuple[int, ...]] = {}
    flags: List[str] = []
    for idx, out in enumerate(seg_outputs):
        if not out.local_specs:
            continue
        start = out.segment.start_frame * hop
        corr = np.zeros((len(out.local_specs), 2))
        stems_silent = True
        for li, local_spec in enumerate(out.local_specs):
            wave = _local_waveform(local_spec, out.segment, mix_spec)
            for si, stem in enumerate(stems):
                span = stem.samples[start : start + wave.size]
                w = wave[: span.size]
                if float(np.linalg.norm(span)) > 0.0:
                    stems_silent = False
                corr[li, si] = _norm_corr(w, span)
        if stems_silent:
            mapping[idx] = tuple(0 for _ in out.local_specs)
            flags.append(f"segment {idx}: stems silent over span, defaulted to track 0")
            continue
        if len(out.local_specs) == 1:
            mapping[idx] = (int(corr[0].argmax()),)
        else:
            straight = corr[0, 0] + corr[1, 1]
            crossed = corr[0, 1] + corr[1, 0]
            mapping[idx] = (0, 1) if straight >= crossed else (1, 0)
    return Assignment(method="oracle", mapping=mapping, flags=tuple(flags))


def _pair_scores(vectors: List[Tuple[np.ndarray, np.ndarray]]) -> Tuple[np.ndarray, np.ndarray]:
    """For each multi-segment pair: within-track distance sums for equal/opposite bits."""
    s = len(vectors)
    same = np.zeros((s, s))
    diff = np.zeros((s, s))
    for i, j in combinations(range(s), 2):
        vi0, vi1 = vectors[i]
        vj0, vj1 = vectors[j]
        same[i, j] = np.linalg.norm(vi0 - vj0) + np.linalg.norm(vi1 - vj1)
        diff[i, j] = np.linalg.norm(vi0 - vj1) + np.linalg.norm(vi1 - vj0)
    return same, diff


def _exhaustive_bits(
    vectors: List[Tuple[np.ndarray, np.ndarray]], metric: str = "pairwise"
) -> np.ndarray:
    """Joint permutation over multi segments minimizing the grouping score.

    The score is the per-track mean pairwise distance among the grouped mean
    vectors (default) or the mean distance to the track centroid. The first
    segment anchors the track identity, so 2**(S-1) joint options are scored;
    ties resolve to the lexicographically smallest bit vector.
    """
    s = len(vectors)
    if s == 1:
        return np.zeros(1, dtype=np.int64)
    n_opts = 1 << (s - 1)
    opts = np.arange(n_opts, dtype=np.uint64)
    bits = np.zeros((n_opts, s), dtype=np.uint8)
    for pos in range(s - 1):
        bits[:, pos + 1] = (opts >> np.uint64(pos)) & np.uint64(1)
    if metric == "pairwise":
        same, diff = _pair_scores(vectors)
        scores = np.zeros(n_opts)
        for i, j in combinations(range(s), 2):
            disagree = bits[:, i] != bits[:, j]
            scores += np.where(disagree, diff[i, j], same[i, j])
    elif metric == "centroid":
        v0 = np.stack([v[0] for v in vectors])  # [S, D]
        v1 = np.stack([v[1] for v in vectors])
        scores = np.empty(n_opts)
        chunk = 4096
        for lo in range(0, n_opts, chunk):
            b = bits[lo : lo + chunk, :, None].astype(np.float64)
            t0 = v0[None] * (1.0 - b) + v1[None] * b  # [P, S, D]
            t1 = (v0 + v1)[None] - t0
            part = np.zeros(b.shape[0])
            for t in (t0, t1):
                c = t.mean(axis=1, keepdims=True)
                part += np.linalg.norm(t - c, axis=2).mean(axis=1)
            scores[lo : lo + chunk] = part
    else:
        raise ValueError(f"unknown affinity metric {metric!r}")
    best = int(np.argmin(scores))  # argmin takes the first = lexicographically smallest
    return bits[best].astype(np.int64)


def _greedy_bits(vectors: List[Tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    """Sequential fallback: each segment locally optimal against running track means."""
    s = len(vectors)
    bits = np.zeros(s, dtype=np.int64)
    groups = [[vectors[0][0]], [vectors[0][1]]]
    for i in range(1, s):
        m0 = np.mean(groups[0], axis=0)
        m1 = np.mean(groups[1], axis=0)
        v0, v1 = vectors[i]
        straight = np.linalg.norm(v0 - m0) + np.linalg.norm(v1 - m1)
        crossed = np.linalg.norm(v0 - m1) + np.linalg.norm(v1 - m0)
        bits[i] = 0 if straight <= crossed else 1
        groups[0].append(vectors[i][bits[i]])
        groups[1].append(vectors[i][1 - bits[i]])
    return bits


def _split_singles(
    means: List[np.ndarray], exhaustive_limit: int, metric: str = "pairwise"
) -> Tuple[np.ndarray, bool]:
    """Group single-speaker segments when no multi segment anchors the tracks.

    Same objective as the joint permutation search, applied to the single
    segments' mean vectors directly (each contributes one vector to one track).
    """
    n = len(means)
    if n == 1:
        return np.zeros(1, dtype=np.int64), False
    if n <= exhaustive_limit:
        best_bits, best_score = None, None
        for opt in range(1 << (n - 1)):
            bits = [0] + [(opt >> p) & 1 for p in range(n - 1)]
            score = 0.0
            for track in (0, 1):
                group = [means[i] for i in range(n) if bits[i] == track]
                if len(group) >= 2:
                    if metric == "pairwise":
                        dists = [
                            np.linalg.norm(a - b) for a, b in combinations(group, 2)
                        ]
                    else:
                        centroid = np.mean(group, axis=0)
                        dists = [np.linalg.norm(g - centroid) for g in group]
                    score += float(np.mean(dists))
            if best_score is None or score < best_score:
                best_bits, best_score = bits, score
        return np.asarray(best_bits, dtype=np.int64), False
    bits = np.zeros(n, dtype=np.int64)
    groups = [[means[0]], []]
    for i in range(1, n):
        d0 = np.linalg.norm(means[i] - np.mean(groups[0], axis=0))
        d1 = np.linalg.norm(means[i] - np.mean(groups[1], axis=0)) if groups[1] else np.inf
        if groups[1] and d1 < d0:
            bits[i] = 1
        elif not groups[1] and d0 > 0:
            bits[i] = 1  # open the second track on the first non-identical mean
        groups[bits[i]].append(means[i])
    return bits, True


def _resolve_by_means(
    seg_outputs: Sequence[SegmentOutput],
    method: str,
    vectors_of,
    exhaustive_limit: int = EXHAUSTIVE_LIMIT,
    metric: str = "pairwise",
) -> Assignment:
    multi_idx = [i for i, o in enumerate(seg_outputs) if len(o.local_specs) == 2]
    single_idx = [i for i, o in enumerate(seg_outputs) if len(o.local_specs) == 1]
    mapping: Dict[int, Tuple[int, ...]] = {}
    fallback = False

    if multi_idx:
        vectors = [
            (vectors_of(seg_outputs[i])[0], vectors_of(seg_outputs[i])[1])
            for i in multi_idx
        ]
        if len(vectors) <= exhaustive_limit:
            bits = _exhaustive_bits(vectors, metric)
        else:
            bits = _greedy_bits(vectors)
            fallback = True
        groups: List[List[np.ndarray]] = [[], []]
        for b, (v0, v1) in zip(bits, vectors):
            groups[int(b)].append(v0)
            groups[1 - int(b)].append(v1)
        for i, b in zip(multi_idx, bits):
            mapping[i] = (int(b), 1 - int(b))
        track_means = [np.mean(g, axis=0) for g in groups]
        for i in single_idx:
            v = vectors_of(seg_outputs[i])[0]
            d0 = np.linalg.norm(v - track_means[0])
            d1 = np.linalg.norm(v - track_means[1])
            mapping[i] = (0 if d0 <= d1 else 1,)
    elif single_idx:
        means = [vectors_of(seg_outputs[i])[0] for i in single_idx]
        bits, fallback = _split_singles(means, exhaustive_limit, metric)
        for i, b in zip(single_idx, bits):
            mapping[i] = (int(b),)
    return Assignment(method=method, mapping=mapping, fallback_used=fallback)


def resolve_affinity(
    seg_outputs: Sequence[SegmentOutput],
    exhaustive_limit: int = EXHAUSTIVE_LIMIT,
    metric: str = "pairwise",
) -> Assignment:
    """Permutation resolution by grouping the segments' mean embedding vectors.

    Multi segments are jointly permuted to minimize the summed mean pairwise
    distance within each track's group of mean vectors (``metric='centroid'``
    scores mean distance to the group centroid instead); single segments then
    attach to the nearest per-track mean embedding.
    """
    for i, o in enumerate(seg_outputs):
        if o.local_specs and not o.mean_embeddings:
            raise ValueError(f"segment {i} carries no mean embeddings")
    return _resolve_by_means(
        seg_outputs, "affinity", lambda o: o.mean_embeddings, exhaustive_limit, metric
    )


def resolve_speaker_id(
    seg_outputs: Sequence[SegmentOutput],
    exhaustive_limit: int = EXHAUSTIVE_LIMIT,
    metric: str = "pairwise",
) -> Assignment:
    """Affinity-style resolution driven by the speaker-Id embedding means."""
    for i, o in enumerate(seg_outputs):
        if o.local_specs and o.speaker_id_means is None:
            raise ValueError(
                f"segment {i} has no speaker-Id means; supply the speaker-Id "
                "embedding file alongside the separation embeddings"
            )
    return _resolve_by_means(
        seg_outputs, "speaker_id", lambda o: o.speaker_id_means, exhaustive_limit, metric
    )


# ---------------------------------------------------------------------------
# Stitching and the two separation modes
# ---------------------------------------------------------------------------


def stitch_tracks(
    mix_spec: Spectrogram,
    segments: Sequence[Segment],
    seg_outputs: Sequence[SegmentOutput],
    assignment: Assignment,
    out_len: Optional[int] = None,
) -> List[AudioBuffer]:
    """Assemble per-track spectrograms from the assigned segment regions,
    invert each once, and restore the unprocessed single-speaker spans.

    Masked (multi) regions fade in and out over one window at their
    boundaries, the only discontinuity the assembly introduces. Single
    segments are unprocessed by definition, so their sample spans are the
    mixture's samples verbatim on the assigned track; no-speech segments and
    unowned spans stay silent apart from neighboring window decays.
    """
    grids = np.zeros((2,) + mix_spec.bins.shape, dtype=np.complex128)
    verbatim: List[List[Tuple[int, int]]] = [[], []]
    hop = mix_spec.params.hop_length(mix_spec.sample_rate)
    n_frames = mix_spec.n_frames
    for idx, out in enumerate(seg_outputs):
        if not out.local_specs:
            continue
        if idx not in assignment.mapping:
            raise ValueError(f"segment {idx} has no track assignment")
        tracks = assignment.mapping[idx]
        if len(tracks) != len(out.local_specs):
            raise ValueError(
                f"segment {idx}: {len(out.local_specs)} locals but mapping {tracks}"
            )
        seg = out.segment
        for local_spec, track in zip(out.local_specs, tracks):
            grids[track][seg.start_frame : seg.end_frame] = local_spec
        if seg.kind == SINGLE:
            verbatim[tracks[0]].append((seg.start_frame, seg.end_frame))
    mixture = istft(mix_spec, out_len)
    outputs = []
    for track in range(2):
        buf = istft(
            Spectrogram(grids[track], mix_spec.params, mix_spec.sample_rate), out_len
        )
        samples = buf.samples.copy()
        for start_frame, end_frame in verbatim[track]:
            lo = start_frame * hop
            hi = len(samples) if end_frame >= n_frames else min(end_frame * hop, len(samples))
            samples[lo:hi] = mixture.samples[lo:hi]
        outputs.append(AudioBuffer(samples, mix_spec.sample_rate))
    return outputs


def separate_full_sequence(
    mix_spec: Spectrogram,
    emb: EmbeddingTensor,
    k: int = 2,
    seed: int = 0,
    stiffness: float = 50.0,
    iters: int = 20,
    out_len: Optional[int] = None,
    exclude_below_db: Optional[float] = None,
) -> List[AudioBuffer]:
    """One global clustering over all frames, masks, and inversion per speaker."""
    if emb.n_frames != mix_spec.n_frames or emb.n_bins != mix_spec.n_bins:
        raise ValueError("embedding grid does not match the spectrogram")
    exclude = (
        low_energy_exclusion(mix_spec, exclude_below_db)
        if exclude_below_db is not None
        else None
    )
    result = kmeans_embed(
        emb, k, iters=iters, stiffness=stiffness, seed=seed, exclude=exclude
    )
    from .separation import apply_masks

    return apply_masks(mix_spec, masks_from_labels(result), out_len)


def validate_segments(segments: Sequence[Segment], n_frames: int) -> None:
    if not segments:
        raise ValueError("empty segment list")
    pos = 0
    for seg in segments:
        if seg.start_frame != pos:
            raise ValueError(
                f"segments must be sorted, disjoint, and covering: gap or overlap "
                f"at frame {pos} (next segment starts at {seg.start_frame})"
            )
        pos = seg.end_frame
    if pos != n_frames:
        raise ValueError(f"segments cover [0, {pos}) but the signal has {n_frames} frames")


def separate_segmented(
    mix_spec: Spectrogram,
    emb: EmbeddingTensor,
    segments: Sequence[Segment],
    resolver: str,
    stems: Optional[Sequence[AudioBuffer]] = None,
    speaker_id_emb: Optional[EmbeddingTensor] = None,
    k: int = 2,
    seed: int = 0,
    stiffness: float = 50.0,
    iters: int = 20,
    mask_multi: bool = True,
    exhaustive_limit: int = EXHAUSTIVE_LIMIT,
    out_len: Optional[int] = None,
    exclude_below_db: Optional[float] = None,
    affinity_metric: str = "pairwise",
) -> Tuple[List[AudioBuffer], Assignment]:
    """Segment-wise separation: cluster multi segments locally, copy single
    segments unprocessed, resolve the permutation, and stitch two tracks."""
    if k != 2:
        raise ValueError("segmented separation targets a fixed number of 2 speaker tracks")
    validate_segments(segments, mix_spec.n_frames)
    seg_outputs = compute_segment_outputs(
        mix_spec,
        emb,
        segments,
        k=k,
        seed=seed,
        stiffness=stiffness,
        iters=iters,
        speaker_id_emb=speaker_id_emb,
        mask_multi=mask_multi,
        exclude_below_db=exclude_below_db,
    )
    if resolver == "oracle":
        if stems is None:
            raise ValueError("oracle resolver requires the ground-truth stems")
        assignment = resolve_oracle(seg_outputs, stems, mix_spec)
    elif resolver == "affinity":
        assignment = resolve_affinity(seg_outputs, exhaustive_limit, affinity_metric)
    elif resolver == "speaker_id":
        assignment = resolve_speaker_id(seg_outputs, exhaustive_limit, affinity_metric)
    else:
        raise ValueError(f"unknown resolver {resolver!r}")
    tracks = stitch_tracks(mix_spec, segments, seg_outputs, assignment, out_len)
    return tracks, assignment
