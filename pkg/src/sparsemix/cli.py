"""Batch front door: simulate -> (oracle-)embed -> separate -> evaluate -> report.

Every command is a pure function of its on-disk inputs, the resolved
RunConfig, and the seed, so reruns are byte-identical. Logs go to stderr as
single-line records; data lands only in files (except ``report --stdout``).
Exit codes: 0 success, 1 hard error, 2 partial (some mixtures skipped).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import __version__, audio_io, metrics
from .config import RunConfig
from .dsp import StftParams, stft
from .separation import (
    EmbeddingTensor,
    oracle_embeddings,
    read_embeddings,
    write_embeddings,
)
from .segments import (
    load_segments,
    oracle_segments,
    save_segments,
    separate_full_sequence,
    separate_segmented,
)
from .simulate import MixtureRecord, load_corpus, load_records, simulate_corpus
from .trim import EnergyVad

log = logging.getLogger("sparsemix")

CONDITION_BY_MODE = {
    ("full", None): "full_sequence",
    ("segmented", "oracle"): "segmented_oracle",
    ("segmented", "affinity"): "segmented_affinity",
    ("segmented", "speaker_id"): "segmented_speaker_id",
    ("none", "oracle"): "no_separation_oracle_segperm",
}


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s %(message)s",
    )


def _stft_params(cfg: RunConfig) -> StftParams:
    return StftParams(
        window_ms=float(cfg["stft_window_ms"]),
        hop_ms=float(cfg["stft_hop_ms"]),
        dft_size=int(cfg["stft_dft_size"]),
    )


def _parse_overlaps(text: str) -> List[float]:
    return [float(x) for x in text.split(",") if x.strip() != ""]


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = RunConfig.resolve(args.config, {
        "seed": args.seed,
        "snr_lo": args.snr_lo,
        "snr_hi": args.snr_hi,
        "overlap_tolerance": args.tol,
        "max_no_speech": args.max_no_speech,
    })
    out_dir = Path(args.out)
    vad = EnergyVad(
        threshold_dbfs=float(cfg["vad_threshold_dbfs"]),
        frame_ms=float(cfg["vad_frame_ms"]),
        hangover_ms=float(cfg["vad_hangover_ms"]),
    )
    corpus = load_corpus(args.corpus, vad=vad)
    targets = _parse_overlaps(args.overlap)
    records, skips = simulate_corpus(
        corpus,
        targets,
        args.per_target,
        out_dir,
        rng_seed=int(cfg["seed"]),
        snr_range=(float(cfg["snr_lo"]), float(cfg["snr_hi"])),
        max_no_speech=float(cfg["max_no_speech"]),
        tol=float(cfg["overlap_tolerance"]),
        definition=str(cfg["overlap_definition"]),
        jobs=args.jobs,
    )
    cfg.dump(out_dir, "simulate")
    log.info("simulate emitted=%d skipped=%d out=%s", len(records), len(skips), out_dir)
    return 2 if skips else 0


def _load_mixture(mix_dir: Path, record: MixtureRecord):
    mixture = audio_io.read_wav(mix_dir / record.paths["mixture_wav"])
    stems = [audio_io.read_wav(mix_dir / p) for p in record.paths["stem_wavs"]]
    acts = [audio_io.load_activity(mix_dir / p) for p in record.paths["activity_files"]]
    return mixture, stems, acts


def cmd_oracle_embed(args: argparse.Namespace) -> int:
    cfg = RunConfig.resolve(args.config, {
        "seed": args.seed,
        "oracle_noise_sigma": args.noise_sigma,
        "embedding_dim": args.dim,
    })
    mix_dir = Path(args.mixtures)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = _stft_params(cfg)
    records = load_records(mix_dir)
    for i, record in enumerate(records):
        _, stems, _ = _load_mixture(mix_dir, record)
        stem_specs = [stft(s, params) for s in stems]
        seed = np.random.SeedSequence([int(cfg["seed"]), i, 0]).generate_state(1)[0]
        emb = oracle_embeddings(
            stem_specs,
            dim=int(cfg["embedding_dim"]),
            noise_sigma=float(cfg["oracle_noise_sigma"]),
            seed=int(seed),
        )
        write_embeddings(emb, out_dir / f"{record.mixture_id}.emb")
        if args.speaker_id:
            sid_seed = np.random.SeedSequence([int(cfg["seed"]), i, 1]).generate_state(1)[0]
            sid = oracle_embeddings(
                stem_specs,
                dim=int(cfg["embedding_dim"]),
                noise_sigma=float(cfg["oracle_noise_sigma"]),
                seed=int(sid_seed),
            )
            write_embeddings(sid, out_dir / f"{record.mixture_id}.spkid.emb")
    cfg.dump(out_dir, "oracle-embed")
    log.info("oracle-embed wrote %d embedding file sets to %s", len(records), out_dir)
    return 0


def _embeddings_for(
    record: MixtureRecord,
    index: int,
    stems,
    params: StftParams,
    cfg: RunConfig,
    source: str,
    suffix: str,
    role: int,
) -> EmbeddingTensor:
    if source == "oracle":
        seed = np.random.SeedSequence([int(cfg["seed"]), index, role]).generate_state(1)[0]
        stem_specs = [stft(s, params) for s in stems]
        return oracle_embeddings(
            stem_specs,
            dim=int(cfg["embedding_dim"]),
            noise_sigma=float(cfg["oracle_noise_sigma"]),
            seed=int(seed),
        )
    path = Path(source) / f"{record.mixture_id}{suffix}"
    if not path.exists():
        raise FileNotFoundError(
            f"missing embedding file {path}; run `sparsemix oracle-embed` or point "
            "--embeddings at a directory of EMB1 files"
        )
    return read_embeddings(path, stft_params=params)


def cmd_separate(args: argparse.Namespace) -> int:
    cfg = RunConfig.resolve(args.config, {
        "seed": args.seed,
        "oracle_noise_sigma": args.noise_sigma,
        "min_segment_frames": args.min_segment_frames,
        "affinity_metric": args.affinity_metric,
        "exclude_bins_below_db": args.exclude_bins_below_db,
    })
    resolver = args.resolver.replace("-", "_") if args.resolver else None
    mode = args.mode
    if mode in ("segmented", "none") and resolver is None:
        log.error("mode %s requires --resolver", mode)
        return 1
    if mode == "none" and resolver != "oracle":
        log.error("mode none (no separation reference) supports only the oracle resolver")
        return 1
    condition = CONDITION_BY_MODE.get((mode, resolver if mode != "full" else None))
    mix_dir = Path(args.mixtures)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = _stft_params(cfg)
    records = load_records(mix_dir)
    try:
        for i, record in enumerate(records):
            mixture, stems, acts = _load_mixture(mix_dir, record)
            mix_spec = stft(mixture, params)
            emb = _embeddings_for(record, i, stems, params, cfg, args.embeddings, ".emb", 0)
            exclude_db = cfg["exclude_bins_below_db"]
            exclude_db = float(exclude_db) if exclude_db is not None else None
            if mode == "full":
                tracks = separate_full_sequence(
                    mix_spec,
                    emb,
                    k=int(cfg["clusters"]),
                    seed=int(cfg["seed"]),
                    stiffness=float(cfg["kmeans_stiffness"]),
                    iters=int(cfg["kmeans_iters"]),
                    out_len=len(mixture),
                    exclude_below_db=exclude_db,
                )
                assignment = None
            else:
                if args.segments:
                    segments = load_segments(Path(args.segments) / f"{record.mixture_id}.segments.json")
                else:
                    segments = oracle_segments(
                        acts[0], acts[1], params, mixture.sample_rate,
                        min_len_frames=int(cfg["min_segment_frames"]),
                    )
                speaker_id_emb = None
                if resolver == "speaker_id":
                    sid_source = args.speaker_id_embeddings or (
                        "oracle" if args.embeddings == "oracle" else None
                    )
                    if sid_source is None:
                        log.error(
                            "resolver speaker-id needs --speaker-id-embeddings DIR "
                            "(or --embeddings oracle to synthesize them)"
                        )
                        return 1
                    speaker_id_emb = _embeddings_for(
                        record, i, stems, params, cfg, sid_source, ".spkid.emb", 1
                    )
                tracks, assignment = separate_segmented(
                    mix_spec,
                    emb,
                    segments,
                    resolver,
                    stems=stems if resolver == "oracle" else None,
                    speaker_id_emb=speaker_id_emb,
                    k=int(cfg["clusters"]),
                    seed=int(cfg["seed"]),
                    stiffness=float(cfg["kmeans_stiffness"]),
                    iters=int(cfg["kmeans_iters"]),
                    mask_multi=(mode != "none"),
                    exhaustive_limit=int(cfg["exhaustive_limit"]),
                    out_len=len(mixture),
                    exclude_below_db=exclude_db,
                    affinity_metric=str(cfg["affinity_metric"]),
                )
                save_segments(out_dir / f"{record.mixture_id}.segments.json", segments)
                (out_dir / f"{record.mixture_id}.assignment.json").write_text(
                    json.dumps(assignment.to_dict()) + "\n"
                )
            for t, track in enumerate(tracks):
                audio_io.write_wav(out_dir / f"{record.mixture_id}_track{t}.wav", track)
    except (FileNotFoundError, ValueError) as exc:
        log.error("separate failed: %s", exc)
        return 1
    cfg.dump(out_dir, "separate")
    (out_dir / "condition.json").write_text(json.dumps({"condition": condition}) + "\n")
    log.info("separate mode=%s resolver=%s mixtures=%d out=%s", mode, resolver, len(records), out_dir)
    return 0


def _read_hypotheses(path: Path) -> Dict[str, List[str]]:
    hyps: Dict[str, List[str]] = {}
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        if "\t" in line:
            key, text = line.split("\t", 1)
        else:
            parts = line.split(None, 1)
            key, text = parts[0], parts[1] if len(parts) > 1 else ""
        hyps[key.strip()] = text.split()
    return hyps


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = RunConfig.resolve(args.config, {})
    mix_dir = Path(args.mixtures)
    tracks_dir = Path(args.tracks)
    records = load_records(mix_dir)
    condition = args.condition
    if condition is None:
        cond_file = tracks_dir / "condition.json"
        if cond_file.exists():
            condition = json.loads(cond_file.read_text())["condition"]
        else:
            condition = "unknown"
    hyps = _read_hypotheses(Path(args.hypothesis)) if args.hypothesis else None
    track_ids = set()
    rows = []
    for record in records:
        mixture, stems, _ = _load_mixture(mix_dir, record)
        tracks = []
        for t in range(2):
            path = tracks_dir / f"{record.mixture_id}_track{t}.wav"
            if not path.exists():
                log.error("missing track file %s", path)
                return 1
            tracks.append(audio_io.read_wav(path))
            track_ids.add(f"{record.mixture_id}_track{t}")
        score = metrics.score_separation(stems, tracks, mixture)
        gender_a = record.speaker_a.get("gender", "unknown")
        gender_b = record.speaker_b.get("gender", "unknown")
        if "unknown" in (gender_a, gender_b):
            pairing = "unknown"
        else:
            pairing = "same" if gender_a == gender_b else "different"
        row = {
            "mixture_id": record.mixture_id,
            "condition": condition,
            "gender_pairing": pairing,
            "target_overlap": record.target_overlap,
            "achieved_overlap": record.achieved_overlap,
            "track_pairing": list(score.pairing),
            "si_sdr_db": list(score.si_sdr_db),
            "si_sdr_improvement_db": float(np.mean(score.si_sdr_improvement_db)),
            "si_sdr_improvement_per_stem_db": list(score.si_sdr_improvement_db),
            "sdr_db": list(score.sdr_db),
            "sdr_improvement_db": float(np.mean(score.sdr_improvement_db)),
            "wer": None,
            "wer_errors": None,
            "wer_reference_words": None,
        }
        if hyps is not None:
            errors = words = 0
            found = False
            transcripts = [
                (record.speaker_a.get("transcript") or "").split(),
                (record.speaker_b.get("transcript") or "").split(),
            ]
            for stem_idx in range(2):
                hyp_id = f"{record.mixture_id}_track{score.pairing[stem_idx]}"
                if hyp_id not in hyps:
                    continue
                found = True
                result = metrics.wer(transcripts[stem_idx], hyps[hyp_id])
                errors += result.errors
                words += result.reference_words
            if found:
                row["wer_errors"] = errors
                row["wer_reference_words"] = words
                row["wer"] = errors / words if words else None
        rows.append(row)
    if hyps is not None:
        unmatched = sorted(set(hyps) - track_ids)
        if unmatched:
            log.error("hypothesis ids with no matching track: %s", ", ".join(unmatched))
            return 1
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    log.info("evaluate wrote %d result rows to %s", len(rows), out_path)
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    cfg = RunConfig.resolve(args.config, {"wer_pooling": args.wer_pooling})
    records = []
    for path in args.results:
        text = Path(path).read_text()
        for line in text.splitlines():
            if line.strip():
                records.append(json.loads(line))
    if not records:
        log.error("no results found in %s", ", ".join(args.results))
        return 1
    bins = (
        [float(x) for x in args.bins.split(",")]
        if args.bins
        else [float(x) for x in cfg["report_bins"]]
    )
    rows = metrics.aggregate(records, bins, wer_pooling=str(cfg["wer_pooling"]))
    if not args.gender_split:
        rows = [r for r in rows if r.gender_pairing == "all"]
    csv_text = metrics.rows_to_csv(rows)
    out_prefix = Path(args.out)
    out_prefix.parent.mkdir(parents=True, exist_ok=True)
    Path(str(out_prefix) + ".csv").write_text(csv_text)
    Path(str(out_prefix) + ".json").write_text(
        json.dumps({"version": __version__, "rows": [r.to_dict() for r in rows]}, indent=2)
        + "\n"
    )
    if args.stdout:
        sys.stdout.write(csv_text)
    log.info("report wrote %d rows to %s.{csv,json}", len(rows), out_prefix)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsemix",
        description="Simulate, separate, and score sparsely overlapping two-speaker speech.",
    )
    parser.add_argument("--version", action="version", version=f"sparsemix {__version__}")
    parser.add_argument("--verbose", action="store_true", help="debug logging to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a sparse-overlap mixture set")
    p.add_argument("--corpus", required=True, help="corpus manifest JSONL")
    p.add_argument("--overlap", required=True, help="comma-separated overlap targets, e.g. 0.2,0.4")
    p.add_argument("--per-target", type=int, default=1)
    p.add_argument("--snr-lo", type=float, default=None)
    p.add_argument("--snr-hi", type=float, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-no-speech", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle-embed", help="emit EMB1 oracle embeddings from stems")
    p.add_argument("--mixtures", required=True)
    p.add_argument("--noise-sigma", type=float, default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--speaker-id", action="store_true", help="also emit speaker-Id embeddings")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_oracle_embed)

    p = sub.add_parser("separate", help="separate mixtures into two speaker tracks")
    p.add_argument("--mixtures", required=True)
    p.add_argument("--mode", choices=["full", "segmented", "none"], default="segmented",
                   help="'none' = no separation of multi segments (reference condition)")
    p.add_argument("--resolver", choices=["oracle", "affinity", "speaker-id"], default=None)
    p.add_argument("--embeddings", default="oracle",
                   help="'oracle' or a directory of EMB1 files")
    p.add_argument("--speaker-id-embeddings", default=None)
    p.add_argument("--segments", default=None,
                   help="directory of externally supplied segments JSON files")
    p.add_argument("--noise-sigma", type=float, default=None)
    p.add_argument("--min-segment-frames", type=int, default=None)
    p.add_argument("--affinity-metric", choices=["pairwise", "centroid"], default=None)
    p.add_argument("--exclude-bins-below-db", type=float, default=None,
                   help="leave bins this far below the peak magnitude out of clustering")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_separate)

    p = sub.add_parser("evaluate", help="score separated tracks against the stems")
    p.add_argument("--mixtures", required=True)
    p.add_argument("--tracks", required=True)
    p.add_argument("--hypothesis", default=None, help="ASR hypotheses: 'id<TAB>words' lines")
    p.add_argument("--condition", default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="aggregate per-mixture results into a report")
    p.add_argument("--results", nargs="+", required=True)
    p.add_argument("--bins", default=None, help="comma-separated overlap bin edges")
    p.add_argument("--gender-split", action="store_true")
    p.add_argument("--wer-pooling", choices=["words", "utterances"], default=None)
    p.add_argument("--stdout", action="store_true", help="also print the CSV to stdout")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True, help="output path prefix (.csv/.json appended)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.verbose)
    try:
        return int(args.func(args))
    except Exception as exc:  # hard error contract: code 1, message on stderr
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
