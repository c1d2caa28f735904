# # WER scoring and report aggregation
#
# Transcription quality enters through external hypothesis files; the
# toolkit scores them with a Levenshtein alignment (substitutions,
# deletions, insertions) and pools results into the overlap-ratio /
# condition / gender-pairing table that the report command emits as CSV.

import numpy as np

import sparsemix as sm

result = sm.wer("the cat sat on the mat".split(), "the cat on sat the mat".split())
print(f"S={result.substitutions} D={result.deletions} I={result.insertions} "
      f"-> WER {result.wer:.3f} over {result.reference_words} reference words")

# word-weighted pooling: totals, not averages of ratios
rng = np.random.default_rng(3)
records = []
for i in range(40):
    overlap = float(rng.uniform(0, 1))
    words = int(rng.integers(5, 40))
    errors = int(rng.integers(0, words // 2))
    records.append({
        "condition": ["full_sequence", "segmented_oracle"][i % 2],
        "gender_pairing": ["same", "different"][int(rng.integers(2))],
        "achieved_overlap": overlap,
        "si_sdr_improvement_db": float(rng.normal(10, 3)),
        "sdr_improvement_db": float(rng.normal(10, 3)),
        "wer_errors": errors,
        "wer_reference_words": words,
    })

rows = sm.aggregate(records, bins=[0.0, 0.25, 0.5, 0.75, 1.0])
print("\n" + sm.rows_to_csv([r for r in rows if r.gender_pairing == "all"]))

total_errors = sum(r["wer_errors"] for r in records)
pooled = sum(r.total_errors for r in rows if r.gender_pairing == "all")
print(f"error totals conserved across rows: {pooled == total_errors}")
