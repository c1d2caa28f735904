# # Build a toy corpus
#
# All demos work on a small synthetic corpus: 4 speakers x 3 utterances.
# Each speaker is a distinct bin-exact tone with speech-like onset ramps,
# padded by low-level noise so trimming has real silence to harvest. Exact
# CTM alignment files ride along, like forced alignments would for real data.

from pathlib import Path

import sparsemix as sm
from sparsemix.synthetic import make_toy_corpus

out = Path("demo_output/corpus")
manifest = make_toy_corpus(out, n_speakers=4, durations_s=(0.8, 1.1, 0.6), seed=1234)
print(f"wrote corpus manifest to {manifest}")

corpus = sm.load_corpus(manifest)
print(f"speakers: {sorted(corpus.speakers)}")
print(f"silence bank clips harvested during trimming: {len(corpus.bank)}")
for uid in corpus.speakers["spk0"]:
    u = corpus.utterances[uid]
    print(
        f"  {uid}: {u.audio.duration_s:.2f}s speech, lead/trail silence power "
        f"{u.lead_silence_power:.2e} / {u.trail_silence_power:.2e}"
    )
