import math

import numpy as np
import pytest

import sparsemix as sm

from conftest import random_audio

SR = 16000


# ---------------------------------------------------------------------------
# si_sdr / sdr
# ---------------------------------------------------------------------------


def test_si_sdr_perfect_hits_cap():
    x = random_audio(0.3, 1)
    assert sm.si_sdr(x, x) == 100.0
    assert sm.si_sdr(x, sm.AudioBuffer(3.0 * x.samples)) == 100.0


def test_si_sdr_orthogonal_equal_energy_noise_is_zero_db():
    rng = np.random.default_rng(2)
    ref = rng.standard_normal(4000)
    noise = rng.standard_normal(4000)
    noise -= (noise @ ref) / (ref @ ref) * ref  # orthogonalize
    noise *= np.linalg.norm(ref) / np.linalg.norm(noise)
    est = ref + noise
    assert sm.si_sdr(sm.AudioBuffer(0.1 * ref), sm.AudioBuffer(0.1 * est)) == pytest.approx(
        0.0, abs=1e-9
    )


def test_si_sdr_matches_direct_formula():
    rng = np.random.default_rng(3)
    for _ in range(30):
        ref = rng.standard_normal(2000)
        est = rng.standard_normal(2000)
        alpha = (est @ ref) / (ref @ ref)
        target = alpha * ref
        expected = 10 * np.log10((target @ target) / ((est - target) @ (est - target)))
        got = sm.si_sdr(sm.AudioBuffer(0.05 * ref), sm.AudioBuffer(0.05 * est))
        assert got == pytest.approx(expected, abs=1e-9)


def test_si_sdr_scale_invariance():
    rng = np.random.default_rng(4)
    ref = sm.AudioBuffer(0.1 * rng.standard_normal(3000))
    est = rng.standard_normal(3000) * 0.1
    base = sm.si_sdr(ref, sm.AudioBuffer(est))
    for alpha in (0.01, 0.5, 2.0, -3.0, 100.0):
        assert sm.si_sdr(ref, sm.AudioBuffer(alpha * est)) == pytest.approx(base, abs=1e-9)


def test_si_sdr_errors():
    est = random_audio(0.01, 5)
    with pytest.raises(ValueError, match="silent"):
        sm.si_sdr(sm.AudioBuffer(np.zeros(len(est))), est)
    with pytest.raises(ValueError, match="length"):
        sm.si_sdr(random_audio(0.01, 5), random_audio(0.02, 6))


def test_sdr_plain_matches_formula():
    rng = np.random.default_rng(6)
    ref = rng.standard_normal(1000) * 0.2
    est = ref + 0.02 * rng.standard_normal(1000)
    expected = 10 * np.log10((ref @ ref) / (((ref - est) ** 2).sum()))
    assert sm.sdr(sm.AudioBuffer(ref), sm.AudioBuffer(est)) == pytest.approx(expected, abs=1e-9)


# ---------------------------------------------------------------------------
# score_separation
# ---------------------------------------------------------------------------


def test_score_separation_swapped_tracks():
    s0 = random_audio(0.2, 7)
    s1 = random_audio(0.2, 8)
    mixture = sm.AudioBuffer(s0.samples + s1.samples)
    score = sm.score_separation([s0, s1], [s1, s0], mixture)
    assert score.pairing == (1, 0)
    assert score.si_sdr_db == (100.0, 100.0)


def test_score_separation_mixture_as_tracks_zero_improvement():
    s0 = random_audio(0.2, 9)
    s1 = random_audio(0.2, 10)
    mixture = sm.AudioBuffer(s0.samples + s1.samples)
    score = sm.score_separation([s0, s1], [mixture, mixture], mixture)
    assert score.si_sdr_improvement_db == pytest.approx((0.0, 0.0), abs=1e-9)


def test_score_separation_permutation_invariance():
    rng = np.random.default_rng(11)
    s0, s1 = random_audio(0.2, 12), random_audio(0.2, 13)
    mixture = sm.AudioBuffer(s0.samples + s1.samples)
    t0 = sm.AudioBuffer(s0.samples + 0.01 * rng.standard_normal(len(s0)))
    t1 = sm.AudioBuffer(s1.samples + 0.01 * rng.standard_normal(len(s1)))
    a = sm.score_separation([s0, s1], [t0, t1], mixture)
    b = sm.score_separation([s0, s1], [t1, t0], mixture)
    assert sorted(a.si_sdr_db) == pytest.approx(sorted(b.si_sdr_db), abs=1e-12)


# ---------------------------------------------------------------------------
# wer
# ---------------------------------------------------------------------------


def test_wer_identical():
    words = "a b c d e".split()
    result = sm.wer(words, words)
    assert (result.substitutions, result.deletions, result.insertions) == (0, 0, 0)
    assert result.wer == 0.0


def test_wer_empty_hypothesis_all_deletions():
    result = sm.wer("a b c".split(), [])
    assert result.deletions == 3
    assert result.wer == 1.0


def test_wer_worked_insertion_example():
    result = sm.wer("the cat sat".split(), "the cat on sat".split())
    assert result.insertions == 1
    assert result.substitutions == 0
    assert result.deletions == 0
    assert result.wer == pytest.approx(1 / 3)


def test_wer_empty_reference_flags_undefined():
    result = sm.wer([], "a b".split())
    assert result.insertions == 2
    assert result.undefined
    assert math.isinf(result.wer)
    both_empty = sm.wer([], [])
    assert both_empty.wer == 0.0
    assert not both_empty.undefined


def test_wer_substitution_preferred_in_ties():
    result = sm.wer(["x"], ["y"])
    assert result.substitutions == 1
    assert result.deletions == 0
    assert result.insertions == 0


def _levenshtein_oracle(ref, hyp):
    prev = list(range(len(hyp) + 1))
    for i, r in enumerate(ref, 1):
        cur = [i]
        for j, h in enumerate(hyp, 1):
            cur.append(min(prev[j - 1] + (r != h), prev[j] + 1, cur[-1] + 1))
        prev = cur
    return prev[-1]


def test_wer_counts_match_independent_dp_oracle():
    rng = np.random.default_rng(14)
    vocab = [f"w{i}" for i in range(8)]
    for _ in range(300):
        ref = [vocab[i] for i in rng.integers(0, 8, size=rng.integers(0, 12))]
        hyp = [vocab[i] for i in rng.integers(0, 8, size=rng.integers(0, 12))]
        result = sm.wer(ref, hyp)
        assert result.errors == _levenshtein_oracle(ref, hyp)


# ---------------------------------------------------------------------------
# aggregate
# ---------------------------------------------------------------------------


def _rec(ov, condition="full_sequence", pairing="same", si=None, wer_counts=None):
    rec = {
        "condition": condition,
        "gender_pairing": pairing,
        "achieved_overlap": ov,
        "si_sdr_improvement_db": si,
        "sdr_improvement_db": si,
    }
    if wer_counts:
        rec["wer_errors"], rec["wer_reference_words"] = wer_counts
    return rec


def test_aggregate_single_record_rows():
    rows = sm.aggregate([_rec(0.25, si=5.0)], [0.0, 0.5, 1.0])
    pairings = {r.gender_pairing for r in rows}
    assert pairings == {"same", "all"}
    for r in rows:
        assert r.n == 1
        assert r.mean_si_sdr_improvement == pytest.approx(5.0)
        assert (r.bin_lo, r.bin_hi) == (0.0, 0.5)


def test_aggregate_word_weighted_pooling():
    records = [
        _rec(0.3, wer_counts=(1, 10)),
        _rec(0.3, wer_counts=(9, 30)),
    ]
    rows = sm.aggregate(records, [0.0, 1.0])
    all_row = [r for r in rows if r.gender_pairing == "all"][0]
    assert all_row.mean_wer == pytest.approx((1 + 9) / 40)
    rows_mean = sm.aggregate(records, [0.0, 1.0], wer_pooling="utterances")
    all_row_mean = [r for r in rows_mean if r.gender_pairing == "all"][0]
    assert all_row_mean.mean_wer == pytest.approx((0.1 + 0.3) / 2)


def test_aggregate_empty_bin_omitted():
    rows = sm.aggregate([_rec(0.2, si=1.0)], [0.0, 0.5, 1.0])
    assert all(r.bin_lo == 0.0 for r in rows)


def test_aggregate_unknown_gender_only_in_all():
    rows = sm.aggregate([_rec(0.2, pairing="unknown", si=1.0)], [0.0, 1.0])
    assert {r.gender_pairing for r in rows} == {"all"}


def test_aggregate_right_edge_inclusive():
    rows = sm.aggregate([_rec(1.0, si=2.0)], [0.0, 0.5, 1.0])
    assert rows and all(r.bin_lo == 0.5 for r in rows)


def test_aggregate_conservation():
    rng = np.random.default_rng(15)
    records = []
    total_errors = total_words = 0
    for _ in range(50):
        ov = float(rng.uniform(0, 1))
        errors = int(rng.integers(0, 20))
        words = int(rng.integers(1, 40))
        pairing = ["same", "different"][int(rng.integers(2))]
        records.append(_rec(ov, pairing=pairing, wer_counts=(errors, words)))
        total_errors += errors
        total_words += words
    rows = sm.aggregate(records, [0.0, 0.25, 0.5, 0.75, 1.0])
    all_rows = [r for r in rows if r.gender_pairing == "all"]
    assert sum(r.total_errors for r in all_rows) == total_errors
    assert sum(r.total_reference_words for r in all_rows) == total_words
    assert sum(r.n for r in all_rows) == 50
    # same/different rows partition the records as well
    split_rows = [r for r in rows if r.gender_pairing != "all"]
    assert sum(r.total_errors for r in split_rows) == total_errors


def test_aggregate_rejects_bad_bins():
    with pytest.raises(ValueError):
        sm.aggregate([], [0.5, 0.5])
    with pytest.raises(ValueError):
        sm.aggregate([], [1.0])


def test_rows_to_csv_header_and_blank_fields():
    rows = sm.aggregate([_rec(0.2, si=1.5)], [0.0, 1.0])
    text = sm.rows_to_csv(rows)
    lines = text.strip().splitlines()
    assert lines[0] == "overlap_bin,condition,gender_pairing,mean_wer,mean_si_sdr_improvement,n"
    # no wer data -> empty field
    assert ",full_sequence," in lines[1]
    assert lines[1].split(",")[3] == ""
