import numpy as np
import pytest

import sparsemix as sm
from sparsemix.synthetic import make_toy_corpus


@pytest.fixture(scope="session")
def toy_corpus(tmp_path_factory):
    """4 synthetic speakers x 3 utterances, alignment-trimmed, equal speech totals."""
    root = tmp_path_factory.mktemp("toy_corpus")
    manifest = make_toy_corpus(root, durations_s=(0.8, 1.1, 0.6))
    return sm.load_corpus(manifest)


@pytest.fixture(scope="session")
def toy_corpus_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("toy_corpus_dir")
    manifest = make_toy_corpus(root, durations_s=(0.6, 0.8, 0.5))
    return manifest


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """Shorter utterances, for separation-heavy tests."""
    root = tmp_path_factory.mktemp("small_corpus")
    manifest = make_toy_corpus(root, durations_s=(0.5, 0.4, 0.45))
    return sm.load_corpus(manifest)


def random_audio(seconds: float, seed: int, sample_rate: int = 16000, amp: float = 0.1):
    rng = np.random.default_rng(seed)
    n = int(round(seconds * sample_rate))
    return sm.AudioBuffer(amp * rng.standard_normal(n), sample_rate)


def _ramped_tone(n, freq, active, sample_rate=16000, ramp_s=0.02, amp=0.4):
    """Tone gated by the boolean activity, raised-cosine ramps at run edges."""
    t = np.arange(n) / sample_rate
    gate = active.astype(float)
    n_ramp = int(ramp_s * sample_rate)
    if n_ramp > 1:
        runs = sm.ActivityTrack(active).to_runs()
        for start, end in runs:
            m = min(n_ramp, (end - start) // 2)
            if m > 1:
                ramp = 0.5 * (1 - np.cos(np.pi * np.arange(m) / m))
                gate[start : start + m] *= ramp
                gate[end - m : end] *= ramp[::-1]
    return amp * np.sin(2 * np.pi * freq * t) * gate


def tone_pattern_mixture(n_multi=1, block_s=0.6, overlap_s=0.3, sample_rate=16000,
                         f0=406.25, f1=1500.0, ramp_s=0.1):
    """Two bin-exact tones alternating in time with overlapping junctions.

    Silence regions are exact zeros, so every TF bin of a single-speaker span
    is dominated by that speaker; onset/offset ramps longer than the analysis
    window keep energy away from segment boundaries. ``n_multi`` junctions
    produce that many multi-speaker segments. Returns
    (mixture, [stem0, stem1], act0, act1).
    """
    block = int(block_s * sample_rate)
    ov = int(overlap_s * sample_rate)
    runs0, runs1 = [], []
    pos = 0
    for j in range(n_multi + 1):
        start = max(0, pos - ov if j else 0)
        end = start + block + (ov if j < n_multi else 0)
        (runs0 if j % 2 == 0 else runs1).append([start, end])
        pos = end
    n = pos
    act0 = sm.ActivityTrack.from_runs(runs0, n)
    act1 = sm.ActivityTrack.from_runs(runs1, n)
    s0 = _ramped_tone(n, f0, act0.mask, sample_rate, ramp_s=ramp_s)
    s1 = _ramped_tone(n, f1, act1.mask, sample_rate, ramp_s=ramp_s)
    stems = [sm.AudioBuffer(s0, sample_rate), sm.AudioBuffer(s1, sample_rate)]
    mixture = sm.AudioBuffer(s0 + s1, sample_rate)
    return mixture, stems, act0, act1
