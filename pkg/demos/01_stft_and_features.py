# # STFT, inverse STFT, and log-mel features
#
# The analysis chain every other capability stands on: a periodic-Hann STFT
# with no padding (32 ms window, 8 ms hop, 512-point DFT for separation),
# a COLA-normalized weighted overlap-add inverse, and unnormalized
# 80-dimensional log-mel features on 25 ms / 10 ms framing.

import numpy as np

import sparsemix as sm

rng = np.random.default_rng(0)
audio = sm.AudioBuffer(0.2 * rng.standard_normal(2 * 16000))

spec = sm.stft(audio)
print(f"spectrogram: {spec.n_frames} frames x {spec.n_bins} bins")

rec = sm.istft(spec, out_len=len(audio))
win = 512
interior = slice(win, -win)
err = np.linalg.norm(rec.samples[interior] - audio.samples[interior])
err /= np.linalg.norm(audio.samples[interior])
print(f"interior reconstruction error: {err:.2e} (relative L2)")

# a pure tone lands in its DFT bin...
tone = sm.AudioBuffer(0.5 * np.sin(2 * np.pi * 1000.0 * np.arange(16000) / 16000))
tone_spec = sm.stft(tone)
print(f"1 kHz tone peaks at bin {np.abs(tone_spec.bins).argmax(axis=1)[5]} "
      f"(expected {1000 * 512 // 16000})")

# ...and in the mel channel whose center is nearest 1 kHz
feats = sm.log_mel(tone, n_mels=80)
print(f"log-mel features: {feats.shape[0]} frames x {feats.shape[1]} channels, "
      f"tone peaks in channel {feats.argmax(axis=1)[5]}")

# speech-only energy and SNR gains: the building blocks of mixing
act = sm.ActivityTrack.from_runs([[0, 8000]], len(tone))
energy = sm.speech_energy(tone, act)
gain = sm.gain_for_snr(5.0, energy, energy)
print(f"gain for a 5 dB SNR against an equal-energy interferer: {gain:.4f}")
