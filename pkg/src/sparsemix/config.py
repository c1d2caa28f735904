"""Run configuration: every tunable default in one place.

Commands resolve their settings as config file < ``SPARSEMIX_SEED`` env var <
command-line flag, and serialize the result into each output directory as
``run_config.json`` so any artifact is reproducible from its directory alone.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Optional

DEFAULTS = {
    # signal analysis
    "sample_rate": 16000,
    "stft_window_ms": 32.0,
    "stft_hop_ms": 8.0,
    "stft_dft_size": 512,
    "feature_window_ms": 25.0,
    "feature_hop_ms": 10.0,
    "n_mels": 80,
    # documented choice, informational: HTK mel scale 2595*log10(1+f/700),
    # 0 Hz..Nyquist, triangular peak-1 filters, 1e-10 floor, natural log,
    # no mean/variance normalization
    "mel_scale": "htk-0-nyquist-triangular-unnormalized",
    # simulation
    "overlap_tolerance": 0.01,
    "max_no_speech": 0.10,
    "overlap_definition": "iou",  # or "mixture_length"
    "snr_lo": 0.0,
    "snr_hi": 5.0,
    "peak_limit": 0.99,
    "vad_threshold_dbfs": -40.0,
    "vad_frame_ms": 10.0,
    "vad_hangover_ms": 10.0,
    # separation
    "embedding_dim": 40,
    "clusters": 2,
    "kmeans_stiffness": 50.0,
    "kmeans_iters": 20,
    "oracle_noise_sigma": 0.0,
    "min_segment_frames": 5,
    "exhaustive_limit": 20,
    "affinity_metric": "pairwise",  # or "centroid"
    "exclude_bins_below_db": None,  # e.g. -40.0 to skip low-energy bins in clustering
    # evaluation
    "wer_pooling": "words",  # or "utterances"
    "report_bins": [0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
    # reproducibility
    "seed": 0,
}

ENV_SEED = "SPARSEMIX_SEED"


class RunConfig:
    """Layered configuration: defaults, optional JSON file, env seed, flags."""

    def __init__(self, values: Optional[dict] = None):
        self.values = dict(DEFAULTS)
        if values:
            self.update(values)

    def update(self, overrides: dict) -> "RunConfig":
        for key, value in overrides.items():
            if value is None:
                continue
            if key not in self.values:
                raise KeyError(f"unknown config key {key!r}")
            self.values[key] = value
        return self

    def __getitem__(self, key: str):
        return self.values[key]

    @classmethod
    def resolve(
        cls, config_path: Optional[str] = None, flag_overrides: Optional[dict] = None
    ) -> "RunConfig":
        cfg = cls()
        if config_path:
            cfg.update(json.loads(Path(config_path).read_text()))
        env_seed = os.environ.get(ENV_SEED)
        if env_seed is not None:
            cfg.update({"seed": int(env_seed)})
        if flag_overrides:
            cfg.update(flag_overrides)
        return cfg

    def dump(self, out_dir: str | Path, command: str) -> None:
        from . import __version__

        payload = {"version": __version__, "command": command, **self.values}
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "run_config.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n"
        )
