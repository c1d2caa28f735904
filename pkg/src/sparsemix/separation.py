"""Embedding-driven time-frequency masking: clustering, masks, oracles, file I/O.

Per-bin embeddings are grouped by soft k-means (stiffness-controlled softmin
of squared distances), binarized to masks by argmax, and applied to the
mixture spectrogram to obtain one track per speaker. Oracle generators
(ideal binary mask, idealized embeddings) stand in for a trained network;
the ``EMB1`` file format carries externally computed embeddings.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from .dsp import AudioBuffer, Spectrogram, StftParams, istft

EMBEDDING_DIM = 40
KMEANS_STIFFNESS = 50.0
KMEANS_ITERS = 20
KMEANS_REL_TOL = 1e-6

EMB_MAGIC = b"EMB1"
_EMB_HEADER = struct.Struct("<IIII")


class EmbeddingFileError(ValueError):
    """Base for malformed embedding files."""


class EmbeddingMagicError(EmbeddingFileError):
    pass


class EmbeddingTruncatedError(EmbeddingFileError):
    pass


class EmbeddingDimensionError(EmbeddingFileError):
    pass


@dataclass(frozen=True)
class EmbeddingTensor:
    """Per-TF-bin embedding vectors, ``[frames, bins, dim]`` float32."""

    values: np.ndarray
    stft_params: Optional[StftParams] = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float32)
        if values.ndim != 3:
            raise ValueError(f"expected [frames, bins, dim] tensor, got shape {values.shape}")
        if values.shape[2] < 1:
            raise ValueError("embedding dimension must be >= 1")
        if values.size and not np.all(np.isfinite(values)):
            raise ValueError("embeddings contain NaN or Inf")
        object.__setattr__(self, "values", values)

    @property
    def n_frames(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_bins(self) -> int:
        return int(self.values.shape[1])

    @property
    def dim(self) -> int:
        return int(self.values.shape[2])


@dataclass(frozen=True)
class Mask:
    """Binary masks per speaker, ``[speakers, frames, bins]``, a TF partition."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=bool)
        if values.ndim != 3:
            raise ValueError(f"expected [speakers, frames, bins], got shape {values.shape}")
        if not np.all(values.sum(axis=0) == 1):
            raise ValueError("masks must assign every TF bin to exactly one speaker")
        object.__setattr__(self, "values", values)

    @property
    def n_speakers(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class ClusterResult:
    labels: np.ndarray  # [frames, bins] cluster index
    centroids: np.ndarray  # [k, dim]
    soft_assignments: np.ndarray  # [frames, bins, k]
    inertia: float
    inertia_history: Tuple[float, ...]
    region: Optional[Tuple[int, int]] = None


def _kmeanspp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[int(rng.integers(n))]
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            centroids[i] = points[int(rng.integers(n))]
            continue
        probs = d2 / total
        idx = int(rng.choice(n, p=probs))
        centroids[i] = points[idx]
        d2 = np.minimum(d2, ((points - centroids[i]) ** 2).sum(axis=1))
    return centroids


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # ||x - c||^2 expanded; clip tiny negatives from cancellation
    d2 = (
        (points**2).sum(axis=1)[:, None]
        + (centroids**2).sum(axis=1)[None, :]
        - 2.0 * points @ centroids.T
    )
    return np.maximum(d2, 0.0)


def kmeans_embed(
    emb: EmbeddingTensor,
    k: int,
    region: Optional[Tuple[int, int]] = None,
    iters: int = KMEANS_ITERS,
    stiffness: float = KMEANS_STIFFNESS,
    seed: int = 0,
    exclude: Optional[np.ndarray] = None,
) -> ClusterResult:
    """Soft k-means over per-bin embeddings, optionally restricted to a frame region.

    Soft assignments are the stiffness-beta softmin of squared distances;
    labels are their argmax. The recorded inertia is the soft-clustering
    objective (responsibility-weighted squared distance plus the stiffness
    entropy term), which the updates decrease monotonically and which equals
    the classic within-cluster sum of squares in the hard limit.

    ``exclude`` is an optional boolean grid (matching the clustered frames)
    of bins left out of the iteration, e.g. low-energy bins; excluded bins
    still receive labels and soft assignments from the final centroids.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if stiffness <= 0:
        raise ValueError("stiffness must be positive")
    values = emb.values
    if region is not None:
        start, end = region
        if not 0 <= start < end <= emb.n_frames:
            raise ValueError(f"region {region} outside [0, {emb.n_frames})")
        values = values[start:end]
    n_frames, n_bins, dim = values.shape
    points = values.reshape(-1, dim).astype(np.float64)
    fit_points = points
    if exclude is not None:
        exclude = np.asarray(exclude, dtype=bool)
        if exclude.shape != (n_frames, n_bins):
            raise ValueError(
                f"exclude grid has shape {exclude.shape}, expected {(n_frames, n_bins)}"
            )
        keep = ~exclude.reshape(-1)
        if keep.sum() >= k:
            fit_points = points[keep]
    if np.unique(fit_points, axis=0).shape[0] < k:
        raise ValueError(
            f"only {np.unique(fit_points, axis=0).shape[0]} distinct embedding points "
            f"for k={k} clusters"
        )
    rng = np.random.default_rng(seed)
    centroids = _kmeanspp_init(fit_points, k, rng)
    beta = float(stiffness)
    history: List[float] = []
    for _ in range(max(1, iters)):
        d2 = _sq_dists(fit_points, centroids)
        objective = float(-logsumexp(-beta * d2, axis=1).sum() / beta)
        history.append(objective)
        if len(history) > 1:
            prev = history[-2]
            if abs(prev - objective) <= KMEANS_REL_TOL * max(1.0, abs(prev)):
                break
        logits = -beta * d2
        logits -= logits.max(axis=1, keepdims=True)
        resp = np.exp(logits)
        resp /= resp.sum(axis=1, keepdims=True)
        weights = resp.sum(axis=0)
        for j in range(k):
            if weights[j] > 1e-300:
                centroids[j] = (resp[:, j] @ fit_points) / weights[j]
    d2 = _sq_dists(points, centroids)
    logits = -beta * d2
    logits -= logits.max(axis=1, keepdims=True)
    resp = np.exp(logits)
    resp /= resp.sum(axis=1, keepdims=True)
    labels = resp.argmax(axis=1).astype(np.int32)
    return ClusterResult(
        labels=labels.reshape(n_frames, n_bins),
        centroids=centroids,
        soft_assignments=resp.reshape(n_frames, n_bins, k),
        inertia=history[-1],
        inertia_history=tuple(history),
        region=region,
    )


def low_energy_exclusion(
    spec: Spectrogram,
    threshold_db: float = -40.0,
    region: Optional[Tuple[int, int]] = None,
) -> np.ndarray:
    """Bins more than ``|threshold_db|`` below the peak magnitude of the grid.

    Off by default in the pipeline; when enabled the flagged bins are left
    out of the clustering iteration (they still get masked by the nearest
    centroid).
    """
    mags = np.abs(spec.bins)
    peak = float(mags.max()) if mags.size else 0.0
    if region is not None:
        mags = mags[region[0] : region[1]]
    if peak <= 0.0:
        return np.zeros(mags.shape, dtype=bool)
    return mags < peak * 10.0 ** (threshold_db / 20.0)


def masks_from_labels(result: ClusterResult) -> Mask:
    """One binary mask per cluster: ``mask_k(t, f) = [label(t, f) == k]``."""
    k = result.centroids.shape[0]
    values = np.stack([result.labels == j for j in range(k)], axis=0)
    return Mask(values)


def apply_masks(
    mix_spec: Spectrogram, mask: Mask, out_len: Optional[int] = None
) -> List[AudioBuffer]:
    """Mask the mixture spectrogram and invert, one track per speaker."""
    if mask.values.shape[1:] != mix_spec.bins.shape:
        raise ValueError(
            f"mask shape {mask.values.shape[1:]} does not match spectrogram "
            f"{mix_spec.bins.shape}"
        )
    tracks = []
    for k in range(mask.n_speakers):
        masked = Spectrogram(
            mix_spec.bins * mask.values[k], mix_spec.params, mix_spec.sample_rate
        )
        tracks.append(istft(masked, out_len))
    return tracks


def ideal_binary_mask(stem_specs: Sequence[Spectrogram]) -> Mask:
    """Assign each TF bin to the stem with the largest magnitude (ties: lowest index)."""
    shapes = {s.bins.shape for s in stem_specs}
    if len(shapes) != 1:
        raise ValueError(f"stem spectrogram shapes differ: {sorted(shapes)}")
    mags = np.stack([np.abs(s.bins) for s in stem_specs], axis=0)
    labels = mags.argmax(axis=0)
    values = np.stack([labels == k for k in range(len(stem_specs))], axis=0)
    return Mask(values)


def oracle_embeddings(
    stem_specs: Sequence[Spectrogram],
    dim: int = EMBEDDING_DIM,
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> EmbeddingTensor:
    """Idealized embeddings: dominant-stem basis vector per bin plus Gaussian noise.

    A bin dominated by stem k (per the ideal binary mask) sits at the k-th
    canonical basis vector in ``dim`` dimensions.
    """
    k = len(stem_specs)
    if k > dim:
        raise ValueError(f"{k} stems exceed the embedding dimension {dim}")
    mask = ideal_binary_mask(stem_specs)
    labels = mask.values.argmax(axis=0)
    basis = np.eye(dim)
    values = basis[labels]
    if noise_sigma > 0.0:
        rng = np.random.default_rng(seed)
        values = values + noise_sigma * rng.standard_normal(values.shape)
    return EmbeddingTensor(values.astype(np.float32), stft_params=stem_specs[0].params)


def write_embeddings(emb: EmbeddingTensor, path: str | Path) -> None:
    """Write the EMB1 container: magic, u32 T/F/D/reserved, float32 LE payload."""
    t, f, d = emb.values.shape
    for dim in (t, f, d):
        if dim >= 2**32:
            raise EmbeddingDimensionError(f"dimension {dim} does not fit the u32 header")
    payload = np.ascontiguousarray(emb.values, dtype="<f4").tobytes()
    Path(path).write_bytes(EMB_MAGIC + _EMB_HEADER.pack(t, f, d, 0) + payload)


def read_embeddings(path: str | Path, stft_params: Optional[StftParams] = None) -> EmbeddingTensor:
    data = Path(path).read_bytes()
    if len(data) < 4 + _EMB_HEADER.size:
        raise EmbeddingTruncatedError(f"{path}: file shorter than the EMB1 header")
    if data[:4] != EMB_MAGIC:
        raise EmbeddingMagicError(f"{path}: bad magic {data[:4]!r}, expected {EMB_MAGIC!r}")
    t, f, d, reserved = _EMB_HEADER.unpack_from(data, 4)
    if reserved != 0:
        raise EmbeddingFileError(f"{path}: reserved header field must be 0, got {reserved}")
    if min(t, f, d) == 0:
        raise EmbeddingDimensionError(f"{path}: zero dimension in header ({t}x{f}x{d})")
    count = t * f * d
    available = len(data) - 4 - _EMB_HEADER.size
    if count * 4 > available:
        raise EmbeddingTruncatedError(
            f"{path}: header claims {t}x{f}x{d} float32 values ({count * 4} bytes) "
            f"but the payload holds {available}"
        )
    if count * 4 < available:
        raise EmbeddingFileError(f"{path}: {available - count * 4} trailing bytes after payload")
    values = np.frombuffer(data, dtype="<f4", count=count, offset=4 + _EMB_HEADER.size)
    return EmbeddingTensor(values.reshape(t, f, d).copy(), stft_params=stft_params)
