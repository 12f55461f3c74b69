"""Representative subset selection for tokenizer training.

Each record is summarized by per-lead statistical, spectral,
morphological, and wavelet features; the feature matrix is z-scored,
projected by PCA keeping 95% of the variance, and re-scaled. A cluster
count is chosen by the smaller of the elbow and silhouette suggestions,
K-means partitions the records (DBSCAN as fallback when clusters are
indistinct), and the sample is drawn from clusters in proportion to
their size.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal as scipy_signal
from sklearn.cluster import DBSCAN, KMeans
from sklearn.decomposition import PCA
from sklearn.metrics import silhouette_score
from sklearn.neighbors import NearestNeighbors

from . import _wavelet
from .errors import E_BAD_PARAM, E_EMPTY_INPUT, E_NONFINITE, EcgByteError
from .records import EcgRecord

# (lo, hi) Hz, half-open bands
_BANDS = ((0.5, 4.0), (4.0, 15.0), (15.0, 40.0), (40.0, 100.0))
_WAVELET_LEVELS = 4
FEATURES_PER_LEAD = 7 + len(_BANDS) + 2 + 2 + _WAVELET_LEVELS

SENTINEL_K = 1  # degenerate data; cluster() falls back to DBSCAN


@dataclass
class FeatureVector:
    values: np.ndarray
    record_index: int


@dataclass
class ClusterModel:
    method: str                     # "kmeans" | "dbscan"
    k: int
    assignments: np.ndarray         # per-record labels, -1 = noise
    pca_components: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    retained_variance: float = 0.0


def _lead_features(x: np.ndarray, fs: float) -> list[float]:
    n = x.size
    mean = float(np.mean(x))
    var = float(np.var(x))
    std = var ** 0.5
    if var > 1e-24:
        centered = x - mean
        skew = float(np.mean(centered ** 3)) / var ** 1.5
        kurt = float(np.mean(centered ** 4)) / var ** 2 - 3.0  # excess
    else:
        skew = kurt = 0.0  # convention for (near-)constant leads
    rms = float(np.sqrt(np.mean(x * x)))

    spectrum = np.abs(np.fft.rfft(x)) ** 2 / n ** 2
    freqs = np.fft.rfftfreq(n, d=1.0 / fs)
    band_powers = [float(spectrum[(freqs >= lo) & (freqs < hi)].sum())
                   for lo, hi in _BANDS]
    positive = spectrum[1:]
    total = positive.sum()
    if total > 0:
        p = positive / total
        nonzero = p[p > 0]
        entropy = float(-(nonzero * np.log(nonzero)).sum())
        dominant = float(freqs[1:][int(np.argmax(positive))])
    else:
        entropy = 0.0
        dominant = 0.0

    height = mean + 2.0 * std
    spacing = max(1, int(round(0.2 * fs)))
    peaks, _ = scipy_signal.find_peaks(x, height=height, distance=spacing)
    n_peaks = peaks.size
    mean_interval = float(np.mean(np.diff(peaks))) / fs if n_peaks >= 2 else 0.0

    energies = _wavelet.detail_energies(x, _WAVELET_LEVELS)

    return [mean, std, skew, kurt, float(x.min()), float(x.max()), rms,
            *band_powers, entropy, dominant, float(n_peaks), mean_interval,
            *energies.tolist()]


def extract_features(rec: EcgRecord, record_index: int = 0) -> FeatureVector:
    """Concatenated per-lead feature vector for one preprocessed record."""
    if not np.all(np.isfinite(rec.data)):
        raise EcgByteError(E_NONFINITE, "record contains non-finite samples")
    values: list[float] = []
    for i in range(rec.n_leads):
        values.extend(_lead_features(rec.data[i], rec.sample_rate_hz))
    return FeatureVector(values=np.asarray(values, dtype=np.float64),
                         record_index=record_index)


def _zscore(matrix: np.ndarray) -> np.ndarray:
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)
    keep = std > 0
    return (matrix[:, keep] - mean[keep]) / std[keep]


def fit_pca(features: list[FeatureVector] | np.ndarray,
            variance_target: float = 0.95) -> tuple[np.ndarray, ClusterModel]:
    """Scale, project, and re-scale the feature matrix.

    Returns ``(scores, model)`` where the model carries the component
    matrix and the retained variance fraction.
    """
    if not 0 < variance_target <= 1:
        raise EcgByteError(E_BAD_PARAM, "variance target must be in (0, 1]")
    if isinstance(features, np.ndarray):
        matrix = np.asarray(features, dtype=np.float64)
    else:
        matrix = np.stack([fv.values for fv in features])
    if matrix.ndim != 2 or matrix.shape[0] < 2:
        raise EcgByteError(E_EMPTY_INPUT, "PCA needs at least two records")
    scaled = _zscore(matrix)
    if scaled.shape[1] == 0:
        # every dimension constant: degenerate, single zero score
        scores = np.zeros((matrix.shape[0], 1))
        model = ClusterModel(method="none", k=0,
                             assignments=np.empty(0, dtype=int),
                             pca_components=np.zeros((1, matrix.shape[1])),
                             retained_variance=1.0)
        return scores, model
    if variance_target == 1.0:
        pca = PCA(svd_solver="full")
    else:
        pca = PCA(n_components=variance_target, svd_solver="full")
    scores = pca.fit_transform(scaled)
    std = scores.std(axis=0)
    std[std == 0] = 1.0
    scores = (scores - scores.mean(axis=0)) / std
    model = ClusterModel(method="none", k=0, assignments=np.empty(0, dtype=int),
                         pca_components=pca.components_,
                         retained_variance=float(pca.explained_variance_ratio_.sum()))
    return scores, model


def select_k(scores: np.ndarray, k_max: int = 10, seed: int = 0) -> int:
    """Smaller of the elbow and silhouette cluster-count suggestions.

    Elbow is the k in [2, k_max] maximizing the second difference of the
    K-means inertia curve; silhouette is the k maximizing the mean
    silhouette score. Degenerate (all-identical) data returns the
    sentinel 1, which makes :func:`cluster` fall back to DBSCAN.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if k_max < 2:
        raise EcgByteError(E_BAD_PARAM, "k_max must be >= 2")
    if scores.shape[0] < k_max + 1:
        raise EcgByteError(E_BAD_PARAM,
                           f"need at least {k_max + 1} records for k_max={k_max}")
    if np.allclose(scores, scores[0]):
        return SENTINEL_K
    inertia = {}
    for k in range(1, k_max + 2):
        km = KMeans(n_clusters=k, random_state=seed, n_init=10).fit(scores)
        inertia[k] = km.inertia_
    candidates = range(2, k_max + 1)
    elbow_k = max(candidates,
                  key=lambda k: (inertia[k - 1] - 2 * inertia[k] + inertia[k + 1], -k))
    silhouettes = {}
    for k in candidates:
        labels = KMeans(n_clusters=k, random_state=seed, n_init=10).fit_predict(scores)
        if len(set(labels)) < 2:
            silhouettes[k] = -1.0
        else:
            silhouettes[k] = float(silhouette_score(scores, labels))
    sil_k = max(candidates, key=lambda k: (silhouettes[k], -k))
    return min(elbow_k, sil_k)


def cluster(scores: np.ndarray, k: int, seed: int = 0) -> ClusterModel:
    """Seeded K-means with a DBSCAN fallback.

    Falls back when k is the degenerate sentinel, a cluster comes out
    empty, or the mean silhouette is below 0.1. DBSCAN uses eps = median
    5th-nearest-neighbor distance and min_samples = 5; noise (-1) is its
    own stratum downstream.
    """
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.shape[0]
    failed = k <= SENTINEL_K
    labels = None
    if not failed:
        if k > n:
            raise EcgByteError(E_BAD_PARAM, f"k={k} exceeds {n} records")
        km = KMeans(n_clusters=k, init="k-means++", n_init=10, max_iter=300,
                    tol=1e-4, random_state=seed)
        labels = km.fit_predict(scores)
        counts = np.bincount(labels, minlength=k)
        if (counts == 0).any():
            failed = True
        elif len(set(labels)) < 2 or n <= k:
            failed = True
        elif silhouette_score(scores, labels) < 0.1:
            failed = True
    if not failed:
        return ClusterModel(method="kmeans", k=k, assignments=labels)

    n_neighbors = min(6, n)  # self + 5 neighbors
    distances, _ = NearestNeighbors(n_neighbors=n_neighbors).fit(scores) \
        .kneighbors(scores)
    eps = float(np.median(distances[:, -1]))
    labels = DBSCAN(eps=max(eps, 1e-12), min_samples=5).fit_predict(scores)
    k_found = len(set(labels) - {-1})
    return ClusterModel(method="dbscan", k=k_found, assignments=labels)


def stratified_sample(model: ClusterModel, total: int, seed: int = 0) -> list[int]:
    """Per-cluster quotas by largest remainder, uniform draws within.

    Quotas sum exactly to ``total``; remainder ties break toward the
    smaller cluster label. Returns sorted record indices.
    """
    labels = np.asarray(model.assignments)
    n = labels.size
    if total > n:
        raise EcgByteError(E_BAD_PARAM, f"requested {total} of {n} records")
    if total < 0:
        raise EcgByteError(E_BAD_PARAM, "sample size must be non-negative")
    unique = sorted(set(labels.tolist()))
    sizes = {lab: int((labels == lab).sum()) for lab in unique}
    exact = {lab: total * sizes[lab] / n for lab in unique}
    quotas = {lab: int(np.floor(exact[lab])) for lab in unique}
    leftover = total - sum(quotas.values())
    by_remainder = sorted(unique, key=lambda lab: (-(exact[lab] - quotas[lab]), lab))
    for lab in by_remainder[:leftover]:
        quotas[lab] += 1
    rng = np.random.default_rng(seed)
    chosen: list[int] = []
    for lab in unique:
        members = np.nonzero(labels == lab)[0]
        quota = min(quotas[lab], members.size)
        if quota:
            chosen.extend(rng.choice(members, size=quota, replace=False).tolist())
    return sorted(chosen)
