"""Attributed graphs: CSR storage, file I/O, splits and a Gaussian generator.

On-disk layout (all paths in the manifest are relative to the manifest file)::

    graph.json     {"num_nodes": N, "feature_dim": d, "edges": "edges.tsv",
                    "features": "features.csv", "labels": "labels.txt" | null}
    edges.tsv      "u<TAB>v" per line, 0-indexed, '#' starts a comment
    features.csv   N rows of d comma-separated floats, no header
    labels.txt     one of 0, 1, -1 (unlabeled) per line
"""

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadLabelError,
    ConfigInvalidError,
    DanglingEdgeError,
    FeatureShapeError,
    InsufficientLabelsError,
    ManifestParseError,
)

UNLABELED = -1


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected attributed graph with symmetric, deduplicated CSR adjacency.

    ``labels`` holds 0 (normal), 1 (anomalous) or -1 (unlabeled).
    """

    num_nodes: int
    csr_offsets: np.ndarray
    csr_neighbors: np.ndarray
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        for arr in (self.csr_offsets, self.csr_neighbors, self.features, self.labels):
            arr.flags.writeable = False

    @property
    def feature_dim(self):
        return self.features.shape[1]

    @property
    def num_edges(self):
        """Number of undirected edges."""
        return self.csr_neighbors.shape[0] // 2

    @property
    def degrees(self):
        return np.diff(self.csr_offsets)

    @property
    def edge_src(self):
        """Source node of every directed CSR entry (aligned with ``csr_neighbors``)."""
        return np.repeat(np.arange(self.num_nodes, dtype=np.int64), self.degrees)

    @property
    def labeled(self):
        return np.flatnonzero(self.labels != UNLABELED)

    def neighbors(self, i):
        return self.csr_neighbors[self.csr_offsets[i]:self.csr_offsets[i + 1]]

    def one_hot(self):
        Y = np.zeros((self.num_nodes, 2))
        lab = self.labels != UNLABELED
        Y[lab, self.labels[lab]] = 1.0
        return Y

    def permute(self, perm):
        """Relabel nodes so that old node ``perm[k]`` becomes new node ``k``."""
        perm = np.asarray(perm, dtype=np.int64)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(perm.size)
        src, dst = self.edge_src, self.csr_neighbors
        return from_edges(self.num_nodes, inv[src], inv[dst], self.features[perm], self.labels[perm])


def _build_csr(num_nodes, u, v):
    u = np.asarray(u, dtype=np.int64).reshape(-1)
    v = np.asarray(v, dtype=np.int64).reshape(-1)
    keep = u != v
    u, v = u[keep], v[keep]
    src = np.concatenate([u, v])
    dst = np.concatenate([v, u])
    key = np.unique(src * num_nodes + dst)
    src, dst = key // num_nodes, key % num_nodes
    offsets = np.zeros(num_nodes + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=num_nodes), out=offsets[1:])
    return offsets, dst.astype(np.int64)


def from_edges(num_nodes, u, v, features, labels=None):
    """Build a :class:`Graph`, symmetrising, deduplicating and dropping self-loops."""
    num_nodes = int(num_nodes)
    u = np.asarray(u, dtype=np.int64).reshape(-1)
    v = np.asarray(v, dtype=np.int64).reshape(-1)
    if u.size and (min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= num_nodes):
        bad = np.flatnonzero((u < 0) | (v < 0) | (u >= num_nodes) | (v >= num_nodes))[0]
        raise DanglingEdgeError(f"edge ({u[bad]}, {v[bad]}) references a node outside [0, {num_nodes})")
    features = np.array(features, dtype=np.float64, ndmin=2)
    if features.shape[0] != num_nodes:
        raise FeatureShapeError(f"{features.shape[0]} feature rows for {num_nodes} nodes")
    if labels is None:
        labels = np.full(num_nodes, UNLABELED, dtype=np.int64)
    labels = np.array(labels, dtype=np.int64).reshape(-1)
    if labels.shape[0] != num_nodes:
        raise FeatureShapeError(f"{labels.shape[0]} labels for {num_nodes} nodes")
    if not np.all(np.isin(labels, (0, 1, UNLABELED))):
        raise BadLabelError(f"labels must be 0, 1 or -1, got {sorted(set(labels.tolist()) - {0, 1, -1})}")
    offsets, neighbors = _build_csr(num_nodes, u, v)
    return Graph(num_nodes, offsets, neighbors, features, labels)


# -- file I/O -------------------------------------------------------------------------

def _read_edges(path, num_nodes):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ManifestParseError(f"{path}:{lineno}: expected 'u<TAB>v', got {line!r}")
            try:
                rows.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise ManifestParseError(f"{path}:{lineno}: non-integer node id in {line!r}") from None
    if not rows:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    arr = np.array(rows, dtype=np.int64)
    return arr[:, 0], arr[:, 1]


def load_graph(manifest_path):
    """Read a graph manifest and its edge, feature and label files."""
    manifest_path = Path(manifest_path)
    try:
        with open(manifest_path, encoding="utf-8") as fh:
            meta = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestParseError(f"cannot read manifest {manifest_path}: {exc}") from exc
    try:
        num_nodes = int(meta["num_nodes"])
        feature_dim = int(meta["feature_dim"])
        edges_rel = meta["edges"]
        features_rel = meta["features"]
        labels_rel = meta.get("labels")
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestParseError(f"manifest {manifest_path} missing or invalid field: {exc}") from exc
    base = manifest_path.parent
    try:
        u, v = _read_edges(base / edges_rel, num_nodes)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            X = np.loadtxt(base / features_rel, delimiter=",", dtype=np.float64, ndmin=2)
        if num_nodes == 0:
            X = X.reshape(0, feature_dim)
        labels = None
        if labels_rel is not None:
            labels = np.loadtxt(base / labels_rel, dtype=np.int64, ndmin=1)
    except OSError as exc:
        raise ManifestParseError(f"cannot read graph data: {exc}") from exc
    except ValueError as exc:
        raise ManifestParseError(f"malformed graph data: {exc}") from exc
    if X.shape != (num_nodes, feature_dim):
        raise FeatureShapeError(f"features have shape {X.shape}, manifest says ({num_nodes}, {feature_dim})")
    return from_edges(num_nodes, u, v, X, labels)


def write_graph(g, out_dir, name="graph"):
    """Write ``g`` as a manifest plus data files; returns the manifest path.

    Floats are written with 17 significant digits, so loading reproduces the
    features bit-for-bit.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    src, dst = g.edge_src, g.csr_neighbors
    upper = src < dst
    with open(out_dir / f"{name}_edges.tsv", "w", encoding="utf-8") as fh:
        for a, b in zip(src[upper].tolist(), dst[upper].tolist()):
            fh.write(f"{a}\t{b}\n")
    np.savetxt(out_dir / f"{name}_features.csv", g.features, delimiter=",", fmt="%.17g")
    np.savetxt(out_dir / f"{name}_labels.txt", g.labels, fmt="%d")
    meta = {
        "num_nodes": int(g.num_nodes),
        "feature_dim": int(g.feature_dim),
        "edges": f"{name}_edges.tsv",
        "features": f"{name}_features.csv",
        "labels": f"{name}_labels.txt",
    }
    path = out_dir / f"{name}.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    return path


# -- splits ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Split:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    seed: int

    def mask(self, name):
        if name not in ("train", "val", "test"):
            raise KeyError(f"unknown split {name!r}")
        return getattr(self, name)

    def to_dict(self):
        return {"train": self.train.tolist(), "val": self.val.tolist(),
                "test": self.test.tolist(), "seed": int(self.seed)}

    @classmethod
    def from_dict(cls, d):
        return cls(*(np.asarray(d[k], dtype=np.int64) for k in ("train", "val", "test")), int(d["seed"]))


def split_random(g, n_train, n_val, seed):
    """Sample ``n_train`` and ``n_val`` labeled nodes; the remaining labeled nodes are test."""
    labeled = g.labeled
    if n_train < 1 or n_val < 1:
        raise InsufficientLabelsError("train and val sizes must be at least 1")
    if n_train + n_val > labeled.size:
        raise InsufficientLabelsError(f"need {n_train + n_val} labeled nodes, graph has {labeled.size}")
    order = np.random.default_rng(seed).permutation(labeled)
    train = np.sort(order[:n_train])
    val = np.sort(order[n_train:n_train + n_val])
    test = np.sort(order[n_train + n_val:])
    return Split(train, val, test, int(seed))


# -- synthetic graphs -------------------------------------------------------------------

@dataclass
class SynthConfig:
    num_nodes: int = 500
    anomaly_rate: float = 0.05
    feature_dim: int = 8
    mean_separation: float = 3.0
    feature_std: float = 1.0
    homophily: float = 0.9
    avg_degree: float = 8.0
    seed: int = 0

    def validate(self):
        if self.num_nodes < 2:
            raise ConfigInvalidError("num_nodes must be >= 2")
        if not 0.0 < self.anomaly_rate < 1.0:
            raise ConfigInvalidError("anomaly_rate must lie in (0, 1)")
        if self.anomaly_rate * self.num_nodes < 2:
            raise ConfigInvalidError("anomaly_rate * num_nodes must be >= 2")
        if self.feature_dim < 1:
            raise ConfigInvalidError("feature_dim must be >= 1")
        if self.feature_std < 0 or self.mean_separation < 0:
            raise ConfigInvalidError("feature_std and mean_separation must be non-negative")
        if not 0.0 <= self.homophily <= 1.0:
            raise ConfigInvalidError("homophily must lie in [0, 1]")
        if self.avg_degree < 1:
            raise ConfigInvalidError("avg_degree must be >= 1")


def synth_gaussian_graph(cfg):
    """Two-class Gaussian feature graph with controlled edge homophily.

    Normal nodes draw features from ``N(0, std^2 I)``, anomalous ones from
    ``N(sep * e1, std^2 I)``. Each node proposes ``round(avg_degree / 2)``
    partners, each from its own class with probability ``homophily`` and from
    the other class otherwise, uniformly within the chosen class.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    n = cfg.num_nodes
    labels = (rng.random(n) < cfg.anomaly_rate).astype(np.int64)
    mu_a = np.zeros(cfg.feature_dim)
    mu_a[0] = cfg.mean_separation
    X = rng.normal(0.0, 1.0, size=(n, cfg.feature_dim)) * cfg.feature_std
    X[labels == 1] += mu_a

    members = [np.flatnonzero(labels == c) for c in (0, 1)]
    k = int(math.floor(cfg.avg_degree / 2.0 + 0.5))
    same = rng.random((n, k)) < cfg.homophily
    picks = rng.random((n, k))
    us, vs = [], []
    for i in range(n):
        c = labels[i]
        for j in range(k):
            pool = members[c] if same[i, j] else members[1 - c]
            if pool.size == 0 or (pool.size == 1 and pool[0] == i):
                continue
            partner = pool[int(picks[i, j] * pool.size)]
            if partner == i:
                # resample deterministically within the pool, skipping self
                partner = pool[(int(picks[i, j] * pool.size) + 1) % pool.size]
            us.append(i)
            vs.append(partner)
    return from_edges(n, us, vs, X, labels)
