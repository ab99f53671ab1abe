"""Curvature diagnostics: expansion rate, (weighted) homogeneity, Gaussian mixing.

These run on raw features with exact geodesic distances and need no gradients.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .errors import ConfigInvalidError, DegenerateTripletError, GeometryError, NoLabeledEdgesError
from .graphdata import UNLABELED

# Margin for pulling raw features into the ball. Two points both within 1e-8
# of the boundary can round the Mobius norm up to 1; 1e-5 keeps it below.
WH_CLAMP_EPS = 1e-5


# -- expansion rate -----------------------------------------------------------------

def expansion_rate(kappa, x0, x1, y, euclid_scale=2.0):
    """Ratio of inter/intra distance ratios in curvature ``kappa`` versus flat space.

    ``euclid_scale`` multiplies the flat reference distance; the result does
    not depend on it because it cancels inside the ratio.
    """
    x0, x1, y = (np.asarray(v, dtype=np.float64) for v in (x0, x1, y))
    if np.array_equal(x0, x1):
        raise DegenerateTripletError("x0 and x1 coincide; intra-class distance is zero")
    if kappa == 0:
        return 1.0
    r_k = geo.dist_exact(kappa, x0, y) / geo.dist_exact(kappa, x0, x1)
    r_0 = (euclid_scale * np.linalg.norm(x0 - y)) / (euclid_scale * np.linalg.norm(x0 - x1))
    return float(r_k / r_0)


def kappa_grid(kappa_min, kappa_max, steps):
    if steps < 2:
        raise ConfigInvalidError("steps must be >= 2")
    if kappa_min > kappa_max:
        raise ConfigInvalidError("kappa_min must not exceed kappa_max")
    grid = np.linspace(kappa_min, kappa_max, steps)
    # snap rounding residue so a grid point meant to be 0 is exactly 0
    tol = 1e-9 * max(abs(kappa_min), abs(kappa_max), 1.0)
    grid[np.abs(grid) < tol] = 0.0
    return grid


@dataclass
class ERCurve:
    kappa_grid: np.ndarray
    er_values: np.ndarray
    triplet: tuple = field(default=())

    def rows(self):
        return list(zip(self.kappa_grid.tolist(), self.er_values.tolist()))


def er_curve(triplet, kappa_min, kappa_max, steps):
    """Expansion rate over a uniform curvature grid; failed points are NaN."""
    x0, x1, y = triplet
    grid = kappa_grid(kappa_min, kappa_max, steps)
    vals = np.empty_like(grid)
    for i, k in enumerate(grid):
        try:
            vals[i] = expansion_rate(k, x0, x1, y)
        except GeometryError:
            vals[i] = np.nan
    return ERCurve(grid, vals, tuple(np.asarray(v, dtype=np.float64) for v in triplet))


# -- homogeneity --------------------------------------------------------------------

def _labeled_edges(g):
    src, dst = g.edge_src, g.csr_neighbors
    keep = (g.labels[src] != UNLABELED) & (g.labels[dst] != UNLABELED)
    if not keep.any():
        raise NoLabeledEdgesError("graph has no edge between two labeled nodes")
    return src[keep], dst[keep]


def _aggregate(g, src, dst, weights):
    same = (g.labels[src] == g.labels[dst]).astype(np.float64)
    num = np.bincount(src, weights=weights * same, minlength=g.num_nodes)
    den = np.bincount(src, weights=weights, minlength=g.num_nodes)
    with np.errstate(invalid="ignore", divide="ignore"):
        per_node = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.nan)
    return per_node, float(num.sum() / den.sum())


def homogeneity(g):
    """Per-node and graph-level fraction of same-label neighbours.

    Only edges with both endpoints labeled count; nodes without such edges
    get NaN.
    """
    src, dst = _labeled_edges(g)
    return _aggregate(g, src, dst, np.ones(src.size))


def edge_similarities(g, kappa, src=None, dst=None):
    """``1 - sigmoid(dist_exact)`` between feature rows of each directed edge.

    For ``kappa < 0`` the features are first clamped into the ball (with
    margin ``WH_CLAMP_EPS``) so the distance is defined.
    """
    if src is None:
        src, dst = g.edge_src, g.csr_neighbors
    X = g.features
    if kappa < 0:
        X = geo.clamp_to_domain(kappa, X, WH_CLAMP_EPS)
    d = geo.dist_exact(kappa, X[src], X[dst])
    return 1.0 - 1.0 / (1.0 + np.exp(-np.asarray(d, dtype=np.float64)))


def weighted_homogeneity(g, kappa):
    src, dst = _labeled_edges(g)
    s = edge_similarities(g, kappa, src, dst)
    return _aggregate(g, src, dst, s)


@dataclass
class HomogeneityReport:
    per_node_homogeneity: np.ndarray
    graph_homogeneity: float
    wh_per_kappa: dict

    def write_csv(self, path):
        kappas = list(self.wh_per_kappa)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["node_id", "homogeneity", *(f"wh_kappa_{k:g}" for k in kappas)])
            for i, h in enumerate(self.per_node_homogeneity.tolist()):
                w.writerow([i, repr(h), *(repr(float(self.wh_per_kappa[k][0][i])) for k in kappas)])

    def summary(self):
        return {"homogeneity": self.graph_homogeneity,
                **{f"wh_kappa_{k:g}": v[1] for k, v in self.wh_per_kappa.items()}}


def homogeneity_report(g, kappas):
    per_node, graph_h = homogeneity(g)
    wh = {float(k): weighted_homogeneity(g, float(k)) for k in kappas}
    return HomogeneityReport(per_node, graph_h, wh)


# -- Gaussian mixing simulation -----------------------------------------------------

def theorem1_simulation(mu_dist, sigma, p_grid, samples, seed, dim=8):
    """Squared distance between the mean of ``p x_n + (1-p) x_a`` and ``mu_n = 0``.

    ``x_n ~ N(0, sigma^2 I)`` and ``x_a ~ N(mu_dist e1, sigma^2 I)``. Returns a
    list of ``(p, empirical, closed_form)`` with ``closed_form = (1-p)^2 mu_dist^2``.
    """
    p_grid = np.asarray(p_grid, dtype=np.float64).reshape(-1)
    if samples < 1000:
        raise ConfigInvalidError("samples must be >= 1000")
    if np.any(p_grid < 0) or np.any(p_grid > 1):
        raise ConfigInvalidError("p values must lie in [0, 1]")
    if sigma < 0 or mu_dist < 0 or dim < 1:
        raise ConfigInvalidError("need sigma >= 0, mu_dist >= 0, dim >= 1")
    rng = np.random.default_rng(seed)
    mu_a = np.zeros(dim)
    mu_a[0] = mu_dist
    out = []
    for p in p_grid.tolist():
        xn = rng.normal(0.0, sigma, size=(samples, dim))
        xa = mu_a + rng.normal(0.0, sigma, size=(samples, dim))
        mix_mean = (p * xn + (1.0 - p) * xa).mean(axis=0)
        out.append((p, float(mix_mean @ mix_mean), (1.0 - p) ** 2 * mu_dist**2))
    return out


def write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])
