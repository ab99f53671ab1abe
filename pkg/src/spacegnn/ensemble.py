"""Multi-space ensemble of base models and the ensemble cross-entropy gap."""

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .errors import ConfigInvalidError, MemberShapeMismatchError, NotSimplexError
from .model import base_forward

SIMPLEX_TOL = 1e-9


@dataclass
class EnsembleModel:
    """One Euclidean member plus ``H`` hyperbolic and ``S`` spherical members.

    Probabilities are mixed as
    ``(1 - beta) * ((1 - alpha) * mean(Z_hyper) + alpha * mean(Z_spher)) + beta * Z_euclid``.
    """

    euclid: object
    hyper: list = field(default_factory=list)
    spher: list = field(default_factory=list)
    alpha: float = 0.5
    beta: float = 0.5

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise ConfigInvalidError("alpha and beta must lie in [0, 1]")
        shapes = {(m.input_dim, m.hidden_dim, m.num_layers) for m in self.members()}
        if len(shapes) != 1:
            raise MemberShapeMismatchError(f"members disagree on (input_dim, hidden_dim, layers): {sorted(shapes)}")
        if not self.hyper and (1 - self.beta) * (1 - self.alpha) > 0:
            raise ConfigInvalidError("hyperbolic weight is positive but there are no hyperbolic members")
        if not self.spher and (1 - self.beta) * self.alpha > 0:
            raise ConfigInvalidError("spherical weight is positive but there are no spherical members")

    def members(self):
        return [self.euclid, *self.hyper, *self.spher]

    def member_weights(self):
        """``(member, weight)`` for every member; weights sum to one."""
        out = [(self.euclid, self.beta)]
        if self.hyper:
            w = (1.0 - self.beta) * (1.0 - self.alpha) / len(self.hyper)
            out += [(m, w) for m in self.hyper]
        if self.spher:
            w = (1.0 - self.beta) * self.alpha / len(self.spher)
            out += [(m, w) for m in self.spher]
        return out

    def named_parameters(self):
        out = []
        for i, m in enumerate(self.members()):
            out += [(f"members.{i}.{n}", t) for n, t in m.named_parameters()]
        return out

    def parameters(self):
        return [t for _, t in self.named_parameters()]

    def project_kappas(self):
        for m in self.members():
            m.project_kappas()


def mulse_forward(ens, g, training=False, dropout_key=None, return_members=False):
    """Mixed probability matrix ``(n, 2)``; zero-weight members are not evaluated.

    With ``return_members`` also returns ``[(weight, Z_member), ...]``.
    """
    Z = None
    parts = []
    for idx, (member, w) in enumerate(ens.member_weights()):
        if w == 0.0:
            continue
        key = None if dropout_key is None else (*dropout_key, idx)
        Zm = base_forward(member, g, training=training, dropout_key=key)
        parts.append((w, Zm))
        term = Zm if w == 1.0 else T.scale(Zm, w)
        Z = term if Z is None else Z + term
    if return_members:
        return Z, parts
    return Z


def ensemble_loss(Z, g, mask):
    return T.cross_entropy(Z, g.one_hot(), mask)


def _check_simplex(v, what):
    v = np.asarray(v, dtype=np.float64)
    if np.any(v < -SIMPLEX_TOL) or np.any(np.abs(v.sum(axis=-1) - 1.0) > SIMPLEX_TOL):
        raise NotSimplexError(f"{what} is not a probability vector")
    return v


def proposition1_gap(p, q_list, alpha_list):
    """``sum_i a_i CE(p, q_i) - CE(p, sum_i a_i q_i)``; non-negative by weighted AM-GM.

    Works row-wise when ``p`` is ``(n, C)`` and each ``q_i`` is ``(n, C)``.
    """
    p = _check_simplex(p, "p")
    Q = np.stack([_check_simplex(q, "q_i") for q in q_list])
    a = _check_simplex(alpha_list, "alpha")
    if Q.shape[1:] != p.shape:
        raise NotSimplexError(f"q_i shape {Q.shape[1:]} does not match p {p.shape}")
    with np.errstate(divide="ignore"):
        logQ = np.log(Q)
    # 0 * log 0 = 0 for classes absent from p
    weighted = -np.sum(np.where(p > 0, p * logQ, 0.0), axis=-1)
    weighted = np.tensordot(a, weighted, axes=1)
    qbar = np.tensordot(a, Q, axes=1)
    with np.errstate(divide="ignore"):
        ens = -np.sum(np.where(p > 0, p * np.log(qbar), 0.0), axis=-1)
    return weighted - ens


def assert_ensemble_gap(parts, g, mask, tol=1e-12):
    """Assert the ensemble gap is non-negative on every node in ``mask``.

    ``parts`` is the ``(weight, Z)`` list returned by ``mulse_forward``.
    """
    if len(parts) < 2:
        return np.zeros(len(mask))
    P = g.one_hot()[mask]
    weights = np.array([w for w, _ in parts])
    Qs = [Z.data[mask] for _, Z in parts]
    gaps = proposition1_gap(P, Qs, weights / weights.sum())
    if np.any(gaps < -tol):
        worst = int(np.argmin(gaps))
        raise AssertionError(f"ensemble gap {gaps[worst]:.3e} < -{tol} at node {mask[worst]}")
    return gaps
