"""Kappa-stereographic model of constant-curvature space.

All functions are pure numpy and accept a scalar curvature ``kappa``.
Vector arguments may be single vectors of shape ``(d,)`` or batches of rows of
shape ``(n, d)``; reductions always run over the last axis.

Conventions:

* ``kappa < 0`` is the Poincare ball of radius ``1/sqrt(-kappa)``,
  ``kappa == 0`` is flat space and ``kappa > 0`` is the stereographic sphere.
* Origin exp/log maps scale a vector by ``tan_k(|v|)/|v|`` and its inverse,
  so ``dist_exact(kappa, 0, exp_origin(kappa, v)) == 2 |v|`` for every kappa.
* ``dist_exact`` at ``kappa == 0`` is ``2 |x - y|``, the continuous limit.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDenominatorError,
    DomainViolationError,
    PoleProximityError,
)

KAPPA_MIN_ABS = 1e-4
KAPPA_MAX_ABS = 1.0
CLAMP_EPS = 1e-8
NORM_FLOOR = 1e-15
POLE_TOL = 1e-9
DENOM_TOL = 1e-12


@dataclass
class Curvature:
    """A per-layer curvature value together with its sign class and bounds."""

    value: float
    sign_class: str  # "negative" | "zero" | "positive"
    learnable: bool = True

    def __post_init__(self):
        if self.sign_class not in ("negative", "zero", "positive"):
            raise ValueError(f"unknown sign class {self.sign_class!r}")
        if self.sign_class == "zero":
            self.learnable = False
            if self.value != 0.0:
                raise ValueError("zero sign class requires kappa == 0")
        self.value = float(self.value)
        lo, hi = self.bounds
        if not lo <= self.value <= hi:
            raise ValueError(f"kappa {self.value} outside {self.sign_class} bounds [{lo}, {hi}]")

    @property
    def bounds(self):
        return curvature_bounds(self.sign_class)

    def project(self, value):
        """Clip ``value`` into the bounds of this sign class and store it."""
        lo, hi = self.bounds
        self.value = float(min(max(value, lo), hi))
        return self.value


def curvature_bounds(sign_class):
    if sign_class == "negative":
        return (-KAPPA_MAX_ABS, -KAPPA_MIN_ABS)
    if sign_class == "positive":
        return (KAPPA_MIN_ABS, KAPPA_MAX_ABS)
    if sign_class == "zero":
        return (0.0, 0.0)
    raise ValueError(f"unknown sign class {sign_class!r}")


def sign_class_of(kappa):
    if kappa < 0:
        return "negative"
    if kappa > 0:
        return "positive"
    return "zero"


def _check_pole(kappa, arg):
    # arg = sqrt(kappa) * t; tan has poles at pi/2 + m*pi
    dist = np.abs(np.mod(arg, np.pi) - np.pi / 2)
    if np.any(dist < POLE_TOL):
        raise PoleProximityError(f"tan argument within {POLE_TOL} of a pole (kappa={kappa})")


def tan_kappa(kappa, t):
    """Curvature-dependent tangent ``tan_k``; the identity at ``kappa == 0``."""
    t = np.asarray(t, dtype=np.float64)
    if kappa < 0:
        s = np.sqrt(-kappa)
        out = np.tanh(s * t) / s
    elif kappa > 0:
        s = np.sqrt(kappa)
        _check_pole(kappa, s * t)
        out = np.tan(s * t) / s
    else:
        out = t.copy()
    return out[()] if out.ndim == 0 else out


def atan_kappa(kappa, s):
    """Principal-branch inverse of :func:`tan_kappa`."""
    s = np.asarray(s, dtype=np.float64)
    if kappa < 0:
        r = np.sqrt(-kappa)
        if np.any(r * np.abs(s) >= 1.0):
            raise DomainViolationError(f"|s| >= 1/sqrt(-kappa) for kappa={kappa}")
        out = np.arctanh(r * s) / r
    elif kappa > 0:
        r = np.sqrt(kappa)
        out = np.arctan(r * s) / r
    else:
        out = s.copy()
    return out[()] if out.ndim == 0 else out


def _dot(x, y):
    return np.sum(x * y, axis=-1, keepdims=True)


def mobius_add(kappa, x, y):
    """Kappa-addition ``x (+)_k y``; row-wise for 2-D inputs."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xy = _dot(x, y)
    x2 = _dot(x, x)
    y2 = _dot(y, y)
    num = (1.0 - 2.0 * kappa * xy - kappa * y2) * x + (1.0 + kappa * x2) * y
    den = 1.0 - 2.0 * kappa * xy + kappa**2 * x2 * y2
    if np.any(np.abs(den) < DENOM_TOL):
        raise DegenerateDenominatorError(f"mobius_add denominator below {DENOM_TOL} (kappa={kappa})")
    return num / den


def _row_norm(v):
    return np.sqrt(_dot(v, v)) + NORM_FLOOR


def exp_origin(kappa, v):
    """Map tangent vectors at the origin onto the manifold (row-wise)."""
    v = np.asarray(v, dtype=np.float64)
    if kappa == 0:
        return v.copy()
    s = np.sqrt(abs(kappa))
    a = s * _row_norm(v)
    if kappa < 0:
        return np.tanh(a) * v / a
    _check_pole(kappa, a)
    return np.tan(a) * v / a


def log_origin(kappa, x):
    """Inverse of :func:`exp_origin`; raises outside the hyperbolic ball."""
    x = np.asarray(x, dtype=np.float64)
    if kappa == 0:
        return x.copy()
    s = np.sqrt(abs(kappa))
    a = s * _row_norm(x)
    if kappa < 0:
        if np.any(s * np.sqrt(_dot(x, x)) >= 1.0):
            raise DomainViolationError(f"row outside ball of radius 1/sqrt(-kappa), kappa={kappa}")
        return np.arctanh(a) * x / a
    return np.arctan(a) * x / a


def clamp_to_domain(kappa, X, eps=CLAMP_EPS):
    """Rescale rows whose norm exceeds ``(1 - eps)/sqrt(|kappa|)`` onto that radius."""
    X = np.asarray(X, dtype=np.float64)
    if kappa == 0:
        return X.copy()
    tau = (1.0 - eps) / np.sqrt(abs(kappa))
    norms = np.sqrt(_dot(X, X))
    factor = np.where(norms > tau, tau / np.where(norms > 0, norms, 1.0), 1.0)
    return X * factor


def dist_exact(kappa, x, y):
    """Geodesic distance ``2 atan_k(|(-x) (+)_k y|)``; ``2|x - y|`` at ``kappa == 0``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if kappa == 0:
        out = 2.0 * np.sqrt(np.sum((x - y) ** 2, axis=-1))
    else:
        u = mobius_add(kappa, -x, y)
        out = 2.0 * atan_kappa(kappa, np.sqrt(np.sum(u * u, axis=-1)))
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def dist_approx(kappa, x, y):
    """First-order expansion of :func:`dist_exact` in ``kappa``.

    ``2D - 2 kappa ((x.y) D + D**3/3)`` with ``D = |x - y|``. The error
    against the exact distance is ``O(kappa**2)`` for points with
    ``|kappa| < 1/min(|x|^2, |y|^2)``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    D = np.sqrt(np.sum((x - y) ** 2, axis=-1))
    xy = np.sum(x * y, axis=-1)
    out = 2.0 * D - 2.0 * kappa * (xy * D + D**3 / 3.0)
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def dist_approx_quadratic(kappa, x, y):
    """Variant with ``(x.y) D**2`` in the correction term.

    This form agrees with :func:`dist_approx` only when ``x.y == 0`` or
    ``|x - y| == 1``; its error against the exact distance is ``O(kappa)``.
    Selectable in the model through ``TrainConfig.dap_distance = "quadratic"``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    D = np.sqrt(np.sum((x - y) ** 2, axis=-1))
    xy = np.sum(x * y, axis=-1)
    out = 2.0 * D - 2.0 * kappa * (xy * D**2 + D**3 / 3.0)
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def in_domain(kappa, x):
    """True when every row satisfies ``-kappa |x|^2 < 1``."""
    x = np.asarray(x, dtype=np.float64)
    return bool(np.all(-kappa * np.sum(x * x, axis=-1) < 1.0))
