"""One constant-curvature base GNN.

Per layer ``l`` with curvature ``k``::

    E      = clamp_k(selu(exp_k(W2 selu(W1 H + b1) + b2)))
    s_ij   = 1 - sigmoid(dist_approx_k(E_i, E_j))           per directed edge
    w_ij   = [E_i, s_ij E_j] W_omega + b_omega               (vector gate, d_hid)
    H'_i   = selu(log_k(E_i) + sum_j w_ij * log_k(E_j))

and the readout is ``softmax([H0, ..., HL] W_r + b_r)``.
"""

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import DomainViolationError, PoleProximityError, ShapeMismatchError
from .geometry import CLAMP_EPS, NORM_FLOOR, POLE_TOL, curvature_bounds, Curvature

LAYER_PARAM_NAMES = ("trans_w1", "trans_b1", "trans_w2", "trans_b2", "omega_w", "omega_b")


# -- differentiable geometry -------------------------------------------------------

def _abs_kappa(kappa, sign_class):
    return T.scale(kappa, -1.0) if sign_class == "negative" else kappa


def exp_origin_t(kappa, sign_class, V):
    if sign_class == "zero":
        return V
    s = T.sqrt(_abs_kappa(kappa, sign_class))
    a = T.row_norm(V, floor=NORM_FLOOR) * s
    if sign_class == "negative":
        f = T.tanh(a) / a
    else:
        dist = np.abs(np.mod(a.data, np.pi) - np.pi / 2)
        if np.any(dist < POLE_TOL):
            raise PoleProximityError("exp map argument hit a tangent pole")
        f = T.tan(a) / a
    return V * f


def log_origin_t(kappa, sign_class, X):
    if sign_class == "zero":
        return X
    s = T.sqrt(_abs_kappa(kappa, sign_class))
    a = T.row_norm(X, floor=NORM_FLOOR) * s
    if sign_class == "negative":
        if np.any(a.data >= 1.0):
            raise DomainViolationError("log map input outside the hyperbolic ball")
        f = T.arctanh(a) / a
    else:
        f = T.arctan(a) / a
    return X * f


def clamp_t(kappa, sign_class, X, eps=CLAMP_EPS):
    if sign_class == "zero":
        return X
    tau = T.scale(T.power(_abs_kappa(kappa, sign_class), -0.5), 1.0 - eps)
    norms = T.row_norm(X)
    over = norms.data > tau.data
    if not over.any():
        return X
    safe = T.where_rows(over, norms, 1.0)
    factor = T.where_rows(over, tau / safe, 1.0)
    return X * factor


def dist_approx_t(kappa, sign_class, Ei, Ej, form="taylor"):
    """Row-wise first-order distance between aligned rows of ``Ei`` and ``Ej``."""
    D = T.row_norm(Ei - Ej)
    two_d = T.scale(D, 2.0)
    if sign_class == "zero":
        return two_d
    xy = T.row_dot(Ei, Ej)
    lead = xy * D * D if form == "quadratic" else xy * D
    corr = lead + T.scale(T.power(D, 3.0), 1.0 / 3.0)
    return two_d - T.scale(kappa * corr, 2.0)


# -- parameters -------------------------------------------------------------------------

@dataclass
class LayerParams:
    trans_w1: T.Tensor
    trans_b1: T.Tensor
    trans_w2: T.Tensor
    trans_b2: T.Tensor
    omega_w: T.Tensor
    omega_b: T.Tensor
    kappa: T.Tensor
    sign_class: str = "zero"

    def weights(self):
        return [getattr(self, n) for n in LAYER_PARAM_NAMES]

    @property
    def curvature(self):
        return Curvature(self.kappa.item(), self.sign_class, self.kappa.requires_grad)


@dataclass
class BaseModel:
    layers: list
    readout_w: T.Tensor
    readout_b: T.Tensor
    sign_class: str = "zero"
    fix_kappa: bool = False
    disable_dap: bool = False
    dropout: float = 0.0
    dap_distance: str = "taylor"

    @property
    def num_layers(self):
        return len(self.layers)

    @property
    def input_dim(self):
        return self.layers[0].trans_w1.shape[0]

    @property
    def hidden_dim(self):
        return self.layers[0].trans_w1.shape[1]

    def named_parameters(self):
        """``(name, tensor)`` pairs for every tensor that receives gradients."""
        out = []
        for l, layer in enumerate(self.layers):
            for n in LAYER_PARAM_NAMES:
                out.append((f"layers.{l}.{n}", getattr(layer, n)))
            if layer.kappa.requires_grad:
                out.append((f"layers.{l}.kappa", layer.kappa))
        out.append(("readout_w", self.readout_w))
        out.append(("readout_b", self.readout_b))
        return out

    def parameters(self):
        return [t for _, t in self.named_parameters()]

    def kappas(self):
        return [layer.kappa.item() for layer in self.layers]

    def project_kappas(self):
        lo, hi = curvature_bounds(self.sign_class)
        for layer in self.layers:
            np.clip(layer.kappa.data, lo, hi, out=layer.kappa.data)


def init_base_model(sign_class, input_dim, hidden_dim, num_layers, rng, kappa_init=0.0,
                    fix_kappa=False, disable_dap=False, dropout=0.0, dap_distance="taylor"):
    """Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases share the weight's fan-in."""

    def uniform(fan_in, shape):
        bound = 1.0 / np.sqrt(fan_in)
        return T.Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)

    if sign_class == "zero":
        kappa_init = 0.0
    else:
        lo, hi = curvature_bounds(sign_class)
        if not lo <= kappa_init <= hi:
            raise ValueError(f"kappa_init {kappa_init} outside {sign_class} bounds")
    learn_kappa = sign_class != "zero" and not fix_kappa
    layers = []
    d_in = input_dim
    for _ in range(num_layers):
        layers.append(LayerParams(
            trans_w1=uniform(d_in, (d_in, hidden_dim)),
            trans_b1=uniform(d_in, (1, hidden_dim)),
            trans_w2=uniform(hidden_dim, (hidden_dim, hidden_dim)),
            trans_b2=uniform(hidden_dim, (1, hidden_dim)),
            omega_w=uniform(2 * hidden_dim, (2 * hidden_dim, hidden_dim)),
            omega_b=uniform(2 * hidden_dim, (1, hidden_dim)),
            kappa=T.Tensor([[kappa_init]], requires_grad=learn_kappa),
            sign_class=sign_class,
        ))
        d_in = hidden_dim
    concat_dim = input_dim + num_layers * hidden_dim
    return BaseModel(
        layers=layers,
        readout_w=uniform(concat_dim, (concat_dim, 2)),
        readout_b=uniform(concat_dim, (1, 2)),
        sign_class=sign_class,
        fix_kappa=fix_kappa,
        disable_dap=disable_dap,
        dropout=dropout,
        dap_distance=dap_distance,
    )


# -- forward pieces --------------------------------------------------------------------

def lsp_forward(layer, H, training=False, dropout=0.0, rng=None):
    """Learnable space projection: TRANS, exp map, SELU, clamp."""
    if H.shape[1] != layer.trans_w1.shape[0]:
        raise ShapeMismatchError(f"layer expects {layer.trans_w1.shape[0]} inputs, got {H.shape[1]}")
    h = T.selu(H @ layer.trans_w1 + layer.trans_b1)
    if training and dropout > 0.0:
        h = T.dropout(h, dropout, rng)
    u = h @ layer.trans_w2 + layer.trans_b2
    v = T.selu(exp_origin_t(layer.kappa, layer.sign_class, u))
    return clamp_t(layer.kappa, layer.sign_class, v)


def dap_similarities(kappa, sign_class, E, g, disable_dap=False, form="taylor", _rows=None):
    """``1 - sigmoid(dist_approx)`` per directed edge, as an ``(m, 1)`` column."""
    m = g.csr_neighbors.shape[0]
    if disable_dap:
        return T.Tensor(np.ones((m, 1)))
    Ei, Ej = _rows if _rows is not None else (T.gather_rows(E, g.edge_src), T.gather_rows(E, g.csr_neighbors))
    d = dist_approx_t(kappa, sign_class, Ei, Ej, form=form)
    return 1.0 - T.sigmoid(d)


def dap_weights(E, s_hat, layer, g, _rows=None):
    """Edge gates ``[E_i, s_ij E_j] W_omega + b_omega`` with shape ``(m, d_hid)``."""
    Ei, Ej = _rows if _rows is not None else (T.gather_rows(E, g.edge_src), T.gather_rows(E, g.csr_neighbors))
    return T.concat_cols([Ei, s_hat * Ej]) @ layer.omega_w + layer.omega_b


def propagate(kappa, sign_class, E, omega, g):
    L = log_origin_t(kappa, sign_class, E)
    msg = omega * T.gather_rows(L, g.csr_neighbors)
    return T.selu(L + T.segment_sum(msg, g.csr_offsets))


def base_forward(model, g, training=False, dropout_key=None):
    """Probability matrix ``Z`` of shape ``(n, 2)`` for one base model.

    ``dropout_key`` is a tuple of ints; the dropout mask of layer ``l`` is
    drawn from ``default_rng((*dropout_key, l))``.
    """
    X = g.features
    if X.shape[1] != model.input_dim:
        raise ShapeMismatchError(f"graph has {X.shape[1]} features, model expects {model.input_dim}")
    H = T.Tensor(X)
    hs = [H]
    src, dst = g.edge_src, g.csr_neighbors
    for l, layer in enumerate(model.layers):
        rng = None
        if training and model.dropout > 0.0:
            rng = np.random.default_rng((*(dropout_key or (0,)), l))
        E = lsp_forward(layer, H, training=training, dropout=model.dropout, rng=rng)
        rows = (T.gather_rows(E, src), T.gather_rows(E, dst))
        s_hat = dap_similarities(layer.kappa, layer.sign_class, E, g,
                                 disable_dap=model.disable_dap, form=model.dap_distance, _rows=rows)
        omega = dap_weights(E, s_hat, layer, g, _rows=rows)
        H = propagate(layer.kappa, layer.sign_class, E, omega, g)
        hs.append(H)
    logits = T.concat_cols(hs) @ model.readout_w + model.readout_b
    return T.softmax_rows(logits)
