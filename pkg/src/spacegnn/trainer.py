"""Initialization, full-batch training with early stopping, evaluation, checkpoints."""

import copy
import csv
import dataclasses
import io
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import tensor as T
from .ensemble import EnsembleModel, assert_ensemble_gap, ensemble_loss, mulse_forward
from .errors import ConfigInvalidError, InsufficientLabelsError, ManifestParseError, NonFiniteLossError, OneClassOnlyError
from .graphdata import Split
from .metrics import Metrics, auc_score, confusion_matrix, f1_macro, predict
from .model import LAYER_PARAM_NAMES, BaseModel, LayerParams, init_base_model

log = logging.getLogger(__name__)

FORMAT_VERSION = 1


@dataclass
class TrainConfig:
    learning_rate: float = 0.005
    hidden_dim: int = 16
    layers: int = 2
    dropout: float = 0.2
    max_epochs: int = 200
    patience: int = 100
    alpha: float = 0.5
    beta: float = 0.5
    kappa_init_neg: float = -0.1
    kappa_init_pos: float = 0.1
    fix_kappa: bool = False
    disable_dap: bool = False
    seed: int = 0
    hyper_members: int = 1
    spher_members: int = 1
    dap_distance: str = "taylor"
    weight_decay: float = 0.001
    debug_checks: bool = False

    def validate(self):
        if not self.learning_rate >= 0:
            raise ConfigInvalidError("learning_rate must be >= 0")
        if not 1 <= self.layers <= 16:
            raise ConfigInvalidError("layers must lie in [1, 16]")
        if self.hidden_dim < 1:
            raise ConfigInvalidError("hidden_dim must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigInvalidError("dropout must lie in [0, 1)")
        if self.max_epochs < 1 or self.patience < 0:
            raise ConfigInvalidError("need max_epochs >= 1 and patience >= 0")
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise ConfigInvalidError("alpha and beta must lie in [0, 1]")
        if not -1.0 <= self.kappa_init_neg <= -1e-4:
            raise ConfigInvalidError("kappa_init_neg must lie in [-1, -1e-4]")
        if not 1e-4 <= self.kappa_init_pos <= 1.0:
            raise ConfigInvalidError("kappa_init_pos must lie in [1e-4, 1]")
        if self.hyper_members < 0 or self.spher_members < 0:
            raise ConfigInvalidError("member counts must be >= 0")
        if self.dap_distance not in ("taylor", "quadratic"):
            raise ConfigInvalidError("dap_distance must be 'taylor' or 'quadratic'")
        if self.weight_decay < 0:
            raise ConfigInvalidError("weight_decay must be >= 0")
        return self

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigInvalidError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d).validate()

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigInvalidError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigInvalidError("config must be a JSON object")
        return cls.from_dict(d)


def init_model(cfg, feature_dim):
    """Build a seeded ensemble; member ``i`` draws from ``default_rng((seed, i))``."""
    cfg.validate()
    if feature_dim < 1:
        raise ConfigInvalidError("feature_dim must be >= 1")
    common = dict(input_dim=feature_dim, hidden_dim=cfg.hidden_dim, num_layers=cfg.layers,
                  fix_kappa=cfg.fix_kappa, disable_dap=cfg.disable_dap, dropout=cfg.dropout,
                  dap_distance=cfg.dap_distance)
    plan = [("zero", 0.0)]
    plan += [("negative", cfg.kappa_init_neg)] * cfg.hyper_members
    plan += [("positive", cfg.kappa_init_pos)] * cfg.spher_members
    members = [init_base_model(sc, rng=np.random.default_rng((cfg.seed, i)), kappa_init=k, **common)
               for i, (sc, k) in enumerate(plan)]
    h = cfg.hyper_members
    return EnsembleModel(members[0], members[1:1 + h], members[1 + h:], alpha=cfg.alpha, beta=cfg.beta)


class Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8, weight_decay=0.0):
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.weight_decay = weight_decay
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        self.t = 0

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, m, v in zip(self.params, self.m, self.v):
            if p.grad is None:
                continue
            g = p.grad + self.weight_decay * p.data if self.weight_decay else p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.data -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


# -- checkpoints --------------------------------------------------------------------

def _member_to_dict(m):
    return {
        "sign_class": m.sign_class,
        "layers": [
            {**{n: getattr(layer, n).data.ravel().tolist() for n in LAYER_PARAM_NAMES},
             "kappa": layer.kappa.item()}
            for layer in m.layers
        ],
        "readout_w": m.readout_w.data.ravel().tolist(),
        "readout_b": m.readout_b.data.ravel().tolist(),
    }


def _member_from_dict(d, cfg, feature_dim):
    h = cfg.hidden_dim
    sign = d["sign_class"]
    learn = sign != "zero" and not cfg.fix_kappa
    layers = []
    d_in = feature_dim
    for ld in d["layers"]:
        shapes = {"trans_w1": (d_in, h), "trans_b1": (1, h), "trans_w2": (h, h), "trans_b2": (1, h),
                  "omega_w": (2 * h, h), "omega_b": (1, h)}
        arrs = {n: T.Tensor(np.array(ld[n], dtype=np.float64).reshape(shapes[n]), requires_grad=True)
                for n in LAYER_PARAM_NAMES}
        layers.append(LayerParams(**arrs, kappa=T.Tensor([[float(ld["kappa"])]], requires_grad=learn),
                                  sign_class=sign))
        d_in = h
    concat = feature_dim + len(layers) * h
    return BaseModel(
        layers=layers,
        readout_w=T.Tensor(np.array(d["readout_w"]).reshape(concat, 2), requires_grad=True),
        readout_b=T.Tensor(np.array(d["readout_b"]).reshape(1, 2), requires_grad=True),
        sign_class=sign, fix_kappa=cfg.fix_kappa, disable_dap=cfg.disable_dap,
        dropout=cfg.dropout, dap_distance=cfg.dap_distance,
    )


@dataclass
class Checkpoint:
    config: TrainConfig
    feature_dim: int
    members: list
    best_val_f1: float
    epoch: int
    split: Split | None = None

    @classmethod
    def from_model(cls, ens, cfg, feature_dim, best_val_f1, epoch, split=None):
        return cls(copy.deepcopy(cfg), feature_dim, [_member_to_dict(m) for m in ens.members()],
                   float(best_val_f1), int(epoch), split)

    def build_model(self):
        cfg = self.config
        ms = [_member_from_dict(d, cfg, self.feature_dim) for d in self.members]
        h = cfg.hyper_members
        return EnsembleModel(ms[0], ms[1:1 + h], ms[1 + h:], alpha=cfg.alpha, beta=cfg.beta)

    def kappas(self):
        return [[layer["kappa"] for layer in m["layers"]] for m in self.members]

    def to_dict(self):
        d = {
            "format_version": FORMAT_VERSION,
            "config": self.config.to_dict(),
            "feature_dim": self.feature_dim,
            "members": self.members,
            "best_val_f1": self.best_val_f1,
            "epoch": self.epoch,
        }
        if self.split is not None:
            d["split"] = self.split.to_dict()
        return d

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                d = json.load(fh)
            if d.get("format_version") != FORMAT_VERSION:
                raise ManifestParseError(f"unsupported checkpoint format {d.get('format_version')!r}")
            split = Split.from_dict(d["split"]) if "split" in d else None
            return cls(TrainConfig.from_dict(d["config"]), int(d["feature_dim"]), d["members"],
                       float(d["best_val_f1"]), int(d["epoch"]), split)
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ManifestParseError(f"cannot read checkpoint {path}: {exc}") from exc


# -- training -----------------------------------------------------------------------

def _evaluate_model(ens, g, mask):
    Z = mulse_forward(ens, g, training=False).data[mask]
    labels = g.labels[mask]
    pred = predict(Z)
    try:
        auc = auc_score(Z[:, 1], labels)
    except OneClassOnlyError:
        auc = float("nan")
    return auc, f1_macro(pred, labels), confusion_matrix(pred, labels)


def train(g, split, cfg, progress=None):
    """Full-batch training; returns ``(checkpoint_of_best_val_epoch, history)``.

    Early stopping tracks validation macro-F1, breaking ties by validation
    AUC. ``history`` holds one dict per epoch with the training loss measured
    before that epoch's update and validation metrics measured after it.
    """
    cfg.validate()
    if split.train.size == 0 or split.val.size == 0:
        raise InsufficientLabelsError("train and val masks must be non-empty")
    if np.any(g.labels[split.train] < 0) or np.any(g.labels[split.val] < 0):
        raise InsufficientLabelsError("train/val masks contain unlabeled nodes")
    ens = init_model(cfg, g.feature_dim)
    opt = Adam(ens.parameters(), cfg.learning_rate, weight_decay=cfg.weight_decay)
    history = []
    best_key = None
    best = None
    stale = 0
    for epoch in range(cfg.max_epochs):
        opt.zero_grad()
        Z, parts = mulse_forward(ens, g, training=True, dropout_key=(cfg.seed, epoch), return_members=True)
        loss = ensemble_loss(Z, g, split.train)
        if not np.isfinite(loss.item()):
            raise NonFiniteLossError(f"loss became {loss.item()} at epoch {epoch}; kappas={[m.kappas() for m in ens.members()]}")
        if cfg.debug_checks:
            assert_ensemble_gap(parts, g, split.train)
        T.backward(loss)
        opt.step()
        ens.project_kappas()

        val_auc, val_f1, _ = _evaluate_model(ens, g, split.val)
        rec = {"epoch": epoch, "train_loss": loss.item(), "val_auc": val_auc, "val_f1": val_f1,
               "kappas": [k for m in ens.members() for k in m.kappas()]}
        history.append(rec)
        if progress is not None:
            progress(rec)
        key = (val_f1, -np.inf if np.isnan(val_auc) else val_auc)
        if best_key is None or key > best_key:
            best_key = key
            best = Checkpoint.from_model(ens, cfg, g.feature_dim, val_f1, epoch, split)
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                log.info("early stop at epoch %d (best epoch %d)", epoch, best.epoch)
                break
    return best, history


def evaluate(ckpt, g, mask):
    """Deterministic metrics of a checkpoint on labeled nodes ``mask``."""
    mask = np.asarray(mask, dtype=np.int64)
    if mask.size == 0:
        raise OneClassOnlyError("evaluation mask is empty")
    if np.any(g.labels[mask] < 0):
        raise InsufficientLabelsError("evaluation mask contains unlabeled nodes")
    ens = ckpt.build_model()
    Z = mulse_forward(ens, g, training=False).data[mask]
    labels = g.labels[mask]
    pred = predict(Z)
    return Metrics(auc_score(Z[:, 1], labels), f1_macro(pred, labels), confusion_matrix(pred, labels))


def history_csv(history, members_layers=None):
    """Render the history as CSV text: ``epoch,train_loss,val_auc,val_f1,kappa_...``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    nk = len(history[0]["kappas"]) if history else 0
    if members_layers is not None:
        kcols = [f"kappa_m{m}_l{l}" for m, nl in enumerate(members_layers) for l in range(nl)]
    else:
        kcols = [f"kappa_{i}" for i in range(nk)]
    w.writerow(["epoch", "train_loss", "val_auc", "val_f1", *kcols])
    for r in history:
        w.writerow([r["epoch"], repr(r["train_loss"]), repr(r["val_auc"]), repr(r["val_f1"]),
                    *(repr(k) for k in r["kappas"])])
    return buf.getvalue()


def write_history(history, path, members_layers=None):
    Path(path).write_text(history_csv(history, members_layers), encoding="utf-8")
