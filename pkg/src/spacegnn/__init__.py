"""Multi-curvature graph neural networks for node anomaly detection."""

from . import diagnostics, geometry, graphdata, metrics, tensor
from ._kernels import backend, set_backend, using_backend
from .ensemble import EnsembleModel, mulse_forward, proposition1_gap
from .geometry import Curvature, dist_approx, dist_exact, exp_origin, log_origin, mobius_add
from .graphdata import Graph, Split, SynthConfig, from_edges, load_graph, split_random, synth_gaussian_graph, write_graph
from .metrics import Metrics, auc_score, f1_macro
from .model import BaseModel, base_forward, init_base_model
from .trainer import Checkpoint, TrainConfig, evaluate, init_model, train

__version__ = "0.1.0"

__all__ = [
    "diagnostics", "geometry", "graphdata", "metrics", "tensor",
    "backend", "set_backend", "using_backend",
    "EnsembleModel", "mulse_forward", "proposition1_gap",
    "Curvature", "dist_approx", "dist_exact", "exp_origin", "log_origin", "mobius_add",
    "Graph", "Split", "SynthConfig", "from_edges", "load_graph", "split_random", "synth_gaussian_graph", "write_graph",
    "Metrics", "auc_score", "f1_macro",
    "BaseModel", "base_forward", "init_base_model",
    "Checkpoint", "TrainConfig", "evaluate", "init_model", "train",
]
