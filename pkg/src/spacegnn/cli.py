"""Command-line entry point: ``spacegnn {synth,train,eval,diagnose}``.

Exit codes: 0 ok, 2 usage/config/IO error, 3 non-finite loss, 4 metric undefined.
"""

import argparse
import json
import logging
import re
import sys
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from . import graphdata as gd
from . import trainer as tr
from .errors import NonFiniteLossError, OneClassOnlyError, SpaceGNNError

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_METRIC = 0, 2, 3, 4

log = logging.getLogger("spacegnn")


class UsageError(Exception):
    pass


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _write_manifest(path, command, args, extra=None):
    rec = {"command": command, "args": {k: v for k, v in sorted(vars(args).items()) if k != "func"}}
    if extra:
        rec.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rec, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


# -- commands -------------------------------------------------------------------------

def cmd_synth(args):
    cfg = gd.SynthConfig(num_nodes=args.nodes, anomaly_rate=args.anomaly_rate, feature_dim=args.dim,
                         mean_separation=args.sep, feature_std=args.std, homophily=args.homophily,
                         avg_degree=args.degree, seed=args.seed)
    g = gd.synth_gaussian_graph(cfg)
    out = Path(args.out)
    path = gd.write_graph(g, out)
    _write_manifest(out / "run_manifest.json", "synth", args, {"synth_config": vars(cfg), "outputs": [path.name]})
    print(f"wrote {path} ({g.num_nodes} nodes, {g.num_edges} edges, {int((g.labels == 1).sum())} anomalous)")
    return EXIT_OK


def cmd_train(args):
    if not Path(args.config).is_file():
        raise UsageError(f"config file not found: {args.config}")
    cfg = tr.TrainConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    g = gd.load_graph(args.graph)
    split = gd.split_random(g, args.train_size, args.val_size, cfg.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def progress(rec):
        log.info("epoch %d loss %.6f val_auc %.4f val_f1 %.4f", rec["epoch"], rec["train_loss"],
                 rec["val_auc"], rec["val_f1"])

    ckpt, history = tr.train(g, split, cfg, progress=progress)
    ckpt.save(out / "checkpoint.json")
    members_layers = [len(m["layers"]) for m in ckpt.members]
    tr.write_history(history, out / "history.csv", members_layers)
    _write_manifest(out / "run_manifest.json", "train", args, {
        "config": cfg.to_dict(),
        "split": {"seed": split.seed, "train": int(split.train.size), "val": int(split.val.size),
                  "test": int(split.test.size)},
        "outputs": ["checkpoint.json", "history.csv"],
    })
    print(f"best epoch {ckpt.epoch} val_f1={ckpt.best_val_f1!r} -> {out / 'checkpoint.json'}")
    return EXIT_OK


def cmd_eval(args):
    ckpt = tr.Checkpoint.load(args.ckpt)
    g = gd.load_graph(args.graph)
    if ckpt.split is None:
        raise UsageError("checkpoint carries no split")
    mask = ckpt.split.mask(args.split)
    m = tr.evaluate(ckpt, g, mask)
    print(f"auc={m.auc!r} f1={m.f1_macro!r}")
    out = Path(args.out) if args.out else Path(args.ckpt).with_name(f"metrics_{args.split}.json")
    with open(out, "w", encoding="utf-8") as fh:
        json.dump({"split": args.split, **m.to_dict()}, fh, indent=2)
        fh.write("\n")
    _write_manifest(out.with_suffix(".manifest.json"), "eval", args, {"outputs": [out.name]})
    return EXIT_OK


def _triplet(args):
    if args.triplet is not None:
        if args.graph is None:
            raise UsageError("--triplet needs --graph")
        ids = args.triplet
        if len(ids) != 3:
            raise UsageError("--triplet takes exactly three node ids")
        g = gd.load_graph(args.graph)
        if max(ids) >= g.num_nodes or min(ids) < 0:
            raise UsageError(f"triplet ids out of range for {g.num_nodes} nodes")
        return tuple(g.features[i] for i in ids)
    vecs = (args.x0, args.x1, args.y)
    if len({len(v) for v in vecs}) != 1:
        raise UsageError("--x0, --x1 and --y must have equal dimension")
    return tuple(np.array(v) for v in vecs)


def cmd_diagnose_er(args):
    curve = diag.er_curve(_triplet(args), args.kappa_min, args.kappa_max, args.steps)
    diag.write_rows(args.out, ["kappa", "er"], curve.rows())
    _write_manifest(Path(args.out).with_suffix(".manifest.json"), "diagnose er", args, {"outputs": [Path(args.out).name]})
    print(f"wrote {len(curve.kappa_grid)} rows to {args.out}")
    return EXIT_OK


def cmd_diagnose_wh(args):
    g = gd.load_graph(args.graph)
    report = diag.homogeneity_report(g, args.kappa)
    report.write_csv(args.out)
    _write_manifest(Path(args.out).with_suffix(".manifest.json"), "diagnose wh", args,
                    {"outputs": [Path(args.out).name], "graph_level": report.summary()})
    print(" ".join(f"{k}={v!r}" for k, v in report.summary().items()))
    return EXIT_OK


def cmd_diagnose_thm1(args):
    rows = diag.theorem1_simulation(args.mu_dist, args.sigma, args.p_grid, args.samples, args.seed, dim=args.dim)
    diag.write_rows(args.out, ["p", "empirical", "closed_form"], rows)
    _write_manifest(Path(args.out).with_suffix(".manifest.json"), "diagnose thm1", args, {"outputs": [Path(args.out).name]})
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="spacegnn", description="Multi-curvature GNN node anomaly detection.")
    p.add_argument("-v", "--verbose", action="store_true", help="log per-epoch progress")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic Gaussian graph")
    s.add_argument("--nodes", type=int, default=500, help="number of nodes")
    s.add_argument("--anomaly-rate", type=float, default=0.05, help="probability a node is anomalous")
    s.add_argument("--dim", type=int, default=8, help="feature dimension")
    s.add_argument("--sep", type=float, default=3.0, help="distance between class means")
    s.add_argument("--std", type=float, default=1.0, help="per-coordinate feature standard deviation")
    s.add_argument("--homophily", type=float, default=0.9, help="probability an edge stays within its class")
    s.add_argument("--degree", type=float, default=8.0, help="average degree")
    s.add_argument("--seed", type=int, default=0, help="random seed")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_synth)

    t = sub.add_parser("train", help="train a SpaceGNN ensemble")
    t.add_argument("--graph", required=True, help="graph manifest JSON")
    t.add_argument("--config", required=True, help="training config JSON")
    t.add_argument("--out", required=True, help="output directory")
    t.add_argument("--seed", type=int, default=None, help="override config seed (also seeds the split)")
    t.add_argument("--train-size", type=int, default=50, help="labeled training nodes")
    t.add_argument("--val-size", type=int, default=50, help="labeled validation nodes")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint on a split")
    e.add_argument("--graph", required=True, help="graph manifest JSON")
    e.add_argument("--ckpt", required=True, help="checkpoint JSON")
    e.add_argument("--split", required=True, choices=["train", "val", "test"], help="which split to score")
    e.add_argument("--out", default=None, help="metrics JSON path (default: next to checkpoint)")
    e.set_defaults(func=cmd_eval)

    d = sub.add_parser("diagnose", help="curvature diagnostics")
    dsub = d.add_subparsers(dest="diagnostic", required=True)

    er = dsub.add_parser("er", help="expansion rate over a curvature grid")
    er.add_argument("--graph", default=None, help="graph manifest (with --triplet)")
    er.add_argument("--triplet", type=_ints, default=None, help="node ids x0,x1,y")
    er.add_argument("--x0", type=_floats, default=[0.0, 0.0], help="raw vector x0 (class 0)")
    er.add_argument("--x1", type=_floats, default=[0.1, 0.0], help="raw vector x1 (class 0)")
    er.add_argument("--y", type=_floats, default=[0.5, 0.0], help="raw vector y (class 1)")
    er.add_argument("--kappa-min", type=float, default=-1.0, help="lowest curvature")
    er.add_argument("--kappa-max", type=float, default=1.0, help="highest curvature")
    er.add_argument("--steps", type=int, default=21, help="grid points (>= 2)")
    er.add_argument("--out", default="er_curve.csv", help="output CSV (kappa,er)")
    er.set_defaults(func=cmd_diagnose_er)

    wh = dsub.add_parser("wh", help="homogeneity and weighted homogeneity")
    wh.add_argument("--graph", required=True, help="graph manifest JSON")
    wh.add_argument("--kappa", type=_floats, default=[-1.0, 0.0, 1.0], help="comma-separated curvatures")
    wh.add_argument("--out", default="homogeneity.csv", help="output CSV")
    wh.set_defaults(func=cmd_diagnose_wh)

    th = dsub.add_parser("thm1", help="Gaussian mixing simulation")
    th.add_argument("--p-grid", type=_floats, default=[0.0, 0.25, 0.5, 0.75, 1.0], help="comma-separated p values")
    th.add_argument("--samples", type=int, default=10000, help="Monte-Carlo samples per p (>= 1000)")
    th.add_argument("--mu-dist", type=float, default=2.0, help="distance between class means")
    th.add_argument("--sigma", type=float, default=0.1, help="per-coordinate standard deviation")
    th.add_argument("--dim", type=int, default=8, help="feature dimension")
    th.add_argument("--seed", type=int, default=0, help="random seed")
    th.add_argument("--out", default="mixing.csv", help="output CSV (p,empirical,closed_form)")
    th.set_defaults(func=cmd_diagnose_thm1)
    return p


def _join_negative_values(argv):
    """Rewrite ``--flag -1,0,1`` as ``--flag=-1,0,1``; argparse would read the value as an option."""
    out = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and re.match(r"^-\.?\d", tok):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_join_negative_values(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except NonFiniteLossError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OneClassOnlyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_METRIC
    except (SpaceGNNError, UsageError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
