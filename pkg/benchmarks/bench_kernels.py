"""Compare the numba and numpy backends on the edge kernels and a full training step.

Usage: python3 benchmarks/bench_kernels.py [--nodes 500 5000] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from spacegnn import _kernels as K
from spacegnn import graphdata as gd
from spacegnn import tensor as T
from spacegnn import trainer as tr
from spacegnn.ensemble import ensemble_loss, mulse_forward


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def bench_kernels(g, hidden, repeat):
    rng = np.random.default_rng(0)
    m = g.csr_neighbors.size
    edge_vals = rng.normal(size=(m, hidden))
    rows = {}
    for name in ("numpy", "numba"):
        if name == "numba" and not K.HAVE_NUMBA:
            continue
        with K.using_backend(name):
            K.segment_sum(edge_vals, g.csr_offsets)  # compile outside the timing
            K.scatter_add_rows(edge_vals, g.csr_neighbors, g.num_nodes)
            rows[name] = (
                best_of(lambda: K.segment_sum(edge_vals, g.csr_offsets), repeat, 50),
                best_of(lambda: K.scatter_add_rows(edge_vals, g.csr_neighbors, g.num_nodes), repeat, 50),
            )
    return rows


def bench_step(g, cfg, repeat):
    ens = tr.init_model(cfg, g.feature_dim)
    mask = g.labeled[:100]

    def step():
        loss = ensemble_loss(mulse_forward(ens, g, training=True, dropout_key=(0, 0)), g, mask)
        T.backward(loss)

    out = {}
    for name in ("numpy", "numba"):
        if name == "numba" and not K.HAVE_NUMBA:
            continue
        with K.using_backend(name):
            step()
            out[name] = best_of(step, repeat, 3)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, nargs="+", default=[500, 5000], help="graph sizes to time")
    ap.add_argument("--repeat", type=int, default=5, help="timing repeats (best is reported)")
    args = ap.parse_args()
    cfg = tr.TrainConfig()
    print(f"{'nodes':>7} {'edges':>8} {'op':<22} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for n in args.nodes:
        g = gd.synth_gaussian_graph(gd.SynthConfig(num_nodes=n, seed=0))
        kernels = bench_kernels(g, cfg.hidden_dim, args.repeat)
        step = bench_step(g, cfg, args.repeat)
        table = [("segment_sum", 0), ("scatter_add_rows", 1)]
        for op, i in table:
            a = kernels["numpy"][i] * 1e3
            b = kernels.get("numba", (np.nan, np.nan))[i] * 1e3
            print(f"{n:>7} {g.num_edges:>8} {op:<22} {a:>10.3f} {b:>10.3f} {a / b:>7.2f}x")
        a, b = step["numpy"] * 1e3, step.get("numba", np.nan) * 1e3
        print(f"{n:>7} {g.num_edges:>8} {'forward+backward':<22} {a:>10.3f} {b:>10.3f} {a / b:>7.2f}x")


if __name__ == "__main__":
    main()
