"""Compare the compiled and pure-Python kernels on a large synthetic graph.

    python3 benchmarks/bench_kernels.py [--nodes 36000] [--repeat 3]
"""
import argparse
import time

from dagplace import _kernels
from dagplace.fusion import DEFAULT_RANGE, partition_edges
from dagplace.generators import DEFAULT_COMM, SyntheticSpec, devices_for, gen
from dagplace.graph import compute_levels
from dagplace.ordering import cpd_topo
from dagplace.pipeline import cluster_memory_limit
from dagplace.simulator import _DenseGraph


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=36000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    g = gen(SyntheticSpec(kind="layered", nodes=args.nodes, seed=0, target_ccr=110.0, edges_per_node=1.9))
    devs = devices_for(g, 4)
    order = cpd_topo(g, compute_levels(g, DEFAULT_COMM))
    arrays = partition_edges(g, order, DEFAULT_COMM)
    limit = cluster_memory_limit(devs, 0.25)
    dense = _DenseGraph(g, DEFAULT_COMM)
    pos = order.positions()
    dev = [min(3, pos[v] * 4 // len(g)) for v in dense.ids]
    sim_args = (dense.w, dev, dense.succ_ptr, dense.succ_edge, dense.edge_src, dense.edge_dst, dense.edge_cost, 4)

    backends = [("python", _kernels.python_backend)]
    if _kernels.compiled_backend is not None:
        backends.append(("cython", _kernels.compiled_backend))
    print(f"graph: {len(g)} nodes, {len(g.edges)} edges, R={DEFAULT_RANGE}")
    results = {}
    for name, mod in backends:
        t_dp, dp = best_of(lambda: mod.breakpoint_dp(*arrays, DEFAULT_RANGE, limit), args.repeat)
        t_sim, sim = best_of(lambda: mod.simulate(*sim_args), args.repeat)
        results[name] = (list(dp[0]), list(sim[1]))
        print(f"{name:>7}  breakpoint_dp {t_dp * 1e3:9.1f} ms   simulate {t_sim * 1e3:9.1f} ms")
    if len(results) == 2:
        assert results["python"] == results["cython"], "backends disagree"
        print("outputs identical")
    else:
        print("compiled extension not built; only the Python backend was timed")


if __name__ == "__main__":
    main()
