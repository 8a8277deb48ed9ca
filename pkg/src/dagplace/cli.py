"""``dagplace`` command line.

Exit codes: 0 success, 1 unexpected failure, 2 invalid input, 3 placement
emitted with OOM risk.  Errors are written to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from dagplace import io
from dagplace.errors import DagPlaceError
from dagplace.estimation import estimate_graph, fit_comm_model, fit_node_models, sequential_eval_placement
from dagplace.fusion import DEFAULT_MEM_FRACTION, DEFAULT_RANGE, FusionConfig, fuse
from dagplace.generators import DEFAULT_COMM, KINDS, SyntheticSpec, devices_for, gen
from dagplace.graph import ccr, compute_levels, validate
from dagplace.ordering import Policy, order_graph
from dagplace.pipeline import STRATEGIES, PipelineConfig, cluster_memory_limit, evaluate_pipeline, place_graph
from dagplace.simulator import simulate

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2
EXIT_OOM = 3

log = logging.getLogger("dagplace")


class UsageError(DagPlaceError):
    pass


def _setup_logging():
    level = os.environ.get("DAGPLACE_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _emit_error(kind: str, message: str, code: int, **extra):
    doc = {"schema_version": io.SCHEMA_VERSION, "error": kind, "message": message, "exit_code": code}
    doc.update(extra)
    sys.stderr.write(json.dumps(doc, sort_keys=True) + "\n")


def _flatten(doc, prefix=""):
    rows = []
    for key, val in doc.items():
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            if all(not isinstance(v, (dict, list)) for v in val.values()) and len(val) <= 8:
                rows.extend(_flatten(val, name + "."))
            else:
                rows.append((name, f"{{{len(val)} entries}}"))
        elif isinstance(val, list):
            rows.append((name, f"[{len(val)} items]"))
        else:
            rows.append((name, "null" if val is None else str(val)))
    return rows


def render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return io.dumps(doc)
    rows = _flatten(doc)
    width = max((len(k) for k, _ in rows), default=0)
    return "".join(f"{k.ljust(width)}  {v}\n" for k, v in rows)


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required for `{args.command}`")


def _comm(args):
    if args.devices is None:
        return None, DEFAULT_COMM
    return io.load_devices(args.devices)


def _write_trace(path, tasks):
    lines = "".join(json.dumps(t.to_dict(), sort_keys=True) + "\n" for t in tasks)
    io.write_text(path, lines)


def cmd_validate(args):
    graph = io.load_graph(args.graph)
    res = validate(graph)
    doc = {
        "schema_version": io.SCHEMA_VERSION,
        "valid": res.ok,
        "nodes": len(graph.nodes),
        "edges": len(graph.edges),
        "errors": [{"type": type(e).__name__, "message": str(e)} for e in res.errors],
    }
    if res.ok and graph.total_compute > 0:
        _, model = _comm(args)
        doc["ccr"] = round(ccr(graph, model), 6)
    return doc, EXIT_OK if res.ok else EXIT_INVALID


def cmd_order(args):
    graph = io.load_graph(args.graph)
    validate(graph).raise_if_invalid()
    _, model = _comm(args)
    policy = Policy(args.policy)
    levels = compute_levels(graph, model) if policy is Policy.CPD_TOPO else None
    order = order_graph(graph, policy, levels)
    return {"schema_version": io.SCHEMA_VERSION, "policy": policy.value, "sequence": list(order.sequence)}, EXIT_OK


def cmd_fuse(args):
    _require(args, "devices")
    graph = io.load_graph(args.graph)
    devices, model = io.load_devices(args.devices)
    limit = cluster_memory_limit(devices, args.cluster_mem_fraction)
    coarse, cmap = fuse(graph, model, FusionConfig(args.range, limit))
    doc = io.graph_to_dict(coarse)
    doc["clusters"] = [list(c.members) for c in cmap.clusters]
    doc["breakpoints"] = list(cmap.breakpoints)
    doc["cut_cost"] = cmap.cut_cost
    doc["cluster_memory_limit"] = limit
    return doc, EXIT_OK


def cmd_place(args):
    _require(args, "devices")
    graph = io.load_graph(args.graph)
    devices, model = io.load_devices(args.devices)
    res = place_graph(
        graph, devices, model, args.strategy, args.range, args.cluster_mem_fraction, fused=not args.no_fusion
    )
    doc = io.placement_to_dict(res.placement, [d.id for d in devices])
    doc["strategy"] = args.strategy
    return doc, EXIT_OOM if res.placement.oom_risk else EXIT_OK


def cmd_estimate(args):
    _require(args, "profiles", "target_batch")
    graph = io.load_graph(args.graph)
    profiles, extras = io.profiles_from_dict(io.read_json(args.profiles), str(args.profiles))
    models = fit_node_models(profiles)
    est = estimate_graph(graph, models, args.target_batch, extras["base_batch"], extras["edge_overrides"])
    validate(est).raise_if_invalid()
    doc = io.graph_to_dict(est)
    diag = models.diagnostics()
    diag["target_batch"] = args.target_batch
    doc["diagnostics"] = diag
    if len({d for d, _ in profiles.comm_samples}) >= 2:
        cm = fit_comm_model(profiles.comm_samples)
        doc["comm"] = {"k_us_per_byte": cm.k, "b_us": cm.b}
    code = EXIT_OK
    if args.devices is not None:
        devices, _ = io.load_devices(args.devices)
        p = sequential_eval_placement(est, devices)
        doc["sequential_placement"] = io.placement_to_dict(p, [d.id for d in devices])
        code = EXIT_OOM if p.oom_risk else EXIT_OK
    return doc, code


def cmd_simulate(args):
    _require(args, "devices", "placement")
    graph = io.load_graph(args.graph)
    validate(graph).raise_if_invalid()
    devices, model = io.load_devices(args.devices)
    placement = io.load_placement(args.placement)
    rep = simulate(graph, placement, devices, model)
    if args.trace:
        _write_trace(args.trace, rep.tasks)
    doc = {"schema_version": io.SCHEMA_VERSION, **rep.to_dict()}
    return doc, EXIT_OOM if rep.oom_flag else EXIT_OK


def cmd_pipeline(args):
    _require(args, "devices")
    graph = io.load_graph(args.graph)
    devices, model = io.load_devices(args.devices)
    profiles = base_batch = overrides = None
    if args.profiles is not None:
        _require(args, "target_batch")
        profiles, extras = io.profiles_from_dict(io.read_json(args.profiles), str(args.profiles))
        base_batch, overrides = extras["base_batch"], extras["edge_overrides"]
    config = PipelineConfig(
        strategy=args.strategy,
        exploration_range=args.range,
        cluster_mem_fraction=args.cluster_mem_fraction,
        target_batch=args.target_batch,
        seed=args.seed or 0,
        trace=bool(args.trace),
    )
    rep = evaluate_pipeline(graph, devices, model, config, profiles, base_batch, overrides)
    doc = rep.to_dict(include_timing=args.timing)
    chosen = rep.placements[args.strategy]
    doc["strategy"] = args.strategy
    doc["placement"] = io.placement_to_dict(chosen, [d.id for d in devices])
    if args.trace:
        final = rep.estimated_graph if rep.estimated_graph is not None else graph
        _write_trace(args.trace, simulate(final, chosen, devices, model).tasks)
    return doc, EXIT_OOM if rep.oom_risk[args.strategy] else EXIT_OK


def cmd_gen(args):
    _require(args, "seed")
    spec = SyntheticSpec(
        kind=args.kind,
        nodes=args.nodes,
        seed=args.seed,
        layer_width=args.layer_width,
        edges_per_node=args.edges_per_node,
        target_ccr=args.target_ccr,
        chains=args.chains,
    )
    graph = gen(spec)
    if args.devices_out:
        devices = devices_for(graph, args.num_devices, args.load)
        io.write_text(args.devices_out, io.dumps(io.devices_to_dict(devices, DEFAULT_COMM)))
    doc = io.graph_to_dict(graph)
    doc["ccr"] = round(ccr(graph, DEFAULT_COMM), 6) if graph.total_compute else None
    return doc, EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "order": cmd_order,
    "fuse": cmd_fuse,
    "place": cmd_place,
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "pipeline": cmd_pipeline,
    "gen": cmd_gen,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="-", help="output path (default stdout)")
    common.add_argument("--format", choices=("json", "table"), default="json")
    common.add_argument("--seed", type=int, default=None)

    graph_in = argparse.ArgumentParser(add_help=False)
    graph_in.add_argument("--graph", required=True, help="graph JSON")
    graph_in.add_argument("--devices", default=None, help="devices JSON (capacities and comm model)")

    fusion = argparse.ArgumentParser(add_help=False)
    fusion.add_argument("--range", type=int, default=DEFAULT_RANGE, help="exploration range R")
    fusion.add_argument("--cluster-mem-fraction", type=float, default=DEFAULT_MEM_FRACTION)

    parser = argparse.ArgumentParser(prog="dagplace", description="Computation-graph placement for model parallelism.")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", parents=[common, graph_in], help="check graph invariants")
    p = sub.add_parser("order", parents=[common, graph_in], help="topological order")
    p.add_argument("--policy", choices=[x.value for x in Policy], default=Policy.CPD_TOPO.value)
    sub.add_parser("fuse", parents=[common, graph_in, fusion], help="fuse into a coarse graph")
    p = sub.add_parser("place", parents=[common, graph_in, fusion], help="generate a placement")
    p.add_argument("--strategy", choices=STRATEGIES, default="adjust")
    p.add_argument("--no-fusion", action="store_true", help="place the graph as is")
    p = sub.add_parser("estimate", parents=[common, graph_in], help="extrapolate costs from profiles")
    p.add_argument("--profiles", default=None)
    p.add_argument("--target-batch", type=int, default=None)
    p = sub.add_parser("simulate", parents=[common, graph_in], help="simulate a placement")
    p.add_argument("--placement", default=None, help="placement JSON")
    p.add_argument("--trace", default=None, help="write the event log as JSON lines")
    p = sub.add_parser("pipeline", parents=[common, graph_in, fusion], help="estimate, fuse, place, simulate")
    p.add_argument("--profiles", default=None)
    p.add_argument("--target-batch", type=int, default=None)
    p.add_argument("--strategy", choices=STRATEGIES, default="adjust")
    p.add_argument("--trace", default=None, help="write the chosen placement's event log as JSON lines")
    p.add_argument("--timing", action="store_true", help="include wall-clock placement time (not reproducible)")
    p = sub.add_parser("gen", parents=[common], help="generate a synthetic graph")
    p.add_argument("--kind", choices=KINDS, default="layered")
    p.add_argument("--nodes", type=int, default=1000)
    p.add_argument("--layer-width", type=int, default=8)
    p.add_argument("--edges-per-node", type=float, default=1.7)
    p.add_argument("--target-ccr", type=float, default=None)
    p.add_argument("--chains", type=int, default=2)
    p.add_argument("--devices-out", default=None, help="also write a matching devices JSON")
    p.add_argument("--num-devices", type=int, default=4)
    p.add_argument("--load", type=float, default=0.75, help="graph memory / aggregate device memory")
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        doc, code = COMMANDS[args.command](args)
    except DagPlaceError as exc:
        _emit_error(type(exc).__name__, str(exc), EXIT_INVALID)
        return EXIT_INVALID
    except (ValueError, OSError) as exc:
        _emit_error(type(exc).__name__, str(exc), EXIT_INVALID)
        return EXIT_INVALID
    except Exception as exc:  # pragma: no cover - last resort
        log.debug("unexpected failure", exc_info=True)
        _emit_error(type(exc).__name__, str(exc), EXIT_FAILURE)
        return EXIT_FAILURE
    io.write_text(args.out, render(doc, args.format))
    if code == EXIT_OOM:
        _emit_error("OOMRisk", "placement emitted, but at least one device is over capacity", EXIT_OOM)
    return code


if __name__ == "__main__":
    sys.exit(main())
