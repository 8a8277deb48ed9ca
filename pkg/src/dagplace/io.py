"""JSON documents: graphs, devices, profiles and placements.

Every document carries ``"schema_version": 1``.  Parsing errors name the
offending field path, e.g. ``nodes[3].compute_us``.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from dagplace.errors import SchemaError
from dagplace.estimation import BatchProfile, ProfileSet
from dagplace.graph import CommModel, ComputationGraph, DeviceSpec, OpNode, TensorEdge
from dagplace.placement import Placement

SCHEMA_VERSION = 1


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def read_json(path: str | Path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise SchemaError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def write_text(path: str | Path | None, text: str):
    if path is None or str(path) == "-":
        import sys

        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _check_version(doc, where):
    if not isinstance(doc, dict):
        raise SchemaError(f"{where}: expected a JSON object")
    v = doc.get("schema_version", SCHEMA_VERSION)
    if v != SCHEMA_VERSION:
        raise SchemaError(f"{where}.schema_version: unsupported version {v!r}")


def _get(obj, key, kind, path, optional=False, default=None):
    if not isinstance(obj, dict):
        raise SchemaError(f"{path}: expected an object")
    if key not in obj:
        if optional:
            return default
        raise SchemaError(f"{path}.{key}: missing required field")
    val = obj[key]
    if optional and val is None:
        return default
    if kind is int:
        ok = isinstance(val, int) and not isinstance(val, bool)
    elif kind is float:
        ok = isinstance(val, (int, float)) and not isinstance(val, bool)
    else:
        ok = isinstance(val, kind)
    if not ok:
        raise SchemaError(f"{path}.{key}: expected {kind.__name__}, got {type(val).__name__}")
    return val


def graph_to_dict(graph: ComputationGraph) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "nodes": [
            {
                "id": n.id,
                "name": n.name,
                "compute_us": n.compute_time,
                "memory_bytes": n.memory,
                "colocation_group": n.colocation_group,
            }
            for n in sorted(graph.nodes, key=lambda n: n.id)
        ],
        "edges": [{"src": e.src, "dst": e.dst, "tensor_bytes": e.tensor_bytes} for e in graph.sorted_edges],
    }


def graph_from_dict(doc: dict, where: str = "graph") -> ComputationGraph:
    _check_version(doc, where)
    raw_nodes = _get(doc, "nodes", list, where)
    raw_edges = _get(doc, "edges", list, where)
    nodes = []
    for i, rn in enumerate(raw_nodes):
        p = f"nodes[{i}]"
        nid = _get(rn, "id", int, p)
        nodes.append(
            OpNode(
                id=nid,
                name=_get(rn, "name", str, p, optional=True, default=f"op_{nid}"),
                compute_time=_get(rn, "compute_us", int, p),
                memory=_get(rn, "memory_bytes", int, p),
                colocation_group=_get(rn, "colocation_group", str, p, optional=True),
            )
        )
    edges = []
    for i, re_ in enumerate(raw_edges):
        p = f"edges[{i}]"
        edges.append(TensorEdge(_get(re_, "src", int, p), _get(re_, "dst", int, p), _get(re_, "tensor_bytes", int, p)))
    return ComputationGraph(nodes, edges)


def load_graph(path) -> ComputationGraph:
    return graph_from_dict(read_json(path), str(path))


def devices_to_dict(devices: list[DeviceSpec], comm: CommModel) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "devices": [{"id": d.id, "memory_bytes": d.memory_capacity} for d in sorted(devices, key=lambda d: d.id)],
        "comm": {"k_us_per_byte": comm.k, "b_us": comm.b},
    }


def devices_from_dict(doc: dict, where: str = "devices") -> tuple[list[DeviceSpec], CommModel]:
    _check_version(doc, where)
    raw = _get(doc, "devices", list, where)
    if not raw:
        raise SchemaError(f"{where}.devices: at least one device is required")
    devices = []
    seen = set()
    for i, rd in enumerate(raw):
        p = f"devices[{i}]"
        did = _get(rd, "id", int, p)
        mem = _get(rd, "memory_bytes", int, p)
        if did in seen:
            raise SchemaError(f"{p}.id: duplicate device id {did}")
        if mem <= 0:
            raise SchemaError(f"{p}.memory_bytes: must be > 0")
        seen.add(did)
        devices.append(DeviceSpec(did, mem))
    comm = _get(doc, "comm", dict, where)
    k = _get(comm, "k_us_per_byte", float, "comm")
    b = _get(comm, "b_us", float, "comm")
    if k < 0 or b < 0:
        raise SchemaError("comm: k_us_per_byte and b_us must be >= 0")
    return sorted(devices, key=lambda d: d.id), CommModel(float(k), float(b))


def load_devices(path) -> tuple[list[DeviceSpec], CommModel]:
    return devices_from_dict(read_json(path), str(path))


def profiles_from_dict(doc: dict, where: str = "profiles") -> tuple[ProfileSet, dict]:
    """Parse a profile document.

    Returns the profile set plus extras: ``base_batch`` (int or None) and
    ``edge_overrides`` (``{(src, dst): bytes}``).
    """
    _check_version(doc, where)
    batches = []
    for i, rb in enumerate(_get(doc, "batches", list, where)):
        p = f"batches[{i}]"
        size = _get(rb, "batch_size", int, p)
        raw_nodes = _get(rb, "nodes", dict, p)
        nodes = {}
        for key, val in raw_nodes.items():
            q = f"{p}.nodes[{key}]"
            try:
                nid = int(key)
            except ValueError:
                raise SchemaError(f"{q}: node key must be an integer id") from None
            nodes[nid] = (_get(val, "memory_bytes", int, q), _get(val, "compute_us", int, q))
        batches.append(BatchProfile(size, nodes))
    samples = []
    for i, s in enumerate(doc.get("comm_samples", []) or []):
        if not (isinstance(s, list) and len(s) == 2 and all(isinstance(x, (int, float)) for x in s)):
            raise SchemaError(f"comm_samples[{i}]: expected [bytes, us]")
        samples.append((s[0], float(s[1])))
    overrides = {}
    for i, ro in enumerate(doc.get("edge_overrides", []) or []):
        p = f"edge_overrides[{i}]"
        overrides[(_get(ro, "src", int, p), _get(ro, "dst", int, p))] = _get(ro, "tensor_bytes", int, p)
    base_batch = _get(doc, "base_batch", int, where, optional=True)
    return ProfileSet(tuple(batches), tuple(samples)), {"base_batch": base_batch, "edge_overrides": overrides}


def profiles_to_dict(profiles: ProfileSet, base_batch: int | None = None) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "batches": [
            {
                "batch_size": b.batch_size,
                "nodes": {str(v): {"memory_bytes": m, "compute_us": t} for v, (m, t) in sorted(b.nodes.items())},
            }
            for b in profiles.batches
        ],
        "comm_samples": [[d, t] for d, t in profiles.comm_samples],
    }
    if base_batch is not None:
        doc["base_batch"] = base_batch
    return doc


def placement_to_dict(placement: Placement, device_ids=None) -> dict:
    device_ids = device_ids or sorted(placement.per_device_memory)
    return {
        "schema_version": SCHEMA_VERSION,
        "assignment": {str(v): d for v, d in sorted(placement.assignment.items())},
        "per_device_memory": {str(d): m for d, m in sorted(placement.per_device_memory.items())},
        "oom_risk": placement.oom_risk,
        "decision_log": [dec.to_dict(device_ids) for dec in placement.decision_log],
    }


def placement_from_dict(doc: dict, where: str = "placement") -> Placement:
    _check_version(doc, where)
    raw = _get(doc, "assignment", dict, where)
    assignment = {}
    for key, d in raw.items():
        try:
            v = int(key)
        except ValueError:
            raise SchemaError(f"{where}.assignment[{key}]: node key must be an integer id") from None
        if not isinstance(d, int) or isinstance(d, bool):
            raise SchemaError(f"{where}.assignment[{key}]: expected int device id")
        assignment[v] = d
    mem = {int(k): v for k, v in (doc.get("per_device_memory") or {}).items()}
    return Placement(assignment, mem, bool(doc.get("oom_risk", False)))


def load_placement(path) -> Placement:
    return placement_from_dict(read_json(path), str(path))
