"""Independent brute-force references used by the tests."""
from dagplace.graph import comm_time


def contiguous_partition_optimum(graph, sequence, model, max_range, mem_limit):
    """Minimum crossing cost over every way of cutting ``sequence`` into runs.

    Each subset of the n-1 interior cut positions is a bitmask; an edge
    crosses a boundary iff some cut lies in (pos[src], pos[dst]].
    Returns (cost, starts), or (None, None) if no partition is admissible.
    """
    n = len(sequence)
    if n == 0:
        return 0, ()
    pos = {v: i for i, v in enumerate(sequence)}
    mem = [graph.node[v].memory for v in sequence]
    edge_masks = []
    for e in graph.edges:
        a, b = pos[e.src], pos[e.dst]
        mask = 0
        for c in range(a + 1, b + 1):
            mask |= 1 << c
        edge_masks.append((mask, comm_time(e.tensor_bytes, model)))
    best_cost, best_starts = None, None
    for cuts in range(1 << n):
        if cuts & 1:
            continue  # bit 0 would be a cut before the first position
        starts = [0] + [c for c in range(1, n) if cuts >> c & 1]
        bounds = starts + [n]
        if any(b - a > max_range or sum(mem[a:b]) > mem_limit for a, b in zip(bounds, bounds[1:])):
            continue
        cost = sum(c for m, c in edge_masks if m & cuts)
        if best_cost is None or cost < best_cost:
            best_cost, best_starts = cost, tuple(starts)
    return best_cost, best_starts


def has_path_avoiding_edge(graph, u, v):
    """Depth-first search from u to v that may not use the edge (u, v) itself."""
    stack = [s for s, _ in graph.succ[u] if s != v]
    seen = set(stack)
    while stack:
        x = stack.pop()
        if x == v:
            return True
        for s, _ in graph.succ[x]:
            if s not in seen:
                seen.add(s)
                stack.append(s)
    return False


def reference_schedule(graph, assignment, model):
    """Slow restatement of the simulator's semantics.

    Repeatedly dispatches, among all released tasks, the one with the smallest
    (release time, kind, index); compute tasks are kind 0 and transfers kind 1.
    Returns ({node: (start, end)}, {edge: (start, end)}).
    """
    ids = sorted(graph.node_ids)
    idx = {v: i for i, v in enumerate(ids)}
    edges = sorted(graph.edges, key=lambda e: (e.src, e.dst, e.tensor_bytes))
    need = {v: sum(1 for e in edges if e.dst == v) for v in ids}
    data_at = {v: 0 for v in ids}
    released = {("n", v): 0 for v in ids if need[v] == 0}
    free = {}
    nodes, transfers = {}, {}
    while released:
        def key(item):
            (tag, ref), t = item
            return (t, 0 if tag == "n" else 1, idx[ref] if tag == "n" else edges.index(ref))

        (tag, ref), t = min(released.items(), key=key)
        del released[(tag, ref)]
        if tag == "n":
            d = assignment[ref]
            s = max(t, free.get(("c", d), 0))
            f = s + graph.node[ref].compute_time
            free[("c", d)] = f
            nodes[ref] = (s, f)
            for e in edges:
                if e.src != ref:
                    continue
                if assignment[e.dst] != d:
                    released[("e", e)] = f
                else:
                    data_at[e.dst] = max(data_at[e.dst], f)
                    need[e.dst] -= 1
                    if need[e.dst] == 0:
                        released[("n", e.dst)] = data_at[e.dst]
        else:
            e = ref
            ds, dd = assignment[e.src], assignment[e.dst]
            s = max(t, free.get(("s", ds), 0), free.get(("r", dd), 0))
            f = s + comm_time(e.tensor_bytes, model)
            free[("s", ds)] = f
            free[("r", dd)] = f
            transfers[(e.src, e.dst)] = (s, f)
            data_at[e.dst] = max(data_at[e.dst], f)
            need[e.dst] -= 1
            if need[e.dst] == 0:
                released[("n", e.dst)] = data_at[e.dst]
    return nodes, transfers
