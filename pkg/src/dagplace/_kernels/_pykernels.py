"""Pure-Python hot loops. Same signatures and results as ``_ckernels``.

Inputs are flat integer sequences (numpy arrays or lists); outputs are lists.
"""
from __future__ import annotations

import heapq

BACKEND = "python"


def breakpoint_dp(mem, out_cost, in_ptr, in_src, in_cost, max_range, mem_limit):
    """Minimum-cut contiguous partition of a node sequence.

    ``mem[p]`` and ``out_cost[p]`` are the memory and total outgoing edge cost
    of the node at position ``p``; in-edges of position ``m`` are
    ``in_src[in_ptr[m]:in_ptr[m+1]]`` with costs ``in_cost``. Returns
    ``(S, P)`` with ``S[j]`` the optimal cut cost of the prefix ``[0, j)`` and
    ``P[j]`` the start of its last cluster; ``P[j] == -1`` marks an
    infeasible prefix.
    """
    mem = list(mem)
    out_cost = list(out_cost)
    in_ptr = list(in_ptr)
    in_src = list(in_src)
    in_cost = list(in_cost)
    n = len(mem)
    pmem = [0] * (n + 1)
    pout = [0] * (n + 1)
    for p in range(n):
        pmem[p + 1] = pmem[p] + mem[p]
        pout[p + 1] = pout[p] + out_cost[p]

    S = [0] * (n + 1)
    P = [-1] * (n + 1)
    inner = [0] * (n + 1)  # inner[i]: cost of edges fully inside [i, j)
    delta = [0] * (n + 1)
    for j in range(1, n + 1):
        lo = j - max_range
        if lo < 0:
            lo = 0
        m = j - 1
        top = -1
        for t in range(in_ptr[m], in_ptr[m + 1]):
            k = in_src[t]
            if k >= lo:
                delta[k] += in_cost[t]
                if k > top:
                    top = k
        running = 0
        for i in range(top, lo - 1, -1):
            running += delta[i]
            delta[i] = 0
            inner[i] += running

        best = -1
        arg = -1
        pj = pout[j]
        mj = pmem[j]
        for i in range(m, lo - 1, -1):
            if mj - pmem[i] > mem_limit:
                break
            if P[i] < 0 and i > 0:
                continue
            c = S[i] + pj - pout[i] - inner[i]
            if arg < 0 or c <= best:
                best = c
                arg = i
        if arg < 0:
            S[j] = 0
            P[j] = -1
        else:
            S[j] = best
            P[j] = arg
    return S, P


def simulate(w, dev, succ_ptr, succ_edge, edge_src, edge_dst, edge_cost, n_devices):
    """Event-driven makespan simulation over dense node/edge indices.

    Every engine (compute, send, receive per device) runs its tasks
    non-preemptively in (ready time, kind, index) order. A cross-device edge
    is one transfer holding the sender's send engine and the receiver's
    receive engine for its whole duration.

    Returns ``(node_start, node_end, edge_start, edge_end, completed)``;
    co-located edges keep start/end ``-1``.
    """
    w = list(w)
    dev = list(dev)
    succ_ptr = list(succ_ptr)
    succ_edge = list(succ_edge)
    edge_src = list(edge_src)
    edge_dst = list(edge_dst)
    edge_cost = list(edge_cost)
    n = len(w)
    n_edges = len(edge_src)

    rem = [0] * n
    for e in range(n_edges):
        rem[edge_dst[e]] += 1
    ready = [0] * n
    node_start = [-1] * n
    node_end = [-1] * n
    edge_start = [-1] * n_edges
    edge_end = [-1] * n_edges
    comp_free = [0] * n_devices
    send_free = [0] * n_devices
    recv_free = [0] * n_devices

    heap = [(0, 0, v) for v in range(n) if rem[v] == 0]
    heapq.heapify(heap)
    completed = 0
    while heap:
        t, kind, x = heapq.heappop(heap)
        if kind == 0:
            d = dev[x]
            s = t if t > comp_free[d] else comp_free[d]
            f = s + w[x]
            comp_free[d] = f
            node_start[x] = s
            node_end[x] = f
            completed += 1
            for q in range(succ_ptr[x], succ_ptr[x + 1]):
                e = succ_edge[q]
                y = edge_dst[e]
                if dev[y] != d:
                    heapq.heappush(heap, (f, 1, e))
                else:
                    if f > ready[y]:
                        ready[y] = f
                    rem[y] -= 1
                    if rem[y] == 0:
                        heapq.heappush(heap, (ready[y], 0, y))
        else:
            y = edge_dst[x]
            ds = dev[edge_src[x]]
            dd = dev[y]
            s = t
            if send_free[ds] > s:
                s = send_free[ds]
            if recv_free[dd] > s:
                s = recv_free[dd]
            f = s + edge_cost[x]
            send_free[ds] = f
            recv_free[dd] = f
            edge_start[x] = s
            edge_end[x] = f
            if f > ready[y]:
                ready[y] = f
            rem[y] -= 1
            if rem[y] == 0:
                heapq.heappush(heap, (ready[y], 0, y))
    return node_start, node_end, edge_start, edge_end, completed
