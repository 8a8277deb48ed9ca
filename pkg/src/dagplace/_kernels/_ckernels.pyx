# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Mirrors ``_pykernels`` exactly."""
import numpy as np
cimport numpy as cnp

ctypedef cnp.int64_t i64

BACKEND = "cython"


def breakpoint_dp(mem, out_cost, in_ptr, in_src, in_cost, i64 max_range, i64 mem_limit):
    cdef const i64[:] m_mem = np.ascontiguousarray(mem, dtype=np.int64)
    cdef const i64[:] m_out = np.ascontiguousarray(out_cost, dtype=np.int64)
    cdef const i64[:] m_ptr = np.ascontiguousarray(in_ptr, dtype=np.int64)
    cdef const i64[:] m_src = np.ascontiguousarray(in_src, dtype=np.int64)
    cdef const i64[:] m_cost = np.ascontiguousarray(in_cost, dtype=np.int64)
    cdef Py_ssize_t n = m_mem.shape[0]
    cdef i64[:] pmem = np.zeros(n + 1, dtype=np.int64)
    cdef i64[:] pout = np.zeros(n + 1, dtype=np.int64)
    S_arr = np.zeros(n + 1, dtype=np.int64)
    P_arr = np.full(n + 1, -1, dtype=np.int64)
    cdef i64[:] S = S_arr
    cdef i64[:] P = P_arr
    cdef i64[:] inner = np.zeros(n + 1, dtype=np.int64)
    cdef i64[:] delta = np.zeros(n + 1, dtype=np.int64)
    cdef Py_ssize_t p, j, i, t, lo, m, top, k, arg
    cdef i64 running, best, c, pj, mj

    for p in range(n):
        pmem[p + 1] = pmem[p] + m_mem[p]
        pout[p + 1] = pout[p] + m_out[p]

    for j in range(1, n + 1):
        lo = j - max_range
        if lo < 0:
            lo = 0
        m = j - 1
        top = -1
        for t in range(m_ptr[m], m_ptr[m + 1]):
            k = m_src[t]
            if k >= lo:
                delta[k] += m_cost[t]
                if k > top:
                    top = k
        running = 0
        i = top
        while i >= lo:
            running += delta[i]
            delta[i] = 0
            inner[i] += running
            i -= 1

        best = -1
        arg = -1
        pj = pout[j]
        mj = pmem[j]
        i = m
        while i >= lo:
            if mj - pmem[i] > mem_limit:
                break
            if P[i] < 0 and i > 0:
                i -= 1
                continue
            c = S[i] + pj - pout[i] - inner[i]
            if arg < 0 or c <= best:
                best = c
                arg = i
            i -= 1
        if arg < 0:
            S[j] = 0
            P[j] = -1
        else:
            S[j] = best
            P[j] = arg
    return S_arr.tolist(), P_arr.tolist()


cdef inline bint _less(i64[:] ht, i64[:] hk, i64[:] hx, Py_ssize_t a, Py_ssize_t b) nogil:
    if ht[a] != ht[b]:
        return ht[a] < ht[b]
    if hk[a] != hk[b]:
        return hk[a] < hk[b]
    return hx[a] < hx[b]


cdef inline void _swap(i64[:] ht, i64[:] hk, i64[:] hx, Py_ssize_t a, Py_ssize_t b) nogil:
    cdef i64 tmp
    tmp = ht[a]; ht[a] = ht[b]; ht[b] = tmp
    tmp = hk[a]; hk[a] = hk[b]; hk[b] = tmp
    tmp = hx[a]; hx[a] = hx[b]; hx[b] = tmp


cdef inline Py_ssize_t _push(i64[:] ht, i64[:] hk, i64[:] hx, Py_ssize_t size,
                             i64 t, i64 kind, i64 x) nogil:
    cdef Py_ssize_t c = size, parent
    ht[c] = t
    hk[c] = kind
    hx[c] = x
    while c > 0:
        parent = (c - 1) >> 1
        if _less(ht, hk, hx, c, parent):
            _swap(ht, hk, hx, c, parent)
            c = parent
        else:
            break
    return size + 1


cdef inline Py_ssize_t _pop(i64[:] ht, i64[:] hk, i64[:] hx, Py_ssize_t size) nogil:
    # moves the minimum to slot ``size - 1``
    cdef Py_ssize_t last = size - 1, c = 0, l, r, s
    _swap(ht, hk, hx, 0, last)
    while True:
        l = 2 * c + 1
        r = l + 1
        s = c
        if l < last and _less(ht, hk, hx, l, s):
            s = l
        if r < last and _less(ht, hk, hx, r, s):
            s = r
        if s == c:
            break
        _swap(ht, hk, hx, c, s)
        c = s
    return last


def simulate(w, dev, succ_ptr, succ_edge, edge_src, edge_dst, edge_cost, Py_ssize_t n_devices):
    cdef const i64[:] m_w = np.ascontiguousarray(w, dtype=np.int64)
    cdef const i64[:] m_dev = np.ascontiguousarray(dev, dtype=np.int64)
    cdef const i64[:] m_sp = np.ascontiguousarray(succ_ptr, dtype=np.int64)
    cdef const i64[:] m_se = np.ascontiguousarray(succ_edge, dtype=np.int64)
    cdef const i64[:] m_es = np.ascontiguousarray(edge_src, dtype=np.int64)
    cdef const i64[:] m_ed = np.ascontiguousarray(edge_dst, dtype=np.int64)
    cdef const i64[:] m_ec = np.ascontiguousarray(edge_cost, dtype=np.int64)
    cdef Py_ssize_t n = m_w.shape[0]
    cdef Py_ssize_t n_edges = m_es.shape[0]
    cdef i64[:] rem = np.zeros(n, dtype=np.int64)
    cdef i64[:] ready = np.zeros(n, dtype=np.int64)
    ns_arr = np.full(n, -1, dtype=np.int64)
    ne_arr = np.full(n, -1, dtype=np.int64)
    es_arr = np.full(n_edges, -1, dtype=np.int64)
    ee_arr = np.full(n_edges, -1, dtype=np.int64)
    cdef i64[:] node_start = ns_arr
    cdef i64[:] node_end = ne_arr
    cdef i64[:] edge_start = es_arr
    cdef i64[:] edge_end = ee_arr
    cdef i64[:] comp_free = np.zeros(n_devices, dtype=np.int64)
    cdef i64[:] send_free = np.zeros(n_devices, dtype=np.int64)
    cdef i64[:] recv_free = np.zeros(n_devices, dtype=np.int64)
    cdef Py_ssize_t cap = n + n_edges + 1
    cdef i64[:] ht = np.empty(cap, dtype=np.int64)
    cdef i64[:] hk = np.empty(cap, dtype=np.int64)
    cdef i64[:] hx = np.empty(cap, dtype=np.int64)
    cdef Py_ssize_t size = 0, e, v, q, y, top
    cdef i64 t, kind, x, d, ds, dd, s, f
    cdef Py_ssize_t completed = 0

    with nogil:
        for e in range(n_edges):
            rem[m_ed[e]] += 1
        for v in range(n):
            if rem[v] == 0:
                size = _push(ht, hk, hx, size, 0, 0, v)
        while size > 0:
            top = _pop(ht, hk, hx, size)
            size = top
            t = ht[top]
            kind = hk[top]
            x = hx[top]
            if kind == 0:
                d = m_dev[x]
                s = t if t > comp_free[d] else comp_free[d]
                f = s + m_w[x]
                comp_free[d] = f
                node_start[x] = s
                node_end[x] = f
                completed += 1
                for q in range(m_sp[x], m_sp[x + 1]):
                    e = m_se[q]
                    y = m_ed[e]
                    if m_dev[y] != d:
                        size = _push(ht, hk, hx, size, f, 1, e)
                    else:
                        if f > ready[y]:
                            ready[y] = f
                        rem[y] -= 1
                        if rem[y] == 0:
                            size = _push(ht, hk, hx, size, ready[y], 0, y)
            else:
                y = m_ed[x]
                ds = m_dev[m_es[x]]
                dd = m_dev[y]
                s = t
                if send_free[ds] > s:
                    s = send_free[ds]
                if recv_free[dd] > s:
                    s = recv_free[dd]
                f = s + m_ec[x]
                send_free[ds] = f
                recv_free[dd] = f
                edge_start[x] = s
                edge_end[x] = f
                if f > ready[y]:
                    ready[y] = f
                rem[y] -= 1
                if rem[y] == 0:
                    size = _push(ht, hk, hx, size, ready[y], 0, y)
    return ns_arr.tolist(), ne_arr.tolist(), es_arr.tolist(), ee_arr.tolist(), completed
