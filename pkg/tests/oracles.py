"""Naive reference implementations used as test oracles.

Nothing here imports the package under test: every routine is a direct,
slow transcription of a definition.
"""
import itertools
import math

import numpy as np


def brute_triangles(n, edges):
    """All ``i < j < k`` with every pair present, by triple enumeration."""
    present = {tuple(map(int, e)) for e in edges}
    return [
        (i, j, k)
        for i, j, k in itertools.combinations(range(n), 3)
        if (i, j) in present and (i, k) in present and (j, k) in present
    ]


def dense_b1(n, edges):
    b = np.zeros((n, len(edges)))
    for c, (i, j) in enumerate(edges):
        b[i, c] = -1.0
        b[j, c] = 1.0
    return b


def dense_b2(edges, triangles):
    pos = {tuple(map(int, e)): c for c, e in enumerate(edges)}
    b = np.zeros((len(edges), len(triangles)))
    for c, (i, j, k) in enumerate(triangles):
        b[pos[(i, j)], c] = 1.0
        b[pos[(i, k)], c] = -1.0
        b[pos[(j, k)], c] = 1.0
    return b


def pinv_projections(n, edges, triangles, flow):
    """Gradient, curl and harmonic parts via Moore-Penrose projectors."""
    b1 = dense_b1(n, edges)
    b2 = dense_b2(edges, triangles)
    grad = b1.T @ np.linalg.pinv(b1.T) @ flow
    if len(triangles):
        curl = b2 @ np.linalg.pinv(b2) @ flow
    else:
        curl = np.zeros_like(flow)
    return grad, curl, flow - grad - curl


def union_find_components(n, edges):
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in edges:
        ri, rj = find(int(i)), find(int(j))
        if ri != rj:
            parent[ri] = rj
    return len({find(a) for a in range(n)})


def dense_betti1(n, edges, triangles):
    b1 = dense_b1(n, edges)
    b2 = dense_b2(edges, triangles)
    r1 = np.linalg.matrix_rank(b1) if len(edges) else 0
    r2 = np.linalg.matrix_rank(b2) if len(triangles) else 0
    return len(edges) - r1 - r2


def midranks(values):
    values = list(values)
    order = sorted(range(len(values)), key=lambda k: values[k])
    ranks = [0.0] * len(values)
    pos = 0
    while pos < len(order):
        end = pos
        while end + 1 < len(order) and values[order[end + 1]] == values[order[pos]]:
            end += 1
        r = (pos + end) / 2.0 + 1.0
        for k in range(pos, end + 1):
            ranks[order[k]] = r
        pos = end + 1
    return ranks


def permutation_rank_sum(a, b):
    """Two-sided exact p by enumerating every assignment of pooled midranks."""
    ranks = midranks(list(a) + list(b))
    n1, n = len(a), len(a) + len(b)
    observed = sum(ranks[:n1])
    centre = n1 * (n + 1) / 2.0
    dev = abs(observed - centre)
    hits = total = 0
    for combo in itertools.combinations(range(n), n1):
        s = sum(ranks[k] for k in combo)
        total += 1
        if abs(s - centre) >= dev - 1e-9:
            hits += 1
    return observed, hits / total


def bh_definition(p):
    """``adjusted_(i) = min_{j >= i} m p_(j) / j`` clamped to 1, original order."""
    p = list(p)
    m = len(p)
    order = sorted(range(m), key=lambda k: p[k])
    out = [0.0] * m
    for rank, k in enumerate(order, start=1):
        out[k] = min(1.0, min(m * p[order[j - 1]] / j for j in range(rank, m + 1)))
    return out


def fft_gain(kernel, freq_hz, sample_rate_hz, n_fft=1 << 16):
    """Magnitude of the kernel's frequency response at ``freq_hz``."""
    spectrum = np.fft.rfft(kernel, n_fft)
    freqs = np.fft.rfftfreq(n_fft, 1.0 / sample_rate_hz)
    return float(np.abs(np.interp(freq_hz, freqs, spectrum.real)
                        + 1j * np.interp(freq_hz, freqs, spectrum.imag)))


def pearson(x, y):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    xc, yc = x - x.mean(), y - y.mean()
    return float((xc @ yc) / math.sqrt((xc @ xc) * (yc @ yc)))
