"""``numba.njit`` versions of the hot kernels (see ``numpy_impl`` for docs)."""
import numpy as np
from numba import njit

DIRICHLET = 0
CORRELATION = 1


@njit(cache=True, nogil=True)
def windowed_flows(x, ei, ej, weights, starts, ends, mode):
    n_epochs = x.shape[0]
    n_win = starts.shape[0]
    n_e = ei.shape[0]
    out = np.zeros((n_win, n_e))
    for e in range(n_epochs):
        for w in range(n_win):
            s = starts[w]
            t = ends[w]
            for m in range(n_e):
                a = x[e, ei[m]]
                b = x[e, ej[m]]
                acc = 0.0
                if mode == 0:
                    for u in range(s, t):
                        d = a[u] - b[u]
                        acc += d * d
                else:
                    for u in range(s, t):
                        acc += abs(a[u] * b[u])
                out[w, m] += acc / (t - s)
    for w in range(n_win):
        for m in range(n_e):
            out[w, m] = weights[m] * (out[w, m] / n_epochs)
    return out


@njit(cache=True, nogil=True)
def _matvec(indptr, indices, data, v, out):
    for i in range(indptr.shape[0] - 1):
        acc = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            acc += data[p] * v[indices[p]]
        out[i] = acc


@njit(cache=True, nogil=True)
def _dot(a, b):
    acc = 0.0
    for i in range(a.shape[0]):
        acc += a[i] * b[i]
    return acc


@njit(cache=True, nogil=True)
def pcg_batch(indptr, indices, data, inv_diag, rhs, ref, tol, maxiter):
    n, k = rhs.shape
    x_all = np.zeros((n, k))
    iters = np.zeros(k, dtype=np.int64)
    relres = np.zeros(k)
    b = np.empty(n)
    x = np.empty(n)
    r = np.empty(n)
    z = np.empty(n)
    p = np.empty(n)
    q = np.empty(n)
    for c in range(k):
        for i in range(n):
            b[i] = rhs[i, c]
        bnorm = np.sqrt(_dot(b, b))
        if bnorm == 0.0:
            continue
        scale = max(bnorm, ref[c])
        thresh = tol * scale
        for i in range(n):
            x[i] = 0.0
            r[i] = b[i]
            z[i] = inv_diag[i] * r[i]
            p[i] = z[i]
        rz = _dot(r, z)
        rnorm = bnorm
        it = 0
        while it < maxiter:
            _matvec(indptr, indices, data, p, q)
            pq = _dot(p, q)
            if pq <= 0.0:
                break
            alpha = rz / pq
            for i in range(n):
                x[i] += alpha * p[i]
                r[i] -= alpha * q[i]
            rnorm = np.sqrt(_dot(r, r))
            it += 1
            if rnorm <= thresh:
                # confirm against the true residual; restart if it drifted
                _matvec(indptr, indices, data, x, q)
                for i in range(n):
                    r[i] = b[i] - q[i]
                rnorm = np.sqrt(_dot(r, r))
                if rnorm <= thresh:
                    break
                for i in range(n):
                    z[i] = inv_diag[i] * r[i]
                    p[i] = z[i]
                rz = _dot(r, z)
                continue
            for i in range(n):
                z[i] = inv_diag[i] * r[i]
            rz_new = _dot(r, z)
            beta = rz_new / rz
            rz = rz_new
            for i in range(n):
                p[i] = z[i] + beta * p[i]
        for i in range(n):
            x_all[i, c] = x[i]
        iters[c] = it
        relres[c] = rnorm / scale
    return x_all, iters, relres


@njit(cache=True, nogil=True)
def _upper_csr(n_nodes, edges):
    indptr = np.zeros(n_nodes + 1, dtype=np.int64)
    for m in range(edges.shape[0]):
        indptr[edges[m, 0] + 1] += 1
    for i in range(n_nodes):
        indptr[i + 1] += indptr[i]
    # edges are lexicographically sorted, so column order is already ascending
    return indptr, edges[:, 1].copy()


@njit(cache=True, nogil=True)
def _triangle_pass(n_nodes, edges, out, fill):
    indptr, nbr = _upper_csr(n_nodes, edges)
    count = 0
    for m in range(edges.shape[0]):
        i = edges[m, 0]
        j = edges[m, 1]
        a = indptr[i]
        a_end = indptr[i + 1]
        b = indptr[j]
        b_end = indptr[j + 1]
        while a < a_end and b < b_end:
            u = nbr[a]
            v = nbr[b]
            if u < v:
                a += 1
            elif v < u:
                b += 1
            else:
                if fill:
                    out[count, 0] = i
                    out[count, 1] = j
                    out[count, 2] = u
                count += 1
                a += 1
                b += 1
    return count


@njit(cache=True, nogil=True)
def triangles(n_nodes, edges):
    dummy = np.zeros((0, 3), dtype=np.int64)
    count = _triangle_pass(n_nodes, edges, dummy, False)
    out = np.empty((count, 3), dtype=np.int64)
    _triangle_pass(n_nodes, edges, out, True)
    return out
