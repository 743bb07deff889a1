"""Vectorised numpy/scipy versions of the hot kernels.

Signatures mirror :mod:`hodgefast.kernels.numba_impl` exactly so the two
backends are interchangeable.
"""
import numpy as np
from scipy import sparse

DIRICHLET = 0
CORRELATION = 1


def windowed_flows(x, ei, ej, weights, starts, ends, mode):
    """Epoch-averaged, window-averaged edge flows.

    Parameters
    ----------
    x : ndarray, shape (n_epochs, n_channels, n_samples)
        Signals. For ``mode == CORRELATION`` they must already be centred.
    ei, ej : ndarray of int64
        Edge endpoints.
    weights : ndarray
        Per-edge filter weight.
    starts, ends : ndarray of int64
        Contiguous window bounds covering ``[0, n_samples)``.
    mode : int
        ``DIRICHLET`` for squared differences, ``CORRELATION`` for the
        modulus of the product.

    Returns
    -------
    ndarray, shape (n_windows, n_edges)
    """
    a = x[:, ei, :]
    b = x[:, ej, :]
    if mode == DIRICHLET:
        v = a - b
        v *= v
    else:
        v = np.abs(a * b)
    sums = np.add.reduceat(v, starts, axis=2)
    means = sums / (ends - starts)
    out = means.mean(axis=0).T
    return out * weights[None, :]


def pcg_batch(indptr, indices, data, inv_diag, rhs, ref, tol, maxiter):
    """Jacobi-preconditioned CG on every column of ``rhs`` at once.

    Converged columns are frozen while the others keep iterating. Column
    ``c`` stops once its residual is below ``tol * max(|rhs_c|, ref[c])``.
    Returns ``(x, iterations, relative_residual)``.
    """
    n, k = rhs.shape
    A = sparse.csr_matrix((data, indices, indptr), shape=(n, n))
    x = np.zeros((n, k))
    iters = np.zeros(k, dtype=np.int64)
    bnorm = np.sqrt(np.einsum("ij,ij->j", rhs, rhs))
    relres = np.zeros(k)
    active = bnorm > 0.0
    if not active.any():
        return x, iters, relres

    r = rhs.copy()
    z = inv_diag[:, None] * r
    p = z.copy()
    rz = np.einsum("ij,ij->j", r, z)
    rnorm = bnorm.copy()
    scale = np.maximum(bnorm, ref)
    thresh = tol * scale
    it = 0
    while it < maxiter:
        cols = np.flatnonzero(active)
        if cols.size == 0:
            break
        q = A @ p[:, cols]
        pq = np.einsum("ij,ij->j", p[:, cols], q)
        ok = pq > 0.0
        alpha = np.where(ok, rz[cols] / np.where(ok, pq, 1.0), 0.0)
        x[:, cols] += alpha * p[:, cols]
        r[:, cols] -= alpha * q
        rnorm[cols] = np.sqrt(np.einsum("ij,ij->j", r[:, cols], r[:, cols]))
        iters[cols] += 1
        it += 1

        done = (rnorm[cols] <= thresh[cols]) | ~ok
        if done.any():
            # confirm against the true residual; drifted columns restart
            dcols = cols[done]
            rt = rhs[:, dcols] - A @ x[:, dcols]
            tn = np.sqrt(np.einsum("ij,ij->j", rt, rt))
            good = (tn <= thresh[dcols]) | ~ok[done]
            rnorm[dcols] = tn
            active[dcols[good]] = False
            redo = dcols[~good]
            if redo.size:
                r[:, redo] = rt[:, ~good]
                z_r = inv_diag[:, None] * r[:, redo]
                p[:, redo] = z_r
                rz[redo] = np.einsum("ij,ij->j", r[:, redo], z_r)
        cont = cols[~done]
        if cont.size:
            z_c = inv_diag[:, None] * r[:, cont]
            rz_new = np.einsum("ij,ij->j", r[:, cont], z_c)
            beta = rz_new / rz[cont]
            rz[cont] = rz_new
            p[:, cont] = z_c + beta * p[:, cont]

    nz = bnorm > 0.0
    relres[nz] = rnorm[nz] / scale[nz]
    return x, iters, relres


def triangles(n_nodes, edges):
    """All 3-cliques ``(i, j, k)``, ``i < j < k``, in lexicographic order.

    ``edges`` must be lexicographically sorted with ``i < j``.
    """
    if edges.shape[0] == 0:
        return np.zeros((0, 3), dtype=np.int64)
    upper = np.zeros((n_nodes, n_nodes), dtype=bool)
    upper[edges[:, 0], edges[:, 1]] = True
    common = upper[edges[:, 0]] & upper[edges[:, 1]]
    e_idx, k = np.nonzero(common)
    out = np.empty((e_idx.size, 3), dtype=np.int64)
    out[:, 0] = edges[e_idx, 0]
    out[:, 1] = edges[e_idx, 1]
    out[:, 2] = k
    return out
