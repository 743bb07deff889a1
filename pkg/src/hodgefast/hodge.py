"""Gradient / curl / harmonic decomposition of edge flows.

The node potential ``s`` solves ``Δ0 s = B1 f`` and the triangle potential
``φ`` solves ``Δ2 φ = B2ᵀ f``; both are consistent singular systems solved by
Jacobi-preconditioned conjugate gradients. Then ``gradient = B1ᵀ s``,
``curl = B2 φ`` and ``harmonic = f - gradient - curl``.

Gauge: ``s`` is returned with zero mean on every connected component and
``φ`` is the CG iterate started from zero. ``diag(Δ2)`` is constant (3), so
the Jacobi preconditioner is a scalar there and the iterates stay in
``range(Δ2)``, which makes ``φ`` the minimum-norm solution.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .errors import InvalidParameterError, SolverError, ValidationError
from .simplicial import boundary_b1, boundary_b2, component_labels, hodge_laplacian

COMPONENTS = ("gradient", "curl", "harmonic")


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-10
    max_iterations: int | None = None  # None -> 10 * system size

    def __post_init__(self):
        if not self.tolerance > 0:
            raise InvalidParameterError("solver tolerance must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise InvalidParameterError("max_iterations must be positive")

    def iterations_for(self, n):
        if self.max_iterations is not None:
            return int(self.max_iterations)
        return max(10 * int(n), 1)


@dataclass(frozen=True)
class HodgeComponents:
    gradient: np.ndarray
    curl: np.ndarray
    harmonic: np.ndarray
    node_potential: np.ndarray
    triangle_potential: np.ndarray

    def component(self, kind):
        return getattr(self, SummaryKind(kind).value)


class SummaryKind(str, Enum):
    GRADIENT = "gradient"
    CURL = "curl"
    HARMONIC = "harmonic"


class SummaryMode(str, Enum):
    SIGNED_MEAN = "signed_mean"
    L2_NORM = "l2_norm"


def _csr_parts(mat):
    mat = mat.tocsr()
    mat.sort_indices()
    return (
        np.ascontiguousarray(mat.indptr, dtype=np.int64),
        np.ascontiguousarray(mat.indices, dtype=np.int64),
        np.ascontiguousarray(mat.data, dtype=np.float64),
    )


def _inv_diag(mat):
    d = mat.diagonal().astype(np.float64)
    out = np.zeros_like(d)
    nz = d != 0.0
    out[nz] = 1.0 / d[nz]
    return out


class HodgeSolver:
    """Boundary operators, Laplacians and preconditioners for one complex.

    Build once per complex and reuse for every flow on it.
    """

    def __init__(self, cx, opts=None, backend=None):
        self.complex = cx
        self.opts = opts or SolverOptions()
        self._k = kernels.get_backend(backend)
        self.b1 = boundary_b1(cx).astype(np.float64).tocsr()
        self.b2 = boundary_b2(cx).astype(np.float64).tocsr()
        self.b1t = self.b1.T.tocsr()
        self.b2t = self.b2.T.tocsr()
        lap0 = hodge_laplacian(cx, 0)
        lap2 = hodge_laplacian(cx, 2)
        self._lap0 = _csr_parts(lap0)
        self._lap2 = _csr_parts(lap2)
        self._inv0 = _inv_diag(lap0)
        self._inv2 = _inv_diag(lap2)
        self.n_comp, self.labels = component_labels(cx)
        self._comp_size = np.bincount(self.labels, minlength=self.n_comp).astype(np.float64)

    def _solve(self, parts, inv_diag, rhs, ref, name):
        n = rhs.shape[0]
        if n == 0 or rhs.shape[1] == 0:
            return np.zeros_like(rhs)
        maxiter = self.opts.iterations_for(n)
        x, iters, relres = self._k.pcg_batch(
            parts[0], parts[1], parts[2], inv_diag,
            np.ascontiguousarray(rhs), ref, float(self.opts.tolerance), int(maxiter),
        )
        bad = np.flatnonzero(relres > self.opts.tolerance)
        if bad.size:
            c = int(bad[0])
            raise SolverError(
                f"{name} solve did not converge in {int(iters[c])} iterations "
                f"(relative residual {relres[c]:.3e} > {self.opts.tolerance:g})",
                residual=float(relres[c]), iterations=int(iters[c]), window=c,
            )
        return x

    def decompose(self, flows):
        """Decompose every row of ``flows`` (``(n_rows, n_edges)``).

        Returns a dict of arrays: ``gradient``, ``curl``, ``harmonic`` with
        shape ``(n_rows, n_edges)``, ``node_potential`` ``(n_rows, n_nodes)``
        and ``triangle_potential`` ``(n_rows, n_triangles)``.
        """
        f = np.asarray(flows, dtype=np.float64)
        if f.ndim == 1:
            f = f[None, :]
        if f.shape[1] != self.complex.n_edges:
            raise ValidationError(
                f"flow has {f.shape[1]} entries but complex has {self.complex.n_edges} edges"
            )
        if not np.all(np.isfinite(f)):
            rows = np.flatnonzero(~np.all(np.isfinite(f), axis=1))
            raise ValidationError(f"non-finite flow values in window {int(rows[0])}")
        ft = np.ascontiguousarray(f.T)
        # rhs of a nearly pure flow is roundoff with a null-space part; measure
        # the residual against the flow scale too
        ref = np.sqrt(np.einsum("ij,ij->j", ft, ft))

        s = self._solve(self._lap0, self._inv0, np.asarray(self.b1 @ ft), ref,
                        "node potential")
        if s.size:
            sums = np.zeros((self.n_comp, s.shape[1]))
            np.add.at(sums, self.labels, s)
            s = s - (sums / self._comp_size[:, None])[self.labels]
        phi = self._solve(self._lap2, self._inv2, np.asarray(self.b2t @ ft),
                          ref, "triangle potential")

        grad = np.asarray(self.b1t @ s).T
        curl = np.asarray(self.b2 @ phi).T if phi.size else np.zeros_like(f)
        harm = f - grad - curl
        return {
            "gradient": grad,
            "curl": curl,
            "harmonic": harm,
            "node_potential": s.T,
            "triangle_potential": phi.T,
        }


def _as_components(arrays, row):
    return HodgeComponents(
        gradient=arrays["gradient"][row],
        curl=arrays["curl"][row],
        harmonic=arrays["harmonic"][row],
        node_potential=arrays["node_potential"][row],
        triangle_potential=arrays["triangle_potential"][row],
    )


def decompose_series(series, cx, opts=None, backend=None, solver=None):
    """Decompose each window row; returns one :class:`HodgeComponents` per row.

    ``series`` may be an :class:`~hodgefast.connectivity.EdgeFlowSeries` or a
    plain ``(n_windows, n_edges)`` array.
    """
    values = getattr(series, "values", series)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[None, :]
    edges = getattr(series, "edges", None)
    if edges is not None and not np.array_equal(np.asarray(edges).reshape(-1, 2), cx.edges):
        raise ValidationError("series edge order does not match the complex")
    solver = solver or HodgeSolver(cx, opts, backend=backend)
    arrays = solver.decompose(values)
    return [_as_components(arrays, r) for r in range(values.shape[0])]


def decompose_flow(flow, cx, opts=None, backend=None, solver=None):
    """Decompose a single edge flow."""
    flow = np.asarray(flow, dtype=np.float64)
    if flow.ndim != 1:
        raise ValidationError("decompose_flow expects a 1-D edge vector")
    return decompose_series(flow[None, :], cx, opts, backend=backend, solver=solver)[0]


def summarize(values, mode):
    """Reduce the last axis (edges) of ``values`` to one scalar per row."""
    mode = SummaryMode(mode)
    v = np.asarray(values, dtype=np.float64)
    n = v.shape[-1]
    if n == 0:
        return np.zeros(v.shape[:-1])
    if mode is SummaryMode.SIGNED_MEAN:
        return v.mean(axis=-1)
    return np.sqrt(np.einsum("...i,...i->...", v, v)) / np.sqrt(n)


def component_summary(components, kind, mode="signed_mean"):
    """Signed mean or RMS (``||v|| / sqrt(n_edges)``) of one component."""
    return float(summarize(components.component(kind), mode))
