import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_edge_set
from hodgefast.connectivity import EdgeSet
from hodgefast.errors import InvalidParameterError, ValidationError
from hodgefast.simplicial import (
    CliqueComplex, betti_numbers, boundary_b1, boundary_b2, boundary_to_csv,
    build_clique_complex, hodge_laplacian, n_components, summary,
)
from oracles import (
    brute_triangles, dense_b1, dense_b2, dense_betti1, union_find_components,
)

K3 = EdgeSet(3, [(0, 1), (0, 2), (1, 2)], 0.0)


def _cx(n, edges):
    return build_clique_complex(EdgeSet(n, edges, 0.0))


# ---- build_clique_complex ---------------------------------------------------

def test_triangle_with_pendant_edge():
    cx = _cx(4, [(0, 1), (0, 2), (1, 2), (2, 3)])
    assert cx.triangles.tolist() == [[0, 1, 2]]
    assert brute_triangles(4, cx.edges) == [(0, 1, 2)]


def test_edgeless_graph():
    assert _cx(5, np.zeros((0, 2), int)).n_triangles == 0


def test_complete_graph_on_four_nodes():
    cx = _cx(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
    assert cx.triangles.tolist() == [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]]


@pytest.mark.parametrize("backend", ["numba", "numpy"])
def test_triangles_match_brute_force(backend):
    rng = np.random.default_rng(0)
    for _ in range(150):
        n = int(rng.integers(1, 13))
        mask = random_edge_set(n, rng.random(), rng)
        cx = build_clique_complex(mask, backend=backend)
        assert [tuple(t) for t in cx.triangles.tolist()] == brute_triangles(n, mask.edges)


def test_complex_rejects_missing_face():
    with pytest.raises(ValidationError):
        CliqueComplex(3, np.array([[0, 1], [1, 2]]), np.array([[0, 1, 2]]))


def test_complex_json_round_trip(tmp_path):
    cx = _cx(4, [(0, 1), (0, 2), (1, 2), (2, 3)])
    cx.to_json(tmp_path / "c.json")
    back = CliqueComplex.from_json(tmp_path / "c.json")
    assert np.array_equal(back.edges, cx.edges) and np.array_equal(back.triangles, cx.triangles)


# ---- boundaries --------------------------------------------------------------

def test_b1_of_k3():
    b1 = boundary_b1(build_clique_complex(K3)).toarray()
    assert b1.T.tolist() == [[-1, 1, 0], [-1, 0, 1], [0, -1, 1]]


def test_b1_single_edge():
    assert boundary_b1(_cx(2, [(0, 1)])).toarray().ravel().tolist() == [-1, 1]


def test_b2_of_k3():
    b2 = boundary_b2(build_clique_complex(K3)).toarray()
    assert b2.ravel().tolist() == [1, -1, 1]


def test_b2_triangle_free_has_no_columns():
    b2 = boundary_b2(_cx(4, [(0, 1), (0, 3), (1, 2), (2, 3)]))
    assert b2.shape == (4, 0)


def test_b1_b2_is_zero_on_k3():
    cx = build_clique_complex(K3)
    assert not (boundary_b1(cx) @ boundary_b2(cx)).toarray().any()


def test_boundaries_match_dense_construction():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = int(rng.integers(2, 11))
        cx = build_clique_complex(random_edge_set(n, 0.6, rng))
        assert np.array_equal(boundary_b1(cx).toarray(), dense_b1(n, cx.edges))
        assert np.array_equal(boundary_b2(cx).toarray(), dense_b2(cx.edges, cx.triangles))


@given(st.integers(1, 20), st.floats(0, 1), st.integers(0, 2**32 - 1))
def test_boundary_invariants(n, p, seed):
    cx = build_clique_complex(random_edge_set(n, p, np.random.default_rng(seed)))
    b1, b2 = boundary_b1(cx), boundary_b2(cx)
    assert np.all(np.diff(b1.tocsc().indptr) == 2)
    assert np.all(np.asarray(b1.sum(axis=0)).ravel() == 0)
    assert np.all(np.diff(b2.tocsc().indptr) == 3)
    # integer product, exact
    assert (b1 @ b2).count_nonzero() == 0
    assert b1.dtype.kind == "i" and b2.dtype.kind == "i"


def test_boundary_csv(tmp_path):
    boundary_to_csv(boundary_b2(build_clique_complex(K3)), tmp_path / "b2.csv")
    assert (tmp_path / "b2.csv").read_text() == "row,col,sign\n0,0,1\n1,0,-1\n2,0,1\n"


# ---- Laplacians and topology -------------------------------------------------

def test_laplacians_of_k3():
    cx = build_clique_complex(K3)
    l0 = hodge_laplacian(cx, 0).toarray()
    assert np.array_equal(l0, 2 * np.eye(3) - (np.ones((3, 3)) - np.eye(3)))
    assert hodge_laplacian(cx, 2).toarray().tolist() == [[3.0]]


def test_l1_triangle_free_is_down_laplacian():
    cx = _cx(4, [(0, 1), (0, 3), (1, 2), (2, 3)])
    b1 = boundary_b1(cx).toarray().astype(float)
    assert np.array_equal(hodge_laplacian(cx, 1).toarray(), b1.T @ b1)


def test_bad_laplacian_order():
    with pytest.raises(InvalidParameterError):
        hodge_laplacian(build_clique_complex(K3), 3)


def test_laplacians_symmetric_psd():
    rng = np.random.default_rng(2)
    for _ in range(30):
        cx = build_clique_complex(random_edge_set(int(rng.integers(2, 12)), 0.5, rng))
        for p in (0, 1, 2):
            lap = hodge_laplacian(cx, p).toarray()
            assert np.array_equal(lap, lap.T)
            if lap.size:
                assert np.linalg.eigvalsh(lap).min() > -1e-10


def test_kernel_of_l0_counts_components():
    rng = np.random.default_rng(3)
    for _ in range(60):
        n = int(rng.integers(1, 65))
        mask = random_edge_set(n, 2.0 * rng.random() / n, rng)
        cx = build_clique_complex(mask)
        expected = union_find_components(n, mask.edges)
        assert n_components(cx) == expected
        if n <= 40:
            ev = np.linalg.eigvalsh(hodge_laplacian(cx, 0).toarray())
            assert int(np.sum(ev < 1e-9)) == expected


def test_betti1_matches_dense_rank_and_kernel():
    rng = np.random.default_rng(4)
    for _ in range(200):
        n = int(rng.integers(1, 13))
        cx = build_clique_complex(random_edge_set(n, rng.random(), rng))
        b1 = dense_betti1(n, cx.edges, cx.triangles)
        assert betti_numbers(cx)[1] == b1
        if cx.n_edges:
            ev = np.linalg.eigvalsh(hodge_laplacian(cx, 1).toarray())
            assert int(np.sum(ev < 1e-9)) == b1


def test_summary_of_k3_and_square():
    assert summary(build_clique_complex(K3)) == {
        "nodes": 3, "edges": 3, "triangles": 1, "components": 1, "beta1": 0}
    assert summary(_cx(4, [(0, 1), (0, 3), (1, 2), (2, 3)]))["beta1"] == 1
