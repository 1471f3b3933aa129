import math

import numpy as np
import pytest
import scipy.linalg

from doslab import discretize, geometry, potential
from doslab.errors import NumericalError, PreconditionError

V0 = potential.constant_potential(0.0)


@pytest.mark.parametrize("n", [2, 3, 9, 10, 19])
def test_box_1d_interior_rule_counts(n):
    h = 2.0 / (n + 1)
    g = discretize.build_grid(geometry.box(1.0, 1), h)
    assert g.n_nodes == n
    x = np.sort(g.nodes()[:, 0])
    want = -1.0 + h * np.arange(1, n + 1)
    assert np.allclose(x, want, atol=1e-12)


def test_box_2d_coarse_grid():
    g = discretize.build_grid(geometry.box(1.0, 2), 0.5)
    assert g.n_nodes == 9


def test_ball_pixel_volume():
    g = discretize.build_grid(geometry.ball(1.0, 2), 0.1)
    assert abs(g.n_nodes * 0.1**2 - math.pi) < 0.05 * math.pi


def test_all_nodes_inside():
    for dom, h in (
        (geometry.box(1.0, 2), 0.3),
        (geometry.ball(1.0, 2), 0.21),
        (geometry.star_polygon([(1.5, 0), (0, 1), (-1, 0.2), (-0.3, -1.2)]), 0.2),
    ):
        g = discretize.build_grid(dom, h)
        for p in g.nodes():
            assert geometry.contains(dom, p)


def test_monotone_node_counts():
    for dom in (geometry.box(1.0, 2), geometry.ball(1.0, 2)):
        counts = [
            discretize.build_grid(dom, h).n_nodes
            for h in (0.4, 0.3, 0.2, 0.15, 0.1, 0.07)
        ]
        assert all(b >= a for a, b in zip(counts, counts[1:]))


def test_spacing_coarser_than_domain_rejected():
    with pytest.raises(NumericalError):
        discretize.build_grid(geometry.ball(0.1, 2), 0.5)


def test_chain_eigenvalues_closed_form():
    n = 40
    h = 2.0 / (n + 1)
    g = discretize.build_grid(geometry.box(1.0, 1), h)
    H = discretize.assemble(g, V0, hbar=1.0)
    lam = np.sort(scipy.linalg.eigvalsh(H.matrix.toarray()))
    k = np.arange(1, n + 1)
    want = np.sort((4.0 / h**2) * np.sin(math.pi * k * h / 4.0) ** 2)
    assert np.max(np.abs(lam - want)) < 1e-10
    # the low modes track the continuum Dirichlet values (pi k / 2)^2
    assert abs(lam[0] - (math.pi / 2) ** 2) < 2e-3


def test_constant_shift_exact():
    import scipy.sparse as sp

    g = discretize.build_grid(geometry.ball(1.0, 2), 0.2)
    H0 = discretize.assemble(g, V0, hbar=0.7)
    Hc = discretize.assemble(g, potential.constant_potential(1.3), hbar=0.7)
    shifted = H0.matrix + 1.3 * sp.identity(g.n_nodes, format="csr")
    delta = (Hc.matrix - shifted).tocoo()
    assert delta.nnz == 0 or np.max(np.abs(delta.data)) == 0.0


def test_stencil_annihilates_constants_in_bulk():
    g = discretize.build_grid(geometry.box(1.0, 2), 0.2)
    H = discretize.assemble(g, potential.example_potential(2), hbar=1.0)
    ones = np.ones(g.n_nodes)
    y = H.matrix @ ones
    v = H.v_diag
    # interior nodes: all four neighbors retained, kinetic part cancels
    deg = np.diff(H.matrix.indptr) - 1
    bulk = deg == 4
    assert bulk.sum() > 0
    assert np.allclose(y[bulk], v[bulk], atol=1e-12)


def test_symmetry_exact():
    g = discretize.build_grid(geometry.ball(1.0, 2), 0.17)
    H = discretize.assemble(g, potential.example_potential(2), hbar=0.5)
    diff = (H.matrix - H.matrix.T).tocoo()
    assert diff.nnz == 0


def test_dirichlet_positivity():
    for dom in (geometry.box(1.0, 2), geometry.ball(1.0, 2)):
        g = discretize.build_grid(dom, 0.25)
        H = discretize.assemble(g, V0, hbar=1.0)
        lam_min = scipy.linalg.eigvalsh(H.matrix.toarray())[0]
        assert lam_min > 0


def test_gershgorin_dominates_spectrum():
    rng = np.random.default_rng(31)
    doms = [geometry.box(1.0, 2), geometry.ball(1.0, 2), geometry.box(1.0, 1)]
    pots = [V0, potential.example_potential(2), potential.constant_potential(-0.4)]
    checked = 0
    for _ in range(20):
        dom = doms[rng.integers(len(doms))]
        V = pots[rng.integers(len(pots))]
        if dom.dimension < 2 and V.name == "example":
            continue
        h = float(rng.uniform(0.15, 0.4))
        hbar = float(rng.uniform(0.3, 1.5))
        H = discretize.assemble(discretize.build_grid(dom, h), V, hbar)
        lam = scipy.linalg.eigvalsh(H.matrix.toarray())
        assert lam[-1] <= H.lambda_max + 1e-12
        lo, hi = H.spectral_interval()
        assert lo <= lam[0] and lam[-1] <= hi
        checked += 1
    assert checked >= 15


@pytest.mark.parametrize("domkind", ["box", "ball"])
@pytest.mark.parametrize("R", [2.0, 3.0])
def test_rescaled_pair_entrywise(domkind, R):
    dom = geometry.box(1.0, 2) if domkind == "box" else geometry.ball(1.0, 2)
    V = potential.example_potential(2)
    H_grown, H_semi = discretize.rescaled_pair(dom, V, R, h=0.1)
    assert H_grown.n == H_semi.n
    A = H_grown.matrix.tocsr()
    B = H_semi.matrix.tocsr()
    A.sort_indices()
    B.sort_indices()
    assert np.array_equal(A.indptr, B.indptr)
    assert np.array_equal(A.indices, B.indices)
    assert np.max(np.abs(A.data - B.data)) <= 1e-15


def test_rescaled_pair_identity_at_R_1():
    dom = geometry.ball(1.0, 2)
    H_grown, H_semi = discretize.rescaled_pair(dom, V0, 1.0, h=0.2)
    assert (H_grown.matrix - H_semi.matrix).nnz == 0


def test_rescaled_pair_rejects_inhomogeneous():
    V = potential.from_function(lambda x: math.sin(x[0]), bound=1.0)
    with pytest.raises(PreconditionError):
        discretize.rescaled_pair(geometry.box(1.0, 2), V, 2.0, h=0.2)


def test_coo_dump_format():
    g = discretize.build_grid(geometry.box(1.0, 1), 0.5)
    H = discretize.assemble(g, V0, hbar=1.0)
    lines = discretize.dump_coo(H).splitlines()
    assert len(lines) == H.matrix.nnz
    r, c, v = lines[0].split()
    assert int(r) == 0 and float(v) != 0.0
