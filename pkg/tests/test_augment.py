import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectraforge.augment import (
    KEEP_RATES,
    TOPOLOGY_MODES,
    FilterSpec,
    diffusion_matrix,
    eigenspace_filter_view,
    kept_indices,
    matrix_power_view,
    random_topology_augment,
)
from spectraforge.graph import Graph, generate_sbm, normalized_adjacency, normalized_laplacian
from spectraforge.spectral import decompose


def sbm_decomp(seed=0, blocks=(10, 10)):
    return decompose(normalized_laplacian(generate_sbm(list(blocks), 0.4, 0.1, seed=seed)))


# ---------------------------------------------------------- filtered views


def test_keep_everything_is_identity():
    d = sbm_decomp()
    V = eigenspace_filter_view(d, FilterSpec("both", 1.0))
    np.testing.assert_allclose(V, np.eye(d.n), atol=1e-8)


def test_high_band_only_view():
    d = sbm_decomp()
    V = eigenspace_filter_view(d, FilterSpec("low", 0.0, base_band_kept=True))
    oracle = sum(np.outer(d.U[:, i], d.U[:, i]) for i in range(d.n // 2, d.n))
    np.testing.assert_allclose(V, oracle, atol=1e-10)
    ev = np.linalg.eigvalsh(V)
    assert int(np.sum(ev > 0.5)) == d.n - d.n // 2


def test_twenty_percent_low_plus_high():
    # n = 20: F_L holds 10 indices, 20% of them is the lowest 2
    keep = kept_indices(20, FilterSpec("low", 0.2, "low_to_high", True))
    assert keep.tolist() == [0, 1] + list(range(10, 20))
    keep = kept_indices(20, FilterSpec("low", 0.2, "high_to_low", True))
    assert keep.tolist() == [8, 9] + list(range(10, 20))
    keep = kept_indices(20, FilterSpec("high", 0.8, "low_to_high", False))
    assert keep.tolist() == list(range(10, 18))


@given(st.sampled_from(("low", "high", "both")), st.sampled_from(KEEP_RATES),
       st.sampled_from(("low_to_high", "high_to_low")), st.booleans(), st.integers(0, 50))
@settings(max_examples=60, deadline=None)
def test_filter_view_is_projector(band, rate, order, base, seed):
    d = sbm_decomp(seed, (7, 6))
    spec = FilterSpec(band, rate, order, base)
    V = eigenspace_filter_view(d, spec)
    np.testing.assert_allclose(V, V.T, atol=1e-12)
    ev = np.linalg.eigvalsh(V)
    assert np.all(np.minimum(np.abs(ev), np.abs(ev - 1)) <= 1e-8)
    assert int(np.sum(ev > 0.5)) == len(kept_indices(d.n, spec))


def test_filter_spec_validation():
    with pytest.raises(ValueError):
        FilterSpec("low", 1.2)
    with pytest.raises(ValueError):
        FilterSpec("middle", 0.2)
    with pytest.raises(ValueError):
        eigenspace_filter_view(decompose(np.eye(3), "custom"), FilterSpec())


# ----------------------------------------------------------- topology zoo


@pytest.mark.parametrize("mode", TOPOLOGY_MODES)
def test_rate_zero_is_identity(mode):
    g = generate_sbm([8, 8], 0.5, 0.1, seed=1)
    assert random_topology_augment(g, mode, 0.0, seed=3).edges == g.edges


def test_edge_drop_count():
    g = Graph.from_edges(11, [(i, i + 1, 1.0) for i in range(10)])
    assert random_topology_augment(g, "edge_drop", 0.5, seed=0).num_edges == 5


@given(st.integers(0, 10_000), st.floats(0.0, 0.9))
@settings(max_examples=40, deadline=None)
def test_edge_perturb_preserves_count(seed, rate):
    g = generate_sbm([10, 10], 0.3, 0.05, seed=seed % 17)
    h = random_topology_augment(g, "edge_perturb", rate, seed=seed)
    assert h.num_edges == g.num_edges


@given(st.sampled_from(TOPOLOGY_MODES), st.floats(0.0, 0.95), st.integers(0, 10_000))
@settings(max_examples=80, deadline=None)
def test_zoo_keeps_nodes_and_simple_graph(mode, rate, seed):
    g = generate_sbm([9, 9], 0.4, 0.1, seed=seed % 13)
    h = random_topology_augment(g, mode, rate, seed=seed)
    assert h.n == g.n
    pairs = h.edge_pairs()
    assert len(pairs) == len(set(pairs))
    assert all(i < j for i, j in pairs)
    assert np.all(np.diag(h.adjacency()) == 0)


def test_node_drop_isolates_chosen_nodes():
    g = generate_sbm([10, 10], 0.6, 0.2, seed=2)
    h = random_topology_augment(g, "node_drop", 0.3, seed=5)
    isolated = np.flatnonzero(h.degrees() == 0)
    assert len(isolated) >= 6
    assert set(h.edge_pairs()) <= set(g.edge_pairs())


def test_subgraph_size_and_determinism():
    g = generate_sbm([10, 10], 0.5, 0.1, seed=2)
    h1 = random_topology_augment(g, "subgraph", 0.4, seed=9)
    h2 = random_topology_augment(g, "subgraph", 0.4, seed=9)
    assert h1.edges == h2.edges
    touched = {v for e in h1.edge_pairs() for v in e}
    assert len(touched) <= 12


def test_zoo_errors():
    g = generate_sbm([5, 5], 0.5, 0.1, seed=0)
    with pytest.raises(ValueError):
        random_topology_augment(g, "edge_drop", 1.0)
    with pytest.raises(ValueError):
        random_topology_augment(g, "shuffle", 0.1)


# --------------------------------------------------------------- diffusion


def test_ppr_tends_to_identity():
    k2 = Graph.from_edges(2, [(0, 1, 1.0)])
    errs = [np.max(np.abs(diffusion_matrix(k2, "ppr", a) - np.eye(2))) for a in (0.9, 0.99, 0.999)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-3


def test_heat_zero_time_is_identity():
    g = generate_sbm([6, 6], 0.5, 0.2, seed=0)
    assert np.array_equal(diffusion_matrix(g, "heat", 0.0), np.eye(12))


def test_heat_k3_amplitudes():
    k3 = Graph.from_edges(3, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)])
    L_loops = np.eye(3) - normalized_adjacency(k3, self_loops=True)
    d = decompose(L_loops)
    H = diffusion_matrix(k3, "heat", 0.7)
    amp = np.array([d.U[:, i] @ H @ d.U[:, i] for i in range(3)])
    np.testing.assert_allclose(amp, np.exp(-0.7 * d.lambdas), atol=1e-12)
    # closed form: A_loops of K3 is J/3, so the spectrum of I - A_loops is {0, 1, 1}
    np.testing.assert_allclose(d.lambdas, [0, 1, 1], atol=1e-12)


@given(st.integers(0, 1000), st.floats(0.05, 3.0))
@settings(max_examples=30, deadline=None)
def test_heat_commutes_with_its_laplacian(seed, t):
    g = generate_sbm([6, 6], 0.5, 0.2, seed=seed)
    H = diffusion_matrix(g, "heat", t)
    L_loops = np.eye(g.n) - normalized_adjacency(g, self_loops=True)
    assert np.linalg.norm(H @ L_loops - L_loops @ H) <= 1e-8


def test_ppr_nonnegative_and_symmetric():
    g = generate_sbm([8, 8], 0.5, 0.2, seed=4)
    P = diffusion_matrix(g, "ppr", 0.15)
    assert np.all(P >= -1e-12)
    np.testing.assert_allclose(P, P.T, atol=1e-12)
    assert np.all(P.sum(axis=1) > 0)


def test_diffusion_errors():
    g = generate_sbm([4, 4], 0.5, 0.2, seed=0)
    for mode, p in (("ppr", 0.0), ("ppr", 1.0), ("heat", -1.0), ("katz", 0.1)):
        with pytest.raises(ValueError):
            diffusion_matrix(g, mode, p)


# ----------------------------------------------------------- matrix power


def test_power_view_small_cases():
    p3 = Graph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])
    # support of A^2 alone: the single 2-walk 0-1-2 links the ends, the 1-walks are not kept
    assert set(matrix_power_view(p3).edge_pairs()) == {(0, 2)}
    k2 = Graph.from_edges(2, [(0, 1, 1.0)])
    assert matrix_power_view(k2).num_edges == 0
    with pytest.raises(ValueError):
        matrix_power_view(p3, 3)


def test_power_view_support_oracle():
    g = generate_sbm([12, 12], 0.2, 0.05, seed=6)
    B = g.adjacency() > 0
    n = g.n
    two = {(i, j) for i in range(n) for j in range(i + 1, n)
           if any(B[i, k] and B[k, j] for k in range(n))}
    assert set(matrix_power_view(g).edge_pairs()) == two
