"""Unit tests for layouts, sparse operators, and state constructors."""
import math

import numpy as np
import pytest
import scipy.sparse as sp

from photonsub import (
    DimensionError,
    LayoutError,
    Operator,
    SpaceLayout,
    StateVector,
    TruncationError,
    annihilation_op,
    apply,
    coherent_state_factor,
    coherent_truncation_dim,
    compose,
    dagger,
    embed,
    fock_state,
    identity_op,
    transition_op,
)

RNG = np.random.default_rng(20260814)


def random_operator(layout: SpaceLayout, rng, density: float = 0.3) -> Operator:
    d = layout.total_dim
    mask = rng.random((d, d)) < density
    m = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) * mask
    return Operator(layout, sp.csr_matrix(m))


def random_state(layout: SpaceLayout, rng) -> StateVector:
    amps = rng.standard_normal(layout.total_dim) + 1j * rng.standard_normal(layout.total_dim)
    return StateVector(layout, amps)


# ---------------------------------------------------------------------------
# layouts
# ---------------------------------------------------------------------------

def test_layout_total_dim_is_product():
    lay = SpaceLayout.cascade(3, 4, 5, 4)
    assert lay.total_dim == 3 * 4 * 5 * 4


def test_layout_row_major_indexing():
    lay = SpaceLayout.cascade(3, 4, 5, 4)
    # index = ((n_s*N_a + n_a)*N_b + n_b)*N_q + q
    assert lay.index_of((2, 1, 3, 0)) == ((2 * 4 + 1) * 5 + 3) * 4 + 0
    for _ in range(20):
        occs = tuple(int(RNG.integers(0, d)) for d in lay.factor_dims)
        assert lay.occupations_of(lay.index_of(occs)) == occs


def test_layout_rejects_bad_dims():
    with pytest.raises(DimensionError):
        SpaceLayout((3, 0, 2))
    with pytest.raises(DimensionError):
        SpaceLayout.cascade(2, 2, 2, qd_dim=3)
    # degenerate factors mark disabled subsystems
    lay = SpaceLayout.cascade(2, 2, 1, qd_dim=1)
    assert lay.total_dim == 4


def test_layout_index_bounds():
    lay = SpaceLayout.cascade(2, 2, 2, 4)
    with pytest.raises(TruncationError):
        lay.index_of((2, 0, 0, 0))
    with pytest.raises(DimensionError):
        lay.index_of((0, 0, 0))


# ---------------------------------------------------------------------------
# elementary operators
# ---------------------------------------------------------------------------

def test_annihilation_entries_dim2():
    assert annihilation_op(2).entries() == {(0, 1): 1.0 + 0.0j}


def test_annihilation_entries_dim3():
    ent = annihilation_op(3).entries()
    assert set(ent) == {(0, 1), (1, 2)}
    assert ent[(0, 1)] == pytest.approx(1.0)
    assert ent[(1, 2)] == pytest.approx(math.sqrt(2.0))


def test_annihilation_nnz_and_errors():
    for dim in (2, 3, 7):
        assert annihilation_op(dim).nnz == dim - 1
    with pytest.raises(DimensionError):
        annihilation_op(1)


def test_number_operator_spectrum():
    for dim in (2, 5, 9):
        a = annihilation_op(dim)
        n = compose(dagger(a), a).to_dense()
        assert np.allclose(n, np.diag(np.arange(dim)), atol=0.0)


def test_transition_op_entries():
    assert transition_op(3, 3).entries() == {(2, 2): 1.0 + 0.0j}
    assert transition_op(1, 3).entries() == {(0, 2): 1.0 + 0.0j}
    prod = compose(transition_op(1, 3), transition_op(3, 1))
    assert prod.entries() == transition_op(1, 1).entries()
    with pytest.raises(DimensionError):
        transition_op(0, 3)
    with pytest.raises(DimensionError):
        transition_op(1, 5)


# ---------------------------------------------------------------------------
# embedding
# ---------------------------------------------------------------------------

def test_embed_lowers_single_factor():
    lay = SpaceLayout((2, 2))
    op = embed(annihilation_op(2), 0, lay)
    psi = StateVector(lay, np.array([0, 0, 1, 0], dtype=complex))  # |1,0>
    out = op.apply(psi)
    assert np.allclose(out.amplitudes, [1, 0, 0, 0])


def test_embed_identity_and_nnz():
    lay = SpaceLayout.cascade(3, 2, 2, 4)
    ident = identity_op(SpaceLayout((2,)))
    assert np.allclose(embed(ident, 1, lay).to_dense(), np.eye(lay.total_dim))
    a = annihilation_op(3)
    emb = embed(a, 0, lay)
    assert emb.nnz == a.nnz * (lay.total_dim // 3)


def test_embedded_disjoint_factors_commute():
    lay = SpaceLayout((3, 4))
    for _ in range(5):
        x = random_operator(SpaceLayout((3,)), RNG, density=0.6)
        y = random_operator(SpaceLayout((4,)), RNG, density=0.6)
        ex, ey = embed(x, 0, lay), embed(y, 1, lay)
        comm = compose(ex, ey) - compose(ey, ex)
        assert comm.nnz == 0 or np.max(np.abs(comm.to_dense())) < 1e-14


def test_embed_then_compose_equals_compose_then_embed():
    lay = SpaceLayout((4, 3, 2))
    for slot in range(3):
        sub = SpaceLayout((lay.factor_dims[slot],))
        for _ in range(4):
            x = random_operator(sub, RNG, density=0.7)
            y = random_operator(sub, RNG, density=0.7)
            lhs = compose(embed(x, slot, lay), embed(y, slot, lay)).to_dense()
            rhs = embed(compose(x, y), slot, lay).to_dense()
            assert np.allclose(lhs, rhs, atol=1e-13)


def test_embed_dimension_mismatch():
    lay = SpaceLayout((3, 4))
    with pytest.raises(LayoutError):
        embed(annihilation_op(2), 0, lay)
    with pytest.raises(LayoutError):
        embed(annihilation_op(3), 2, lay)


# ---------------------------------------------------------------------------
# algebra and application
# ---------------------------------------------------------------------------

def test_double_dagger_roundtrip():
    lay = SpaceLayout((5,))
    for _ in range(4):
        a = random_operator(lay, RNG)
        assert np.allclose(dagger(dagger(a)).to_dense(), a.to_dense(), atol=0.0)


def test_apply_identity_fixes_state():
    lay = SpaceLayout.cascade(2, 2, 2, 4)
    psi = random_state(lay, RNG)
    out = apply(identity_op(lay), psi)
    assert np.array_equal(out.amplitudes, psi.amplitudes)


def test_sandwich_positive_semidefinite():
    lay = SpaceLayout((6,))
    for _ in range(8):
        a = random_operator(lay, RNG)
        psi = random_state(lay, RNG)
        val = psi.expectation(compose(dagger(a), a))
        assert val.real >= -1e-12
        assert abs(val.imag) < 1e-10 * max(1.0, abs(val.real))


def test_apply_matches_dense_matvec():
    for dims in [(8,), (4, 4, 4), (2, 4, 2, 4)]:
        lay = SpaceLayout(dims)
        assert lay.total_dim <= 64
        a = random_operator(lay, RNG)
        psi = random_state(lay, RNG)
        got = apply(a, psi).amplitudes
        want = a.to_dense() @ psi.amplitudes
        assert np.allclose(got, want, rtol=1e-12, atol=1e-12)


def test_norm_cache_stays_valid_after_apply():
    lay = SpaceLayout((4, 4))
    for _ in range(6):
        a = random_operator(lay, RNG)
        psi = random_state(lay, RNG)
        out = apply(a, psi)
        direct = float(np.sum(np.abs(out.amplitudes) ** 2))
        assert out.squared_norm == pytest.approx(direct, rel=1e-12)


def test_layout_mismatch_raises():
    a = random_operator(SpaceLayout((4,)), RNG)
    b = random_operator(SpaceLayout((5,)), RNG)
    psi = random_state(SpaceLayout((5,)), RNG)
    with pytest.raises(LayoutError):
        _ = a + b
    with pytest.raises(LayoutError):
        _ = a @ b
    with pytest.raises(LayoutError):
        apply(a, psi)


def test_no_explicit_zeros_survive_arithmetic():
    lay = SpaceLayout((4,))
    a = random_operator(lay, RNG, density=0.5)
    diff = a - a
    assert diff.nnz == 0


# ---------------------------------------------------------------------------
# state constructors
# ---------------------------------------------------------------------------

def test_fock_state_single_amplitude():
    lay = SpaceLayout.cascade(3, 2, 2, 4)
    psi = fock_state(lay, (1, 0, 0), qd_level=1)
    idx = lay.index_of((1, 0, 0, 0))
    assert psi.amplitudes[idx] == 1.0
    assert np.count_nonzero(psi.amplitudes) == 1
    assert psi.squared_norm == 1.0


def test_fock_state_qd_levels_and_errors():
    lay = SpaceLayout.cascade(2, 2, 2, 4)
    for q in (1, 2, 3, 4):
        psi = fock_state(lay, (0, 0, 0), qd_level=q)
        assert psi.amplitudes[lay.index_of((0, 0, 0, q - 1))] == 1.0
    with pytest.raises(TruncationError):
        fock_state(lay, (2, 0, 0))
    with pytest.raises(DimensionError):
        fock_state(lay, (0, 0, 0), qd_level=5)
    nolay = SpaceLayout.cascade(2, 2, 1, qd_dim=1)
    with pytest.raises(DimensionError):
        fock_state(nolay, (0, 0, 0), qd_level=2)


def test_coherent_alpha_zero_is_vacuum():
    amps = coherent_state_factor(5, 0.0)
    assert np.array_equal(amps, np.array([1, 0, 0, 0, 0], dtype=complex))


def test_coherent_mean_occupation():
    # independent check: mean of n weighted by |c_n|^2 from direct arithmetic
    alpha = math.sqrt(2.0)
    amps = coherent_state_factor(20, alpha)
    mean = float(np.sum(np.arange(20) * np.abs(amps) ** 2))
    assert mean == pytest.approx(2.0, abs=1e-9)
    assert np.linalg.norm(amps) == pytest.approx(1.0, rel=1e-12)


def test_coherent_phase_carried_by_amplitudes():
    alpha = 1.1 * np.exp(0.7j)
    amps = coherent_state_factor(18, alpha)
    a = annihilation_op(18)
    got = complex(np.vdot(amps, a.matrix @ amps))
    assert got == pytest.approx(alpha, rel=1e-6)


def test_coherent_tail_rejection():
    with pytest.raises(TruncationError):
        coherent_state_factor(4, 2.0)  # nbar=4 in a dim-4 space
    # the sizing rule keeps the tail below the default tolerance
    for nbar in (0.5, 1.0, 2.0, 3.0, 5.0, 12.0):
        dim = coherent_truncation_dim(nbar)
        amps = coherent_state_factor(dim, math.sqrt(nbar))
        assert amps.shape == (dim,)


def test_renormalized_and_copy():
    lay = SpaceLayout((6,))
    psi = random_state(lay, RNG)
    unit = psi.renormalized()
    assert unit.squared_norm == pytest.approx(1.0, rel=1e-12)
    dup = psi.copy()
    dup.amplitudes[0] = 123.0
    assert psi.amplitudes[0] != 123.0
