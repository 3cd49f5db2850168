"""Tests for the cascaded-system model builder.

The Hermitian/anti-Hermitian decomposition and the excitation selection
rules are checked with dense matrix arithmetic, independent of the sparse
construction path.
"""
import math

import numpy as np
import pytest

from photonsub import ConfigError, LayoutError, SpaceLayout
from photonsub.model import (
    GHZ,
    SPONT_VARIANTS,
    InputSpec,
    SystemParams,
    build_model,
    default_layout,
    ghz,
    initial_state,
    params_digest,
    resonant_preset,
    zeeman_splitting,
)

RNG = np.random.default_rng(77001)


def paper_params(**kw) -> SystemParams:
    """Benchmark point: g/2pi=10 GHz, kappa/2pi=20 GHz, kappa_s/2pi=50 MHz,
    gamma/2pi=0.25 GHz, delta/2pi=25 GHz."""
    base = dict(g_a=ghz(10), g_b=ghz(10), kappa_a=ghz(20), kappa_b=ghz(20),
                kappa_s=ghz(0.05), gamma=ghz(0.25), delta=ghz(25))
    base.update(kw)
    return SystemParams.resonant(**base)


def random_params(rng, **kw) -> SystemParams:
    base = dict(
        g_a=ghz(rng.uniform(1, 15)),
        g_b=ghz(rng.uniform(1, 15)),
        kappa_a=ghz(rng.uniform(0.5, 50)),
        kappa_b=ghz(rng.uniform(0.5, 50)),
        kappa_s=ghz(rng.uniform(0.01, 0.5)),
        gamma=ghz(rng.uniform(0.01, 1.0)),
        delta=ghz(rng.uniform(0.0, 40.0)),
        spont_variant=SPONT_VARIANTS[int(rng.integers(0, 2))],
        input_spec=InputSpec.fock(int(rng.integers(1, 3))),
    )
    base.update(kw)
    return SystemParams.resonant(**base)


# ---------------------------------------------------------------------------
# parameter plumbing
# ---------------------------------------------------------------------------

def test_zeeman_zero_g_factor():
    assert zeeman_splitting(0.0, 3.0) == 0.0


def test_zeeman_matches_observed_splitting():
    # g-factor 0.4287 at B=5 T gives a splitting near 30 GHz
    val = zeeman_splitting(0.4287, 5.0)
    assert val / GHZ == pytest.approx(30.0, abs=0.05)


def test_zeeman_linearity_and_error():
    full = zeeman_splitting(0.4287, 5.0)
    half = zeeman_splitting(0.4287, 2.5)
    assert half == pytest.approx(0.5 * full, rel=1e-12)
    with pytest.raises(ConfigError):
        zeeman_splitting(0.4287, -1.0)


def test_resonant_preset_degenerate():
    assert all(v == 0.0 for v in resonant_preset(0.0).values())


def test_resonant_preset_signs():
    pre = resonant_preset(ghz(25))
    assert pre["omega_12"] == pytest.approx(ghz(25))
    assert pre["omega_14"] == pytest.approx(-ghz(25))
    assert pre["omega_b"] == pytest.approx(-ghz(25))
    assert pre["omega_s"] == pre["omega_a"] == pre["omega_13"] == 0.0


def test_resonance_equalities_hold_by_construction():
    p = paper_params()
    assert p.omega_s == p.omega_a == p.omega_13
    assert p.omega_b == p.omega_14
    assert p.omega_12 == p.delta
    assert p.on_resonance
    tweaked = random_params(RNG)
    assert tweaked.on_resonance


def test_params_validation():
    with pytest.raises(ConfigError):
        paper_params(gamma=-1.0)
    with pytest.raises(ConfigError):
        paper_params(kappa_a=0.0)
    with pytest.raises(ConfigError):
        paper_params(spont_variant="dephasing")
    with pytest.raises(ConfigError):
        paper_params(qd_initial_level=0)
    with pytest.raises(ConfigError):
        InputSpec.fock(-1)
    with pytest.raises(ConfigError):
        InputSpec("fock", 1.5)


def test_default_layouts():
    p = paper_params(input_spec=InputSpec.fock(2))
    assert default_layout(p).factor_dims == (3, 3, 3, 4)
    pc = paper_params(input_spec=InputSpec.coherent(5.0))
    lay = default_layout(pc)
    assert lay.factor_dims[0] == 25          # ceil(5 + 6*sqrt(5) + 6)
    assert lay.factor_dims[1] == lay.factor_dims[2] == 5
    nq = paper_params(input_spec=InputSpec.coherent(2.0), qd_present=False,
                      g_a=0.0, g_b=0.0, gamma=0.0, kappa_b=ghz(20))
    assert default_layout(nq).factor_dims[2:] == (1, 1)


def test_digest_stability():
    p = paper_params()
    lay = default_layout(p)
    assert params_digest(p, lay) == params_digest(paper_params(), default_layout(p))
    assert params_digest(p, lay) != params_digest(paper_params(gamma=ghz(0.3)), lay)


# ---------------------------------------------------------------------------
# structural invariants of the built model
# ---------------------------------------------------------------------------

def anti_hermitian_defect(model) -> float:
    """Max-norm of h_eff - (h_herm - (i/2) sum C^dag C), dense arithmetic."""
    h = model.h_eff.to_dense()
    herm = 0.5 * (h + h.conj().T)
    damp = np.zeros_like(h)
    for c in model.collapse_ops:
        cd = c.to_dense()
        damp += cd.conj().T @ cd
    return float(np.max(np.abs(h - (herm - 0.5j * damp))))


def test_benchmark_point_builds_and_decomposes():
    model = build_model(paper_params())
    scale = np.max(np.abs(model.h_eff.to_dense()))
    assert anti_hermitian_defect(model) < 1e-10 * scale


def test_decomposition_residual_random_draws():
    for _ in range(20):
        model = build_model(random_params(RNG))
        scale = np.max(np.abs(model.h_eff.to_dense()))
        assert anti_hermitian_defect(model) < 1e-10 * scale
        # the stored Hermitian part agrees with direct symmetrization
        h = model.h_eff.to_dense()
        assert np.max(np.abs(model.h_herm.to_dense() - 0.5 * (h + h.conj().T))) < 1e-12 * scale


def test_h_herm_commutes_with_excitation_number():
    for _ in range(10):
        model = build_model(random_params(RNG))
        hh = model.h_herm.to_dense()
        nn = model.number_op.to_dense()
        comm = hh @ nn - nn @ hh
        scale = max(1.0, np.max(np.abs(hh)))
        assert np.max(np.abs(comm)) < 1e-10 * scale


def test_cavity_damping_commutes_with_excitation_number():
    model = build_model(paper_params())
    nn = model.number_op.to_dense()
    tot = np.zeros_like(nn, dtype=complex)
    for idx in model.cavity_channel_indices():
        c = model.collapse_ops[idx].to_dense()
        tot += c.conj().T @ c
    comm = tot @ nn - nn @ tot
    assert np.max(np.abs(comm)) < 1e-10 * max(1.0, np.max(np.abs(tot)))


def test_collapse_channels_ladder_action():
    for variant in SPONT_VARIANTS:
        model = build_model(random_params(RNG, spont_variant=variant))
        nn = model.number_op.to_dense()
        for lab, op in zip(model.channel_labels, model.collapse_ops):
            c = op.to_dense()
            scale = max(1.0, np.max(np.abs(c)))
            comm = nn @ c - c @ nn
            if lab.startswith("Spont") and variant == "literal_projector":
                assert np.max(np.abs(comm)) < 1e-10 * scale, lab
            else:
                # lowering channel: [N, C] = -C
                assert np.max(np.abs(comm + c)) < 1e-10 * scale, lab


def test_variant_equivalence_of_h_eff():
    lit = build_model(paper_params(spont_variant="literal_projector"))
    rad = build_model(paper_params(spont_variant="radiative_lowering"))
    diff = np.max(np.abs(lit.h_eff.to_dense() - rad.h_eff.to_dense()))
    assert diff < 1e-12 * np.max(np.abs(lit.h_eff.to_dense()))
    assert lit.channel_labels == ("OutA", "OutB", "Spont3", "Spont4")
    assert rad.channel_labels == ("OutA", "OutB", "Spont31", "Spont32",
                                  "Spont41", "Spont42")


def test_selection_rules_of_g_terms():
    """Entries that flip the dot level must follow the polarization rules:
    mode a serves 1<->3 and 2<->4, mode b serves 2<->3 and 1<->4."""
    model = build_model(paper_params(input_spec=InputSpec.fock(2)))
    lay = model.layout
    pairs_a = ({1, 3}, {2, 4})
    pairs_b = ({2, 3}, {1, 4})
    for (r, c), val in model.h_eff.entries().items():
        occ_r, occ_c = lay.occupations_of(r), lay.occupations_of(c)
        lev_r, lev_c = occ_r[3] + 1, occ_c[3] + 1
        if lev_r == lev_c:
            continue
        d_s = occ_r[0] - occ_c[0]
        d_a = occ_r[1] - occ_c[1]
        d_b = occ_r[2] - occ_c[2]
        levels = {lev_r, lev_c}
        assert d_s == 0, (r, c)
        if abs(d_a) == 1 and d_b == 0:
            assert levels in pairs_a, (levels, val)
        elif abs(d_b) == 1 and d_a == 0:
            assert levels in pairs_b, (levels, val)
        else:
            raise AssertionError(f"level flip with mode change ({d_a},{d_b}) at {(r, c)}")


def test_source_column_moves_only_through_cascade():
    """The only entries changing the source occupation implement the
    unidirectional a^dag a_s hop (source down, mode a up, dot untouched)."""
    model = build_model(paper_params(input_spec=InputSpec.fock(2)))
    lay = model.layout
    found = 0
    for (r, c), _ in model.h_eff.entries().items():
        occ_r, occ_c = lay.occupations_of(r), lay.occupations_of(c)
        if occ_r[0] == occ_c[0]:
            continue
        assert occ_r[0] - occ_c[0] == -1
        assert occ_r[1] - occ_c[1] == +1
        assert occ_r[2:] == occ_c[2:]
        found += 1
    assert found > 0


def test_decoupled_dot_leaves_b_and_dot_frozen():
    p = paper_params(g_a=0.0, g_b=0.0, gamma=0.0)
    model = build_model(p)
    lay = model.layout
    for (r, c), _ in model.h_eff.entries().items():
        assert lay.occupations_of(r)[2:] == lay.occupations_of(c)[2:]


def test_layout_consistency_errors():
    p = paper_params()
    with pytest.raises(LayoutError):
        build_model(p, SpaceLayout.cascade(2, 2, 2, qd_dim=1))
    with pytest.raises(LayoutError):
        build_model(paper_params(qd_present=False, g_a=0.0, g_b=0.0, gamma=0.0),
                    SpaceLayout.cascade(2, 2, 2, qd_dim=4))


# ---------------------------------------------------------------------------
# initial states
# ---------------------------------------------------------------------------

def test_initial_state_fock_one():
    p = paper_params()
    lay = default_layout(p)
    psi = initial_state(p, lay)
    assert psi.amplitudes[lay.index_of((1, 0, 0, 0))] == 1.0
    assert np.count_nonzero(psi.amplitudes) == 1


def test_initial_state_coherent_zero_is_vacuum():
    p = paper_params(input_spec=InputSpec.coherent(0.0))
    lay = default_layout(p)
    psi = initial_state(p, lay)
    assert psi.amplitudes[lay.index_of((0, 0, 0, 0))] == pytest.approx(1.0)
    assert psi.squared_norm == pytest.approx(1.0, rel=1e-12)


def test_initial_state_coherent_mean_occupation():
    p = paper_params(input_spec=InputSpec.coherent(2.0))
    model = build_model(p)
    # mean source occupation via the excitation counter (modes a, b empty)
    val = model.initial_state.expectation(model.number_op).real
    assert val == pytest.approx(2.0, abs=1e-7)


def test_initial_state_respects_qd_level():
    p = paper_params(qd_initial_level=2)
    lay = default_layout(p)
    psi = initial_state(p, lay)
    assert psi.amplitudes[lay.index_of((1, 0, 0, 1))] == 1.0


def test_initial_excitation_matches_fock_number():
    for n in (1, 2, 3):
        p = paper_params(input_spec=InputSpec.fock(n))
        model = build_model(p)
        val = model.initial_state.expectation(model.number_op).real
        assert val == pytest.approx(n, abs=1e-12)
