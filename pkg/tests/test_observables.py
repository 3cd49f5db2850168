"""Reduction-layer tests on synthetic jump records plus one physics run.

Synthetic records give exact oracles: classification walks are checked
against hand-enumerated sequences, and the g2 estimator against Poisson
and Fock count streams whose second factorial moments are known.
"""
import numpy as np
import pytest
import scipy.stats

from conftest import benchmark_params, mild_params
from photonsub.errors import AnalysisError
from photonsub.model import InputSpec, SystemParams, build_model, ghz
from photonsub.observables import (ChannelCounts, detection_probabilities,
                                   g2_zero, mean_output_photons,
                                   ordered_two_photon_probs,
                                   photon_number_histogram, summarize_ensemble)
from photonsub.trajectories import (Controls, EnsembleRecord, JumpEvent,
                                    TrajectoryRecord, run_ensemble)

LITERAL_LABELS = ("OutA", "OutB", "Spont3", "Spont4")
RADIATIVE_LABELS = ("OutA", "OutB", "Spont31", "Spont32", "Spont41", "Spont42")


def make_record(seqs, labels=LITERAL_LABELS, lowering=("OutA", "OutB"),
                residuals=None, t_end=1.0):
    """Assemble an EnsembleRecord from per-trajectory channel-label lists."""
    offsets = np.cumsum([0] + [len(s) for s in seqs]).astype(np.int64)
    chans = np.array([labels.index(c) for s in seqs for c in s], dtype=np.int8)
    times = np.concatenate([np.linspace(0.1, 0.9, len(s)) * t_end
                            for s in seqs]) if chans.size else np.zeros(0)
    if residuals is None:
        residuals = np.zeros(len(seqs))
    return EnsembleRecord(
        n_traj=len(seqs), master_seed=0, t_end=t_end, method="eigen",
        channel_labels=tuple(labels), lowering_labels=tuple(lowering),
        params_fingerprint="synthetic", controls=Controls(),
        traj_offsets=offsets, jump_times=times, jump_channels=chans,
        pre_jump_norms=np.full(chans.size, 0.5), residuals=np.asarray(residuals))


def record_from_counts(counts):
    """Single-channel record whose trajectory i fires OutA counts[i] times."""
    counts = np.asarray(counts, dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    m = int(offsets[-1])
    return EnsembleRecord(
        n_traj=counts.size, master_seed=0, t_end=1.0, method="eigen",
        channel_labels=("OutA",), lowering_labels=("OutA",),
        params_fingerprint="synthetic", controls=Controls(),
        traj_offsets=offsets, jump_times=np.arange(m, dtype=np.float64),
        jump_channels=np.zeros(m, dtype=np.int8),
        pre_jump_norms=np.full(m, 0.5), residuals=np.zeros(counts.size))


# ---------------------------------------------------------------------------
# classification walks
# ---------------------------------------------------------------------------

def test_channel_counts_from_trajectory():
    jumps = tuple(JumpEvent(0.1 * (i + 1), c, 0.5) for i, c in
                  enumerate(("OutA", "Spont3", "OutB", "OutA")))
    tr = TrajectoryRecord(jumps=jumps, residual_excitation=0.0, seed_index=0)
    cc = ChannelCounts.from_trajectory(tr)
    assert (cc.n_out_a, cc.n_out_b, cc.n_spont) == (2, 1, 1)
    assert cc.first_pair == ("OutA", "OutB")
    lone = TrajectoryRecord(jumps=jumps[:2], residual_excitation=0.0, seed_index=1)
    assert ChannelCounts.from_trajectory(lone).first_pair is None


def test_detection_classes_skip_projector_monitors():
    rec = make_record([
        ["OutA"],
        ["Spont3", "OutB"],      # projector monitor fires, photon continues
        ["Spont3"],              # monitored but never emitted
        [],
        ["OutB"],
    ])
    p = detection_probabilities(rec)
    assert p["OutA"][0] == pytest.approx(0.2)
    assert p["OutB"][0] == pytest.approx(0.4)
    assert p["Spont"][0] == 0.0
    assert p["incomplete"][0] == pytest.approx(0.4)
    total = sum(v[0] for v in p.values())
    assert total == pytest.approx(1.0, abs=1e-12)
    k, n = 1, 5
    assert p["OutA"][1] == pytest.approx(np.sqrt((k / n) * (1 - k / n) / n))


def test_detection_classes_count_radiative_losses():
    rec = make_record([
        ["Spont31"],             # excitation lost before any cavity emission
        ["OutA"],
        ["Spont32", "OutB"],     # lost first; later emission can't reclassify
    ], labels=RADIATIVE_LABELS, lowering=RADIATIVE_LABELS)
    p = detection_probabilities(rec)
    assert p["Spont"][0] == pytest.approx(2 / 3)
    assert p["OutA"][0] == pytest.approx(1 / 3)
    assert p["OutB"][0] == 0.0


def test_detection_warns_on_multiphoton_records():
    rec = make_record([["OutA", "OutA"]])
    with pytest.warns(UserWarning, match="single-excitation"):
        detection_probabilities(rec)


def test_ordered_pairs_and_routing_efficiency():
    rec = make_record([
        ["OutB", "Spont3", "OutA"],   # 'ba' despite the interleaved monitor
        ["OutA", "OutB"],             # 'ab'
        ["OutB", "OutB"],             # 'bb'
        ["OutA", "OutA", "OutB"],     # 'aa' from the first two only
        ["OutA"],                     # one emission -> incomplete
    ])
    probs, eff = ordered_two_photon_probs(rec)
    want = {"ba": 0.2, "ab": 0.2, "bb": 0.2, "aa": 0.2, "incomplete": 0.2}
    for cls, p in want.items():
        assert probs[cls][0] == pytest.approx(p)
    assert sum(v[0] for v in probs.values()) == pytest.approx(1.0, abs=1e-12)
    assert eff[0] == pytest.approx(0.4)
    assert eff[1] == pytest.approx(np.sqrt(0.4 * 0.6 / 5))


# ---------------------------------------------------------------------------
# counting statistics on synthetic streams
# ---------------------------------------------------------------------------

def test_histogram_mean_equals_nbar_estimate():
    rec = record_from_counts([0, 1, 2, 3])
    hist = photon_number_histogram(rec, "OutA")
    assert hist.sum() == pytest.approx(1.0, abs=1e-12)
    nbar, err = mean_output_photons(rec)["OutA"]
    assert np.dot(np.arange(hist.size), hist) == pytest.approx(nbar, abs=1e-15)
    assert err == pytest.approx(np.std([0, 1, 2, 3], ddof=1) / 2.0)


def test_g2_poisson_stream_is_unity():
    rng = np.random.default_rng(123)
    rec = record_from_counts(rng.poisson(1.3, size=20_000))
    est, err = g2_zero(rec, "OutA")
    assert err > 0.0
    assert abs(est - 1.0) < 3.0 * err


def test_g2_fock_stream_is_sub_poissonian():
    rec = record_from_counts(np.full(500, 3))
    est, err = g2_zero(rec, "OutA")
    assert est == pytest.approx(1.0 - 1.0 / 3.0, rel=1e-12)
    assert err < 1e-12                      # every resample is identical


def test_g2_bootstrap_is_seeded():
    rng = np.random.default_rng(7)
    rec = record_from_counts(rng.poisson(0.8, size=3000))
    a = g2_zero(rec, "OutA", seed=11)
    b = g2_zero(rec, "OutA", seed=11)
    c = g2_zero(rec, "OutA", seed=12)
    assert a == b
    assert a[0] == c[0] and a[1] != c[1]    # estimate fixed, bar resampled


def test_g2_error_paths():
    rec = record_from_counts([0, 0, 0])
    with pytest.raises(AnalysisError, match="never fires"):
        g2_zero(rec, "OutA")
    with pytest.raises(AnalysisError, match="no channel"):
        g2_zero(rec, "OutB")


def test_empty_ensemble_is_rejected():
    rec = make_record([])
    for fn in (detection_probabilities, ordered_two_photon_probs,
               mean_output_photons):
        with pytest.raises(AnalysisError, match="no trajectories"):
            fn(rec)


# ---------------------------------------------------------------------------
# consistency against the engine and one end-to-end Poisson check
# ---------------------------------------------------------------------------

def test_summarize_matches_componentwise_reductions():
    model = build_model(mild_params(input_spec=InputSpec.fock(2)))
    rec = run_ensemble(model, 200, master_seed=8)
    stats = summarize_ensemble(rec, seed=4)
    pairs, eff = ordered_two_photon_probs(rec)
    assert stats.ordered_pairs == pairs
    assert stats.routing_efficiency == eff
    assert stats.nbar_out == mean_output_photons(rec)
    for lab, (nbar, _) in stats.nbar_out.items():
        hist = stats.histogram[lab]
        assert np.dot(np.arange(hist.size), hist) == pytest.approx(nbar, abs=1e-12)
        if nbar > 0.0:
            assert stats.g2_zero[lab] == g2_zero(rec, lab, seed=4)
    counts = rec.channel_counts()
    for i in (0, 57, 199):
        cc = ChannelCounts.from_trajectory(rec.trajectory(i))
        row = dict(zip(rec.channel_labels, counts[i]))
        assert cc.n_out_a == row["OutA"] and cc.n_out_b == row["OutB"]
        assert cc.n_spont == sum(v for k, v in row.items() if k.startswith("Spont"))
    assert all(v[1] >= 0.0 for v in stats.p_channel.values())


def test_no_dot_coherent_output_is_poissonian():
    # a linear cavity chain transmits a coherent pulse unchanged, so the
    # per-trajectory photocounts must be Poisson with the input mean
    p = SystemParams.resonant(g_a=0.0, g_b=0.0, kappa_a=ghz(20.0), kappa_b=ghz(20.0),
                              kappa_s=ghz(0.05), gamma=0.0, delta=0.0,
                              qd_present=False,
                              input_spec=InputSpec.coherent(2.0))
    model = build_model(p)
    rec = run_ensemble(model, 30_000, master_seed=19)
    nbar, nerr = mean_output_photons(rec)["OutA"]
    assert abs(nbar - 2.0) < 3.0 * nerr
    est, err = g2_zero(rec, "OutA")
    assert abs(est - 1.0) < 3.0 * err
    hist = photon_number_histogram(rec, "OutA")
    assert hist.sum() == pytest.approx(1.0, abs=1e-12)
    kmax = hist.size - 1
    pmf = scipy.stats.poisson.pmf(np.arange(kmax + 1), 2.0)
    obs = np.append(hist[:kmax] * rec.n_traj, hist[kmax:].sum() * rec.n_traj)
    exp = np.append(pmf[:kmax], 1.0 - pmf[:kmax].sum()) * rec.n_traj
    keep = exp >= 5.0
    chi2 = ((obs[keep] - exp[keep]) ** 2 / exp[keep]).sum()
    pval = scipy.stats.chi2.sf(chi2, keep.sum() - 1)
    assert pval > 0.01
