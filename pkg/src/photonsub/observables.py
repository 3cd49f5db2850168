"""Ensemble reductions: routing probabilities, photon statistics, g2(0).

Everything here is a pure function of an EnsembleRecord.  Trajectories
are classified by their ordered jump sequences: the first
excitation-consuming jump fixes the single-photon detection class, the
first two cavity emissions fix the two-photon class, and per-trajectory
channel counts feed the photon-number statistics.  Projector-style
spontaneous-emission monitors record an event without consuming the
excitation, so they never terminate a classification walk.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AnalysisError
from .trajectories import EnsembleRecord, TrajectoryRecord

__all__ = [
    "ChannelCounts",
    "EnsembleStatistics",
    "detection_probabilities",
    "ordered_two_photon_probs",
    "mean_output_photons",
    "g2_zero",
    "photon_number_histogram",
    "summarize_ensemble",
]

CAVITY_LABELS = ("OutA", "OutB")
PAIR_CLASSES = ("aa", "ab", "ba", "bb")


@dataclass(frozen=True)
class ChannelCounts:
    """Per-trajectory jump bookkeeping used by the reductions."""

    n_out_a: int
    n_out_b: int
    n_spont: int
    first_pair: tuple[str, str] | None

    @classmethod
    def from_trajectory(cls, tr: TrajectoryRecord) -> "ChannelCounts":
        cavity = [j.channel for j in tr.jumps if j.channel in CAVITY_LABELS]
        return cls(
            n_out_a=tr.channel_count("OutA"),
            n_out_b=tr.channel_count("OutB"),
            n_spont=sum(1 for j in tr.jumps if j.channel.startswith("Spont")),
            first_pair=(cavity[0], cavity[1]) if len(cavity) >= 2 else None)


@dataclass(frozen=True)
class EnsembleStatistics:
    """All reported quantities for one ensemble, with error bars."""

    n_traj: int
    p_channel: dict[str, tuple[float, float]]
    ordered_pairs: dict[str, tuple[float, float]]
    routing_efficiency: tuple[float, float]
    nbar_out: dict[str, tuple[float, float]]
    g2_zero: dict[str, tuple[float, float]]
    histogram: dict[str, np.ndarray]


def _require_data(record: EnsembleRecord) -> None:
    if record.n_traj < 1:
        raise AnalysisError("ensemble holds no trajectories")


def _binomial(k: int, n: int) -> tuple[float, float]:
    p = k / n
    return p, float(np.sqrt(p * (1.0 - p) / n))


def _label_index(record: EnsembleRecord, label: str) -> int:
    try:
        return record.channel_labels.index(label)
    except ValueError:
        raise AnalysisError(f"no channel labeled {label!r} in this ensemble") from None


def _classify(record: EnsembleRecord):
    """First-consuming-jump class and first-two-cavity-emission class per trajectory."""
    labels = record.channel_labels
    lowering = {labels.index(lab) for lab in record.lowering_labels}
    cavity = {labels.index(lab): lab
              for lab in CAVITY_LABELS if lab in labels}
    off = record.traj_offsets
    ch = record.jump_channels
    singles, pairs = [], []
    for i in range(record.n_traj):
        seq = ch[off[i]:off[i + 1]]
        cls = "incomplete"
        for c in seq:
            c = int(c)
            if c in cavity:
                cls = cavity[c]
                break
            if c in lowering:      # excitation lost to spontaneous emission
                cls = "Spont"
                break
        singles.append(cls)
        emitted = [cavity[int(c)] for c in seq if int(c) in cavity]
        if len(emitted) >= 2:
            pairs.append(emitted[0][-1].lower() + emitted[1][-1].lower())
        else:
            pairs.append("incomplete")
    return singles, pairs


def detection_probabilities(record: EnsembleRecord) -> dict[str, tuple[float, float]]:
    """Single-photon routing classes with binomial error bars.

    Each trajectory lands in exactly one of OutA, OutB, Spont, or
    incomplete, so the four probabilities partition unity.
    """
    _require_data(record)
    singles, _ = _classify(record)
    counts = record.channel_counts()
    cav = [i for i, lab in enumerate(record.channel_labels) if lab in CAVITY_LABELS]
    if np.any(counts[:, cav].sum(axis=1) > 1):
        warnings.warn("multiple cavity emissions present; detection classes "
                      "assume a single-excitation input", stacklevel=2)
    n = record.n_traj
    return {cls: _binomial(sum(1 for s in singles if s == cls), n)
            for cls in ("OutA", "OutB", "Spont", "incomplete")}


def ordered_two_photon_probs(record: EnsembleRecord):
    """Ordered two-photon classes and the routing efficiency P_ab + P_ba.

    The class label records the first two cavity emissions in order, so
    'ba' means the first photon left through OutB and the second through
    OutA.  Trajectories with fewer than two cavity emissions land in an
    explicit 'incomplete' class rather than being dropped.
    """
    _require_data(record)
    _, pairs = _classify(record)
    n = record.n_traj
    tally = {cls: sum(1 for p in pairs if p == cls)
             for cls in PAIR_CLASSES + ("incomplete",)}
    probs = {cls: _binomial(k, n) for cls, k in tally.items()}
    efficiency = _binomial(tally["ab"] + tally["ba"], n)
    return probs, efficiency


def mean_output_photons(record: EnsembleRecord) -> dict[str, tuple[float, float]]:
    """Per-channel mean jump count with its Monte-Carlo standard error."""
    _require_data(record)
    counts = record.channel_counts()
    out = {}
    for k, lab in enumerate(record.channel_labels):
        col = counts[:, k]
        err = float(col.std(ddof=1) / np.sqrt(record.n_traj)) if record.n_traj > 1 else 0.0
        out[lab] = (float(col.mean()), err)
    return out


def g2_zero(record: EnsembleRecord, channel: str, *,
            n_boot: int = 1000, seed: int = 0) -> tuple[float, float]:
    """Pulse-integrated g2(0) = <n(n-1)>/<n>^2 on a channel's count stream.

    The error bar is the standard deviation of a seeded nonparametric
    bootstrap over trajectories; identical seeds give identical bars.
    """
    _require_data(record)
    counts = record.channel_counts()[:, _label_index(record, channel)].astype(np.float64)
    mean = counts.mean()
    if mean <= 0.0:
        raise AnalysisError(f"g2(0) undefined: channel {channel!r} never fires")
    est = float((counts * (counts - 1.0)).mean() / mean ** 2)
    rng = np.random.default_rng(seed)
    n = counts.size
    boot = np.empty(n_boot)
    kept = 0
    for _ in range(n_boot):
        sample = counts[rng.integers(0, n, size=n)]
        m = sample.mean()
        if m > 0.0:
            boot[kept] = (sample * (sample - 1.0)).mean() / m ** 2
            kept += 1
    if kept < 0.9 * n_boot:
        raise AnalysisError(f"g2(0) bootstrap unstable on {channel!r}: "
                            f"{n_boot - kept}/{n_boot} empty resamples")
    return est, float(boot[:kept].std(ddof=1))


def photon_number_histogram(record: EnsembleRecord, channel: str) -> np.ndarray:
    """Normalized distribution of per-trajectory counts on one channel."""
    _require_data(record)
    counts = record.channel_counts()[:, _label_index(record, channel)]
    return np.bincount(counts, minlength=1) / record.n_traj


def summarize_ensemble(record: EnsembleRecord, *, n_boot: int = 1000,
                       seed: int = 0) -> EnsembleStatistics:
    """One-stop reduction; g2(0) is reported for every channel that fires."""
    _require_data(record)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p_channel = detection_probabilities(record)
    pairs, efficiency = ordered_two_photon_probs(record)
    nbar = mean_output_photons(record)
    g2 = {}
    for lab in record.channel_labels:
        if nbar[lab][0] > 0.0:
            g2[lab] = g2_zero(record, lab, n_boot=n_boot, seed=seed)
    hist = {lab: photon_number_histogram(record, lab)
            for lab in record.channel_labels}
    return EnsembleStatistics(n_traj=record.n_traj, p_channel=p_channel,
                              ordered_pairs=pairs, routing_efficiency=efficiency,
                              nbar_out=nbar, g2_zero=g2, histogram=hist)
