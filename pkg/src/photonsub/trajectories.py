"""Monte-Carlo wavefunction engine: seeded trajectories and ensembles.

Standard unraveling of the master equation: evolve under the
non-Hermitian h_eff, draw r uniform in (0,1), integrate until the
squared norm decays to r, branch into a collapse channel proportionally
to its flux, renormalize, redraw.  Trajectory i derives its random
stream from (master_seed, i) alone, so ensembles reproduce bit-for-bit
regardless of worker count, chunking, or scheduling order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numba
import numpy as np

from . import _kernels as K
from .errors import ConfigError, IntegrationError, TrajectoryError
from .hilbert import Operator, StateVector
from .model import (ModelOperators, default_dt_max, lowering_channel_labels,
                    params_digest)
from .propagators import EigenBundle, Rk4Bundle

__all__ = [
    "Controls",
    "JumpEvent",
    "TrajectoryRecord",
    "EnsembleRecord",
    "select_jump_channel",
    "evolve_trajectory",
    "run_ensemble",
]

_STATUS_MESSAGES = {
    K.STATUS_UNDERFLOW: "squared norm fell below norm_floor with no pending threshold",
    K.STATUS_NONFINITE: "non-finite amplitudes (divergence)",
    K.STATUS_JUMP_OVERFLOW: "jump buffer exhausted; raise max_jumps",
    K.STATUS_NORM_GREW: "squared norm grew between jumps",
    K.STATUS_ZERO_FLUX: "threshold crossing with zero total jump flux",
    K.STATUS_NO_CONVERGE: "jump-time root search failed to converge",
}


@dataclass(frozen=True)
class Controls:
    """Engine tolerances and execution knobs."""

    dt_max: float | None = None          # rk4 step budget; None = rate-derived
    jump_time_tol: float = 1e-10         # relative norm tolerance at the jump
    norm_floor: float = 1e-14
    residual_tolerance: float = 1e-3     # flag trajectories ending above this <N>
    max_jumps: int = 128
    method: str = "auto"                 # auto | eigen | rk4
    chunk_size: int = 4096

    def __post_init__(self) -> None:
        if self.method not in ("auto", "eigen", "rk4"):
            raise ConfigError(f"method must be auto, eigen, or rk4, got {self.method!r}")
        if self.jump_time_tol <= 0.0 or self.norm_floor <= 0.0:
            raise ConfigError("tolerances must be positive")
        if self.max_jumps < 1 or self.chunk_size < 1:
            raise ConfigError("max_jumps and chunk_size must be >= 1")


@dataclass(frozen=True)
class JumpEvent:
    time: float
    channel: str
    pre_jump_norm_sq: float


@dataclass(frozen=True)
class TrajectoryRecord:
    jumps: tuple[JumpEvent, ...]
    residual_excitation: float
    seed_index: int

    @property
    def n_jumps(self) -> int:
        return len(self.jumps)

    def channel_count(self, label: str) -> int:
        return sum(1 for j in self.jumps if j.channel == label)


@dataclass(eq=False)
class EnsembleRecord:
    """Compact jump tallies for a full seeded ensemble.

    Per-trajectory jump sequences are stored as ragged arrays indexed by
    traj_offsets; trajectory i occupies the slice
    [traj_offsets[i], traj_offsets[i+1]).
    """

    n_traj: int
    master_seed: int
    t_end: float
    method: str
    channel_labels: tuple[str, ...]
    lowering_labels: tuple[str, ...]   # channels that consume an excitation
    params_fingerprint: str
    controls: Controls
    traj_offsets: np.ndarray      # int64 (n_traj + 1,)
    jump_times: np.ndarray        # float64, all jumps concatenated
    jump_channels: np.ndarray     # int8, channel indices
    pre_jump_norms: np.ndarray    # float64
    residuals: np.ndarray         # float64 (n_traj,)

    @property
    def n_flagged(self) -> int:
        return int(np.sum(self.residuals > self.controls.residual_tolerance))

    def trajectory(self, i: int) -> TrajectoryRecord:
        lo, hi = int(self.traj_offsets[i]), int(self.traj_offsets[i + 1])
        jumps = tuple(
            JumpEvent(float(self.jump_times[p]),
                      self.channel_labels[int(self.jump_channels[p])],
                      float(self.pre_jump_norms[p]))
            for p in range(lo, hi))
        return TrajectoryRecord(jumps=jumps,
                                residual_excitation=float(self.residuals[i]),
                                seed_index=i)

    def __iter__(self) -> Iterator[TrajectoryRecord]:
        return (self.trajectory(i) for i in range(self.n_traj))

    def channel_counts(self) -> np.ndarray:
        """(n_traj, n_channels) jump counts per trajectory."""
        k = len(self.channel_labels)
        counts = np.zeros((self.n_traj, k), dtype=np.int64)
        traj_of_jump = np.repeat(np.arange(self.n_traj),
                                 np.diff(self.traj_offsets))
        np.add.at(counts, (traj_of_jump, self.jump_channels.astype(np.int64)), 1)
        return counts

    def identical_tallies(self, other: "EnsembleRecord") -> bool:
        """Bit-exact comparison of every per-trajectory quantity."""
        return (self.n_traj == other.n_traj
                and np.array_equal(self.traj_offsets, other.traj_offsets)
                and np.array_equal(self.jump_times, other.jump_times)
                and np.array_equal(self.jump_channels, other.jump_channels)
                and np.array_equal(self.pre_jump_norms, other.pre_jump_norms)
                and np.array_equal(self.residuals, other.residuals))


def select_jump_channel(state: StateVector, collapse_ops: Sequence[Operator],
                        u: float, labels: Sequence[str] | None = None):
    """Pick the collapse channel for a jump at the given uniform draw u.

    Channel k wins with probability |C_k psi|^2 / sum_j |C_j psi|^2; raises
    when every flux vanishes (a spurious threshold crossing).
    """
    fluxes = [c.apply(state).squared_norm for c in collapse_ops]
    total = float(sum(fluxes))
    if not total > 0.0:
        raise TrajectoryError("no jump possible: all channel fluxes vanish")
    target = u * total
    acc = 0.0
    pick = len(fluxes) - 1
    for k, f in enumerate(fluxes):
        acc += f
        if target <= acc:
            pick = k
            break
    return labels[pick] if labels is not None else pick


def _resolve_backend(model: ModelOperators, controls: Controls):
    """Returns (method, bundle); auto prefers eigen and falls back to rk4."""
    if controls.method == "eigen":
        return "eigen", EigenBundle.build(model)
    if controls.method == "rk4":
        return "rk4", Rk4Bundle.build(model, controls.dt_max)
    try:
        return "eigen", EigenBundle.build(model)
    except IntegrationError:
        return "rk4", Rk4Bundle.build(model, controls.dt_max)


def _run_chunk(method: str, bundle, controls: Controls, t_end: float,
               master_seed: int, traj_start: int, n: int):
    mj = controls.max_jumps
    jt = np.zeros((n, mj), dtype=np.float64)
    jc = np.zeros((n, mj), dtype=np.int8)
    jn = np.zeros((n, mj), dtype=np.float64)
    nj = np.zeros(n, dtype=np.int64)
    residual = np.zeros(n, dtype=np.float64)
    status = np.zeros(n, dtype=np.int64)
    ch = bundle.channels
    if method == "eigen":
        K.ensemble_chunk_eigen(bundle.sec_ptr, bundle.v, bundle.vinv, bundle.v_off,
                               bundle.lam, ch.data, ch.indices, ch.indptr, ch.off,
                               ch.n_channels, bundle.n_diag, bundle.psi0,
                               t_end, controls.jump_time_tol, mj,
                               master_seed, traj_start, n,
                               jt, jc, jn, nj, residual, status)
    else:
        K.ensemble_chunk_rk4(bundle.h_data, bundle.h_indices, bundle.h_indptr,
                             ch.data, ch.indices, ch.indptr, ch.off,
                             ch.n_channels, bundle.n_diag, bundle.psi0,
                             t_end, bundle.dt_max, controls.jump_time_tol,
                             controls.norm_floor, mj,
                             master_seed, traj_start, n,
                             jt, jc, jn, nj, residual, status)
    bad = np.flatnonzero(status)
    if bad.size:
        i = int(bad[0])
        msg = _STATUS_MESSAGES.get(int(status[i]), "unknown failure")
        raise TrajectoryError(f"trajectory seed_index={traj_start + i} failed: {msg}")
    return jt, jc, jn, nj, residual


def _validate_run_args(n_traj: int, master_seed: int, workers: int) -> None:
    if n_traj < 1:
        raise ConfigError(f"n_traj must be >= 1, got {n_traj}")
    if not 0 <= int(master_seed) < 2 ** 63:
        raise ConfigError("master_seed must be a non-negative 63-bit integer")
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")


def run_ensemble(model: ModelOperators, n_traj: int, master_seed: int,
                 workers: int = 1, controls: Controls = Controls(),
                 t_end: float | None = None) -> EnsembleRecord:
    """Run a seeded trajectory ensemble and collect its jump records.

    Results depend only on (model, controls, t_end, master_seed, n_traj);
    workers and chunking affect speed alone.  Any failing trajectory
    aborts the whole ensemble with its seed index.
    """
    _validate_run_args(n_traj, master_seed, workers)
    if t_end is None:
        t_end = 10.0 / model.params.kappa_s
    if t_end <= 0.0:
        raise ConfigError(f"t_end must be > 0, got {t_end}")
    method, bundle = _resolve_backend(model, controls)
    numba.set_num_threads(max(1, min(workers, numba.config.NUMBA_NUM_THREADS)))

    offsets = [0]
    times_parts, chan_parts, norm_parts, res_parts = [], [], [], []
    for start in range(0, n_traj, controls.chunk_size):
        n = min(controls.chunk_size, n_traj - start)
        jt, jc, jn, nj, residual = _run_chunk(method, bundle, controls, t_end,
                                              master_seed, start, n)
        for i in range(n):
            m = int(nj[i])
            offsets.append(offsets[-1] + m)
            if m:
                times_parts.append(jt[i, :m].copy())
                chan_parts.append(jc[i, :m].copy())
                norm_parts.append(jn[i, :m].copy())
        res_parts.append(residual)

    cat = lambda parts, dtype: (np.concatenate(parts) if parts
                                else np.zeros(0, dtype=dtype))
    dt_eff = bundle.dt_max if method == "rk4" else None
    fingerprint = params_digest(model.params, model.layout, extra={
        "t_end": t_end, "method": method, "dt_max": dt_eff,
        "jump_time_tol": controls.jump_time_tol, "norm_floor": controls.norm_floor,
        "residual_tolerance": controls.residual_tolerance,
        "max_jumps": controls.max_jumps,
    })
    return EnsembleRecord(
        n_traj=n_traj, master_seed=int(master_seed), t_end=float(t_end),
        method=method, channel_labels=model.channel_labels,
        lowering_labels=lowering_channel_labels(model),
        params_fingerprint=fingerprint, controls=controls,
        traj_offsets=np.asarray(offsets, dtype=np.int64),
        jump_times=cat(times_parts, np.float64),
        jump_channels=cat(chan_parts, np.int8),
        pre_jump_norms=cat(norm_parts, np.float64),
        residuals=np.concatenate(res_parts))


def evolve_trajectory(model: ModelOperators, t_end: float,
                      rng: int | tuple[int, int],
                      controls: Controls = Controls()) -> TrajectoryRecord:
    """Evolve a single trajectory.

    rng is either a bare master seed (trajectory index 0) or an explicit
    (master_seed, trajectory_index) pair; the same pair inside an ensemble
    yields exactly the same record.
    """
    if isinstance(rng, tuple):
        master_seed, idx = rng
    else:
        master_seed, idx = rng, 0
    _validate_run_args(1, master_seed, 1)
    if t_end <= 0.0:
        raise ConfigError(f"t_end must be > 0, got {t_end}")
    if model.initial_state.squared_norm < 1.0 - 1e-9:
        raise ConfigError("initial state must be normalized")
    method, bundle = _resolve_backend(model, controls)
    jt, jc, jn, nj, residual = _run_chunk(method, bundle, controls, t_end,
                                          master_seed, int(idx), 1)
    m = int(nj[0])
    jumps = tuple(JumpEvent(float(jt[0, p]), model.channel_labels[int(jc[0, p])],
                            float(jn[0, p])) for p in range(m))
    return TrajectoryRecord(jumps=jumps, residual_excitation=float(residual[0]),
                            seed_index=int(idx))
