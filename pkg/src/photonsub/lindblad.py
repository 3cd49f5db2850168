"""Dense Lindblad master-equation integrator used as a brute-force oracle.

The trajectory ensemble unravels

    drho/dt = -i[H, rho] + sum_k ( C_k rho C_k^dag - 1/2 {C_k^dag C_k, rho} )

so this module integrates that equation directly (vectorized rho, sparse
Liouvillian, fixed-step RK4) and reports the time-integrated channel
fluxes int_0^T <C_k^dag C_k> dt.  The flux integrals ride along as extra
rows of the augmented linear system, which keeps conservation identities
exact up to integrator error.  The oracle is deliberately plain; it is
the trusted reference, so clarity wins over speed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ._kernels import rk4_advance
from .errors import ConfigError, IntegrationError, ModelInconsistencyError
from .hilbert import Operator, SpaceLayout
from .model import ModelOperators, default_dt_max

__all__ = [
    "DensityMatrix",
    "LindbladResult",
    "hermitian_part",
    "evolve_lindblad",
    "channel_flux_integrals",
]

ORACLE_DIM_CAP = 4096
POSITIVITY_DIM_CAP = 512


@dataclass(eq=False)
class DensityMatrix:
    """Dense density matrix tied to a layout."""

    layout: SpaceLayout
    entries: np.ndarray

    def __post_init__(self) -> None:
        d = self.layout.total_dim
        m = np.ascontiguousarray(self.entries, dtype=np.complex128)
        if m.shape != (d, d):
            raise ConfigError(f"density matrix shape {m.shape} does not match dim {d}")
        self.entries = m

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def min_eigenvalue(self) -> float:
        sym = 0.5 * (self.entries + self.entries.conj().T)
        return float(np.linalg.eigvalsh(sym)[0])

    def validate(self, trace_tol: float = 1e-8, herm_tol: float = 1e-10,
                 positivity_tol: float = 1e-8, check_positivity: bool = True) -> None:
        tr = self.trace
        if abs(tr.imag) > trace_tol or abs(tr.real - 1.0) > trace_tol:
            raise IntegrationError(f"trace drifted to {tr}")
        if self.hermiticity_defect() > herm_tol:
            raise IntegrationError(
                f"hermiticity defect {self.hermiticity_defect():.3e} above {herm_tol:.1e}")
        if check_positivity and self.min_eigenvalue() < -positivity_tol:
            raise IntegrationError(
                f"negative eigenvalue {self.min_eigenvalue():.3e}")


def hermitian_part(model: ModelOperators, tol: float = 1e-10) -> Operator:
    """Hermitian generator H with h_eff = H - (i/2) sum_k C_k^dag C_k.

    Raises if the model's anti-Hermitian defect is not fully accounted for
    by its own collapse channels.
    """
    raw = model.h_eff + 0.5j * model.damping_op
    defect = raw - raw.dag()
    scale = float(np.max(np.abs(model.h_eff.matrix.data))) if model.h_eff.nnz else 1.0
    defect_norm = float(np.max(np.abs(defect.matrix.data))) if defect.nnz else 0.0
    if defect_norm > tol * scale:
        raise ModelInconsistencyError(
            f"anti-Hermitian part of h_eff deviates from -(i/2) sum C^dag C "
            f"by {defect_norm:.3e} (scale {scale:.3e})")
    return 0.5 * (raw + raw.dag())


@dataclass(eq=False)
class LindbladResult:
    """Snapshots plus channel flux integrals from one oracle run."""

    times: np.ndarray                  # snapshot times, starting at 0
    snapshots: list[DensityMatrix]     # density matrices at those times
    flux_series: np.ndarray            # (n_snapshots, n_channels) running integrals
    flux_integrals: dict[str, float]   # per channel label, at t_end
    residual_excitation: float         # tr(N rho) at t_end
    trace_drift: float                 # max |tr rho - 1| over snapshots
    dt: float
    n_steps: int


def _vec(mat: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(mat, dtype=np.complex128).reshape(-1)


def _flux_row(op_matrix: sp.csr_matrix, d: int) -> sp.csr_matrix:
    """Row r with r . vec(rho) = tr(A rho), i.e. r = vec(A^T)."""
    coo = op_matrix.tocoo()
    # tr(A rho) = sum_ij A_ij rho_ji -> weight at vec position (j, i)
    cols = coo.col.astype(np.int64) * d + coo.row.astype(np.int64)
    return sp.csr_matrix((coo.data, (np.zeros_like(cols), cols)), shape=(1, d * d))


def _liouvillian_augmented(model: ModelOperators) -> tuple[sp.csr_matrix, int]:
    """Sparse generator for y = [vec(rho); F_1..F_K] with dF_k/dt = <C_k^dag C_k>."""
    h = model.h_eff.matrix
    d = h.shape[0]
    ident = sp.identity(d, dtype=np.complex128, format="csr")
    # row-major vec: vec(A rho B) = (A kron B^T) vec(rho)
    lio = (-1j) * sp.kron(h, ident, format="csr") \
        + (1j) * sp.kron(ident, h.conjugate(), format="csr")
    for c in model.collapse_ops:
        lio = lio + sp.kron(c.matrix, c.matrix.conjugate(), format="csr")
    rows = [_flux_row((c.dag() @ c).matrix, d) for c in model.collapse_ops]
    flux_block = sp.vstack(rows, format="csr") if rows else sp.csr_matrix((0, d * d))
    aug = sp.bmat([[lio, None], [flux_block, None]], format="csr")
    aug.eliminate_zeros()
    aug.sort_indices()
    # stability is governed by the Liouvillian block alone; the flux rows
    # are passive quadrature and never feed back
    rate_bound = float(np.max(np.abs(lio).sum(axis=1))) if lio.nnz else 0.0
    return sp.csr_matrix(aug, dtype=np.complex128), rate_bound


def evolve_lindblad(model: ModelOperators, t_end: float, dt: float | None = None, *,
                    n_snapshots: int = 9, oracle_cap: int = ORACLE_DIM_CAP,
                    trace_tol: float = 1e-8, validate: bool = True) -> LindbladResult:
    """Integrate the master equation over [0, t_end] with fixed-step RK4.

    dt defaults to half the engine's step budget.  Snapshots (including the
    endpoints) are validated for trace, Hermiticity, and, on small instances,
    positivity.
    """
    d = model.layout.total_dim
    if d > oracle_cap:
        raise ConfigError(f"total_dim {d} exceeds the oracle cap {oracle_cap}")
    if t_end <= 0.0:
        raise ConfigError(f"t_end must be > 0, got {t_end}")
    if dt is None:
        dt = 0.5 * default_dt_max(model.params)
    if dt <= 0.0:
        raise ConfigError(f"dt must be > 0, got {dt}")
    if n_snapshots < 2:
        raise ConfigError("need at least the two endpoint snapshots")

    aug, rate_bound = _liouvillian_augmented(model)
    # RK4 stability guard against the generator's row-sum bound
    if dt * rate_bound > 2.0:
        raise IntegrationError(
            f"dt {dt:.3e} too large for stable RK4 (rate bound {rate_bound:.3e})")

    n_steps = max(1, math.ceil(t_end / dt))
    dt_eff = t_end / n_steps
    k = len(model.collapse_ops)

    psi0 = model.initial_state.amplitudes
    y = np.concatenate([_vec(np.outer(psi0, psi0.conj())), np.zeros(k, np.complex128)])

    marks = np.unique(np.round(np.linspace(0, n_steps, n_snapshots)).astype(np.int64))
    times, snaps, flux_rows = [], [], []
    trace_drift = 0.0
    check_pos = d <= POSITIVITY_DIM_CAP

    done = 0
    data, indices, indptr = aug.data, aug.indices, aug.indptr
    for mark in marks:
        if mark > done:
            rk4_advance(data, indices, indptr, y, dt_eff, int(mark - done))
            done = int(mark)
        rho = y[: d * d].reshape(d, d).copy()
        dm = DensityMatrix(model.layout, rho)
        if validate:
            dm.validate(trace_tol=trace_tol, check_positivity=check_pos)
        trace_drift = max(trace_drift, abs(dm.trace - 1.0))
        times.append(done * dt_eff)
        snaps.append(dm)
        flux_rows.append(y[d * d:].real.copy())

    if not np.all(np.isfinite(y.view(np.float64))):
        raise IntegrationError("non-finite amplitudes in oracle state")

    n_diag = model.number_op.matrix.diagonal().real
    rho_end = snaps[-1].entries
    residual = float(np.real(np.sum(n_diag * np.diag(rho_end))))
    flux_series = np.asarray(flux_rows)
    integrals = {lab: float(flux_series[-1, i])
                 for i, lab in enumerate(model.channel_labels)}
    return LindbladResult(times=np.asarray(times), snapshots=snaps,
                          flux_series=flux_series, flux_integrals=integrals,
                          residual_excitation=residual, trace_drift=float(trace_drift),
                          dt=dt_eff, n_steps=n_steps)


def channel_flux_integrals(model: ModelOperators, t_end: float,
                           dt: float | None = None, **kw) -> dict[str, float]:
    """Map channel label -> integrated output flux over [0, t_end]."""
    return evolve_lindblad(model, t_end, dt, **kw).flux_integrals
