"""No-jump propagation bundles backing the trajectory kernels.

The effective Hamiltonian commutes with the total excitation counter, so
in a basis sorted by excitation number it is block diagonal.  The eigen
bundle eigendecomposes each block once; trajectories then evaluate the
survival norm analytically at arbitrary times, which removes the stiff
fixed-step marching from the hot loop.  Blocks are validated on build
(reconstruction residual and eigenvector conditioning); models that fail,
for example a defective block at exactly matched decay rates, fall back
to the fixed-step RK4 bundle.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import IntegrationError
from .model import ModelOperators, default_dt_max

__all__ = ["ChannelPack", "EigenBundle", "Rk4Bundle", "pack_channels"]

RECON_TOL = 1e-10
COND_CAP = 1e8


@dataclass(frozen=True, eq=False)
class ChannelPack:
    """Collapse operators flattened into one CSR arena for the kernels."""

    data: np.ndarray      # complex, concatenated channel entries
    indices: np.ndarray   # int64, concatenated column indices
    indptr: np.ndarray    # int64 (n_channels, dim+1), per-channel row pointers
    off: np.ndarray       # int64 (n_channels,), channel start inside data
    n_channels: int


def pack_channels(mats: list[sp.csr_matrix]) -> ChannelPack:
    if not mats:
        raise IntegrationError("need at least one collapse channel")
    dim = mats[0].shape[0]
    datas, idxs, ptrs, offs = [], [], [], []
    pos = 0
    for m in mats:
        m = sp.csr_matrix(m, dtype=np.complex128)
        m.sort_indices()
        datas.append(m.data)
        idxs.append(m.indices.astype(np.int64))
        ptrs.append(m.indptr.astype(np.int64))
        offs.append(pos)
        pos += m.nnz
    return ChannelPack(data=np.concatenate(datas) if pos else np.zeros(0, np.complex128),
                       indices=np.concatenate(idxs) if pos else np.zeros(0, np.int64),
                       indptr=np.vstack(ptrs),
                       off=np.asarray(offs, dtype=np.int64),
                       n_channels=len(mats))


def _permuted(mat: sp.csr_matrix, perm: np.ndarray) -> sp.csr_matrix:
    out = sp.csr_matrix(mat[perm, :][:, perm])
    out.sort_indices()
    return out


@dataclass(frozen=True, eq=False)
class EigenBundle:
    """Exact sector-block propagator in the excitation-sorted basis."""

    perm: np.ndarray          # original index -> position: psi_perm = psi[perm]
    sec_ptr: np.ndarray       # int64 (n_sectors+1,) block boundaries
    v: np.ndarray             # complex, packed row-major eigenvector blocks
    vinv: np.ndarray          # complex, packed inverse blocks
    v_off: np.ndarray         # int64 (n_sectors,), block offsets into v / vinv
    lam: np.ndarray           # complex eigenvalues, packed like the state
    channels: ChannelPack     # collapse operators in the permuted basis
    n_diag: np.ndarray        # real excitation numbers, permuted
    psi0: np.ndarray          # initial amplitudes, permuted
    recon_residual: float
    max_cond: float

    @classmethod
    def build(cls, model: ModelOperators) -> "EigenBundle":
        h = model.h_eff.matrix
        d = h.shape[0]
        n_mat = model.number_op.matrix
        if n_mat.nnz != (n_mat.diagonal() != 0).sum():
            raise IntegrationError("excitation counter is not diagonal")
        n_diag = n_mat.diagonal().real
        sectors = np.rint(n_diag).astype(np.int64)
        if np.max(np.abs(sectors - n_diag)) > 1e-9:
            raise IntegrationError("excitation counter has non-integer spectrum")

        perm = np.argsort(sectors, kind="stable")
        sorted_ids = sectors[perm]
        boundaries = np.flatnonzero(np.diff(sorted_ids)) + 1
        sec_ptr = np.concatenate(([0], boundaries, [d])).astype(np.int64)

        hp = _permuted(h, perm)
        scale = float(np.max(np.abs(hp.data))) if hp.nnz else 1.0
        # the Hamiltonian must not couple different sectors
        coo = hp.tocoo()
        cross = sorted_ids[coo.row] != sorted_ids[coo.col]
        if np.any(cross) and np.max(np.abs(coo.data[cross])) > 1e-12 * scale:
            raise IntegrationError("h_eff couples distinct excitation sectors")

        v_blocks, vinv_blocks, lam_parts, v_off = [], [], [], []
        pos = 0
        worst_res = 0.0
        worst_cond = 1.0
        hd = hp.toarray()
        for s in range(sec_ptr.size - 1):
            b, e = int(sec_ptr[s]), int(sec_ptr[s + 1])
            block = hd[b:e, b:e]
            try:
                lam, vec = scipy.linalg.eig(block)
                cond = float(np.linalg.cond(vec))
                if not np.isfinite(cond) or cond > COND_CAP:
                    raise np.linalg.LinAlgError("eigenbasis nearly singular")
                vinv = scipy.linalg.inv(vec)
            except np.linalg.LinAlgError as exc:
                # defective block (e.g. exactly matched decay rates)
                raise IntegrationError(
                    f"sector block {s} is not diagonalizable: {exc}") from exc
            res = float(np.max(np.abs(vec @ np.diag(lam) @ vinv - block)))
            worst_res = max(worst_res, res)
            worst_cond = max(worst_cond, cond)
            if res > RECON_TOL * scale or cond > COND_CAP:
                raise IntegrationError(
                    f"sector block {s} is ill-conditioned for eigendecomposition "
                    f"(residual {res:.2e}, cond {cond:.2e})")
            v_blocks.append(np.ascontiguousarray(vec, dtype=np.complex128).reshape(-1))
            vinv_blocks.append(np.ascontiguousarray(vinv, dtype=np.complex128).reshape(-1))
            lam_parts.append(lam.astype(np.complex128))
            v_off.append(pos)
            pos += (e - b) * (e - b)

        chans = pack_channels([_permuted(c.matrix, perm) for c in model.collapse_ops])
        return cls(perm=perm.astype(np.int64), sec_ptr=sec_ptr,
                   v=np.concatenate(v_blocks), vinv=np.concatenate(vinv_blocks),
                   v_off=np.asarray(v_off, dtype=np.int64),
                   lam=np.concatenate(lam_parts), channels=chans,
                   n_diag=np.ascontiguousarray(n_diag[perm]),
                   psi0=np.ascontiguousarray(model.initial_state.amplitudes[perm]),
                   recon_residual=worst_res, max_cond=worst_cond)


@dataclass(frozen=True, eq=False)
class Rk4Bundle:
    """Fixed-step marching data in the original basis."""

    h_data: np.ndarray        # entries of -i h_eff (pre-scaled for the RHS)
    h_indices: np.ndarray
    h_indptr: np.ndarray
    channels: ChannelPack
    n_diag: np.ndarray
    psi0: np.ndarray
    dt_max: float

    @classmethod
    def build(cls, model: ModelOperators, dt_max: float | None = None) -> "Rk4Bundle":
        h = sp.csr_matrix(model.h_eff.matrix, dtype=np.complex128)
        h.sort_indices()
        if dt_max is None:
            dt_max = default_dt_max(model.params)
        if dt_max <= 0.0:
            raise IntegrationError(f"dt_max must be > 0, got {dt_max}")
        chans = pack_channels([c.matrix for c in model.collapse_ops])
        return cls(h_data=(-1j) * h.data, h_indices=h.indices.astype(np.int64),
                   h_indptr=h.indptr.astype(np.int64), channels=chans,
                   n_diag=model.number_op.matrix.diagonal().real,
                   psi0=model.initial_state.amplitudes.copy(), dt_max=float(dt_max))
