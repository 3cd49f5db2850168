"""Numba kernels: sparse matvecs, RK4 stepping, trajectory loops, RNG.

Everything here works on plain arrays (CSR triplets, contiguous complex
vectors) so the hot loops stay allocation-free and cacheable.  The RNG is
a counter-based splitmix64: each trajectory derives its own stream from
(master_seed, trajectory_index), which makes ensembles bit-reproducible
no matter how trajectories are scheduled across workers.

Two no-jump propagation backends share the jump bookkeeping:

* eigen: the effective Hamiltonian conserves total excitation, so it is
  block-diagonal over excitation sectors.  Each block is eigendecomposed
  once; between jumps the survival norm is an analytic function of the
  elapsed time and the jump instant is found by bracketed root finding
  on the exact curve.
* rk4: fixed-step marching of the amplitude vector with classical RK4
  and bisection refinement of the jump time inside the crossing step.

Trajectory status codes: 0 ok, 1 norm underflow, 2 non-finite state,
3 jump buffer exhausted, 4 norm grew between jumps, 5 jump with zero
total flux, 6 root search failed to converge.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_NONFINITE = 2
STATUS_JUMP_OVERFLOW = 3
STATUS_NORM_GREW = 4
STATUS_ZERO_FLUX = 5
STATUS_NO_CONVERGE = 6

# ---------------------------------------------------------------------------
# splitmix64 stream, keyed per trajectory
# ---------------------------------------------------------------------------

_U64 = np.uint64


@njit(cache=True, inline="always")
def _splitmix64_next(state):
    # state is a length-1 uint64 array; returns the next 64-bit word
    state[0] += _U64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return z ^ (z >> _U64(31))


@njit(cache=True)
def seed_stream(master_seed, traj_index):
    """Derive an independent stream state from (master_seed, trajectory index)."""
    state = np.zeros(1, dtype=np.uint64)
    state[0] = _U64(master_seed)
    mix = _splitmix64_next(state)
    state[0] = mix ^ (_U64(traj_index) * _U64(0x9E3779B97F4A7C15) + _U64(0x243F6A8885A308D3))
    _splitmix64_next(state)   # decorrelate adjacent indices
    return state


@njit(cache=True, inline="always")
def uniform_open(state):
    """Uniform draw in the open interval (0, 1) with a 53-bit mantissa."""
    z = _splitmix64_next(state)
    return (np.float64(z >> _U64(11)) + 0.5) * (1.0 / 9007199254740992.0)


# ---------------------------------------------------------------------------
# CSR primitives
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def csr_matvec(data, indices, indptr, x, out):
    for i in range(out.size):
        acc = 0.0 + 0.0j
        for p in range(indptr[i], indptr[i + 1]):
            acc += data[p] * x[indices[p]]
        out[i] = acc


@njit(cache=True)
def rk4_advance(data, indices, indptr, y, dt, n_steps):
    """March dy/dt = A y forward in place with classical RK4, fixed dt."""
    n = y.size
    k1 = np.empty(n, np.complex128)
    k2 = np.empty(n, np.complex128)
    k3 = np.empty(n, np.complex128)
    k4 = np.empty(n, np.complex128)
    tmp = np.empty(n, np.complex128)
    half = 0.5 * dt
    sixth = dt / 6.0
    for _ in range(n_steps):
        csr_matvec(data, indices, indptr, y, k1)
        for i in range(n):
            tmp[i] = y[i] + half * k1[i]
        csr_matvec(data, indices, indptr, tmp, k2)
        for i in range(n):
            tmp[i] = y[i] + half * k2[i]
        csr_matvec(data, indices, indptr, tmp, k3)
        for i in range(n):
            tmp[i] = y[i] + dt * k3[i]
        csr_matvec(data, indices, indptr, tmp, k4)
        for i in range(n):
            y[i] += sixth * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])


# ---------------------------------------------------------------------------
# shared jump helpers
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _channel_matvec(k, ch_data, ch_indices, ch_indptr, ch_off, x, out):
    """out = C_k x for the packed channel list; returns |out|^2."""
    off = ch_off[k]
    n2 = 0.0
    for i in range(x.size):
        acc = 0.0 + 0.0j
        for p in range(ch_indptr[k, i], ch_indptr[k, i + 1]):
            acc += ch_data[off + p] * x[ch_indices[off + p]]
        out[i] = acc
        n2 += acc.real * acc.real + acc.imag * acc.imag
    return n2


@njit(cache=True, inline="always")
def _select_channel(state, n_channels, ch_data, ch_indices, ch_indptr, ch_off,
                    psi, scratch, fluxes):
    """Draw the jump channel proportionally to the fluxes |C_k psi|^2.

    Returns the channel index, or -1 when every flux vanishes.
    """
    total = 0.0
    for k in range(n_channels):
        fluxes[k] = _channel_matvec(k, ch_data, ch_indices, ch_indptr, ch_off,
                                    psi, scratch)
        total += fluxes[k]
    if not (total > 0.0) or not math.isfinite(total):
        return -1
    u = uniform_open(state) * total
    acc = 0.0
    pick = n_channels - 1
    for k in range(n_channels):
        acc += fluxes[k]
        if u <= acc:
            pick = k
            break
    return pick


@njit(cache=True, inline="always")
def _residual_excitation(n_diag, psi):
    """<N> of the normalized state."""
    num = 0.0
    den = 0.0
    for i in range(psi.size):
        w = psi[i].real * psi[i].real + psi[i].imag * psi[i].imag
        num += n_diag[i] * w
        den += w
    if den <= 0.0:
        return 0.0
    return num / den


@njit(cache=True, inline="always")
def _vec_norm_sq(x):
    n2 = 0.0
    for i in range(x.size):
        n2 += x[i].real * x[i].real + x[i].imag * x[i].imag
    return n2


@njit(cache=True, inline="always")
def _finite(x):
    for i in range(x.size):
        if not (math.isfinite(x[i].real) and math.isfinite(x[i].imag)):
            return False
    return True


# ---------------------------------------------------------------------------
# eigen backend: exact sector-block propagation
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _eigen_project(sec_ptr, vinv, v_off, psi, w):
    """w = Vinv psi blockwise (start-of-segment spectral coefficients)."""
    for s in range(sec_ptr.size - 1):
        b = sec_ptr[s]
        dim = sec_ptr[s + 1] - b
        vo = v_off[s]
        for i in range(dim):
            acc = 0.0 + 0.0j
            row = vo + i * dim
            for j in range(dim):
                acc += vinv[row + j] * psi[b + j]
            w[b + i] = acc


@njit(cache=True, inline="always")
def _eigen_norm_at(sec_ptr, v, v_off, lam, w, delta, u):
    """Squared norm of V exp(-i lam delta) w without materializing the state."""
    n2 = 0.0
    for s in range(sec_ptr.size - 1):
        b = sec_ptr[s]
        dim = sec_ptr[s + 1] - b
        vo = v_off[s]
        for j in range(dim):
            u[b + j] = w[b + j] * np.exp(-1j * lam[b + j] * delta)
        for i in range(dim):
            acc = 0.0 + 0.0j
            row = vo + i * dim
            for j in range(dim):
                acc += v[row + j] * u[b + j]
            n2 += acc.real * acc.real + acc.imag * acc.imag
    return n2


@njit(cache=True, inline="always")
def _eigen_state_at(sec_ptr, v, v_off, lam, w, delta, u, out):
    """out = V exp(-i lam delta) w; returns the squared norm."""
    n2 = 0.0
    for s in range(sec_ptr.size - 1):
        b = sec_ptr[s]
        dim = sec_ptr[s + 1] - b
        vo = v_off[s]
        for j in range(dim):
            u[b + j] = w[b + j] * np.exp(-1j * lam[b + j] * delta)
        for i in range(dim):
            acc = 0.0 + 0.0j
            row = vo + i * dim
            for j in range(dim):
                acc += v[row + j] * u[b + j]
            out[b + i] = acc
            n2 += acc.real * acc.real + acc.imag * acc.imag
    return n2


@njit(cache=True)
def traj_eigen(sec_ptr, v, vinv, v_off, lam,
               ch_data, ch_indices, ch_indptr, ch_off, n_channels,
               n_diag, psi0,
               t_end, jump_tol, max_jumps,
               master_seed, traj_index,
               jt_out, jc_out, jn_out):
    """One trajectory under exact sector propagation.

    Returns (n_jumps, residual_excitation, status).  Jump times, channels,
    and pre-jump squared norms land in the three output rows.
    """
    d = psi0.size
    psi = psi0.copy()
    w = np.empty(d, np.complex128)
    u = np.empty(d, np.complex128)
    scratch = np.empty(d, np.complex128)
    fluxes = np.empty(n_channels, np.float64)

    state = seed_stream(master_seed, traj_index)
    r = uniform_open(state)
    t = 0.0
    nj = 0

    while True:
        _eigen_project(sec_ptr, vinv, v_off, psi, w)
        t_rem = t_end - t
        n2_end = _eigen_norm_at(sec_ptr, v, v_off, lam, w, t_rem, u)
        if not math.isfinite(n2_end):
            return nj, 0.0, STATUS_NONFINITE
        if n2_end > r:
            # no further jump inside the horizon
            _eigen_state_at(sec_ptr, v, v_off, lam, w, t_rem, u, psi)
            break

        # bracketed root search for ||psi(delta)||^2 = r on [0, t_rem];
        # the exact survival norm is monotone, and near-exponential, so a
        # falsi/Illinois iteration on log(norm^2) converges in a handful
        # of evaluations; periodic bisection guards the bracket.
        log_r = math.log(r)
        lo = 0.0
        g_lo = 0.0 - log_r          # segment always starts at unit norm
        hi = t_rem
        g_hi = math.log(n2_end) - log_r if n2_end > 0.0 else -745.0 - log_r
        side = 0
        delta = hi
        n2x = n2_end
        converged = False
        for it in range(200):
            if abs(n2x - r) <= jump_tol * r:
                converged = True
                break
            width = hi - lo
            if width <= 4.0 * 2.220446049250313e-16 * max(hi, 1e-300):
                converged = True   # bracket at floating-point resolution
                break
            if (it & 7) == 7 or g_hi == g_lo:
                x = lo + 0.5 * width
            else:
                x = (lo * g_hi - hi * g_lo) / (g_hi - g_lo)
                if x <= lo or x >= hi:
                    x = lo + 0.5 * width
            n2x = _eigen_norm_at(sec_ptr, v, v_off, lam, w, x, u)
            if not math.isfinite(n2x):
                return nj, 0.0, STATUS_NONFINITE
            gx = (math.log(n2x) if n2x > 0.0 else -745.0) - log_r
            if gx > 0.0:
                lo = x
                g_lo = gx
                if side == 1:
                    g_hi *= 0.5
                side = 1
            else:
                hi = x
                g_hi = gx
                if side == -1:
                    g_lo *= 0.5
                side = -1
            delta = x
        if not converged:
            return nj, 0.0, STATUS_NO_CONVERGE

        n2_jump = _eigen_state_at(sec_ptr, v, v_off, lam, w, delta, u, psi)
        t = t + delta

        pick = _select_channel(state, n_channels, ch_data, ch_indices, ch_indptr,
                               ch_off, psi, scratch, fluxes)
        if pick < 0:
            return nj, 0.0, STATUS_ZERO_FLUX
        if nj >= max_jumps:
            return nj, 0.0, STATUS_JUMP_OVERFLOW
        jt_out[nj] = t
        jc_out[nj] = pick
        jn_out[nj] = n2_jump
        nj += 1

        cn2 = _channel_matvec(pick, ch_data, ch_indices, ch_indptr, ch_off,
                              psi, scratch)
        inv = 1.0 / math.sqrt(cn2)
        for i in range(d):
            psi[i] = scratch[i] * inv
        r = uniform_open(state)

    if not _finite(psi):
        return nj, 0.0, STATUS_NONFINITE
    return nj, _residual_excitation(n_diag, psi), STATUS_OK


@njit(cache=True, parallel=True)
def ensemble_chunk_eigen(sec_ptr, v, vinv, v_off, lam,
                         ch_data, ch_indices, ch_indptr, ch_off, n_channels,
                         n_diag, psi0,
                         t_end, jump_tol, max_jumps,
                         master_seed, traj_start, n_traj,
                         jt, jc, jn, nj, residual, status):
    for i in prange(n_traj):
        res = traj_eigen(sec_ptr, v, vinv, v_off, lam,
                         ch_data, ch_indices, ch_indptr, ch_off, n_channels,
                         n_diag, psi0,
                         t_end, jump_tol, max_jumps,
                         master_seed, traj_start + i,
                         jt[i], jc[i], jn[i])
        nj[i] = res[0]
        residual[i] = res[1]
        status[i] = res[2]


# ---------------------------------------------------------------------------
# rk4 backend: fixed-step marching with bisected jump refinement
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _rk4_psi_step(hd, hi, hp, psi_in, dt, out, k1, k2, k3, k4, tmp):
    """One RK4 step of dpsi/dt = A psi (A = -i H_eff, pre-scaled in hd)."""
    n = psi_in.size
    half = 0.5 * dt
    sixth = dt / 6.0
    csr_matvec(hd, hi, hp, psi_in, k1)
    for i in range(n):
        tmp[i] = psi_in[i] + half * k1[i]
    csr_matvec(hd, hi, hp, tmp, k2)
    for i in range(n):
        tmp[i] = psi_in[i] + half * k2[i]
    csr_matvec(hd, hi, hp, tmp, k3)
    for i in range(n):
        tmp[i] = psi_in[i] + dt * k3[i]
    csr_matvec(hd, hi, hp, tmp, k4)
    n2 = 0.0
    for i in range(n):
        val = psi_in[i] + sixth * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])
        out[i] = val
        n2 += val.real * val.real + val.imag * val.imag
    return n2


@njit(cache=True)
def traj_rk4(hd, hi_idx, hp, ch_data, ch_indices, ch_indptr, ch_off, n_channels,
             n_diag, psi0,
             t_end, dt_max, jump_tol, norm_floor, max_jumps,
             master_seed, traj_index,
             jt_out, jc_out, jn_out):
    """One trajectory with fixed-step RK4 marching.

    The norm must not grow on any accepted step; at a threshold crossing
    the jump time is refined by bisection (at most 60 iterations) using
    single RK4 steps from the pre-crossing state.
    """
    d = psi0.size
    psi = psi0.copy()
    trial = np.empty(d, np.complex128)
    k1 = np.empty(d, np.complex128)
    k2 = np.empty(d, np.complex128)
    k3 = np.empty(d, np.complex128)
    k4 = np.empty(d, np.complex128)
    tmp = np.empty(d, np.complex128)
    scratch = np.empty(d, np.complex128)
    fluxes = np.empty(n_channels, np.float64)

    state = seed_stream(master_seed, traj_index)
    r = uniform_open(state)
    t = 0.0
    n2 = 1.0
    nj = 0

    while t < t_end:
        dt = dt_max
        if t + dt > t_end:
            dt = t_end - t
        n2_new = _rk4_psi_step(hd, hi_idx, hp, psi, dt, trial, k1, k2, k3, k4, tmp)
        if not math.isfinite(n2_new):
            return nj, 0.0, STATUS_NONFINITE
        if n2_new > n2 * (1.0 + 1e-10):
            return nj, 0.0, STATUS_NORM_GREW
        if n2_new > r:
            for i in range(d):
                psi[i] = trial[i]
            n2 = n2_new
            t += dt
            if n2 < norm_floor:
                return nj, 0.0, STATUS_UNDERFLOW
            continue

        # crossing inside this step: bisect theta in (0, dt]
        lo = 0.0
        hi_t = dt
        theta = dt
        n2x = n2_new
        for _ in range(60):
            if abs(n2x - r) <= jump_tol * r:
                break
            if hi_t - lo <= 4.0 * 2.220446049250313e-16 * max(hi_t, 1e-300):
                break
            theta = 0.5 * (lo + hi_t)
            n2x = _rk4_psi_step(hd, hi_idx, hp, psi, theta, trial, k1, k2, k3, k4, tmp)
            if not math.isfinite(n2x):
                return nj, 0.0, STATUS_NONFINITE
            if n2x > r:
                lo = theta
            else:
                hi_t = theta
        # trial holds psi(theta) from the last evaluation
        t = t + theta
        for i in range(d):
            psi[i] = trial[i]

        pick = _select_channel(state, n_channels, ch_data, ch_indices, ch_indptr,
                               ch_off, psi, scratch, fluxes)
        if pick < 0:
            return nj, 0.0, STATUS_ZERO_FLUX
        if nj >= max_jumps:
            return nj, 0.0, STATUS_JUMP_OVERFLOW
        jt_out[nj] = t
        jc_out[nj] = pick
        jn_out[nj] = n2x
        nj += 1

        cn2 = _channel_matvec(pick, ch_data, ch_indices, ch_indptr, ch_off,
                              psi, scratch)
        inv = 1.0 / math.sqrt(cn2)
        for i in range(d):
            psi[i] = scratch[i] * inv
        n2 = 1.0
        r = uniform_open(state)

    if not _finite(psi):
        return nj, 0.0, STATUS_NONFINITE
    return nj, _residual_excitation(n_diag, psi), STATUS_OK


@njit(cache=True, parallel=True)
def ensemble_chunk_rk4(hd, hi_idx, hp, ch_data, ch_indices, ch_indptr, ch_off,
                       n_channels, n_diag, psi0,
                       t_end, dt_max, jump_tol, norm_floor, max_jumps,
                       master_seed, traj_start, n_traj,
                       jt, jc, jn, nj, residual, status):
    for i in prange(n_traj):
        res = traj_rk4(hd, hi_idx, hp, ch_data, ch_indices, ch_indptr, ch_off,
                       n_channels, n_diag, psi0,
                       t_end, dt_max, jump_tol, norm_floor, max_jumps,
                       master_seed, traj_start + i,
                       jt[i], jc[i], jn[i])
        nj[i] = res[0]
        residual[i] = res[1]
        status[i] = res[2]
