"""Composite Hilbert-space layouts and sparse operator/state algebra.

The simulator works on a tensor product of truncated bosonic Fock spaces
and one four-level emitter.  Basis states are enumerated row-major over
the factors in construction order, so for a cascade layout
(source, mode-a, mode-b, QD) the flat index of |n_s, n_a, n_b; level q> is

    ((n_s * N_a + n_a) * N_b + n_b) * N_q + (q - 1)

with emitter levels counted 1..4.  Operators are stored as exact CSR
matrices (no drop tolerance); states are dense complex vectors with a
cached squared norm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, LayoutError, TruncationError

__all__ = [
    "SpaceLayout",
    "Operator",
    "StateVector",
    "annihilation_op",
    "transition_op",
    "identity_op",
    "embed",
    "dagger",
    "add",
    "scale",
    "compose",
    "apply",
    "fock_state",
    "coherent_state_factor",
    "coherent_truncation_dim",
]


# ---------------------------------------------------------------------------
# layouts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpaceLayout:
    """Ordered tensor-product factorization of the simulation space.

    Parameters
    ----------
    factor_dims : tuple of int
        Dimension of each tensor factor, most significant first.  A
        degenerate dimension of 1 marks a disabled subsystem.
    """

    factor_dims: tuple[int, ...]

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.factor_dims)
        if len(dims) == 0:
            raise DimensionError("layout needs at least one factor")
        if any(d < 1 for d in dims):
            raise DimensionError(f"factor dims must be >= 1, got {dims}")
        object.__setattr__(self, "factor_dims", dims)

    @classmethod
    def cascade(cls, n_source: int, n_mode_a: int, n_mode_b: int,
                qd_dim: int = 4) -> "SpaceLayout":
        """Standard four-factor layout (source, mode-a, mode-b, emitter).

        The emitter factor must have dimension 4, or 1 when the dot is
        removed from the model.
        """
        if qd_dim not in (1, 4):
            raise DimensionError(f"emitter factor must be 4 (or 1 if disabled), got {qd_dim}")
        return cls((n_source, n_mode_a, n_mode_b, qd_dim))

    @property
    def total_dim(self) -> int:
        return math.prod(self.factor_dims)

    @property
    def n_factors(self) -> int:
        return len(self.factor_dims)

    def index_of(self, occupations: Sequence[int]) -> int:
        """Flat basis index of a product state, one occupation per factor."""
        if len(occupations) != self.n_factors:
            raise DimensionError(
                f"expected {self.n_factors} occupations, got {len(occupations)}")
        idx = 0
        for occ, dim in zip(occupations, self.factor_dims):
            if not 0 <= occ < dim:
                raise TruncationError(
                    f"occupation {occ} outside factor of dimension {dim}")
            idx = idx * dim + occ
        return idx

    def occupations_of(self, index: int) -> tuple[int, ...]:
        """Inverse of :meth:`index_of`."""
        if not 0 <= index < self.total_dim:
            raise DimensionError(f"index {index} outside total_dim {self.total_dim}")
        occs = []
        for dim in reversed(self.factor_dims):
            occs.append(index % dim)
            index //= dim
        return tuple(reversed(occs))


def _check_same_layout(a: "Operator | StateVector", b: "Operator | StateVector") -> None:
    if a.layout != b.layout:
        raise LayoutError(f"layout mismatch: {a.layout.factor_dims} vs {b.layout.factor_dims}")


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Operator:
    """Sparse linear operator tied to a :class:`SpaceLayout`.

    Wraps a CSR matrix with exact arithmetic (explicit zeros are pruned,
    nothing else is dropped).  Instances are immutable and safe to share
    between workers.
    """

    layout: SpaceLayout
    matrix: sp.csr_matrix

    def __post_init__(self) -> None:
        m = sp.csr_matrix(self.matrix, dtype=np.complex128, copy=False)
        if m.shape != (self.layout.total_dim, self.layout.total_dim):
            raise LayoutError(
                f"matrix shape {m.shape} does not match total_dim {self.layout.total_dim}")
        m.eliminate_zeros()
        m.sort_indices()
        object.__setattr__(self, "matrix", m)

    @property
    def nnz(self) -> int:
        return int(self.matrix.nnz)

    def entries(self) -> dict[tuple[int, int], complex]:
        """Sparse map (row, col) -> amplitude; intended for small operators."""
        coo = self.matrix.tocoo()
        return {(int(r), int(c)): complex(v)
                for r, c, v in zip(coo.row, coo.col, coo.data)}

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def dag(self) -> "Operator":
        return Operator(self.layout, self.matrix.conjugate().transpose().tocsr())

    def __add__(self, other: "Operator") -> "Operator":
        _check_same_layout(self, other)
        return Operator(self.layout, self.matrix + other.matrix)

    def __sub__(self, other: "Operator") -> "Operator":
        _check_same_layout(self, other)
        return Operator(self.layout, self.matrix - other.matrix)

    def __mul__(self, c: complex) -> "Operator":
        return Operator(self.layout, self.matrix * complex(c))

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return self * (-1.0)

    def __matmul__(self, other: "Operator") -> "Operator":
        _check_same_layout(self, other)
        return Operator(self.layout, (self.matrix @ other.matrix).tocsr())

    def apply(self, psi: "StateVector") -> "StateVector":
        _check_same_layout(self, psi)
        amps = self.matrix @ psi.amplitudes
        return StateVector(self.layout, amps)


def annihilation_op(dim: int) -> Operator:
    """Lowering operator on a single Fock factor, <n-1|a|n> = sqrt(n)."""
    if dim < 2:
        raise DimensionError(f"annihilation operator needs dim >= 2, got {dim}")
    data = np.sqrt(np.arange(1, dim, dtype=np.float64))
    m = sp.diags(data, offsets=1, shape=(dim, dim), format="csr", dtype=np.complex128)
    return Operator(SpaceLayout((dim,)), m)


def transition_op(i: int, j: int) -> Operator:
    """Emitter projection |i><j| on the four-level factor, i, j in 1..4."""
    if i not in (1, 2, 3, 4) or j not in (1, 2, 3, 4):
        raise DimensionError(f"emitter levels must lie in 1..4, got ({i}, {j})")
    m = sp.csr_matrix(([1.0 + 0.0j], ([i - 1], [j - 1])), shape=(4, 4))
    return Operator(SpaceLayout((4,)), m)


def identity_op(layout: SpaceLayout) -> Operator:
    return Operator(layout, sp.identity(layout.total_dim, dtype=np.complex128, format="csr"))


def embed(op: Operator, slot: int, layout: SpaceLayout) -> Operator:
    """Embed a single-factor operator at the given slot, identities elsewhere."""
    if not 0 <= slot < layout.n_factors:
        raise LayoutError(f"slot {slot} outside layout with {layout.n_factors} factors")
    if op.layout.total_dim != layout.factor_dims[slot]:
        raise LayoutError(
            f"operator dim {op.layout.total_dim} does not match factor dim "
            f"{layout.factor_dims[slot]} at slot {slot}")
    left = math.prod(layout.factor_dims[:slot])
    right = math.prod(layout.factor_dims[slot + 1:])
    m = op.matrix
    if left > 1:
        m = sp.kron(sp.identity(left, dtype=np.complex128), m, format="csr")
    if right > 1:
        m = sp.kron(m, sp.identity(right, dtype=np.complex128), format="csr")
    return Operator(layout, sp.csr_matrix(m))


# functional aliases over the method forms, so call sites can stay terse
def dagger(op: Operator) -> Operator:
    return op.dag()


def add(a: Operator, b: Operator) -> Operator:
    return a + b


def scale(c: complex, op: Operator) -> Operator:
    return op * c


def compose(a: Operator, b: Operator) -> Operator:
    return a @ b


def apply(op: Operator, psi: "StateVector") -> "StateVector":
    return op.apply(psi)


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class StateVector:
    """Dense complex state with a cached squared norm.

    The cache is recomputed on construction, so any operation that builds
    a new StateVector (including :func:`apply`) leaves it valid.
    """

    layout: SpaceLayout
    amplitudes: np.ndarray
    squared_norm: float = field(default=-1.0)

    def __post_init__(self) -> None:
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.layout.total_dim,):
            raise LayoutError(
                f"amplitude vector of shape {amps.shape} does not match "
                f"total_dim {self.layout.total_dim}")
        self.amplitudes = amps
        if self.squared_norm < 0.0:
            self.squared_norm = float(np.vdot(amps, amps).real)

    @property
    def norm(self) -> float:
        return math.sqrt(self.squared_norm)

    def renormalized(self) -> "StateVector":
        n = self.norm
        if n == 0.0:
            raise DimensionError("cannot renormalize the zero vector")
        return StateVector(self.layout, self.amplitudes / n, 1.0)

    def expectation(self, op: Operator) -> complex:
        """Raw sandwich <psi|A|psi> (no normalization applied)."""
        _check_same_layout(op, self)
        return complex(np.vdot(self.amplitudes, op.matrix @ self.amplitudes))

    def overlap(self, other: "StateVector") -> complex:
        _check_same_layout(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.layout, self.amplitudes.copy(), self.squared_norm)


def fock_state(layout: SpaceLayout, occupations: Sequence[int], qd_level: int = 1) -> StateVector:
    """Product Fock state over the bosonic factors with the emitter at qd_level.

    `occupations` covers every factor except the last (emitter) one.
    """
    if len(occupations) != layout.n_factors - 1:
        raise DimensionError(
            f"expected {layout.n_factors - 1} mode occupations, got {len(occupations)}")
    qd_dim = layout.factor_dims[-1]
    if qd_dim == 1:
        if qd_level != 1:
            raise DimensionError("emitter disabled in this layout; qd_level must be 1")
        qd_idx = 0
    else:
        if qd_level not in (1, 2, 3, 4):
            raise DimensionError(f"qd_level must lie in 1..4, got {qd_level}")
        qd_idx = qd_level - 1
    amps = np.zeros(layout.total_dim, dtype=np.complex128)
    amps[layout.index_of((*occupations, qd_idx))] = 1.0
    return StateVector(layout, amps, 1.0)


def coherent_truncation_dim(nbar: float) -> int:
    """Fock-space dimension large enough to hold a coherent state of mean nbar."""
    if nbar < 0.0:
        raise DimensionError(f"mean photon number must be >= 0, got {nbar}")
    return int(math.ceil(nbar + 6.0 * math.sqrt(nbar) + 6.0))


def coherent_state_factor(dim: int, alpha: complex, tail_tol: float = 1e-9) -> np.ndarray:
    """Truncated coherent-state amplitudes c_n ∝ alpha^n / sqrt(n!), unit norm.

    Raises a truncation error if the discarded Poisson tail mass is not
    below `tail_tol`.
    """
    if dim < 1:
        raise DimensionError(f"coherent factor needs dim >= 1, got {dim}")
    alpha = complex(alpha)
    nbar = abs(alpha) ** 2
    # exact Poisson survival mass beyond the kept levels
    from scipy.stats import poisson
    tail = float(poisson.sf(dim - 1, nbar)) if nbar > 0.0 else 0.0
    if tail >= tail_tol:
        raise TruncationError(
            f"coherent tail mass {tail:.3e} at dim {dim} exceeds tolerance {tail_tol:.1e}")
    amps = np.empty(dim, dtype=np.complex128)
    amps[0] = 1.0
    for n in range(1, dim):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    amps *= math.exp(-0.5 * nbar)
    amps /= np.linalg.norm(amps)
    return amps
