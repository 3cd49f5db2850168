"""Cascaded source-cavity / charged-QD / bimodal-cavity model builder.

A weak source cavity (decay kappa_s) feeds its output unidirectionally
into mode a of a bimodal photonic-crystal cavity that hosts a single
charged quantum dot.  The dot is a double-Lambda system: ground spins
|1> = |up>, |2> = |down> split by delta, trion states |3>, |4>.  Mode a
couples the pairs 1<->3 and 2<->4, mode b couples 2<->3 and 1<->4, both
with strength g.  All frequencies live in a frame co-rotating with the
input carrier, so on resonance

    omega_s = omega_a = omega_13 = 0,
    omega_b = omega_14 = -delta,
    omega_12 = +delta.

The effective Hamiltonian is non-Hermitian: each decay channel k with
collapse operator C_k contributes -(i/2) C_k^dag C_k, and the cascade
adds the one-way coupling -i sqrt(kappa_a kappa_s) a^dag a_s.  Monitored
channels are the combined a-polarized output C_1 = sqrt(kappa_s) a_s +
sqrt(kappa_a) a (OutA), the b-polarized output C_2 = sqrt(kappa_b) b
(OutB), and spontaneous emission from the trions at rate gamma.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.constants import hbar, physical_constants

from .errors import ConfigError, LayoutError
from .hilbert import (
    Operator,
    SpaceLayout,
    StateVector,
    annihilation_op,
    coherent_state_factor,
    coherent_truncation_dim,
    embed,
    transition_op,
)

__all__ = [
    "GHZ",
    "MHZ",
    "ghz",
    "InputSpec",
    "SystemParams",
    "ModelOperators",
    "zeeman_splitting",
    "resonant_preset",
    "default_layout",
    "default_dt_max",
    "build_model",
    "initial_state",
    "params_digest",
    "SPONT_VARIANTS",
]

GHZ = 2.0 * math.pi * 1.0e9   # angular rad/s per GHz of ordinary frequency
MHZ = 2.0 * math.pi * 1.0e6

SPONT_VARIANTS = ("literal_projector", "radiative_lowering")

# default Fock truncation of the target cavity modes for coherent drive;
# intracavity occupation stays far below this because photons stream through
COHERENT_TARGET_DIM = 5


def ghz(x: float) -> float:
    """Ordinary frequency in GHz -> angular frequency in rad/s."""
    return GHZ * x


def zeeman_splitting(g_factor: float, B: float) -> float:
    """Zeeman splitting mu_B * g_factor * B as an angular frequency (rad/s)."""
    if B < 0.0:
        raise ConfigError(f"magnetic field must be >= 0, got {B}")
    mu_b = physical_constants["Bohr magneton"][0]
    return mu_b * g_factor * B / hbar


def resonant_preset(delta: float) -> dict[str, float]:
    """Rotating-frame frequency assignment for the on-resonance condition."""
    if delta < 0.0:
        raise ConfigError(f"delta must be >= 0, got {delta}")
    return {
        "omega_s": 0.0,
        "omega_a": 0.0,
        "omega_13": 0.0,
        "omega_b": -delta,
        "omega_14": -delta,
        "omega_12": +delta,
    }


@dataclass(frozen=True)
class InputSpec:
    """Input pulse prepared inside the source cavity at t=0."""

    kind: str          # "fock" or "coherent"
    value: float       # photon number n, or mean photon number nbar

    def __post_init__(self) -> None:
        if self.kind not in ("fock", "coherent"):
            raise ConfigError(f"unknown input kind {self.kind!r}")
        if self.value < 0.0:
            raise ConfigError(f"photon number must be >= 0, got {self.value}")
        if self.kind == "fock" and self.value != int(self.value):
            raise ConfigError(f"fock input needs an integer count, got {self.value}")

    @classmethod
    def fock(cls, n: int) -> "InputSpec":
        return cls("fock", int(n))

    @classmethod
    def coherent(cls, nbar: float) -> "InputSpec":
        return cls("coherent", float(nbar))

    @property
    def n(self) -> int:
        if self.kind != "fock":
            raise ConfigError("n is only defined for fock inputs")
        return int(self.value)

    @property
    def nbar(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class SystemParams:
    """Physical rates and rotating-frame frequencies, all in rad/s."""

    g_a: float
    g_b: float
    kappa_a: float
    kappa_b: float
    kappa_s: float
    gamma: float
    omega_s: float = 0.0
    omega_a: float = 0.0
    omega_b: float = 0.0
    omega_12: float = 0.0
    omega_13: float = 0.0
    omega_14: float = 0.0
    delta: float = 0.0
    spont_variant: str = "literal_projector"
    input_spec: InputSpec = field(default_factory=lambda: InputSpec.fock(1))
    qd_initial_level: int = 1
    qd_present: bool = True

    def __post_init__(self) -> None:
        if self.spont_variant not in SPONT_VARIANTS:
            raise ConfigError(f"spont_variant must be one of {SPONT_VARIANTS}, "
                              f"got {self.spont_variant!r}")
        if self.qd_initial_level not in (1, 2, 3, 4):
            raise ConfigError(f"qd_initial_level must lie in 1..4, got {self.qd_initial_level}")
        for name in ("g_a", "g_b", "kappa_a", "kappa_b", "kappa_s", "gamma", "delta"):
            if getattr(self, name) < 0.0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.qd_present and (self.kappa_a <= 0.0 or self.kappa_b <= 0.0):
            raise ConfigError("kappa_a and kappa_b must be > 0 with the dot present")
        if self.kappa_s <= 0.0:
            raise ConfigError("kappa_s must be > 0 (the source feeds the cascade)")

    @classmethod
    def resonant(cls, *, g_a: float, g_b: float, kappa_a: float, kappa_b: float,
                 kappa_s: float, gamma: float, delta: float, **kw) -> "SystemParams":
        """Build params with the on-resonance frequency assignment."""
        return cls(g_a=g_a, g_b=g_b, kappa_a=kappa_a, kappa_b=kappa_b,
                   kappa_s=kappa_s, gamma=gamma, delta=delta,
                   **resonant_preset(delta), **kw)

    @property
    def on_resonance(self) -> bool:
        want = resonant_preset(self.delta)
        return all(getattr(self, k) == v for k, v in want.items())

    def with_input(self, input_spec: InputSpec) -> "SystemParams":
        return replace(self, input_spec=input_spec)


def default_layout(params: SystemParams, target_dim: int | None = None) -> SpaceLayout:
    """Truncation defaults for the given input.

    Fock |n> closes within the n-excitation sectors, so every factor gets
    dimension n+1.  Coherent drive sizes the source by the tail rule and
    keeps the target modes small; photons stream through the target cavity
    so its occupation stays well below the source's.  Callers can widen
    `target_dim` to run the truncation convergence check.
    """
    spec = params.input_spec
    qd_dim = 4 if params.qd_present else 1
    if spec.kind == "fock":
        n_src = spec.n + 1
        n_tgt = target_dim if target_dim is not None else spec.n + 1
    else:
        n_src = coherent_truncation_dim(spec.nbar)
        n_tgt = target_dim if target_dim is not None else min(COHERENT_TARGET_DIM, n_src)
    n_b = n_tgt if params.qd_present else 1   # mode b only fills via the dot
    return SpaceLayout.cascade(n_src, n_tgt, n_b, qd_dim)


@dataclass(frozen=True, eq=False)
class ModelOperators:
    """Immutable operator bundle consumed by the trajectory and oracle engines."""

    layout: SpaceLayout
    params: SystemParams
    h_eff: Operator
    h_herm: Operator
    collapse_ops: tuple[Operator, ...]
    channel_labels: tuple[str, ...]
    number_op: Operator
    initial_state: StateVector

    @property
    def damping_op(self) -> Operator:
        """Sum_k C_k^dag C_k (twice the anti-Hermitian defect of h_eff)."""
        total = self.collapse_ops[0].dag() @ self.collapse_ops[0]
        for c in self.collapse_ops[1:]:
            total = total + c.dag() @ c
        return total

    def cavity_channel_indices(self) -> tuple[int, ...]:
        return tuple(i for i, lab in enumerate(self.channel_labels)
                     if lab in ("OutA", "OutB"))


def lowering_channel_labels(model: ModelOperators) -> tuple[str, ...]:
    """Labels of collapse channels that consume one excitation quantum.

    A channel C lowers the counter when [N, C] = -C.  Projector-style
    monitors commute with N instead: they record a detection event while
    leaving the excitation in place.
    """
    n = model.number_op.matrix
    out = []
    for lab, op in zip(model.channel_labels, model.collapse_ops):
        c = op.matrix
        scale = float(np.max(np.abs(c.data))) if c.nnz else 0.0
        if scale == 0.0:
            continue
        defect = n @ c - c @ n + c
        if defect.nnz == 0 or float(np.max(np.abs(defect.data))) <= 1e-10 * scale:
            out.append(lab)
    return tuple(out)


def _mode_ops(layout: SpaceLayout) -> dict[str, Operator | None]:
    """Embedded annihilation operators for every non-degenerate mode factor."""
    names = ("a_s", "a", "b")
    out: dict[str, Operator | None] = {}
    for slot, name in enumerate(names):
        dim = layout.factor_dims[slot]
        out[name] = embed(annihilation_op(dim), slot, layout) if dim >= 2 else None
    return out


def _qd_ops(layout: SpaceLayout) -> dict[tuple[int, int], Operator]:
    """Embedded emitter projections sigma_ij = |i><j| (requires the dot)."""
    sig = {}
    for i in range(1, 5):
        for j in range(1, 5):
            sig[(i, j)] = embed(transition_op(i, j), 3, layout)
    return sig


def build_model(params: SystemParams, layout: SpaceLayout | None = None) -> ModelOperators:
    """Assemble h_eff, the collapse channels, the excitation counter, and
    the initial state on the given (or default) layout."""
    if layout is None:
        layout = default_layout(params)
    if len(layout.factor_dims) != 4:
        raise LayoutError("model needs a four-factor layout (source, mode-a, mode-b, QD)")
    qd_dim = layout.factor_dims[3]
    if params.qd_present and qd_dim != 4:
        raise LayoutError("qd_present requires an emitter factor of dimension 4")
    if not params.qd_present and qd_dim != 1:
        raise LayoutError("qd_present=false requires a degenerate emitter factor")

    p = params
    modes = _mode_ops(layout)
    a_s, a, b = modes["a_s"], modes["a"], modes["b"]
    zero = Operator(layout, np.zeros((layout.total_dim, layout.total_dim)))

    h = zero
    if a_s is not None:
        h = h + (p.omega_s - 0.5j * p.kappa_s) * (a_s.dag() @ a_s)
    if a is not None:
        h = h + (p.omega_a - 0.5j * p.kappa_a) * (a.dag() @ a)
    if b is not None:
        h = h + (p.omega_b - 0.5j * p.kappa_b) * (b.dag() @ b)
    if a_s is not None and a is not None:
        # one-way cascade: the source drives mode a, never the reverse
        h = h + (-1.0j * math.sqrt(p.kappa_a * p.kappa_s)) * (a.dag() @ a_s)

    if p.qd_present:
        sig = _qd_ops(layout)
        if a is not None:
            h = h + p.g_a * (a @ sig[(3, 1)] + a.dag() @ sig[(1, 3)])
            h = h + p.g_a * (a @ sig[(4, 2)] + a.dag() @ sig[(2, 4)])
        if b is not None:
            h = h + p.g_b * (b @ sig[(3, 2)] + b.dag() @ sig[(2, 3)])
            h = h + p.g_b * (b @ sig[(4, 1)] + b.dag() @ sig[(1, 4)])
        h = h + (p.omega_13 - 0.5j * p.gamma) * sig[(3, 3)]
        h = h + (p.omega_14 - 0.5j * p.gamma) * sig[(4, 4)]
        h = h + p.omega_12 * sig[(2, 2)]

    collapse: list[Operator] = []
    labels: list[str] = []
    out_a = zero
    if a_s is not None:
        out_a = out_a + math.sqrt(p.kappa_s) * a_s
    if a is not None:
        out_a = out_a + math.sqrt(p.kappa_a) * a
    collapse.append(out_a)
    labels.append("OutA")
    if b is not None:
        collapse.append(math.sqrt(p.kappa_b) * b)
        labels.append("OutB")
    if p.qd_present and p.gamma > 0.0:
        sig = _qd_ops(layout)
        if p.spont_variant == "literal_projector":
            collapse.append(math.sqrt(p.gamma) * sig[(3, 3)])
            labels.append("Spont3")
            collapse.append(math.sqrt(p.gamma) * sig[(4, 4)])
            labels.append("Spont4")
        else:
            root = math.sqrt(0.5 * p.gamma)
            for (i, j), lab in (((1, 3), "Spont31"), ((2, 3), "Spont32"),
                                ((1, 4), "Spont41"), ((2, 4), "Spont42")):
                collapse.append(root * sig[(i, j)])
                labels.append(lab)

    n_total = zero
    for m in (a_s, a, b):
        if m is not None:
            n_total = n_total + m.dag() @ m
    if p.qd_present:
        sig = _qd_ops(layout)
        n_total = n_total + sig[(3, 3)] + sig[(4, 4)]

    # Hermitian part by construction: drop every -(i/2) C^dag C and the
    # cascade term's anti-Hermitian half, i.e. symmetrize exactly.
    h_herm = 0.5 * (h + h.dag())

    psi0 = initial_state(params, layout)
    return ModelOperators(layout=layout, params=params, h_eff=h, h_herm=h_herm,
                          collapse_ops=tuple(collapse), channel_labels=tuple(labels),
                          number_op=n_total, initial_state=psi0)


def initial_state(params: SystemParams, layout: SpaceLayout) -> StateVector:
    """Source loaded per input_spec, target modes in vacuum, dot at its
    initial level (|up> by default)."""
    dims = layout.factor_dims
    spec = params.input_spec
    if spec.kind == "fock":
        src = np.zeros(dims[0], dtype=np.complex128)
        if spec.n >= dims[0]:
            raise LayoutError(f"fock({spec.n}) does not fit a source factor of dim {dims[0]}")
        src[spec.n] = 1.0
    else:
        src = coherent_state_factor(dims[0], math.sqrt(spec.nbar))
    vac_a = np.zeros(dims[1], dtype=np.complex128)
    vac_a[0] = 1.0
    vac_b = np.zeros(dims[2], dtype=np.complex128)
    vac_b[0] = 1.0
    qd = np.zeros(dims[3], dtype=np.complex128)
    if dims[3] == 1:
        qd[0] = 1.0
    else:
        qd[params.qd_initial_level - 1] = 1.0
    amps = np.kron(np.kron(np.kron(src, vac_a), vac_b), qd)
    return StateVector(layout, amps)


def default_dt_max(params: SystemParams) -> float:
    """Fixed-step budget resolving the fastest decay, coupling, and detuning."""
    kappa_max = max(params.kappa_a, params.kappa_b, params.kappa_s)
    candidates = [0.01 / kappa_max]
    g_max = max(params.g_a, params.g_b) if params.qd_present else 0.0
    if g_max > 0.0:
        candidates.append(0.01 / g_max)
    omega_max = max(abs(getattr(params, k)) for k in
                    ("omega_s", "omega_a", "omega_b", "omega_12", "omega_13", "omega_14"))
    if omega_max > 0.0:
        candidates.append(0.05 / omega_max)
    return min(candidates)


def params_digest(params: SystemParams, layout: SpaceLayout,
                  extra: dict | None = None) -> str:
    """Stable SHA-256 fingerprint of the physical setup, for result tables."""
    doc = {
        "rates": {k: getattr(params, k) for k in
                  ("g_a", "g_b", "kappa_a", "kappa_b", "kappa_s", "gamma",
                   "omega_s", "omega_a", "omega_b", "omega_12", "omega_13",
                   "omega_14", "delta")},
        "spont_variant": params.spont_variant,
        "input": [params.input_spec.kind, params.input_spec.value],
        "qd_initial_level": params.qd_initial_level,
        "qd_present": params.qd_present,
        "layout": list(layout.factor_dims),
    }
    if extra:
        doc["extra"] = extra
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()
