"""Shared parameter sets for the test suite.

`benchmark_params` is the operating point used throughout the result
figures (GHz-scale couplings, weak source leak).  `mild_params` is a
deliberately tame point where every rate sits within a factor of a few
of the source decay, so density-matrix propagation stays cheap and
trajectory counts in the hundreds already resolve the branching ratios.
"""

from photonsub.model import InputSpec, SystemParams, ghz


def benchmark_params(**overrides) -> SystemParams:
    base = dict(
        g_a=ghz(10.0), g_b=ghz(10.0),
        kappa_a=ghz(20.0), kappa_b=ghz(20.0),
        kappa_s=ghz(0.05), gamma=ghz(0.25),
        delta=ghz(25.0),
        input_spec=InputSpec.fock(1),
    )
    base.update(overrides)
    return SystemParams.resonant(**base)


def mild_params(**overrides) -> SystemParams:
    base = dict(
        g_a=ghz(0.04), g_b=ghz(0.04),
        kappa_a=ghz(0.03), kappa_b=ghz(0.03),
        kappa_s=ghz(0.05), gamma=ghz(0.005),
        delta=ghz(0.0),
        input_spec=InputSpec.fock(1),
    )
    base.update(overrides)
    return SystemParams.resonant(**base)


def horizon(params: SystemParams, lifetimes: float = 10.0) -> float:
    return lifetimes / params.kappa_s
