"""Counting statistics of the two output modes.

The subtracted photon in mode b should look like a Fock state:
pulse-integrated g2(0) well below 1. Mode a keeps the remainder of the
coherent pulse; removing one photon from a weak pulse leaves mostly
vacuum plus a two-photon tail, which shows up as strong bunching that
relaxes back to Poissonian as nbar grows.
"""
import numpy as np

from photonsub import (InputSpec, SystemParams, build_model, g2_zero, ghz,
                       photon_number_histogram, run_ensemble)

N_TRAJ = {1.0: 2500, 2.0: 2000}


def make_record(nbar):
    params = SystemParams.resonant(
        g_a=ghz(10.0), g_b=ghz(10.0), kappa_a=ghz(20.0), kappa_b=ghz(20.0),
        kappa_s=ghz(0.05), gamma=ghz(0.25), delta=ghz(25.0),
        input_spec=InputSpec.coherent(nbar))
    return run_ensemble(build_model(params), N_TRAJ[nbar],
                        master_seed=int(50 * nbar))


for nbar in sorted(N_TRAJ):
    record = make_record(nbar)
    ga, ea = g2_zero(record, "OutA")
    gb, eb = g2_zero(record, "OutB")
    print(f"nbar_in = {nbar:g}")
    print(f"  g2(0) OutA = {ga:.3f} +- {ea:.3f}   (bunched, > 1)")
    print(f"  g2(0) OutB = {gb:.3f} +- {eb:.3f}   (single-photon-like, << 1)")

    # photon-number histograms, truncated to the first five entries
    for channel in ("OutA", "OutB"):
        hist = photon_number_histogram(record, channel)[:5]
        bar = " ".join(f"{p:.3f}" for p in np.pad(hist, (0, 5 - len(hist))))
        print(f"  P(n) {channel}: {bar}")
    print()

print("the g2(0) errors come from a seeded bootstrap over trajectories,")
print("so rerunning this script reproduces the numbers exactly.")
