"""Oracle-equivalence checks run by ``tunneltime validate``."""
from __future__ import annotations

import math

import numpy as np

from .evolution import incident_spectrum, temporal_profile
from .presence_time import free_presence_time, time_domain_presence_time
from .scattering import (
    LayeredStack,
    RectangularBarrier,
    cos_bloch_phase,
    point_times,
    quasimomentum,
    rect_barrier_log_amplitude,
    stack_amplitude,
    transfer_matrix_amplitude,
)
from .spectral import gaussian_weight


def _rel_err(a, b):
    return float(np.max(np.abs(a - b) / np.abs(b)))


def barrier_oracle(n=1000, seed=0, barrier=RectangularBarrier(5.0, 20.0)):
    E = np.random.default_rng(seed).uniform(1e-3, barrier.height - 1e-3, n)
    log_mod, phase = rect_barrier_log_amplitude(E, barrier)
    ref = transfer_matrix_amplitude(E, barrier)
    # compare in log form: |t| spans many decades
    return float(np.max(np.abs(log_mod + 1j * phase - np.log(ref))))


def stack_oracle(n=1000, seed=1, stack=LayeredStack.nineteen_layer()):
    w = np.random.default_rng(seed).uniform(0.05, 8.0, n)
    return _rel_err(stack_amplitude(w, stack), transfer_matrix_amplitude(w, stack))


def hartman_spread(E=3.125, V0=5.0, lengths=np.linspace(15, 25, 11)):
    taus = np.array([point_times(RectangularBarrier(V0, L), E).tau_y[0] for L in lengths])
    return float(np.ptp(taus) / np.mean(taus))


def representation_gap(y, p0=2.5, dp=0.05):
    """Energy- vs time-domain presence time of a free electron packet at ``y``."""
    w = gaussian_weight(p0, dp)
    energy_side = free_presence_time(w, y).tau
    spec = incident_spectrum(w)
    _, (e_lo, e_hi) = spec.band()
    dt = 0.5 * math.pi / (e_hi - e_lo)
    half = 20.0 / (w.energy_width) + 0.02 * y
    t = np.arange(energy_side - half, energy_side + half, dt)
    mean, _ = time_domain_presence_time(t, temporal_profile(spec, y, t), spec.temporal_norm())
    return abs(mean - energy_side) / energy_side


def run_checks(tol=1e-10):
    stack = LayeredStack.nineteen_layer()
    k0 = 3.927
    out = []
    err = barrier_oracle()
    out.append(("barrier amplitude vs transfer matrix", err < tol, f"max log error {err:.2e}"))
    err = stack_oracle()
    out.append(("stack amplitude vs transfer matrix", err < tol, f"max relative error {err:.2e}"))
    # k1 d1 = k2 d2 = 3 pi / 2 exactly at omega = 5 pi / 4
    x = float(cos_bloch_phase(5 * math.pi / 4, stack))
    ba = complex(quasimomentum(5 * math.pi / 4, stack)) * stack.period
    out.append(("cos(beta a) = -1.25 at the quarter-wave point", abs(x + 1.25) < tol, f"{x:.12f}"))
    out.append(("Im(beta a) = ln 2", abs(ba.imag - math.log(2)) < tol, f"{ba.imag:.12f}"))
    out.append(("k0 = 3.927 lies in the gap", abs(float(cos_bloch_phase(k0, stack))) > 1, ""))
    spread = hartman_spread()
    out.append(("Hartman saturation over L in [15, 25]", spread < 0.01, f"relative spread {spread:.2e}"))
    gap = max(representation_gap(y) for y in (25.0, 50.0, 100.0))
    out.append(("energy vs time-domain presence time", gap < 1e-4, f"max relative gap {gap:.2e}"))
    return out
