"""Presence-time expectation values in the energy representation.

The time operator acts as ``-i hbar d/dE`` on the energy amplitude of a
wavepacket.  For a packet ``Phi(E) = A(E) exp(i phi(E))`` with real ``A`` its
expectation value is ``<hbar phi'> - i <hbar A'/A>``; the real part is the
presence time and the imaginary part must vanish for a Hermitian average.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .scattering import (
    AmplitudeUnderflowError,
    RectangularBarrier,
    ScatteringChannel,
    characteristic_times,
    point_times,
    sample_channel,
)
from .spectral import HBAR, EnergyGrid, SpectralWeight, classical_time, tau_G

METHODS = ("presence-integral", "second-order", "evolution", "momentum-average", "narrow-limit")
LOG_FLOOR = math.log(1e-300)
RADICAND_TOL = 1e-12


@dataclass(frozen=True)
class TimeEstimate:
    method: str
    tau: float
    delta_tau: float | None = None
    imag_residual: float = 0.0
    diagnostics: dict = field(default_factory=dict, compare=False)
    fingerprint: str = ""

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method tag {self.method!r}")
        if self.delta_tau is not None and self.delta_tau < 0:
            raise ValueError("delta_tau must be non-negative")


def fingerprint(*parts) -> str:
    """Short stable hash of the reprs of ``parts``."""
    text = "|".join(_describe(p) for p in parts)
    return hashlib.sha1(text.encode()).hexdigest()[:16]


def _describe(obj):
    if isinstance(obj, SpectralWeight):
        return f"weight({obj.dispersion.kind},{obj.space},{obj.center!r},{obj.width!r},{len(obj.grid)})"
    return repr(obj)


# --------------------------------------------------------------------------
# free propagation


def _free_averages(weight: SpectralWeight, y, y0):
    E = weight.grid.nodes
    w = weight.grid.weights * weight.samples**2
    P = float(np.sum(w))
    if not (P > 0 and math.isfinite(P)):
        raise ValueError("weight is not normalisable on its grid")
    tcl = classical_time(y, E, y0, weight.dispersion)
    tg, dtg = tau_G(weight)
    return w / P, tcl, tg, dtg


def free_presence_time(weight: SpectralWeight, y: float, y0: float = 0.0) -> TimeEstimate:
    """``<T(y)>`` for free propagation from the waist at ``y0``: the mean classical time."""
    p, tcl, tg, _ = _free_averages(weight, y, y0)
    return TimeEstimate(
        "presence-integral",
        float(np.dot(p, tcl)),
        imag_residual=-HBAR * float(np.dot(p, tg)),
        diagnostics={"y": y, "y0": y0},
        fingerprint=fingerprint(weight, y, y0),
    )


def _checked_sqrt(radicand, scale):
    if radicand < -RADICAND_TOL * max(scale, 1.0):
        raise ArithmeticError(f"negative variance {radicand:.3e}; the weight is truncated too sharply")
    return math.sqrt(max(radicand, 0.0))


def free_uncertainty(weight: SpectralWeight, y: float, y0: float = 0.0) -> float:
    """Presence-time spread at ``y``; ``hbar/(sqrt(2) dE)`` for a narrow Gaussian."""
    p, tcl, tg, dtg = _free_averages(weight, y, y0)
    m1 = np.dot(p, tcl)
    radicand = np.dot(p, tcl**2) - HBAR * np.dot(p, dtg) - HBAR**2 * np.dot(p, tg**2) - m1**2
    return _checked_sqrt(float(radicand), float(np.dot(p, tcl**2)))


# --------------------------------------------------------------------------
# transmitted channel


def default_cutoff(weight: SpectralWeight, scatterer) -> float:
    top = weight.support[1]
    if isinstance(scatterer, RectangularBarrier):
        return min(scatterer.height, top)
    return top


def transmission_channel(
    weight: SpectralWeight,
    scatterer,
    e_cut: float | None = None,
    panels: int = 20000,
    levels: int = 30,
) -> ScatteringChannel:
    """Sample ``scatterer`` on a Simpson grid spanning the weight support up to ``e_cut``.

    Barriers are cut at ``V0`` (tunneling channel only).  When the cut falls
    inside the weight support the panels next to it are refined
    geometrically, since ``|t|`` rises steeply there.
    """
    lo, hi = weight.support
    cut = default_cutoff(weight, scatterer) if e_cut is None else float(e_cut)
    if cut <= lo:
        raise ValueError(f"cutoff {cut} lies below the weight support starting at {lo}")
    if cut < hi:
        grid = EnergyGrid.clustered(lo, cut, panels, levels)
    else:
        grid = EnergyGrid.uniform(lo, hi, panels)
        cut = hi
    return sample_channel(scatterer, grid, cutoff=cut)


@dataclass(frozen=True)
class _Transmitted:
    """Normalised transmitted density ``|Phi_III|^2 dE`` on the channel grid."""

    prob: np.ndarray
    log_norm: float
    times: object
    tg: np.ndarray
    dtg: np.ndarray
    log_space: bool


def _transmitted(weight: SpectralWeight, channel: ScatteringChannel, log_space=True, measure=None):
    if channel.weights is None:
        raise ValueError("channel has no quadrature weights; build it with transmission_channel")
    E = channel.energies
    log_g = weight.log_amplitude(E)
    lw = 2.0 * (log_g + channel.log_modulus)
    if measure is not None:
        lw = lw + np.log(measure)
    with np.errstate(divide="ignore"):
        lw = lw + np.log(channel.weights)
    peak = float(np.max(lw))
    if not math.isfinite(peak):
        raise ValueError("weight and channel do not overlap")
    if not log_space and peak < LOG_FLOOR:
        raise AmplitudeUnderflowError(
            f"transmitted norm ~exp({peak:.1f}) underflows; use log_space=True"
        )
    rel = lw - peak
    rel[rel < LOG_FLOOR] = -np.inf
    w = np.exp(rel)
    total = float(np.sum(w))
    times = characteristic_times(channel)
    tg, dtg = tau_G(weight, E)
    return _Transmitted(w / total, peak + math.log(total), times, tg, dtg, peak < LOG_FLOOR)


def tunneling_time(
    weight: SpectralWeight,
    channel: ScatteringChannel,
    *,
    log_space: bool = True,
    method: str = "presence-integral",
) -> TimeEstimate:
    """Mean phase time weighted by the transmitted density ``G^2 |t|^2``."""
    tr = _transmitted(weight, channel, log_space)
    p = tr.prob
    tau = float(np.dot(p, tr.times.tau_y))
    E_mean = float(np.dot(p, channel.energies))
    return TimeEstimate(
        method,
        tau,
        imag_residual=-float(np.dot(p, tr.times.tau_z + tr.tg)),
        diagnostics={
            "log_transmitted_norm": tr.log_norm,
            "mean_energy": E_mean,
            "cutoff": channel.cutoff,
            "log_space": tr.log_space,
        },
        fingerprint=fingerprint(weight, channel.cutoff, channel.energies.size),
    )


def momentum_average_time(weight: SpectralWeight, channel: ScatteringChannel) -> TimeEstimate:
    """Same average as ``tunneling_time`` taken over momentum, ``dp = dE / v``."""
    v = weight.dispersion.velocity(channel.energies)
    tr = _transmitted(weight, channel, True, measure=1.0 / v)
    return TimeEstimate(
        "momentum-average",
        float(np.dot(tr.prob, tr.times.tau_y)),
        diagnostics={"log_transmitted_norm": tr.log_norm},
        fingerprint=fingerprint(weight, channel.cutoff, "momentum"),
    )


def tunneling_uncertainty(weight: SpectralWeight, channel: ScatteringChannel):
    """``(dT(L), total)``: the transmitted presence-time spread and the full uncertainty.

    The total adds the incident packet's spread ``dy/v0`` linearly.
    """
    tr = _transmitted(weight, channel)
    p, ct = tr.prob, tr.times
    a1 = ct.tau_z + tr.tg
    radicand = (
        np.dot(p, ct.tau_y**2)
        - HBAR * np.dot(p, ct.tau_z_tilde + tr.dtg)
        - np.dot(p, a1**2)
        - np.dot(p, ct.tau_y) ** 2
    )
    transmitted = _checked_sqrt(float(radicand), float(np.dot(p, ct.tau_y**2)))
    incident = weight.spatial_width() / weight.group_velocity
    return transmitted, transmitted + incident


def tunneling_time_second_order(E0: float, dE: float, scatterer, step=None) -> TimeEstimate:
    """``tau_y(E0) + tau_z(E0) * d(tau_y)/dE(E0) * dE^2 / hbar^2``."""
    ct = point_times(scatterer, E0, step)
    ty, tz, dty = float(ct.tau_y[0]), float(ct.tau_z[0]), float(ct.tau_y_tilde[0])
    return TimeEstimate(
        "second-order",
        ty + tz * dty * dE**2 / HBAR**2,
        diagnostics={"tau_y": ty, "tau_z": tz, "tau_y_tilde": dty, "dE": dE},
        fingerprint=fingerprint("second-order", E0, dE, scatterer),
    )


def narrow_limit_time(E0: float, scatterer) -> TimeEstimate:
    """Phase time at the carrier energy, the limit of every method as the packet narrows."""
    ct = point_times(scatterer, E0)
    return TimeEstimate(
        "narrow-limit",
        float(ct.tau_y[0]),
        diagnostics={"tau_z": float(ct.tau_z[0])},
        fingerprint=fingerprint("narrow-limit", E0, scatterer),
    )


# --------------------------------------------------------------------------
# time-domain presence time


class CoverageError(ValueError):
    """Temporal samples miss part of the probability passing the detector."""


def time_domain_presence_time(t, density, total=None, coverage=1.0 - 1e-6):
    """First moment and RMS spread of ``density(t)`` at a fixed detector.

    ``total`` is the full time-integrated density if known (e.g. from the
    energy representation); otherwise coverage is judged from the density at
    the ends of the record relative to its peak.
    """
    t = np.asarray(t, dtype=float)
    density = np.asarray(density, dtype=float)
    if t.size < 3 or t.shape != density.shape:
        raise ValueError("need matching 1-D arrays of at least three samples")
    mass = float(np.trapezoid(density, t))
    if not mass > 0:
        raise CoverageError("no probability in the record")
    if total is not None:
        captured = mass / total
    else:
        captured = 1.0 - max(density[0], density[-1]) / float(np.max(density))
    if captured < coverage:
        raise CoverageError(f"record captures only {captured:.8f} of the flux; extend the time window")
    mean = float(np.trapezoid(t * density, t)) / mass
    var = float(np.trapezoid((t - mean) ** 2 * density, t)) / mass
    return mean, math.sqrt(var)


__all__ = [
    "METHODS",
    "TimeEstimate",
    "CoverageError",
    "default_cutoff",
    "free_presence_time",
    "free_uncertainty",
    "momentum_average_time",
    "narrow_limit_time",
    "time_domain_presence_time",
    "transmission_channel",
    "tunneling_time",
    "tunneling_time_second_order",
    "tunneling_uncertainty",
]
