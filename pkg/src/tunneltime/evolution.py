"""Wavepacket evolution by superposing stationary scattering states.

The incident packet is the free superposition ``sum G(E) exp(i(ky - Et))``,
real in energy at ``t = 0`` so its centroid crosses ``y = 0`` at ``t = 0``.
Beyond the structure the field is ``sum G |t| exp(i(k(y - L) + phi - Et))``.
The tunneling time is the difference of the two edge crossings obtained by
fitting straight lines to centroid tracks taken well before and well after the
interaction.

Spectra cut sharply at the barrier top have ``1/y^2`` spatial tails, so their
centroid does not exist.  Those packets are synthesised by FFT on a uniform
momentum grid and their centroid is taken as a principal value, over a window
symmetric about the wavefront of the fastest component.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .presence_time import CoverageError, TimeEstimate, fingerprint, time_domain_presence_time, transmission_channel
from .scattering import (
    FreeSpace,
    GridTooCoarseError,
    LayeredStack,
    RectangularBarrier,
    ScatteringChannel,
    log_amplitude,
    quasimomentum,
    unwrap_phase,
)
from .spectral import SpectralWeight

REGIONS = ("incident", "barrier", "transmitted", "all")
MASS_FLOOR = 1e-300


class TrackFitError(RuntimeError):
    """Centroid track is not a straight line; the fit window overlaps the interaction."""


@dataclass
class WavepacketField:
    """Snapshots ``psi[n, j]`` at positions ``y[n, j]`` and times ``t[n]``.

    Each snapshot may have its own spatial window.  ``component`` says which
    part of the scattering state was synthesised (``incident`` or
    ``transmitted``); regions are fixed by the structure ``[0, length]``.
    """

    y: np.ndarray
    t: np.ndarray
    psi: np.ndarray
    length: float
    component: str = "incident"

    def density(self, n):
        return np.abs(self.psi[n]) ** 2

    def region_mask(self, region, n):
        y = self.y[n]
        if region == "incident":
            return y < 0
        if region == "barrier":
            return (y >= 0) & (y <= self.length)
        if region == "transmitted":
            return y > self.length
        if region == "all":
            return np.ones(y.shape, dtype=bool)
        raise ValueError(f"unknown region {region!r}; expected one of {REGIONS}")

    def norm(self, n, region="all"):
        m = self.region_mask(region, n)
        if m.sum() < 2:
            return 0.0
        return float(np.trapezoid(self.density(n)[m], self.y[n][m]))


@dataclass
class CentroidTrack:
    times: np.ndarray
    positions: np.ndarray
    slope: float = field(init=False)
    intercept: float = field(init=False)
    residual: float = field(init=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.positions = np.asarray(self.positions, dtype=float)
        if self.times.size < 2:
            raise ValueError("a track needs at least two points")
        self.slope, self.intercept = np.polyfit(self.times, self.positions, 1)
        fit = self.slope * self.times + self.intercept
        self.residual = float(np.sqrt(np.mean((self.positions - fit) ** 2)))

    @property
    def span(self):
        return float(np.ptp(self.positions))


def extrapolate_crossing(track: CentroidTrack, edge: float, max_residual: float = 1e-3) -> float:
    """Time at which the fitted straight line reaches ``edge``."""
    if not track.slope > 0:
        raise TrackFitError(f"fitted velocity {track.slope:.3g} is not positive")
    if track.residual > max_residual * max(track.span, 1e-300):
        raise TrackFitError(
            f"fit residual {track.residual:.3g} exceeds {max_residual:g} of the track span {track.span:.3g}"
        )
    return (edge - track.intercept) / track.slope


# --------------------------------------------------------------------------
# spectral data


@dataclass(frozen=True)
class PacketSpectrum:
    """Quadrature-weighted complex amplitudes ``a_i`` of one packet component.

    ``a_i = w_i * Phi(E_i) * exp(-log_scale)``; positions are measured from
    ``y_ref`` and ``tau`` is the phase time that delays the component.
    """

    energies: np.ndarray
    k: np.ndarray
    v: np.ndarray
    amp: np.ndarray
    modulus: np.ndarray
    tau: np.ndarray
    y_ref: float
    log_scale: float

    def position_moments(self, t):
        """Exact mean and RMS width of ``|psi(y, t)|^2`` (infinite domain)."""
        w = self.weights_y
        drift = self.v * (t - self.tau)
        mean = float(np.dot(w, drift))
        var = float(np.dot(w, (drift - mean) ** 2))
        # amplitude-gradient contribution: int |dR/dk|^2 dk / int R^2 dk
        R = self.v * self.modulus
        dR = np.gradient(R, self.energies, edge_order=2)
        quad = np.abs(self.amp) / np.maximum(self.modulus, 1e-300)
        var += float(np.sum(quad * self.v * dR**2) / np.sum(quad * self.v * R**2 / self.v**2))
        return self.y_ref + mean, math.sqrt(var)

    @property
    def weights_y(self):
        # |chi(k)|^2 dk = v |Phi|^2 dE
        w = np.abs(self.amp) * self.modulus * self.v
        return w / w.sum()

    def spatial_norm(self):
        """``int |psi|^2 dy`` in the units of ``amp`` (Parseval)."""
        quad = np.abs(self.amp) / np.maximum(self.modulus, 1e-300)
        return float(2 * math.pi * np.sum(quad * self.v * self.modulus**2))

    def temporal_norm(self):
        quad = np.abs(self.amp) / np.maximum(self.modulus, 1e-300)
        return float(2 * math.pi * np.sum(quad * self.modulus**2))

    def band(self, rel=1e-10):
        """Momentum and energy ranges where ``|amp|`` exceeds ``rel`` of its peak."""
        m = np.abs(self.amp) > rel * np.max(np.abs(self.amp))
        return (float(self.k[m].min()), float(self.k[m].max())), (
            float(self.energies[m].min()),
            float(self.energies[m].max()),
        )


def incident_spectrum(weight: SpectralWeight) -> PacketSpectrum:
    E = weight.grid.nodes
    keep = weight.samples > 0
    E, g, q = E[keep], weight.samples[keep], weight.grid.weights[keep]
    d = weight.dispersion
    return PacketSpectrum(E, d.wavenumber(E), d.velocity(E), q * g, g, np.zeros_like(E), 0.0, 0.0)


def transmitted_spectrum(weight: SpectralWeight, channel: ScatteringChannel, length: float) -> PacketSpectrum:
    E = channel.energies
    log_mod = weight.log_amplitude(E) + channel.log_modulus
    scale = float(np.max(log_mod))
    keep = log_mod - scale > math.log(1e-150)
    E, lm, ph = E[keep], log_mod[keep] - scale, channel.phase[keep]
    tau = np.gradient(channel.phase, channel.energies, edge_order=2)[keep]
    d = weight.dispersion
    mod = np.exp(lm)
    amp = channel.weights[keep] * mod * np.exp(1j * ph)
    return PacketSpectrum(E, d.wavenumber(E), d.velocity(E), amp, mod, tau, float(length), scale)


# --------------------------------------------------------------------------
# synthesis


def required_spacing(spec: PacketSpectrum, resolution="carrier"):
    """Largest admissible grid step.

    ``carrier`` resolves the shortest wavelength with 8 points; ``envelope``
    only samples ``|psi|^2`` above its Nyquist rate, which is enough for
    densities and their moments.
    """
    (k_lo, k_hi), _ = spec.band()
    if resolution == "carrier":
        return 2 * math.pi / (8 * k_hi)
    if resolution == "envelope":
        return math.pi / max(k_hi - k_lo, 1e-12)
    raise ValueError(f"unknown resolution mode {resolution!r}")


def synthesize_field(
    spec: PacketSpectrum,
    y,
    t,
    *,
    length: float = 0.0,
    component: str = "incident",
    resolution: str = "carrier",
    backend=None,
) -> WavepacketField:
    """``psi(y, t)`` by direct quadrature over the energy nodes.

    ``y`` is a 1-D grid shared by all snapshots or a ``(len(t), ny)`` array of
    per-snapshot grids; grids must be uniform.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = np.broadcast_to(y, (t.size, y.size))
    if y.shape[0] != t.size or y.shape[1] < 3:
        raise ValueError("y must be 1-D or have one row per snapshot")
    need = required_spacing(spec, resolution)
    step = float(np.max(np.abs(np.diff(y, axis=1))))
    if step > need * (1 + 1e-9):
        span = float(np.max(np.ptp(y, axis=1)))
        raise GridTooCoarseError(
            f"grid step {step:.4g} exceeds {need:.4g} ({resolution}); use at least {math.ceil(span / need) + 1} points"
        )
    psi = np.empty(y.shape, dtype=complex)
    for n in range(t.size):
        psi[n] = kernels.synthesize(y[n], t[n : n + 1], spec.k, spec.energies, spec.amp, spec.y_ref, backend)[0]
    return WavepacketField(np.array(y), t, psi, float(length), component)


def centroid(wf: WavepacketField, region: str, n: int, window=None) -> float:
    """Mean position of ``|psi|^2`` over ``region`` (optionally also within ``window``)."""
    m = wf.region_mask(region, n)
    if window is not None:
        m &= (wf.y[n] >= window[0]) & (wf.y[n] <= window[1])
    if m.sum() < 2:
        raise ValueError(f"region {region!r} holds no samples at snapshot {n}")
    rho, y = wf.density(n)[m], wf.y[n][m]
    mass = float(np.trapezoid(rho, y))
    if not mass > MASS_FLOOR:
        raise ValueError(f"region {region!r} is empty at snapshot {n}")
    return float(np.trapezoid(y * rho, y)) / mass


def track(wf: WavepacketField, region: str, window=None) -> CentroidTrack:
    wins = [None] * wf.t.size if window is None else window
    return CentroidTrack(wf.t, [centroid(wf, region, n, wins[n]) for n in range(wf.t.size)])


# --------------------------------------------------------------------------
# protocol


@dataclass(frozen=True)
class ProtocolParams:
    snapshots: int = 20
    window_sigmas: float = 8.0
    launch_sigmas: float = 6.0
    decay_lengths: float = 10.0
    incident_fraction: float = 0.5
    window_shift: float = 0.0
    resolution: str = "envelope"
    plateau: float = 1.0 - 1e-4
    max_residual: float = 1e-3
    edge_threshold: float = 1e-8
    edge_times: tuple = (2.0e4, 6.0e4)
    edge_snapshots: int = 9
    edge_period_factor: float = 4.0
    backend: str | None = None


def _decay_length(scatterer, E0):
    if isinstance(scatterer, RectangularBarrier):
        return 1.0 / math.sqrt(2 * (scatterer.height - E0)) if E0 < scatterer.height else 0.0
    if isinstance(scatterer, LayeredStack):
        beta = complex(quasimomentum(E0, scatterer))
        return 1.0 / beta.imag if beta.imag > 0 else 0.0
    return 0.0


def _grid(center, half, lo, step):
    a = center - half if lo is None else max(lo, center - half)
    b = center + half
    n = int(math.ceil((b - a) / step)) + 1
    return np.linspace(a, b, max(n, 3))


def _snapshots(spec, times, half_fn, lo, params, length, component):
    step = required_spacing(spec, params.resolution)
    rows = []
    for t in times:
        c, s = spec.position_moments(t)
        rows.append(_grid(c, half_fn(s), lo, step))
    ny = max(r.size for r in rows)
    # equal row lengths: pad each window on the right at the same step
    y = np.array([r[0] + (r[1] - r[0]) * np.arange(ny) for r in rows])
    return synthesize_field(spec, y, times, length=length, component=component,
                            resolution=params.resolution, backend=params.backend)


def _is_edge(weight, channel, threshold):
    if channel.cutoff is None or channel.cutoff >= weight.support[1]:
        return False
    lw = 2 * (weight.log_amplitude(channel.energies) + channel.log_modulus)
    return bool(lw[-1] - np.max(lw) > math.log(threshold))


def incident_crossing(weight: SpectralWeight, launch_distance: float, params: ProtocolParams):
    """``(t1, track)``: crossing of ``y = 0`` by the free incident packet launched ``launch_distance`` away."""
    spec = incident_spectrum(weight)
    v0 = weight.group_velocity
    t_launch = -launch_distance / v0
    dur = params.incident_fraction * launch_distance / v0
    start = t_launch + params.window_shift * dur
    times = np.linspace(start, start + dur, params.snapshots)
    wf = _snapshots(spec, times, lambda s: params.window_sigmas * s, None, params, 0.0, "incident")
    tr = track(wf, "all")
    return extrapolate_crossing(tr, 0.0, params.max_residual), tr, t_launch


def _transmitted_direct(spec, length, dur, params, retries=5):
    v = float(np.dot(spec.weights_y, spec.v))
    t2 = float(np.dot(spec.weights_y, spec.v * spec.tau)) / v
    total = spec.spatial_norm()
    sigmas = params.window_sigmas
    for _ in range(retries + 1):
        # first time the whole window of ``sigmas`` widths is past the exit face
        t_exit = t2
        for _ in range(6):
            _, s = spec.position_moments(t_exit)
            t_exit = t2 + sigmas * s / v
        start = t_exit + (0.5 + params.window_shift) * dur
        times = np.linspace(start, start + dur, params.snapshots)
        wf = _snapshots(spec, times, lambda s: sigmas * s, length, params, length, "transmitted")
        frac = np.array([wf.norm(n, "transmitted") for n in range(times.size)]) / total
        if np.min(frac) >= params.plateau:
            break
        # long-lived resonances leave heavy tails: wait longer and look wider
        sigmas *= 2
    else:
        raise TrackFitError(f"transmitted norm reaches only {np.min(frac):.6f} of its plateau in the fit window")
    tr = track(wf, "transmitted")
    diag = {"plateau_min": float(np.min(frac)), "predicted_t2": t2, "window_sigmas": sigmas}
    return extrapolate_crossing(tr, length, params.max_residual), tr, diag


def edge_field(weight, scatterer, times, *, period, resolution_factor=1.0, rel=math.exp(-25)):
    """Transmitted field for a spectrum cut at the barrier top, by FFT on a uniform momentum grid.

    Returns the field on ``[L, L + period)`` and the phase time of the top component.
    """
    L = scatterer.length
    d = weight.dispersion
    k_top = float(d.wavenumber(scatterer.height))
    # locate the band that carries the transmitted weight
    probe = transmission_channel(weight, scatterer, panels=4000)
    lw = weight.log_amplitude(probe.energies) + probe.log_modulus
    lo_E = float(probe.energies[np.argmax(lw - np.max(lw) > math.log(rel))])
    k_lo = float(d.wavenumber(lo_E))
    dk = 2 * math.pi / period
    k = k_top - dk * np.arange(int(math.ceil((k_top - k_lo) / dk)) + 1)[::-1]
    k = k[k > 0]
    E = d.energy(k)
    E[-1] = scatterer.height
    log_mod, raw = log_amplitude(E, scatterer)
    phase = unwrap_phase(raw)
    v = d.velocity(E)
    lw = weight.log_amplitude(E) + log_mod
    chi = v * np.exp(lw - np.max(lw) + 1j * phase) * dk
    chi[0] *= 0.5
    chi[-1] *= 0.5
    tau_top = float(np.gradient(phase, E, edge_order=2)[-1])
    n_fft = int(2 ** math.ceil(math.log2(resolution_factor * period * (k_top - k[0]) / math.pi + 1)))
    dy = period / n_fft
    y = L + dy * np.arange(n_fft)
    psi = np.empty((len(times), n_fft), dtype=complex)
    for n, t in enumerate(times):
        b = chi * np.exp(-1j * E * t)
        psi[n] = np.fft.ifft(b, n_fft) * n_fft
    wf = WavepacketField(np.broadcast_to(y, psi.shape).copy(), np.asarray(times, float), psi, L, "transmitted")
    return wf, tau_top, float(v[-1])


def _transmitted_edge(weight, scatterer, params):
    t_a, t_b = params.edge_times
    t_a, t_b = t_a + params.window_shift * (t_b - t_a), t_b + params.window_shift * (t_b - t_a)
    times = np.linspace(t_a, t_b, params.edge_snapshots)
    L = scatterer.length
    v_top = float(weight.dispersion.velocity(scatterer.height))
    half_max = v_top * t_b
    wf, tau_top, v_top = edge_field(weight, scatterer, times, period=params.edge_period_factor * 2 * half_max)
    pos = []
    for n, t in enumerate(times):
        y_front = L + v_top * (t - tau_top)
        pos.append(principal_centroid(wf, n, (L, 2 * y_front - L)))
    tr = CentroidTrack(times, pos)
    return extrapolate_crossing(tr, L, params.max_residual), tr, {"tau_top": tau_top}


def principal_centroid(wf: WavepacketField, n: int, window) -> float:
    """Centroid over ``window`` with the mass outside it placed at the window centre.

    ``wf`` must hold one full period of an FFT-synthesised field, so the sum
    over all samples is the total probability.  Outside a wide window only
    the ``1/y^2`` tails of the cut-off remain and those are symmetric about
    the wavefront, which is the window centre.
    """
    rho, y = wf.density(n), wf.y[n]
    total = float(np.sum(rho))
    m = (y >= window[0]) & (y <= window[1])
    inside = float(np.sum(rho[m]))
    if not inside > MASS_FLOOR:
        raise ValueError(f"window {window} is empty at snapshot {n}")
    centre = 0.5 * (window[0] + window[1])
    return (float(np.dot(y[m], rho[m])) + centre * (total - inside)) / total


def simulated_tunneling_time(
    weight: SpectralWeight,
    scatterer,
    params: ProtocolParams | None = None,
    channel: ScatteringChannel | None = None,
) -> TimeEstimate:
    """``t2 - t1`` from extrapolated incident and transmitted centroid tracks."""
    params = params or ProtocolParams()
    channel = channel or transmission_channel(weight, scatterer)
    v0 = weight.group_velocity
    dy = weight.spatial_width()
    D = params.launch_sigmas * dy + params.decay_lengths * _decay_length(scatterer, weight.energy_center)
    t1, inc, t_launch = incident_crossing(weight, D, params)
    dur = params.incident_fraction * D / v0
    edge = _is_edge(weight, channel, params.edge_threshold)
    if edge:
        t2, out, diag = _transmitted_edge(weight, scatterer, params)
    else:
        spec = transmitted_spectrum(weight, channel, scatterer.length)
        t2, out, diag = _transmitted_direct(spec, scatterer.length, dur, params)
    diag.update(
        t1=t1 - t_launch,
        t2=t2 - t_launch,
        launch_distance=D,
        mode="edge" if edge else "direct",
        incident_residual=inc.residual,
        transmitted_residual=out.residual,
        v_incident=inc.slope,
        v_transmitted=out.slope,
        track_times=out.times.tolist(),
        track_positions=out.positions.tolist(),
    )
    return TimeEstimate("evolution", t2 - t1, diagnostics=diag,
                        fingerprint=fingerprint(weight, scatterer, params))


def measured_spatial_width(weight: SpectralWeight, params: ProtocolParams | None = None) -> float:
    """RMS width of the synthesised free packet at its waist."""
    params = params or ProtocolParams()
    spec = incident_spectrum(weight)
    _, s = spec.position_moments(0.0)
    step = required_spacing(spec, params.resolution)
    y = _grid(0.0, 2 * params.window_sigmas * s, None, step)
    wf = synthesize_field(spec, y, [0.0], resolution=params.resolution, backend=params.backend)
    rho = wf.density(0)
    m0 = np.trapezoid(rho, y)
    mean = np.trapezoid(y * rho, y) / m0
    return float(math.sqrt(np.trapezoid((y - mean) ** 2 * rho, y) / m0))


def temporal_profile(spec: PacketSpectrum, y: float, t, backend=None):
    """``|psi(y, t)|^2`` at a fixed detector."""
    t = np.asarray(t, dtype=float)
    return np.abs(kernels.synthesize(np.array([y]), t, spec.k, spec.energies, spec.amp, spec.y_ref, backend)[:, 0]) ** 2


def simulated_uncertainty(
    weight: SpectralWeight,
    scatterer,
    params: ProtocolParams | None = None,
    channel: ScatteringChannel | None = None,
    max_doublings: int = 8,
):
    """``(transmitted, incident, total)`` time spreads measured on synthesised fields.

    The transmitted part is the RMS width of ``|psi(L, t)|^2`` in time, the
    incident part the packet's spatial RMS width over ``v0``; they add linearly.
    """
    params = params or ProtocolParams()
    channel = channel or transmission_channel(weight, scatterer)
    if _is_edge(weight, channel, params.edge_threshold):
        raise CoverageError("spectrum cut at the barrier top: the temporal profile has 1/t^2 tails and no finite spread")
    spec = transmitted_spectrum(weight, channel, scatterer.length)
    L = scatterer.length
    _, (e_lo, e_hi) = spec.band()
    dt = 0.5 * math.pi / (e_hi - e_lo)
    w = np.abs(spec.amp) * spec.modulus
    w = w / w.sum()
    mean = float(np.dot(w, spec.tau))
    guess = math.sqrt(float(np.dot(w, (spec.tau - mean) ** 2))) + 1.0 / max(weight.energy_width, 1e-12)
    half = params.window_sigmas * guess
    total = spec.temporal_norm()
    for _ in range(max_doublings):
        t = np.arange(mean - half, mean + half + dt, dt)
        try:
            _, rms = time_domain_presence_time(t, temporal_profile(spec, L, t, params.backend), total)
            break
        except CoverageError:
            half *= 2
    else:
        raise CoverageError("temporal profile at the exit face not captured; spectrum too sharply cut")
    incident = measured_spatial_width(weight, params) / weight.group_velocity
    return rms, incident, rms + incident
