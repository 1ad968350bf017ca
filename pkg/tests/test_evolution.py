import math

import numpy as np
import pytest

from tunneltime.evolution import (
    CentroidTrack,
    ProtocolParams,
    TrackFitError,
    centroid,
    extrapolate_crossing,
    incident_crossing,
    incident_spectrum,
    measured_spatial_width,
    required_spacing,
    simulated_tunneling_time,
    simulated_uncertainty,
    synthesize_field,
    track,
    transmitted_spectrum,
)
from tunneltime.presence_time import (
    CoverageError,
    transmission_channel,
    tunneling_time,
    tunneling_uncertainty,
)
from tunneltime.scattering import FreeSpace, GridTooCoarseError
from tunneltime.spectral import gaussian_weight


@pytest.fixture(scope="module")
def weight():
    return gaussian_weight(2.5, 0.05)


def free_field(weight, times, half=150.0, resolution="envelope", backend=None):
    spec = incident_spectrum(weight)
    step = required_spacing(spec, resolution)
    rows = [np.arange(2.5 * t - half, 2.5 * t + half, step) for t in times]
    n = min(r.size for r in rows)
    return spec, synthesize_field(spec, np.array([r[:n] for r in rows]), times, resolution=resolution, backend=backend)


def test_free_packet_moves_at_group_velocity(weight, backend):
    _, wf = free_field(weight, np.linspace(-40, 40, 5), backend=backend)
    tr = track(wf, "all")
    # |chi(k)|^2 carries a factor v, so <k> = p0 + dp^2 / (2 p0)
    v = 2.5 + 0.05**2 / 5
    assert tr.slope == pytest.approx(v, rel=1e-6)
    assert tr.intercept == pytest.approx(0.0, abs=1e-3)


def test_norm_is_conserved(weight):
    spec, wf = free_field(weight, np.array([-40.0, 0.0, 40.0]))
    norms = [wf.norm(n) for n in range(3)]
    assert np.ptp(norms) / np.mean(norms) < 1e-6
    assert norms[0] == pytest.approx(spec.spatial_norm(), rel=1e-6)


def test_moments_match_field(weight):
    spec, wf = free_field(weight, np.array([30.0]))
    mean, width = spec.position_moments(30.0)
    rho, y = wf.density(0), wf.y[0]
    m0 = np.trapezoid(rho, y)
    assert np.trapezoid(y * rho, y) / m0 == pytest.approx(mean, abs=1e-6)
    assert math.sqrt(np.trapezoid((y - mean) ** 2 * rho, y) / m0) == pytest.approx(width, rel=1e-5)
    assert measured_spatial_width(weight) == pytest.approx(weight.spatial_width(), rel=1e-5)


def test_carrier_resolution_agrees_with_envelope(weight):
    _, a = free_field(weight, np.array([0.0]), resolution="carrier")
    _, b = free_field(weight, np.array([0.0]))
    assert centroid(a, "all", 0) == pytest.approx(centroid(b, "all", 0), abs=1e-6)


def test_grid_too_coarse(weight):
    spec = incident_spectrum(weight)
    with pytest.raises(GridTooCoarseError, match="at least"):
        synthesize_field(spec, np.linspace(-100, 100, 11), [0.0], resolution="carrier")


def test_region_centroid_is_biased_by_truncation(weight):
    _, wf = free_field(weight, np.array([0.0]))
    assert abs(centroid(wf, "all", 0)) < 1e-6
    # the part left of y = 0 has its own centroid well below the packet's
    assert centroid(wf, "incident", 0) < -0.5 * weight.spatial_width()
    with pytest.raises(ValueError):
        centroid(wf, "elsewhere", 0)


def test_synthetic_track():
    t = np.linspace(0, 4, 9)
    tr = CentroidTrack(t, 3 * t - 6)
    assert extrapolate_crossing(tr, 0.0) == pytest.approx(2.0)
    curved = CentroidTrack(t, 3 * t - 6 + 0.5 * t**2)
    with pytest.raises(TrackFitError, match="residual"):
        extrapolate_crossing(curved, 0.0)
    with pytest.raises(TrackFitError, match="velocity"):
        extrapolate_crossing(CentroidTrack(t, -t), 0.0)


def test_incident_crossing_from_launch(weight):
    t1, tr, t_launch = incident_crossing(weight, 200.0, ProtocolParams())
    assert t1 - t_launch == pytest.approx(80.0, rel=1e-3)
    assert tr.slope == pytest.approx(2.5005, rel=1e-6)


def test_transmitted_norm_matches_parseval(weight, barrier):
    ch = transmission_channel(weight, barrier)
    spec = transmitted_spectrum(weight, ch, barrier.length)
    t = 200.0
    c, s = spec.position_moments(t)
    y = np.arange(barrier.length, c + 12 * s, required_spacing(spec, "envelope"))
    wf = synthesize_field(spec, y, [t], length=barrier.length, component="transmitted", resolution="envelope")
    assert wf.norm(0, "transmitted") == pytest.approx(spec.spatial_norm(), rel=1e-6)


def test_evolution_matches_presence(weight, barrier):
    ch = transmission_channel(weight, barrier)
    ev = simulated_tunneling_time(weight, barrier, channel=ch)
    ref = tunneling_time(weight, ch).tau
    assert ev.diagnostics["mode"] == "direct"
    assert ev.tau == pytest.approx(ref, rel=0.01)
    assert ev.diagnostics["t2"] - ev.diagnostics["t1"] == pytest.approx(ev.tau)


@pytest.mark.parametrize("shift", [-0.25, 0.25])
def test_window_shift_insensitivity(weight, barrier, shift):
    ch = transmission_channel(weight, barrier)
    base = simulated_tunneling_time(weight, barrier, channel=ch).tau
    moved = simulated_tunneling_time(weight, barrier, ProtocolParams(window_shift=shift), channel=ch).tau
    assert moved == pytest.approx(base, rel=5e-3)


def test_free_space_gives_flight_time(weight):
    ev = simulated_tunneling_time(weight, FreeSpace(20.0))
    assert ev.tau == pytest.approx(8.0, rel=1e-3)


@pytest.mark.slow
def test_edge_mode(barrier):
    w = gaussian_weight(2.5, 0.2)
    ch = transmission_channel(w, barrier)
    ev = simulated_tunneling_time(w, barrier, channel=ch)
    assert ev.diagnostics["mode"] == "edge"
    assert ev.tau == pytest.approx(tunneling_time(w, ch).tau, rel=0.02)
    with pytest.raises(CoverageError):
        simulated_uncertainty(w, barrier, channel=ch)


def test_photon_packet_in_the_gap(stack):
    w = gaussian_weight(3.927, 0.02, "photon")
    ch = transmission_channel(w, stack)
    ev = simulated_tunneling_time(w, stack, channel=ch)
    ref = tunneling_time(w, ch).tau
    assert ev.tau < stack.length
    assert ev.tau == pytest.approx(ref, rel=0.01)


def test_photon_uncertainty(stack):
    w = gaussian_weight(3.927, 0.05, "photon")
    ch = transmission_channel(w, stack)
    rms, incident, total = simulated_uncertainty(w, stack, channel=ch)
    trans, full = tunneling_uncertainty(w, ch)
    assert rms == pytest.approx(trans, rel=0.05)
    assert total == pytest.approx(full, rel=0.05)
    assert incident == pytest.approx(w.spatial_width(), rel=1e-4)


def test_free_packet_uncertainty_doubles():
    # the "transmitted" packet is the incident one, so both halves are dy / v0
    w = gaussian_weight(2.5, 0.02)
    rms, incident, total = simulated_uncertainty(w, FreeSpace(20.0))
    assert rms == pytest.approx(incident, rel=1e-3)
    assert total == pytest.approx(2 * w.spatial_width() / 2.5, rel=1e-3)
