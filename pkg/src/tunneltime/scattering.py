"""Transmission amplitudes and the characteristic times derived from them.

Two scatterers are supported: a rectangular potential barrier for electrons
(atomic units, hbar = m = 1) and a periodic dielectric stack for photons
(hbar = c = 1, so energy and angular frequency coincide).

Phase convention: the transmitted wave is written as ``t_hat * exp(ik(y - L))``
for ``y > L``, i.e. the free propagation factor ``exp(ikL)`` is kept out of the
outgoing plane wave.  ``hbar * d(arg t_hat)/dE`` is then the phase (traversal)
time of the structure; for empty space of length ``L`` it equals ``L / v``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels

# below this |t_hat| a linear-space amplitude is no longer representable
_LOG_TINY = math.log(np.finfo(float).tiny)
BAND_EDGE_THRESHOLD = 1e-6


class TunnelingDomainError(ValueError):
    """Energy outside the tunneling channel (0, V0) of a barrier."""


class AmplitudeUnderflowError(ArithmeticError):
    """|t_hat| is below the smallest normal double; use the log-space routines."""


class GridTooCoarseError(ValueError):
    """Phase samples too sparse to unwrap unambiguously."""


@dataclass(frozen=True)
class RectangularBarrier:
    """Barrier of height ``height`` occupying ``0 <= y <= length``."""

    height: float
    length: float

    def __post_init__(self):
        if not (self.height > 0 and self.length > 0):
            raise ValueError(f"barrier needs V0 > 0 and L > 0, got {self.height}, {self.length}")

    dispersion = "electron"

    @property
    def tunneling_cutoff(self) -> float:
        return self.height


@dataclass(frozen=True)
class FreeSpace:
    """Empty interval of length ``length``; the V0 -> 0 limit of a barrier."""

    length: float
    dispersion: str = "electron"

    def __post_init__(self):
        if not self.length >= 0:
            raise ValueError("length must be non-negative")
        if self.dispersion not in ("electron", "photon"):
            raise ValueError(f"unknown dispersion {self.dispersion!r}")

    @property
    def tunneling_cutoff(self):
        return None


@dataclass(frozen=True)
class LayeredStack:
    """Alternating dielectric layers 1,2,1,...,1 (``N - 1`` layers, ``N`` even).

    The stack is embedded in a medium of index ``n2``; with ``n2 = 1`` that is
    vacuum, as in the quarter-wave style stacks this module is built around.
    """

    n1: float
    n2: float
    d1: float
    d2: float
    N: int

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("refractive indices must be >= 1")
        if self.d1 <= 0 or self.d2 <= 0:
            raise ValueError("layer thicknesses must be positive")
        if int(self.N) != self.N or self.N < 2 or self.N % 2:
            raise ValueError(f"N must be an even integer >= 2, got {self.N}")

    dispersion = "photon"

    @classmethod
    def nineteen_layer(cls) -> "LayeredStack":
        """n = 2.0 / 1.0, d = 0.6 / 1.2, 19 layers (length 16.8)."""
        return cls(2.0, 1.0, 0.6, 1.2, 20)

    @property
    def period(self) -> float:
        return self.d1 + self.d2

    @property
    def layer_count(self) -> int:
        return self.N - 1

    @property
    def length(self) -> float:
        half = self.N // 2
        return half * self.d1 + (half - 1) * self.d2

    @property
    def ambient_index(self) -> float:
        return self.n2

    @property
    def tunneling_cutoff(self):
        return None

    def layers(self) -> list[tuple[float, float]]:
        return [(self.n1, self.d1) if i % 2 == 0 else (self.n2, self.d2) for i in range(self.layer_count)]


# --------------------------------------------------------------------------
# rectangular barrier


def _rect_log_amplitude(E, barrier: RectangularBarrier):
    """log|t_hat| and arg t_hat for 0 < E <= V0, overflow-free for any kappa*L."""
    E = np.asarray(E, dtype=float)
    k = np.sqrt(2.0 * E)
    kappa = np.sqrt(np.maximum(2.0 * (barrier.height - E), 0.0))
    x = kappa * barrier.length
    # D = cosh(x) + i (kappa^2 - k^2)/(2k) * L * sinh(x)/x, scaled by exp(-x)
    e2 = np.exp(-2.0 * x)
    with np.errstate(invalid="ignore", divide="ignore"):
        shx = np.where(x > 1e-8, -np.expm1(-2.0 * x) / (2.0 * np.where(x > 0, x, 1.0)), 1.0 - x)
    re = 0.5 * (1.0 + e2)
    im = (kappa**2 - k**2) / (2.0 * k) * barrier.length * shx
    log_mod = -x - 0.5 * np.log(re**2 + im**2)
    phase = -np.arctan2(im, re)
    return log_mod, phase


def rect_barrier_log_amplitude(E, barrier: RectangularBarrier):
    """Return ``(log|t_hat|, arg t_hat)`` for energies in the tunneling channel."""
    E = np.asarray(E, dtype=float)
    if np.any(E <= 0) or np.any(E >= barrier.height):
        raise TunnelingDomainError(f"tunneling channel requires 0 < E < V0 = {barrier.height}")
    return _rect_log_amplitude(E, barrier)


def rect_barrier_amplitude(E, barrier: RectangularBarrier):
    """Complex amplitude ``1 / (cosh kL + i (kappa^2 - k^2)/(2 k kappa) sinh kL)``."""
    log_mod, phase = rect_barrier_log_amplitude(E, barrier)
    if np.any(log_mod < _LOG_TINY):
        raise AmplitudeUnderflowError(
            f"|t| = exp({np.min(log_mod):.1f}) underflows; use rect_barrier_log_amplitude"
        )
    out = np.exp(log_mod + 1j * phase)
    return out[()] if out.ndim == 0 else out


# --------------------------------------------------------------------------
# periodic stack


def cos_bloch_phase(omega, stack: LayeredStack):
    """Right-hand side of the dispersion relation, ``cos(beta * a)``."""
    omega = np.asarray(omega, dtype=float)
    k1, k2 = omega * stack.n1, omega * stack.n2
    coupling = (k1**2 + k2**2) / (2.0 * k1 * k2)
    return np.cos(k1 * stack.d1) * np.cos(k2 * stack.d2) - coupling * np.sin(k1 * stack.d1) * np.sin(k2 * stack.d2)


def _bloch_phase(x):
    # beta*a on the branch m*pi + i*theta, theta >= 0
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape, dtype=complex)
    inside = np.abs(x) <= 1.0
    out[inside] = np.arccos(x[inside])
    above = x > 1.0
    out[above] = 1j * np.arccosh(x[above])
    below = x < -1.0
    out[below] = np.pi + 1j * np.arccosh(-x[below])
    return out


def quasimomentum(omega, stack: LayeredStack):
    """Bloch wavenumber beta; complex (``(m*pi + i*theta)/a``) inside a gap."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("omega must be positive")
    beta = _bloch_phase(cos_bloch_phase(omega, stack)) / stack.period
    return beta[()] if beta.ndim == 0 else beta


def chebyshev_u(n: int, x):
    """Chebyshev polynomial of the second kind U_n(x) by recurrence (any real x)."""
    x = np.asarray(x, dtype=complex)
    u_prev, u = np.zeros_like(x), np.ones_like(x)
    for _ in range(n):
        u_prev, u = u, 2.0 * x * u - u_prev
    return u


def _bloch_ratio(M: int, beta_a, x):
    # sin(M beta a) / sin(beta a); polynomial limit U_{M-1}(cos beta a) at band edges
    s = np.sin(beta_a)
    near_edge = np.abs(s) < BAND_EDGE_THRESHOLD
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.sin(M * beta_a) / np.where(near_edge, 1.0, s)
    if np.any(near_edge):
        ratio = np.where(near_edge, chebyshev_u(M - 1, x), ratio)
    return ratio


def stack_amplitude(omega, stack: LayeredStack):
    """Characteristic-determinant transmission amplitude of the stack.

    ``t = exp(-i k2 d2) / (cos(M beta a) - i sin(M beta a)/sin(beta a) * S)``
    with ``M = N/2`` and ``S = sin(k2 d2) cos(k1 d1) + (k1^2+k2^2)/(2 k1 k2) cos(k2 d2) sin(k1 d1)``.
    ``S`` is the signed root of ``sin^2(beta a) + [(k1^2-k2^2)/(2 k1 k2) sin(k1 d1)]^2``.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("omega must be positive")
    k1, k2 = omega * stack.n1, omega * stack.n2
    M = stack.N // 2
    x = cos_bloch_phase(omega, stack)
    beta_a = _bloch_phase(x)
    coupling = (k1**2 + k2**2) / (2.0 * k1 * k2)
    S = np.sin(k2 * stack.d2) * np.cos(k1 * stack.d1) + coupling * np.cos(k2 * stack.d2) * np.sin(k1 * stack.d1)
    denom = np.cos(M * beta_a) - 1j * _bloch_ratio(M, beta_a, x) * S
    t = np.exp(-1j * k2 * stack.d2) / denom
    return t[()] if t.ndim == 0 else t


def stack_amplitude_printed(omega, stack: LayeredStack):
    """The closed form with the ``exp(-i k1 d1)`` prefactor, ``sin(k2 d2)`` and a positive root.

    Agrees with :func:`stack_amplitude` in modulus whenever ``n1 d1 = n2 d2``,
    and in phase as well where the signed root ``S`` is non-negative.
    """
    omega = np.asarray(omega, dtype=float)
    k1, k2 = omega * stack.n1, omega * stack.n2
    M = stack.N // 2
    x = cos_bloch_phase(omega, stack)
    beta_a = _bloch_phase(x)
    contrast = (k1**2 - k2**2) / (2.0 * k1 * k2)
    radicand = (np.sin(beta_a) ** 2).real + (contrast * np.sin(k2 * stack.d2)) ** 2
    root = np.sqrt(np.maximum(radicand, 0.0))
    t = np.exp(-1j * k1 * stack.d1) / (np.cos(M * beta_a) - 1j * _bloch_ratio(M, beta_a, x) * root)
    return t[()] if t.ndim == 0 else t


# --------------------------------------------------------------------------
# transfer-matrix oracle


def transfer_matrix_amplitude(energy, scatterer, backend=None):
    """Amplitude from a product of 2x2 layer matrices; independent of the closed forms."""
    energy = np.atleast_1d(np.asarray(energy, dtype=float))
    if np.any(energy <= 0):
        raise ValueError("energy/frequency must be positive")
    if isinstance(scatterer, RectangularBarrier):
        k_amb = np.sqrt(2.0 * energy).astype(complex)
        k_layers = np.sqrt(2.0 * (energy - scatterer.height) + 0j)[:, None]
        widths = np.array([scatterer.length])
    elif isinstance(scatterer, LayeredStack):
        k_amb = (energy * scatterer.ambient_index).astype(complex)
        n, d = zip(*scatterer.layers())
        k_layers = (energy[:, None] * np.asarray(n)[None, :]).astype(complex)
        widths = np.asarray(d, dtype=float)
    elif isinstance(scatterer, FreeSpace):
        k_amb = wavenumber(energy, scatterer.dispersion).astype(complex)
        k_layers = k_amb[:, None]
        widths = np.array([scatterer.length])
    else:
        raise TypeError(f"unsupported scatterer {type(scatterer).__name__}")
    return kernels.transfer_amplitude(k_layers, widths, k_amb, k_amb, backend=backend)


def wavenumber(energy, dispersion="electron"):
    energy = np.asarray(energy, dtype=float)
    if dispersion == "electron":
        return np.sqrt(2.0 * energy)
    if dispersion == "photon":
        return energy.copy()
    raise ValueError(f"unknown dispersion {dispersion!r}")


def log_amplitude(energy, scatterer):
    """``(log|t_hat|, raw phase)`` for any supported scatterer, vectorised.

    For the barrier the closed form is also accepted at ``E = V0`` (its finite
    limit), which lets quadrature grids end exactly on the tunneling cutoff.
    """
    energy = np.asarray(energy, dtype=float)
    if isinstance(scatterer, RectangularBarrier):
        if np.any(energy <= 0) or np.any(energy > scatterer.height):
            raise TunnelingDomainError(f"tunneling channel requires 0 < E <= V0 = {scatterer.height}")
        return _rect_log_amplitude(energy, scatterer)
    if isinstance(scatterer, LayeredStack):
        t = stack_amplitude(energy, scatterer)
        return np.log(np.abs(t)), np.angle(t)
    if isinstance(scatterer, FreeSpace):
        return np.zeros_like(energy), wavenumber(energy, scatterer.dispersion) * scatterer.length
    raise TypeError(f"unsupported scatterer {type(scatterer).__name__}")


def amplitude(energy, scatterer):
    log_mod, phase = log_amplitude(energy, scatterer)
    return np.exp(log_mod + 1j * phase)


# --------------------------------------------------------------------------
# channel samples and characteristic times


def unwrap_phase(raw, max_step=np.pi / 2):
    """Remove 2*pi jumps; refuse when neighbouring samples differ by more than ``max_step``.

    A residual step close to pi means the true phase change between samples is
    ambiguous, so the grid has to be refined instead of guessing.
    """
    raw = np.asarray(raw, dtype=float)
    out = np.unwrap(raw)
    if out.size > 1:
        worst = float(np.max(np.abs(np.diff(out))))
        if worst >= max_step:
            factor = math.ceil(worst / (max_step / 2))
            raise GridTooCoarseError(
                f"adjacent phase step {worst:.3f} rad >= {max_step:.3f}; refine the grid ~{factor}x"
            )
    return out


@dataclass(frozen=True)
class ScatteringChannel:
    """Transmission samples on an energy grid.

    ``weights`` are the quadrature weights of the grid (None for a bare sample set).
    """

    energies: np.ndarray
    log_modulus: np.ndarray
    phase: np.ndarray
    weights: np.ndarray | None = None
    cutoff: float | None = None

    @property
    def modulus(self):
        return np.exp(self.log_modulus)

    @property
    def amplitude(self):
        return np.exp(self.log_modulus + 1j * self.phase)


def sample_channel(scatterer, grid, cutoff=None) -> ScatteringChannel:
    """Evaluate ``scatterer`` on the nodes of ``grid`` (an EnergyGrid or an array)."""
    nodes = np.asarray(getattr(grid, "nodes", grid), dtype=float)
    weights = getattr(grid, "weights", None)
    log_mod, raw = log_amplitude(nodes, scatterer)
    return ScatteringChannel(nodes, log_mod, unwrap_phase(raw), weights, cutoff)


class CharacteristicTimes(NamedTuple):
    tau_y: np.ndarray
    tau_z: np.ndarray
    tau_y_tilde: np.ndarray
    tau_z_tilde: np.ndarray


def characteristic_times(channel: ScatteringChannel) -> CharacteristicTimes:
    """Phase time, transverse time and their energy derivatives on the channel grid.

    Second-order central differences (one-sided at the ends), non-uniform grids allowed.
    """
    E = channel.energies
    if E.size < 3:
        raise ValueError("need at least three samples")
    if not np.all(np.isfinite(channel.log_modulus)):
        raise ValueError("|t| vanishes at a sample; tau_z undefined")
    tau_y = np.gradient(channel.phase, E, edge_order=2)
    tau_z = np.gradient(channel.log_modulus, E, edge_order=2)
    return CharacteristicTimes(
        tau_y,
        tau_z,
        np.gradient(tau_y, E, edge_order=2),
        np.gradient(tau_z, E, edge_order=2),
    )


def _default_step(E, scatterer):
    if isinstance(scatterer, RectangularBarrier):
        return 1e-3 * np.minimum(E, scatterer.height - E)
    return 1e-4 * np.maximum(E, 1e-3)


def point_times(scatterer, E, step=None) -> CharacteristicTimes:
    """Characteristic times at arbitrary energies by Richardson-extrapolated central differences."""
    E = np.atleast_1d(np.asarray(E, dtype=float))
    h = _default_step(E, scatterer) if step is None else np.broadcast_to(step, E.shape).astype(float)

    def derivs(hh):
        lm = {}
        ph = {}
        for j in (-1, 0, 1):
            lm[j], ph[j] = log_amplitude(E + j * hh, scatterer)

        def dphase(a, b):
            return np.angle(np.exp(1j * (ph[a] - ph[b])))

        d1_phase = dphase(1, -1) / (2 * hh)
        d1_log = (lm[1] - lm[-1]) / (2 * hh)
        d2_phase = (dphase(1, 0) - dphase(0, -1)) / hh**2
        d2_log = (lm[1] - 2 * lm[0] + lm[-1]) / hh**2
        return np.array([d1_phase, d1_log, d2_phase, d2_log])

    coarse, fine = derivs(h), derivs(h / 2)
    best = (4.0 * fine - coarse) / 3.0
    return CharacteristicTimes(*best)


def buttiker_landauer_time(tau_y, tau_z):
    return np.hypot(tau_y, tau_z)
