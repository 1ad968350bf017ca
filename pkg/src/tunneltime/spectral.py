"""Dispersion relations, quadrature grids and Gaussian spectral weights.

A weight ``G(E)`` is the real amplitude of a wavepacket over scattering states
of energy ``E``; ``G**2`` is its probability density in energy and is
normalised on the grid, ``sum(w * G**2) == 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

HBAR = 1.0
TRUNCATION_ENERGY = 1e-6
LEAKAGE_LIMIT = 1e-3


@dataclass(frozen=True)
class Dispersion:
    """``electron``: E = p^2/2 (hbar = m = 1).  ``photon``: E = omega = k (hbar = c = 1)."""

    kind: str

    def __post_init__(self):
        if self.kind not in ("electron", "photon"):
            raise ValueError(f"unknown dispersion {self.kind!r}")

    def wavenumber(self, E):
        E = np.asarray(E, dtype=float)
        return np.sqrt(2.0 * E) if self.kind == "electron" else E.copy()

    def energy(self, k):
        k = np.asarray(k, dtype=float)
        return 0.5 * k**2 if self.kind == "electron" else k.copy()

    def velocity(self, E):
        E = np.asarray(E, dtype=float)
        return np.sqrt(2.0 * E) if self.kind == "electron" else np.ones_like(E)


ELECTRON = Dispersion("electron")
PHOTON = Dispersion("photon")


def as_dispersion(d) -> Dispersion:
    return d if isinstance(d, Dispersion) else Dispersion(str(d))


@dataclass(frozen=True)
class EnergyGrid:
    """Composite Simpson rule on arbitrary panel breakpoints."""

    nodes: np.ndarray
    weights: np.ndarray
    breakpoints: np.ndarray

    @classmethod
    def from_breakpoints(cls, breakpoints) -> "EnergyGrid":
        b = np.asarray(breakpoints, dtype=float)
        if b.ndim != 1 or b.size < 2 or np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        h = np.diff(b)
        nodes = np.empty(2 * h.size + 1)
        nodes[0::2] = b
        nodes[1::2] = 0.5 * (b[:-1] + b[1:])
        weights = np.zeros_like(nodes)
        weights[0:-1:2] += h / 6.0
        weights[1::2] += 4.0 * h / 6.0
        weights[2::2] += h / 6.0
        return cls(nodes, weights, b)

    @classmethod
    def uniform(cls, lo: float, hi: float, panels: int) -> "EnergyGrid":
        return cls.from_breakpoints(np.linspace(lo, hi, int(panels) + 1))

    @classmethod
    def clustered(cls, lo: float, hi: float, panels: int, levels: int = 24) -> "EnergyGrid":
        """Uniform panels with the last one split geometrically towards ``hi``."""
        b = np.linspace(lo, hi, int(panels) + 1)
        h = b[1] - b[0]
        extra = hi - h * 0.5 ** np.arange(1, levels + 1)
        return cls.from_breakpoints(np.unique(np.concatenate([b, extra])))

    def refined(self) -> "EnergyGrid":
        """Every panel halved."""
        b = self.breakpoints
        return EnergyGrid.from_breakpoints(np.sort(np.concatenate([b, 0.5 * (b[:-1] + b[1:])])))

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def __len__(self):
        return self.nodes.size


@dataclass(frozen=True)
class SpectralWeight:
    """A normalised Gaussian wavepacket weight, sampled on ``grid``.

    ``center``/``width`` are in the packet's native variable (momentum for
    ``space="momentum"``, energy for ``space="energy"``); ``energy_center`` and
    ``energy_width`` are the corresponding energy quantities, with
    ``energy_width = v0 * width`` for momentum packets.
    """

    dispersion: Dispersion
    space: str
    center: float
    width: float
    grid: EnergyGrid
    log_norm: float
    energy_center: float
    energy_width: float
    samples: np.ndarray = field(repr=False)

    @property
    def support(self):
        return float(self.grid.nodes[0]), float(self.grid.nodes[-1])

    @property
    def group_velocity(self) -> float:
        return float(self.dispersion.velocity(self.energy_center))

    def log_amplitude(self, E):
        """``ln G(E)`` for arbitrary energies (``-inf`` below the truncation energy)."""
        E = np.asarray(E, dtype=float)
        out = np.full(E.shape, -np.inf)
        ok = E >= TRUNCATION_ENERGY
        Eo = E[ok]
        if self.space == "momentum":
            p = self.dispersion.wavenumber(Eo)
            out[ok] = -((p - self.center) ** 2) / (2 * self.width**2) - 0.5 * np.log(self.dispersion.velocity(Eo))
        else:
            out[ok] = -((Eo - self.center) ** 2) / (2 * self.width**2)
        return out - self.log_norm

    def amplitude(self, E):
        return np.exp(self.log_amplitude(E))

    def momentum_amplitude(self, k):
        """Real momentum-space amplitude of the packet at its waist, ``v * G`` (unnormalised)."""
        k = np.asarray(k, dtype=float)
        E = self.dispersion.energy(k)
        return self.dispersion.velocity(E) * self.amplitude(E)

    def spatial_width(self, points: int = 20001) -> float:
        """RMS width of |psi(y)|^2 at the waist (where G is real)."""
        k_lo, k_hi = self.dispersion.wavenumber(np.array(self.support))
        k = np.linspace(k_lo, k_hi, points)
        phi = self.momentum_amplitude(k)
        dphi = np.gradient(phi, k, edge_order=2)
        return float(math.sqrt(np.trapezoid(dphi**2, k) / np.trapezoid(phi**2, k)))


def gaussian_weight(
    center: float,
    width: float,
    dispersion="electron",
    grid: EnergyGrid | None = None,
    *,
    space: str = "momentum",
    n_sigma: float = 12.0,
    panels: int = 4000,
) -> SpectralWeight:
    """Gaussian packet ``exp(-(q - center)^2 / (2 width^2))`` in ``q`` = momentum or energy.

    Momentum packets are carried to the energy axis with the Jacobian
    ``dp/dE = 1/v`` so that ``G(E)^2 dE = G(p)^2 dp``.  Components below
    ``E = 1e-6`` are dropped; packets with more than 1e-3 of their probability
    at ``E <= 0`` are rejected.
    """
    disp = as_dispersion(dispersion)
    if not (center > 0 and width > 0):
        raise ValueError("center and width must be positive")
    if space not in ("momentum", "energy"):
        raise ValueError(f"space must be 'momentum' or 'energy', not {space!r}")
    # G^2 is a normal density with standard deviation width/sqrt(2)
    leakage = 0.5 * math.erfc(center / width)
    if leakage > LEAKAGE_LIMIT:
        raise ValueError(f"{leakage:.2e} of the packet lies at E <= 0; not a right-moving packet")

    if space == "momentum":
        p_lo = max(center - n_sigma * width, float(disp.wavenumber(TRUNCATION_ENERGY)))
        p_hi = center + n_sigma * width
        e_center = float(disp.energy(center))
        e_width = float(disp.velocity(e_center)) * width
        if grid is None:
            grid = EnergyGrid.from_breakpoints(disp.energy(np.linspace(p_lo, p_hi, panels + 1)))
    else:
        e_center, e_width = center, width
        if grid is None:
            grid = EnergyGrid.uniform(max(center - n_sigma * width, TRUNCATION_ENERGY), center + n_sigma * width, panels)

    proto = SpectralWeight(disp, space, float(center), float(width), grid, 0.0, e_center, e_width, np.empty(0))
    log_g = proto.log_amplitude(grid.nodes)
    shift = float(np.max(log_g))
    log_norm = 0.5 * math.log(grid.integrate(np.exp(2.0 * (log_g - shift)))) + shift
    samples = np.exp(log_g - log_norm)
    return SpectralWeight(disp, space, float(center), float(width), grid, log_norm, e_center, e_width, samples)


def classical_time(y, E, y0=0.0, dispersion="electron"):
    """Free flight time from ``y0`` to ``y`` at energy ``E``."""
    E = np.asarray(E, dtype=float)
    if np.any(E <= 0):
        raise ZeroDivisionError("classical time needs E > 0")
    return (np.asarray(y, dtype=float) - y0) / as_dispersion(dispersion).velocity(E)


def tau_G(weight: SpectralWeight, E=None):
    """``hbar d ln G/dE`` and its energy derivative, in closed form.

    Evaluated on the weight grid unless ``E`` is given.
    """
    E = weight.grid.nodes if E is None else np.asarray(E, dtype=float)
    if weight.space == "energy":
        s2 = weight.width**2
        return -HBAR * (E - weight.center) / s2, np.full(E.shape, -HBAR / s2)
    s2, p0 = weight.width**2, weight.center
    if weight.dispersion.kind == "photon":
        return -HBAR * (E - p0) / s2, np.full(E.shape, -HBAR / s2)
    p = np.sqrt(2.0 * E)
    # d/dE of -(p - p0)^2/(2 s2) - ln(p)/2, with dp/dE = 1/p
    tg = -(p - p0) / (s2 * p) - 0.5 / p**2
    dtg = -p0 / (s2 * p**3) + 1.0 / p**4
    return HBAR * tg, HBAR * dtg
