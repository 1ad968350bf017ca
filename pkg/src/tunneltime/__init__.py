"""Tunneling and traversal times of finite wavepackets from the presence-time operator."""
from . import kernels
from .presence_time import (
    TimeEstimate,
    free_presence_time,
    free_uncertainty,
    momentum_average_time,
    narrow_limit_time,
    time_domain_presence_time,
    transmission_channel,
    tunneling_time,
    tunneling_time_second_order,
    tunneling_uncertainty,
)
from .scattering import (
    FreeSpace,
    LayeredStack,
    RectangularBarrier,
    ScatteringChannel,
    characteristic_times,
    point_times,
    quasimomentum,
    rect_barrier_amplitude,
    stack_amplitude,
    transfer_matrix_amplitude,
    unwrap_phase,
)
from .spectral import EnergyGrid, SpectralWeight, classical_time, gaussian_weight, tau_G

__version__ = "0.1.0"
BACKEND = kernels.BACKEND
