"""NumPy implementations of the compiled kernels, used when the extension is unavailable."""
import numpy as np

_CHUNK = 2_000_000


def synthesize(y, t, k, energy, amp, y_ref):
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    k = np.asarray(k, dtype=float)
    energy = np.asarray(energy, dtype=float)
    amp = np.asarray(amp, dtype=complex)
    out = np.empty((t.size, y.size), dtype=complex)
    step = max(1, _CHUNK // max(k.size, 1))
    for n, tn in enumerate(t):
        c = amp * np.exp(-1j * energy * tn)
        for j0 in range(0, y.size, step):
            yr = y[j0:j0 + step] - y_ref
            out[n, j0:j0 + step] = np.exp(1j * np.outer(yr, k)) @ c
    return out


def transfer_amplitude(k_layers, widths, k_out, k_in):
    k_layers = np.asarray(k_layers, dtype=complex)
    widths = np.asarray(widths, dtype=float)
    k_out = np.asarray(k_out, dtype=complex)
    k_in = np.asarray(k_in, dtype=complex)
    psi = np.ones(k_out.shape, dtype=complex)
    dpsi = 1j * k_out
    for m in range(widths.size - 1, -1, -1):
        kk = k_layers[:, m]
        d = widths[m]
        c = np.cos(kk * d)
        small = np.abs(kk) * d < 1e-8
        safe = np.where(small, 1.0, kk)
        s_k = np.where(small, d, np.sin(safe * d) / safe)
        psi, dpsi = psi * c - dpsi * s_k, psi * kk * kk * s_k + dpsi * c
    return 2.0 / (psi + dpsi / (1j * k_in))
