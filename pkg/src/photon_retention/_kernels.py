"""Compiled inner loops.

``rk4_march`` is generic over the right-hand side: it is used both for the
effective three-level equations and for the four-level oracle that keeps the
intermediate level explicitly. Drive samples are linearly interpolated at the
RK midpoints, i.e. the midpoint value is the mean of the two neighbours.
"""

import numpy as np
from numba import njit

# parameter vector layout for rhs_three_level
P_GAX, P_GBA, P_GBX, P_GA, P_GB, P_RATIO, P_DELTA, P_STARK_SIGN = range(8)


@njit(cache=True)
def rhs_three_level(y, d, p, out):
    # d = [omega1 (A-X Rabi), omega_s (B-X Rabi), omega_BI (read Rabi)]
    w1 = d[0]
    ws = d[1]
    w_ia = p[P_RATIO] * w1
    w_bi = d[2]
    tp = w_bi * w_ia / p[P_DELTA]
    stark = p[P_STARK_SIGN] * ((w_bi.real**2 + w_bi.imag**2) - (w_ia.real**2 + w_ia.imag**2)) / p[P_DELTA]

    aa = y[0].real
    bb = y[1].real
    ax = y[2]
    ba = y[3]
    bx = y[4]
    xx = 1.0 - aa - bb
    ab = ba.conjugate()
    xa = ax.conjugate()
    xb = bx.conjugate()

    out[2] = -p[P_GAX] * ax + 1j * w1 * (xx - aa) - 1j * ws * ab
    out[3] = (-p[P_GBA] + 1j * stark) * ba + 1j * tp * (aa - bb) - 1j * w1.conjugate() * bx + 1j * ws * xa
    out[4] = -p[P_GBX] * bx + 1j * ws * (xx - bb) - 1j * w1 * ba
    out[1] = -p[P_GB] * bb + 2.0 * (1j * tp * ab + 1j * ws * xb).real
    out[0] = -p[P_GA] * aa + 2.0 * (-1j * tp * ab + 1j * w1 * xa).real


@njit(cache=True)
def rhs_four_level(y, d, p, out):
    # levels X=0, A=1, I=2, B=3; y is the row-major 4x4 density matrix
    # d = [w_AX, w_IA, w_BI, w_BX]
    # p = [delta, gamma_A, gamma_B, Gamma_AX, Gamma_BA, Gamma_BX, Gamma_I, pin_IX]
    h = np.zeros((4, 4), dtype=np.complex128)
    h[2, 2] = p[0]
    h[1, 0] = -d[0]
    h[2, 1] = -d[1]
    h[3, 2] = -d[2]
    h[3, 0] = -d[3]
    h[0, 1] = -d[0].conjugate()
    h[1, 2] = -d[1].conjugate()
    h[2, 3] = -d[2].conjugate()
    h[0, 3] = -d[3].conjugate()
    rho = y.reshape((4, 4))
    comm = -1j * (h @ rho - rho @ h)
    ga = p[1]
    gb = p[2]
    comm[1, 1] -= ga * rho[1, 1]
    comm[3, 3] -= gb * rho[3, 3]
    comm[0, 0] += ga * rho[1, 1] + gb * rho[3, 3]
    # dephasing of each coherence (i > j), mirrored onto (j, i)
    rates = np.zeros((4, 4))
    rates[1, 0] = p[3]
    rates[3, 1] = p[4]
    rates[3, 0] = p[5]
    rates[2, 0] = p[6]
    rates[2, 1] = p[6]
    rates[3, 2] = p[6]
    for i in range(4):
        for j in range(i):
            comm[i, j] -= rates[i, j] * rho[i, j]
            comm[j, i] -= rates[i, j] * rho[j, i]
    if p[7] != 0.0:
        comm[2, 0] = 0.0
        comm[0, 2] = 0.0
    out[:] = comm.ravel()


@njit(cache=True)
def rk4_march(rhs, y0, drive, p, dt, hist):
    """Fill ``hist[n]`` with the state at sample n; returns first non-finite index or -1."""
    nt = drive.shape[0]
    n = y0.shape[0]
    y = y0.copy()
    k1 = np.empty(n, dtype=np.complex128)
    k2 = np.empty(n, dtype=np.complex128)
    k3 = np.empty(n, dtype=np.complex128)
    k4 = np.empty(n, dtype=np.complex128)
    tmp = np.empty(n, dtype=np.complex128)
    dmid = np.empty(drive.shape[1], dtype=np.complex128)
    hist[0, :] = y
    for i in range(nt - 1):
        d0 = drive[i]
        d1 = drive[i + 1]
        for m in range(dmid.shape[0]):
            dmid[m] = 0.5 * (d0[m] + d1[m])
        rhs(y, d0, p, k1)
        for m in range(n):
            tmp[m] = y[m] + 0.5 * dt * k1[m]
        rhs(tmp, dmid, p, k2)
        for m in range(n):
            tmp[m] = y[m] + 0.5 * dt * k2[m]
        rhs(tmp, dmid, p, k3)
        for m in range(n):
            tmp[m] = y[m] + dt * k3[m]
        rhs(tmp, d1, p, k4)
        bad = False
        for m in range(n):
            y[m] = y[m] + dt / 6.0 * (k1[m] + 2.0 * k2[m] + 2.0 * k3[m] + k4[m])
            if not (np.isfinite(y[m].real) and np.isfinite(y[m].imag)):
                bad = True
        hist[i + 1, :] = y
        if bad:
            return i + 1
    return -1


@njit(cache=True)
def pinned_history(y0, nt, hist):
    for i in range(nt):
        hist[i, :] = y0
    return -1
