"""Pure-numpy reference implementations of the hot numeric kernels.

Everything works on real G/B parts of the admittance matrix and on full
bus-level voltage arrays (slack included); state bookkeeping lives in the
callers.
"""

from __future__ import annotations

import numpy as np


def bus_injections(g, b, vm, va):
    """Per-bus active/reactive power injections, per-unit."""
    v = vm * np.exp(1j * va)
    s = v * np.conj((g + 1j * b) @ v)
    return np.ascontiguousarray(s.real), np.ascontiguousarray(s.imag)


def injection_jacobian(g, b, vm, va):
    """Partials of (P, Q) at every bus w.r.t. every bus angle/magnitude.

    Returns (dp_dth, dp_dv, dq_dth, dq_dv), each n x n.
    """
    y = g + 1j * b
    v = vm * np.exp(1j * va)
    ibus = y @ v
    diag_v = np.diag(v)
    diag_i = np.diag(ibus)
    diag_vnorm = np.diag(v / vm)

    ds_dva = 1j * diag_v @ np.conj(diag_i - y @ diag_v)
    ds_dvm = diag_v @ np.conj(y @ diag_vnorm) + np.conj(diag_i) @ diag_vnorm
    return (
        np.ascontiguousarray(ds_dva.real),
        np.ascontiguousarray(ds_dvm.real),
        np.ascontiguousarray(ds_dva.imag),
        np.ascontiguousarray(ds_dvm.imag),
    )


def branch_flows(vm, va, ib, jb, gs, bs, bsh):
    """(P, Q) flow into each listed branch, metered at bus ``ib``.

    gs + j*bs is the series admittance; bsh the shunt susceptance hung at
    the metered end (half the total line charging).
    """
    vi, vj = vm[ib], vm[jb]
    th = va[ib] - va[jb]
    c, s = np.cos(th), np.sin(th)
    p = vi**2 * gs - vi * vj * (gs * c + bs * s)
    q = -(vi**2) * (bs + bsh) - vi * vj * (gs * s - bs * c)
    return p, q


def branch_flow_jacobian(vm, va, ib, jb, gs, bs, bsh):
    """Partials of each branch flow w.r.t. its two terminal states.

    Returns eight arrays: (dp_dthi, dp_dthj, dp_dvi, dp_dvj,
    dq_dthi, dq_dthj, dq_dvi, dq_dvj).
    """
    vi, vj = vm[ib], vm[jb]
    th = va[ib] - va[jb]
    c, s = np.cos(th), np.sin(th)
    a = gs * c + bs * s
    d = gs * s - bs * c

    dp_dthi = vi * vj * d
    dp_dthj = -dp_dthi
    dp_dvi = 2.0 * vi * gs - vj * a
    dp_dvj = -vi * a

    dq_dthi = -vi * vj * a
    dq_dthj = -dq_dthi
    dq_dvi = -2.0 * vi * (bs + bsh) - vj * d
    dq_dvj = -vi * d
    return dp_dthi, dp_dthj, dp_dvi, dp_dvj, dq_dthi, dq_dthj, dq_dvi, dq_dvj
