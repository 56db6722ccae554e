"""Compiled inner loop of the closed-loop simulation.

One call advances the plant and oscillator over a stretch of control ticks
during which every parameter is constant. All arrays are preallocated by the
caller; ``x`` and ``z`` are updated in place.
"""

import numpy as np
from numba import njit

ZOH = 0
RK4 = 1


@njit(cache=True)
def run_segment(
    x, z, k0, n,
    phi, gd, rot, pi, srow, pmat,
    a, b, mode, substeps, h, ceiling,
    err_fine, e2_fine, lyap_fine, keep_fine,
    dec, rec_vc, rec_il, rec_vr, rec_ir, rec_u, rec_lv,
    seg_v, seg_i, keep_seg,
):
    x1 = x[0]
    x2 = x[1]
    z1 = z[0]
    z2 = z[1]
    p11 = pmat[0]
    p12 = pmat[1]
    p22 = pmat[2]
    hs = h / substeps
    for j in range(n):
        k = k0 + j
        r1 = pi[0, 0] * z1 + pi[0, 1] * z2
        r2 = pi[1, 0] * z1 + pi[1, 1] * z2
        e1 = x1 - r1
        e2 = x2 - r2
        s = srow[0] * e1 + srow[1] * e2
        u = -1.0 if s >= 0.0 else 1.0
        v = p11 * e1 * e1 + 2.0 * p12 * e1 * e2 + p22 * e2 * e2

        err_fine[k] = e1
        if keep_fine:
            e2_fine[k] = e2
            lyap_fine[k] = v
        if keep_seg:
            seg_v[j] = x1
            seg_i[j] = x2
        if k % dec == 0:
            row = k // dec
            rec_vc[row] = x1
            rec_il[row] = x2
            rec_vr[row] = r1
            rec_ir[row] = r2
            rec_u[row] = u
            rec_lv[row] = v

        if mode == ZOH:
            y1 = phi[0, 0] * x1 + phi[0, 1] * x2 + gd[0] * u
            y2 = phi[1, 0] * x1 + phi[1, 1] * x2 + gd[1] * u
        else:
            y1 = x1
            y2 = x2
            f1 = b[0] * u
            f2 = b[1] * u
            for _ in range(substeps):
                k11 = a[0, 0] * y1 + a[0, 1] * y2 + f1
                k12 = a[1, 0] * y1 + a[1, 1] * y2 + f2
                t1 = y1 + 0.5 * hs * k11
                t2 = y2 + 0.5 * hs * k12
                k21 = a[0, 0] * t1 + a[0, 1] * t2 + f1
                k22 = a[1, 0] * t1 + a[1, 1] * t2 + f2
                t1 = y1 + 0.5 * hs * k21
                t2 = y2 + 0.5 * hs * k22
                k31 = a[0, 0] * t1 + a[0, 1] * t2 + f1
                k32 = a[1, 0] * t1 + a[1, 1] * t2 + f2
                t1 = y1 + hs * k31
                t2 = y2 + hs * k32
                k41 = a[0, 0] * t1 + a[0, 1] * t2 + f1
                k42 = a[1, 0] * t1 + a[1, 1] * t2 + f2
                y1 = y1 + hs / 6.0 * (k11 + 2.0 * k21 + 2.0 * k31 + k41)
                y2 = y2 + hs / 6.0 * (k12 + 2.0 * k22 + 2.0 * k32 + k42)
        x1 = y1
        x2 = y2
        w1 = rot[0, 0] * z1 + rot[0, 1] * z2
        w2 = rot[1, 0] * z1 + rot[1, 1] * z2
        z1 = w1
        z2 = w2
        if not (abs(x1) <= ceiling):
            x[0] = x1
            x[1] = x2
            z[0] = z1
            z[1] = z2
            return j + 1, True
    x[0] = x1
    x[1] = x2
    z[0] = z1
    z[1] = z2
    return n, False


def empty():
    return np.zeros(0)
