"""Compiled right-hand sides and fixed-step RK4 loops.

Parameters travel as a float64 vector ordered like ``core.PARAM_NAMES``:
``[beta1, beta2, gamma1, gamma2, sigma1, sigma2, epsilon, n_pop]``.
``error_model='numpy'`` drops numba's zero-division checks so the batch
loop vectorizes; divisions here never hit zero for valid parameters.
"""
import math

import numpy as np
from numba import njit

FULL = 0
REDUCED = 1

_JIT = dict(cache=True, error_model="numpy")


@njit(**_JIT)
def omega(i2, r2, prm):
    b1, b2, g1, s1, eps, n = prm[0], prm[1], prm[2], prm[4], prm[6], prm[7]
    if b1 <= 0.0:
        return 0.0
    # max(.., 0) is exactly the switch: the first factor is positive iff
    # I2 + eps*R2 < N(1 - 1/R1).
    num = n * (b1 - g1) - b1 * (i2 + eps * r2)
    if num <= 0.0:
        return 0.0
    p = b2 * i2 + n * s1
    return num * p / (b1 * (p + n * g1))


@njit(**_JIT)
def full_rhs(y, prm, out):
    s, i1, r1, i2, r2 = y[0], y[1], y[2], y[3], y[4]
    b1, b2, g1, g2, s1, s2, eps, n = prm[0], prm[1], prm[2], prm[3], prm[4], prm[5], prm[6], prm[7]
    inf1 = b1 / n * i1 * (s + (1.0 - eps) * r2)
    inf2 = b2 / n * i2 * (s + r1)
    out[0] = -s / n * (b1 * i1 + b2 * i2) + s1 * r1 + s2 * r2
    out[1] = inf1 - g1 * i1
    out[2] = g1 * i1 - s1 * r1 - b2 / n * r1 * i2
    out[3] = inf2 - g2 * i2
    out[4] = g2 * i2 - s2 * r2 - b1 / n * (1.0 - eps) * r2 * i1


@njit(**_JIT)
def reduced_rhs(y, prm, out):
    i2, r2 = y[0], y[1]
    b1, b2, g2, s2, eps, n = prm[0], prm[1], prm[3], prm[5], prm[6], prm[7]
    w = omega(i2, r2, prm)
    out[0] = b2 / n * (n - w - i2 - r2) * i2 - g2 * i2
    out[1] = g2 * i2 - s2 * r2 - b1 / n * (1.0 - eps) * w * r2


@njit(**_JIT)
def _deriv(system, y, prm, out):
    if system == FULL:
        full_rhs(y, prm, out)
    else:
        reduced_rhs(y, prm, out)


@njit(**_JIT)
def rk4(system, y0, prm, t0, t1, h, store):
    """Classical RK4 from t0 to t1 with a shortened final step.

    Returns ``(times, values, bad)`` where ``bad`` is the index of the first
    non-finite state or -1.  With ``store`` false only the endpoints are kept.
    """
    dim = y0.shape[0]
    span = t1 - t0
    n_full = int(math.floor(span / h + 1e-9))
    rem = span - n_full * h
    n_steps = n_full + (1 if rem > 1e-9 * h else 0)
    n_rows = n_steps + 1 if store else 2

    times = np.empty(n_rows)
    values = np.empty((n_rows, dim))
    clamp = -1e-12 * prm[7]

    y = y0.copy()
    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    tmp = np.empty(dim)
    times[0] = t0
    values[0] = y
    for k in range(n_steps):
        dt = h if k < n_full else rem
        _deriv(system, y, prm, k1)
        for j in range(dim):
            tmp[j] = y[j] + 0.5 * dt * k1[j]
        _deriv(system, tmp, prm, k2)
        for j in range(dim):
            tmp[j] = y[j] + 0.5 * dt * k2[j]
        _deriv(system, tmp, prm, k3)
        for j in range(dim):
            tmp[j] = y[j] + dt * k3[j]
        _deriv(system, tmp, prm, k4)
        finite = True
        for j in range(dim):
            v = y[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            if not math.isfinite(v):
                finite = False
            elif clamp <= v < 0.0:
                v = 0.0
            y[j] = v
        t = t1 if k == n_steps - 1 else t0 + (k + 1) * h
        row = k + 1 if store else 1
        times[row] = t
        values[row] = y
        if not finite:
            return times[: row + 1], values[: row + 1], row
    if not store and n_steps == 0:
        times[1] = t0
        values[1] = y
    return times, values, -1


@njit(**_JIT)
def rk4_reduced_batch(i2, r2, prm, h, n_steps):
    """Advance many reduced-model states in lockstep, in place.

    Returns the largest excursion outside the triangle
    ``I2, R2 >= 0, I2 + R2 <= N`` seen at any step, per trajectory, measured
    on the raw RK4 update before clamping.
    """
    m = i2.shape[0]
    b1, b2, g1, g2, s1, s2, eps, n = prm[0], prm[1], prm[2], prm[3], prm[4], prm[5], prm[6], prm[7]
    if b1 > 0.0:
        c1 = n * (b1 - g1)
        inv_b1 = 1.0 / b1
    else:
        c1 = -1.0
        inv_b1 = 0.0
    ng1 = n * g1
    ns1 = n * s1
    k2c = b2 / n
    k1c = b1 * (1.0 - eps) / n
    clamp = -1e-12 * n
    worst = np.full(m, -np.inf)
    for _ in range(n_steps):
        for j in range(m):
            x = i2[j]
            y = r2[j]
            p = b2 * x + ns1
            w = max(c1 - b1 * (x + eps * y), 0.0) * p * inv_b1 / (p + ng1)
            a1 = k2c * (n - w - x - y) * x - g2 * x
            d1 = g2 * x - s2 * y - k1c * w * y
            xx = x + 0.5 * h * a1
            yy = y + 0.5 * h * d1
            p = b2 * xx + ns1
            w = max(c1 - b1 * (xx + eps * yy), 0.0) * p * inv_b1 / (p + ng1)
            a2 = k2c * (n - w - xx - yy) * xx - g2 * xx
            d2 = g2 * xx - s2 * yy - k1c * w * yy
            xx = x + 0.5 * h * a2
            yy = y + 0.5 * h * d2
            p = b2 * xx + ns1
            w = max(c1 - b1 * (xx + eps * yy), 0.0) * p * inv_b1 / (p + ng1)
            a3 = k2c * (n - w - xx - yy) * xx - g2 * xx
            d3 = g2 * xx - s2 * yy - k1c * w * yy
            xx = x + h * a3
            yy = y + h * d3
            p = b2 * xx + ns1
            w = max(c1 - b1 * (xx + eps * yy), 0.0) * p * inv_b1 / (p + ng1)
            a4 = k2c * (n - w - xx - yy) * xx - g2 * xx
            d4 = g2 * xx - s2 * yy - k1c * w * yy
            x = x + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
            y = y + h / 6.0 * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
            worst[j] = max(worst[j], max(max(-x, -y), x + y - n))
            # branch-free clamp keeps the loop vectorizable
            x = max(x, 0.0) if x >= clamp else x
            y = max(y, 0.0) if y >= clamp else y
            i2[j] = x
            r2[j] = y
    return worst
