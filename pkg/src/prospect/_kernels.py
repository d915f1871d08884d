"""Compiled inner loop for batches of signed TREX subproblems.

Row by row this runs the same composite Douglas-Rachford sweep as
:func:`prospect.solvers.dr_composite` with the TREX projector and proxes, so
it only saves interpreter overhead. It is used when numba is importable and
the relaxation is constant.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None

_EPS = float(np.finfo(float).eps)
APEX_TOL = 1e-12

AVAILABLE = njit is not None


def _jit(fn=None, **opts):
    if fn is None:
        return lambda f: _jit(f, **opts)
    return njit(cache=True, nogil=True, **opts)(fn) if AVAILABLE else fn


# reassociation lets the dot products vectorize; no finite-math assumptions
_DOT_FLAGS = {"reassoc", "contract"}


@_jit
def _cubic_root(p, q):
    # scalar twin of numerics._cardano
    p3 = p / 3.0
    h = -0.5 * q
    disc = h * h + p3 * p3 * p3
    if p < 0 and disc <= 0:
        mp3 = -p3
        arg = min(max(h / (mp3 * math.sqrt(mp3)), -1.0), 1.0)
        t = 2.0 * math.sqrt(mp3) * math.cos(math.acos(arg) / 3.0)
    else:
        s = math.copysign(math.sqrt(disc), h)
        w = np.cbrt(h + s)
        if w == 0:
            t = 0.0
        elif p >= 0 and h > 0:
            t = 2.0 * h / (w * w + p3 + p3 * p3 / (w * w))
        else:
            t = w - p3 / w
    f = t * t * t + p * t + q
    fp = 3.0 * t * t + p
    if fp > 0:
        tn = t - f / fp
        if math.isfinite(tn) and abs(tn * tn * tn + p * tn + q) < abs(f):
            return tn
    return t


@_jit
def _power_root(qstar, rho, shift, target, x0):
    # scalar twin of numerics.solve_power_polynomial for q* != 2
    s0 = (max(-shift, 0.0) * qstar / rho) ** (1.0 / qstar)
    lo = min(s0, target)
    hi = target
    x = x0 if math.isfinite(x0) else target
    x = min(max(x, lo), hi)
    scale = max(1.0, abs(target))
    dx_old = hi - lo
    for _ in range(200):
        sq1 = x ** (qstar - 1.0)
        conj = rho * sq1 * x / qstar
        f = (conj + shift) * rho * sq1 + x - target
        if f < 0:
            lo = x
        elif f > 0:
            hi = x
        if abs(f) <= 4 * _EPS * scale or hi - lo <= 2 * _EPS * max(1.0, abs(hi)):
            break
        if x > 0:
            dsq1 = (qstar - 1.0) * sq1 / x
        else:
            dsq1 = 0.0 if qstar > 2 else math.inf
        d = (rho * sq1) ** 2 + (conj + shift) * rho * dsq1 + 1.0
        step = f / d
        xn = x - step
        if not (xn > lo and xn < hi) or not math.isfinite(xn) or abs(2.0 * f) > abs(dx_old * d):
            xn = 0.5 * (lo + hi)
            dx_old = 0.5 * (hi - lo)
        else:
            dx_old = step
        x = xn
    return x


@_jit(fastmath=_DOT_FLAGS)
def _project(x, y, X, Ainv, K, wrow, urow, den, r, u, xr, b, c):
    """``b = (I + M^T M)^{-1} (x + M^T y)`` and ``c = M b`` for one row."""
    n, p = X.shape
    for k in range(p):
        r[k] = x[k] + wrow[k] * y[0]
    for i in range(n):
        yi = y[1 + i]
        for k in range(p):
            r[k] += X[i, k] * yi
    if K.shape[0] > 0:
        # Woodbury: (I + X^T X)^{-1} = I - X^T K X with K = (I + X X^T)^{-1}
        for i in range(n):
            acc = 0.0
            for k in range(p):
                acc += X[i, k] * r[k]
            xr[i] = acc
        for k in range(p):
            u[k] = r[k]
        for i in range(n):
            acc = 0.0
            for l in range(n):
                acc += K[i, l] * xr[l]
            for k in range(p):
                u[k] -= X[i, k] * acc
    else:
        for k in range(p):
            acc = 0.0
            for l in range(p):
                acc += Ainv[k, l] * r[l]
            u[k] = acc
    wu = 0.0
    for k in range(p):
        wu += wrow[k] * u[k]
    coef = wu / den
    c0 = 0.0
    for k in range(p):
        b[k] = u[k] - urow[k] * coef
        c0 += wrow[k] * b[k]
    c[0] = c0
    for i in range(n):
        acc = 0.0
        for k in range(p):
            acc += X[i, k] * b[k]
        c[1 + i] = acc


@_jit
def _prox_g(v, s0, z, gamma, q, alpha, qstar, rho, root, out):
    """Prox of the shifted perspective ``g_j``; returns the updated root guess."""
    n = z.shape[0]
    eta = v[0] - s0
    nw2 = 0.0
    for i in range(n):
        d = v[1 + i] - z[i]
        nw2 += d * d
    nw = math.sqrt(nw2)
    if q == 2.0:
        gate = 4.0 * gamma * eta + alpha * nw * nw <= 0.0
    else:
        gate = eta + gamma * (rho * (nw / gamma) ** qstar / qstar) <= 0.0
    apex = nw < APEX_TOL
    t = 0.0
    if not (gate or apex):
        if q == 2.0:
            pc = (4.0 * alpha * eta + 8.0 * gamma) / (alpha * alpha * gamma)
            qc = -8.0 * nw / (alpha * alpha * gamma)
            t = _cubic_root(pc, qc)
        else:
            t = _power_root(qstar, rho, eta / gamma, nw / gamma, root)
            if t > 0:
                root = t
    if gate:
        out[0] = s0
    else:
        conj_t = 0.25 * alpha * t * t if q == 2.0 else rho * t ** qstar / qstar
        out[0] = max(eta + gamma * conj_t, 0.0) + s0
    shrink = 0.0 if (gate or apex) else 1.0 - gamma * t / nw
    for i in range(n):
        out[1 + i] = shrink * (v[1 + i] - z[i]) + z[i]
    return root


@_jit
def run_rows(rows, xs, ys, bs, cs, its, conv, roots, X, z, Ainv, K, W, U, den, shift0,
             q, alpha, gamma, mu, tol, budget):
    """Advance each listed row until ``min(||db||, ||dy||) <= tol`` or the budget."""
    n, p = X.shape
    qstar = q / (q - 1.0) if q != 2.0 else 2.0
    rho = (alpha * (1.0 - 1.0 / qstar)) ** (qstar - 1.0)
    r = np.empty(p)
    u = np.empty(p)
    bn = np.empty(p)
    xr = np.empty(n)
    vh = np.empty(p)
    vg = np.empty(n + 1)
    tg = np.empty(n + 1)
    for idx in range(rows.shape[0]):
        i = rows[idx]
        x, y, b, c = xs[i], ys[i], bs[i], cs[i]
        k = its[i]
        root = roots[i]
        while k < budget:
            for l in range(p):
                v = 2.0 * b[l] - x[l]
                a = abs(v) - gamma
                vh[l] = math.copysign(a, v) if a > 0 else 0.0
            for l in range(n + 1):
                vg[l] = 2.0 * c[l] - y[l]
            root = _prox_g(vg, shift0[i], z, gamma, q, alpha, qstar, rho, root, tg)
            dy2 = 0.0
            for l in range(n + 1):
                d = mu * (tg[l] - c[l])
                y[l] += d
                dy2 += d * d
            for l in range(p):
                x[l] += mu * (vh[l] - b[l])
            _project(x, y, X, Ainv, K, W[i], U[i], den[i], r, u, xr, bn, c)
            db2 = 0.0
            for l in range(p):
                d = bn[l] - b[l]
                db2 += d * d
                b[l] = bn[l]
            k += 1
            if min(math.sqrt(db2), math.sqrt(dy2)) <= tol:
                conv[i] = True
                break
        its[i] = k
        roots[i] = root
