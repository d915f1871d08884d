"""Scalar root finders and small dense linear-algebra kernels.

Everything here is vectorized over numpy arrays: the proximity operators call
these routines on whole batches of (eta, y) pairs at once, so each function
accepts scalars or arrays and broadcasts its numeric arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg
import scipy.optimize
from numpy.polynomial import Polynomial

from .errors import ConvergenceError, DomainError, NotSPDError

__all__ = [
    "MonotoneRootProblem",
    "Polynomial",
    "cubic_residual",
    "invert_monotone",
    "power_polynomial",
    "power_psi",
    "safeguarded_newton",
    "solve_depressed_cubic",
    "solve_power_polynomial",
    "spd_solve",
]

_EPS = np.finfo(float).eps


def _cardano(p, q):
    """Largest real root of ``s**3 + p*s + q`` (no validation, vectorized)."""
    p, q = np.broadcast_arrays(np.asarray(p, dtype=float), np.asarray(q, dtype=float))
    p3 = p / 3.0
    h = -0.5 * q
    disc = h * h + p3 * p3 * p3
    trig = (p < 0) & (disc <= 0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # one real root; pick the cube root without cancellation
        sq = np.sqrt(np.where(trig, 0.0, disc))
        w = np.cbrt(h + np.copysign(sq, h))
        safe_w = np.where(w == 0, 1.0, w)
        pos_p = 2.0 * h / (w * w + p3 + p3 * p3 / (safe_w * safe_w))
        one = np.where((p >= 0) & (h > 0), pos_p, w - p3 / safe_w)
        one = np.where(w == 0, 0.0, one)
        t = one
        if trig.any():
            # three real roots: largest one from the trigonometric form
            mp3 = np.where(trig, -p3, 1.0)
            arg = np.clip(h / (mp3 * np.sqrt(mp3)), -1.0, 1.0)
            three = 2.0 * np.sqrt(mp3) * np.cos(np.arccos(arg) / 3.0)
            t = np.where(trig, three, one)
    # one Newton polish; kept only when it lowers the residual
    f = t * t * t + p * t + q
    fp = 3.0 * t * t + p
    with np.errstate(divide="ignore", invalid="ignore"):
        tn = t - f / fp
    fn = tn * tn * tn + p * tn + q
    better = (fp > 0) & np.isfinite(tn) & (np.abs(fn) < np.abs(f))
    return np.where(better, tn, t)


def cubic_residual(t, p, q):
    """Scaled residual ``|t**3 + p t + q| / max(1, |p|, |q|)``."""
    t, p, q = (np.asarray(a, dtype=float) for a in (t, p, q))
    scale = np.maximum(1.0, np.maximum(np.abs(p), np.abs(q)))
    return np.abs(t**3 + p * t + q) / scale


def solve_depressed_cubic(p, q_const):
    """Positive real root of the depressed cubic ``s**3 + p*s + q_const``.

    Uses Cardano's closed form (trigonometric form when the cubic has three
    real roots) followed by one Newton polish. When three real roots exist
    the largest is returned.

    Parameters
    ----------
    p, q_const : float or array_like
        Linear and constant coefficients. Broadcast against each other.

    Returns
    -------
    float or ndarray
        The root, with the shape of the broadcast inputs.

    Raises
    ------
    ValueError
        If any coefficient is not finite.
    DomainError
        If the cubic has no positive root.
    """
    p_arr = np.asarray(p, dtype=float)
    q_arr = np.asarray(q_const, dtype=float)
    if not (np.all(np.isfinite(p_arr)) and np.all(np.isfinite(q_arr))):
        raise ValueError("cubic coefficients must be finite")
    t = _cardano(p_arr, q_arr)
    if np.any(t <= 0):
        raise DomainError("depressed cubic has no positive root")
    return float(t) if t.ndim == 0 else t


def safeguarded_newton(fun, dfun, target, lo, hi, x0=None, max_iter=200, fdf=None):
    """Solve ``fun(x) = target`` on ``[lo, hi]`` by Newton steps with bisection.

    ``fun - target`` must be nonpositive left of the root and nonnegative right
    of it; monotonicity is not required. All arguments broadcast. ``fdf(x)``,
    if given, returns ``(fun(x), dfun(x))`` in one call and replaces both.
    """
    target = np.asarray(target, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    target, lo, hi = np.broadcast_arrays(target, lo, hi)
    lo = lo.copy()
    hi = hi.copy()
    x = 0.5 * (lo + hi) if x0 is None else np.clip(np.broadcast_to(x0, lo.shape), lo, hi)
    x = np.array(x, dtype=float)
    scale = np.maximum(1.0, np.abs(target))
    dx_old = hi - lo
    done = np.zeros(x.shape, dtype=bool)
    if fdf is None:
        def fdf(v):
            return fun(v), None
    for _ in range(max_iter):
        f, d = fdf(x)
        f = f - target
        if not np.all(np.isfinite(f[~done])):
            raise DomainError("function evaluated to a non-finite value")
        lo = np.where(f < 0, x, lo)
        hi = np.where(f > 0, x, hi)
        done |= (np.abs(f) <= 4 * _EPS * scale) | (hi - lo <= 2 * _EPS * np.maximum(1.0, np.abs(hi)))
        if done.all():
            break
        if d is None:
            d = dfun(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = f / d
        xn = x - step
        slow = np.abs(2.0 * f) > np.abs(dx_old * d)
        bisect = ~((xn > lo) & (xn < hi)) | ~np.isfinite(xn) | slow
        xn = np.where(bisect, 0.5 * (lo + hi), xn)
        dx_old = np.where(bisect, 0.5 * (hi - lo), step)
        x = np.where(done, x, xn)
    return x


@dataclass(frozen=True)
class MonotoneRootProblem:
    """Find ``t >= bracket_lo`` with ``function(t) == target``.

    ``function`` must stay at or below ``target`` left of the root and above
    it to the right; strictly increasing functions qualify.
    """

    function: Callable[[float], float]
    target: float
    derivative: Optional[Callable[[float], float]] = None
    bracket_hi: float = 1.0
    bracket_lo: float = 0.0


def invert_monotone(problem: MonotoneRootProblem) -> float:
    """Return ``t`` with ``|psi(t) - target| <= 1e-10 * max(1, |target|)``.

    The upper bracket is doubled until it straddles the target. Newton steps
    are used when a derivative is supplied, Brent's method otherwise.
    """
    psi = problem.function
    target = float(problem.target)
    lo = float(problem.bracket_lo)
    f_lo = float(psi(lo))
    if not math.isfinite(f_lo):
        raise DomainError("psi is not finite at the lower bracket")
    if f_lo > target:
        raise DomainError(f"psi({lo}) = {f_lo} exceeds the target {target}")
    if f_lo == target:
        return lo
    hi = max(float(problem.bracket_hi), lo + 1.0)
    f_hi = float(psi(hi))
    while f_hi < target:
        if not math.isfinite(f_hi):
            raise DomainError("psi is not finite inside the bracket")
        hi *= 2.0
        if hi > 2.0**60:
            raise ConvergenceError("bracket expansion exceeded 2**60")
        f_hi = float(psi(hi))
    if not math.isfinite(f_hi):
        raise DomainError("psi is not finite at the upper bracket")
    if problem.derivative is None:
        t = scipy.optimize.brentq(lambda s: psi(s) - target, lo, hi, xtol=1e-300, rtol=4 * _EPS, maxiter=500)
    else:
        t = float(safeguarded_newton(
            np.vectorize(psi, otypes=[float]),
            np.vectorize(problem.derivative, otypes=[float]),
            target, lo, hi, x0=hi,
        ))
    if abs(psi(t) - target) > 1e-10 * max(1.0, abs(target)):
        raise ConvergenceError(f"root residual {abs(psi(t) - target):.3e} above tolerance")
    return float(t)


def power_psi(s, qstar, shift, rho_const):
    """``psi(s) = (rho s**q*/q* + shift) rho s**(q*-1) + s`` and its derivative."""
    s = np.asarray(s, dtype=float)
    sq1 = s ** (qstar - 1.0)
    conj = rho_const * sq1 * s / qstar
    val = (conj + shift) * rho_const * sq1 + s
    with np.errstate(divide="ignore", invalid="ignore"):
        dsq1 = np.where(s > 0, (qstar - 1.0) * sq1 / s, 0.0 if qstar > 2 else np.inf)
    deriv = (rho_const * sq1) ** 2 + (conj + shift) * rho_const * dsq1 + 1.0
    return val, deriv


def solve_power_polynomial(qstar, eta_shift, gamma, rho_const, rhs_norm, x0=None):
    """Positive root of ``s^(2q*-1) + a s^(q*-1) + b s - c = 0``.

    Here ``a = q* eta_shift / (gamma rho)``, ``b = q*/rho**2`` and
    ``c = q* rhs_norm / (gamma rho**2)``. Dividing through by ``b`` gives the
    equivalent form ``psi(s) = rhs_norm/gamma`` with ``psi`` from
    :func:`power_psi`, which is what gets solved for ``q* != 2``; ``q* == 2``
    is a depressed cubic handled by Cardano's formula.

    The caller must ensure ``q* gamma^(q*-1) eta_shift + rho rhs_norm^q* > 0``
    and ``rhs_norm > 0``. ``eta_shift`` and ``rhs_norm`` may be arrays; ``x0``
    optionally warm-starts the Newton iteration.
    """
    qstar = float(qstar)
    if qstar <= 1:
        raise ValueError("q* must exceed 1")
    eta_shift = np.asarray(eta_shift, dtype=float)
    rhs_norm = np.asarray(rhs_norm, dtype=float)
    if qstar == 2.0:
        p = 2.0 * eta_shift / (gamma * rho_const) + 2.0 / rho_const**2
        q = -2.0 * rhs_norm / (gamma * rho_const**2)
        t = _cardano(p, q)
        return float(t) if t.ndim == 0 else t
    shift = eta_shift / gamma
    target = rhs_norm / gamma
    # below s0 the perspective scale would be nonpositive, so the root lies above it
    s0 = (np.maximum(-shift, 0.0) * qstar / rho_const) ** (1.0 / qstar)
    lo = np.minimum(s0, target)

    def fdf(s):
        return power_psi(s, qstar, shift, rho_const)

    t = safeguarded_newton(None, None, target, lo, target, x0=target if x0 is None else x0, fdf=fdf)
    return float(t) if t.ndim == 0 else t


def power_polynomial(qstar, eta_shift, gamma, rho_const, rhs_norm) -> Polynomial:
    """The root equation of :func:`solve_power_polynomial` as a polynomial.

    Only defined for integer ``q*``; coefficients are in ascending degree.
    """
    if float(qstar) != int(qstar) or qstar < 2:
        raise ValueError("polynomial form needs an integer q* >= 2")
    k = int(qstar)
    coef = np.zeros(2 * k)
    coef[0] = -k * rhs_norm / (gamma * rho_const**2)
    coef[1] += k / rho_const**2
    coef[k - 1] += k * eta_shift / (gamma * rho_const)
    coef[2 * k - 1] = 1.0
    return Polynomial(coef)


def spd_solve(A, B):
    """Solve ``A X = B`` for symmetric positive definite ``A`` via Cholesky."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] != B.shape[0]:
        raise ValueError(f"incompatible shapes {A.shape} and {B.shape}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
        raise ValueError("spd_solve needs finite entries")
    if not np.allclose(A, A.T, rtol=1e-12, atol=1e-12 * np.abs(A).max(initial=1.0)):
        raise NotSPDError("matrix is not symmetric")
    try:
        factor = scipy.linalg.cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotSPDError(str(exc)) from exc
    return scipy.linalg.cho_solve(factor, B, check_finite=False)
