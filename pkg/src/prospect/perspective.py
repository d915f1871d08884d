"""Proximity operators of perspective functions.

The perspective of ``phi`` is ``(eta, y) -> eta * phi(y / eta)`` for
``eta > 0``, the recession function of ``phi`` at ``eta = 0`` and ``+inf``
for ``eta < 0``. Every operator below returns ``prox_{gamma phi~}(eta, y)``
as a :class:`~prospect.prox.ScaledPair` and accepts batches (see
:mod:`prospect.prox` for the shape convention).

Radially symmetric bases reduce to a scalar root problem
``psi(t) = ||y/gamma - v||`` with
``psi(s) = (phi0*(s) + eta/gamma - delta) phi0*'(s) + s``; the root is
bracketed in ``[0, ||y/gamma - v||]`` and found by safeguarded Newton,
Cardano's formula or the power-law equation depending on the base.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .numerics import _cardano, safeguarded_newton, solve_power_polynomial
from .prox import ScaledPair, as_pair, as_step

__all__ = [
    "HuberSpec",
    "PowerSpec",
    "RadialSpec",
    "VapnikSpec",
    "prox_closed_domain_ray",
    "prox_perspective_distance_ball",
    "prox_perspective_huber",
    "prox_perspective_orthant",
    "prox_perspective_power",
    "prox_perspective_quadratic",
    "prox_perspective_radial",
    "prox_perspective_sqrt",
    "prox_perspective_sqrt_cone",
    "prox_perspective_vapnik",
    "prox_separable_perspective",
]

# below this norm of y - gamma v the radial direction is undefined: t = 0
APEX_TOL = 1e-12


def _vec(v, d):
    if v is None:
        return np.zeros(d)
    v = np.asarray(v, dtype=float).ravel()
    if v.size == 1 and d != 1:
        raise ValueError(f"v has length 1 but y has dimension {d}")
    if v.size != d:
        raise ValueError(f"v has length {v.size} but y has dimension {d}")
    return v


@dataclass(frozen=True)
class RadialSpec:
    """Base function ``phi = phi0(||.||) + delta + <., v>``.

    ``phi0_conj`` and ``phi0_conj_deriv`` evaluate ``phi0*`` and its
    derivative on arrays of nonnegative reals; both must vanish at 0.
    """

    phi0_conj: Callable[[np.ndarray], np.ndarray]
    phi0_conj_deriv: Callable[[np.ndarray], np.ndarray]
    delta: float = 0.0
    v: Optional[np.ndarray] = None

    def __post_init__(self):
        c0 = float(np.asarray(self.phi0_conj(np.zeros(1)))[0])
        d0 = float(np.asarray(self.phi0_conj_deriv(np.zeros(1)))[0])
        if abs(c0) > 1e-12 or abs(d0) > 1e-12:
            raise ValueError("phi0* and its derivative must vanish at 0")
        s = np.linspace(0.0, 4.0, 9)
        if np.any(np.diff(np.asarray(self.phi0_conj_deriv(s), dtype=float)) < -1e-12):
            raise ValueError("phi0*' must be nondecreasing (phi0* convex)")
        if not math.isfinite(self.delta):
            raise ValueError("delta must be finite")

    def conj(self, u):
        """``phi*(u) = phi0*(||u - v||) - delta``."""
        u = np.asarray(u, dtype=float)
        s = np.linalg.norm(u - _vec(self.v, u.shape[-1]), axis=-1)
        return self.phi0_conj(s) - self.delta


@dataclass(frozen=True)
class PowerSpec:
    """``phi(y) = ||y||**q / alpha + delta + <y, v>`` with ``q > 1``."""

    q: float
    alpha: float
    delta: float = 0.0
    v: Optional[np.ndarray] = None
    qstar: float = field(init=False)
    rho_const: float = field(init=False)

    def __post_init__(self):
        q, alpha = float(self.q), float(self.alpha)
        if not q > 1:
            raise ValueError(f"q must exceed 1, got {q}")
        if not (alpha > 0 and math.isfinite(alpha)):
            raise ValueError(f"alpha must be positive, got {alpha}")
        qstar = q / (q - 1.0)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "qstar", qstar)
        object.__setattr__(self, "rho_const", (alpha * (1.0 - 1.0 / qstar)) ** (qstar - 1.0))

    def phi0_conj(self, s):
        return self.rho_const * np.abs(s) ** self.qstar / self.qstar

    def phi0_conj_deriv(self, s):
        return self.rho_const * np.abs(s) ** (self.qstar - 1.0) * np.sign(s)

    def as_radial(self) -> RadialSpec:
        return RadialSpec(self.phi0_conj, self.phi0_conj_deriv, self.delta, self.v)

    def conj(self, u):
        u = np.asarray(u, dtype=float)
        s = np.linalg.norm(u - _vec(self.v, u.shape[-1]), axis=-1)
        return self.phi0_conj(s) - self.delta


@dataclass(frozen=True)
class HuberSpec:
    """Huber function with knee ``rho``."""

    rho: float

    def __post_init__(self):
        if not (self.rho > 0 and math.isfinite(self.rho)):
            raise ValueError(f"rho must be positive, got {self.rho}")


@dataclass(frozen=True)
class VapnikSpec:
    """Vapnik epsilon-insensitive loss ``max(|y| - epsilon, 0)``."""

    epsilon: float

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


def _finish_radial(eta, w, nw, gamma, t, conj_t, delta, gate):
    """Assemble ``(eta + gamma (phi0*(t) - delta), (1 - gamma t/||w||) w)``."""
    apex = nw < APEX_TOL
    with np.errstate(divide="ignore", invalid="ignore"):
        shrink = np.where(apex, 0.0, 1.0 - gamma * t / np.where(apex, 1.0, nw))
    chi = eta + gamma * (conj_t - delta)
    chi = np.where(gate, 0.0, np.maximum(chi, 0.0))
    y_out = np.where((gate | apex)[..., None], 0.0, shrink[..., None] * w)
    return ScaledPair(chi, y_out)


def _radial_generic(conj, dconj, eta, w, gamma, delta):
    nw = np.linalg.norm(w, axis=-1)
    target = nw / gamma
    gate = eta + gamma * (conj(target) - delta) <= 0
    live = ~gate & (nw >= APEX_TOL)
    t = np.zeros_like(target)
    if np.any(live):
        c = eta[live] / gamma - delta

        def psi(s):
            return (conj(s) + c) * dconj(s) + s

        def dpsi(s):
            return dconj(s) ** 2 + (conj(s) + c) * _num_deriv(dconj, s) + 1.0

        tl = target[live]
        t[live] = safeguarded_newton(psi, dpsi, tl, np.zeros_like(tl), tl, x0=tl)
    return _finish_radial(eta, w, nw, gamma, t, conj(t), delta, gate)


def _num_deriv(f, s):
    h = 1e-6 * np.maximum(1.0, np.abs(s))
    lo = np.maximum(s - h, 0.0)
    return (f(s + h) - f(lo)) / (s + h - lo)


def prox_perspective_radial(spec: RadialSpec, gamma, eta, y) -> ScaledPair:
    """Prox of the perspective of a radially symmetric base function.

    Returns ``(0, 0)`` when ``eta + gamma phi0*(||y/gamma - v||) <= gamma delta``.
    Otherwise, with ``t = psi^{-1}(||y/gamma - v||)`` and ``w = y - gamma v``,
    the result is ``(eta + gamma (phi0*(t) - delta), (1 - gamma t/||w||) w)``.
    The second derivative of ``phi0*`` needed by Newton's method is taken by
    finite differences; bisection keeps the iteration safe regardless.
    """
    gamma = as_step(gamma)
    eta, y = as_pair(eta, y)
    w = y - gamma * _vec(spec.v, y.shape[-1])
    return _radial_generic(spec.phi0_conj, spec.phi0_conj_deriv, eta, w, gamma, float(spec.delta))


def prox_perspective_sqrt(gamma, eta, y) -> ScaledPair:
    """Prox of the perspective of ``y -> -sqrt(1 - ||y||^2)``.

    Its conjugate is ``sqrt(1 + ||u||^2)``, so the zero region is
    ``eta + sqrt(gamma^2 + ||y||^2) <= 0``. Otherwise ``t`` solves
    ``(2 + eta / (gamma sqrt(1 + t^2))) t = ||y|| / gamma`` and the output is
    ``(eta + gamma sqrt(1 + t^2), (1 - gamma t / ||y||) y)``.
    """
    gamma = as_step(gamma)
    eta, y = as_pair(eta, y)
    ny = np.linalg.norm(y, axis=-1)
    gate = eta + np.hypot(gamma, ny) <= 0
    live = ~gate & (ny >= APEX_TOL)
    t = np.zeros_like(ny)
    if np.any(live):
        c = eta[live] / gamma
        tl = ny[live] / gamma

        def psi(s):
            return (2.0 + c / np.sqrt(1.0 + s * s)) * s

        def dpsi(s):
            r = 1.0 + s * s
            return 2.0 + c / (r * np.sqrt(r))

        t[live] = safeguarded_newton(psi, dpsi, tl, np.zeros_like(tl), tl, x0=tl)
    # phi0* = sqrt(1+s^2) - 1 with delta = -1 puts this in radial form
    return _finish_radial(eta, y, ny, gamma, t, np.sqrt(1.0 + t * t) - 1.0, -1.0, gate)


def prox_perspective_power(spec: PowerSpec, gamma, eta, y, x0=None) -> ScaledPair:
    """Prox of the perspective of ``||y||^q / alpha + delta + <y, v>``.

    With ``q* = q/(q-1)`` and ``rho = (alpha (1 - 1/q*))^(q*-1)`` the conjugate
    radial part is ``rho s^q* / q*``. The zero region is
    ``q* gamma^(q*-1) eta + rho ||y - gamma v||^q* <= q* gamma^q* delta``;
    elsewhere ``t`` comes from :func:`~prospect.numerics.solve_power_polynomial`
    and the output is ``(eta + gamma (rho t^q*/q* - delta), (1 - gamma t/||w||) w)``.

    ``x0`` (shape of the batch) warm-starts the root finder.
    """
    gamma = as_step(gamma)
    eta, y = as_pair(eta, y)
    qs, rho, delta = spec.qstar, spec.rho_const, float(spec.delta)
    w = y - gamma * _vec(spec.v, y.shape[-1])
    nw = np.linalg.norm(w, axis=-1)
    gate = eta + gamma * (spec.phi0_conj(nw / gamma) - delta) <= 0
    live = ~gate & (nw >= APEX_TOL)
    t = np.zeros_like(nw)
    if np.all(live):
        t = np.asarray(solve_power_polynomial(qs, eta - gamma * delta, gamma, rho, nw, x0=x0), dtype=float)
    elif np.any(live):
        guess = None if x0 is None else np.broadcast_to(x0, nw.shape)[live]
        t[live] = solve_power_polynomial(qs, eta[live] - gamma * delta, gamma, rho, nw[live], x0=guess)
    return _finish_radial(eta, w, nw, gamma, t, spec.phi0_conj(t), delta, gate)


def prox_perspective_quadratic(gamma, eta, y, *, alpha, delta=0.0, v=None) -> ScaledPair:
    """Prox of the perspective of ``||y||^2 / alpha + delta + <y, v>``.

    The zero region is ``4 gamma eta + alpha ||y - gamma v||^2 <= 4 gamma^2 delta``.
    On ``y = gamma v`` the result is ``(eta - gamma delta, 0)``. Otherwise
    ``t`` is the positive root of ``s^3 + p s + q`` with
    ``p = (4 alpha (eta - gamma delta) + 8 gamma) / (alpha^2 gamma)`` and
    ``q = -8 ||y - gamma v|| / (alpha^2 gamma)``, and the output is
    ``(eta + gamma (alpha t^2 / 4 - delta), (1 - gamma t/||w||) w)``.
    """
    gamma = as_step(gamma)
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    eta, y = as_pair(eta, y)
    delta = float(delta)
    w = y - gamma * _vec(v, y.shape[-1])
    nw = np.linalg.norm(w, axis=-1)
    gate = 4.0 * gamma * eta + alpha * nw * nw <= 4.0 * gamma * gamma * delta
    p = (4.0 * alpha * (eta - gamma * delta) + 8.0 * gamma) / (alpha * alpha * gamma)
    qc = -8.0 * nw / (alpha * alpha * gamma)
    t = np.where(gate | (nw < APEX_TOL), 0.0, _cardano(p, qc))
    return _finish_radial(eta, w, nw, gamma, t, 0.25 * alpha * t * t, delta, gate)


def prox_perspective_distance_ball(spec: RadialSpec, gamma, eta, y) -> ScaledPair:
    """Prox of the perspective of ``phi0(d_B(y))``, ``B`` the closed unit ball.

    The conjugate is ``||u|| + phi0*(||u||)``. Points of the cone
    ``{||y|| <= eta}`` are fixed, the zero region is
    ``eta + ||y|| + gamma phi0*(||y||/gamma) <= 0``, and otherwise ``t`` solves
    ``t + (eta/gamma + t + phi0*(t)) (1 + phi0*'(t)) = ||y||/gamma`` with output
    ``(eta + gamma (t + phi0*(t)), (1 - gamma t/||y||) y)``.
    ``spec.delta`` and ``spec.v`` must be left at their defaults.
    """
    if spec.delta != 0.0 or spec.v is not None:
        raise ValueError("distance-ball perspective takes no delta or v")
    gamma = as_step(gamma)
    eta, y = as_pair(eta, y)

    def conj(s):
        return s + spec.phi0_conj(s)

    def dconj(s):
        return 1.0 + spec.phi0_conj_deriv(s)

    ny = np.linalg.norm(y, axis=-1)
    inside = ny <= eta
    out = _radial_generic(conj, dconj, np.where(inside, 1.0, eta), np.where(inside[..., None], 0.0, y), gamma, 0.0)
    return ScaledPair(np.where(inside, eta, out.eta), np.where(inside[..., None], y, out.y))


def prox_perspective_sqrt_cone(cone_projector, gamma, eta, y) -> ScaledPair:
    """Prox of ``(eta, y) -> ||(eta, y)||`` restricted to ``K = [0, inf[ x D``.

    ``cone_projector`` maps stacked points of shape ``batch + (1 + d,)`` to
    their projections onto ``K``. With ``P = P_K(eta, y)`` the output is
    ``0`` if ``||P|| <= gamma`` and ``(1 - gamma/||P||) P`` otherwise.
    """
    gamma = as_step(gamma)
    pair = as_pair(eta, y)
    P = np.asarray(cone_projector(pair.stack()), dtype=float)
    nP = np.linalg.norm(P, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(nP > gamma, (1.0 - gamma / nP) * P, 0.0)
    return ScaledPair(out[..., 0], out[..., 1:])


def prox_perspective_orthant(gamma, eta, y) -> ScaledPair:
    """:func:`prox_perspective_sqrt_cone` with ``D`` the nonnegative orthant."""
    return prox_perspective_sqrt_cone(lambda x: np.maximum(x, 0.0), gamma, eta, y)


def _scalar_pair(eta, y):
    eta = np.asarray(eta, dtype=float)
    y = np.asarray(y, dtype=float)
    trailing = y.ndim == eta.ndim + 1
    if trailing:
        if y.shape[-1] != 1:
            raise ValueError("this perspective is defined for scalar y only")
        y = y[..., 0]
    if y.shape != eta.shape:
        raise ValueError(f"eta shape {eta.shape} does not match y shape {y.shape}")
    if not (np.all(np.isfinite(eta)) and np.all(np.isfinite(y))):
        raise ValueError("perspective arguments must be finite")
    return eta, y, trailing


def _scalar_out(chi, q, trailing):
    chi = np.asarray(chi, dtype=float)
    q = np.asarray(q, dtype=float)
    return ScaledPair(chi, q[..., None] if trailing else q)


def prox_perspective_huber(spec: HuberSpec, gamma, eta, y) -> ScaledPair:
    """Prox of the perspective of the Huber function (scalar ``y``).

    Cases are tried in order:

    1. ``eta + y^2/(2 gamma) <= 0`` and ``|y| <= gamma rho``: ``(0, 0)``;
    2. ``eta <= -gamma rho^2/2`` and ``|y| > gamma rho``: ``(0, y - gamma rho sign y)``;
    3. ``eta > -gamma rho^2/2`` and ``|y| > rho eta + gamma rho (1 + rho^2/2)``:
       ``(eta + gamma rho^2/2, y - gamma rho sign y)``;
    4. otherwise the quadratic perspective prox with ``alpha = 2``.

    ``y`` may carry a trailing axis of length 1, which is kept in the output.
    """
    gamma = as_step(gamma)
    eta, y, trailing = _scalar_pair(eta, y)
    rho = spec.rho
    ay, sy = np.abs(y), np.sign(y)
    c1 = (eta + ay * ay / (2.0 * gamma) <= 0) & (ay <= gamma * rho)
    c2 = ~c1 & (eta <= -gamma * rho * rho / 2.0) & (ay > gamma * rho)
    c3 = ~c1 & ~c2 & (eta > -gamma * rho * rho / 2.0) & (ay > rho * eta + gamma * rho * (1.0 + rho * rho / 2.0))
    quad = prox_perspective_quadratic(gamma, eta, y[..., None], alpha=2.0)
    chi = np.select([c1, c2, c3], [0.0, 0.0, eta + gamma * rho * rho / 2.0], quad.eta)
    q = np.select([c1, c2 | c3], [0.0, y - gamma * rho * sy], quad.y[..., 0])
    return _scalar_out(chi, q, trailing)


def prox_perspective_vapnik(spec: VapnikSpec, gamma, eta, y) -> ScaledPair:
    """Prox of the perspective of the Vapnik loss (scalar ``y``).

    Cases are tried in order:

    1. ``eta + eps |y| <= 0`` and ``|y| <= gamma``: ``(0, 0)``;
    2. ``eta <= -gamma eps`` and ``|y| > gamma``: ``(0, y - gamma sign y)``;
    3. ``eta > -gamma eps`` and ``|y| > eps eta + gamma (1 + eps^2)``:
       ``(eta + gamma eps, y - gamma sign y)``;
    4. ``|y| > -eta/eps`` and ``eps eta <= |y| <= eps eta + gamma (1 + eps^2)``:
       ``(eta + eps |y|) (1, eps sign y) / (1 + eps^2)``;
    5. ``eta >= 0`` and ``|y| <= eps eta``: ``(eta, y)``.
    """
    gamma = as_step(gamma)
    eta, y, trailing = _scalar_pair(eta, y)
    eps = spec.epsilon
    ay, sy = np.abs(y), np.sign(y)
    c1 = (eta + eps * ay <= 0) & (ay <= gamma)
    c2 = (eta <= -gamma * eps) & (ay > gamma)
    c3 = (eta > -gamma * eps) & (ay > eps * eta + gamma * (1.0 + eps * eps))
    c4 = (ay > -eta / eps) & (eps * eta <= ay) & (ay <= eps * eta + gamma * (1.0 + eps * eps))
    lin = (eta + eps * ay) / (1.0 + eps * eps)
    chi = np.select([c1, c2, c3, c4], [0.0, 0.0, eta + gamma * eps, lin], eta)
    q = np.select([c1, c2 | c3, c4], [0.0, y - gamma * sy, eps * lin * sy], y)
    return _scalar_out(chi, q, trailing)


def prox_closed_domain_ray(dom_projector, gamma, eta, y) -> ScaledPair:
    """``(0, y - P_{gamma dom phi*}(y))``, the prox once ``chi = 0`` is known.

    ``dom_projector`` projects onto ``dom phi*``; the scaled set is handled
    through ``P_{gamma D}(y) = gamma P_D(y / gamma)``.
    """
    gamma = as_step(gamma)
    eta = np.asarray(eta, dtype=float)
    y = np.asarray(y, dtype=float)
    return ScaledPair(np.zeros_like(eta), y - gamma * np.asarray(dom_projector(y / gamma), dtype=float))


def prox_separable_perspective(scalar_prox, gamma, x, y) -> ScaledPair:
    """Prox of ``(x, y) -> sum_i phi_i~(x_i, y_i)`` computed coordinatewise.

    ``scalar_prox(gamma, eta, y)`` is a batch-aware perspective prox. ``x``
    has shape ``batch + (N,)`` and ``y`` shape ``batch + (N,)`` or
    ``batch + (N, d)``. ``gamma`` may be a scalar or one step per coordinate
    (``N`` values); ``scalar_prox`` may also be a sequence of ``N`` operators.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim < 1 or y.shape[: x.ndim] != x.shape or y.ndim - x.ndim > 1:
        raise ValueError(f"block shapes do not match: x {x.shape}, y {y.shape}")
    n = x.shape[-1]
    gammas = np.broadcast_to(np.asarray(gamma, dtype=float), (n,))
    if callable(scalar_prox) and np.all(gammas == gammas[0]):
        out = scalar_prox(float(gammas[0]), x, y)
        return ScaledPair(np.asarray(out.eta, dtype=float), np.asarray(out.y, dtype=float).reshape(y.shape))
    ops = [scalar_prox] * n if callable(scalar_prox) else list(scalar_prox)
    if len(ops) != n:
        raise ValueError(f"expected {n} scalar operators, got {len(ops)}")
    etas = np.empty_like(x)
    ys = np.empty_like(y)
    for i, op in enumerate(ops):
        res = op(float(gammas[i]), x[..., i], y[:, ..., i] if y.ndim == x.ndim else y[..., i, :])
        etas[..., i] = res.eta
        if y.ndim == x.ndim:
            ys[..., i] = np.asarray(res.y).reshape(ys[..., i].shape)
        else:
            ys[..., i, :] = np.asarray(res.y).reshape(ys[..., i, :].shape)
    return ScaledPair(etas, ys)
