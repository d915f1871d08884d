"""Brute-force reference solutions and the catalog of perspective kinds.

The reference prox minimizes the Moreau objective
``phi~(x) + ||x - x0||^2 / (2 gamma)`` directly on the primal variables
with a shrinking grid search. It never looks at conjugates, case regions or
root equations, so agreement with :mod:`prospect.perspective` is a genuine
cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import perspective as P
from .prox import ScaledPair

__all__ = [
    "KINDS",
    "PerspectiveKind",
    "brute_force_prox",
    "golden_minimize",
    "make_kind",
    "plane_prox",
    "project_onto_gamma_C",
]

_INF = np.inf


def _split(x):
    return x[..., 0], x[..., 1:]


def _power_value(q, alpha, delta=0.0, v=None):
    def value(x):
        chi, u = _split(x)
        nu = np.linalg.norm(u, axis=-1)
        lin = 0.0 if v is None else u @ np.asarray(v, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            pos = nu**q / (alpha * np.where(chi > 0, chi, 1.0) ** (q - 1.0)) + delta * chi + lin
        zero = np.where(nu == 0, lin, _INF)
        return np.where(chi > 0, pos, np.where(chi == 0, zero, _INF))

    return value


def _cosh_value(delta=0.0, v=None):
    # phi0(r) = r asinh r - sqrt(1 + r^2) + 1, whose conjugate is cosh(s) - 1
    def value(x):
        chi, u = _split(x)
        nu = np.linalg.norm(u, axis=-1)
        lin = 0.0 if v is None else u @ np.asarray(v, dtype=float)
        c = np.where(chi > 0, chi, 1.0)
        r = nu / c
        pos = c * (r * np.arcsinh(r) - np.sqrt(1.0 + r * r) + 1.0) + delta * chi + lin
        zero = np.where(nu == 0, lin, _INF)
        return np.where(chi > 0, pos, np.where(chi == 0, zero, _INF))

    return value


def _sqrt_value(x):
    chi, u = _split(x)
    nu = np.linalg.norm(u, axis=-1)
    ok = (chi >= 0) & (nu <= chi)
    return np.where(ok, -np.sqrt(np.where(ok, chi * chi - nu * nu, 0.0)), _INF)


def _distance_value(x):
    # phi0 = |.|^2 / 2 composed with the distance to the unit ball
    chi, u = _split(x)
    nu = np.linalg.norm(u, axis=-1)
    c = np.where(chi > 0, chi, 1.0)
    pos = np.maximum(nu - chi, 0.0) ** 2 / (2.0 * c)
    return np.where(chi > 0, pos, np.where((chi == 0) & (nu == 0), 0.0, _INF))


def _orthant_value(x):
    chi, u = _split(x)
    ok = (chi >= 0) & np.all(u >= 0, axis=-1)
    return np.where(ok, np.sqrt(chi * chi + np.sum(u * u, axis=-1)), _INF)


def _huber_value(rho):
    def value(x):
        chi, u = _split(x)
        au = np.abs(u[..., 0])
        c = np.where(chi > 0, chi, 1.0)
        quad = au * au / (2.0 * c)
        lin = rho * au - chi * rho * rho / 2.0
        pos = np.where(au <= chi * rho, quad, lin)
        return np.where(chi > 0, pos, np.where(chi == 0, rho * au, _INF))

    return value


def _vapnik_value(eps):
    def value(x):
        chi, u = _split(x)
        return np.where(chi >= 0, np.maximum(np.abs(u[..., 0]) - eps * chi, 0.0), _INF)

    return value


def golden_minimize(f, lo, hi, iters=56):
    """Golden-section search for a convex ``f`` on ``[lo, hi]``, vectorized.

    ``f`` maps an array of candidate abscissae (shape of ``lo``) to values;
    convexity alone guarantees convergence, no smoothness is needed.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    g = (np.sqrt(5.0) - 1.0) / 2.0
    a = hi - g * (hi - lo)
    b = lo + g * (hi - lo)
    fa, fb = f(a), f(b)
    for _ in range(iters):
        left = fa <= fb
        hi = np.where(left, b, hi)
        lo = np.where(left, lo, a)
        na = np.where(left, hi - g * (hi - lo), b)
        nb = np.where(left, a, lo + g * (hi - lo))
        # one new abscissa per row; f is evaluated row-wise
        fnew = f(np.where(left, na, nb))
        fna = np.where(left, fnew, fb)
        fnb = np.where(left, fa, fnew)
        a, b, fa, fb = na, nb, fna, fnb
    x = 0.5 * (lo + hi)
    # the endpoints can be optimal exactly (e.g. chi = 0)
    cands = np.stack([x, lo, hi])
    vals = np.stack([f(x), f(lo), f(hi)])
    return cands[np.argmin(vals, axis=0), np.arange(x.size).reshape(x.shape) if x.ndim else 0]


def plane_prox(value, gamma, eta, y, direction, *, slope=None, radius=None) -> ScaledPair:
    """Reference ``prox_{gamma phi~}(eta, y)`` restricted to an exact 2-D plane.

    The Moreau objective ``phi~(x) + ||x - (eta, y)||^2 / (2 gamma)`` is
    minimized over points ``(chi, r * direction)`` by nested golden-section
    searches (outer on ``chi >= 0``, inner on ``r``). ``direction`` must be a
    unit vector per row that spans the minimizer's ``y`` block, which symmetry
    guarantees for every catalog kind. ``slope`` restricts ``|r| <= slope chi``
    for bases whose perspective is finite only on a cone.
    """
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    B = eta.shape[0]
    y = np.asarray(y, dtype=float).reshape(B, -1)
    x0 = np.concatenate([eta[:, None], y], axis=1)
    if radius is None:
        radius = 2.0 * np.linalg.norm(x0, axis=1) + 4.0 * gamma + 2.0

    def objective(chi, r):
        pts = np.concatenate([chi[..., None], r[..., None] * direction], axis=-1)
        with np.errstate(all="ignore"):
            val = value(pts) + np.sum((pts - x0) ** 2, axis=-1) / (2.0 * gamma)
        return np.where(np.isnan(val), np.inf, val)

    def inner(chi):
        if slope is None:
            lo, hi = -radius, radius
        else:
            lo, hi = -slope * chi, slope * chi
        r = golden_minimize(lambda r: objective(chi, r), lo, hi)
        return r, objective(chi, r)

    chi = golden_minimize(lambda c: inner(c)[1], np.zeros(B), radius)
    r = inner(chi)[0]
    return ScaledPair(chi, r[:, None] * direction)


def _unit(w):
    n = np.linalg.norm(w, axis=-1, keepdims=True)
    e1 = np.zeros_like(w)
    e1[..., 0] = 1.0
    return np.where(n > 0, w / np.where(n > 0, n, 1.0), e1)


def brute_force_prox(kind, gamma, eta, y) -> ScaledPair:
    """Reference prox for a catalog kind; separable kinds are split per block."""
    eta = np.asarray(eta, dtype=float)
    y = np.asarray(y, dtype=float)
    if kind.eta_dim == 1:
        return plane_prox(kind.value, gamma, eta, y, kind.direction(gamma, y.reshape(eta.shape[0], -1)),
                          slope=kind.slope)
    etas, ys = [], []
    for i in range(kind.eta_dim):
        yi = y[:, i : i + 1]
        out = plane_prox(kind.block_value, gamma, eta[:, i], yi, np.ones_like(yi))
        etas.append(out.eta)
        ys.append(out.y[:, 0])
    return ScaledPair(np.stack(etas, axis=1), np.stack(ys, axis=1))


def project_onto_gamma_C(conj, gamma, eta, y, u_max=None):
    """Numerical projection onto ``gamma C``, ``C = {(mu, u): mu + phi*(u) <= 0}``, scalar ``u``.

    For fixed ``u`` the best ``mu`` is ``min(eta, -gamma phi*(u/gamma))``, so
    the projection reduces to minimizing the convex function
    ``max(0, eta + gamma phi*(u/gamma))^2 + (u - y)^2`` over
    ``|u| <= gamma u_max`` (the scaled domain of ``phi*``).
    """
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    y = np.asarray(y, dtype=float).reshape(eta.shape)
    bound = gamma * u_max if u_max is not None else 2.0 * np.abs(y) + 2.0 * gamma + 1.0

    def objective(u):
        with np.errstate(over="ignore", invalid="ignore"):
            gap = np.maximum(0.0, eta + gamma * conj(u[..., None] / gamma))
            return gap * gap + (u - y) ** 2

    u = golden_minimize(objective, -np.broadcast_to(bound, eta.shape), np.broadcast_to(bound, eta.shape))
    mu = np.minimum(eta, -gamma * conj(u[..., None] / gamma))
    return ScaledPair(mu, u)


@dataclass(frozen=True)
class PerspectiveKind:
    """One entry of the prox catalog: the operator and what checks it.

    ``prox(gamma, eta, y)`` takes ``eta`` of shape ``(B,)`` and ``y`` of
    shape ``(B, d)``. ``conj`` is ``phi*`` on ``(..., d)`` (``None`` when
    there is no single conjugate) and ``value`` is ``phi~`` on stacked points.
    ``direction(gamma, y)`` returns unit vectors spanning the ``y`` block of
    the prox, ``slope`` bounds ``||y'|| <= slope eta'`` on the domain.
    ``eta_dim > 1`` marks a separable sum whose ``eta`` and ``y`` both have
    shape ``(B, eta_dim)``; ``block_value`` is then the per-block ``phi~``.
    ``conj_radius`` bounds ``dom phi*`` when that domain is a bounded interval.
    """

    name: str
    prox: Callable
    value: Callable
    dim: int
    conj: Optional[Callable] = None
    open_domain: bool = True
    direction: Optional[Callable] = None
    slope: Optional[float] = None
    eta_dim: int = 1
    block_value: Optional[Callable] = None
    conj_radius: Optional[float] = None


def _cosh_spec(delta=0.0, v=None):
    return P.RadialSpec(lambda s: np.cosh(s) - 1.0, np.sinh, delta, v)


def _radial_direction(v):
    def direction(gamma, y):
        return _unit(y - gamma * (0.0 if v is None else np.asarray(v, dtype=float)))

    return direction


def make_kind(name: str, dim: int = 2, **params) -> PerspectiveKind:
    """Build a catalog entry; ``params`` override the defaults of each kind."""
    if name == "radial":
        delta = params.get("delta", 0.3)
        v = params.get("v", np.linspace(0.2, -0.2, dim))
        spec = _cosh_spec(delta, v)
        return PerspectiveKind(name, lambda g, e, y: P.prox_perspective_radial(spec, g, e, y),
                               _cosh_value(delta, v), dim, spec.conj, direction=_radial_direction(v))
    if name == "sqrt":
        return PerspectiveKind(name, P.prox_perspective_sqrt, _sqrt_value, dim,
                               lambda u: np.sqrt(1.0 + np.sum(u * u, axis=-1)),
                               direction=_radial_direction(None), slope=1.0)
    if name == "power":
        q = params.get("q", 1.5)
        alpha = params.get("alpha", 1.3)
        delta = params.get("delta", 0.2)
        v = params.get("v", np.linspace(-0.3, 0.3, dim))
        spec = P.PowerSpec(q, alpha, delta, v)
        return PerspectiveKind(name, lambda g, e, y: P.prox_perspective_power(spec, g, e, y),
                               _power_value(q, alpha, delta, v), dim, spec.conj, direction=_radial_direction(v))
    if name == "quadratic":
        alpha = params.get("alpha", 2.0)
        delta = params.get("delta", 0.5)
        v = params.get("v", np.linspace(0.25, -0.25, dim))
        spec = P.PowerSpec(2.0, alpha, delta, v)
        return PerspectiveKind(
            name,
            lambda g, e, y: P.prox_perspective_quadratic(g, e, y, alpha=alpha, delta=delta, v=v),
            _power_value(2.0, alpha, delta, v), dim, spec.conj, direction=_radial_direction(v))
    if name == "distance-ball":
        spec = P.RadialSpec(lambda s: 0.5 * s * s, lambda s: s)
        return PerspectiveKind(name, lambda g, e, y: P.prox_perspective_distance_ball(spec, g, e, y),
                               _distance_value, dim,
                               lambda u: np.linalg.norm(u, axis=-1) + 0.5 * np.sum(u * u, axis=-1),
                               direction=_radial_direction(None))
    if name == "cone-orthant":
        def conj(u):
            n = np.linalg.norm(np.maximum(u, 0.0), axis=-1)
            with np.errstate(invalid="ignore"):
                return np.where(n <= 1.0, -np.sqrt(np.maximum(1.0 - n * n, 0.0)), _INF)

        # coordinates with a nonpositive input are zero at the minimizer
        return PerspectiveKind(name, P.prox_perspective_orthant, _orthant_value, dim, conj, open_domain=False,
                               direction=lambda g, y: _unit(np.maximum(y, 0.0)))
    scalar_dir = lambda g, y: np.ones_like(y)  # noqa: E731
    if name == "huber":
        rho = params.get("rho", 0.7)
        spec = P.HuberSpec(rho)

        def conj(u):
            u = u[..., 0]
            return np.where(np.abs(u) <= rho, 0.5 * u * u, _INF)

        return PerspectiveKind(name, lambda g, e, y: P.prox_perspective_huber(spec, g, e, y),
                               _huber_value(rho), 1, conj, open_domain=False, direction=scalar_dir, conj_radius=rho)
    if name == "vapnik":
        eps = params.get("epsilon", 0.6)
        spec = P.VapnikSpec(eps)

        def conj(u):
            u = u[..., 0]
            return np.where(np.abs(u) <= 1.0, eps * np.abs(u), _INF)

        return PerspectiveKind(name, lambda g, e, y: P.prox_perspective_vapnik(spec, g, e, y),
                               _vapnik_value(eps), 1, conj, open_domain=False, direction=scalar_dir, conj_radius=1.0)
    if name == "separable":
        # two scalar coordinates, each a quadratic perspective with alpha = 2
        def scalar_prox(g, e, y):
            return P.prox_perspective_quadratic(g, e, y, alpha=2.0)

        def prox(g, e, y):
            return P.prox_separable_perspective(scalar_prox, g, e, y)

        scalar = _power_value(2.0, 2.0)

        def value(x):
            # stacked layout (eta1, eta2, y1, y2)
            a = np.stack([x[..., 0], x[..., 2]], axis=-1)
            b = np.stack([x[..., 1], x[..., 3]], axis=-1)
            return scalar(a) + scalar(b)

        return PerspectiveKind(name, prox, value, 2, None, eta_dim=2, block_value=scalar)
    raise ValueError(f"unknown perspective kind {name!r}")


KINDS = ("radial", "sqrt", "power", "quadratic", "distance-ball", "cone-orthant", "huber", "vapnik", "separable")
