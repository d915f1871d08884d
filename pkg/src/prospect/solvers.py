"""Douglas-Rachford splitting, plain and with a graph-constraint block.

:func:`dr_composite` minimizes ``h(b) + g(M b)`` by running Douglas-Rachford
on the product space with ``F(b, c) = h(b) + g(c)`` and ``G`` the indicator of
the graph ``V = {(b, c) : c = M b}``. It is batch-aware: a projector may
carry ``B`` independent problems that share a step size, and rows that meet
the stopping rule are frozen while the rest keep iterating.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import NotSPDError
from .numerics import spd_solve

__all__ = [
    "DRConfig",
    "DRResult",
    "DRState",
    "GraphProjector",
    "Trace",
    "build_graph_projector",
    "douglas_rachford",
    "dr_composite",
    "project_graph",
]

log = logging.getLogger(__name__)

Relaxation = Union[float, Sequence[float], Callable[[int], float]]


@dataclass(frozen=True)
class DRConfig:
    """Douglas-Rachford settings.

    ``relaxation`` is a constant, a sequence indexed by iteration (its last
    entry is reused once exhausted) or a callable ``k -> mu_k``; every value
    must lie in ``]0, 2[``. The solver stops once
    ``min(||b_{k+1} - b_k||, ||y_{k+1} - y_k||) <= tol``.
    """

    gamma: float = 70.0
    relaxation: Relaxation = 1.95
    tol: float = 1e-10
    max_iter: int = 100_000
    check_every: int = 1
    trace_cap: int = 10_000

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if int(self.max_iter) < 1 or int(self.check_every) < 1 or int(self.trace_cap) < 2:
            raise ValueError("max_iter, check_every must be >= 1 and trace_cap >= 2")
        if not callable(self.relaxation):
            vals = np.atleast_1d(np.asarray(self.relaxation, dtype=float))
            if vals.size == 0 or np.any(vals <= 0) or np.any(vals >= 2):
                raise ValueError("relaxation values must lie in ]0, 2[")

    def mu(self, k: int) -> float:
        r = self.relaxation
        if callable(r):
            m = float(r(k))
            if not 0 < m < 2:
                raise ValueError(f"relaxation mu_{k} = {m} outside ]0, 2[")
            return m
        if np.ndim(r) == 0:
            return float(r)
        return float(r[min(k, len(r) - 1)])


@dataclass
class Trace:
    """Convergence history, thinned by half whenever it reaches ``cap``.

    Each entry of ``records`` is ``(iteration, delta_b, delta_y, objective)``;
    in batched solves the last three are arrays with one value per problem
    (``nan`` for problems that already stopped).
    """

    cap: int = 10_000
    stride: int = 1
    records: list = field(default_factory=list)

    def add(self, k, delta_b, delta_y, objective=None):
        if k % self.stride:
            return
        self.records.append((k, delta_b, delta_y, objective))
        if len(self.records) >= self.cap:
            self.records = self.records[::2]
            self.stride *= 2

    def __len__(self):
        return len(self.records)

    def column(self, i):
        return [r[i] for r in self.records]


@dataclass
class DRState:
    """Iterates of the composite scheme; arrays carry a leading batch axis."""

    x: np.ndarray
    y: np.ndarray
    b: Optional[np.ndarray] = None
    c: Optional[np.ndarray] = None
    iteration: np.ndarray = None
    converged: np.ndarray = None

    def __post_init__(self):
        B = self.x.shape[0]
        if self.iteration is None:
            self.iteration = np.zeros(B, dtype=np.int64)
        if self.converged is None:
            self.converged = np.zeros(B, dtype=bool)

    def rows(self, idx) -> "DRState":
        pick = (lambda a: None if a is None else a[idx].copy())
        return DRState(pick(self.x), pick(self.y), pick(self.b), pick(self.c),
                       self.iteration[idx].copy(), self.converged[idx].copy())


@dataclass
class DRResult:
    """Outcome of a solve. ``solution`` is ``b`` (or ``x`` for plain DR)."""

    solution: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    state: DRState
    trace: Trace


@dataclass(frozen=True)
class GraphProjector:
    """Projector onto ``{(b, c) : c = M b}`` with ``R = M^T (I + M M^T)^{-1}``."""

    M: np.ndarray
    R: np.ndarray

    @property
    def dims(self):
        return self.M.shape[1], self.M.shape[0]

    def apply(self, b, rows=None):
        return b @ self.M.T

    def project(self, x, y, rows=None):
        b = x - (x @ self.M.T - y) @ self.R.T
        return b, self.apply(b)


def build_graph_projector(M) -> GraphProjector:
    """Precompute ``R = M^T (I + M M^T)^{-1}`` by one Cholesky solve."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.all(np.isfinite(M)):
        raise ValueError("M must be finite")
    m = M.shape[0]
    try:
        R = spd_solve(np.eye(m) + M @ M.T, M).T
    except NotSPDError as exc:  # pragma: no cover - I + M M^T is SPD for finite M
        raise ValueError(str(exc)) from exc
    return GraphProjector(M, R)


def project_graph(proj: GraphProjector, b, c):
    """Return ``(v, M v)`` with ``v = b - R (M b - c)``."""
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    p, m = proj.dims
    if b.shape[-1] != p or c.shape[-1] != m:
        raise ValueError(f"expected blocks of size {p} and {m}, got {b.shape} and {c.shape}")
    return proj.project(b, c)


def _norm(a):
    return np.sqrt(np.einsum("ij,ij->i", a, a))


def douglas_rachford(prox_F, prox_G, config: DRConfig, init, *, objective=None) -> DRResult:
    """Plain Douglas-Rachford for ``min F + G`` on a single vector.

    ``prox_F(v, gamma)`` and ``prox_G(v, gamma)`` are proximity operators.
    Iterates ``x_k = prox_G(y_k)``, ``z_k = prox_F(2 x_k - y_k)``,
    ``y_{k+1} = y_k + mu_k (z_k - x_k)`` until
    ``min(||x_{k+1} - x_k||, ||y_{k+1} - y_k||) <= tol``. Returns the last
    ``x`` and a non-converged flag if ``max_iter`` runs out first.
    """
    g = config.gamma
    y = np.array(init, dtype=float)
    x = np.asarray(prox_G(y, g), dtype=float)
    trace = Trace(config.trace_cap)
    converged = False
    k = 0
    while k < config.max_iter:
        z = np.asarray(prox_F(2.0 * x - y, g), dtype=float)
        y_new = y + config.mu(k) * (z - x)
        x_new = np.asarray(prox_G(y_new, g), dtype=float)
        k += 1
        db = float(np.linalg.norm(x_new - x))
        dy = float(np.linalg.norm(y_new - y))
        x, y = x_new, y_new
        if k % config.check_every == 0:
            trace.add(k, db, dy, None if objective is None else float(objective(x)))
        if min(db, dy) <= config.tol:
            converged = True
            break
    state = DRState(np.atleast_2d(x), np.atleast_2d(y), iteration=np.array([k]), converged=np.array([converged]))
    return DRResult(x, np.array(converged), np.array(k), state, trace)


def _init_state(proj, init, batch):
    p, m = proj.dims
    if isinstance(init, DRState):
        return replace(init, x=init.x.copy(), y=init.y.copy(),
                       iteration=init.iteration.copy(), converged=init.converged.copy())
    if init is None:
        x = np.zeros((batch, p))
        y = np.zeros((batch, m))
    else:
        x, y = (np.array(a, dtype=float) for a in init)
        x = np.broadcast_to(x.reshape(-1, p), (batch, p)).copy()
        y = np.broadcast_to(y.reshape(-1, m), (batch, m)).copy()
    return DRState(x, y)


def dr_composite(prox_h, prox_g, proj, config: DRConfig, init=None, *, objective=None,
                 max_iter: Optional[int] = None, record_trace: bool = True) -> DRResult:
    """Douglas-Rachford for ``min_b h(b) + g(M b)`` via the graph projector.

    One sweep reads::

        q = M x - y;  b = x - R q;  c = M b
        z = prox_h(2b - x);  t = prox_g(2c - y)
        x += mu (z - b);  y += mu (t - c)

    ``prox_h(v, gamma, rows)`` and ``prox_g(v, gamma, rows)`` receive a batch
    of points and the problem indices they belong to. ``proj`` provides
    ``dims``, ``project(x, y, rows)`` and optionally ``batch``. ``init`` is
    ``None`` (zeros), a pair ``(x0, y0)`` or a :class:`DRState` to continue
    from. ``max_iter`` overrides ``config.max_iter`` as a total iteration
    budget, which is how a solve is paused and resumed. ``objective(b, rows)``
    is traced every ``check_every`` iterations.
    """
    batch = getattr(proj, "batch", None)
    single = batch is None
    state = _init_state(proj, init, 1 if single else batch)
    B = state.x.shape[0]
    budget = config.max_iter if max_iter is None else int(max_iter)
    g = config.gamma
    trace = Trace(config.trace_cap)
    active = np.flatnonzero(~state.converged & (state.iteration < budget))
    if state.b is None:
        p, m = proj.dims
        state.b = np.zeros((B, p))
        state.c = np.zeros((B, m))
        if active.size:
            b, c = proj.project(state.x[active], state.y[active], None if single else active)
            state.b[active], state.c[active] = b, c
    x, y = state.x[active], state.y[active]
    b, c = state.b[active], state.c[active]
    k = state.iteration[active].copy()
    while active.size:
        rows = None if single else active
        z = prox_h(2.0 * b - x, g, rows)
        t = prox_g(2.0 * c - y, g, rows)
        mu = np.array([config.mu(int(kk)) for kk in k]) if not _constant(config) else config.mu(0)
        mu = mu[:, None] if np.ndim(mu) else mu
        dy_vec = mu * (t - c)
        x = x + mu * (z - b)
        y = y + dy_vec
        b_new, c = proj.project(x, y, rows)
        db = _norm(b_new - b)
        dy = _norm(dy_vec)
        b = b_new
        k += 1
        if record_trace and int(k[0]) % config.check_every == 0:
            full = np.full(B, np.nan)
            rec_b, rec_y = full.copy(), full.copy()
            rec_b[active], rec_y[active] = db, dy
            obj = None
            if objective is not None:
                obj = full.copy()
                obj[active] = objective(b, rows)
            trace.add(int(k[0]), rec_b, rec_y, obj)
        done = np.minimum(db, dy) <= config.tol
        stop = done | (k >= budget)
        if np.any(stop):
            idx = active[stop]
            state.x[idx], state.y[idx], state.b[idx], state.c[idx] = x[stop], y[stop], b[stop], c[stop]
            state.iteration[idx] = k[stop]
            state.converged[idx] = done[stop]
            keep = ~stop
            active, x, y, b, c, k = active[keep], x[keep], y[keep], b[keep], c[keep], k[keep]
            if log.isEnabledFor(logging.DEBUG):
                log.debug("dr: %d rows stopped at iteration %d, %d active", int(stop.sum()), int(k.max(initial=0)),
                          active.size)
    sol = state.b[0] if single else state.b
    conv = state.converged[0] if single else state.converged
    its = state.iteration[0] if single else state.iteration
    return DRResult(sol, conv, its, state, trace)


def _constant(config: DRConfig) -> bool:
    return not callable(config.relaxation) and np.ndim(config.relaxation) == 0
