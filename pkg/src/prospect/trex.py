"""TREX, generalized TREX and the concomitant Lasso.

The generalized TREX objective is

    ||X b - z||^q / (alpha ||X^T (X b - z)||_inf^(q-1)) + ||b||_1,

which equals the minimum over ``2p`` convex subproblems indexed by a column
``j`` and a sign ``s``, where the sup-norm is replaced by
``x_j^T (X b - z)`` with ``x_j = s X[:, j]``. Each subproblem is
``h(b) + g_j(M_j b)`` with ``h = ||.||_1``, ``M_j b = (x_j^T X b, X b)`` and
``g_j`` a shifted perspective of ``||.||^q / alpha``, solved by
:func:`~prospect.solvers.dr_composite`.

Subproblems are solved in batches: all ``M_j`` share ``X``, so
``(I + M_j^T M_j)^{-1}`` follows from one factorization of ``I + X^T X`` and
a rank-one Sherman-Morrison correction per subproblem.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from . import _kernels
from .numerics import spd_solve
from .perspective import PowerSpec, prox_perspective_power, prox_perspective_quadratic
from .prox import ScaledPair, as_step, soft_threshold
from .solvers import (DRConfig, DRResult, DRState, Trace, _constant, _init_state, build_graph_projector,
                      douglas_rachford, dr_composite)

__all__ = [
    "DRSelResult",
    "SubproblemId",
    "SubproblemResult",
    "TrexBatch",
    "TrexProblem",
    "TrexResult",
    "all_subproblems",
    "build_subproblem",
    "dr_sel",
    "eval_standard_trex_objective",
    "eval_subproblem_objective",
    "eval_trex_objective",
    "prox_g_trex",
    "solve_concomitant_lasso",
    "solve_subproblem",
    "solve_subproblems",
    "solve_standard_trex",
    "solve_trex_full",
]

log = logging.getLogger(__name__)

# fixed batch size for subproblem sweeps; results never depend on worker count
CHUNK = 32


class SubproblemId(NamedTuple):
    """Column ``j`` (0-based) and sign ``s`` in ``{+1, -1}``."""

    j: int
    s: int


@dataclass(frozen=True, eq=False)
class TrexProblem:
    """Design ``X`` (n x p), response ``z``, scale ``alpha`` and exponent ``q``.

    ``q = 1`` is the square-root Lasso limit, which this solver does not
    handle; it is rejected with a message saying so.
    """

    X: np.ndarray
    z: np.ndarray
    alpha: float = 0.5
    q: float = 2.0
    gram: np.ndarray = field(init=False, repr=False)
    Xz: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        z = np.asarray(self.z, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError(f"X must be a nonempty 2-D array, got shape {X.shape}")
        if z.shape[0] != X.shape[0]:
            raise ValueError(f"z has {z.shape[0]} entries but X has {X.shape[0]} rows")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(z))):
            raise ValueError("X and z must be finite")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.q == 1:
            raise ValueError("q = 1 is the square-root Lasso limit of generalized TREX and is not solved here; "
                             "use q > 1")
        if not self.q > 1:
            raise ValueError(f"q must exceed 1, got {self.q}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "q", float(self.q))
        object.__setattr__(self, "gram", X.T @ X)
        object.__setattr__(self, "Xz", X.T @ z)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def with_alpha(self, alpha: float) -> "TrexProblem":
        return TrexProblem(self.X, self.z, alpha, self.q)


def all_subproblems(p: int) -> List[SubproblemId]:
    """The ``2p`` subproblem ids in tie-break order: ``j`` ascending, ``s = +1`` first."""
    return [SubproblemId(j, s) for j in range(p) for s in (1, -1)]


def _check_id(problem: TrexProblem, sid) -> SubproblemId:
    sid = SubproblemId(int(sid[0]), int(sid[1]))
    if not 0 <= sid.j < problem.p or sid.s not in (1, -1):
        raise ValueError(f"invalid subproblem {sid} for p = {problem.p}")
    return sid


def build_subproblem(problem: TrexProblem, sid):
    """Return ``M_j`` as an ``(n+1) x p`` matrix and the shift ``(x_j^T z, z)``."""
    sid = _check_id(problem, sid)
    xj = sid.s * problem.X[:, sid.j]
    M = np.vstack([xj @ problem.X, problem.X])
    shift = np.concatenate([[xj @ problem.z], problem.z])
    return M, shift


def _persp_prox(problem: TrexProblem, gamma, eta, y, x0=None):
    if problem.q == 2.0:
        return prox_perspective_quadratic(gamma, eta, y, alpha=problem.alpha)
    return prox_perspective_power(PowerSpec(problem.q, problem.alpha), gamma, eta, y, x0=x0)


def prox_g_trex(problem: TrexProblem, sid, gamma, eta, y) -> ScaledPair:
    """Prox of ``g_j``: ``(x_j^T z, z) + prox_{gamma phi~}(eta - x_j^T z, y - z)``.

    ``phi = ||.||^q / alpha``; ``q = 2`` goes through Cardano's formula and
    other exponents through the power-law root solver.
    """
    sid = _check_id(problem, sid)
    gamma = as_step(gamma)
    shift0 = sid.s * problem.Xz[sid.j]
    eta = np.asarray(eta, dtype=float)
    y = np.asarray(y, dtype=float)
    out = _persp_prox(problem, gamma, eta - shift0, y - problem.z)
    return ScaledPair(out.eta + shift0, out.y + problem.z)


def _data_term(norm_r, denom, q, alpha):
    with np.errstate(divide="ignore", invalid="ignore"):
        val = norm_r**q / (alpha * np.where(denom > 0, denom, 1.0) ** (q - 1.0))
    return np.where(norm_r == 0, 0.0, np.where(denom > 0, val, np.inf))


def eval_trex_objective(problem: TrexProblem, b) -> float:
    """Generalized TREX objective; the data term is 0 when ``X b = z``.

    Rows of a 2-D ``b`` are evaluated independently.
    """
    b = np.asarray(b, dtype=float)
    r = b @ problem.X.T - problem.z
    nr = np.linalg.norm(r, axis=-1)
    d = np.max(np.abs(r @ problem.X), axis=-1)
    out = _data_term(nr, d, problem.q, problem.alpha) + np.sum(np.abs(b), axis=-1)
    return float(out) if out.ndim == 0 else out


def eval_standard_trex_objective(X, z, alpha, b) -> float:
    """Original TREX objective ``||r||^2 / ||X^T r||_inf + alpha ||b||_1``.

    It is ``alpha`` times the ``q = 2`` generalized objective.
    """
    X = np.asarray(X, dtype=float)
    b = np.asarray(b, dtype=float)
    r = X @ b - np.asarray(z, dtype=float)
    nr = float(np.linalg.norm(r))
    d = float(np.max(np.abs(X.T @ r)))
    data = 0.0 if nr == 0 else (nr * nr / d if d > 0 else math.inf)
    return data + alpha * float(np.sum(np.abs(b)))


def eval_subproblem_objective(problem: TrexProblem, sid, b):
    """Subproblem objective with the signed denominator ``x_j^T (X b - z)``."""
    sid = _check_id(problem, sid)
    b = np.asarray(b, dtype=float)
    r = b @ problem.X.T - problem.z
    nr = np.linalg.norm(r, axis=-1)
    d = sid.s * (r @ problem.X[:, sid.j])
    out = _data_term(nr, d, problem.q, problem.alpha) + np.sum(np.abs(b), axis=-1)
    return float(out) if out.ndim == 0 else out


class TrexBatch:
    """A batch of subproblems of one problem, exposing the projector interface.

    ``project(x, y, rows)`` returns ``b = (I + M^T M)^{-1} (x + M^T y)`` and
    ``c = M b`` for each listed row, using the shared factor of ``I + X^T X``.
    """

    def __init__(self, problem: TrexProblem, ids: Sequence[SubproblemId]):
        self.problem = problem
        self.ids = [_check_id(problem, s) for s in ids]
        j = np.array([s.j for s in self.ids])
        sign = np.array([s.s for s in self.ids], dtype=float)
        p = problem.p
        self.Ainv = spd_solve(np.eye(p) + problem.gram, np.eye(p))
        self.Ainv = 0.5 * (self.Ainv + self.Ainv.T)
        self.W = sign[:, None] * problem.gram[j]  # rows w_i = X^T x_j
        self.U = self.W @ self.Ainv
        self.den = 1.0 + np.einsum("ij,ij->i", self.U, self.W)
        self.shift0 = sign * problem.Xz[j]
        self.sign = sign
        self.j = j
        self.batch = len(self.ids)
        self.dims = (p, problem.n + 1)
        self._root = np.full(self.batch, np.inf)
        self._woodbury = None

    def apply(self, b, rows):
        W = self.W if rows is None else self.W[rows]
        c0 = np.einsum("ij,ij->i", W, b)
        return np.concatenate([c0[:, None], b @ self.problem.X.T], axis=1)

    def project(self, x, y, rows):
        W, U, den = (self.W, self.U, self.den) if rows is None else (self.W[rows], self.U[rows], self.den[rows])
        r = x + W * y[:, :1] + y[:, 1:] @ self.problem.X
        u = r @ self.Ainv
        b = u - U * (np.einsum("ij,ij->i", W, u) / den)[:, None]
        c0 = np.einsum("ij,ij->i", W, b)
        return b, np.concatenate([c0[:, None], b @ self.problem.X.T], axis=1)

    def prox_h(self, v, gamma, rows):
        return soft_threshold(v, gamma)

    def prox_g(self, v, gamma, rows):
        s0 = self.shift0 if rows is None else self.shift0[rows]
        z = self.problem.z
        w = v[:, 1:] - z
        if self.problem.q == 2.0:
            out = _persp_prox(self.problem, gamma, v[:, 0] - s0, w)
        else:
            # the root of the previous sweep is a close starting point for Newton
            sel = slice(None) if rows is None else rows
            out = _persp_prox(self.problem, gamma, v[:, 0] - s0, w, x0=self._root[sel])
            nw = np.linalg.norm(w, axis=1)
            root = (nw - np.linalg.norm(out.y, axis=1)) / gamma
            self._root[sel] = np.where(root > 0, root, self._root[sel])
        return np.concatenate([(out.eta + s0)[:, None], out.y + z], axis=1)

    def _run_compiled(self, config: DRConfig, init, max_iter) -> DRResult:
        state = _init_state(self, init, self.batch)
        budget = config.max_iter if max_iter is None else int(max_iter)
        if state.b is None:
            state.b, state.c = self.project(state.x, state.y, None)
        state.x, state.y, state.b, state.c = (np.ascontiguousarray(a, dtype=float)
                                              for a in (state.x, state.y, state.b, state.c))
        rows = np.flatnonzero(~state.converged & (state.iteration < budget))
        pr = self.problem
        if self._woodbury is None:
            n, p = pr.n, pr.p
            self._woodbury = (spd_solve(np.eye(n) + pr.X @ pr.X.T, np.eye(n)) if n < p
                              else np.zeros((0, 0)))
        _kernels.run_rows(rows, state.x, state.y, state.b, state.c, state.iteration, state.converged,
                          self._root, np.ascontiguousarray(pr.X), pr.z, self.Ainv, self._woodbury, self.W, self.U, self.den,
                          self.shift0, float(pr.q), float(pr.alpha), float(config.gamma), config.mu(0),
                          float(config.tol), budget)
        return DRResult(state.b, state.converged, state.iteration, state, Trace(config.trace_cap))

    def objective(self, b, rows):
        sel = np.arange(self.batch) if rows is None else rows
        r = b @ self.problem.X.T - self.problem.z
        nr = np.linalg.norm(r, axis=1)
        d = self.sign[sel] * np.einsum("ij,ij->i", r, self.problem.X[:, self.j[sel]].T)
        return _data_term(nr, d, self.problem.q, self.problem.alpha) + np.sum(np.abs(b), axis=1)

    def run(self, config: DRConfig, init=None, *, max_iter=None, record_trace=False) -> DRResult:
        if _kernels.AVAILABLE and not record_trace and _constant(config):
            return self._run_compiled(config, init, max_iter)
        return dr_composite(self.prox_h, self.prox_g, self, config, init, max_iter=max_iter,
                            objective=self.objective if record_trace else None, record_trace=record_trace)


@dataclass
class SubproblemResult:
    """Solution of one signed subproblem."""

    id: SubproblemId
    b: np.ndarray
    objective: float
    converged: bool
    iterations: int
    trace: Optional[object] = None


def _results(batch: TrexBatch, res: DRResult, trace=None) -> List[SubproblemResult]:
    objs = batch.objective(res.state.b, None)
    return [SubproblemResult(sid, res.state.b[i].copy(), float(objs[i]), bool(res.state.converged[i]),
                             int(res.state.iteration[i]), trace)
            for i, sid in enumerate(batch.ids)]


def solve_subproblem(problem: TrexProblem, sid, config: DRConfig = DRConfig(), *, init=None,
                     record_trace: bool = True) -> SubproblemResult:
    """Solve one signed subproblem by the composite Douglas-Rachford scheme.

    The reported objective uses the signed denominator ``x_j^T (X b - z)``.
    A non-converged solve still returns its last iterate, flagged.
    """
    batch = TrexBatch(problem, [sid])
    res = batch.run(config, init, record_trace=record_trace)
    return _results(batch, res, res.trace if record_trace else None)[0]


def _solve_chunk(problem, ids, config):
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=1):
        batch = TrexBatch(problem, ids)
        return _results(batch, batch.run(config))


def solve_subproblems(problem: TrexProblem, ids: Sequence[SubproblemId], config: DRConfig = DRConfig(), *,
                      n_jobs: int = 1, chunk: int = CHUNK) -> List[SubproblemResult]:
    """Solve many subproblems in fixed-size batches, optionally in parallel.

    Batches are formed from consecutive ids independently of ``n_jobs``, so
    the output is bitwise identical for any worker count.
    """
    ids = [_check_id(problem, s) for s in ids]
    chunks = [ids[i : i + chunk] for i in range(0, len(ids), chunk)]
    if n_jobs == 1 or len(chunks) == 1:
        parts = [_solve_chunk(problem, c, config) for c in chunks]
    else:
        from joblib import Parallel, delayed

        parts = Parallel(n_jobs=n_jobs)(delayed(_solve_chunk)(problem, c, config) for c in chunks)
    return [r for part in parts for r in part]


@dataclass
class TrexResult:
    """Outcome of a full TREX solve.

    ``objective`` is the global objective at ``b_hat`` (sup-norm denominator);
    ``subproblem_objective`` is the winner's own objective (signed
    denominator). The two agree at an exact optimum.
    """

    b_hat: np.ndarray
    objective: float
    subproblem_objective: float
    winner: SubproblemId
    converged: bool
    per_subproblem: List[SubproblemResult]


#: objectives within this relative gap count as tied; iterative solves
#: cannot resolve exact ties, which TREX produces whenever two columns
#: attain the sup-norm at the optimum
TIE_RTOL = 1e-9


def _pick_winner(results: Sequence[SubproblemResult]) -> SubproblemResult:
    best = min(r.objective for r in results)
    cut = best + TIE_RTOL * max(1.0, abs(best)) if np.isfinite(best) else best
    order = sorted(results, key=lambda r: (r.id.j, -r.id.s))
    return next(r for r in order if r.objective <= cut)


def solve_trex_full(problem: TrexProblem, config: DRConfig = DRConfig(), *, n_jobs: int = 1,
                    chunk: int = CHUNK) -> TrexResult:
    """Solve all ``2p`` subproblems and keep the best.

    Ties go to the smallest ``j``, then to ``s = +1``; objectives within a
    relative ``TIE_RTOL`` of the minimum are ties. ``converged`` is true
    when the winner met the stopping rule.
    """
    results = solve_subproblems(problem, all_subproblems(problem.p), config, n_jobs=n_jobs, chunk=chunk)
    best = _pick_winner(results)
    if not any(r.converged for r in results):
        log.warning("trex: no subproblem met the stopping rule")
    return TrexResult(best.b.copy(), eval_trex_objective(problem, best.b), best.objective, best.id,
                      best.converged, results)


class _StandardBatch(TrexBatch):
    """Subproblems of ``||r||^2 / (x_j^T r) + alpha ||b||_1`` (no compiled path)."""

    def __init__(self, problem: TrexProblem, ids, alpha: float):
        super().__init__(problem, ids)
        self.penalty = float(alpha)

    def prox_h(self, v, gamma, rows):
        return soft_threshold(v, gamma * self.penalty)

    def objective(self, b, rows):
        data = super().objective(b, rows) - np.sum(np.abs(b), axis=1)
        return data + self.penalty * np.sum(np.abs(b), axis=1)

    def run(self, config: DRConfig, init=None, *, max_iter=None, record_trace=False) -> DRResult:
        return dr_composite(self.prox_h, self.prox_g, self, config, init, max_iter=max_iter,
                            record_trace=record_trace)


def solve_standard_trex(X, z, alpha: float, config: DRConfig = DRConfig()) -> TrexResult:
    """Standard TREX ``||r||^2 / ||X^T r||_inf + alpha ||b||_1`` solved as written.

    The penalty sits on ``h`` and ``g_j`` is the unit-scale quadratic
    perspective, so this shares no scaling with the generalized solver;
    its minimizers coincide with those of :func:`solve_trex_full` at
    ``q = 2`` and the objectives differ by the factor ``alpha``.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    problem = TrexProblem(X, z, 1.0, 2.0)
    batch = _StandardBatch(problem, all_subproblems(problem.p), alpha)
    results = _results(batch, batch.run(config))
    best = _pick_winner(results)
    return TrexResult(best.b.copy(), eval_standard_trex_objective(problem.X, problem.z, alpha, best.b),
                      best.objective, best.id, best.converged, results)


@dataclass
class DRSelResult:
    """Outcome of online sign selection for one column."""

    selected: SubproblemId
    result: SubproblemResult
    screening_objectives: tuple


def dr_sel(problem: TrexProblem, j: int, config: DRConfig = DRConfig(), k0: int = 50) -> DRSelResult:
    """Run both signs of column ``j`` for ``k0`` iterations, finish the better one.

    "Better" means the lower subproblem objective at the ``k0``-th iterate;
    ties (including both infinite) go to ``s = +1``.
    """
    if int(k0) < 1:
        raise ValueError("k0 must be at least 1")
    ids = [SubproblemId(int(j), 1), SubproblemId(int(j), -1)]
    batch = TrexBatch(problem, ids)
    first = batch.run(config, max_iter=min(int(k0), config.max_iter))
    objs = batch.objective(first.state.b, None)
    pick = 1 if objs[1] < objs[0] else 0
    single = TrexBatch(problem, [ids[pick]])
    res = single.run(config, first.state.rows([pick]))
    out = _results(single, res)[0]
    return DRSelResult(ids[pick], out, (float(objs[0]), float(objs[1])))


@dataclass
class ConcomitantResult:
    b: np.ndarray
    sigma: float
    objective: float
    converged: bool
    iterations: int


def concomitant_objective(X, z, lam, sigma, b) -> float:
    """``||X b - z||^2 / (2 n sigma) + sigma / 2 + lam ||b||_1`` (perspective at ``sigma = 0``)."""
    X = np.asarray(X, dtype=float)
    r = X @ b - z
    n = X.shape[0]
    nr2 = float(r @ r)
    if sigma > 0:
        data = nr2 / (2.0 * n * sigma) + sigma / 2.0
    else:
        data = 0.0 if nr2 == 0 and sigma == 0 else math.inf
    return data + lam * float(np.sum(np.abs(b)))


def solve_concomitant_lasso(X, z, lam: float, config: DRConfig = DRConfig(gamma=1.0, relaxation=1.5, tol=1e-10)
                            ) -> ConcomitantResult:
    """Joint estimate of ``b`` and the noise level ``sigma`` (scaled Lasso).

    Minimizes ``||X b - z||^2 / (2 n sigma) + sigma / 2 + lam ||b||_1`` by
    Douglas-Rachford on ``(sigma, b, c)`` with ``F = lam ||b||_1 +`` the
    perspective of ``||.||^2 / (2n) + 1/2`` at ``(sigma, c - z)`` and ``G`` the
    indicator of ``c = X b`` (``sigma`` unconstrained). ``sigma`` and ``b`` are
    read from the last ``prox_F`` output, so ``b`` is exactly sparse.
    """
    X = np.asarray(X, dtype=float)
    z = np.asarray(z, dtype=float).ravel()
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    n, p = X.shape
    proj = build_graph_projector(X)

    def prox_F(v, g):
        out = prox_perspective_quadratic(g, v[0], v[1 + p :] - z, alpha=2.0 * n, delta=0.5)
        return np.concatenate([[float(out.eta)], soft_threshold(v[1 : 1 + p], g * lam), out.y + z])

    def prox_G(v, g):
        b, c = proj.project(v[1 : 1 + p][None], v[1 + p :][None])
        return np.concatenate([[v[0]], b[0], c[0]])

    res = douglas_rachford(prox_F, prox_G, config, np.zeros(1 + p + n))
    x, y = res.state.x[0], res.state.y[0]
    zF = prox_F(2.0 * x - y, config.gamma)
    sigma, b = float(zF[0]), zF[1 : 1 + p]
    return ConcomitantResult(b, sigma, concomitant_objective(X, z, lam, sigma, b), bool(res.converged),
                             int(res.iterations))


@dataclass
class PathPoint:
    """TREX solution at one ``alpha`` of a path."""

    alpha: float
    b_hat: np.ndarray
    objective: float
    winner: SubproblemId
    converged: bool
    iterations: int
    residual_norm: float


class TrexPath:
    """Warm-started generalized TREX solves over a sequence of ``alpha`` values.

    Every column goes through online sign selection: both signs run for
    ``k0`` iterations and the one with the lower subproblem objective is
    kept. With ``keep`` set, only the ``keep`` columns with the lowest
    screening objectives are run to convergence, the rest are dropped. Each
    solve starts from the last iterates of the same signed subproblem.
    ``gamma_per_alpha`` sets the step to ``gamma_per_alpha * alpha``.
    """

    def __init__(self, X, z, q: float, config: DRConfig = DRConfig(), *, k0: int = 50,
                 gamma_per_alpha: Optional[float] = None, keep: Optional[int] = None):
        self.X = np.asarray(X, dtype=float)
        self.z = np.asarray(z, dtype=float).ravel()
        self.q = float(q)
        self.config = config
        self.k0 = int(k0)
        self.gamma_per_alpha = gamma_per_alpha
        self.keep = keep
        self.ids = all_subproblems(self.X.shape[1])
        self.state: Optional[DRState] = None
        if self.k0 < 1:
            raise ValueError("k0 must be at least 1")
        if keep is not None and keep < 1:
            raise ValueError("keep must be positive")

    def solve(self, alpha: float) -> PathPoint:
        problem = TrexProblem(self.X, self.z, alpha, self.q)
        p = problem.p
        cfg = self.config
        if self.gamma_per_alpha is not None:
            cfg = _with_gamma(cfg, self.gamma_per_alpha * problem.alpha)
        batch = TrexBatch(problem, self.ids)
        init = None if self.state is None else DRState(self.state.x.copy(), self.state.y.copy())
        first = batch.run(cfg, init, max_iter=min(self.k0, cfg.max_iter))
        objs = batch.objective(first.state.b, None).reshape(p, 2)
        pick = np.where(objs[:, 1] < objs[:, 0], 1, 0)
        cols = np.arange(p)
        if self.keep is not None and self.keep < p:
            cols = np.sort(np.argsort(objs[cols, pick], kind="stable")[: self.keep])
        rows = 2 * cols + pick[cols]
        chosen = TrexBatch(problem, [self.ids[i] for i in rows])
        start = first.state.rows(rows)
        start.converged[:] = False
        res = chosen.run(cfg, start)
        self.state = first.state
        self.state.x[rows], self.state.y[rows] = res.state.x, res.state.y
        best = _pick_winner(_results(chosen, res))
        r = self.X @ best.b - self.z
        return PathPoint(problem.alpha, best.b.copy(), eval_trex_objective(problem, best.b), best.id,
                         best.converged, int(res.state.iteration.max()), float(np.linalg.norm(r)))


def trex_alpha_path(X, z, q: float, alphas: Sequence[float], config: DRConfig = DRConfig(), *, k0: int = 50,
                    gamma_per_alpha: Optional[float] = None, keep: Optional[int] = None, stop=None
                    ) -> List[PathPoint]:
    """Solve along ``alphas`` in the given order with :class:`TrexPath`.

    ``stop(point)`` may return True to end the path early.
    """
    path = TrexPath(X, z, q, config, k0=k0, gamma_per_alpha=gamma_per_alpha, keep=keep)
    out: List[PathPoint] = []
    for alpha in alphas:
        out.append(path.solve(alpha))
        if stop is not None and stop(out[-1]):
            break
    return out


def _with_gamma(config: DRConfig, gamma: float) -> DRConfig:
    from dataclasses import replace

    return replace(config, gamma=float(gamma))
