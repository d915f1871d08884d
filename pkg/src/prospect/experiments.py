"""Synthetic linear models and the two experiment harnesses.

Random streams come from :class:`numpy.random.Philox` seeded by a
:class:`numpy.random.SeedSequence` whose spawn key names the experiment and
the repetition, so a realization never depends on which worker produced it
or in what order.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import statistics
import time
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .solvers import DRConfig
from .trex import SubproblemId, TrexBatch, TrexPath, TrexProblem, dr_sel

__all__ = [
    "ExperimentTable",
    "LinearModelSpec",
    "PhaseTransitionConfig",
    "ScalingConfig",
    "default_support_size",
    "gen_linear_model",
    "n_for_theta",
    "recovery_rates",
    "rescaled_sample_size",
    "run_phase_transition",
    "run_scaling_benchmark",
    "support_metrics",
]

log = logging.getLogger(__name__)

# spawn-key prefixes of the two experiments
_PHASE, _SCALING = 1, 2


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=tuple(key))))


@dataclass(frozen=True)
class LinearModelSpec:
    """``z = X b* + sigma e`` with equicorrelated Gaussian rows.

    ``b*`` alternates ``-1, +1, -1, ...`` on its first ``m`` coordinates and
    is zero elsewhere. Columns of ``X`` are rescaled to norm ``sqrt(n)``.
    """

    n: int
    p: int
    m: int
    sigma: float = 1.0
    corr: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if not 0 <= self.m <= self.p:
            raise ValueError(f"need 0 <= m <= p, got m={self.m}, p={self.p}")
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")
        if not 0 <= self.corr < 1:
            raise ValueError(f"corr must lie in [0, 1), got {self.corr}")

    def b_star(self) -> np.ndarray:
        b = np.zeros(self.p)
        b[: self.m] = np.where(np.arange(self.m) % 2 == 0, -1.0, 1.0)
        return b


def gen_linear_model(spec: LinearModelSpec, rng: Optional[np.random.Generator] = None):
    """Draw ``(X, z, b_star)``.

    Rows are ``N(0, Sigma)`` with unit diagonal and off-diagonal ``corr``,
    obtained as ``G Sigma^{1/2}`` where ``Sigma^{1/2} = sqrt(1-rho) I + kappa 11^T``.
    ``rng`` defaults to a Philox stream seeded by ``spec.seed``.
    """
    rng = _rng(spec.seed) if rng is None else rng
    n, p, rho = spec.n, spec.p, spec.corr
    G = rng.standard_normal((n, p))
    a = math.sqrt(1.0 - rho)
    kappa = (math.sqrt(1.0 - rho + p * rho) - a) / p
    X = a * G + kappa * G.sum(axis=1, keepdims=True)
    X *= math.sqrt(n) / np.linalg.norm(X, axis=0)
    b = spec.b_star()
    z = X @ b
    if spec.sigma > 0:
        z = z + spec.sigma * rng.standard_normal(n)
    return X, z, b


def default_support_size(p: int) -> int:
    """``ceil(0.4 p^{3/4})``, the phase-transition sparsity level."""
    return math.ceil(0.4 * p**0.75 - 1e-12)


def _check_pm(p, m):
    if not (m >= 1 and p > m):
        raise ValueError(f"need p > m >= 1, got p={p}, m={m}")


def rescaled_sample_size(n, p, m) -> float:
    """``theta = n / (2 m log(p - m))``."""
    _check_pm(p, m)
    return n / (2.0 * m * math.log(p - m))


def n_for_theta(theta, p, m) -> int:
    """Sample size closest to ``theta``; never below 1."""
    _check_pm(p, m)
    return max(1, int(round(theta * 2.0 * m * math.log(p - m))))


def support_metrics(b_hat, b_star, zero_threshold: float = 0.05, X=None):
    """Return ``(exact_recovery, hamming, est_err, pred_err)``.

    Supports are ``{j : |b_j| > zero_threshold}``. Both errors are divided by
    ``n``, the row count of ``X``; without ``X`` the prediction error is nan
    and ``n`` is taken as ``len(b_star)``.
    """
    b_hat = np.asarray(b_hat, dtype=float)
    b_star = np.asarray(b_star, dtype=float)
    if b_hat.shape != b_star.shape:
        raise ValueError(f"shape mismatch: {b_hat.shape} vs {b_star.shape}")
    s_hat = np.abs(b_hat) > zero_threshold
    s_star = np.abs(b_star) > zero_threshold
    ham = int(np.count_nonzero(s_hat != s_star))
    d = b_hat - b_star
    if X is None:
        n, pred = b_star.size, math.nan
    else:
        X = np.asarray(X, dtype=float)
        n = X.shape[0]
        Xd = X @ d
        pred = float(Xd @ Xd) / n
    return ham == 0, ham, float(d @ d) / n, pred


class ExperimentTable:
    """Append-only rows of ``(config_id, seed, metric, value)``."""

    HEADER = ("config_id", "seed", "metric", "value")

    def __init__(self, rows: Iterable[Tuple[str, int, str, float]] = (), meta: Optional[dict] = None):
        self._rows: List[Tuple[str, int, str, float]] = []
        self.meta = dict(meta or {})
        for r in rows:
            self.append(*r)

    def append(self, config_id: str, seed: int, metric: str, value) -> None:
        if "," in config_id or "," in metric:
            raise ValueError("config ids and metric names may not contain commas")
        self._rows.append((str(config_id), int(seed), str(metric), float(value)))

    def extend(self, other: "ExperimentTable") -> None:
        self._rows.extend(other._rows)

    @property
    def rows(self) -> Tuple[Tuple[str, int, str, float], ...]:
        return tuple(self._rows)

    def __len__(self):
        return len(self._rows)

    def select(self, metric: str) -> List[Tuple[str, int, float]]:
        return [(c, s, v) for c, s, m, v in self._rows if m == metric]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.HEADER)
        for c, s, m, v in self._rows:
            w.writerow((c, s, m, repr(v)))
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, text: str) -> "ExperimentTable":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if tuple(header or ()) != cls.HEADER:
            raise ValueError(f"unexpected header {header}")
        return cls((c, int(s), m, float(v)) for c, s, m, v in reader)

    def to_json(self) -> dict:
        out: Dict[str, dict] = {}
        for c, s, m, v in self._rows:
            entry = out.setdefault(c, {"seed": s, "metrics": {}})
            entry["metrics"][m] = v if math.isfinite(v) else repr(v)
        return {"meta": self.meta, "configs": out}


# ---------------------------------------------------------------- phase transition


def _grid(lo, hi, step):
    k = int(round((hi - lo) / step))
    return tuple(round(lo + i * step, 10) for i in range(k + 1))


@dataclass(frozen=True)
class PhaseTransitionConfig:
    """Support recovery over a grid of rescaled sample sizes.

    ``tol``, ``gamma_per_alpha``, ``relaxation``, ``max_iter`` and ``k0``
    set the path solver (see :class:`prospect.trex.TrexPath`).
    ``stop_at_exact`` ends an upward ``alpha`` sweep at the first exact
    recovery; since the recorded ``alpha`` is the first Hamming minimizer in
    grid order, this does not change the table. A solution whose residual
    norm is at most ``interpolation_rtol * max(1, ||z||)`` counts as
    interpolating. ``keep``, if set, continues only that many columns past
    the ``k0`` screening iterations at each ``alpha``.
    """

    p: int = 64
    m: Optional[int] = None
    theta_grid: Tuple[float, ...] = _grid(0.2, 1.6, 0.2)
    q_list: Tuple[float, ...] = (9 / 8, 7 / 6, 3 / 2, 2.0)
    alpha_grid: Tuple[float, ...] = _grid(0.1, 2.0, 0.05)
    repetitions: int = 12
    zero_threshold: float = 0.05
    sigma: float = 0.5
    corr: float = 0.0
    seed: int = 0
    tol: float = 1e-7
    gamma_per_alpha: float = 70.0
    relaxation: float = 1.95
    max_iter: int = 100_000
    k0: int = 50
    keep: Optional[int] = 16
    stop_at_exact: bool = True
    interpolation_rtol: float = 1e-4

    def __post_init__(self):
        for name in ("theta_grid", "q_list", "alpha_grid"):
            g = tuple(float(v) for v in getattr(self, name))
            if not g:
                raise ValueError(f"{name} must be nonempty")
            if any(b <= a for a, b in zip(g, g[1:])):
                raise ValueError(f"{name} must be strictly ascending")
            object.__setattr__(self, name, g)
        if any(q <= 1 for q in self.q_list):
            raise ValueError("every q must exceed 1 (q = 1 is the square-root Lasso)")
        if self.repetitions < 1:
            raise ValueError("repetitions must be positive")
        if self.keep is not None and self.keep < 1:
            raise ValueError("keep must be positive")
        _check_pm(self.p, self.support_size)

    @property
    def support_size(self) -> int:
        return default_support_size(self.p) if self.m is None else int(self.m)

    def dr_config(self) -> DRConfig:
        return DRConfig(gamma=1.0, relaxation=self.relaxation, tol=self.tol, max_iter=self.max_iter)


PHASE_METRICS = ("n", "alpha", "exact_recovery", "hamming", "est_err", "pred_err", "converged", "iterations",
                 "path_solves")


def _q_label(q: float) -> str:
    f = Fraction(q).limit_denominator(64)
    return str(f) if abs(float(f) - q) < 1e-12 else repr(q)


def _phase_id(theta, q, rep):
    return f"theta={theta:g};q={_q_label(q)};rep={rep}"


def _interpolates(point, z, rtol) -> bool:
    return point.residual_norm <= rtol * max(1.0, float(np.linalg.norm(z)))


def _sweep(cfg: PhaseTransitionConfig, X, z, b_star, q):
    """Hamming-minimizing point of the ``alpha`` grid, first in grid order.

    Writing the objective as ``D(b)/alpha + ||b||_1`` with ``D >= 0`` and
    ``D = 0`` exactly on interpolating ``b`` shows that an interpolating
    minimizer at ``alpha`` stays a minimizer at every smaller ``alpha``. So
    when the smallest ``alpha`` already interpolates, the grid is swept from
    the top down and stops at the first interpolating solution. Otherwise it
    is swept upwards and, with ``stop_at_exact``, stops at Hamming distance 0.
    """
    alphas = cfg.alpha_grid
    path = TrexPath(X, z, q, cfg.dr_config(), k0=cfg.k0, gamma_per_alpha=cfg.gamma_per_alpha, keep=cfg.keep)
    metrics = {}

    def visit(k):
        point = path.solve(alphas[k])
        metrics[k] = (point, support_metrics(point.b_hat, b_star, cfg.zero_threshold, X))
        return point

    first = visit(0)
    if len(alphas) > 1 and _interpolates(first, z, cfg.interpolation_rtol):
        ham0 = metrics[0][1][1]
        for k in range(len(alphas) - 1, 0, -1):
            if _interpolates(visit(k), z, cfg.interpolation_rtol):
                break
        # every alpha below the last one visited shares the minimizer found at alphas[0]
        for k in range(1, len(alphas)):
            metrics.setdefault(k, (None, (ham0 == 0, ham0)))
    else:
        for k in range(1, len(alphas)):
            if cfg.stop_at_exact and metrics[k - 1][1][1] == 0:
                break
            visit(k)
    best = min(metrics, key=lambda k: (metrics[k][1][1], k))
    point, met = metrics[best]
    return point, met, sum(1 for v in metrics.values() if v[0] is not None)


def _phase_cell(cfg: PhaseTransitionConfig, ti: int, qi: int, rep: int):
    from threadpoolctl import threadpool_limits

    theta, q = cfg.theta_grid[ti], cfg.q_list[qi]
    m = cfg.support_size
    n = n_for_theta(theta, cfg.p, m)
    # one realization per (theta, repetition), shared by every q
    spec = LinearModelSpec(n, cfg.p, m, cfg.sigma, cfg.corr, cfg.seed)
    X, z, b_star = gen_linear_model(spec, _rng(cfg.seed, _PHASE, ti, rep))
    with threadpool_limits(limits=1):
        point, (exact, ham, est, pred), solves = _sweep(cfg, X, z, b_star, q)
    values = (n, point.alpha, float(exact), ham, est, pred, float(point.converged), point.iterations, solves)
    cid = _phase_id(theta, q, rep)
    log.info("phase %s: hamming %d at alpha %g after %d solves", cid, ham, point.alpha, solves)
    return [(cid, cfg.seed, k, v) for k, v in zip(PHASE_METRICS, values)]


def run_phase_transition(config: PhaseTransitionConfig = PhaseTransitionConfig(), n_jobs: int = 1) -> ExperimentTable:
    """Exact-recovery experiment over ``theta x q x repetition``.

    For every cell the TREX path is computed over ``alpha_grid`` and the
    metrics of the ``alpha`` with the smallest Hamming distance to the true
    support are recorded (first such ``alpha`` on ties). Rows are ordered by
    ``theta``, then ``q``, then repetition, whatever ``n_jobs`` is.
    """
    tasks = [(ti, qi, r) for ti in range(len(config.theta_grid)) for qi in range(len(config.q_list))
             for r in range(config.repetitions)]
    if n_jobs == 1:
        parts = [_phase_cell(config, *t) for t in tasks]
    else:
        from joblib import Parallel, delayed

        parts = Parallel(n_jobs=n_jobs)(delayed(_phase_cell)(config, *t) for t in tasks)
    meta = {"experiment": "phase_transition", **_jsonable(asdict(config)), "support_size": config.support_size}
    table = ExperimentTable(meta=meta)
    for part in parts:
        for row in part:
            table.append(*row)
    return table


def recovery_rates(table: ExperimentTable) -> Dict[str, Dict[float, float]]:
    """Mean exact-recovery rate keyed by ``q`` label, then ``theta``."""
    acc: Dict[str, Dict[float, List[float]]] = {}
    for cid, _, v in table.select("exact_recovery"):
        fields = dict(part.split("=", 1) for part in cid.split(";"))
        acc.setdefault(fields["q"], {}).setdefault(float(fields["theta"]), []).append(v)
    return {q: {t: float(np.mean(v)) for t, v in sorted(d.items())} for q, d in acc.items()}


# ---------------------------------------------------------------- scaling


@dataclass(frozen=True)
class ScalingConfig:
    """Timing of one column's sign pair with plain DR and with DR-Sel."""

    dims: Tuple[int, ...] = (20, 50, 100, 200, 500)
    n: int = 200
    repetitions: int = 20
    m: int = 20
    corr: float = 0.3
    sigma: float = 1.0
    alpha: float = 0.5
    q: float = 2.0
    column: int = 0
    k0: int = 50
    seed: int = 0
    gamma: float = 70.0
    relaxation: float = 1.95
    tol: float = 1e-10
    max_iter: int = 100_000

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(p) for p in self.dims))
        if not self.dims or any(p < 1 for p in self.dims):
            raise ValueError("dims must be a nonempty list of positive integers")
        if self.repetitions < 1 or self.n < 1:
            raise ValueError("n and repetitions must be positive")
        if not 0 <= self.column < min(self.dims):
            raise ValueError("column must index a column of every design")

    def dr_config(self) -> DRConfig:
        return DRConfig(gamma=self.gamma, relaxation=self.relaxation, tol=self.tol, max_iter=self.max_iter)


SCALING_METRICS = ("time_dr", "time_dr_sel", "objective_plus", "objective_minus", "objective_dr_sel",
                   "selected_sign", "selection_correct", "converged")
#: metrics that depend on the wall clock and are excluded from determinism checks
TIMING_METRICS = frozenset({"time_dr", "time_dr_sel"})


def _scaling_cell(cfg: ScalingConfig, pi: int, rep: int):
    from threadpoolctl import threadpool_limits

    p = cfg.dims[pi]
    spec = LinearModelSpec(cfg.n, p, min(cfg.m, p), cfg.sigma, cfg.corr, cfg.seed)
    X, z, _ = gen_linear_model(spec, _rng(cfg.seed, _SCALING, pi, rep))
    problem = TrexProblem(X, z, cfg.alpha, cfg.q)
    dr = cfg.dr_config()
    j = cfg.column
    with threadpool_limits(limits=1):
        t0 = time.perf_counter()
        objs, conv = [], True
        for s in (1, -1):
            batch = TrexBatch(problem, [SubproblemId(j, s)])
            res = batch.run(dr)
            objs.append(float(batch.objective(res.state.b, None)[0]))
            conv &= bool(res.state.converged[0])
        t1 = time.perf_counter()
        sel = dr_sel(problem, j, dr, cfg.k0)
        t2 = time.perf_counter()
    correct = sel.result.objective <= min(objs) + 1e-6
    values = (t1 - t0, t2 - t1, objs[0], objs[1], sel.result.objective, sel.selected.s, float(correct),
              float(conv and sel.result.converged))
    cid = f"scaling;p={p};rep={rep}"
    return [(cid, cfg.seed, k, v) for k, v in zip(SCALING_METRICS, values)]


def run_scaling_benchmark(config: ScalingConfig = ScalingConfig(), n_jobs: int = 1) -> ExperimentTable:
    """Time plain DR on both signs of one column against DR-Sel.

    Each realization records both timings, the three objectives, the chosen
    sign and whether it attains the two-sign minimum within ``1e-6``.
    Per-dimension mean and median timings go to ``table.meta["summary"]``.
    """
    tasks = [(pi, r) for pi in range(len(config.dims)) for r in range(config.repetitions)]
    if n_jobs == 1:
        parts = [_scaling_cell(config, *t) for t in tasks]
    else:
        from joblib import Parallel, delayed

        parts = Parallel(n_jobs=n_jobs)(delayed(_scaling_cell)(config, *t) for t in tasks)
    table = ExperimentTable(meta={"experiment": "scaling", **_jsonable(asdict(config))})
    for part in parts:
        for row in part:
            table.append(*row)
    table.meta["summary"] = _timing_summary(table, config)
    return table


def _timing_summary(table: ExperimentTable, cfg: ScalingConfig) -> dict:
    out = {}
    for p in cfg.dims:
        entry = {}
        for metric in TIMING_METRICS:
            vals = [v for c, _, v in table.select(metric) if c.split(";")[1] == f"p={p}"]
            entry[metric] = {"mean": statistics.fmean(vals), "median": statistics.median(vals)}
        out[str(p)] = entry
    return out


def _jsonable(d: dict) -> dict:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}
