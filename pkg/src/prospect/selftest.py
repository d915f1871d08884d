"""Randomized property suites for the perspective prox catalog.

Each suite returns :class:`SuiteResult` records (one per prox kind) holding
the largest violation seen and the input that produced it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .oracles import KINDS, brute_force_prox, make_kind, project_onto_gamma_C
from .prox import ConjugateGate, threshold_gate

__all__ = [
    "SuiteResult",
    "firm_nonexpansive_suite",
    "gate_suite",
    "moreau_suite",
    "oracle_suite",
    "run_selftest",
    "scaling_suite",
]

log = logging.getLogger(__name__)

SCALAR_KINDS = ("huber", "vapnik")
GAMMA_RANGE = (0.5, 2.0)
INPUT_SCALE = 1.5


@dataclass
class SuiteResult:
    suite: str
    kind: str
    cases: int
    max_violation: float
    tolerance: float
    worst: Optional[Dict[str, object]] = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return bool(self.max_violation <= self.tolerance)

    def summary(self) -> dict:
        out = {"suite": self.suite, "kind": self.kind, "cases": self.cases,
               "max_violation": self.max_violation, "tolerance": self.tolerance, "passed": self.passed}
        if not self.passed and self.worst is not None:
            out["worst"] = self.worst
        return out


def _dims_for(name: str) -> Sequence[int]:
    return (1,) if name in SCALAR_KINDS or name == "separable" else (1, 2, 3)


def _draw(kind, rng, batch):
    """A shared ``gamma`` and a batch of ``(eta, y)`` for one catalog entry."""
    gamma = float(np.exp(rng.uniform(*np.log(GAMMA_RANGE))))
    if kind.eta_dim == 1:
        eta = rng.normal(0.0, INPUT_SCALE, batch)
        y = rng.normal(0.0, INPUT_SCALE, (batch, kind.dim))
    else:
        eta = rng.normal(0.0, INPUT_SCALE, (batch, kind.eta_dim))
        y = rng.normal(0.0, INPUT_SCALE, (batch, kind.eta_dim))
    return gamma, eta, y


def _stack(eta, y, batch):
    return np.concatenate([np.reshape(eta, (batch, -1)), np.reshape(y, (batch, -1))], axis=1)


def _worst(gamma, eta, y, i):
    return {"gamma": gamma, "eta": np.reshape(eta, (eta.shape[0], -1))[i].tolist(), "y": y[i].tolist()}


def _groups(name, n, chunk, rng):
    """Split ``n`` draws into chunks, each with a random dimension and ``gamma``."""
    dims = _dims_for(name)
    left = n
    while left > 0:
        b = min(chunk, left)
        left -= b
        yield make_kind(name, dim=int(rng.choice(dims))), b


def oracle_suite(name: str, n: int = 1000, seed: int = 0, tol: float = 1e-5, chunk: int = 50) -> SuiteResult:
    """Closed-form prox against direct minimization of the Moreau objective."""
    rng = np.random.default_rng([seed, KINDS.index(name), 1])
    worst, best = None, 0.0
    for kind, b in _groups(name, n, chunk, rng):
        gamma, eta, y = _draw(kind, rng, b)
        out = kind.prox(gamma, eta, y)
        ref = brute_force_prox(kind, gamma, eta, y)
        err = np.max(np.abs(_stack(out.eta, out.y, b) - _stack(ref.eta, ref.y, b)), axis=1)
        i = int(np.argmax(err))
        if err[i] >= best:
            best, worst = float(err[i]), _worst(gamma, eta, y, i)
    return SuiteResult("oracle", name, n, best, tol, worst)


def firm_nonexpansive_suite(name: str, n: int = 10_000, seed: int = 0, tol: float = 1e-10,
                            chunk: int = 500) -> SuiteResult:
    """``||P a - P b||^2 <= <P a - P b, a - b>`` on random pairs sharing ``gamma``."""
    rng = np.random.default_rng([seed, KINDS.index(name), 2])
    worst, best = None, -np.inf
    for kind, b in _groups(name, n, chunk, rng):
        gamma, eta1, y1 = _draw(kind, rng, b)
        _, eta2, y2 = _draw(kind, rng, b)
        p1 = kind.prox(gamma, eta1, y1)
        p2 = kind.prox(gamma, eta2, y2)
        dp = _stack(p1.eta, p1.y, b) - _stack(p2.eta, p2.y, b)
        dx = _stack(eta1, y1, b) - _stack(eta2, y2, b)
        viol = np.sum(dp * dp, axis=1) - np.sum(dp * dx, axis=1)
        i = int(np.argmax(viol))
        if viol[i] >= best:
            best = float(viol[i])
            worst = {"a": _worst(gamma, eta1, y1, i), "b": _worst(gamma, eta2, y2, i)}
    return SuiteResult("firm_nonexpansive", name, n, max(best, 0.0), tol, worst)


def gate_suite(name: str, n: int = 10_000, seed: int = 0, chunk: int = 500) -> SuiteResult:
    """The prox is exactly zero iff ``eta + gamma phi*(y/gamma) <= 0``.

    Separable kinds are checked block by block. The violation is the number
    of disagreeing draws, so the tolerance is 0.
    """
    rng = np.random.default_rng([seed, KINDS.index(name), 3])
    bad, worst = 0, None
    for kind, b in _groups(name, n, chunk, rng):
        gamma, eta, y = _draw(kind, rng, b)
        # shift half the draws towards the zero region so both cases occur
        eta = eta - np.where(rng.random(np.shape(eta)) < 0.5, 2.0 * INPUT_SCALE, 0.0)
        out = kind.prox(gamma, eta, y)
        if kind.conj is None:
            blk = make_kind("quadratic", dim=1, delta=0.0, v=np.zeros(1))
            gate = np.stack([threshold_gate(eta[:, i], y[:, i : i + 1], gamma, ConjugateGate(blk.conj))
                             for i in range(kind.eta_dim)], axis=1)
            zero = (np.asarray(out.eta) == 0) & (np.asarray(out.y) == 0)
        else:
            gate = threshold_gate(eta, y, gamma, ConjugateGate(kind.conj))
            zero = (np.asarray(out.eta) == 0) & np.all(np.asarray(out.y) == 0, axis=-1)
        mismatch = np.flatnonzero(np.any(np.reshape(gate != zero, (b, -1)), axis=1))
        bad += mismatch.size
        if mismatch.size and worst is None:
            worst = _worst(gamma, eta, y, int(mismatch[0]))
    return SuiteResult("gate", name, n, float(bad), 0.0, worst)


def scaling_suite(name: str, n: int = 1000, seed: int = 0, lambdas=(0.5, 2.0, 10.0), tol: float = 1e-9,
                  chunk: int = 250) -> SuiteResult:
    """Positive homogeneity: ``prox_{l gamma}(l eta, l y) = l prox_gamma(eta, y)``."""
    rng = np.random.default_rng([seed, KINDS.index(name), 4])
    worst, best = None, 0.0
    for kind, b in _groups(name, n, chunk, rng):
        gamma, eta, y = _draw(kind, rng, b)
        base = kind.prox(gamma, eta, y)
        ref = _stack(base.eta, base.y, b)
        for lam in lambdas:
            out = kind.prox(lam * gamma, lam * eta, lam * y)
            diff = np.linalg.norm(_stack(out.eta, out.y, b) - lam * ref, axis=1)
            rel = diff / np.maximum(1.0, lam * np.linalg.norm(ref, axis=1))
            i = int(np.argmax(rel))
            if rel[i] >= best:
                best, worst = float(rel[i]), dict(_worst(gamma, eta, y, i), lam=lam)
    return SuiteResult("scaling", name, n * len(lambdas), best, tol, worst)


def moreau_suite(name: str, n: int = 200, seed: int = 0, tol: float = 1e-6) -> SuiteResult:
    """``prox(x) = x - P_{gamma C}(x)`` with the projection found numerically (scalar kinds)."""
    if name not in SCALAR_KINDS:
        raise ValueError(f"the Moreau suite covers {SCALAR_KINDS}, not {name!r}")
    rng = np.random.default_rng([seed, KINDS.index(name), 5])
    kind = make_kind(name, dim=1)
    gamma, eta, y = _draw(kind, rng, n)
    out = kind.prox(gamma, eta, y)
    proj = project_onto_gamma_C(kind.conj, gamma, eta, y[:, 0], u_max=kind.conj_radius)
    err = np.hypot(np.asarray(out.eta) - (eta - proj.eta), np.asarray(out.y)[:, 0] - (y[:, 0] - proj.y))
    i = int(np.argmax(err))
    return SuiteResult("moreau", name, n, float(err[i]), tol, _worst(gamma, eta, y, i))


def run_selftest(kinds: Sequence[str] = KINDS, *, oracle_draws: int = 1000, pairs: int = 10_000, seed: int = 0,
                 oracle: bool = True) -> List[SuiteResult]:
    """Every suite on every kind; the Moreau suite only on the scalar kinds."""
    results: List[SuiteResult] = []
    for name in kinds:
        if name not in KINDS:
            raise ValueError(f"unknown kind {name!r}; choose from {KINDS}")
        suites = [firm_nonexpansive_suite(name, pairs, seed), gate_suite(name, pairs, seed),
                  scaling_suite(name, max(1, pairs // 10), seed)]
        if oracle:
            suites.insert(0, oracle_suite(name, oracle_draws, seed))
        if name in SCALAR_KINDS:
            suites.append(moreau_suite(name, seed=seed))
        for r in suites:
            log.info("selftest %s/%s: max violation %.3e (tol %.1e)", r.suite, r.kind, r.max_violation, r.tolerance)
        results.extend(suites)
    return results
