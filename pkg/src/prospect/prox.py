"""Prox building blocks and the identities used to check them.

A perspective argument is a pair ``(eta, y)`` of a scalar and a vector. The
operators in this package work on batches: ``eta`` has shape ``batch`` and
``y`` has shape ``batch + (d,)``. A single pair is the case ``batch == ()``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np

from .errors import DomainError

__all__ = [
    "ConjugateGate",
    "ProxStep",
    "ScaledPair",
    "as_pair",
    "as_step",
    "moreau_residual",
    "project_box",
    "project_orthant",
    "prox_norm_plus_support",
    "soft_threshold",
    "threshold_gate",
]


class ScaledPair(NamedTuple):
    """A perspective argument ``(eta, y)``, possibly batched."""

    eta: np.ndarray
    y: np.ndarray

    def stack(self) -> np.ndarray:
        """Concatenate into one array of shape ``batch + (1 + d,)``."""
        return np.concatenate([self.eta[..., None], self.y], axis=-1)


@dataclass(frozen=True)
class ProxStep:
    """Positive prox scaling ``gamma``."""

    gamma: float

    def __post_init__(self):
        g = float(self.gamma)
        if not (np.isfinite(g) and g > 0):
            raise ValueError(f"gamma must be a positive finite number, got {self.gamma!r}")
        object.__setattr__(self, "gamma", g)


@dataclass(frozen=True)
class ConjugateGate:
    """Membership test for ``{(mu, u) : mu + phi*(u) <= 0}``.

    ``conjugate_at`` maps an array ``u`` of shape ``batch + (d,)`` to
    ``phi*(u)`` of shape ``batch``; ``+inf`` marks points outside the domain.
    """

    conjugate_at: Callable[[np.ndarray], np.ndarray]


StepLike = Union[ProxStep, float]


def as_step(step: StepLike) -> float:
    """Return ``gamma`` from a :class:`ProxStep` or a bare positive number."""
    return step.gamma if isinstance(step, ProxStep) else ProxStep(step).gamma


def as_pair(eta, y) -> ScaledPair:
    """Validate and broadcast a (batched) perspective argument.

    A scalar or 1-D ``y`` paired with a scalar ``eta`` is treated as one
    point; otherwise the leading axes of ``y`` must match ``eta``.
    """
    eta = np.asarray(eta, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.ndim == eta.ndim:
        y = y[..., None]
    if y.shape[:-1] != eta.shape:
        raise ValueError(f"eta shape {eta.shape} does not match y shape {y.shape}")
    if not (np.all(np.isfinite(eta)) and np.all(np.isfinite(y))):
        raise ValueError("perspective arguments must be finite")
    return ScaledPair(eta, y)


def soft_threshold(x, gamma):
    """Componentwise ``sign(x) * max(|x| - gamma, 0)``."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - gamma, 0.0)


def project_orthant(x):
    """Projection onto the nonnegative orthant."""
    return np.maximum(np.asarray(x, dtype=float), 0.0)


def project_box(x, lo, hi):
    """Projection onto the box ``[lo, hi]``."""
    return np.clip(np.asarray(x, dtype=float), lo, hi)


def prox_norm_plus_support(x, gamma, projector_onto_C, *, trivial_D: bool = False):
    """Prox of ``gamma (||.|| + sigma_D)`` given the projector onto ``C = gamma D``.

    The result is ``0`` when ``d_C(x) <= gamma`` and
    ``(1 - gamma/d_C(x)) (x - P_C x)`` otherwise. For a cone ``D`` the
    residual ``x - P_C x`` is the projection onto the polar cone.

    ``D = {0}`` is excluded; pass ``trivial_D=True`` to signal that case and
    get a :class:`ValueError` instead of a silently wrong answer.
    """
    if trivial_D:
        raise ValueError("D = {0} is not allowed: the support function term vanishes")
    gamma = as_step(gamma)
    x = np.asarray(x, dtype=float)
    r = x - projector_onto_C(x)
    d = np.linalg.norm(r, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(d > gamma, 1.0 - gamma / d, 0.0)
    return scale * r


def threshold_gate(eta, y, gamma, gate: ConjugateGate):
    """True where ``eta + gamma * phi*(y/gamma) <= 0``.

    At such points every perspective prox returns ``(0, 0)``. A conjugate
    value of ``+inf`` makes the gate false; ``nan`` raises
    :class:`DomainError`.
    """
    pair = as_pair(eta, y)
    g = as_step(gamma)
    conj = np.asarray(gate.conjugate_at(pair.y / g), dtype=float)
    if np.any(np.isnan(conj)):
        raise DomainError("conjugate evaluated to nan")
    out = pair.eta + g * conj <= 0
    return bool(out) if out.ndim == 0 else out


def moreau_residual(prox_value: ScaledPair, projector_onto_gammaC, point: ScaledPair):
    """Distance between a prox value and ``point - P_{gamma C}(point)``.

    ``projector_onto_gammaC`` takes and returns a :class:`ScaledPair`.
    """
    proj = projector_onto_gammaC(point)
    d_eta = np.asarray(prox_value.eta) - (point.eta - proj.eta)
    d_y = np.asarray(prox_value.y) - (point.y - proj.y)
    d_y = d_y.reshape(np.shape(d_eta) + (-1,))
    return np.sqrt(d_eta**2 + np.sum(d_y**2, axis=-1))
