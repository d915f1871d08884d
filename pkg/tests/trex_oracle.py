"""Reference solutions for tiny TREX instances, independent of the DR solver."""

import numpy as np

from prospect.trex import SubproblemId, TrexProblem, eval_subproblem_objective


def tiny_instance(seed, q, n=10, p=3, alpha=0.5, sigma=0.5):
    rng = np.random.default_rng([seed, 7])
    X = rng.normal(size=(n, p))
    b_star = np.zeros(p)
    b_star[:2] = (1.0, -1.0)
    z = X @ b_star + sigma * rng.normal(size=n)
    return TrexProblem(X, z, alpha, q)


def grid_minimize(f, center, half_width, points=41, passes=5, shrink=20.0):
    """Minimize ``f`` over a cube by a dense grid refined around the best point.

    ``f`` takes a batch ``(k, d)`` of points. Each pass shrinks the cube by
    ``shrink`` around the incumbent, so five passes reach a spacing of about
    ``half_width * 1e-7``.
    """
    center = np.asarray(center, dtype=float)
    d = center.size
    best_x, best_f = center, float(f(center[None])[0])
    for _ in range(passes):
        axes = [np.linspace(c - half_width, c + half_width, points) for c in best_x]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
        vals = f(grid)
        i = int(np.argmin(vals))
        if vals[i] <= best_f:
            best_x, best_f = grid[i], float(vals[i])
        half_width /= shrink / 2.0
    return best_x, best_f


def subproblem_minimum(problem: TrexProblem, sid: SubproblemId):
    return grid_minimize(lambda B: eval_subproblem_objective(problem, sid, B), np.zeros(problem.p), 2.0)
