"""Global-best particle swarm optimization over a box, deterministic per seed.

Each particle owns a counter-based RNG stream derived from the seed and its
index, so evaluation order (serial or parallel) cannot change the result.
Boundary handling is by reflection, velocities are clamped to a fraction of
the box span, and ties on cost break toward the lower particle index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple

import numpy as np

__all__ = ["PsoConfig", "PsoResult", "pso_minimize"]


@dataclass(frozen=True)
class PsoConfig:
    bounds: Sequence[Tuple[float, float]]
    particles: int = 40
    iterations: int = 200
    inertia: float = 0.72
    cognitive: float = 1.49
    social: float = 1.49
    seed: int = 0
    velocity_clamp: float = 0.5  # fraction of per-dimension span

    def __post_init__(self):
        if self.particles < 2:
            raise ValueError("need at least 2 particles")
        if not 0.0 < self.inertia < 1.0:
            raise ValueError("inertia must be in (0, 1)")
        if self.cognitive <= 0 or self.social <= 0:
            raise ValueError("cognitive and social weights must be positive")
        for lo, hi in self.bounds:
            if not lo < hi:
                raise ValueError(f"invalid bound ({lo}, {hi})")


@dataclass
class PsoResult:
    best_x: np.ndarray
    best_cost: float
    history: List[float]  # global best cost after init and each iteration


def _particle_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream keyed on (seed, particle index)."""
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(index)])
    return np.random.Generator(np.random.Philox(key=key))


def _reflect(x: np.ndarray, v: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """Reflect positions off the box walls, flipping the velocity component."""
    for _ in range(8):
        below = x < lo
        above = x > hi
        if not (below.any() or above.any()):
            break
        x = np.where(below, 2.0 * lo - x, x)
        x = np.where(above, 2.0 * hi - x, x)
        v = np.where(below | above, -v, v)
    np.clip(x, lo, hi, out=x)
    return x, v


def _check_finite(costs: np.ndarray, xs: np.ndarray):
    bad = ~np.isfinite(costs)
    if bad.any():
        i = int(np.argmax(bad))
        raise ValueError(
            f"cost function returned non-finite value {costs[i]} at x={xs[i]}"
        )


def pso_minimize(
    cost: Callable[[np.ndarray], float],
    cfg: PsoConfig,
    vectorized: bool = False,
) -> PsoResult:
    """Minimize ``cost`` over the configured box.

    With ``vectorized=True`` the cost callable receives an (n, d) array and
    must return n costs; otherwise it is called per particle.
    """
    lo = np.array([b[0] for b in cfg.bounds], dtype=float)
    hi = np.array([b[1] for b in cfg.bounds], dtype=float)
    span = hi - lo
    vmax = cfg.velocity_clamp * span
    n, d = cfg.particles, len(cfg.bounds)

    rngs = [_particle_rng(cfg.seed, i) for i in range(n)]
    x = np.stack([lo + span * rngs[i].random(d) for i in range(n)])
    v = np.stack([vmax * (2.0 * rngs[i].random(d) - 1.0) * 0.1 for i in range(n)])

    def evaluate(xs: np.ndarray) -> np.ndarray:
        if vectorized:
            costs = np.asarray(cost(xs), dtype=float)
        else:
            costs = np.array([float(cost(xi)) for xi in xs])
        _check_finite(costs, xs)
        return costs

    costs = evaluate(x)
    pbest_x = x.copy()
    pbest_cost = costs.copy()
    gbest_i = int(np.argmin(pbest_cost))  # argmin takes the lowest index on ties
    gbest_x = pbest_x[gbest_i].copy()
    gbest_cost = float(pbest_cost[gbest_i])
    history = [gbest_cost]

    for _ in range(cfg.iterations):
        r1 = np.stack([rngs[i].random(d) for i in range(n)])
        r2 = np.stack([rngs[i].random(d) for i in range(n)])
        v = (
            cfg.inertia * v
            + cfg.cognitive * r1 * (pbest_x - x)
            + cfg.social * r2 * (gbest_x - x)
        )
        np.clip(v, -vmax, vmax, out=v)
        x = x + v
        x, v = _reflect(x, v, lo, hi)

        costs = evaluate(x)
        improved = costs < pbest_cost
        pbest_x[improved] = x[improved]
        pbest_cost[improved] = costs[improved]
        best_i = int(np.argmin(pbest_cost))
        if pbest_cost[best_i] < gbest_cost:
            gbest_cost = float(pbest_cost[best_i])
            gbest_x = pbest_x[best_i].copy()
        history.append(gbest_cost)

    return PsoResult(best_x=gbest_x, best_cost=gbest_cost, history=history)
