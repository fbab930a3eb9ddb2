"""Bayesian optimization with a GP surrogate and a UCB acquisition rule.

The optimizer speaks the same ask/tell protocol as the evolutionary
algorithms: `ask` proposes candidates in domain coordinates, `tell` feeds
back observed values. Internally everything lives in the unit hypercube.

Scores follow the minimization convention: the acquisition value of a point
is `-mean + beta * std`, and the proposer maximizes it, preferring points
that are predicted low or still uncertain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gp
from .objectives import ObjectiveSpec, SearchSpace


@dataclass(frozen=True)
class BoConfig:
    initial_design_size: int = 10
    ucb_beta: float = 2.0
    acq_restarts: int = 10
    acq_local_steps: int = 50
    refit_every: int = 10

    def __post_init__(self):
        if self.initial_design_size < 2:
            raise ValueError("initial_design_size must be at least 2")
        if self.ucb_beta < 0:
            raise ValueError("ucb_beta must be nonnegative")
        if self.acq_restarts < 1 or self.acq_local_steps < 1:
            raise ValueError("acquisition search needs at least 1 restart and 1 step")
        if self.refit_every < 1:
            raise ValueError("refit_every must be at least 1")


@dataclass(frozen=True)
class AcquisitionValue:
    """Best point found by the acquisition search, in unit-cube coordinates."""

    point: np.ndarray
    score: float


def ucb_scores(posterior: gp.GPPosterior, points, beta: float) -> np.ndarray:
    """Acquisition score `-mean + beta * std` for each row of `points`."""
    mean, variance = gp.predict_batch(posterior, points)
    return -mean + beta * np.sqrt(variance)


def ucb_score(posterior: gp.GPPosterior, x, beta: float) -> float:
    return float(ucb_scores(posterior, np.atleast_2d(x), beta)[0])


STEP_INIT = 0.1
STEP_FLOOR = 1e-4


def maximize_acquisition(
    posterior: gp.GPPosterior,
    beta: float,
    rng: np.random.Generator,
    restarts: int = 10,
    local_steps: int = 50,
) -> AcquisitionValue:
    """Multistart coordinate pattern search over the unit cube.

    All restarts advance in lockstep so every iteration scores one batched
    block of axis neighbors instead of looping point by point. A restart
    moves to its best improving neighbor, halves its step otherwise, and
    freezes once the step falls below `STEP_FLOOR`.
    """
    dim = posterior.train_inputs.shape[1]
    x = rng.uniform(size=(restarts, dim))
    score = ucb_scores(posterior, x, beta)
    step = np.full(restarts, STEP_INIT)
    offsets = np.concatenate([np.eye(dim), -np.eye(dim)])
    for _ in range(local_steps):
        active = np.flatnonzero(step >= STEP_FLOOR)
        if active.size == 0:
            break
        neighbors = x[active, None, :] + step[active, None, None] * offsets[None, :, :]
        np.clip(neighbors, 0.0, 1.0, out=neighbors)
        neighbor_scores = ucb_scores(posterior, neighbors.reshape(-1, dim), beta)
        neighbor_scores = neighbor_scores.reshape(active.size, 2 * dim)
        pick = np.argmax(neighbor_scores, axis=1)
        picked = neighbor_scores[np.arange(active.size), pick]
        improved = picked > score[active]
        moved = active[improved]
        x[moved] = neighbors[improved, pick[improved]]
        score[moved] = picked[improved]
        step[active[~improved]] *= 0.5
    winner = int(np.argmax(score))
    return AcquisitionValue(point=x[winner].copy(), score=float(score[winner]))


class BayesianOptimizer:
    """GP-UCB optimizer behind the ask/tell protocol.

    The first `ask` returns a uniform initial design; afterwards each `ask`
    returns the single acquisition maximizer. `tell` refits the posterior on
    every call and re-selects hyperparameters on the first fit and then every
    `refit_every` observations.
    """

    def __init__(self, space: SearchSpace, rng: np.random.Generator, config: BoConfig | None = None):
        self.space = space
        self.rng = rng
        self.config = config or BoConfig()
        self._inputs: np.ndarray = np.empty((0, space.dimension))
        self._targets: np.ndarray = np.empty(0)
        self._params: gp.KernelParams | None = None
        self._posterior: gp.GPPosterior | None = None

    @property
    def n_observed(self) -> int:
        return self._targets.size

    @property
    def posterior(self) -> gp.GPPosterior | None:
        return self._posterior

    def ask(self) -> np.ndarray:
        if self._posterior is None:
            unit = self.rng.uniform(size=(self.config.initial_design_size, self.space.dimension))
            return self.space.from_unit(unit)
        best = maximize_acquisition(
            self._posterior,
            self.config.ucb_beta,
            self.rng,
            restarts=self.config.acq_restarts,
            local_steps=self.config.acq_local_steps,
        )
        return self.space.from_unit(best.point[None, :])

    def tell(self, candidates, values) -> None:
        unit = self.space.to_unit(np.atleast_2d(np.asarray(candidates, dtype=float)))
        y = np.atleast_1d(np.asarray(values, dtype=float))
        if unit.shape[0] != y.size:
            raise ValueError("candidates and values must have matching lengths")
        self._inputs = np.vstack([self._inputs, unit])
        self._targets = np.concatenate([self._targets, y])
        total = self._targets.size
        if total >= 2 and (self._params is None or total % self.config.refit_every == 0):
            self._params = gp.fit_hyperparameters(self._inputs, self._targets)
        params = self._params
        if params is None:
            # Degenerate single-observation case; replaced at the next tell.
            params = gp.KernelParams(
                signal_variance=1.0, length_scales=np.full(self.space.dimension, 0.2)
            )
        self._posterior = gp.fit(self._inputs, self._targets, params)


def run_bo(spec: ObjectiveSpec, budget: int, seed: int, config: BoConfig | None = None):
    """Run one seeded BO trajectory against `spec` and return its trace."""
    from . import harness

    optimizer = BayesianOptimizer(spec.space, np.random.default_rng(seed), config)
    return harness.run_single(spec, optimizer, budget=budget, run_id=seed, algorithm="bo")
