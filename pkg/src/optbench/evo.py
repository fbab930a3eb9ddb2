"""Evolutionary optimizers: a (mu+lambda) ES, CMA-ES, and global-best PSO.

All three speak the ask/tell protocol used across the package: `ask` returns
a (k, d) array of candidates in domain coordinates, `tell` feeds back the
observed objective values for exactly those candidates. Lower is better.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .objectives import SearchSpace


def default_lambda(dimension: int) -> int:
    """Population size 4 + floor(3 ln d), the usual CMA-ES default."""
    if dimension < 1:
        raise ValueError("dimension must be positive")
    return 4 + int(np.floor(3.0 * np.log(dimension)))


@dataclass(frozen=True)
class EsParams:
    mu: int = 5
    lam: int = 10
    initial_step_scale: float = 0.3  # of the domain half-width
    step_decay: float = 0.99

    def __post_init__(self):
        if not 1 <= self.mu <= self.lam:
            raise ValueError("need 1 <= mu <= lam")
        if self.initial_step_scale <= 0 or not 0 < self.step_decay <= 1:
            raise ValueError("step parameters out of range")


class EvolutionStrategy:
    """(mu+lambda) evolution strategy with isotropic Gaussian mutation.

    The first ask seeds the population uniformly; afterwards each ask mutates
    random parents. Selection is elitist: parents and offspring are pooled and
    the best mu survive, with parents winning ties (stable sort, parents
    listed first).
    """

    def __init__(self, space: SearchSpace, rng: np.random.Generator, params: EsParams | None = None):
        self.space = space
        self.rng = rng
        self.params = params or EsParams()
        self.sigma = self.params.initial_step_scale * space.width / 2.0
        self._parents: np.ndarray | None = None
        self._parent_values: np.ndarray | None = None

    @property
    def parents(self) -> np.ndarray | None:
        return None if self._parents is None else self._parents.copy()

    def ask(self) -> np.ndarray:
        lam, dim = self.params.lam, self.space.dimension
        if self._parents is None:
            unit = self.rng.uniform(size=(lam, dim))
            return self.space.from_unit(unit)
        picks = self.rng.integers(self.params.mu, size=lam)
        offspring = self._parents[picks] + self.sigma * self.rng.standard_normal((lam, dim))
        return self.space.clip(offspring)

    def tell(self, candidates, values) -> None:
        candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
        values = np.atleast_1d(np.asarray(values, dtype=float))
        if candidates.shape[0] != values.size:
            raise ValueError("candidates and values must have matching lengths")
        if self._parents is None:
            pool, pool_values = candidates, values
        else:
            pool = np.vstack([self._parents, candidates])
            pool_values = np.concatenate([self._parent_values, values])
        order = np.argsort(pool_values, kind="stable")[: self.params.mu]
        self._parents = pool[order]
        self._parent_values = pool_values[order]
        self.sigma = self.sigma * self.params.step_decay


CMA_SIGMA0_SCALE = 0.3  # of the domain width


class CmaEs:
    """CMA-ES following the standard rank-mu update with step-size adaptation.

    All strategy constants are recomputed from the dimension and population
    size, so nondefault lambdas stay consistent. The mean starts uniformly at
    random in the domain and candidates are clipped into it, so the update
    sees exactly the points that were evaluated.
    """

    def __init__(
        self,
        space: SearchSpace,
        rng: np.random.Generator,
        lam: int | None = None,
        sigma0: float | None = None,
    ):
        dim = space.dimension
        self.space = space
        self.rng = rng
        self.lam = default_lambda(dim) if lam is None else lam
        if self.lam < 2:
            raise ValueError("lam must be at least 2")
        self.mu = self.lam // 2
        ranks = np.arange(1, self.mu + 1)
        weights = np.log(self.mu + 0.5) - np.log(ranks)
        self.weights = weights / weights.sum()
        self.mu_eff = 1.0 / np.sum(self.weights**2)

        self.c_sigma = (self.mu_eff + 2.0) / (dim + self.mu_eff + 5.0)
        self.d_sigma = (
            1.0
            + 2.0 * max(0.0, np.sqrt((self.mu_eff - 1.0) / (dim + 1.0)) - 1.0)
            + self.c_sigma
        )
        self.c_c = (4.0 + self.mu_eff / dim) / (dim + 4.0 + 2.0 * self.mu_eff / dim)
        self.c_1 = 2.0 / ((dim + 1.3) ** 2 + self.mu_eff)
        self.c_mu = min(
            1.0 - self.c_1,
            2.0 * (self.mu_eff - 2.0 + 1.0 / self.mu_eff) / ((dim + 2.0) ** 2 + self.mu_eff),
        )
        self.chi_n = np.sqrt(dim) * (1.0 - 1.0 / (4.0 * dim) + 1.0 / (21.0 * dim**2))

        self.mean = space.from_unit(rng.uniform(size=dim))
        self.step_size = float(space.width.mean()) * CMA_SIGMA0_SCALE if sigma0 is None else sigma0
        self.covariance = np.eye(dim)
        self.path_sigma = np.zeros(dim)
        self.path_c = np.zeros(dim)
        self.generation = 0

    def _decompose(self) -> tuple[np.ndarray, np.ndarray]:
        eigenvalues, basis = np.linalg.eigh(self.covariance)
        if eigenvalues[0] <= 0.0:
            # repair after round-off pushed the smallest eigenvalue negative
            eigenvalues = np.maximum(eigenvalues, 1e-12 * eigenvalues[-1])
        return eigenvalues, basis

    def ask(self) -> np.ndarray:
        eigenvalues, basis = self._decompose()
        z = self.rng.standard_normal((self.lam, self.space.dimension))
        samples = self.mean + self.step_size * (z * np.sqrt(eigenvalues)) @ basis.T
        return self.space.clip(samples)

    def tell(self, candidates, values) -> None:
        candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
        values = np.atleast_1d(np.asarray(values, dtype=float))
        if candidates.shape[0] != values.size:
            raise ValueError("candidates and values must have matching lengths")
        if candidates.shape[0] < self.mu:
            raise ValueError(f"tell needs at least mu={self.mu} candidates")
        order = np.argsort(values, kind="stable")[: self.mu]
        selected = (candidates[order] - self.mean) / self.step_size
        y_w = self.weights @ selected

        eigenvalues, basis = self._decompose()
        inv_sqrt = (basis / np.sqrt(eigenvalues)) @ basis.T
        self.mean = self.mean + self.step_size * y_w
        self.path_sigma = (1.0 - self.c_sigma) * self.path_sigma + np.sqrt(
            self.c_sigma * (2.0 - self.c_sigma) * self.mu_eff
        ) * (inv_sqrt @ y_w)

        decay = 1.0 - (1.0 - self.c_sigma) ** (2 * (self.generation + 1))
        h_sigma = float(
            np.linalg.norm(self.path_sigma) / np.sqrt(decay)
            < (1.4 + 2.0 / (self.space.dimension + 1.0)) * self.chi_n
        )
        self.path_c = (1.0 - self.c_c) * self.path_c + h_sigma * np.sqrt(
            self.c_c * (2.0 - self.c_c) * self.mu_eff
        ) * y_w

        rank_one = np.outer(self.path_c, self.path_c)
        rank_mu = np.einsum("i,ij,ik->jk", self.weights, selected, selected)
        self.covariance = (
            (1.0 - self.c_1 - self.c_mu) * self.covariance
            + self.c_1 * (rank_one + (1.0 - h_sigma) * self.c_c * (2.0 - self.c_c) * self.covariance)
            + self.c_mu * rank_mu
        )
        self.covariance = 0.5 * (self.covariance + self.covariance.T)
        self.step_size = self.step_size * np.exp(
            (self.c_sigma / self.d_sigma) * (np.linalg.norm(self.path_sigma) / self.chi_n - 1.0)
        )
        self.generation += 1


@dataclass(frozen=True)
class PsoParams:
    swarm_size: int = 10
    inertia: float = 0.7298
    cognitive: float = 1.49618
    social: float = 1.49618

    def __post_init__(self):
        if self.swarm_size < 1:
            raise ValueError("swarm_size must be positive")


def pso_velocity(
    velocity,
    position,
    personal_best,
    global_best,
    r_cognitive,
    r_social,
    inertia: float = 0.7298,
    cognitive: float = 1.49618,
    social: float = 1.49618,
) -> np.ndarray:
    """Constriction-style velocity update; pure so the terms are testable."""
    velocity = np.asarray(velocity, dtype=float)
    position = np.asarray(position, dtype=float)
    return (
        inertia * velocity
        + cognitive * np.asarray(r_cognitive) * (np.asarray(personal_best) - position)
        + social * np.asarray(r_social) * (np.asarray(global_best) - position)
    )


class ParticleSwarm:
    """Global-best PSO with velocity clamping and position clipping.

    The first ask places the swarm uniformly at rest; every later ask moves
    each particle once. Personal and global bests update only on strict
    improvement, so the reported best never regresses on ties.
    """

    def __init__(self, space: SearchSpace, rng: np.random.Generator, params: PsoParams | None = None):
        self.space = space
        self.rng = rng
        self.params = params or PsoParams()
        self.velocity_limit = space.width / 2.0
        self.positions: np.ndarray | None = None
        self.velocities: np.ndarray | None = None
        self.best_positions: np.ndarray | None = None
        self.best_values: np.ndarray | None = None
        self.global_best_position: np.ndarray | None = None
        self.global_best_value: float = np.inf

    def ask(self) -> np.ndarray:
        n, dim = self.params.swarm_size, self.space.dimension
        if self.positions is None:
            self.positions = self.space.from_unit(self.rng.uniform(size=(n, dim)))
            self.velocities = np.zeros((n, dim))
            return self.positions.copy()
        r_cognitive = self.rng.uniform(size=(n, dim))
        r_social = self.rng.uniform(size=(n, dim))
        velocity = pso_velocity(
            self.velocities,
            self.positions,
            self.best_positions,
            self.global_best_position,
            r_cognitive,
            r_social,
            inertia=self.params.inertia,
            cognitive=self.params.cognitive,
            social=self.params.social,
        )
        self.velocities = np.clip(velocity, -self.velocity_limit, self.velocity_limit)
        self.positions = self.space.clip(self.positions + self.velocities)
        return self.positions.copy()

    def tell(self, candidates, values) -> None:
        candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
        values = np.atleast_1d(np.asarray(values, dtype=float))
        if candidates.shape[0] != self.params.swarm_size or values.size != candidates.shape[0]:
            raise ValueError("tell expects one value per particle")
        if self.best_values is None:
            self.best_positions = candidates.copy()
            self.best_values = values.copy()
        else:
            improved = values < self.best_values
            self.best_positions[improved] = candidates[improved]
            self.best_values[improved] = values[improved]
        leader = int(np.argmin(self.best_values))
        if self.best_values[leader] < self.global_best_value:
            self.global_best_value = float(self.best_values[leader])
            self.global_best_position = self.best_positions[leader].copy()
