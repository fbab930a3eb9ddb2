"""Benchmark objective functions, their box domains, and evaluation counting.

All three functions are minimized, scale to any dimension, and have a known
global minimum of 0. Out-of-domain points are clamped componentwise before
evaluation so that every optimizer competes under the same boundary policy.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

FUNCTION_NAMES = ("schwefel", "griewank", "rastrigin")

DEFAULT_DIMENSION = 10


class BudgetExhausted(Exception):
    """Raised when an evaluation is requested beyond the configured budget."""


def _as_finite_vector(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise ValueError(f"expected a 1-D point, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("objective input contains non-finite components")
    return x


def evaluate_schwefel(x) -> float:
    """418.9829*d - sum(x_i * sin(sqrt(|x_i|))), minimum ~0 at 420.97*ones."""
    x = _as_finite_vector(x)
    return float(418.9829 * x.size - np.sum(x * np.sin(np.sqrt(np.abs(x)))))


def evaluate_griewank(x) -> float:
    """sum(x_i^2/4000) - prod(cos(x_i/sqrt(i))) + 1, minimum 0 at the origin."""
    x = _as_finite_vector(x)
    i = np.arange(1, x.size + 1)
    return float(np.sum(x**2) / 4000.0 - np.prod(np.cos(x / np.sqrt(i))) + 1.0)


def evaluate_rastrigin(x) -> float:
    """10*d + sum(x_i^2 - 10*cos(2*pi*x_i)), minimum 0 at the origin."""
    x = _as_finite_vector(x)
    return float(10.0 * x.size + np.sum(x**2 - 10.0 * np.cos(2.0 * np.pi * x)))


@dataclass(frozen=True)
class SearchSpace:
    """Axis-aligned box of feasible points."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower.ndim != 1 or lower.shape != upper.shape or lower.size < 1:
            raise ValueError("lower and upper must be 1-D vectors of equal length >= 1")
        if not np.all(lower < upper):
            raise ValueError("every lower bound must be strictly below its upper bound")

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def clip(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def to_unit(self, x) -> np.ndarray:
        """Map domain coordinates onto the unit hypercube."""
        return (np.asarray(x, dtype=float) - self.lower) / self.width

    def from_unit(self, u) -> np.ndarray:
        """Map unit-hypercube coordinates back into the domain."""
        return self.lower + np.asarray(u, dtype=float) * self.width

    @classmethod
    def symmetric(cls, half_width: float, dimension: int) -> "SearchSpace":
        return cls(np.full(dimension, -half_width), np.full(dimension, half_width))


@dataclass(frozen=True)
class ObjectiveSpec:
    """A named test function together with its domain and known optimum."""

    name: str
    fn: Callable[[np.ndarray], float]
    space: SearchSpace
    known_optimum_location: np.ndarray
    known_optimum_value: float

    def __post_init__(self):
        loc = np.asarray(self.known_optimum_location, dtype=float)
        object.__setattr__(self, "known_optimum_location", loc)
        if not self.space.contains(loc):
            raise ValueError(f"{self.name}: optimum location lies outside the domain")


@dataclass
class EvalCounter:
    """Tracks how many objective evaluations a run has consumed."""

    budget: int
    total_evaluations: int = field(default=0)

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be a positive integer")

    @property
    def remaining(self) -> int:
        return self.budget - self.total_evaluations


def counted_evaluate(spec: ObjectiveSpec, counter: EvalCounter, x) -> float:
    """Evaluate `spec` at `x` (clamped into the domain), counting one call."""
    if counter.total_evaluations >= counter.budget:
        raise BudgetExhausted(f"evaluation budget of {counter.budget} already spent")
    value = spec.fn(spec.space.clip(x))
    counter.total_evaluations += 1
    return value


_HALF_WIDTHS = {"schwefel": 500.0, "griewank": 600.0, "rastrigin": 5.12}

_EVALUATORS = {
    "schwefel": evaluate_schwefel,
    "griewank": evaluate_griewank,
    "rastrigin": evaluate_rastrigin,
}


def make_objective(name: str, dimension: int = DEFAULT_DIMENSION) -> ObjectiveSpec:
    """Build one of the named benchmark objectives at the requested dimension."""
    key = name.lower()
    if key not in _EVALUATORS:
        raise ValueError(f"unknown function {name!r}; choose from {FUNCTION_NAMES}")
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    space = SearchSpace.symmetric(_HALF_WIDTHS[key], dimension)
    if key == "schwefel":
        optimum_location = np.full(dimension, 420.97)
    else:
        optimum_location = np.zeros(dimension)
    return ObjectiveSpec(
        name=key,
        fn=_EVALUATORS[key],
        space=space,
        known_optimum_location=optimum_location,
        known_optimum_value=0.0,
    )
