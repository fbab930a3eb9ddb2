"""Registry mapping algorithm names onto ask/tell optimizer factories."""

from __future__ import annotations

import numpy as np

from .bayesopt import BayesianOptimizer, BoConfig
from .evo import CmaEs, EsParams, EvolutionStrategy, ParticleSwarm, PsoParams
from .objectives import SearchSpace


def _make_bo(space, rng, overrides):
    config = BoConfig(**overrides) if overrides else None
    return BayesianOptimizer(space, rng, config)


def _make_cmaes(space, rng, overrides):
    return CmaEs(space, rng, **overrides)


def _make_es(space, rng, overrides):
    params = EsParams(**overrides) if overrides else None
    return EvolutionStrategy(space, rng, params)


def _make_pso(space, rng, overrides):
    params = PsoParams(**overrides) if overrides else None
    return ParticleSwarm(space, rng, params)


_FACTORIES = {
    "bo": _make_bo,
    "cmaes": _make_cmaes,
    "es": _make_es,
    "pso": _make_pso,
}

ALGORITHM_NAMES = tuple(_FACTORIES)


def make_optimizer(
    name: str,
    space: SearchSpace,
    seed: int | None = None,
    rng: np.random.Generator | None = None,
    **overrides,
):
    """Build a fresh optimizer by registry name.

    Either a seed or an explicit generator may be given; overrides are passed
    through to the algorithm's own configuration type.
    """
    try:
        factory = _FACTORIES[name]
    except KeyError:
        known = ", ".join(ALGORITHM_NAMES)
        raise ValueError(f"unknown algorithm {name!r}; expected one of: {known}") from None
    if rng is None:
        rng = np.random.default_rng(seed)
    return factory(space, rng, overrides)
