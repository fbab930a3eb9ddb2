"""Benchmarking of Bayesian and evolutionary optimizers on classic test functions.

The package measures both solution quality and wall-clock cost per batch of
evaluations, across four optimizers (GP-UCB Bayesian optimization, CMA-ES, a
(mu+lambda) evolution strategy, and particle swarm) on three scalable
minimization benchmarks (Schwefel, Griewank, Rastrigin).
"""

from .algorithms import ALGORITHM_NAMES, make_optimizer
from .bayesopt import BayesianOptimizer, BoConfig, run_bo
from .evo import CmaEs, EsParams, EvolutionStrategy, ParticleSwarm, PsoParams, default_lambda
from .harness import (
    BATCH_SIZE,
    AggregateSeries,
    EvalRecord,
    RunTrace,
    aggregate,
    run_experiment,
    run_single,
)
from .objectives import (
    DEFAULT_DIMENSION,
    FUNCTION_NAMES,
    BudgetExhausted,
    EvalCounter,
    ObjectiveSpec,
    SearchSpace,
    counted_evaluate,
    make_objective,
)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHM_NAMES",
    "AggregateSeries",
    "BATCH_SIZE",
    "BayesianOptimizer",
    "BoConfig",
    "BudgetExhausted",
    "CmaEs",
    "DEFAULT_DIMENSION",
    "EsParams",
    "EvalCounter",
    "EvalRecord",
    "EvolutionStrategy",
    "FUNCTION_NAMES",
    "ObjectiveSpec",
    "ParticleSwarm",
    "PsoParams",
    "RunTrace",
    "SearchSpace",
    "aggregate",
    "counted_evaluate",
    "default_lambda",
    "make_objective",
    "make_optimizer",
    "run_bo",
    "run_experiment",
    "run_single",
]
