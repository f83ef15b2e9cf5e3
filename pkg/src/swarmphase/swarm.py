"""Particle swarm optimizer over policy space with a ring topology.

Positions live on the torus ``[0, 2pi)**dim``. Each round moves every
particle toward its own best position and toward the best position found in
its ring neighbourhood, then evaluates the new positions.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import DomainError, FitnessError
from .fitness import PolicyFitness
from .golden import table_s1
from .policy import TWO_PI, Policy

__all__ = [
    "SwarmConfig",
    "Particle",
    "Swarm",
    "RunResult",
    "table_s1_config",
    "init_swarm",
    "neighborhood_best",
    "pso_step",
    "optimize",
]

log = logging.getLogger(__name__)

Fitness = Callable[[np.ndarray], np.ndarray]

CONFIG_KEYS = ("omega", "phi1", "phi2", "xi", "nu_max", "r", "steps")


@dataclass(frozen=True)
class SwarmConfig:
    """Hyperparameters of one optimizer run.

    ``scalar_rand`` draws one random factor per attraction term instead of
    one per component.
    """

    omega: float
    phi1: float
    phi2: float
    xi: int
    nu_max: float
    r: int
    steps: int
    dim: int
    scalar_rand: bool = False

    def __post_init__(self):
        for name in ("omega", "phi1", "phi2"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {value!r}")
        if self.xi < 1:
            raise DomainError(f"population size must be positive, got {self.xi}")
        if not self.nu_max > 0:
            raise DomainError(f"nu_max must be positive, got {self.nu_max!r}")
        if self.r < 0:
            raise DomainError(f"interaction range must be nonnegative, got {self.r}")
        if 2 * self.r + 1 > self.xi:
            raise DomainError(f"neighbourhood of range r={self.r} does not fit a swarm of {self.xi}")
        if self.steps < 0:
            raise DomainError(f"steps must be nonnegative, got {self.steps}")
        if self.dim < 1:
            raise DomainError(f"dimension must be positive, got {self.dim}")

    @classmethod
    def from_json(cls, source, dim: int) -> SwarmConfig:
        """Build from a JSON file path or an already parsed mapping."""
        data = source if isinstance(source, dict) else json.loads(Path(source).read_text())
        missing = [k for k in CONFIG_KEYS if k not in data]
        if missing:
            raise DomainError(f"config is missing keys: {', '.join(missing)}")
        unknown = sorted(set(data) - set(CONFIG_KEYS) - {"dim", "scalar_rand"})
        if unknown:
            raise DomainError(f"config has unknown keys: {', '.join(unknown)}")
        if "dim" in data and int(data["dim"]) != dim:
            raise DomainError(f"config dim {data['dim']} ≠ {dim}")
        return cls(
            omega=float(data["omega"]),
            phi1=float(data["phi1"]),
            phi2=float(data["phi2"]),
            xi=int(data["xi"]),
            nu_max=float(data["nu_max"]),
            r=int(data["r"]),
            steps=int(data["steps"]),
            dim=dim,
            scalar_rand=bool(data.get("scalar_rand", False)),
        )

    def to_json(self) -> dict:
        return asdict(self)


def table_s1_config(n: int) -> SwarmConfig:
    """Published settings for ``n`` photons (N = 4..14)."""
    rows = table_s1()
    if n not in rows:
        raise DomainError(f"Table S1 covers N={min(rows)}..{max(rows)}, got N={n}")
    row = rows[n]
    return SwarmConfig(row.omega, row.phi1, row.phi2, row.xi, row.nu_max, row.r, row.steps, dim=n)


@dataclass(frozen=True)
class Particle:
    position: Policy
    velocity: np.ndarray
    best_position: Policy
    best_fitness: float


@dataclass
class Swarm:
    """Array-of-particles state; row ``i`` of every array belongs to particle ``i``."""

    positions: np.ndarray
    velocities: np.ndarray
    fitness: np.ndarray
    best_positions: np.ndarray
    best_fitness: np.ndarray
    rngs: list[np.random.Generator]
    evaluations: int = 0

    def __len__(self):
        return self.positions.shape[0]

    def particle(self, i: int) -> Particle:
        return Particle(
            Policy(self.positions[i]),
            self.velocities[i].copy(),
            Policy(self.best_positions[i]),
            float(self.best_fitness[i]),
        )

    def best_index(self) -> int:
        # argmax returns the lowest index among ties
        return int(np.argmax(self.best_fitness))


@dataclass
class RunResult:
    """Outcome of :func:`optimize`.

    ``history[t]`` is the global best sharpness after ``t`` rounds;
    ``history[0]`` is the best of the initial swarm.
    """

    best_policy: Policy
    best_sharpness: float
    best_variance: float
    history: list[float]
    seed: int
    config: SwarmConfig
    evaluations: int = field(default=0)


def _wrap_positions(x: np.ndarray) -> np.ndarray:
    x = np.mod(x, TWO_PI)
    x[x >= TWO_PI] = 0.0
    return x


def _evaluate(fitness: Fitness, positions: np.ndarray) -> np.ndarray:
    values = np.asarray(fitness(positions), dtype=float)
    if values.shape != (positions.shape[0],):
        raise FitnessError(f"fitness returned shape {values.shape}, expected ({positions.shape[0]},)")
    bad = np.flatnonzero(np.isnan(values))
    if bad.size:
        i = int(bad[0])
        raise FitnessError(f"fitness is NaN for particle {i} at position {positions[i].tolist()}")
    return values


def init_swarm(config: SwarmConfig, seed: int, fitness: Fitness) -> Swarm:
    """Uniform random positions, zero velocities, one evaluation per particle.

    Particle ``i`` draws from its own stream spawned from ``seed``.
    """
    streams = np.random.SeedSequence(seed).spawn(config.xi)
    rngs = [np.random.default_rng(s) for s in streams]
    positions = np.array([rng.uniform(0.0, TWO_PI, config.dim) for rng in rngs])
    positions = _wrap_positions(positions)
    values = _evaluate(fitness, positions)
    return Swarm(
        positions=positions,
        velocities=np.zeros_like(positions),
        fitness=values,
        best_positions=positions.copy(),
        best_fitness=values.copy(),
        rngs=rngs,
        evaluations=config.xi,
    )


def _neighborhood_indices(best_fitness: np.ndarray, r: int) -> np.ndarray:
    xi = best_fitness.size
    reach = min(r, xi // 2)
    offsets = np.arange(-reach, reach + 1)
    cand = (np.arange(xi)[:, None] + offsets[None, :]) % xi
    vals = best_fitness[cand]
    is_max = vals == vals.max(axis=1, keepdims=True)
    return np.where(is_max, cand, xi).min(axis=1)


def neighborhood_best(swarm: Swarm, i: int, r: int) -> Policy:
    """Best personal-best position within ring distance ``r`` of particle ``i``.

    Ties go to the lowest particle index.
    """
    if not 0 <= i < len(swarm):
        raise DomainError(f"particle index {i} out of range for a swarm of {len(swarm)}")
    j = _neighborhood_indices(swarm.best_fitness, r)[i]
    return Policy(swarm.best_positions[j])


def pso_step(swarm: Swarm, fitness: Fitness, config: SwarmConfig) -> Swarm:
    """Advance the swarm by one round, in place.

    Neighbourhood bests are gathered from the current personal bests, every
    particle moves, and the new positions are evaluated and folded into the
    personal bests. The swarm is returned for chaining.
    """
    g = swarm.best_positions[_neighborhood_indices(swarm.best_fitness, config.r)]
    width = 1 if config.scalar_rand else config.dim
    # per particle: one factor per component for each attraction term
    draws = np.stack([rng.random((2, width)) for rng in swarm.rngs])
    x = swarm.positions
    v = config.omega * (
        swarm.velocities
        + config.phi1 * draws[:, 0] * (swarm.best_positions - x)
        + config.phi2 * draws[:, 1] * (g - x)
    )
    swarm.velocities = np.clip(v, -config.nu_max, config.nu_max)
    swarm.positions = _wrap_positions(swarm.positions + swarm.velocities)

    values = _evaluate(fitness, swarm.positions)
    swarm.fitness = values
    improved = values > swarm.best_fitness
    swarm.best_positions[improved] = swarm.positions[improved]
    swarm.best_fitness[improved] = values[improved]
    swarm.evaluations += len(swarm)
    return swarm


def optimize(
    n: int,
    config: SwarmConfig,
    seed: int,
    eta: float | None = None,
    threads: int = 1,
    fitness: Fitness | None = None,
) -> RunResult:
    """Search for the sharpest ``n``-photon policy.

    Runs ``config.steps`` rounds from a seeded random swarm. The default
    objective is the lossless sharpness, or the photon-loss sharpness if
    ``eta`` is given; ``fitness`` overrides both.
    """
    if config.dim != n:
        raise DomainError(f"config dimension {config.dim} ≠ {n}")
    if fitness is None:
        fitness = PolicyFitness(n, eta, threads=threads)
    swarm = init_swarm(config, seed, fitness)
    history = [float(swarm.best_fitness.max())]
    for t in range(config.steps):
        pso_step(swarm, fitness, config)
        history.append(float(swarm.best_fitness.max()))
        if log.isEnabledFor(logging.DEBUG) and (t + 1) % 50 == 0:
            log.debug("seed %d step %d best sharpness %.10f", seed, t + 1, history[-1])
    best = swarm.best_index()
    s = float(swarm.best_fitness[best])
    return RunResult(
        best_policy=Policy(swarm.best_positions[best]),
        best_sharpness=s,
        best_variance=s**-2 - 1 if s > 0 else math.inf,
        history=history,
        seed=seed,
        config=config,
        evaluations=swarm.evaluations,
    )
