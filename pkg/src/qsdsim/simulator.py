"""Exact event-driven simulation of the population process.

Two engines produce the same law. The Gillespie engine is the
reference: exponential holding time at the total jump rate, then a
categorical branch over the event table. The thinning engine realizes
the driving-Poisson-measure construction instead: candidate points are
generated at bounding intensity, individuals are addressed through the
cumulative-weight index functions, and candidates are accepted exactly
when they fall inside the rate bands of the construction. Agreement of
the two engines is one of the package's strongest correctness checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import IO, Iterable, Sequence

import numpy as np

from .configuration import Configuration
from .rates import RateModel, sample_mutation_parent
from .streams import RandomStream, map_replicas
from .trait_space import sample_base


class EventKind(Enum):
    CLONAL = "clonal"
    DEATH = "death"
    MUTATION = "mutation"


@dataclass(frozen=True)
class Event:
    """One jump: when it happened, what kind, and which traits it touched.

    ``child`` is the parent's trait for clonal births, the new trait for
    mutations, and None for deaths.
    """

    time: float
    kind: EventKind
    parent: float
    child: float | None


def apply_event(config: Configuration, event: Event) -> Configuration:
    """The configuration after the event."""
    if event.kind is EventKind.DEATH:
        return config.remove(event.parent)
    if event.kind is EventKind.CLONAL:
        return config.add(event.parent)
    return config.add(event.child)


@dataclass
class Trajectory:
    """One simulated path up to min(horizon, extinction).

    Unreached times are math.inf. ``first_mutation_time`` is the first
    time the support leaves the initial support; ``replacement_time``
    is the first time no initial trait remains. ``hitting_times`` is a
    lazily filled cache; use :meth:`hitting_time`.
    """

    initial: Configuration
    events: tuple[Event, ...]
    horizon: float
    final: Configuration
    extinction_time: float
    first_mutation_time: float
    replacement_time: float
    hitting_times: dict[int, float] = field(default_factory=dict)
    candidate_count: int | None = None
    accepted_count: int | None = None

    def hitting_time(self, k: int) -> float:
        """First time the total mass reaches k, math.inf if never."""
        if k in self.hitting_times:
            return self.hitting_times[k]
        mass = self.initial.total_mass
        hit = 0.0 if mass >= k else math.inf
        if hit == math.inf:
            for event in self.events:
                mass += -1 if event.kind is EventKind.DEATH else 1
                if mass >= k:
                    hit = event.time
                    break
        self.hitting_times[k] = hit
        return hit

    def mass_trace(self) -> list[tuple[float, int]]:
        """Piecewise-constant total mass as (jump time, mass) pairs."""
        mass = self.initial.total_mass
        trace = [(0.0, mass)]
        for event in self.events:
            mass += -1 if event.kind is EventKind.DEATH else 1
            trace.append((event.time, mass))
        return trace

    def state_at(self, t: float) -> Configuration:
        """Configuration at time t, for 0 <= t <= horizon."""
        if not (0.0 <= t <= self.horizon):
            raise ValueError(f"time {t!r} outside [0, {self.horizon!r}]")
        config = self.initial
        for event in self.events:
            if event.time > t:
                break
            config = apply_event(config, event)
        return config


def replay_observables(trajectory: Trajectory) -> tuple[Configuration, float, float, float]:
    """Recompute (final, extinction, first mutation, replacement) from the log.

    Independent of the bookkeeping done while simulating; used to test
    pathwise consistency.
    """
    config = trajectory.initial
    initial_support = frozenset(config.support())
    remaining = dict(config.entries)
    extinction = math.inf
    chi = math.inf
    kappa = math.inf if remaining else 0.0
    for event in trajectory.events:
        config = apply_event(config, event)
        if event.kind is EventKind.MUTATION and math.isinf(chi) \
                and event.child not in initial_support:
            chi = event.time
        trait = event.parent if event.kind is not EventKind.MUTATION else event.child
        if event.kind is EventKind.DEATH and event.parent in remaining:
            remaining[event.parent] -= 1
            if remaining[event.parent] == 0:
                del remaining[event.parent]
                if not remaining and math.isinf(kappa):
                    kappa = event.time
        elif event.kind is not EventKind.DEATH and trait in remaining:
            remaining[trait] += 1
        if config.is_void and math.isinf(extinction):
            extinction = event.time
    return config, extinction, chi, kappa


def _inverse_cdf_exponential(rng: np.random.Generator, rate: float) -> float:
    # One uniform draw per holding time keeps stream consumption flat.
    return -math.log(1.0 - rng.random()) / rate


def _gillespie_branch(model: RateModel, config: Configuration,
                      rng: np.random.Generator) -> tuple[EventKind, float, float | None]:
    """Pick one jump out of the configuration with the exact probabilities."""
    clonal, death, mutation_total, total = model.state_rates(config)
    x = rng.random() * total
    acc = 0.0
    for (trait, _), rate in zip(config.entries, clonal):
        acc += rate
        if x <= acc:
            return EventKind.CLONAL, trait, trait
    for (trait, _), rate in zip(config.entries, death):
        acc += rate
        if x <= acc:
            return EventKind.DEATH, trait, None
    if mutation_total > 0.0:
        parent = sample_mutation_parent(model, config, rng)
        child = model.kernel.sample(parent, rng)
        return EventKind.MUTATION, parent, child
    # Float slack with no mutation mass to absorb it: attribute to the
    # last death entry.
    return EventKind.DEATH, config.entries[-1][0], None


def simulate_gillespie(model: RateModel, initial: Configuration, horizon: float,
                       rng: np.random.Generator) -> Trajectory:
    """Reference engine: exponential holding times at the total jump rate."""
    if horizon < 0.0:
        raise ValueError(f"horizon must be nonnegative, got {horizon!r}")
    config = initial
    initial_support = frozenset(initial.support())
    remaining = dict(initial.entries)
    t = 0.0
    events: list[Event] = []
    extinction = 0.0 if initial.is_void else math.inf
    chi = math.inf
    kappa = 0.0 if initial.is_void else math.inf
    while not config.is_void:
        total = model.total_jump_rate(config)
        if total <= 0.0:
            break
        t_next = t + _inverse_cdf_exponential(rng, total)
        if t_next > horizon:
            break
        t = t_next
        kind, parent, child = _gillespie_branch(model, config, rng)
        event = Event(t, kind, parent, child)
        config = apply_event(config, event)
        events.append(event)
        if kind is EventKind.MUTATION:
            if math.isinf(chi) and child not in initial_support:
                chi = t
            if child in remaining:
                remaining[child] += 1
        elif kind is EventKind.CLONAL:
            if parent in remaining:
                remaining[parent] += 1
        else:
            if parent in remaining:
                remaining[parent] -= 1
                if remaining[parent] == 0:
                    del remaining[parent]
                    if not remaining and math.isinf(kappa):
                        kappa = t
            if config.is_void:
                extinction = t
    return Trajectory(
        initial=initial, events=tuple(events), horizon=horizon, final=config,
        extinction_time=extinction, first_mutation_time=chi, replacement_time=kappa,
    )


def simulate_thinning(model: RateModel, initial: Configuration, horizon: float,
                      rng: np.random.Generator) -> Trajectory:
    """Poisson-construction engine: bounded candidates, band acceptance.

    Candidates arrive at rate n*(B* g* + death bound): a birth candidate
    carries an individual index, a child mark drawn from the base
    measure, and a level under B* g*; a death candidate carries an index
    and a level under the state's death bound. The candidate becomes a
    clonal birth, a mutation, or a death exactly when its level falls in
    the corresponding band; otherwise nothing happens. Candidate clocks
    are regenerated after every point, which is distributionally
    equivalent to any other schedule by memorylessness.
    """
    if horizon < 0.0:
        raise ValueError(f"horizon must be nonnegative, got {horizon!r}")
    config = initial
    initial_support = frozenset(initial.support())
    remaining = dict(initial.entries)
    birth_level = model.birth_sup * model.kernel.sup_density()
    t = 0.0
    events: list[Event] = []
    candidates = 0
    extinction = 0.0 if initial.is_void else math.inf
    chi = math.inf
    kappa = 0.0 if initial.is_void else math.inf
    while not config.is_void:
        n = config.total_mass
        death_level = model.death_bound(config)
        per_index = birth_level + death_level
        t_next = t + _inverse_cdf_exponential(rng, n * per_index)
        if t_next > horizon:
            break
        t = t_next
        candidates += 1
        which = rng.random() * per_index
        index = int(rng.random() * n) + 1
        trait = config.individual_trait(index)
        event: Event | None = None
        if which < birth_level:
            child = sample_base(rng)
            level = rng.random() * birth_level
            density = model.kernel.density(trait, child)
            if level <= model.clonal_rate(trait, config) * density:
                event = Event(t, EventKind.CLONAL, trait, trait)
            elif level <= model.reproduction_rate(trait, config) * density:
                event = Event(t, EventKind.MUTATION, trait, child)
        else:
            level = rng.random() * death_level
            if level <= model.death_rate(trait, config):
                event = Event(t, EventKind.DEATH, trait, None)
        if event is None:
            continue
        config = apply_event(config, event)
        events.append(event)
        if event.kind is EventKind.MUTATION:
            if math.isinf(chi) and event.child not in initial_support:
                chi = t
            if event.child in remaining:
                remaining[event.child] += 1
        elif event.kind is EventKind.CLONAL:
            if trait in remaining:
                remaining[trait] += 1
        else:
            if trait in remaining:
                remaining[trait] -= 1
                if remaining[trait] == 0:
                    del remaining[trait]
                    if not remaining and math.isinf(kappa):
                        kappa = t
            if config.is_void:
                extinction = t
    return Trajectory(
        initial=initial, events=tuple(events), horizon=horizon, final=config,
        extinction_time=extinction, first_mutation_time=chi, replacement_time=kappa,
        candidate_count=candidates, accepted_count=len(events),
    )

ENGINES = {
    "gillespie": simulate_gillespie,
    "thinning": simulate_thinning,
}


def _resolve_initial(initial, rng: np.random.Generator) -> Configuration:
    # Ensembles may start each replica from a draw of an estimate
    # instead of a fixed configuration.
    if isinstance(initial, Configuration):
        return initial
    return initial.draw(rng)


def _evolve(model: RateModel, config: Configuration, t_end: float,
            rng: np.random.Generator,
            checkpoints: Sequence[float] = ()) -> tuple[Configuration, float, list[int]]:
    """Run without recording events; optionally capture mass at times.

    Returns (state at t_end, extinction time or inf, masses at the
    checkpoints). Checkpoints must be sorted and lie within [0, t_end].
    """
    t = 0.0
    extinction = 0.0 if config.is_void else math.inf
    masses: list[int] = []
    pending = 0
    while True:
        total = model.total_jump_rate(config)
        if config.is_void or total <= 0.0:
            break
        t_next = t + _inverse_cdf_exponential(rng, total)
        while pending < len(checkpoints) and checkpoints[pending] < t_next:
            masses.append(config.total_mass)
            pending += 1
        if t_next > t_end:
            t = t_end
            break
        t = t_next
        kind, parent, child = _gillespie_branch(model, config, rng)
        if kind is EventKind.DEATH:
            config = config.remove(parent)
            if config.is_void:
                extinction = t
        elif kind is EventKind.CLONAL:
            config = config.add(parent)
        else:
            config = config.add(child)
    while pending < len(checkpoints):
        masses.append(config.total_mass)
        pending += 1
    return config, extinction, masses


def _extinction_replica(model: RateModel, initial, t_max: float,
                        rng: np.random.Generator) -> float:
    config = _resolve_initial(initial, rng)
    _, extinction, _ = _evolve(model, config, t_max, rng)
    return extinction


@dataclass(frozen=True)
class SurvivalCurve:
    """Empirical survival fractions with binomial standard errors."""

    grid: tuple[float, ...]
    survival: tuple[float, ...]
    stderr: tuple[float, ...]
    replicas: int

    def __iter__(self):
        return iter(zip(self.grid, self.survival, self.stderr))

    def __len__(self) -> int:
        return len(self.grid)


def survival_curve(model: RateModel, initial, grid: Sequence[float],
                   replicas: int, rng: RandomStream, workers: int = 1) -> SurvivalCurve:
    """Fraction of replicas not yet extinct at each grid time."""
    grid = tuple(float(t) for t in grid)
    if any(t < 0.0 for t in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be nonnegative and strictly increasing")
    if replicas < 1:
        raise ValueError("replicas must be positive")
    fn = partial(_extinction_replica, model, initial, max(grid))
    extinctions = np.array(map_replicas(fn, replicas, rng, workers))
    survival = []
    stderr = []
    for t in grid:
        p = float(np.mean(extinctions > t))
        survival.append(p)
        stderr.append(math.sqrt(p * (1.0 - p) / replicas))
    return SurvivalCurve(grid=grid, survival=tuple(survival), stderr=tuple(stderr),
                         replicas=replicas)


def _max_mass_replica(model: RateModel, initial, t: float,
                      rng: np.random.Generator) -> int:
    config = _resolve_initial(initial, rng)
    best = config.total_mass
    now = 0.0
    while not config.is_void:
        total = model.total_jump_rate(config)
        if total <= 0.0:
            break
        now += _inverse_cdf_exponential(rng, total)
        if now > t:
            break
        kind, parent, child = _gillespie_branch(model, config, rng)
        if kind is EventKind.DEATH:
            config = config.remove(parent)
        else:
            config = config.add(parent if kind is EventKind.CLONAL else child)
            best = max(best, config.total_mass)
    return best


def hitting_tail(model: RateModel, initial, t: float, k_values: Sequence[int],
                 replicas: int, rng: RandomStream,
                 workers: int = 1) -> list[tuple[int, float]]:
    """Empirical P(total mass reaches K by time t) for each K.

    Computed from the running maximum of each replica, so the estimates
    are automatically nonincreasing in K on the shared replica set.
    """
    if replicas < 1:
        raise ValueError("replicas must be positive")
    fn = partial(_max_mass_replica, model, initial, t)
    maxima = np.array(map_replicas(fn, replicas, rng, workers))
    return [(int(k), float(np.mean(maxima >= k))) for k in k_values]


def _masses_replica(model: RateModel, initial, times: Sequence[float],
                    rng: np.random.Generator) -> np.ndarray:
    config = _resolve_initial(initial, rng)
    _, _, masses = _evolve(model, config, max(times), rng, checkpoints=times)
    return np.array(masses, dtype=float)


def mass_moments(model: RateModel, initial, times: Sequence[float], replicas: int,
                 rng: RandomStream, workers: int = 1) -> list[tuple[float, float, float]]:
    """Mean total mass at each time with Monte Carlo standard errors."""
    times = tuple(float(t) for t in times)
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be strictly increasing")
    fn = partial(_masses_replica, model, initial, times)
    rows = np.stack(map_replicas(fn, replicas, rng, workers))
    means = rows.mean(axis=0)
    errs = rows.std(axis=0, ddof=1) / math.sqrt(replicas)
    return [(t, float(m), float(e)) for t, m, e in zip(times, means, errs)]


def write_trajectory_csv(trajectory: Trajectory, out: IO[str],
                         metadata: dict[str, object] | None = None) -> None:
    """Event log as CSV, one row per jump, with provenance comments."""
    for key, value in (metadata or {}).items():
        out.write(f"# {key}={value}\n")
    out.write("time,event_kind,parent_trait,child_trait,total_mass_after\n")
    mass = trajectory.initial.total_mass
    for event in trajectory.events:
        mass += -1 if event.kind is EventKind.DEATH else 1
        child = "" if event.child is None else f"{event.child:.17g}"
        out.write(f"{event.time:.17g},{event.kind.value},{event.parent:.17g},{child},{mass}\n")
