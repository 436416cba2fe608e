"""Estimators for the conditioned-on-survival limit law and its decay rate.

A quasi-stationary estimate is a weighted collection of configurations.
Two routes produce one: conditioning a plain ensemble on survival at a
fixed time (Yaglom), or running interacting particles that resurrect on
absorption (Fleming-Viot). Decay-rate estimators come in two flavors
too, a survival-curve slope and the singleton-mass death-rate integral,
so independent routes can be cross-checked against the finite-state
oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import IO, Iterable, Sequence

import numpy as np

from .configuration import Configuration
from .errors import (AllExtinct, Degenerate, InvalidRegime, NoSingletonMass,
                     NotNormalized, WindowTooSmall)
from .rates import RateModel
from .simulator import EventKind, _evolve, _gillespie_branch, _resolve_initial
from .streams import RandomStream, map_replicas
from .trait_space import sample_base


@dataclass(frozen=True, eq=False)
class QsdEstimate:
    """Weighted configurations approximating the conditioned limit law.

    ``particles`` is the survivor count for conditioned ensembles and
    the particle count for interacting-particle runs; ``burn_in`` is 0
    for the former.
    """

    configurations: tuple[Configuration, ...]
    weights: np.ndarray
    burn_in: float
    particles: int
    _masses: np.ndarray = field(init=False, repr=False)
    _cumw: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=float)
        if len(weights) != len(self.configurations) or len(weights) == 0:
            raise ValueError("need one weight per configuration, at least one of each")
        if np.any(weights < 0.0):
            raise NotNormalized("negative weight in estimate")
        if abs(float(weights.sum()) - 1.0) > 1e-12:
            raise NotNormalized(f"weights sum to {float(weights.sum())!r}, not 1")
        if any(c.is_void for c in self.configurations):
            raise ValueError("estimate puts weight on the void configuration")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "_masses",
                           np.array([c.total_mass for c in self.configurations]))
        object.__setattr__(self, "_cumw", np.cumsum(weights))

    @property
    def sample(self) -> tuple[tuple[Configuration, float], ...]:
        return tuple(zip(self.configurations, (float(w) for w in self.weights)))

    @property
    def mass_marginal(self) -> np.ndarray:
        """Probability vector over total mass; index 0 is always 0."""
        out = np.zeros(int(self._masses.max()) + 1)
        np.add.at(out, self._masses, self.weights)
        return out

    @property
    def support_marginal(self) -> np.ndarray:
        """Probability vector over support size; index 0 is always 0."""
        sizes = np.array([c.support_size for c in self.configurations])
        out = np.zeros(int(sizes.max()) + 1)
        np.add.at(out, sizes, self.weights)
        return out

    @property
    def ess(self) -> float:
        """Effective sample size 1/sum of squared weights."""
        return float(1.0 / np.square(self.weights).sum())

    def draw(self, rng: np.random.Generator) -> Configuration:
        """One configuration sampled proportionally to weight."""
        idx = int(np.searchsorted(self._cumw, rng.random(), side="right"))
        return self.configurations[min(idx, len(self.configurations) - 1)]


def _estimate_from_counts(counts: dict[Configuration, int], burn_in: float,
                          particles: int) -> QsdEstimate:
    configs = sorted(counts, key=lambda c: c.entries)
    total = float(sum(counts.values()))
    weights = np.array([counts[c] / total for c in configs])
    return QsdEstimate(configurations=tuple(configs), weights=weights,
                       burn_in=burn_in, particles=particles)


def _survivor_replica(model: RateModel, initial, t: float,
                      rng: np.random.Generator) -> Configuration:
    config = _resolve_initial(initial, rng)
    final, _, _ = _evolve(model, config, t, rng)
    return final


def yaglom_estimate(model: RateModel, initial, t: float, replicas: int,
                    rng: RandomStream, workers: int = 1) -> QsdEstimate:
    """Empirical law at time t among surviving replicas, equal weights.

    ``initial`` is a configuration, or anything with a
    ``draw(rng) -> Configuration`` method to start each replica from.
    """
    if t < 0.0:
        raise ValueError(f"t must be nonnegative, got {t!r}")
    if replicas < 1:
        raise ValueError("replicas must be positive")
    fn = partial(_survivor_replica, model, initial, t)
    finals = map_replicas(fn, replicas, rng, workers)
    counts: dict[Configuration, int] = {}
    for config in finals:
        if not config.is_void:
            counts[config] = counts.get(config, 0) + 1
    if not counts:
        raise AllExtinct(f"no replica of {replicas} survived to t={t!r}")
    survivors = sum(counts.values())
    return _estimate_from_counts(counts, burn_in=0.0, particles=survivors)


def fleming_viot_estimate(model: RateModel, particles: int, burn_in: float,
                          horizon: float, rng: RandomStream,
                          snapshot_interval: float = 0.5) -> QsdEstimate:
    """Interacting copies with resurrection from a surviving copy.

    Copies evolve by the exact dynamics under a single global race for
    the next event; an absorbed copy instantly adopts the state of a
    uniformly chosen survivor. The estimate is the empirical measure
    time-averaged over snapshots every ``snapshot_interval`` in
    [burn_in, horizon]. Particles start as independent singletons at
    base-measure draws.
    """
    if particles < 2:
        raise InvalidRegime(f"need at least 2 particles, got {particles!r}")
    if not (0.0 <= burn_in < horizon):
        raise InvalidRegime(f"need 0 <= burn_in < horizon, got {burn_in!r}, {horizon!r}")
    if snapshot_interval <= 0.0:
        raise InvalidRegime(f"snapshot interval must be positive, got {snapshot_interval!r}")
    gen = rng.generator()
    configs = [Configuration.singleton(sample_base(gen)) for _ in range(particles)]
    rates = np.array([model.total_jump_rate(c) for c in configs])
    counts: dict[Configuration, int] = {}
    t = 0.0
    next_snap = burn_in
    while True:
        cum = np.cumsum(rates)
        total = float(cum[-1])
        if total <= 0.0:
            raise Degenerate("all copies extinct at once")
        t_next = t + -math.log(1.0 - gen.random()) / total
        while next_snap <= horizon and next_snap < t_next:
            for c in configs:
                counts[c] = counts.get(c, 0) + 1
            next_snap += snapshot_interval
        if t_next > horizon:
            break
        t = t_next
        i = min(int(np.searchsorted(cum, gen.random() * total, side="right")),
                particles - 1)
        kind, parent, child = _gillespie_branch(model, configs[i], gen)
        if kind is EventKind.DEATH:
            nxt = configs[i].remove(parent)
            if nxt.is_void:
                j = int(gen.random() * (particles - 1))
                if j >= i:
                    j += 1
                nxt = configs[j]
                if nxt.is_void:
                    raise Degenerate("resampling donor is extinct")
        else:
            nxt = configs[i].add(parent if kind is EventKind.CLONAL else child)
        configs[i] = nxt
        rates[i] = model.total_jump_rate(nxt)
    if not counts:
        raise InvalidRegime("no snapshot fell inside [burn_in, horizon]")
    return _estimate_from_counts(counts, burn_in=burn_in, particles=particles)


def decay_rate_from_survival(curve: Iterable[tuple[float, float, float]]) -> tuple[float, float]:
    """Slope of -log(survival) against time over the usable window.

    Points with survival outside [0.05, 0.95] are dropped: early points
    carry transient bias, late ones log-of-small-counts noise. Weighted
    least squares with delta-method variances; unweighted when the
    curve is noiseless. A perfectly flat curve short-circuits to slope
    0 since no window exists to regress on.
    """
    points = [(float(t), float(p), float(se)) for t, p, se in curve]
    if points and all(p == points[0][1] for _, p, _ in points):
        return 0.0, 0.0
    admissible = [(t, p, se) for t, p, se in points if 0.05 <= p <= 0.95]
    if len(admissible) < 3:
        raise WindowTooSmall(
            f"{len(admissible)} points with survival in [0.05, 0.95], need 3"
        )
    ts = np.array([t for t, _, _ in admissible])
    ys = -np.log(np.array([p for _, p, _ in admissible]))
    ses = np.array([se / p for _, p, se in admissible])
    if np.all(ses > 0.0):
        w = 1.0 / np.square(ses)
        tbar = float(np.sum(w * ts) / np.sum(w))
        ybar = float(np.sum(w * ys) / np.sum(w))
        sxx = float(np.sum(w * np.square(ts - tbar)))
        slope = float(np.sum(w * (ts - tbar) * (ys - ybar)) / sxx)
        return slope, math.sqrt(1.0 / sxx)
    tbar = float(ts.mean())
    sxx = float(np.square(ts - tbar).sum())
    slope = float(np.sum((ts - tbar) * (ys - ys.mean())) / sxx)
    resid = ys - ys.mean() - slope * (ts - tbar)
    sigma2 = float(np.square(resid).sum()) / (len(ts) - 2)
    return slope, math.sqrt(sigma2 / sxx)


def decay_rate_from_singletons(model: RateModel, est: QsdEstimate) -> float:
    """Death-rate integral over the mass-1 part of the estimate.

    The integral is unnormalized: weights are the estimate's own, which
    sum to 1 over all masses.
    """
    acc = 0.0
    found = False
    for config, weight in zip(est.configurations, est.weights):
        if config.total_mass == 1:
            found = True
            acc += float(weight) * model.death_rate(config.entries[0][0], config)
    if not found:
        raise NoSingletonMass("estimate has no weight on mass-1 configurations")
    return acc


def tv_distance(p: Sequence[float], q: Sequence[float]) -> float:
    """Half the l1 distance between probability vectors.

    Vectors may have different lengths; the shorter is zero-padded.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if abs(float(p.sum()) - 1.0) > 1e-9 or abs(float(q.sum()) - 1.0) > 1e-9:
        raise NotNormalized(
            f"vectors sum to {float(p.sum())!r} and {float(q.sum())!r}, expected 1"
        )
    n = max(len(p), len(q))
    p = np.pad(p, (0, n - len(p)))
    q = np.pad(q, (0, n - len(q)))
    return 0.5 * float(np.abs(p - q).sum())


def estimate_report(est: QsdEstimate) -> dict:
    """JSON-ready summary; marginal vectors start at mass / size 1."""
    return {
        "mass_marginal": [float(x) for x in est.mass_marginal[1:]],
        "support_marginal": [float(x) for x in est.support_marginal[1:]],
        "ess": est.ess,
        "burn_in": est.burn_in,
        "particles": est.particles,
    }


def write_sample_csv(est: QsdEstimate, out: IO[str],
                     metadata: dict[str, object] | None = None) -> None:
    """Weighted configuration sample as CSV."""
    for key, value in (metadata or {}).items():
        out.write(f"# {key}={value}\n")
    out.write("weight,configuration\n")
    for config, weight in est.sample:
        out.write(f"{weight:.17g},{config.serialize()}\n")
