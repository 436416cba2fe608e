"""Finite-state ground truth for trait-blind models.

When every rate depends on the configuration only through its total
mass, the mass process is itself Markov on the nonnegative integers
with 0 absorbing. Truncating at N and dropping births from the top
state leaves a strict sub-generator whose principal left eigenpair
gives the decay rate and the mass marginal of the limit law to any
accuracy the truncation supports. This module builds that matrix,
iterates for the eigenpair, solves the first-passage system for mean
absorption times, and integrates the comparison ODE used by the
exponential-moment bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidRegime, NoConvergence, SingularSystem, UnsupportedModel
from .rates import RateModel


@dataclass(frozen=True)
class MassChainOracle:
    """Truncated mass chain on states 1..N.

    ``births`` and ``deaths`` are indexed by state with entry 0 unused.
    Row k of ``sub_generator`` sums to minus the rate into 0 (k=1)
    minus the birth rate dropped by the truncation (k=N).
    """

    N: int
    births: np.ndarray
    deaths: np.ndarray
    sub_generator: np.ndarray


def build_mass_chain(model: RateModel, N: int) -> MassChainOracle:
    """Assemble the truncated sub-generator from the model's mass rates."""
    if N < 2:
        raise UnsupportedModel(f"truncation must be at least 2, got {N!r}")
    births = np.zeros(N + 1)
    deaths = np.zeros(N + 1)
    for k in range(1, N + 1):
        births[k], deaths[k] = model.mass_birth_death_rates(k)
    q = np.zeros((N, N))
    for k in range(1, N + 1):
        q[k - 1, k - 1] = -(births[k] + deaths[k])
        if k < N:
            q[k - 1, k] = births[k]
        if k > 1:
            q[k - 1, k - 2] = deaths[k]
    return MassChainOracle(N=N, births=births, deaths=deaths, sub_generator=q)


class EigenpairResult(NamedTuple):
    theta: float
    nu: np.ndarray
    residual: float
    iterations: int


def principal_left_eigenpair(oracle: MassChainOracle, tol: float = 1e-10,
                             max_iters: int = 200_000,
                             uniformization_rate: float | None = None) -> EigenpairResult:
    """Decay rate and limit mass law of the truncated chain.

    Power iteration on the uniformized kernel K = I + Q/L with L at
    least the largest exit rate. Converged when the left eigenvector
    residual in l1 norm is within tol; theta = L(1 - spectral radius).
    ``nu`` is returned over masses 0..N with index 0 zero.
    """
    if tol <= 0.0:
        raise InvalidRegime(f"tol must be positive, got {tol!r}")
    q = oracle.sub_generator
    exit_max = float(np.max(-np.diag(q)))
    rate = exit_max if uniformization_rate is None else float(uniformization_rate)
    if rate < exit_max:
        raise InvalidRegime(
            f"uniformization rate {rate!r} below the largest exit rate {exit_max!r}"
        )
    kernel = np.eye(oracle.N) + q / rate
    nu = np.full(oracle.N, 1.0 / oracle.N)
    for iteration in range(1, max_iters + 1):
        nxt = nu @ kernel
        radius = float(nxt.sum())
        theta = rate * (1.0 - radius)
        # residual of nu Q = -theta nu, reusing nxt since Q = rate (K - I)
        residual = rate * float(np.abs(nxt - radius * nu).sum())
        nu = nxt / radius
        if residual <= tol:
            full = np.zeros(oracle.N + 1)
            full[1:] = nu
            return EigenpairResult(theta=theta, nu=full, residual=residual,
                                   iterations=iteration)
    raise NoConvergence(
        f"residual above {tol!r} after {max_iters} sweeps; raise the truncation or"
        " loosen the tolerance"
    )


def mean_extinction_time(oracle: MassChainOracle, k0: int) -> float:
    """Expected absorption time from mass k0 in the truncated chain."""
    if not 1 <= k0 <= oracle.N:
        raise ValueError(f"k0 must be in 1..{oracle.N}, got {k0!r}")
    try:
        u = np.linalg.solve(oracle.sub_generator, -np.ones(oracle.N))
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"first-passage system is singular: {exc}") from exc
    return float(u[k0 - 1])


def eigenpair_report(oracle: MassChainOracle, result: EigenpairResult) -> dict:
    """JSON-ready oracle summary; nu starts at mass 1."""
    return {
        "N": oracle.N,
        "theta": result.theta,
        "nu": [float(x) for x in result.nu[1:]],
        "residual": result.residual,
        "iters": result.iterations,
    }


def ode_trajectory(lambda_star: float, b_star: float, a0: float, t_end: float,
                   dt: float) -> list[tuple[float, float]]:
    """Fixed-step fourth-order integration of the exponent ODE.

    da/dt = lambda_star (1 - e^{-a}) + b_star (1 - e^{a}), which is
    increasing on (0, log(lambda_star/b_star)) and fixes the right
    endpoint; a0 at the endpoint itself is accepted and stays put.
    """
    if lambda_star <= b_star:
        raise InvalidRegime(
            f"need lambda_star > b_star, got {lambda_star!r} <= {b_star!r}"
        )
    if b_star <= 0.0:
        raise InvalidRegime(f"b_star must be positive, got {b_star!r}")
    ceiling = math.log(lambda_star / b_star)
    if not 0.0 < a0 <= ceiling:
        raise InvalidRegime(f"a0 must lie in (0, {ceiling!r}], got {a0!r}")
    if dt <= 0.0 or t_end < 0.0:
        raise InvalidRegime(f"need dt > 0 and t_end >= 0, got {dt!r}, {t_end!r}")

    def f(a: float) -> float:
        return lambda_star * (1.0 - math.exp(-a)) + b_star * (1.0 - math.exp(a))

    out = [(0.0, a0)]
    a = a0
    t = 0.0
    steps = int(math.floor(t_end / dt + 1e-12))
    for i in range(1, steps + 1):
        h = dt
        k1 = f(a)
        k2 = f(a + 0.5 * h * k1)
        k3 = f(a + 0.5 * h * k2)
        k4 = f(a + h * k3)
        a = a + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = i * dt
        out.append((t, a))
    if t < t_end:
        h = t_end - t
        k1 = f(a)
        k2 = f(a + 0.5 * h * k1)
        k3 = f(a + 0.5 * h * k2)
        k4 = f(a + h * k3)
        a = a + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out.append((t_end, a))
    return out
