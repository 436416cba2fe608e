import math

import numpy as np
import pytest

from qsdsim.coupling import bd_qsd
from qsdsim.errors import (InvalidRegime, NoConvergence, SingularSystem,
                           UnsupportedModel)
from qsdsim.oracle import (MassChainOracle, build_mass_chain,
                           eigenpair_report, mean_extinction_time,
                           ode_trajectory, principal_left_eigenpair)
from qsdsim.qsd import tv_distance
from qsdsim.rates import LogisticModel
from qsdsim.trait_space import UniformKernel


def test_build_uniform_chain_by_hand(uniform_model):
    chain = build_mass_chain(uniform_model, 3)
    assert chain.births[1:].tolist() == [1.0, 2.0, 3.0]
    assert chain.deaths[1:].tolist() == [2.0, 4.0, 6.0]
    expected = np.array([
        [-3.0, 1.0, 0.0],
        [4.0, -6.0, 2.0],
        [0.0, 6.0, -9.0],
    ])
    assert np.array_equal(chain.sub_generator, expected)


def test_build_logistic_death_rate():
    model = LogisticModel(b=1.0, rho=0.3, d=0.5, c=0.5, kernel=UniformKernel())
    chain = build_mass_chain(model, 3)
    assert chain.deaths[3] == 4.5


def test_build_rejects_degenerate_truncation(uniform_model):
    with pytest.raises(UnsupportedModel):
        build_mass_chain(uniform_model, 1)
    with pytest.raises(UnsupportedModel):
        build_mass_chain(uniform_model, 0)


def test_row_sums_account_for_absorption_and_truncation(uniform_model, logistic_model):
    for model in (uniform_model, logistic_model):
        chain = build_mass_chain(model, 10)
        sums = chain.sub_generator.sum(axis=1)
        for k in range(1, 11):
            expected = 0.0
            if k == 1:
                expected -= chain.deaths[1]
            if k == 10:
                expected -= chain.births[10]
            assert sums[k - 1] == pytest.approx(expected, abs=1e-12)


def test_two_state_eigenpair_solved_by_hand(uniform_model):
    # Q = [[-3, 1], [4, -6]] has principal eigenvalue -2 with left
    # vector proportional to (4, 1)
    result = principal_left_eigenpair(build_mass_chain(uniform_model, 2))
    assert result.theta == pytest.approx(2.0, abs=1e-9)
    assert result.nu == pytest.approx([0.0, 0.8, 0.2], abs=1e-9)


def test_truncated_chain_reaches_closed_form(uniform_model, oracle60):
    chain, result = oracle60
    assert abs(result.theta - 1.0) <= 1e-6
    probs, _ = bd_qsd(uniform_model.lam, uniform_model.b, 60)
    assert tv_distance(result.nu, probs) <= 1e-6
    assert result.nu[0] == 0.0
    assert result.iterations >= 1


def test_residual_contract_holds_for_returned_vector(oracle60):
    chain, result = oracle60
    recomputed = float(np.abs(result.nu[1:] @ chain.sub_generator
                              + result.theta * result.nu[1:]).sum())
    assert recomputed <= 1e-10
    assert result.residual <= 1e-10


def test_theta_stable_under_deeper_truncation(uniform_model, oracle60):
    _, result = oracle60
    deeper = principal_left_eigenpair(build_mass_chain(uniform_model, 80))
    assert abs(result.theta - deeper.theta) <= 1e-6


def test_uniformization_rate_is_immaterial(logistic_model):
    chain = build_mass_chain(logistic_model, 40)
    exit_max = float(np.max(-np.diag(chain.sub_generator)))
    a = principal_left_eigenpair(chain, uniformization_rate=1.5 * exit_max)
    b = principal_left_eigenpair(chain, uniformization_rate=3.0 * exit_max)
    assert abs(a.theta - b.theta) <= 1e-9
    assert float(np.abs(a.nu - b.nu).sum()) <= 1e-9


def test_eigenpair_error_paths(uniform_model):
    chain = build_mass_chain(uniform_model, 10)
    with pytest.raises(InvalidRegime):
        principal_left_eigenpair(chain, tol=0.0)
    exit_max = float(np.max(-np.diag(chain.sub_generator)))
    with pytest.raises(InvalidRegime):
        principal_left_eigenpair(chain, uniformization_rate=0.5 * exit_max)
    with pytest.raises(NoConvergence):
        principal_left_eigenpair(chain, tol=1e-14, max_iters=1)


def test_mean_extinction_single_state_by_hand():
    # state 1 exits at rate 3 and is absorbed or truncated either way
    oracle = MassChainOracle(N=1, births=np.array([0.0, 1.0]),
                             deaths=np.array([0.0, 2.0]),
                             sub_generator=np.array([[-3.0]]))
    assert mean_extinction_time(oracle, 1) == pytest.approx(1.0 / 3.0, rel=1e-12)


def test_mean_extinction_monotone_and_stable(uniform_model):
    chain = build_mass_chain(uniform_model, 60)
    times = [mean_extinction_time(chain, k) for k in range(1, 11)]
    assert all(a < b for a, b in zip(times, times[1:]))
    deeper = build_mass_chain(uniform_model, 80)
    assert abs(times[0] - mean_extinction_time(deeper, 1)) <= 1e-8
    # one-individual start has a closed-form mean lifetime
    assert abs(times[0] - math.log(2.0)) <= 1e-6


def test_mean_extinction_argument_range(uniform_model):
    chain = build_mass_chain(uniform_model, 5)
    with pytest.raises(ValueError):
        mean_extinction_time(chain, 0)
    with pytest.raises(ValueError):
        mean_extinction_time(chain, 6)


def test_singular_first_passage_system():
    oracle = MassChainOracle(N=2, births=np.zeros(3), deaths=np.zeros(3),
                             sub_generator=np.zeros((2, 2)))
    with pytest.raises(SingularSystem):
        mean_extinction_time(oracle, 1)


def test_eigenpair_report_shape(oracle60):
    chain, result = oracle60
    report = eigenpair_report(chain, result)
    assert report["N"] == 60
    assert len(report["nu"]) == 60
    assert report["nu"][0] == pytest.approx(0.5, abs=1e-7)
    assert report["theta"] == result.theta
    assert report["residual"] <= 1e-10
    assert report["iters"] == result.iterations


def test_ode_fixed_point_stays_put():
    ceiling = math.log(2.0)
    path = ode_trajectory(2.0, 1.0, ceiling, 10.0, 0.01)
    assert all(abs(a - ceiling) <= 1e-12 for _, a in path)


def test_ode_converges_to_log_ratio():
    path = ode_trajectory(2.0, 1.0, 0.1, 50.0, 0.01)
    assert path[0] == (0.0, 0.1)
    assert abs(path[-1][1] - math.log(2.0)) <= 1e-6
    values = [a for _, a in path]
    assert all(b >= a for a, b in zip(values, values[1:]))
    early = [a for t, a in path if t <= 20.0]
    assert all(b > a for a, b in zip(early, early[1:]))


def test_ode_partial_final_step():
    path = ode_trajectory(2.0, 1.0, 0.1, 1.05, 0.1)
    times = [t for t, _ in path]
    assert times == pytest.approx([0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7,
                                   0.8, 0.9, 1.0, 1.05])


def test_ode_fourth_order_step_scaling():
    def endpoint(dt):
        return ode_trajectory(2.0, 1.0, 0.1, 2.0, dt)[-1][1]

    coarse = abs(endpoint(0.1) - endpoint(0.05))
    fine = abs(endpoint(0.05) - endpoint(0.025))
    assert 10.0 <= coarse / fine <= 20.0


def test_ode_regime_checks():
    with pytest.raises(InvalidRegime):
        ode_trajectory(1.0, 1.0, 0.1, 1.0, 0.1)
    with pytest.raises(InvalidRegime):
        ode_trajectory(1.0, 2.0, 0.1, 1.0, 0.1)
    with pytest.raises(InvalidRegime):
        ode_trajectory(2.0, -1.0, 0.1, 1.0, 0.1)
    with pytest.raises(InvalidRegime):
        ode_trajectory(2.0, 1.0, 0.0, 1.0, 0.1)
    with pytest.raises(InvalidRegime):
        ode_trajectory(2.0, 1.0, math.log(2.0) + 0.01, 1.0, 0.1)
    with pytest.raises(InvalidRegime):
        ode_trajectory(2.0, 1.0, 0.1, 1.0, 0.0)
    with pytest.raises(InvalidRegime):
        ode_trajectory(2.0, 1.0, 0.1, -1.0, 0.1)
