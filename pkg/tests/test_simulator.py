import io
import math

import pytest

from qsdsim.configuration import Configuration
from qsdsim.simulator import (ENGINES, Event, EventKind, apply_event,
                              hitting_tail, mass_moments, replay_observables,
                              simulate_gillespie, simulate_thinning,
                              survival_curve, write_trajectory_csv)
from qsdsim.streams import RandomStream
from qsdsim.validation import chi2_threshold, mass_histogram, two_sample_chi2

START = Configuration.from_pairs(((0.2, 2), (0.6, 1)))


def _exact_survival(lam, b, t):
    # linear birth-death from one individual, subcritical
    theta = lam - b
    return theta * math.exp(-theta * t) / (lam - b * math.exp(-theta * t))


def test_apply_event_by_kind():
    c = apply_event(START, Event(0.1, EventKind.CLONAL, 0.2, 0.2))
    assert c.weight_of(0.2) == 3
    c = apply_event(START, Event(0.1, EventKind.MUTATION, 0.2, 0.4))
    assert c.weight_of(0.4) == 1 and c.total_mass == 4
    c = apply_event(START, Event(0.1, EventKind.DEATH, 0.6, None))
    assert c.weight_of(0.6) == 0 and c.total_mass == 2


@pytest.mark.parametrize("engine", sorted(ENGINES))
def test_engine_is_deterministic_per_stream(engine, uniform_model):
    runs = []
    for _ in range(2):
        rng = RandomStream(7).substream(0).generator()
        runs.append(ENGINES[engine](uniform_model, START, 3.0, rng))
    assert runs[0].events == runs[1].events
    assert runs[0].final == runs[1].final
    assert runs[0].extinction_time == runs[1].extinction_time


@pytest.mark.parametrize("engine", sorted(ENGINES))
def test_replay_matches_inline_observables(engine, uniform_model, logistic_model):
    stream = RandomStream(11, (ord(engine[0]),))
    for model in (uniform_model, logistic_model):
        for r in range(100):
            traj = ENGINES[engine](model, START, 2.0, stream.substream(r).generator())
            final, extinction, chi, kappa = replay_observables(traj)
            assert final == traj.final
            assert extinction == traj.extinction_time
            assert chi == traj.first_mutation_time
            assert kappa == traj.replacement_time


@pytest.mark.parametrize("engine", sorted(ENGINES))
def test_mass_trace_steps_by_one(engine, logistic_model):
    traj = ENGINES[engine](logistic_model, START, 4.0,
                           RandomStream(13).generator())
    trace = traj.mass_trace()
    assert trace[0] == (0.0, 3)
    for (_, before), (_, after) in zip(trace, trace[1:]):
        assert abs(after - before) == 1
    assert trace[-1][1] == traj.final.total_mass


def test_unreached_observables_are_inf(uniform_model):
    traj = simulate_gillespie(uniform_model, START, 0.0,
                              RandomStream(17).generator())
    assert traj.events == ()
    assert traj.final == START
    assert math.isinf(traj.extinction_time)
    assert math.isinf(traj.first_mutation_time)
    assert math.isinf(traj.replacement_time)


def test_run_to_extinction(uniform_model):
    traj = simulate_gillespie(uniform_model, START, 400.0,
                              RandomStream(19).generator())
    assert traj.final.is_void
    assert traj.extinction_time == traj.events[-1].time
    assert traj.replacement_time <= traj.extinction_time
    assert traj.mass_trace()[-1][1] == 0


def test_hitting_time_from_event_log():
    events = (
        Event(1.0, EventKind.CLONAL, 0.2, 0.2),
        Event(2.0, EventKind.MUTATION, 0.2, 0.9),
        Event(3.0, EventKind.DEATH, 0.6, None),
    )
    final = Configuration.from_pairs(((0.2, 3), (0.9, 1)))
    from qsdsim.simulator import Trajectory
    traj = Trajectory(initial=START, events=events, horizon=10.0, final=final,
                      extinction_time=math.inf, first_mutation_time=2.0,
                      replacement_time=math.inf)
    assert traj.hitting_time(2) == 0.0
    assert traj.hitting_time(3) == 0.0
    assert traj.hitting_time(4) == 1.0
    assert traj.hitting_time(5) == 2.0
    assert math.isinf(traj.hitting_time(6))


def test_replay_on_hand_built_log():
    from qsdsim.simulator import Trajectory
    initial = Configuration.from_pairs(((0.5, 2),))
    events = (
        Event(1.0, EventKind.MUTATION, 0.5, 0.3),
        Event(2.0, EventKind.DEATH, 0.5, None),
        Event(3.0, EventKind.DEATH, 0.5, None),
    )
    traj = Trajectory(initial=initial, events=events, horizon=10.0,
                      final=Configuration.singleton(0.3),
                      extinction_time=math.inf, first_mutation_time=1.0,
                      replacement_time=3.0)
    final, extinction, chi, kappa = replay_observables(traj)
    assert final == Configuration.singleton(0.3)
    assert math.isinf(extinction)
    assert chi == 1.0
    assert kappa == 3.0


def test_state_at_is_right_continuous(uniform_model):
    traj = simulate_gillespie(uniform_model, START, 3.0,
                              RandomStream(23).generator())
    assert traj.state_at(0.0) == START
    first = traj.events[0]
    assert traj.state_at(first.time / 2) == START
    assert traj.state_at(first.time) == apply_event(START, first)
    with pytest.raises(ValueError):
        traj.state_at(-0.1)
    with pytest.raises(ValueError):
        traj.state_at(traj.horizon + 1.0)


@pytest.mark.parametrize("engine", sorted(ENGINES))
def test_negative_horizon_rejected(engine, uniform_model):
    with pytest.raises(ValueError):
        ENGINES[engine](uniform_model, START, -1.0, RandomStream(1).generator())


def test_survival_curve_matches_closed_form(uniform_model):
    grid = (0.5, 1.0, 2.0)
    curve = survival_curve(uniform_model, Configuration.singleton(0.5), grid,
                           20_000, RandomStream(29))
    assert len(curve) == 3
    for t, p, se in curve:
        exact = _exact_survival(uniform_model.lam, uniform_model.b, t)
        assert abs(p - exact) <= 4.0 * se


def test_survival_curve_validation(uniform_model):
    with pytest.raises(ValueError):
        survival_curve(uniform_model, START, (1.0, 0.5), 10, RandomStream(1))
    with pytest.raises(ValueError):
        survival_curve(uniform_model, START, (-1.0, 0.5), 10, RandomStream(1))
    with pytest.raises(ValueError):
        survival_curve(uniform_model, START, (0.5, 1.0), 0, RandomStream(1))


def test_hitting_tail_monotone_and_trivial_levels(uniform_model):
    tails = hitting_tail(uniform_model, START, 1.0, range(1, 9), 4000,
                         RandomStream(31))
    probs = [p for _, p in tails]
    assert probs[0] == 1.0 and probs[1] == 1.0 and probs[2] == 1.0
    assert all(a >= b for a, b in zip(probs, probs[1:]))
    assert probs[-1] < 0.05
    with pytest.raises(ValueError):
        hitting_tail(uniform_model, START, 1.0, (4,), 0, RandomStream(1))


def test_mass_moments_track_exponential_decay(uniform_model):
    initial = Configuration.from_pairs(((0.1, 2), (0.5, 2), (0.9, 1)))
    rows = mass_moments(uniform_model, initial, (0.25, 0.75), 20_000,
                        RandomStream(37))
    theta = uniform_model.lam - uniform_model.b
    for t, mean, se in rows:
        assert abs(mean - 5.0 * math.exp(-theta * t)) <= 4.0 * se
    with pytest.raises(ValueError):
        mass_moments(uniform_model, initial, (0.75, 0.25), 10, RandomStream(1))


def test_mass_moments_at_time_zero_are_exact(uniform_model):
    rows = mass_moments(uniform_model, START, (0.0,), 50, RandomStream(41))
    t, mean, se = rows[0]
    assert (t, mean, se) == (0.0, 3.0, 0.0)


def test_engines_agree_on_final_mass_law(uniform_model):
    masses = {}
    for lane, engine in enumerate(sorted(ENGINES)):
        stream = RandomStream(43, (lane,))
        masses[engine] = [
            ENGINES[engine](uniform_model, START, 1.0,
                            stream.substream(r).generator()).final.total_mass
            for r in range(4000)]
    stat, df = two_sample_chi2(mass_histogram(masses["gillespie"]),
                               mass_histogram(masses["thinning"]))
    assert stat <= chi2_threshold(df)


def test_thinning_counts_candidates(uniform_model, logistic_model):
    for model in (uniform_model, logistic_model):
        traj = simulate_thinning(model, START, 2.0, RandomStream(47).generator())
        assert traj.accepted_count == len(traj.events)
        assert traj.candidate_count >= traj.accepted_count
    gill = simulate_gillespie(uniform_model, START, 2.0, RandomStream(47).generator())
    assert gill.candidate_count is None and gill.accepted_count is None


def test_trajectory_csv_layout(uniform_model):
    traj = simulate_gillespie(uniform_model, START, 2.0, RandomStream(53).generator())
    buffer = io.StringIO()
    write_trajectory_csv(traj, buffer, metadata={"seed": 53})
    lines = buffer.getvalue().splitlines()
    assert lines[0] == "# seed=53"
    assert lines[1] == "time,event_kind,parent_trait,child_trait,total_mass_after"
    rows = lines[2:]
    assert len(rows) == len(traj.events)
    for row, event in zip(rows, traj.events):
        time, kind, parent, child, mass = row.split(",")
        assert kind == event.kind.value
        if event.kind is EventKind.CLONAL:
            assert child == parent
        if event.kind is EventKind.DEATH:
            assert child == ""
        assert int(mass) >= 0
