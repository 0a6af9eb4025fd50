import io
import math

import pytest

from ngmpn.expr import eval_expr, parse_expr
from ngmpn.modelzoo import builtin
from ngmpn.petri import parse_model
from ngmpn.sim import (SimError, run_spn, run_spn_replicates, run_vapn,
                       step_vapn)

SIR_DENSITY = """\
model sir_density kind=vapn
param beta=0.0003
param gamma=0.1
place S init=990
place I init=10 infected
place R init=0
trans infect
trans recover
arc S -> infect weight="beta*S*I"
arc infect -> I weight="beta*S*I"
arc I -> recover weight="gamma*I"
arc recover -> R weight="gamma*I"
"""

BIRTH_SPN = """\
model birth kind=spn
param lam=2
place X init=0 infected
trans arrive rate="lam"
arc arrive -> X mult=1
"""


# ----------------------------------------------------------------- stepping

def test_step_fixture():
    m = parse_model(SIR_DENSITY)
    nxt = step_vapn(m, (990.0, 10.0, 0.0), 1.0)
    assert nxt == (987.03, 11.969999999999999, 1.0)


def test_step_respects_param_overrides():
    m = parse_model(SIR_DENSITY)
    nxt = step_vapn(m, (990.0, 10.0, 0.0), 1.0, params={"beta": 0.0})
    assert nxt == (990.0, 9.0, 1.0)


def test_step_unknown_param():
    with pytest.raises(SimError):
        step_vapn(parse_model(SIR_DENSITY), (990.0, 10.0, 0.0), 1.0,
                  params={"zeta": 1.0})


def test_disease_free_marking_is_fixed_point():
    m = builtin("sirs")
    mk = (1000000.0, 0.0, 0.0)
    for _ in range(5):
        mk = step_vapn(m, mk, 0.5)
    assert mk == (1000000.0, 0.0, 0.0)


def test_step_clips_negative_stock():
    text = """\
model drain kind=vapn
param k=3
place X init=1 infected
place Y init=0
trans leak
arc X -> leak weight="k*X"
arc leak -> Y weight="k*X"
"""
    m = parse_model(text)
    assert step_vapn(m, (1.0, 0.0), 1.0) == (0.0, 3.0)
    traj = run_vapn(m, 1.0, dt=1.0)
    assert traj.clipping_events == 1
    assert traj.final() == (0.0, 3.0)


# --------------------------------------------------------------- run_vapn

def test_run_records_initial_state_and_grid():
    traj = run_vapn(builtin("sirs"), 2.0, dt=0.5)
    assert traj.places == ("S", "I", "R")
    assert traj.times == (0.0, 0.5, 1.0, 1.5, 2.0)
    assert traj.markings[0] == (999999.0, 1.0, 0.0)


def test_run_zero_horizon():
    traj = run_vapn(builtin("sirs"), 0.0, dt=0.1)
    assert len(traj.times) == 1
    assert traj.final() == (999999.0, 1.0, 0.0)


def test_run_partial_final_step():
    traj = run_vapn(builtin("sirs"), 1.25, dt=0.5)
    assert traj.times[-1] == pytest.approx(1.25, abs=1e-12)


def test_sample_every_thins_output():
    traj = run_vapn(builtin("sirs"), 10.0, dt=0.1, sample_every=10)
    assert len(traj.times) == 11
    assert traj.times[1] == pytest.approx(1.0, abs=1e-12)


def test_run_matches_hand_rolled_euler_exactly():
    m = builtin("sirs")
    arcs_in = {}    # place -> [(expr, sign)]
    bindings = dict(m.params)
    for arc in m.arcs:
        expr = parse_expr(arc.weight) if isinstance(arc.weight, str) else arc.weight
        if arc.source in m.place_names():
            arcs_in.setdefault(arc.source, []).append((expr, -1.0))
        if arc.target in m.place_names():
            arcs_in.setdefault(arc.target, []).append((expr, +1.0))
    names = m.place_names()
    mk = list(m.initial_marking())
    dt = 0.05
    for _ in range(200):
        env = dict(bindings)
        env.update(zip(names, mk))
        env["N"] = mk[0]
        for p in names[1:]:
            env["N"] = env["N"] + env[p]
        nxt = []
        for i, p in enumerate(names):
            acc = 0.0
            pos = 0.0
            neg = 0.0
            for expr, sign in arcs_in.get(p, []):
                v = eval_expr(expr, env)
                if sign > 0:
                    pos = pos + v
                else:
                    neg = neg + v
            ni = mk[i] + dt * (pos - neg)
            if ni < 0.0:
                ni = 0.0
            nxt.append(ni)
        mk = nxt
    traj = run_vapn(m, 200 * dt, dt=dt)
    assert list(traj.final()) == mk   # bit identical


def test_halving_dt_shows_first_order_convergence():
    m = builtin("sirs")
    mk0 = (9999.0, 1.0, 0.0)

    def s_end(dt):
        return run_vapn(m, 40.0, dt=dt, marking0=mk0,
                        params={"beta": 0.4, "gamma": 0.1, "delta": 0.0},
                        sample_every=10 ** 9).final()[0]

    d1 = s_end(0.1) - s_end(0.05)
    d2 = s_end(0.05) - s_end(0.025)
    assert d1 / d2 == pytest.approx(2.0, rel=0.15)


def test_keyword_place_names_survive_compilation():
    text = """\
model kw kind=vapn
param k=0.5
place lambda init=10 infected
place class init=0
trans move
arc lambda -> move weight="k*lambda"
arc move -> class weight="k*lambda"
"""
    m = parse_model(text)
    assert step_vapn(m, (10.0, 0.0), 1.0) == (5.0, 5.0)


def test_write_csv_round_trip():
    traj = run_vapn(builtin("sirs"), 1.0, dt=0.5)
    buf = io.StringIO()
    traj.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,S,I,R"
    assert len(lines) == 4
    first = lines[1].split(",")
    assert float(first[0]) == 0.0 and float(first[1]) == 999999.0


def test_column_accessor():
    traj = run_vapn(builtin("sirs"), 1.0, dt=0.5)
    assert traj.column("I")[0] == 1.0
    with pytest.raises(SimError):
        traj.column("Q")


# ----------------------------------------------------------------- run_spn

def test_spn_same_seed_reproduces():
    m = builtin("sirs_spn")
    a = run_spn(m, 5.0, seed=42, sample_dt=0.5)
    b = run_spn(m, 5.0, seed=42, sample_dt=0.5)
    assert a.times == b.times and a.markings == b.markings
    assert a.rng_seed == 42


def test_spn_different_seeds_diverge():
    m = builtin("sirs_spn")
    a = run_spn(m, 5.0, seed=1)
    b = run_spn(m, 5.0, seed=2)
    assert a.markings != b.markings


def test_spn_markings_stay_integral_and_conserved():
    m = builtin("sirs_spn")   # closed population
    traj = run_spn(m, 10.0, seed=7)
    total = sum(traj.markings[0])
    for mk in traj.markings:
        assert all(float(x).is_integer() and x >= 0 for x in mk)
        assert sum(mk) == total


def test_spn_absorbing_state_fills_forward():
    m = builtin("sirs_spn")
    # no infecteds and no waning: nothing can fire
    traj = run_spn(m, 5.0, seed=3, marking0=(100, 0, 0))
    assert traj.times[-1] == pytest.approx(5.0)
    assert all(mk == (100, 0, 0) for mk in traj.markings)


def test_spn_event_count_matches_poisson_rate():
    m = parse_model(BIRTH_SPN)
    traj = run_spn(m, 50.0, seed=11)
    x = traj.final()[0]
    # X ~ Poisson(100); 11 is no outlier seed
    assert abs(x - 100.0) <= 3.0 * 10.0


def test_spn_negative_rate_rejected():
    text = BIRTH_SPN.replace('rate="lam"', 'rate="0 - lam"')
    with pytest.raises(SimError) as err:
        run_spn(parse_model(text), 1.0, seed=1)
    assert "arrive" in str(err.value)


def test_replicates_reproducible_and_tagged():
    m = builtin("sirs_spn")
    runs = run_spn_replicates(m, 3.0, seed=5, replicates=3)
    again = run_spn_replicates(m, 3.0, seed=5, replicates=3)
    assert len(runs) == 3
    for i, (a, b) in enumerate(zip(runs, again)):
        assert a.markings == b.markings
        assert a.metadata["parent_seed"] == 5
        assert a.metadata["replicate"] == i
    assert runs[0].rng_seed != runs[1].rng_seed


def test_replicates_validates_count():
    with pytest.raises(SimError):
        run_spn_replicates(builtin("sirs_spn"), 1.0, seed=1, replicates=0)


def test_spn_on_vapn_model_rejected():
    with pytest.raises(SimError):
        run_spn(builtin("sirs"), 1.0, seed=1)


def test_vapn_on_spn_model_rejected():
    with pytest.raises(SimError):
        run_vapn(builtin("sirs_spn"), 1.0, dt=0.1)


def test_dt_must_be_positive():
    with pytest.raises(SimError):
        run_vapn(builtin("sirs"), 1.0, dt=0.0)
