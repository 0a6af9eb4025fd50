import math

import pytest

from ngmpn.expr import to_text
from ngmpn.modelzoo import builtin
from ngmpn.ngm import (DfeError, NgmError, build_script_F, build_script_V,
                       compute_dfe, jacobians_at_dfe, ngm_r0, spectral_radius)
from ngmpn.petri import classify_transitions, parse_model


def rel(a, b):
    return abs(a - b) / abs(b)


# ---------------------------------------------------------------------- DFE

def test_dfe_sirs_conservation():
    dfe = compute_dfe(builtin("sirs"))
    assert dfe.marking == (1000000.0, 0.0, 0.0)
    assert dfe.method == "conservation-augmented"
    assert dfe.residual <= 1e-10


def test_dfe_seir_newton_demographic_balance():
    # susceptible settles at recruitment/mortality
    dfe = compute_dfe(builtin("seir"), params={"Pi": 2.0, "mu": 0.01})
    assert dfe.method == "newton"
    marking = dict(zip(builtin("seir").place_names(), dfe.marking))
    assert marking["S"] == pytest.approx(200.0, rel=1e-9)
    assert marking["E"] == 0.0 and marking["I"] == 0.0
    assert marking["R"] == pytest.approx(0.0, abs=1e-9)


def test_dfe_vectorborne_two_populations():
    m = builtin("vectorborne")
    dfe = compute_dfe(m)
    marking = dict(zip(m.place_names(), dfe.marking))
    assert marking["S_h"] == pytest.approx(100.0, rel=1e-9)   # Pi/mu_h
    assert marking["S_v"] == pytest.approx(200.0, rel=1e-9)   # Lam/mu_v
    assert marking["I_h"] == 0.0 and marking["I_v"] == 0.0


def test_dfe_patch2():
    m = builtin("patch2")
    dfe = compute_dfe(m)
    marking = dict(zip(m.place_names(), dfe.marking))
    assert marking["S1"] == pytest.approx(200.0, rel=1e-9)
    assert marking["S2"] == pytest.approx(125.0, rel=1e-9)


def test_dfe_constraint_pins_a_place():
    dfe = compute_dfe(builtin("sirs"), constraints={"S": 5e5})
    assert dfe.marking == (500000.0, 0.0, 0.0)
    assert dfe.method == "annotated"


def test_dfe_constraint_accepts_expression_text():
    dfe = compute_dfe(builtin("sirs"), constraints=[("S", "2*3")])
    assert dfe.marking[0] == 6.0


def test_dfe_constraint_on_infected_rejected():
    with pytest.raises(DfeError):
        compute_dfe(builtin("sirs"), constraints={"I": 1.0})


def test_dfe_constraint_unknown_place_rejected():
    with pytest.raises(DfeError):
        compute_dfe(builtin("sirs"), constraints={"Q": 1.0})


def test_dfe_residual_reported_small_everywhere():
    for mid in ("sirs", "seir", "seeir", "covid", "nonlinear", "patch2",
                "vectorborne", "sirs_spn", "seir_spn"):
        dfe = compute_dfe(builtin(mid))
        assert dfe.residual <= 1e-10, mid


# ---------------------------------------------------------------- script F/V

def test_scripts_sirs():
    m = builtin("sirs")
    ft = classify_transitions(m)
    assert [to_text(e) for e in build_script_F(m, ft)] == ["beta*S*I/N"]
    assert [[to_text(c) for c in row] for row in build_script_V(m, ft)] == \
        [["gamma*I"]]


def test_scripts_spn_twin_keeps_both_infection_terms():
    m = builtin("sirs_spn")
    ft = classify_transitions(m)
    assert [to_text(e) for e in build_script_F(m, ft)] == \
        ["2*beta*S*I/N - beta*S*I/N"]


def test_scripts_seir():
    m = builtin("seir")
    ft = classify_transitions(m)
    assert [to_text(e) for e in build_script_F(m, ft)] == ["beta*S*I", "0"]
    assert [[to_text(c) for c in row] for row in build_script_V(m, ft)] == \
        [["eta*E + mu*E", "0"], ["-eta*E", "alpha*I + mu*I"]]


def test_scripts_catalytic_exposure():
    # S + I -> E + I leaves I untouched; its net infection term cancels
    m = builtin("seir_spn")
    ft = classify_transitions(m)
    assert [to_text(e) for e in build_script_F(m, ft)] == \
        ["beta*S*I", "beta*S*I - beta*S*I"]


def test_scripts_relapse_self_loop():
    # the I_h -> relapse -> 2 I_h loop contributes delta - 2*delta = -delta
    m = builtin("vectorborne")
    ft = classify_transitions(m)
    rows = [[to_text(c) for c in row] for row in build_script_V(m, ft)]
    assert rows == [
        ["delta*I_h - 2*delta*I_h + sigma*I_h + (mu_h + alpha)*I_h", "0"],
        ["0", "mu_v*I_v"],
    ]


# ----------------------------------------------------------------- Jacobians

def test_jacobians_sirs():
    m = builtin("sirs")
    ft = classify_transitions(m)
    dfe = compute_dfe(m)
    F, V = jacobians_at_dfe(m, build_script_F(m, ft), build_script_V(m, ft),
                            dfe)
    assert F == [[pytest.approx(0.3, rel=1e-12)]]
    assert V == [[pytest.approx(0.1, rel=1e-12)]]


def test_jacobians_seir_numbers():
    res = ngm_r0(builtin("seir"))
    assert res.F == ((0.0, pytest.approx(0.3125)), (0.0, 0.0))
    assert res.V == ((pytest.approx(0.27), 0.0),
                     (pytest.approx(-0.25), pytest.approx(0.12)))
    assert res.K[0][0] == pytest.approx(2.411265432098765, rel=1e-12)


# ------------------------------------------------------------------------ r0

FROZEN_R0 = {
    "sirs": 3.0,
    "seir": 2.411265432098765,
    "seeir": 1.7815517815517814,
    "covid": 2.080769230769231,
    "nonlinear": 2.747252747252747,
    "vectorborne": 0.8164965809277259,
    "patch2": 2.373533009068967,
    "sirs_spn": 3.0,
    "seir_spn": 2.411265432098765,
}


@pytest.mark.parametrize("mid,expected", sorted(FROZEN_R0.items()))
def test_r0_at_defaults(mid, expected):
    res = ngm_r0(builtin(mid))
    assert rel(res.r0, expected) < 1e-9


def test_r0_seir_spot_point():
    res = ngm_r0(builtin("seir"), params={"beta": 0.5, "Pi": 1.0, "mu": 0.1,
                                          "eta": 0.3, "alpha": 0.2})
    assert res.r0 == pytest.approx(12.5, rel=1e-9)


def test_r0_nonlinear_spot_point():
    res = ngm_r0(builtin("nonlinear"), params={"sigma": 0.25, "beta": 0.8,
                                               "mu": 0.05, "gamma": 0.2})
    assert res.r0 == pytest.approx(2.666666666666667, rel=1e-9)


def test_r0_sirs_explicit_params():
    res = ngm_r0(builtin("sirs"), params={"beta": 0.4, "gamma": 0.2,
                                          "delta": 0.01})
    assert res.r0 == pytest.approx(2.0, rel=1e-12)


# ------------------------------------------------------------ result surface

def test_result_as_dict_shape():
    d = ngm_r0(builtin("sirs")).as_dict()
    assert sorted(d) == ["F", "K", "V", "Vinv", "dfe", "diagnostics",
                         "findings", "r0"]
    assert d["dfe"]["marking"] == {"S": 1000000.0, "I": 0.0, "R": 0.0}
    assert d["dfe"]["method"] == "conservation-augmented"
    assert d["r0"] == 3.0
    assert d["F"] == [[0.3]]
    assert d["K"] == [[pytest.approx(3.0)]]


def test_diagnostics_and_findings():
    res = ngm_r0(builtin("sirs"))
    assert res.diagnostics["condition_V"] == pytest.approx(1.0)
    assert res.diagnostics["modulus_tie"] is False
    status = {f.code: f.status for f in res.findings}
    assert status == {"A1": "satisfied", "A2": "satisfied", "A3": "satisfied",
                      "A4": "satisfied", "A5": "satisfied"}


def test_transfer_spectrum_checked_numerically():
    # A5 resolves to satisfied on every built-in at defaults
    for mid in FROZEN_R0:
        res = ngm_r0(builtin(mid))
        a5 = [f for f in res.findings if f.code == "A5"]
        assert a5 and a5[0].status == "satisfied", mid


def test_spectral_radius_helper():
    radius, diag = spectral_radius([[0.0, 4.0], [9.0, 0.0]])
    assert radius == pytest.approx(6.0, rel=1e-12)
    assert diag["dominant_real"] == pytest.approx(6.0)
    assert diag["dominant_imag"] == pytest.approx(0.0, abs=1e-12)


def test_vapn_spn_twins_agree_entrywise():
    a = ngm_r0(builtin("sirs"))
    b = ngm_r0(builtin("sirs_spn"))
    for ra, rb in zip(a.F, b.F):
        for x, y in zip(ra, rb):
            assert abs(x - y) <= 1e-12
    for ra, rb in zip(a.V, b.V):
        for x, y in zip(ra, rb):
            assert abs(x - y) <= 1e-12


# -------------------------------------------------------------------- errors

def test_unknown_parameter_rejected():
    with pytest.raises(NgmError) as err:
        ngm_r0(builtin("sirs"), params={"zeta": 1.0})
    assert "zeta" in str(err.value)


def test_place_name_as_parameter_rejected():
    with pytest.raises(NgmError):
        ngm_r0(builtin("sirs"), params={"S": 1.0})


def test_no_infected_place_rejected():
    text = """\
model flat kind=vapn
param k=1
place A init=10
place B init=0
trans move
arc A -> move weight="k*A"
arc move -> B weight="k*A"
"""
    with pytest.raises(NgmError):
        ngm_r0(parse_model(text))
