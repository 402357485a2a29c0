import json
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.constructors import (Certificate, ConstructionError, EmptyClass, base_finite,
                                   construct, general_model, irreducible_model, power_model,
                                   powers_model, principal_extension_model, s_zero,
                                   tower_model, verify_certificate)
from artifact.entmodel import Atom, h_top, sample_points, to_json
from artifact.ordinal import Ordinal
from artifact.transfinite import Calculus, norm_u, order_of_accumulation

from conftest import models

P = Ordinal.parse


def ladder(cert):
    return [(str(g), v) for g, v in cert.norm_ladder]


def test_tower():
    m, _ = base_finite(1, 1)
    assert norm_u(tower_model(m, 4, 2), 1) == F(1, 2)
    assert tower_model(m, 1, 1) is m
    assert to_json(tower_model(Atom(2), 3, 1)) == to_json(Atom(F(2, 3)))
    with pytest.raises(ConstructionError):
        tower_model(m, 2, 3)


def test_power():
    assert to_json(power_model(Atom(1), 3)) == to_json(Atom(3))
    m, _ = base_finite(2, 1)
    assert power_model(m, 1) is m
    pm = power_model(m, 2)
    assert norm_u(pm, 2) == 2 and order_of_accumulation(pm) == 2
    with pytest.raises(ConstructionError):
        power_model(m, 0)


def test_principal_extension_is_transparent():
    m, cert = general_model("w+1", 1)
    assert to_json(principal_extension_model(Atom(1))) == to_json(Atom(1))
    twice = principal_extension_model(principal_extension_model(m))
    assert verify_certificate(twice, cert)["pass"]


def test_s_zero():
    m, cert = s_zero(1)
    assert order_of_accumulation(m) == 0 and m.mme
    assert all(norm_u(m, g) == 0 for g in (1, 5, P("w^2")))
    assert h_top(s_zero(0)[0]) == 0
    assert h_top(s_zero(3)[0]) == 3
    with pytest.raises(ConstructionError):
        s_zero(-1)


def test_base_finite():
    m, c = base_finite(1, 1)
    assert c.expected_alpha0 == 1 and norm_u(m, 1) == 1
    _, c = base_finite(3, 1)
    assert [v for _, v in c.norm_ladder] == [F(1, 3), F(2, 3), 1]
    m, c = base_finite(2, 4)
    assert ladder(c) == [("1", 2), ("2", 4)]
    assert h_top(m) <= max(c.h_top, 2)
    assert verify_certificate(m, c)["pass"]


def test_powers():
    m, c = powers_model(1, 2, 1)
    assert c.expected_alpha0 == P("w*2")
    assert ladder(c) == [("w", F(1, 2)), ("w*2", 1)]
    assert verify_certificate(m, c)["pass"]
    _, c3 = powers_model(1, 3, 3)
    assert ladder(c3) == [("w", 1), ("w*2", 2), ("w*3", 3)]


def test_powers_below_the_unit():
    # the base is the w-model at a/2 with shift 0, whose norms are
    # (1/2) k/(k+1); the copies sit far below that
    m, _ = powers_model(1, 2, 1)
    assert [norm_u(m, k) for k in range(1, 6)] == [F(k, 2 * (k + 1)) for k in range(1, 6)]


def test_irreducible():
    m, c = irreducible_model(1, 1, 5, F(1, 8))
    assert c.expected_alpha0 == P("w") and norm_u(m, "w") == 1
    # member n = m + 38 contributes min(5, n)/(n+1); n0 = 39 gives 5/40
    assert norm_u(m, 5) == F(1, 8)
    assert c.shifts == {".": 38}
    m2, c2 = irreducible_model(2, 2, "w*3", F(1, 4))
    assert c2.expected_alpha0 == P("w^2") and norm_u(m2, "w^2") == 2
    assert norm_u(m2, "w*3") == F(1, 4)
    m3, c3 = irreducible_model(2, 1, "w+1", F(1, 3))
    assert c3.delta_norm == F(3, 10) == norm_u(m3, "w+1")
    for bad in [(0, 1, 0, F(1, 2)), (1, 1, "w", F(1, 2)), (1, 1, 3, 2)]:
        with pytest.raises(ConstructionError):
            irreducible_model(*bad)


def test_general():
    m, c = general_model(3, 1)
    assert ladder(c) == [("1", F(1, 3)), ("2", F(2, 3)), ("3", 1)]
    m, c = general_model("w+1", 2)
    assert order_of_accumulation(m) == P("w+1") and norm_u(m, "w+1") == 2
    m, c = general_model("w^2+w*3+2", F(1, 2))
    rep = verify_certificate(m, c)
    assert rep["pass"], rep
    assert ladder(c)[0] == ("w^2", F(1, 4))
    with pytest.raises(EmptyClass):
        general_model(0, 1)


def test_tampered_certificate_fails():
    m, c = base_finite(2, 1)
    bad = Certificate.from_json(c.to_json())
    bad.norm_ladder[0] = (bad.norm_ladder[0][0], bad.norm_ladder[0][1] + F(1, 2))
    rep = verify_certificate(m, bad)
    assert not rep["pass"]
    failing = [cl for cl in rep["claims"] if not cl["pass"]]
    assert failing == [{"claim": "ladder@1", "pass": False, "computed": "1/2",
                        "expected": "1"}]
    worse = Certificate.from_json(c.to_json())
    worse.expected_alpha0 = Ordinal.of(3)
    assert not verify_certificate(m, worse)["pass"]


def test_general_omega_verifies():
    m, c = general_model("w", 1)
    rep = verify_certificate(m, c)
    assert rep["pass"]
    assert rep["claims"][0] == {"claim": "alpha0", "pass": True, "computed": "w",
                                "expected": "w"}


@pytest.mark.parametrize("alpha", ["w^w*2+1", "w^w*2+3", "w^w*3+w+2", "w^{w+1}*2+w^w+5"])
def test_general_past_omega_omega(alpha):
    # these used to stall on member norms at small gamma deep inside the base
    m, c = general_model(alpha, F(1))
    assert verify_certificate(m, c)["pass"]


def test_certificate_json_roundtrip():
    _, c = powers_model(1, 3, 3)
    d = json.loads(json.dumps(c.to_json()))
    assert Certificate.from_json(d).to_json() == d


def test_construct_dispatch():
    m, c = construct("irreducible", {"beta": "1", "a": "1", "delta": "5", "epsilon": "1/8"})
    assert c.shifts == {".": 38}
    with pytest.raises(ConstructionError):
        construct("nope", {})


def test_deterministic():
    a1, c1 = general_model("w^2+w*3+2", F(1, 2))
    a2, c2 = general_model(P("w^2+w*3+2"), F(1, 2))
    assert to_json(a1) == to_json(a2)
    assert c1.to_json() == c2.to_json()


# --- properties -----------------------------------------------------------

alphas = st.sampled_from(["1", "2", "4", "w", "w+1", "w+3", "w*2", "w*2+1", "w^2",
                          "w^2+1", "w^2+w", "w^w"])
amounts = st.fractions(min_value=F(1, 4), max_value=4, max_denominator=6)


@given(alphas, amounts)
def test_every_output_verifies(alpha, a):
    m, c = general_model(alpha, a)
    rep = verify_certificate(m, c)
    assert rep["pass"], rep
    vals = [v for _, v in c.norm_ladder]
    assert vals == sorted(vals)


@given(models(), st.integers(1, 4), st.integers(1, 4), st.integers(1, 4), st.integers(1, 4))
def test_towers_compose(m, n1, p1, n2, p2):
    p1, n1 = sorted([p1, n1])
    p2, n2 = sorted([p2, n2])
    t = tower_model(tower_model(m, n1, p1), n2, p2)
    calc = Calculus()
    q = F(p1, n1) * F(p2, n2)
    for g in (1, 2, P("w")):
        assert calc.norm(t, g) == q * calc.norm(m, g)
    for p in sample_points(m, 3, 2):
        assert calc.value(t, 1, p) == q * calc.value(m, 1, p)
