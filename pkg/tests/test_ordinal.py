import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.ordinal import (OMEGA, ONE, ZERO, Ordinal, OrdinalError, OrdinalParseError,
                              TowerHeightExceeded, fundamental_sequence, is_irreducible,
                              ord_add, ord_compare, ord_nat_mul)

from conftest import ordinals

P = Ordinal.parse


def test_compare():
    assert ord_compare(OMEGA, 3) == "GT"
    assert ord_compare(P("w^2+1"), P("w^2+1")) == "EQ"
    assert ord_compare(P("w*2"), P("w^2")) == "LT"


def test_add():
    assert ord_add(OMEGA, 1) == P("w+1")
    assert ord_add(1, OMEGA) == OMEGA
    assert ord_add(P("w+1"), OMEGA) == P("w*2")
    assert P("w^2*3 + w + 4") + P("w^2") == P("w^2*4")


def test_nat_mul():
    assert ord_nat_mul(OMEGA, 3) == P("w*3")
    assert ord_nat_mul(P("w^2+w"), 2) == P("w^2*2+w")
    assert ord_nat_mul(5, 4) == Ordinal.of(20)
    with pytest.raises(OrdinalError):
        ord_nat_mul(OMEGA, 0)


def test_irreducible():
    assert is_irreducible(P("w^2"))
    assert not is_irreducible(P("w^2+w"))
    assert is_irreducible(ONE)
    assert not is_irreducible(P("w*2"))


def test_fundamental():
    assert fundamental_sequence(OMEGA, 5) == Ordinal.of(5)
    assert fundamental_sequence(P("w^2"), 3) == P("w*3")
    assert fundamental_sequence(P("w^w"), 2) == P("w^2")
    assert P("w^2+w").fundamental(4) == P("w^2+4")
    for bad in (ZERO, ONE, P("w+1")):
        with pytest.raises(OrdinalError):
            bad.fundamental(1)


def test_parse_errors_carry_position():
    with pytest.raises(OrdinalParseError) as e:
        P("w^^2")
    assert e.value.pos == 2
    with pytest.raises(OrdinalParseError) as e:
        P("w + x")
    assert e.value.pos == 4
    with pytest.raises(OrdinalParseError):
        P("")


def test_text_forms():
    assert str(P("w^{w}*2 + w^2*3 + w + 4")) == "w^{w}*2 + w^2*3 + w + 4"
    assert P("ω^2") == P("w^2")
    assert str(ZERO) == "0"


def test_tower_limit(monkeypatch):
    deep = "w^{w^{w^{w^{w}}}}"
    with pytest.raises(TowerHeightExceeded):
        P(deep)
    monkeypatch.setenv("ARTIFACT_TOWER_LIMIT", "6")
    assert P(deep).height == 6


def test_splits_cover_segment():
    a = P("w*2+1")
    tails = a.tails()
    assert tails[0] == a and tails[-1] == ZERO
    # every delta <= a lands in exactly one split
    for d in [ZERO, ONE, Ordinal.of(7), OMEGA, P("w+3"), P("w*2"), a]:
        hits = [t for t, start, e in a.splits()
                if (e is None and d == start) or
                (e is not None and start <= d < start + Ordinal.omega_pow(e))]
        assert len(hits) == 1, d
        assert d.left_sub(a) == hits[0]


# --- properties -----------------------------------------------------------

@given(ordinals(), ordinals(), ordinals())
def test_add_associative(a, b, c):
    assert (a + b) + c == a + (b + c)


@given(ordinals())
def test_zero_is_identity(a):
    assert a + ZERO == a and ZERO + a == a


@given(ordinals(), ordinals(), ordinals())
def test_add_monotone_right(a, b, c):
    lo, hi = sorted([b, c])
    assert a + lo <= a + hi


@given(ordinals(), st.integers(1, 5))
def test_nat_mul_is_repeated_add(a, p):
    s = ZERO
    for _ in range(p):
        s = s + a
    assert a.nat_mul(p) == s


@given(ordinals())
def test_roundtrip(a):
    assert P(str(a)) == a
    assert P(str(a)).terms == a.terms


@given(ordinals(), ordinals())
def test_total_order(a, b):
    assert (a < b) + (b < a) + (a == b) == 1


@given(ordinals(), st.integers(1, 6))
def test_fundamental_below_and_increasing(a, m):
    if not a.is_limit:
        return
    assert a.fundamental(m) < a
    assert a.fundamental(m) < a.fundamental(m + 1)


@given(ordinals(), ordinals())
def test_fundamental_cofinal(a, b):
    if not a.is_limit or not b < a:
        return
    assert any(b < a.fundamental(m) for m in range(1, 12))


@given(ordinals(), ordinals())
def test_left_sub(a, b):
    lo, hi = sorted([a, b])
    assert lo + lo.left_sub(hi) == hi
