"""Structural properties of u_gamma on random composite models."""

import pytest
from hypothesis import given, settings

import propcheck
from conftest import models


@pytest.mark.parametrize("name", list(propcheck.CHECKS))
@settings(max_examples=25)
@given(m=models())
def test_property(name, m):
    assert propcheck.CHECKS[name](m) == []


@settings(max_examples=10)
@given(m=models(depth=2))
def test_locality_nested(m):
    assert propcheck.locality(m) == []


def test_resync_changes_stages_not_values():
    from fractions import Fraction as F

    from artifact.entmodel import Atom, AtomFamily, Sync, eval_h_k, make_blow_and_sew
    from artifact.seqalg import Const, reciprocal_shift

    m = make_blow_and_sew(Atom(1), AtomFamily(Const(2), reciprocal_shift()))
    m2 = propcheck.resync(m, Sync(2, 1))
    # copy 3 is late for k = 2 under the default sync but not under 2k+1
    assert eval_h_k(m, "3", 2) == 0
    assert eval_h_k(m2, "3", 2) == F(1, 2)
    assert propcheck.sync_independent(m) == []
