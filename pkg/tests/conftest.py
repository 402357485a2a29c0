import random
from fractions import Fraction as F

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from artifact.entmodel import Atom, AtomFamily, ScaledFamily, make_blow_and_sew
from artifact.ordinal import ZERO, Ordinal
from artifact.seqalg import ApproachUp, Const, Harmonic, LinearUp, Product, reciprocal_shift

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


# --- ordinals -------------------------------------------------------------

def _ordinal(draw, depth):
    n = draw(st.integers(0, 3))
    if depth == 0 or n == 0:
        return Ordinal.of(draw(st.integers(0, 6)))
    exps = set()
    for _ in range(n):
        exps.add(_ordinal(draw, depth - 1))
    terms = [(e, draw(st.integers(1, 3))) for e in sorted(exps, reverse=True)]
    return Ordinal(terms)


@st.composite
def ordinals(draw, depth=2):
    return _ordinal(draw, depth)


@st.composite
def small_ordinals(draw):
    """Ordinals below w^2, which the hand-built models can reach in a few levels."""
    a = draw(st.integers(0, 3))
    b = draw(st.integers(0, 4))
    terms = []
    if a:
        terms.append((Ordinal.of(1), a))
    if b:
        terms.append((ZERO, b))
    return Ordinal(terms)


# --- random composite models ---------------------------------------------
#
# Same shapes the truncation oracle can handle: atom and scaled-shape
# families with the usual scales.

SCALES = [reciprocal_shift, lambda: Harmonic(1), lambda: Product(ApproachUp(1), Harmonic(1))]


def _rseq(rng):
    c = F(rng.randint(1, 6), rng.randint(1, 3))
    return rng.choice([Const(c), ApproachUp(c), LinearUp(c), Harmonic(c)])


def _rfam(rng, depth):
    scale = rng.choice(SCALES)()
    if depth > 0 and rng.random() < 0.5:
        shape = random_model(rng, depth - 1)
        factor = rng.choice([Const(F(1, 2)), ApproachUp(1), LinearUp(F(1, 2))])
        return ScaledFamily(shape, factor, scale)
    return AtomFamily(_rseq(rng), scale)


def random_model(rng, depth=1):
    m = Atom(F(rng.randint(0, 4), rng.randint(1, 2)))
    for _ in range(rng.randint(1, 2)):
        for _ in range(50):
            try:
                m = make_blow_and_sew(m, _rfam(rng, depth))
                break
            except Exception:  # unbounded htop or indeterminate limit: redraw
                continue
    return m


@st.composite
def models(draw, depth=1):
    seed = draw(st.integers(0, 10_000))
    return random_model(random.Random(seed), depth)


@pytest.fixture
def rng():
    return random.Random(1234)
