"""Acceptance criteria 1-10.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python3 tests/test_acceptance.py``; either way one PASS/FAIL line is
printed per criterion.
"""

import math
import os
import random
import sys
import time
from fractions import Fraction as F

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

import propcheck  # noqa: E402
from conftest import random_model  # noqa: E402

from artifact.constructors import (BaseFiniteFamily, IrreducibleFamily, PowersFamily,  # noqa: E402
                                   base_finite, general_model, irreducible_model,
                                   powers_model, verify_certificate)
from artifact.ordinal import Ordinal  # noqa: E402
from artifact.realize1d import (cauchy_defect, check_semiconjugacy, estimate_entropy,  # noqa: E402
                                identity_map, realize, tent, tower_conjugacy_error,
                                wandering_check)
from artifact.seqalg import Harmonic, Product  # noqa: E402
from artifact.transfinite import Calculus, norm_u, order_of_accumulation  # noqa: E402
from artifact.truncation import TruncationOracle  # noqa: E402

P = Ordinal.parse


# ---------------------------------------------------------------------------

def c1_grid():
    alphas = ["1", "2", "3", "4", "w", "w+1", "w*2", "w^2", "w^2+w*3+2", "w^w"]
    t0 = time.time()
    bad = []
    for al in alphas:
        for a in (F(1, 2), F(1), F(3)):
            m, c = general_model(al, a)
            calc = Calculus()
            ok = (verify_certificate(m, c, calc)["pass"]
                  and order_of_accumulation(m, calc) == P(al)
                  and norm_u(m, al, calc) == a)
            if not ok:
                bad.append((al, a))
    dt = time.time() - t0
    return not bad and dt < 300, f"30 cases, {len(bad)} failing, {dt:.1f}s"


def c2_finite_ladder():
    bad = []
    for p in range(1, 6):
        for a in (F(1, 2), F(1), F(3), F(7, 5)):
            m, _ = base_finite(p, a)
            calc = Calculus()
            for k in range(1, p + 1):
                if norm_u(m, k, calc) != a * k / p:
                    bad.append((p, a, k))
    return not bad, f"p = 1..5, 4 values of a, {len(bad)} mismatches"


def _tail_bound(fam, g, T):
    """Upper bound on scale(n) * ||u_g(member n)|| over n >= T, or None."""
    if g.is_zero:
        return F(0)
    if isinstance(fam, (BaseFiniteFamily, PowersFamily)):
        if isinstance(fam, BaseFiniteFamily):
            l = g.finite_value()
        else:
            l, _ = fam._multiple(g)
        if T < l:
            return None
        # member n is certified at its l-th ladder rung: a_n * l / n
        return Product(Product(fam.scale, fam.a_seq), Harmonic(l)).tail_sup(T)
    if isinstance(fam, IrreducibleFamily):
        if not fam.delta_of(T) >= g:
            return None
        # ||u_g|| <= ||u_delta_n|| <= eps_n <= 1/n
        return Product(fam.scale, Harmonic(1)).tail_sup(T)
    return None


def _formula(m, g, calc, K=16):
    fam, base = m.family, m.base
    al = fam.alpha_lim
    if g >= al:
        return Product(fam.scale, fam.a_seq).limit() + calc.norm(base, al.left_sub(g)), True
    T = fam.n0 + K
    while _tail_bound(fam, g, T) is None:
        T += K
    sup = max(fam.scale.eval(n) * calc.norm(fam.member(n), g) for n in range(fam.n0, T))
    val = max(calc.norm(base, g), sup)
    return val, _tail_bound(fam, g, T) <= val


def c3_split_formula():
    cases = {
        ("w+1", F(1)): ["0", "1", "2", "3", "5", "w", "w+1", "w+2", "w+5", "w*2"],
        ("w*2", F(1)): ["1", "2", "4", "w", "w+1", "w+3", "w*2", "w*2+1", "w*3", "w^2"],
        ("w^2+w*3+2", F(1, 2)): ["1", "3", "w", "w*3", "w^2", "w^2+1", "w^2+w",
                                 "w^2+w*3", "w^2+w*3+2", "w^3"],
    }
    bad = []
    n = 0
    for (al, a), gammas in cases.items():
        m, _ = general_model(al, a)
        calc = Calculus()
        for g in gammas:
            g = P(g)
            want, tail_ok = _formula(m, g, calc)
            n += 1
            if not tail_ok or calc.norm(m, g) != want:
                bad.append((al, str(g)))
    return not bad, f"{n} (model, gamma) pairs, {len(bad)} failing {bad[:3]}"


def c4_powers_ladder():
    bad = []
    for p in range(2, 5):
        for a in (F(1), F(3, 2), F(3)):
            m, _ = powers_model(1, p, a)
            calc = Calculus()
            for l in range(1, p + 1):
                if norm_u(m, P("w").nat_mul(l), calc) != F(l, p) * a:
                    bad.append((p, a, l))
    return not bad, f"p = 2..4, 3 values of a, {len(bad)} mismatches"


def c5_small_norm():
    pairs = {
        1: (F(1), [(0, F(1, 2)), (1, F(1, 4)), (5, F(1, 8)), (10, F(1, 10)), (3, F(1, 100))]),
        2: (F(2), [(1, F(1, 2)), ("w", F(1, 4)), ("w*3", F(1, 4)), ("w*5+2", F(1, 8)),
                   ("w+7", F(1, 16))]),
    }
    rows = []
    ok = True
    for beta, (a, ds) in pairs.items():
        for d, eps in ds:
            m, c = irreducible_model(beta, a, d, eps)
            v = norm_u(m, d)
            alpha = Ordinal.omega_pow(Ordinal.of(beta))
            good = v <= eps and order_of_accumulation(m) == alpha and norm_u(m, alpha) == a
            ok = ok and good
            rows.append(f"{v}<={eps}")
    return ok, "10 pairs: " + ", ".join(rows)


def c6_properties():
    counts = {}
    models = [random_model(random.Random(s), 1) for s in range(20)]
    models += [random_model(random.Random(1000 + s), 2) for s in range(4)]
    for name, check in propcheck.CHECKS.items():
        counts[name] = sum(len(check(m)) for m in models)
    ok = all(v == 0 for v in counts.values())
    return ok, f"{len(models)} models; violations " + ", ".join(
        f"{k}={v}" for k, v in counts.items())


def c7_oracle():
    bad = cert = 0
    for seed in range(10):
        m = random_model(random.Random(seed), 1)
        o = TruncationOracle(m, M=32, D=3, K=64)
        calc = Calculus()
        for g in range(4):
            for addr, v in o.u(g).items():
                if v is None:
                    continue
                cert += 1
                if calc.value(m, g, addr) != v:
                    bad += 1
    return bad == 0 and cert > 0, f"{cert} certified values, {bad} mismatches"


def c8_entropy():
    out = []
    ok = True
    for N in (3, 5, 7):
        t0 = time.time()
        est = estimate_entropy(tent(N), eps=1e-3, n=12, samples=10_000, seed=0)
        dt = time.time() - t0
        rel = abs(est - math.log(N)) / math.log(N)
        ok = ok and rel < 0.15 and dt < 60
        out.append(f"tent{N} {est:.4f}/{math.log(N):.4f} ({rel:.1%}, {dt:.1f}s)")
    t0 = time.time()
    ide = estimate_entropy(identity_map(), eps=1e-3, n=12, samples=10_000, seed=0)
    ok = ok and ide <= 0.05 and time.time() - t0 < 60
    out.append(f"identity {ide:.2g}")
    return ok, "; ".join(out)


_ALPHA1 = {}


def _alpha1():
    if "R" not in _ALPHA1:
        _ALPHA1["R"] = realize(base_finite(1, 1)[0], M=3, D=1)
    return _ALPHA1["R"]


def c9_blow_and_sew():
    R = _alpha1()
    semi = check_semiconjugacy(R.F, R.f, R.pi, samples=10_000, seed=0)
    focus = [(p - e, p + e) for p, e in R.pi.intervals]
    semi_f = check_semiconjugacy(R.F, R.f, R.pi, samples=10_000, seed=1, focus=focus)
    tower = tower_conjugacy_error(R)
    est = estimate_entropy(R.F, eps=1e-3, n=12, samples=10_000, seed=0)
    target = R.h_estimate_target()
    rel = abs(est - target) / target
    wand = wandering_check(R, samples=1000)
    ok = (max(semi, semi_f) < 1e-9 and tower < 1e-9 and rel < 0.15 and wand["pass"]
          and len(R.towers) == 3)
    return ok, (f"semiconj {max(semi, semi_f):.2g}, tower {tower:.2g}, entropy {est:.4f} vs "
                f"{target:.4f} ({rel:.1%}), wandering {wand['pass']} ({wand['samples']} pts)")


def c10_blowup_lemma():
    b = _alpha1().pi
    rng = np.random.default_rng(0)
    ys = rng.uniform(-1, 1, 10_000)
    qs = {float(q) for q in b.Q}
    inv = max(abs(b.g(b.finv(float(y))) - y) for y in ys if float(y) not in qs)
    # uniform points plus points inside each collapse radius, where g_k moves
    xs = list(rng.uniform(-1, 1, 1000))
    for c, d in zip(b.centers, b.deltas):
        xs += list(rng.uniform(float(c - d), float(c + d), 40))
    cd = cauchy_defect(b, [float(x) for x in xs])
    ok = inv < 1e-6 and cd <= 1e-12
    return ok, (f"g(f(y)) error {inv:.2g} on 10^4 samples; Cauchy slack {cd:.2g} over "
                f"{len(xs)} points x {len(b.Q) + 1} stages")


CRITERIA = [
    (1, "realization grid", c1_grid),
    (2, "finite ladder", c2_finite_ladder),
    (3, "split norm formula", c3_split_formula),
    (4, "powers ladder", c4_powers_ladder),
    (5, "small-norm control", c5_small_norm),
    (6, "property suite", c6_properties),
    (7, "oracle equivalence", c7_oracle),
    (8, "numeric entropy", c8_entropy),
    (9, "numeric blow-and-sew", c9_blow_and_sew),
    (10, "blow-up lemma numerics", c10_blowup_lemma),
]


def _line(num, name, ok, detail):
    return f"criterion {num:>2} {name:<24} {'PASS' if ok else 'FAIL'}  {detail}"


@pytest.mark.parametrize("num,name,fn", CRITERIA, ids=[f"c{n}" for n, _, _ in CRITERIA])
def test_criterion(num, name, fn, capsys):
    ok, detail = fn()
    with capsys.disabled():
        print("\n" + _line(num, name, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for num, name, fn in CRITERIA:
        ok, detail = fn()
        failed += not ok
        print(_line(num, name, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
