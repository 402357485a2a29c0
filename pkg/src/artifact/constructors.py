"""Model constructors: towers, powers, principal extensions and certified models
with a prescribed order of accumulation and norm.

Canonical schedules used throughout:

* a_n = a*n, scale 1/(n+1), so scale*a_n = a*n/(n+1) increases to a;
* the base of every blow-and-sew chain is an atom of entropy ``FLOOR``
  (one unit, standing for log 3 in the interval realization);
* index shifts are the least ones meeting the entropy cap and, for the
  irreducible constructor, the requested small-norm bound.  They are recorded
  in the certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .entmodel import (Atom, AtomFamily, BlowAndSew, Family, Model, ModelError, Scaled,
                       h_top, make_blow_and_sew, register_family)
from .ordinal import ONE, ZERO, Ordinal
from .seqalg import (Const, Harmonic, LinearUp, Product, ScalarSeq, Scale, frac, fmt_frac,
                     reciprocal_shift, seq_from_json, seq_to_json)
from .transfinite import Calculus

FLOOR = Fraction(1)
SHIFT_CAP = 1 << 40


class ConstructionError(ValueError):
    pass


class EmptyClass(ConstructionError):
    pass


@dataclass
class Certificate:
    expected_alpha0: Ordinal
    expected_norm: Fraction
    norm_ladder: list = field(default_factory=list)
    h_top: Fraction = Fraction(0)
    norm_bounds: list = field(default_factory=list)
    regime: str = "htop_to_zero"
    totally_ergodic: bool = True
    shifts: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "expected_alpha0": str(self.expected_alpha0),
            "expected_norm": fmt_frac(self.expected_norm),
            "norm_ladder": [[str(g), fmt_frac(v)] for g, v in self.norm_ladder],
            "norm_bounds": [[str(g), fmt_frac(v)] for g, v in self.norm_bounds],
            "h_top": fmt_frac(self.h_top),
            "regime": self.regime,
            "totally_ergodic": self.totally_ergodic,
            "shifts": {k: v for k, v in sorted(self.shifts.items())},
        }

    @classmethod
    def from_json(cls, d):
        return cls(
            Ordinal.parse(d["expected_alpha0"]),
            frac(d["expected_norm"]),
            [(Ordinal.parse(g), frac(v)) for g, v in d.get("norm_ladder", [])],
            frac(d.get("h_top", "0")),
            [(Ordinal.parse(g), frac(v)) for g, v in d.get("norm_bounds", [])],
            d.get("regime", "htop_to_zero"),
            bool(d.get("totally_ergodic", True)),
            dict(d.get("shifts", {})),
        )


def _cap(c):
    c = frac(c) if c is not None else FLOOR
    if c < FLOOR:
        raise ConstructionError(f"entropy cap c={c} is below the floor entropy {FLOOR}")
    return c


def _pos(a, name="a"):
    a = frac(a)
    if a <= 0:
        raise ConstructionError(f"{name} must be > 0")
    return a


# ---------------------------------------------------------------------------
# towers, powers, principal extensions
# ---------------------------------------------------------------------------

def _rescale(model, q):
    if q == 1:
        return model
    if isinstance(model, Atom):
        return Atom(model.h_top * q, model.mme)
    if isinstance(model, Scaled):
        q = q * model.q
        return model.inner if q == 1 else Scaled(model.inner, q)
    return Scaled(model, q)


def tower_model(model, n, p):
    if not (isinstance(n, int) and isinstance(p, int)) or p < 1 or n < 1:
        raise ConstructionError("tower needs positive integers n, p")
    if p > n:
        raise ConstructionError(f"tower needs p <= n, got p={p}, n={n}")
    return _rescale(model, Fraction(p, n))


def power_model(model, p):
    if not isinstance(p, int) or p < 1:
        raise ConstructionError("power needs a positive integer p")
    return _rescale(model, Fraction(p))


def principal_extension_model(model):
    return model


def s_zero(h):
    h = frac(h)
    if h < 0:
        raise ConstructionError("h must be >= 0")
    return Atom(h, True), Certificate(ZERO, Fraction(0), [], h)


# ---------------------------------------------------------------------------
# template families (members built by the constructors below)
# ---------------------------------------------------------------------------

class TemplateFamily(Family):
    """Members are certified constructor outputs.

    Besides the member builder, a template exposes the data the calculus
    needs to handle infinitely many members exactly: the common limit
    ``alpha_lim`` of the members' orders, the pressure lim scale*a_n,
    closed-form member norms where known and a tail bound on
    scale(n)*||u_gamma(member n)||.
    """

    def __init__(self, a_seq, scale, shift=0, floor=FLOOR):
        super().__init__(scale, shift)
        self.a_seq = a_seq
        self.floor = frac(floor)
        self.pressure = Product(scale, a_seq).limit()

    def with_shift(self, shift):
        raise NotImplementedError

    def closed_norm(self, n, gamma):
        if gamma.is_zero:
            return Fraction(0)
        if gamma >= self.alpha_of(n):
            return self.a_seq.eval(n)
        return None

    def _exact_top(self, gamma):
        if gamma.is_zero:
            return self.n0, Const(0), True
        if gamma >= self.alpha_lim:
            return self.n0, Product(self.scale, self.a_seq), True
        return None


class BaseFiniteFamily(TemplateFamily):
    """Member n: base_finite(n, a_n)."""

    kind = "base_finite"
    alpha_lim = Ordinal.parse("w")

    def alpha_of(self, n):
        return Ordinal.of(n)

    def _build(self, n):
        return _base_finite(n, self.a_seq.eval(n), self.floor)

    def with_shift(self, shift):
        return BaseFiniteFamily(self.a_seq, self.scale, shift, self.floor)

    def closed_norm(self, n, gamma):
        if gamma.is_finite:
            k = gamma.finite_value()
            return self.a_seq.eval(n) * Fraction(min(k, n), n)
        return self.a_seq.eval(n)

    def norm_bound(self, gamma, calc=None):
        top = self._exact_top(gamma)
        if top:
            return top
        k = gamma.finite_value()
        return max(k, self.n0), Product(Product(self.scale, self.a_seq), Harmonic(k)), True

    def htop_terms(self):
        return [Const(self.floor), Product(self.a_seq, Harmonic(1))]

    def params_json(self):
        return {"a": seq_to_json(self.a_seq), "floor": fmt_frac(self.floor)}


class PowersFamily(TemplateFamily):
    """Member n: powers(w^beta, n, a_n) (an irreducible model when n = 1)."""

    kind = "powers"

    def __init__(self, beta, a_seq, scale, shift=0, floor=FLOOR):
        self.beta = Ordinal.of(beta)
        self.unit = Ordinal.omega_pow(self.beta)
        self.alpha_lim = Ordinal.omega_pow(self.beta + ONE)
        super().__init__(a_seq, scale, shift, floor)

    def alpha_of(self, n):
        return self.unit.nat_mul(n)

    def _build(self, n):
        return _powers(self.beta, n, self.a_seq.eval(n), self.floor)

    def with_shift(self, shift):
        return PowersFamily(self.beta, self.a_seq, self.scale, shift, self.floor)

    def _multiple(self, gamma):
        """(l, exact) with w^beta*(l-1) < gamma <= w^beta*l."""
        if not gamma.terms or gamma.leading_exponent < self.beta:
            return 1, False
        j = gamma.terms[0][1]
        exact = len(gamma.terms) == 1
        return (j, True) if exact else (j + 1, False)

    def closed_norm(self, n, gamma):
        v = super().closed_norm(n, gamma)
        if v is not None:
            return v
        l, exact = self._multiple(gamma)
        if exact and l <= n:
            return self.a_seq.eval(n) * Fraction(l, n)
        return None

    def norm_bound(self, gamma, calc=None):
        top = self._exact_top(gamma)
        if top:
            return top
        l, exact = self._multiple(gamma)
        if exact:
            return max(l, self.n0), Product(Product(self.scale, self.a_seq), Harmonic(l)), True
        if calc is None:
            return self.n0, Product(self.scale, self.a_seq), False
        # every level of member n carries the same family, so peeling the top
        # l-1 levels leaves a member >= 2 whose norm below w^beta is the same
        # for all n: the norm at gamma is constant for n > l
        n = l + 1
        v = calc.norm(_powers(self.beta, n, self.a_seq.eval(n), self.floor), gamma)
        return max(n, self.n0), Scale(v, self.scale), True

    def htop_terms(self):
        return [Const(self.floor)]

    def params_json(self):
        return {"beta": str(self.beta), "a": seq_to_json(self.a_seq),
                "floor": fmt_frac(self.floor)}


class IrreducibleFamily(TemplateFamily):
    """Member n: irreducible(beta_n, a_n, delta_n, eps_n).

    mode "fixed": beta_n = beta, delta_n = (w^beta)[n].
    mode "limit": beta_n = beta[n], delta_n = w^(beta[n-1]) with beta[0] = 0.
    eps_n = min(1/n, a_n/2) in both modes.
    """

    kind = "irreducible"

    def __init__(self, beta, mode, a_seq, scale, shift=0, floor=FLOOR):
        self.beta = Ordinal.of(beta)
        if mode not in ("fixed", "limit"):
            raise ModelError(f"unknown mode {mode!r}")
        if mode == "limit" and not self.beta.is_limit:
            raise ModelError("limit mode needs a limit exponent")
        self.mode = mode
        self.alpha_lim = Ordinal.omega_pow(self.beta)
        super().__init__(a_seq, scale, shift, floor)

    def beta_of(self, n):
        return self.beta if self.mode == "fixed" else self.beta.fundamental(n)

    def alpha_of(self, n):
        return Ordinal.omega_pow(self.beta_of(n))

    def delta_of(self, n):
        if self.mode == "fixed":
            return self.alpha_lim.fundamental(n)
        return Ordinal.omega_pow(self.beta.fundamental(n - 1) if n > 1 else ZERO)

    def eps_of(self, n):
        return min(Fraction(1, n), self.a_seq.eval(n) / 2)

    def _build(self, n):
        model, _ = irreducible_model(self.beta_of(n), self.a_seq.eval(n), self.delta_of(n),
                                     self.eps_of(n), floor=self.floor)
        return model

    def with_shift(self, shift):
        return IrreducibleFamily(self.beta, self.mode, self.a_seq, self.scale, shift, self.floor)

    def norm_bound(self, gamma, calc=None):
        top = self._exact_top(gamma)
        if top:
            return top
        n = 1
        while not self.delta_of(n) >= gamma:
            n += 1
            if n > SHIFT_CAP:
                raise ConstructionError("delta schedule never reaches the requested ordinal")
        return max(n, self.n0), Product(self.scale, Harmonic(1)), False

    def htop_terms(self):
        return [Const(self.floor)]

    def params_json(self):
        return {"beta": str(self.beta), "mode": self.mode, "a": seq_to_json(self.a_seq),
                "floor": fmt_frac(self.floor)}


register_family("base_finite", lambda d, s, sh: BaseFiniteFamily(
    seq_from_json(d["a"]), s, sh, frac(d.get("floor", "1"))))
register_family("powers", lambda d, s, sh: PowersFamily(
    Ordinal.parse(d["beta"]), seq_from_json(d["a"]), s, sh, frac(d.get("floor", "1"))))
register_family("irreducible", lambda d, s, sh: IrreducibleFamily(
    Ordinal.parse(d["beta"]), d["mode"], seq_from_json(d["a"]), s, sh,
    frac(d.get("floor", "1"))))


# ---------------------------------------------------------------------------
# shared construction state
# ---------------------------------------------------------------------------

_CALC = Calculus()


def construction_calculus():
    """The calculus instance used while choosing index shifts."""
    return _CALC


def _htop_ok(fam, floor):
    return all(Product(fam.scale, t).tail_sup(fam.n0) <= floor for t in fam.htop_terms())


def _least_shift(fam, ok):
    """Least shift s with ok(fam.with_shift(s)); ok must be monotone in s."""
    if ok(fam):
        return fam
    lo, hi = 0, 1
    while not ok(fam.with_shift(hi)):
        lo, hi = hi, hi * 2
        if hi > SHIFT_CAP:
            raise ConstructionError("no admissible index shift below the cap")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(fam.with_shift(mid)):
            hi = mid
        else:
            lo = mid
    return fam.with_shift(hi)


# ---------------------------------------------------------------------------
# certified constructors
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _base_finite(p, a, floor):
    if p == 0:
        return Atom(floor)
    below = _base_finite(p - 1, a * Fraction(p - 1, p), floor)
    fam = AtomFamily(LinearUp(a / p), reciprocal_shift())
    return make_blow_and_sew(below, fam)


def base_finite(p, a, c=None, floor=FLOOR):
    if not isinstance(p, int) or p < 1:
        raise ConstructionError("p must be a positive integer")
    a = _pos(a)
    _cap(c)
    floor = frac(floor)
    model = _base_finite(p, a, floor)
    ladder = [(Ordinal.of(k), a * Fraction(k, p)) for k in range(1, p + 1)]
    return model, Certificate(Ordinal.of(p), a, ladder, max(floor, a / p))


@lru_cache(maxsize=None)
def _powers(beta, p, a, floor):
    unit = Ordinal.omega_pow(beta)
    if p == 1:
        model, _ = irreducible_model(beta, a, unit.fundamental(1), a / 2, floor=floor)
        return model
    below = _powers(beta, p - 1, a * Fraction(p - 1, p), floor)
    fam = IrreducibleFamily(beta, "fixed", LinearUp(a / p), reciprocal_shift(), 0, floor)
    fam = _least_shift(fam, lambda f: _htop_ok(f, floor))
    return make_blow_and_sew(below, fam)


def powers_model(beta_exp, p, a, c=None, floor=FLOOR):
    beta = Ordinal.of(beta_exp)
    if beta.is_zero:
        raise ConstructionError("powers need an irreducible ordinal > 1 (beta >= 1)")
    if not isinstance(p, int) or p < 2:
        raise ConstructionError("p must be an integer >= 2")
    a = _pos(a)
    _cap(c)
    floor = frac(floor)
    unit = Ordinal.omega_pow(beta)
    model = _powers(beta, p, a, floor)
    ladder = [(unit.nat_mul(l), a * Fraction(l, p)) for l in range(1, p + 1)]
    return model, Certificate(unit.nat_mul(p), a, ladder, floor, shifts=_shift_table(model))


@lru_cache(maxsize=None)
def _irreducible(beta, a, delta, eps, floor):
    base = Atom(floor)
    scale = reciprocal_shift()
    if beta == ONE:
        fam = BaseFiniteFamily(LinearUp(a), scale, 0, floor)
    elif beta.is_successor:
        fam = PowersFamily(beta.predecessor(), LinearUp(a), scale, 0, floor)
    else:
        fam = IrreducibleFamily(beta, "limit", LinearUp(a), scale, 0, floor)

    def ok(f):
        if not _htop_ok(f, floor):
            return False
        return _CALC.norm(BlowAndSew(base, f), delta) <= eps

    fam = _least_shift(fam, ok)
    model = make_blow_and_sew(base, fam)
    return model, _CALC.norm(model, delta)


def irreducible_model(beta, a, delta, epsilon, c=None, floor=FLOOR):
    beta = Ordinal.of(beta)
    delta = Ordinal.of(delta)
    a = _pos(a)
    eps = _pos(epsilon, "epsilon")
    _cap(c)
    floor = frac(floor)
    if beta.is_zero:
        raise ConstructionError("beta must be >= 1")
    alpha = Ordinal.omega_pow(beta)
    if not delta < alpha:
        raise ConstructionError(f"delta={delta} must be below {alpha}")
    if not eps < a:
        raise ConstructionError("need 0 < epsilon < a")
    model, got = _irreducible(beta, a, delta, eps, floor)
    cert = Certificate(alpha, a, [(alpha, a)], floor, norm_bounds=[(delta, eps)],
                       shifts=_shift_table(model))
    cert.delta_norm = got
    return model, cert


def general_model(alpha, a, c=None, floor=FLOOR):
    alpha = Ordinal.of(alpha).check_height()
    a = _pos(a)
    _cap(c)
    floor = frac(floor)
    if alpha.is_zero:
        raise EmptyClass("the class with alpha = 0 and a > 0 is empty")
    if alpha.is_finite:
        return base_finite(alpha.finite_value(), a, c, floor)
    if alpha.is_irreducible():
        return irreducible_model(alpha.leading_exponent, a, alpha.fundamental(1), a / 2,
                                 c, floor)
    model = _general(alpha, a, floor)
    return model, _general_cert(alpha, a, floor, model)


def _split(alpha):
    (e, c), *rest = alpha.terms
    head = [(e, c - 1)] if c > 1 else []
    return e, Ordinal(head + rest)


@lru_cache(maxsize=None)
def _general(alpha, a, floor):
    if alpha.is_finite:
        return _base_finite(alpha.finite_value(), a, floor)
    if alpha.is_irreducible():
        model, _ = _irreducible(alpha.leading_exponent, a, alpha.fundamental(1), a / 2, floor)
        return model
    e, rest = _split(alpha)
    half = a / 2
    base = _general(rest, half, floor)
    fam = IrreducibleFamily(e, "fixed", LinearUp(half), reciprocal_shift(), 0, floor)
    fam = _least_shift(fam, lambda f: _htop_ok(f, floor))
    return make_blow_and_sew(base, fam)


def _ladder(alpha, a, floor):
    if alpha.is_finite:
        p = alpha.finite_value()
        return [(Ordinal.of(k), a * Fraction(k, p)) for k in range(1, p + 1)]
    if alpha.is_irreducible():
        return [(alpha, a)]
    e, rest = _split(alpha)
    half = a / 2
    unit = Ordinal.omega_pow(e)
    return [(unit, half)] + [(unit + g, half + v) for g, v in _ladder(rest, half, floor)]


def _general_cert(alpha, a, floor, model):
    return Certificate(alpha, a, _ladder(alpha, a, floor), h_top(model),
                       shifts=_shift_table(model))


def _shift_table(model):
    out = {}
    path = []
    node = model
    while isinstance(node, BlowAndSew):
        if node.family.shift:
            out["/".join(path) or "."] = node.family.shift
        node = node.base
        path.append("b")
    return out


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def verify_certificate(model, cert, calc=None):
    """Check every claim of a certificate.  Failures are report entries."""
    calc = calc or Calculus()
    claims = []

    def add(name, ok, computed, expected):
        claims.append({"claim": name, "pass": bool(ok), "computed": computed,
                       "expected": expected})

    try:
        a0 = calc.alpha0(model)
        add("alpha0", a0 == cert.expected_alpha0, str(a0), str(cert.expected_alpha0))
        stable = calc.stable_at(model, cert.expected_alpha0)
        add("fixpoint", stable, str(stable), "True")
        if cert.expected_alpha0.is_successor:
            prev = cert.expected_alpha0.predecessor()
            moved = not calc.stable_at(model, prev)
            add("minimality", moved, str(moved), "True")
    except Exception as exc:  # report, never raise
        add("alpha0", False, f"error: {exc}", str(cert.expected_alpha0))
    try:
        nv = calc.norm(model, cert.expected_alpha0)
        add(f"norm@{cert.expected_alpha0}", nv == cert.expected_norm, fmt_frac(nv),
            fmt_frac(cert.expected_norm))
    except Exception as exc:
        add(f"norm@{cert.expected_alpha0}", False, f"error: {exc}", fmt_frac(cert.expected_norm))
    for g, v in cert.norm_ladder:
        try:
            got = calc.norm(model, g)
            add(f"ladder@{g}", got == v, fmt_frac(got), fmt_frac(v))
        except Exception as exc:
            add(f"ladder@{g}", False, f"error: {exc}", fmt_frac(v))
    for g, v in cert.norm_bounds:
        try:
            got = calc.norm(model, g)
            add(f"bound@{g}", got <= v, fmt_frac(got), "<= " + fmt_frac(v))
        except Exception as exc:
            add(f"bound@{g}", False, f"error: {exc}", "<= " + fmt_frac(v))
    try:
        ht = h_top(model)
        add("h_top", ht == cert.h_top, fmt_frac(ht), fmt_frac(cert.h_top))
    except Exception as exc:
        add("h_top", False, f"error: {exc}", fmt_frac(cert.h_top))
    return {"pass": all(c["pass"] for c in claims), "claims": claims}


KINDS = {
    "general": lambda p: general_model(p["alpha"], p["a"], p.get("c")),
    "base_finite": lambda p: base_finite(int(p["p"]), p["a"], p.get("c")),
    "powers": lambda p: powers_model(p["beta"], int(p["p"]), p["a"], p.get("c")),
    "irreducible": lambda p: irreducible_model(p["beta"], p["a"], p["delta"], p["epsilon"],
                                               p.get("c")),
    "s_zero": lambda p: s_zero(p["h"]),
}


def construct(kind, params):
    if kind not in KINDS:
        raise ConstructionError(f"unknown construction kind {kind!r}")
    return KINDS[kind](params)


__all__ = [
    "Certificate", "ConstructionError", "EmptyClass", "FLOOR", "tower_model", "power_model",
    "principal_extension_model", "s_zero", "base_finite", "powers_model",
    "irreducible_model", "general_model", "verify_certificate", "construct",
    "BaseFiniteFamily", "PowersFamily", "IrreducibleFamily", "TemplateFamily",
]
