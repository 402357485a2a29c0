"""Closed-form rational sequences m -> value (m >= 1) with exact limits and sups.

The grammar is small on purpose: every rule has an exactly computable
limit, and ``tail_sup`` gives the exact supremum over ``m >= m0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

INF = math.inf


class IndeterminateLimit(ArithmeticError):
    pass


def frac(x):
    """Coerce ints, Fractions and "p/q" strings to Fraction (floats refused)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a rational")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except ValueError:
            raise ValueError(f"not a rational: {x!r}") from None
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


def fmt_frac(q):
    q = frac(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _nonneg(c):
    c = frac(c)
    if c < 0:
        raise ValueError(f"sequence constants must be >= 0, got {c}")
    return c


def _ilog2(n):
    return n.bit_length() - 1


class ScalarSeq:
    """Base class; subclasses are frozen dataclasses."""

    def eval(self, m):
        if not isinstance(m, int) or m < 1:
            raise ValueError(f"index must be an integer >= 1, got {m!r}")
        return self._eval(m)

    def __call__(self, m):
        return self.eval(m)

    def __mul__(self, other):
        if isinstance(other, ScalarSeq):
            return Product(self, other)
        return Scale(frac(other), self)

    __rmul__ = __mul__

    def limit(self):
        return _normal(self).limit()

    def tail_sup(self, m0=1):
        return _normal(self).tail_sup(m0)

    def sup(self):
        return self.tail_sup(1)

    def direction(self):
        """("up" | "down" | "const" | "envelope_down", threshold)."""
        return _normal(self).direction()


@dataclass(frozen=True)
class Const(ScalarSeq):
    c: Fraction

    def __post_init__(self):
        object.__setattr__(self, "c", _nonneg(self.c))

    def _eval(self, m):
        return self.c


@dataclass(frozen=True)
class LinearUp(ScalarSeq):
    c: Fraction

    def __post_init__(self):
        object.__setattr__(self, "c", _nonneg(self.c))

    def _eval(self, m):
        return self.c * m


@dataclass(frozen=True)
class Harmonic(ScalarSeq):
    c: Fraction

    def __post_init__(self):
        object.__setattr__(self, "c", _nonneg(self.c))

    def _eval(self, m):
        return self.c / m


@dataclass(frozen=True)
class ApproachUp(ScalarSeq):
    c: Fraction

    def __post_init__(self):
        object.__setattr__(self, "c", _nonneg(self.c))

    def _eval(self, m):
        return self.c * Fraction(m, m + 1)


@dataclass(frozen=True)
class LogRatio(ScalarSeq):
    c: Fraction

    def __post_init__(self):
        object.__setattr__(self, "c", _nonneg(self.c))

    def _eval(self, m):
        return self.c * Fraction(_ilog2(m + 1), m)


@dataclass(frozen=True)
class Product(ScalarSeq):
    left: ScalarSeq
    right: ScalarSeq

    def _eval(self, m):
        return self.left._eval(m) * self.right._eval(m)


@dataclass(frozen=True)
class Scale(ScalarSeq):
    q: Fraction
    seq: ScalarSeq

    def __post_init__(self):
        object.__setattr__(self, "q", _nonneg(self.q))

    def _eval(self, m):
        return self.q * self.seq._eval(m)


# ---------------------------------------------------------------------------
# normal form: coefficient times a multiset of base factors
# ---------------------------------------------------------------------------

_BASE = (Const, LinearUp, Harmonic, ApproachUp, LogRatio)


def _flatten(s, acc):
    q = Fraction(1)
    if isinstance(s, Product):
        q *= _flatten(s.left, acc)
        q *= _flatten(s.right, acc)
    elif isinstance(s, Scale):
        q *= s.q * _flatten(s.seq, acc)
    elif isinstance(s, Const):
        q *= s.c
    else:
        # pull the constant out, keep the unit shape
        q *= s.c
        acc.append(type(s))
    return q


@dataclass(frozen=True)
class _Normal:
    q: Fraction
    ups: int        # LinearUp factors (unit)
    harm: int       # Harmonic factors (unit)
    approach: int   # ApproachUp factors (unit)
    logs: int       # LogRatio factors (unit)

    def eval(self, m):
        v = self.q * Fraction(m) ** self.ups / Fraction(m) ** self.harm
        v *= Fraction(m, m + 1) ** self.approach
        v *= Fraction(_ilog2(m + 1), m) ** self.logs
        return v

    @property
    def net(self):
        return self.ups - self.harm - self.logs

    def limit(self):
        if self.q == 0:
            return Fraction(0)
        if self.net > 0:
            if self.logs or self.harm:
                # m^a * (log m / m)^b with leftover growth: the grammar does
                # not certify these mixed rates
                raise IndeterminateLimit("product of growing and decaying factors")
            return INF
        if self.net < 0:
            if self.ups:
                raise IndeterminateLimit("product of growing and decaying factors")
            return Fraction(0)
        # net == 0
        if self.logs:
            raise IndeterminateLimit("log factor against linear growth")
        return self.q

    def direction(self):
        if self.q == 0:
            return ("const", 1)
        if self.logs:
            return ("envelope_down", 1)
        if self.net > 0:
            return ("up", 1)
        if self.net < 0:
            # (m/(m+1))^k / m^j is decreasing once m >= k (j >= 1)
            return ("down", max(1, self.approach))
        if self.approach:
            return ("up", 1)
        return ("const", 1)

    def _bound_from(self, m0):
        """An upper bound on eval(m) valid for all m >= m0."""
        q = self.q
        if self.net > 0:
            return INF
        v = q
        if self.harm or self.logs:
            v /= Fraction(m0) ** self.harm
            if self.logs:
                v *= _logratio_tail(m0) ** self.logs
        # approach factors are < 1
        return v

    def tail_sup(self, m0=1):
        if m0 < 1:
            raise ValueError("m0 must be >= 1")
        if self.q == 0:
            return Fraction(0)
        lim = self.limit()
        if lim == INF:
            return INF
        best = self.eval(m0)
        kind, thr = self.direction()
        if kind in ("up", "const"):
            return max(best, lim)
        if kind == "down" and m0 >= thr:
            return best
        # scan a finite window until the certified bound falls below the max
        m = m0 + 1
        width = 8
        for _ in range(64):
            hi = m + width
            for k in range(m, hi):
                v = self.eval(k)
                if v > best:
                    best = v
            m = hi
            if max(best, lim) >= self._bound_from(m):
                return max(best, lim)
            width *= 2
        raise IndeterminateLimit("could not certify the supremum")


def _logratio_tail(m0):
    """sup over m >= m0 of floor(log2(m+1))/m (exact, via dyadic block starts)."""
    best = Fraction(_ilog2(m0 + 1), m0)
    j = _ilog2(m0 + 1) + 1
    start = (1 << j) - 1
    if start > m0:
        best = max(best, Fraction(j, start))
    return best


def _normal(s):
    acc = []
    q = _flatten(s, acc)
    ups = acc.count(LinearUp)
    harm = acc.count(Harmonic)
    k = min(ups, harm)
    return _Normal(q, ups - k, harm - k, acc.count(ApproachUp), acc.count(LogRatio))


# ---------------------------------------------------------------------------
# public ops and JSON
# ---------------------------------------------------------------------------

def seq_eval(s, m):
    return s.eval(m)


def seq_limit(s):
    return s.limit()


def seq_sup(s):
    return s.sup()


_NAMES = {
    Const: "const",
    LinearUp: "linear_up",
    Harmonic: "harmonic",
    ApproachUp: "approach_up",
    LogRatio: "log_ratio",
}
_BY_NAME = {v: k for k, v in _NAMES.items()}


def seq_to_json(s):
    if isinstance(s, _BASE):
        return {"rule": _NAMES[type(s)], "c": fmt_frac(s.c)}
    if isinstance(s, Product):
        return {"rule": "product", "left": seq_to_json(s.left), "right": seq_to_json(s.right)}
    if isinstance(s, Scale):
        return {"rule": "scale", "q": fmt_frac(s.q), "seq": seq_to_json(s.seq)}
    raise TypeError(f"not a ScalarSeq: {s!r}")


def seq_from_json(d):
    if not isinstance(d, dict) or "rule" not in d:
        raise ValueError(f"bad sequence JSON: {d!r}")
    rule = d["rule"]
    if rule in _BY_NAME:
        return _BY_NAME[rule](frac(d["c"]))
    if rule == "product":
        return Product(seq_from_json(d["left"]), seq_from_json(d["right"]))
    if rule == "scale":
        return Scale(frac(d["q"]), seq_from_json(d["seq"]))
    raise ValueError(f"unknown sequence rule {rule!r}")


def reciprocal_shift():
    """The canonical scale 1/(m+1), written in the grammar."""
    return Product(ApproachUp(1), Harmonic(1))
