"""Countable ordinals below epsilon_0 in Cantor normal form.

An ordinal is stored as a tuple of ``(exponent, coefficient)`` pairs with
strictly decreasing exponents.  Exponents are ordinals themselves, so the
representation is a finite tree.  Instances are immutable and hashable.

Text form uses ``w`` for omega::

    >>> Ordinal.parse("w^2*3 + w + 4")
    Ordinal('w^2*3 + w + 4')
"""

from __future__ import annotations

import os
import re
from functools import cached_property, total_ordering

TOWER_ENV = "ARTIFACT_TOWER_LIMIT"
DEFAULT_TOWER_LIMIT = 4


class OrdinalError(ValueError):
    pass


class TowerHeightExceeded(OrdinalError):
    pass


class OrdinalParseError(OrdinalError):
    def __init__(self, msg, text, pos):
        super().__init__(f"{msg} at position {pos}: {text!r}")
        self.text = text
        self.pos = pos


def tower_limit():
    raw = os.environ.get(TOWER_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_TOWER_LIMIT
    try:
        val = int(raw)
    except ValueError:
        raise OrdinalError(f"{TOWER_ENV} must be an integer, got {raw!r}") from None
    if val < 1:
        raise OrdinalError(f"{TOWER_ENV} must be >= 1")
    return val


@total_ordering
class Ordinal:
    def __init__(self, terms=()):
        terms = tuple(terms)
        prev = None
        for e, c in terms:
            if not isinstance(e, Ordinal):
                raise TypeError("exponents must be Ordinal")
            if not isinstance(c, int) or isinstance(c, bool) or c < 1:
                raise OrdinalError(f"coefficient must be a positive int, got {c!r}")
            if prev is not None and not e < prev:
                raise OrdinalError("exponents must be strictly decreasing")
            prev = e
        self.terms = terms
        self._key = tuple((e._key, c) for e, c in terms)
        self._hash = hash(self._key)

    # construction helpers
    @classmethod
    def of(cls, n):
        if isinstance(n, Ordinal):
            return n
        if isinstance(n, str):
            return cls.parse(n)
        if not isinstance(n, int) or n < 0:
            raise OrdinalError(f"cannot make an ordinal from {n!r}")
        return ZERO if n == 0 else cls(((ZERO, n),))

    @classmethod
    def omega_pow(cls, e, c=1):
        return cls(((cls.of(e), c),))

    # comparisons
    def __eq__(self, other):
        if isinstance(other, int) and not isinstance(other, bool):
            other = Ordinal.of(other) if other >= 0 else None
        if not isinstance(other, Ordinal):
            return NotImplemented
        return self._key == other._key

    def __lt__(self, other):
        if isinstance(other, int) and not isinstance(other, bool):
            other = Ordinal.of(other)
        if not isinstance(other, Ordinal):
            return NotImplemented
        return self._key < other._key

    def __hash__(self):
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    # structure
    @property
    def is_zero(self):
        return not self.terms

    @property
    def is_finite(self):
        return not self.terms or (len(self.terms) == 1 and self.terms[0][0].is_zero)

    @property
    def is_successor(self):
        return bool(self.terms) and self.terms[-1][0].is_zero

    @property
    def is_limit(self):
        return bool(self.terms) and not self.terms[-1][0].is_zero

    @property
    def leading_exponent(self):
        if not self.terms:
            raise OrdinalError("0 has no leading exponent")
        return self.terms[0][0]

    def finite_value(self):
        if not self.is_finite:
            raise OrdinalError(f"{self} is not finite")
        return self.terms[0][1] if self.terms else 0

    @cached_property
    def height(self):
        if not self.terms:
            return 0
        return 1 + max(e.height for e, _ in self.terms)

    def check_height(self, limit=None):
        limit = tower_limit() if limit is None else limit
        if self.height > limit:
            raise TowerHeightExceeded(
                f"{self} has tower height {self.height} > limit {limit} (set {TOWER_ENV})")
        return self

    def predecessor(self):
        if not self.is_successor:
            raise OrdinalError(f"{self} is not a successor")
        *head, (e, c) = self.terms
        if c > 1:
            head.append((e, c - 1))
        return Ordinal(head)

    def succ(self):
        return self + ONE

    # arithmetic
    def __add__(self, other):
        other = Ordinal.of(other)
        if not other.terms:
            return self
        e0 = other.terms[0][0]
        head = []
        for e, c in self.terms:
            if e > e0:
                head.append((e, c))
            elif e == e0:
                rest = list(other.terms)
                rest[0] = (e0, rest[0][1] + c)
                return Ordinal(head + rest)
            else:
                break
        return Ordinal(head + list(other.terms))

    def __radd__(self, other):
        return Ordinal.of(other) + self

    def nat_mul(self, p):
        if not isinstance(p, int) or p < 1:
            raise OrdinalError(f"multiplier must be a positive integer, got {p!r}")
        if not self.terms:
            return self
        (e, c), *rest = self.terms
        return Ordinal([(e, c * p)] + rest)

    def __mul__(self, p):
        if isinstance(p, int):
            return self.nat_mul(p)
        return NotImplemented

    def left_sub(self, other):
        """Return the unique t with self + t == other (requires self <= other)."""
        other = Ordinal.of(other)
        if other < self:
            raise OrdinalError(f"{self} > {other}")
        a, b = self.terms, other.terms
        i = 0
        while i < len(a) and i < len(b) and a[i] == b[i]:
            i += 1
        if i == len(a):
            return Ordinal(b[i:])
        # first difference: b must be larger here
        ea, ca = a[i]
        eb, cb = b[i]
        if eb == ea:
            return Ordinal([(eb, cb - ca)] + list(b[i + 1:]))
        return Ordinal(b[i:])

    def is_irreducible(self):
        return len(self.terms) == 1 and self.terms[0][1] == 1

    def fundamental(self, m):
        """m-th element (m >= 1) of the canonical sequence converging to a limit."""
        if not isinstance(m, int) or m < 1:
            raise OrdinalError("index must be a positive integer")
        if not self.is_limit:
            raise OrdinalError(f"{self} is not a limit ordinal")
        *head, (e, c) = self.terms
        if c > 1:
            head.append((e, c - 1))
        base = Ordinal(head)
        if e.is_successor:
            tail = Ordinal.omega_pow(e.predecessor(), m)
        else:
            tail = Ordinal.omega_pow(e.fundamental(m))
        return base + tail

    def splits(self):
        """Decompose the set {delta <= self} by the tail t = -delta + self.

        Yields ``(t, start, exp)``: the deltas with that tail form the
        interval ``[start, start + w^exp)`` when ``exp`` is not None, else the
        single point ``start``.  Tails appear in decreasing order and end with 0.
        """
        out = []
        prefix = ZERO
        n = len(self.terms)
        for i, (e, c) in enumerate(self.terms):
            rest = Ordinal(self.terms[i + 1:])
            for j in range(c, 0, -1):
                t = Ordinal.omega_pow(e, j) + rest
                start = prefix + (Ordinal.omega_pow(e, c - j) if c > j else ZERO)
                out.append((t, start, None if e.is_zero else e))
            prefix = prefix + Ordinal.omega_pow(e, c)
        out.append((ZERO, self, None))
        assert n == 0 or out[0][0] == self
        return out

    def tails(self):
        return [t for t, _, _ in self.splits()]

    # text
    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.terms:
            if e.is_zero:
                parts.append(str(c))
                continue
            if e == ONE:
                s = "w"
            elif e.is_finite:
                s = f"w^{e.finite_value()}"
            else:
                s = "w^{" + str(e) + "}"
            if c != 1:
                s += f"*{c}"
            parts.append(s)
        return " + ".join(parts)

    def __repr__(self):
        return f"Ordinal({str(self)!r})"

    @classmethod
    def parse(cls, text):
        return _Parser(text).parse()


class _Parser:
    _tok = re.compile(r"\s*(?:(\d+)|(w|ω)|(\^)|(\*)|(\+)|(\{)|(\}))")

    def __init__(self, text):
        if not isinstance(text, str):
            raise TypeError("ordinal text must be a string")
        self.text = text
        self.pos = 0
        self.toks = []
        pos = 0
        stripped = text.rstrip()
        while pos < len(stripped):
            m = self._tok.match(stripped, pos)
            if not m:
                bad = pos + len(stripped[pos:]) - len(stripped[pos:].lstrip())
                raise OrdinalParseError("unexpected character", text, bad)
            kind = m.lastindex
            start = m.start(kind)
            val = m.group(kind)
            self.toks.append((kind, val, start))
            pos = m.end()
        self.i = 0

    def _peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, len(self.text))

    def _take(self, kind, what):
        k, v, p = self._peek()
        if k != kind:
            raise OrdinalParseError(f"expected {what}", self.text, p)
        self.i += 1
        return v

    def parse(self):
        if not self.toks:
            raise OrdinalParseError("empty ordinal", self.text, 0)
        val = self._sum()
        k, v, p = self._peek()
        if k is not None:
            raise OrdinalParseError(f"unexpected {v!r}", self.text, p)
        return val.check_height()

    def _sum(self):
        val = self._term()
        while self._peek()[0] == 5:
            self.i += 1
            val = val + self._term()
        return val

    def _term(self):
        k, v, p = self._peek()
        if k == 1:
            self.i += 1
            return Ordinal.of(int(v))
        if k != 2:
            raise OrdinalParseError("expected a number or 'w'", self.text, p)
        self.i += 1
        exp = ONE
        if self._peek()[0] == 3:
            self.i += 1
            exp = self._atom_exp()
        coef = 1
        if self._peek()[0] == 4:
            self.i += 1
            kp = self._peek()[2]
            coef = int(self._take(1, "a coefficient"))
            if coef == 0:
                raise OrdinalParseError("coefficient must be positive", self.text, kp)
        return Ordinal.omega_pow(exp, coef) if coef else ZERO

    def _atom_exp(self):
        k, v, p = self._peek()
        if k == 1:
            self.i += 1
            return Ordinal.of(int(v))
        if k == 2:
            self.i += 1
            return OMEGA
        if k == 6:
            self.i += 1
            val = self._sum()
            self._take(7, "'}'")
            return val
        raise OrdinalParseError("expected an exponent", self.text, p)


ZERO = Ordinal()
ONE = Ordinal(((ZERO, 1),))
OMEGA = Ordinal(((ONE, 1),))


def ord_compare(a, b):
    a, b = Ordinal.of(a), Ordinal.of(b)
    return "LT" if a < b else ("GT" if b < a else "EQ")


def ord_add(a, b):
    return Ordinal.of(a) + Ordinal.of(b)


def ord_nat_mul(a, p):
    return Ordinal.of(a).nat_mul(p)


def is_irreducible(a):
    return Ordinal.of(a).is_irreducible()


def fundamental_sequence(a, m):
    return Ordinal.of(a).fundamental(m)
