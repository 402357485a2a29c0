"""Recursive models of limit-measure spaces with their candidate sequences.

A model is one of

* ``Atom(h_top)``: one point, candidate sequence constant from k = 1 on;
* ``Scaled(inner, q)``: the same space with every h value multiplied by q
  (towers and powers act this way);
* ``BlowAndSew(base, family, sync)``: the base space plus disjoint open
  copies D_1, D_2, ... where copy m carries member ``n = m + shift`` of the
  family, scaled by ``family.scale(n)``.  Copies accumulate on every base
  point.

Points are addressed by tuples of steps: ``"b"`` enters the base, an int m
enters copy m.  ``Scaled`` nodes are transparent.  The text form joins steps
with ``/`` (``"b/3/b"``); the empty string addresses an atom.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .seqalg import (IndeterminateLimit, Product, Scale, ScalarSeq, frac, fmt_frac,
                     seq_from_json, seq_to_json)


class ModelError(ValueError):
    pass


class AddressError(ModelError):
    pass


class Model:
    """Base class.  Models compare by identity; use ``to_json`` for value equality."""

    __slots__ = ()


@dataclass(frozen=True, eq=False)
class Atom(Model):
    h_top: Fraction
    mme: bool = True

    def __post_init__(self):
        h = frac(self.h_top)
        if h < 0:
            raise ModelError(f"h_top must be >= 0, got {h}")
        object.__setattr__(self, "h_top", h)


@dataclass(frozen=True, eq=False)
class Scaled(Model):
    inner: Model
    q: Fraction

    def __post_init__(self):
        q = frac(self.q)
        if q <= 0:
            raise ModelError(f"scale factor must be > 0, got {q}")
        object.__setattr__(self, "q", q)


@dataclass(frozen=True)
class Sync:
    """Synchronization thresholds I(k) = mult*k + offset."""

    mult: int = 1
    offset: int = 0

    def __post_init__(self):
        if self.mult < 1 or self.offset < 0:
            raise ModelError("sync needs mult >= 1 and offset >= 0")

    def threshold(self, k):
        return self.mult * k + self.offset

    def to_json(self):
        if self.mult == 1 and self.offset == 0:
            return "default"
        return {"mult": self.mult, "offset": self.offset}

    @classmethod
    def from_json(cls, d):
        if d in (None, "default"):
            return cls()
        return cls(int(d.get("mult", 1)), int(d.get("offset", 0)))


class Family:
    """A parametric family n -> member model with a scale sequence.

    Subclasses set ``kind`` and implement ``_build(n)``, ``htop_terms()`` and
    ``params_json()``.  Member n is used for copy m = n - shift.
    """

    kind = "abstract"

    def __init__(self, scale: ScalarSeq, shift: int = 0):
        if not isinstance(scale, ScalarSeq):
            raise TypeError("scale must be a ScalarSeq")
        if not isinstance(shift, int) or shift < 0:
            raise ModelError("shift must be a nonnegative int")
        self.scale = scale
        self.shift = shift
        self._members = {}

    @property
    def n0(self):
        return self.shift + 1

    def member(self, n):
        if n < self.n0:
            raise ModelError(f"member {n} precedes the first member {self.n0}")
        got = self._members.get(n)
        if got is None:
            got = self._members[n] = self._build(n)
        return got

    def copy(self, m):
        """(scale, member) for copy index m >= 1."""
        n = m + self.shift
        return self.scale.eval(n), self.member(n)

    def htop_terms(self):
        raise NotImplementedError

    def _build(self, n):
        raise NotImplementedError

    def params_json(self):
        raise NotImplementedError

    def to_json(self):
        d = {"kind": self.kind, "scale": seq_to_json(self.scale)}
        if self.shift:
            d["shift"] = self.shift
        d.update(self.params_json())
        return d

    def validate(self):
        q = self.scale.tail_sup(self.n0)
        if q > 1:
            raise ModelError(f"scale exceeds 1 (sup {q})")
        if self.scale.eval(self.n0) <= 0 or _normal_coeff(self.scale) == 0:
            raise ModelError("scale must be positive")
        for t in self.htop_terms():
            Product(self.scale, t).limit()  # may raise IndeterminateLimit


def _normal_coeff(s):
    from .seqalg import _normal
    return _normal(s).q


class AtomFamily(Family):
    """Members Atom(h(n))."""

    kind = "atoms"

    def __init__(self, h: ScalarSeq, scale: ScalarSeq, shift: int = 0):
        super().__init__(scale, shift)
        self.h = h

    def _build(self, n):
        return Atom(self.h.eval(n))

    def htop_terms(self):
        return [self.h]

    def params_json(self):
        return {"h": seq_to_json(self.h)}


class ScaledFamily(Family):
    """Members Scaled(shape, factor(n)): one shape at varying strength."""

    kind = "scaled"

    def __init__(self, shape: Model, factor: ScalarSeq, scale: ScalarSeq, shift: int = 0):
        super().__init__(scale, shift)
        self.shape = shape
        self.factor = factor

    def _build(self, n):
        r = self.factor.eval(n)
        if r == 0:
            raise ModelError("scaled family factor vanished")
        return Scaled(self.shape, r)

    def htop_terms(self):
        return [Scale(h_top(self.shape), self.factor)]

    def params_json(self):
        return {"shape": to_json(self.shape), "factor": seq_to_json(self.factor)}


_FAMILY_DECODERS = {}


def register_family(kind, decoder):
    _FAMILY_DECODERS[kind] = decoder


@dataclass(frozen=True, eq=False)
class BlowAndSew(Model):
    base: Model
    family: Family
    sync: Sync = field(default_factory=Sync)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def make_atom(h_top, mme=True):
    return Atom(frac(h_top), mme)


def make_blow_and_sew(base, family, sync=None):
    if not isinstance(base, Model):
        raise TypeError("base must be a model")
    family.validate()
    return BlowAndSew(base, family, sync or Sync())


# ---------------------------------------------------------------------------
# addresses
# ---------------------------------------------------------------------------

def parse_address(text):
    if isinstance(text, tuple):
        return text
    text = text.strip()
    if text == "":
        return ()
    out = []
    for part in text.split("/"):
        if part == "b":
            out.append("b")
        elif part.isdigit() and int(part) >= 1:
            out.append(int(part))
        else:
            raise AddressError(f"bad address step {part!r} in {text!r}")
    return tuple(out)


def format_address(addr):
    return "/".join(str(s) for s in addr)


def _unwrap(model):
    q = Fraction(1)
    while isinstance(model, Scaled):
        q *= model.q
        model = model.inner
    return q, model


def resolve(model, addr):
    """Follow an address; returns (accumulated scale, terminal atom)."""
    addr = parse_address(addr)
    q = Fraction(1)
    node = model
    for i, step in enumerate(addr):
        f, node = _unwrap(node)
        q *= f
        if not isinstance(node, BlowAndSew):
            raise AddressError(f"step {i} ({step!r}) goes below an atom")
        if step == "b":
            node = node.base
        else:
            s, node = node.family.copy(step)
            q *= s
    f, node = _unwrap(node)
    q *= f
    if not isinstance(node, Atom):
        raise AddressError("address ends at a composite; continue with 'b' or a copy index")
    return q, node


def h_value(model, addr):
    q, atom = resolve(model, addr)
    return q * atom.h_top


def eval_h_k(model, addr, k):
    if not isinstance(k, int) or k < 0:
        raise ValueError("k must be a nonnegative int")
    addr = parse_address(addr)
    q = Fraction(1)
    node = model
    for step in addr:
        f, node = _unwrap(node)
        q *= f
        if not isinstance(node, BlowAndSew):
            raise AddressError("address goes below an atom")
        if step == "b":
            node = node.base
            continue
        if step >= node.sync.threshold(k):
            # late copies carry h_k = 0; the rest of the path must still exist
            resolve(model, addr)
            return Fraction(0)
        s, node = node.family.copy(step)
        q *= s
    f, node = _unwrap(node)
    q *= f
    if not isinstance(node, Atom):
        raise AddressError("address ends at a composite")
    return Fraction(0) if k == 0 else q * node.h_top


def eval_tail(model, addr, k):
    return h_value(model, addr) - eval_h_k(model, addr, k)


# ---------------------------------------------------------------------------
# h_top (exact)
# ---------------------------------------------------------------------------

_HTOP = {}


def h_top(model):
    key = id(model)
    hit = _HTOP.get(key)
    if hit is not None and hit[0] is model:
        return hit[1]
    if isinstance(model, Atom):
        v = model.h_top
    elif isinstance(model, Scaled):
        v = model.q * h_top(model.inner)
    elif isinstance(model, BlowAndSew):
        fam = model.family
        v = h_top(model.base)
        for t in fam.htop_terms():
            v = max(v, Product(fam.scale, t).tail_sup(fam.n0))
    else:
        raise TypeError(f"not a model: {model!r}")
    _HTOP[key] = (model, v)
    return v


# ---------------------------------------------------------------------------
# point enumeration
# ---------------------------------------------------------------------------

def sample_points(model, max_copy=3, depth=3):
    """All addresses using copy indices <= max_copy and at most `depth` copy steps."""
    out = []

    def walk(node, prefix, d):
        _, node = _unwrap(node)
        if isinstance(node, Atom):
            out.append(prefix)
            return
        walk(node.base, prefix + ("b",), d)
        if d == 0:
            return
        for m in range(1, max_copy + 1):
            _, child = node.family.copy(m)
            walk(child, prefix + (m,), d - 1)

    walk(model, (), depth)
    return out


def copy_depth(model):
    """Nesting depth of copy steps (0 for atoms)."""
    _, node = _unwrap(model)
    if isinstance(node, Atom):
        return 0
    return max(copy_depth(node.base), 1 + copy_depth(node.family.member(node.family.n0)))


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def to_json(model):
    if isinstance(model, Atom):
        d = {"h_top": fmt_frac(model.h_top)}
        if not model.mme:
            d["mme"] = False
        return {"atom": d}
    if isinstance(model, Scaled):
        return {"scaled": {"q": fmt_frac(model.q), "model": to_json(model.inner)}}
    if isinstance(model, BlowAndSew):
        fam = model.family.to_json()
        return {"blow": {"base": to_json(model.base), "children": fam,
                         "scale": fam.pop("scale"), "sync": model.sync.to_json()}}
    raise TypeError(f"not a model: {model!r}")


def from_json(d):
    if not isinstance(d, dict) or len(d) != 1:
        raise ModelError(f"bad model JSON: {d!r}")
    (tag, body), = d.items()
    if tag == "atom":
        return Atom(frac(body["h_top"]), bool(body.get("mme", True)))
    if tag == "scaled":
        return Scaled(from_json(body["model"]), frac(body["q"]))
    if tag == "blow":
        base = from_json(body["base"])
        scale = seq_from_json(body["scale"])
        fam = family_from_json(body["children"], scale)
        return make_blow_and_sew(base, fam, Sync.from_json(body.get("sync")))
    raise ModelError(f"unknown model tag {tag!r}")


def family_from_json(d, scale):
    kind = d.get("kind")
    shift = int(d.get("shift", 0))
    if kind == "atoms":
        return AtomFamily(seq_from_json(d["h"]), scale, shift)
    if kind == "scaled":
        return ScaledFamily(from_json(d["shape"]), seq_from_json(d["factor"]), scale, shift)
    dec = _FAMILY_DECODERS.get(kind)
    if dec is None:
        # templates live in the constructors module
        from . import constructors  # noqa: F401
        dec = _FAMILY_DECODERS.get(kind)
    if dec is None:
        raise ModelError(f"unknown family kind {kind!r}")
    return dec(d, scale, shift)


__all__ = [
    "Atom", "Scaled", "BlowAndSew", "Sync", "Family", "AtomFamily", "ScaledFamily",
    "ModelError", "AddressError", "IndeterminateLimit", "make_atom", "make_blow_and_sew",
    "parse_address", "format_address", "resolve", "h_value", "eval_h_k", "eval_tail",
    "h_top", "sample_points", "to_json", "from_json", "register_family",
]
