"""Exact transfinite sequence u_gamma on recursive models.

Everything is expressed through *lifted functions*: a finite set of terms
``(c, t)`` on a model M stands for ``x -> max_i (c_i + u^M_{t_i}(x))``.
u_gamma itself is the single term ``(0, gamma)``.

For a blow-and-sew node A = (B, family) with pressure profile P
(P(0) = 0, P(eta+1) = lim_n s_n sup(u^{chi_n}_eta + h), P(lam) = lim_n s_n
||u^{chi_n}_lam||), the base restriction of u^A_gamma is

    max over tails t of gamma of  C_t + u^B_t,

where C_t is the sup of P over the deltas with -delta + gamma = t.  Such a
group is a single point or an interval [D, D + w^e); on an interval the
sup is the left limit of the (nondecreasing) successor pressure at D + w^e.
On copy m the value is s_m times the member's own u_gamma (locality), so the
whole calculus reduces to finite max-plus bookkeeping over tails.
"""

from __future__ import annotations

from fractions import Fraction

from .entmodel import (Atom, AtomFamily, BlowAndSew, Model, Scaled, ScaledFamily,
                       format_address, h_top, h_value, parse_address)
from .ordinal import ONE, OMEGA, ZERO, Ordinal
from .seqalg import INF, IndeterminateLimit, Product, fmt_frac

WINDOW_CAP = 4000
# U and Ubar over template families rarely certify; give up early
SUMMARY_WINDOW = 48


class CalculusError(ArithmeticError):
    pass


def _norm_terms(terms):
    return frozenset((Fraction(c), Ordinal.of(t)) for c, t in terms)


def _is_template(fam):
    return hasattr(fam, "alpha_lim")


class Calculus:
    """Memoized evaluator.  One instance per computation is the intended use."""

    def __init__(self):
        self._keep = {}
        self._memo = {}

    # -- memo plumbing -----------------------------------------------------
    def _get(self, tag, model, *key):
        self._keep[id(model)] = model
        return self._memo.get((tag, id(model)) + key)

    def _put(self, tag, model, *key_and_val):
        *key, val = key_and_val
        self._memo[(tag, id(model)) + tuple(key)] = val
        return val

    # -- pressure profile of a blow-and-sew node ---------------------------
    def succ_pressure(self, A, eta):
        fam = A.family
        if isinstance(fam, AtomFamily):
            return Product(fam.scale, fam.h).limit()
        if isinstance(fam, ScaledFamily):
            return self._scaled_L(fam) * self.uplus(fam.shape, eta)
        if _is_template(fam):
            return fam.pressure if eta >= fam.alpha_lim else Fraction(0)
        raise CalculusError(f"unsupported family {fam.kind}")

    def limit_pressure(self, A, lam):
        fam = A.family
        if isinstance(fam, AtomFamily):
            return Fraction(0)
        if isinstance(fam, ScaledFamily):
            return self._scaled_L(fam) * self.norm(fam.shape, lam)
        if _is_template(fam):
            return fam.pressure if lam >= fam.alpha_lim else Fraction(0)
        raise CalculusError(f"unsupported family {fam.kind}")

    def succ_below(self, A, lam):
        """sup of the successor pressure over eta < lam (lam a limit)."""
        fam = A.family
        if isinstance(fam, AtomFamily):
            return Product(fam.scale, fam.h).limit()
        if isinstance(fam, ScaledFamily):
            return self._scaled_L(fam) * self.ubar(fam.shape, lam)
        if _is_template(fam):
            return fam.pressure if lam > fam.alpha_lim else Fraction(0)
        raise CalculusError(f"unsupported family {fam.kind}")

    def pressure_at(self, A, delta):
        if delta.is_zero:
            return Fraction(0)
        if delta.is_successor:
            return self.succ_pressure(A, delta.predecessor())
        return self.limit_pressure(A, delta)

    def _scaled_L(self, fam):
        L = Product(fam.scale, fam.factor).limit()
        if L == INF:
            raise IndeterminateLimit("scale times factor diverges")
        return L

    def split_constants(self, A, gamma):
        """[(tail, C_tail)] for the base recursion of A at gamma."""
        hit = self._get("split", A, gamma)
        if hit is not None:
            return hit
        out = []
        for t, start, e in gamma.splits():
            if e is None:
                C = self.pressure_at(A, start)
            else:
                C = self.succ_below(A, start + Ordinal.omega_pow(e))
            out.append((t, C))
        return self._put("split", A, gamma, out)

    def pushdown(self, A, terms):
        out = set()
        for c, t in terms:
            for tail, C in self.split_constants(A, t):
                out.add((c + C, tail))
        return frozenset(out)

    # -- scalar summaries --------------------------------------------------
    def norm(self, M, gamma):
        """||u_gamma|| on M."""
        gamma = Ordinal.of(gamma)
        hit = self._get("N", M, gamma)
        if hit is not None:
            return hit
        if isinstance(M, Atom) or gamma.is_zero:
            v = Fraction(0)
        elif isinstance(M, Scaled):
            v = M.q * self.norm(M.inner, gamma)
        else:
            # exact max, but parts whose upper bound cannot win are skipped
            parts = [(C + self.norm_bounds(M.base, t)[1], C, t)
                     for t, C in self.split_constants(M, gamma)]
            parts.append((self._copy_upper(M, gamma), None, None))
            parts.sort(key=lambda p: p[0], reverse=True)
            v = Fraction(-1)
            for hi, C, t in parts:
                if hi <= v:
                    break
                if C is None:
                    v = max(v, self.copy_sup(M, gamma, "N"))
                else:
                    v = max(v, C + self.norm(M.base, t))
        return self._put("N", M, gamma, v)

    def norm_bounds(self, M, gamma):
        """Cheap (lower, upper) bounds on ||u_gamma|| that never build members.

        The lower bound drops the copy sup; the upper bound replaces each
        template member by its top norm a_n.
        """
        gamma = Ordinal.of(gamma)
        hit = self._get("N", M, gamma)
        if hit is not None:
            return hit, hit
        hit = self._get("NB", M, gamma)
        if hit is not None:
            return hit
        if isinstance(M, Atom) or gamma.is_zero:
            v = (Fraction(0), Fraction(0))
        elif isinstance(M, Scaled):
            lo, hi = self.norm_bounds(M.inner, gamma)
            v = (M.q * lo, M.q * hi)
        else:
            parts = [(C, self.norm_bounds(M.base, t)) for t, C in self.split_constants(M, gamma)]
            lo = max(C + b[0] for C, b in parts)
            hi = max(C + b[1] for C, b in parts)
            v = (lo, max(hi, self._copy_upper(M, gamma)))
        return self._put("NB", M, gamma, v)

    def _copy_upper(self, A, gamma):
        """Upper bound on copy_sup(A, gamma, "N") without building members."""
        fam = A.family
        if isinstance(fam, AtomFamily) or gamma.is_zero:
            return Fraction(0)
        if isinstance(fam, ScaledFamily):
            K = Product(fam.scale, fam.factor).tail_sup(fam.n0)
            return K * self.norm_bounds(fam.shape, gamma)[1]
        if _is_template(fam):
            return Product(fam.scale, fam.a_seq).tail_sup(fam.n0)
        raise CalculusError(f"unsupported family {fam.kind}")

    def uplus(self, M, gamma):
        """sup over M of u_gamma + h."""
        gamma = Ordinal.of(gamma)
        hit = self._get("U", M, gamma)
        if hit is not None:
            return hit
        if isinstance(M, Atom):
            v = M.h_top
        elif isinstance(M, Scaled):
            v = M.q * self.uplus(M.inner, gamma)
        else:
            v = max(C + self.uplus(M.base, t) for t, C in self.split_constants(M, gamma))
            v = max(v, self.copy_sup(M, gamma, "U"))
        return self._put("U", M, gamma, v)

    def ubar(self, M, lam):
        """sup over eta < lam of uplus(M, eta)."""
        lam = Ordinal.of(lam)
        if lam.is_zero:
            raise CalculusError("empty supremum")
        if lam.is_successor:
            return self.uplus(M, lam.predecessor())
        hit = self._get("Ubar", M, lam)
        if hit is not None:
            return hit
        if isinstance(M, Atom):
            v = M.h_top
        elif isinstance(M, Scaled):
            v = M.q * self.ubar(M.inner, lam)
        else:
            v = max(C + self.ubar(M.base, t)
                    for t, C in self.split_constants(M, lam) if not t.is_zero)
            v = max(v, self.copy_sup(M, lam, "Ubar"))
        return self._put("Ubar", M, lam, v)

    def copy_sup(self, A, gamma, which):
        """sup over copies m of s_m * summary(member, gamma)."""
        fam = A.family
        n0 = fam.n0
        if isinstance(fam, AtomFamily):
            if which == "N":
                return Fraction(0)
            return Product(fam.scale, fam.h).tail_sup(n0)
        if isinstance(fam, ScaledFamily):
            K = Product(fam.scale, fam.factor).tail_sup(n0)
            if K == INF:
                raise IndeterminateLimit("unbounded scaled family")
            f = {"N": self.norm, "U": self.uplus, "Ubar": self.ubar}[which]
            return K * f(fam.shape, gamma)
        if _is_template(fam):
            return self._template_sup(fam, gamma, which)
        raise CalculusError(f"unsupported family {fam.kind}")

    def member_norm(self, fam, n, gamma):
        v = fam.closed_norm(n, gamma)
        if v is None:
            v = self.norm(fam.member(n), gamma)
        return v

    def _template_sup(self, fam, gamma, which):
        n0 = fam.n0
        n_from, bound, exact = fam.norm_bound(gamma, self)
        best = Fraction(0)
        extra = []
        if which != "N":
            extra = [Product(fam.scale, t) for t in fam.htop_terms()]
        n = n0
        while True:
            if n >= n_from:
                tb = bound.tail_sup(n)
                if which == "N":
                    if exact:
                        return max(best, tb)
                    if tb <= best:
                        return best
                else:
                    lim = Product(fam.scale, fam.a_seq).limit() if exact else Fraction(0)
                    tot = tb + sum(e.tail_sup(n) for e in extra)
                    if tot <= max(best, lim):
                        return max(best, lim)
            s = fam.scale.eval(n)
            if which == "N":
                v = self.member_norm(fam, n, gamma)
            elif which == "U":
                v = self.uplus(fam.member(n), gamma)
            else:
                v = self.ubar(fam.member(n), gamma)
            best = max(best, s * v)
            n += 1
            if n - n0 > (WINDOW_CAP if which == "N" else SUMMARY_WINDOW):
                raise IndeterminateLimit(
                    f"could not certify sup over the {fam.kind} family at {gamma}")

    # -- order of accumulation ---------------------------------------------
    def alpha0(self, M):
        hit = self._get("a0", M)
        if hit is not None:
            return hit
        if isinstance(M, Atom):
            v = ZERO
        elif isinstance(M, Scaled):
            v = self.alpha0(M.inner)
        else:
            v = self._search_alpha0(M)
        return self._put("a0", M, v)

    def family_alpha(self, fam):
        """sup of the members' orders of accumulation."""
        if isinstance(fam, AtomFamily):
            return ZERO
        if isinstance(fam, ScaledFamily):
            return self.alpha0(fam.shape)
        return fam.alpha_lim

    def _breakpoints(self, fam):
        if isinstance(fam, AtomFamily):
            return {ZERO, ONE}
        if isinstance(fam, ScaledFamily):
            a = self.alpha0(fam.shape)
            pts = {ZERO, ONE, a, a + ONE, OMEGA, a + OMEGA}
            if a.is_finite:
                pts |= {Ordinal.of(k) for k in range(a.finite_value() + 2)}
            else:
                pts |= set(a.tails())
            return pts
        a = fam.alpha_lim
        return {ZERO, a, a + ONE}

    def alpha0_candidates(self, A):
        fam = A.family
        ach = self.family_alpha(fam)
        a0B = self.alpha0(A.base)
        left = self._breakpoints(fam) | {ach, ach + ONE, ZERO, ONE}
        right = set(a0B.tails()) | {a0B, ONE, ZERO}
        cands = set()
        for x in left:
            for y in right:
                cands.add(x + y)
                cands.add(x + y + ONE)
        return sorted(c for c in cands if c >= ach)

    def _search_alpha0(self, A):
        for g in self.alpha0_candidates(A):
            g.check_height()
            if self.stable_at(A, g):
                return g
        raise CalculusError("no fixpoint among the structural candidates")

    def stable_at(self, M, gamma):
        gamma = Ordinal.of(gamma)
        a = self.canon(M, {(Fraction(0), gamma)}, top=True)
        b = self.canon(M, {(Fraction(0), gamma + ONE)}, top=True)
        return a == b

    # -- canonical forms for exact equality --------------------------------
    def canon(self, M, terms, top=False):
        terms = _norm_terms(terms)
        key = (terms, top)
        hit = self._get("canon", M, key)
        if hit is not None:
            return hit
        if isinstance(M, Scaled):
            q = M.q
            v = ("x", q, self.canon(M.inner, {(c / q, t) for c, t in terms}, top))
            return self._put("canon", M, key, v)
        if not top:
            a0 = self.alpha0(M)
            terms = frozenset((c, min(t, a0)) for c, t in terms)
        terms = self._reduce(terms, lambda t: self.norm(M, t),
                             lambda t: self.norm_bounds(M, t))
        if isinstance(M, Atom):
            v = ("atom", max(c for c, _ in terms))
        else:
            v = ("blow", self.canon(M.base, self.pushdown(M, terms)), self._canon_copies(M, terms))
        return self._put("canon", M, key, v)

    @staticmethod
    def _reduce(terms, norm_of, bounds_of=None):
        """Drop terms (c, t) dominated by another term.

        ``bounds_of`` gives cheap (lower, upper) bounds on ``norm_of``; the
        exact norm is only computed when they are inconclusive, so the
        result is the same either way.
        """
        def covers(c2, c, t):
            if bounds_of is not None:
                lo, hi = bounds_of(t)
                if c2 >= c + hi:
                    return True
                if c2 < c + lo:
                    return False
            return c2 >= c + norm_of(t)

        items = sorted(terms, key=lambda ct: (-ct[0], ct[1]), reverse=False)
        kept = []
        for c, t in items:
            dom = False
            for c2, t2 in kept:
                if (c2 >= c and t2 >= t) or covers(c2, c, t):
                    dom = True
                    break
            if not dom:
                kept = [(c2, t2) for c2, t2 in kept
                        if not ((c >= c2 and t >= t2) or covers(c, c2, t2))]
                kept.append((c, t))
        return frozenset(kept)

    def _canon_copies(self, A, terms):
        fam = A.family
        if isinstance(fam, AtomFamily):
            return ("atoms", max(c for c, _ in terms))
        if isinstance(fam, ScaledFamily):
            a0 = self.alpha0(fam.shape)
            K = Product(fam.scale, fam.factor).tail_sup(fam.n0)
            red = frozenset((c, min(t, a0)) for c, t in terms)
            red = self._reduce(red, lambda t: K * self.norm(fam.shape, t),
                               lambda t: tuple(K * b for b in self.norm_bounds(fam.shape, t)))
            return ("scaled", red)
        if _is_template(fam):
            lim = fam.alpha_lim
            red = frozenset((c, min(t, lim)) for c, t in terms)
            return ("template", self._reduce(red, lambda t: INF))
        raise CalculusError(f"unsupported family {fam.kind}")

    # -- pointwise values --------------------------------------------------
    def lifted_value(self, M, terms, addr):
        addr = parse_address(addr)
        terms = _norm_terms(terms)
        q = Fraction(1)
        node = M
        for i, step in enumerate(addr):
            while isinstance(node, Scaled):
                q *= node.q
                terms = frozenset((c / node.q, t) for c, t in terms)
                node = node.inner
            if not isinstance(node, BlowAndSew):
                raise CalculusError(f"address step {i} goes below an atom")
            if step == "b":
                terms = self.pushdown(node, terms)
                node = node.base
            else:
                s, child = node.family.copy(step)
                q *= s
                terms = frozenset((c / s, t) for c, t in terms)
                node = child
        while isinstance(node, Scaled):
            q *= node.q
            terms = frozenset((c / node.q, t) for c, t in terms)
            node = node.inner
        if not isinstance(node, Atom):
            raise CalculusError("address ends at a composite")
        return q * max(c for c, _ in terms)

    def value(self, M, gamma, addr):
        return self.lifted_value(M, {(Fraction(0), Ordinal.of(gamma))}, addr)


# ---------------------------------------------------------------------------
# UFunction and the public operations
# ---------------------------------------------------------------------------

class UFunction:
    """A lifted function on a model: max_i (c_i + u_{t_i})."""

    def __init__(self, model, terms, calc=None):
        self.model = model
        self.terms = _norm_terms(terms)
        self.calc = calc or Calculus()

    @property
    def gamma(self):
        if len(self.terms) == 1:
            (c, t), = self.terms
            if c == 0:
                return t
        return None

    def value(self, addr):
        return self.calc.lifted_value(self.model, self.terms, addr)

    def norm(self):
        M = self.model
        return max(c + self.calc.norm(M, t) for c, t in self.terms)

    def uplus(self):
        return max(c + self.calc.uplus(self.model, t) for c, t in self.terms)

    def canonical(self):
        return self.calc.canon(self.model, self.terms, top=True)

    def __eq__(self, other):
        if not isinstance(other, UFunction):
            return NotImplemented
        if other.model is not self.model:
            return False
        return self.canonical() == other.canonical()

    def __hash__(self):
        return hash(self.terms)

    def pressure_constants(self):
        node = self.model
        while isinstance(node, Scaled):
            node = node.inner
        out = []
        path = ()
        if self.gamma is None:
            return out
        terms = self.terms
        while isinstance(node, BlowAndSew):
            for c, t in terms:
                for tail, C in self.calc.split_constants(node, t):
                    out.append({"node": format_address(path) or ".", "tail": str(tail),
                                "value": fmt_frac(C)})
            terms = self.calc.pushdown(node, terms)
            node = node.base
            while isinstance(node, Scaled):
                node = node.inner
            path = path + ("b",)
            if len(out) > 64:
                break
        return out


def u_gamma(model, gamma, calc=None):
    return UFunction(model, {(Fraction(0), Ordinal.of(gamma))}, calc)


def u_successor(model, u, calc=None):
    if u.model is not model:
        raise CalculusError("UFunction belongs to a different model")
    return UFunction(model, {(c, t + ONE) for c, t in u.terms}, calc or u.calc)


def u_limit(model, family, lam, calc=None):
    """Envelope of the sup of u_beta along the fundamental sequence of lam.

    ``family`` maps indices m to UFunctions equal to c + u_{lam[m]} for one
    constant c (a dict or a list indexed from 1).
    """
    lam = Ordinal.of(lam)
    if not lam.is_limit:
        raise CalculusError(f"{lam} is not a limit ordinal")
    items = family.items() if isinstance(family, dict) else enumerate(family, start=1)
    consts = set()
    seen = 0
    for m, u in items:
        if u.model is not model or len(u.terms) != 1:
            raise CalculusError("family members must be single-term UFunctions on the model")
        (c, t), = u.terms
        if t != lam.fundamental(m):
            raise CalculusError(f"member {m} is not indexed by {lam}[{m}]")
        consts.add(c)
        seen += 1
    if seen == 0:
        raise CalculusError("missing cofinal data")
    if len(consts) != 1:
        raise CalculusError("family members differ in their constant")
    return UFunction(model, {(consts.pop(), lam)}, calc)


def order_of_accumulation(model, calc=None):
    return (calc or Calculus()).alpha0(model)


def norm_u(model, gamma, calc=None):
    return (calc or Calculus()).norm(model, Ordinal.of(gamma))


def h_sex(model, addr, calc=None):
    calc = calc or Calculus()
    a0 = calc.alpha0(model)
    return h_value(model, addr) + calc.value(model, a0, addr)


def u_report(model, gamma, points, calc=None):
    calc = calc or Calculus()
    u = u_gamma(model, gamma, calc)
    try:
        up = fmt_frac(u.uplus())
    except IndeterminateLimit:
        up = None
    return {
        "gamma": str(Ordinal.of(gamma)),
        "norm": fmt_frac(u.norm()),
        "uplus": up,
        "values": [[format_address(parse_address(p)), fmt_frac(u.value(p))] for p in points],
        "pressure_constants": u.pressure_constants(),
    }


# ---------------------------------------------------------------------------
# u.s.c. envelopes of explicit region-valued functions
# ---------------------------------------------------------------------------

class RegionFunction:
    """A function given region by region.

    Atom level: ``RegionFunction(value=q)``.  Blow level:
    ``RegionFunction(base=rf, copies=callable m -> rf, copy_sup=seq)`` where
    ``copy_sup(m)`` is the sup of the function over copy m (a ScalarSeq),
    optionally floored by ``floor``.
    """

    def __init__(self, value=None, base=None, copies=None, copy_sup=None, floor=None):
        self.leaf = value is not None
        self.val = Fraction(value) if value is not None else None
        self.base = base
        self.copies = copies
        self.copy_sup = copy_sup
        self.floor = floor

    def copy_limit(self):
        lim = self.copy_sup.limit()
        if lim == INF:
            raise IndeterminateLimit("unbounded copies")
        return lim if self.floor is None else max(lim, self.floor)

    def value(self, addr):
        addr = parse_address(addr)
        rf = self
        for step in addr:
            if rf.leaf:
                raise CalculusError("address goes below an atom")
            rf = rf.base if step == "b" else rf.copies(step)
        if not rf.leaf:
            raise CalculusError("address ends at a composite")
        return rf.val

    def lift(self, c):
        """max(self, c) everywhere."""
        if self.leaf:
            return RegionFunction(value=max(self.val, c))
        fl = c if self.floor is None else max(self.floor, c)
        return RegionFunction(base=self.base.lift(c), copies=lambda m, f=self.copies: f(m).lift(c),
                              copy_sup=self.copy_sup, floor=fl)


def usc_envelope(g, model=None):
    """Smallest u.s.c. majorant of a region function on the model's topology."""
    if g.leaf:
        return g
    L = g.copy_limit()
    base = usc_envelope(g.base).lift(L)
    return RegionFunction(base=base, copies=lambda m, f=g.copies: usc_envelope(f(m)),
                          copy_sup=g.copy_sup, floor=g.floor)


__all__ = [
    "Calculus", "CalculusError", "UFunction", "RegionFunction", "usc_envelope",
    "u_gamma", "u_successor", "u_limit", "order_of_accumulation", "norm_u", "h_sex",
    "u_report", "h_top",
]
