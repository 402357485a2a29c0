"""Brute-force truncation oracle for u_gamma at finite gamma.

The model is unfolded into an explicit finite tree: every blow-and-sew node
keeps copies 1..M, copy nesting stops at depth D (a node at depth D keeps its
base and loses its copies, and is marked truncated), and stages k run up to K.

Stage k of the recursion is

    u_{g+1} = lim_k  env(u_g + tau_k),  tau_k = h - h_k

evaluated directly on the tree.  The envelope at a point x is x's own value
or the limsup, over the copies of any node whose base contains x, of the sup
over the copy.  Such limsups are read off the window of copies [M/2, M]: the
per-copy sup must be an exact affine function A + B*w of the family's copy
weight w on the window, and then the limsup is A + B times the weight's
exact limit.
For a fixed stage k all copies far enough out are late (h_k = 0 on them), so
the window is read with tau = h.  A point is certified at stage horizon K
when tau_k vanishes there for every k in (K/2, K].

Values that depend on a truncated node, a window that fails the constant
ratio test, or an uncertified stage come back as None.
"""

from __future__ import annotations

from fractions import Fraction

from .entmodel import Atom, AtomFamily, BlowAndSew, ScaledFamily, eval_h_k, format_address
from .seqalg import INF, IndeterminateLimit, Product


class _Leaf:
    __slots__ = ("addr", "h")

    def __init__(self, addr, h):
        self.addr = addr
        self.h = h


class _Blow:
    __slots__ = ("addr", "base", "copies", "weight", "shift", "truncated")

    def __init__(self, addr, base, copies, weight, shift, truncated):
        self.addr = addr
        self.base = base
        self.copies = copies
        self.weight = weight
        self.shift = shift
        self.truncated = truncated


def _mx(*vals):
    if any(v is None for v in vals):
        return None
    return max(vals)


class TruncationOracle:
    def __init__(self, model, M=32, D=3, K=64):
        if M < 4 or D < 0 or K < 2:
            raise ValueError("need M >= 4, D >= 0, K >= 2")
        self.model = model
        self.M, self.D, self.K = M, D, K
        self.leaves = []
        self.root = self._build(model, (), 0, Fraction(1))
        self._settled = {}
        for leaf in self.leaves:
            tau = leaf.h - eval_h_k(model, leaf.addr, K // 2 + 1)
            self._settled[leaf.addr] = tau == 0
        self._levels = [{leaf.addr: Fraction(0) for leaf in self.leaves}]

    def _build(self, node, addr, depth, q):
        while not isinstance(node, (Atom, BlowAndSew)):
            q *= node.q
            node = node.inner
        if isinstance(node, Atom):
            leaf = _Leaf(addr, q * node.h_top)
            self.leaves.append(leaf)
            return leaf
        base = self._build(node.base, addr + ("b",), depth, q)
        fam = node.family
        if isinstance(fam, AtomFamily):
            weight = Product(fam.scale, fam.h)
        elif isinstance(fam, ScaledFamily):
            weight = Product(fam.scale, fam.factor)
        else:
            weight = None
        copies = []
        truncated = depth >= self.D
        if not truncated:
            for m in range(1, self.M + 1):
                s, child = fam.copy(m)
                copies.append((m, self._build(child, addr + (m,), depth + 1, q * s)))
        return _Blow(addr, base, copies, weight, fam.shift, truncated)

    @property
    def points(self):
        return [leaf.addr for leaf in self.leaves]

    # -- one step of the recursion ------------------------------------------
    def _window_limit(self, node, sups):
        if node.truncated or node.weight is None:
            return None
        pts = []
        for m, s in sups:
            if m < self.M // 2:
                continue
            if s is None:
                return None
            pts.append((node.weight.eval(m + node.shift), s))
        if not pts:
            return Fraction(0)
        # fit s = A + B*w exactly on the window
        w0, s0 = pts[0]
        B = Fraction(0)
        for w, s in pts[1:]:
            if w != w0:
                B = (s - s0) / (w - w0)
                break
        A = s0 - B * w0
        if any(s != A + B * w for w, s in pts):
            return None
        if B == 0:
            return A
        try:
            lim = node.weight.limit()
        except IndeterminateLimit:
            return None
        if lim == INF:
            return None
        return A + B * lim

    def _step(self, u):
        lims = {}

        def sup_inner(node):
            # sup over the subtree of u + h, enveloped by the nodes inside it
            if isinstance(node, _Leaf):
                v = u[node.addr]
                return None if v is None else v + node.h
            sups = [(m, sup_inner(c)) for m, c in node.copies]
            lim = self._window_limit(node, sups)
            lims[id(node)] = lim
            below = sup_inner(node.base)
            if lim is None or below is None:
                return None
            return _mx(below, lim, *(s for _, s in sups))

        sup_inner(self.root)
        nxt = {}

        def push(node, anc):
            if isinstance(node, _Leaf):
                v = u[node.addr]
                if v is None or anc is None or not self._settled[node.addr]:
                    nxt[node.addr] = None
                else:
                    nxt[node.addr] = max(v, anc)
                return
            lim = lims[id(node)]
            push(node.base, None if (anc is None or lim is None) else max(anc, lim))
            for _, c in node.copies:
                push(c, anc)

        push(self.root, Fraction(0))
        return nxt

    def u(self, gamma):
        """{address: value or None} for finite gamma."""
        if not isinstance(gamma, int) or gamma < 0:
            raise ValueError("the oracle handles finite gamma only")
        while len(self._levels) <= gamma:
            self._levels.append(self._step(self._levels[-1]))
        return self._levels[gamma]

    def certified(self, gamma):
        return {a: v for a, v in self.u(gamma).items() if v is not None}


def oracle_u(model, gamma, M=32, D=3, K=64):
    """Certified oracle values keyed by address text."""
    o = TruncationOracle(model, M, D, K)
    return {format_address(a): v for a, v in o.certified(gamma).items()}
