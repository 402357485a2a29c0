"""Blow-and-sew on the interval: explicit piecewise maps of [-1, 1].

Everything lives on D = [-1, 1].  Maps are lists of pieces; a piece is

* ``affine``  y = m*x + c                    (exact on Fractions)
* ``push``    y = a_out * T(sign, a_in*x + b_in) + b_out
* ``sub``     y = a_out * g^power(a_in*x + b_in) + b_out   (g a PiecewiseMap)

where T is the annulus push below.  Sub pieces are flattened whenever g^power
is affine, so realizations of tent-based models are flat and can be handed
to the compiled kernels.

Realization of a truncated model follows the usual recipe: pick periodic
orbits of the base map with the right lengths, blow up those orbits (and
their preimages down to a fixed depth), let the annuli of the blown balls
wander and put a tower over the child map inside.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .entmodel import Atom, BlowAndSew, Scaled
from .seqalg import fmt_frac

ONE = Fraction(1)
LOG3 = math.log(3)


class RealizeError(ValueError):
    pass


class OrbitSearchError(RealizeError):
    pass


class BlowupError(RealizeError):
    """The distance condition failed for point ``index`` (1-based)."""

    def __init__(self, index, msg):
        super().__init__(f"blow-up point {index}: {msg}")
        self.index = index


def _exact(x):
    return isinstance(x, (int, Fraction))


# ---------------------------------------------------------------------------
# the annulus push
# ---------------------------------------------------------------------------

def _sgn(x):
    return int(x > 0) - int(x < 0)


def radial_push(sign, x):
    """T^+(x) = x + sin(2 pi |x|)/10 and T^-(x) = -x + sin(2 pi |x|)/10.

    Only defined on the annulus 1/2 <= |x| <= 1.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    r = abs(x)
    if r < Fraction(1, 2) or r > 1:
        raise ValueError(f"{x} is outside the annulus 1/2 <= |x| <= 1")
    if _exact(x) and r in (Fraction(1, 2), 1):
        return sign * Fraction(x)
    return sign * float(x) + 0.1 * math.sin(2 * math.pi * float(r))


def annulus_push(sign, x):
    """The radially symmetric push used for sewing: sign*sgn(x)*rho(|x|).

    rho(r) = r + sin(2 pi r)/10 is an increasing homeomorphism of [1/2, 1]
    fixing both ends with rho(r) < r inside.  It agrees with radial_push(+1, x)
    for x > 0 and with radial_push(-1, x) for x < 0.
    """
    r = abs(x)
    if _exact(x) and r in (Fraction(1, 2), 1):
        return sign * Fraction(x)
    rf = float(r)
    return sign * _sgn(x) * (rf + 0.1 * math.sin(2 * math.pi * rf))


def _rho(r):
    return r + 0.1 * np.sin(2 * np.pi * r)


# ---------------------------------------------------------------------------
# piecewise maps
# ---------------------------------------------------------------------------

class Piece:
    __slots__ = ("lo", "hi", "kind", "c", "sub", "power")

    def __init__(self, lo, hi, kind, c, sub=None, power=1):
        self.lo = Fraction(lo)
        self.hi = Fraction(hi)
        self.kind = kind
        self.c = tuple(Fraction(v) for v in c)
        self.sub = sub
        self.power = power
        if not self.lo < self.hi:
            raise ValueError(f"empty piece [{lo}, {hi}]")

    def eval(self, x):
        c = self.c
        if self.kind == "affine":
            return c[0] * x + c[1] if _exact(x) else float(c[0]) * x + float(c[1])
        if self.kind == "push":
            u = c[0] * x + c[1] if _exact(x) else float(c[0]) * x + float(c[1])
            t = annulus_push(int(c[2]), u)
            if _exact(t):
                return c[3] * t + c[4]
            return float(c[3]) * t + float(c[4])
        u = c[0] * x + c[1] if _exact(x) else float(c[0]) * x + float(c[1])
        for _ in range(self.power):
            u = self.sub(u)
        return c[2] * u + c[3] if _exact(u) else float(c[2]) * u + float(c[3])

    def to_json(self):
        d = {"lo": fmt_frac(self.lo), "hi": fmt_frac(self.hi), "kind": self.kind}
        names = {"affine": ("m", "c"), "push": ("a_in", "b_in", "sign", "a_out", "b_out"),
                 "sub": ("a_in", "b_in", "a_out", "b_out")}[self.kind]
        for k, v in zip(names, self.c):
            d[k] = fmt_frac(v)
        if self.kind == "sub":
            d["power"] = self.power
            d["map"] = self.sub.to_json()
        return d

    @classmethod
    def from_json(cls, d):
        kind = d["kind"]
        names = {"affine": ("m", "c"), "push": ("a_in", "b_in", "sign", "a_out", "b_out"),
                 "sub": ("a_in", "b_in", "a_out", "b_out")}[kind]
        c = [Fraction(d[k]) for k in names]
        sub = PiecewiseMap.from_json(d["map"]) if kind == "sub" else None
        return cls(Fraction(d["lo"]), Fraction(d["hi"]), kind, c, sub, int(d.get("power", 1)))


class PiecewiseMap:
    """A self-map of [-1, 1] given piece by piece."""

    def __init__(self, pieces, name=""):
        if not pieces:
            raise ValueError("no pieces")
        pieces = sorted(pieces, key=lambda p: p.lo)
        if pieces[0].lo != -1 or pieces[-1].hi != 1:
            raise ValueError("pieces must cover [-1, 1]")
        for a, b in zip(pieces, pieces[1:]):
            if a.hi != b.lo:
                raise ValueError(f"gap or overlap at {a.hi} / {b.lo}")
        self.pieces = pieces
        self.name = name
        self._los = [p.lo for p in pieces]
        self._arrays = None

    def __repr__(self):
        return f"PiecewiseMap({self.name or len(self.pieces)})"

    @property
    def breaks(self):
        return self._los[1:]

    @property
    def is_flat(self):
        return all(p.kind != "sub" for p in self.pieces)

    @property
    def is_affine(self):
        return all(p.kind == "affine" for p in self.pieces)

    def piece_index(self, x):
        i = bisect.bisect_right(self._los, x) - 1
        return min(max(i, 0), len(self.pieces) - 1)

    def piece_at(self, x):
        return self.pieces[self.piece_index(x)]

    def __call__(self, x):
        if x < -1 or x > 1:
            raise ValueError(f"{x} is outside [-1, 1]")
        return self.piece_at(x).eval(x)

    # -- arrays / kernels ---------------------------------------------------
    def arrays(self):
        if self._arrays is None:
            if not self.is_flat:
                raise ValueError("map has nested pieces")
            breaks = np.array([float(p.lo) for p in self.pieces] + [1.0])
            kinds = np.array([kernels.PUSH if p.kind == "push" else kernels.AFFINE
                              for p in self.pieces], dtype=np.intc)
            coef = np.zeros((len(self.pieces), 5))
            for i, p in enumerate(self.pieces):
                coef[i, :len(p.c)] = [float(v) for v in p.c]
            self._arrays = (breaks, kinds, coef)
        return self._arrays

    def apply(self, xs):
        """Vectorized float evaluation."""
        xs = np.asarray(xs, dtype=np.float64)
        if self.is_flat:
            return kernels.apply_flat(*self.arrays(), xs)
        out = np.empty_like(xs)
        idx = np.clip(np.searchsorted(np.array([float(v) for v in self._los]), xs,
                                      side="right") - 1, 0, len(self.pieces) - 1)
        for i in np.unique(idx):
            p = self.pieces[i]
            sel = idx == i
            if p.kind == "sub":
                u = float(p.c[0]) * xs[sel] + float(p.c[1])
                for _ in range(p.power):
                    u = p.sub.apply(u)
                out[sel] = float(p.c[2]) * u + float(p.c[3])
            else:
                out[sel] = [p.eval(float(v)) for v in xs[sel]]
        return out

    def iterate_many(self, xs, n):
        if self.is_flat:
            return kernels.iterate_flat(*self.arrays(), np.asarray(xs, dtype=np.float64), n)
        x = np.asarray(xs, dtype=np.float64)
        out = np.empty((x.shape[0], n + 1))
        out[:, 0] = x
        for t in range(n):
            x = self.apply(x)
            out[:, t + 1] = x
        return out

    # -- checks -------------------------------------------------------------
    def continuity_defect(self):
        worst = 0.0
        for a, b in zip(self.pieces, self.pieces[1:]):
            worst = max(worst, abs(float(a.eval(a.hi)) - float(b.eval(b.lo))))
        return worst

    def endpoints_fixed(self):
        return self(Fraction(-1)) == -1 and self(Fraction(1)) == 1

    # -- JSON ---------------------------------------------------------------
    def to_json(self):
        d = {"domain": ["-1", "1"], "pieces": [p.to_json() for p in self.pieces]}
        if self.name:
            d["name"] = self.name
        return d

    @classmethod
    def from_json(cls, d):
        return cls([Piece.from_json(p) for p in d["pieces"]], d.get("name", ""))


def identity_map():
    return PiecewiseMap([Piece(-1, 1, "affine", (1, 0))], "id")


def tent(N):
    """The N-tent of [0, 1] moved to [-1, 1] by t -> 2t - 1."""
    if not isinstance(N, int) or N < 3 or N % 2 == 0:
        raise ValueError(f"tent needs an odd integer N >= 3, got {N!r}")
    pieces = []
    for i in range(N):
        lo, hi = Fraction(2 * i, N) - 1, Fraction(2 * i + 2, N) - 1
        if i % 2 == 0:
            pieces.append(Piece(lo, hi, "affine", (N, N - 2 * i - 1)))
        else:
            pieces.append(Piece(lo, hi, "affine", (-N, 2 * i + 1 - N)))
    return PiecewiseMap(pieces, f"tent{N}")


def to_unit(x):
    return (x + 1) / 2


def from_unit(t):
    return 2 * t - 1


def compose_affine(F, G):
    """F o G for maps made of affine pieces only."""
    if not (F.is_affine and G.is_affine):
        raise ValueError("compose_affine needs affine pieces")
    out = []
    for g in G.pieces:
        m, c = g.c
        ya, yb = m * g.lo + c, m * g.hi + c
        cuts = {g.lo, g.hi}
        if m != 0:
            lo, hi = min(ya, yb), max(ya, yb)
            for b in F.breaks:
                if lo < b < hi:
                    cuts.add((b - c) / m)
        cuts = sorted(cuts)
        for a, b in zip(cuts, cuts[1:]):
            mid = (a + b) / 2
            f = F.piece_at(m * mid + c)
            out.append(Piece(a, b, "affine", (f.c[0] * m, f.c[0] * c + f.c[1])))
    return PiecewiseMap(_merge(out))


def _merge(pieces):
    out = []
    for p in pieces:
        q = out[-1] if out else None
        if q is not None and p.kind == q.kind == "affine" and p.c == q.c:
            out[-1] = Piece(q.lo, p.hi, "affine", q.c)
        else:
            out.append(p)
    return out


def power_affine(F, p):
    if p < 1:
        raise ValueError("power must be >= 1")
    G = F
    for _ in range(p - 1):
        G = compose_affine(F, G)
    return G


def _conjugated(sub, power, a_in, b_in, a_out, b_out, lo, hi):
    """Pieces of x -> a_out*sub^power(a_in*x + b_in) + b_out on [lo, hi]."""
    if sub.is_affine:
        g = power_affine(sub, power) if power > 1 else sub
    elif power == 1:
        g = sub
    else:
        return [Piece(lo, hi, "sub", (a_in, b_in, a_out, b_out), sub, power)]
    out = []
    for p in g.pieces:
        xa, xb = (p.lo - b_in) / a_in, (p.hi - b_in) / a_in
        a, b = max(min(xa, xb), lo), min(max(xa, xb), hi)
        if not a < b:
            continue
        if p.kind == "affine":
            m, c = p.c
            out.append(Piece(a, b, "affine", (a_out * m * a_in, a_out * (m * b_in + c) + b_out)))
        elif p.kind == "push":
            ai, bi, s, ao, bo = p.c
            out.append(Piece(a, b, "push", (ai * a_in, ai * b_in + bi, s, a_out * ao, a_out * bo + b_out)))
        else:
            ai, bi, ao, bo = p.c
            out.append(Piece(a, b, "sub", (ai * a_in, ai * b_in + bi, a_out * ao, a_out * bo + b_out),
                             p.sub, p.power))
    return out


# ---------------------------------------------------------------------------
# orbits
# ---------------------------------------------------------------------------

def iterate(F, x0, n):
    """Orbit x0, F(x0), ..., F^n(x0); exact while every visited piece is affine."""
    x = Fraction(x0) if isinstance(x0, int) else x0
    out = [x]
    for _ in range(n):
        x = F(x)
        out.append(x)
    return out


@dataclass(frozen=True)
class Orbit:
    points: tuple          # cycle order, starting at the least point
    signs: tuple           # slope sign of the map at each point

    @property
    def period(self):
        return len(self.points)

    @property
    def total_sign(self):
        s = 1
        for v in self.signs:
            s *= v
        return s


def _inside(x, region):
    return any(a < x < b for a, b in region)


def find_periodic_orbits(f, period, count=None, interior=False, orientation=None, region=None):
    """Periodic orbits of least period ``period`` through the affine pieces of f.

    Itineraries are walked depth first with cylinder pruning, so the work is
    proportional to the number of admissible words.  With ``interior`` the
    orbit must avoid breakpoints and the endpoints; ``orientation`` keeps only
    orbits whose product of slope signs is that value; ``region`` is a list of
    open intervals the orbit must stay in.
    """
    if period < 1:
        raise ValueError("period must be >= 1")
    aff = [i for i, p in enumerate(f.pieces) if p.kind == "affine" and p.c[0] != 0]
    breaks = set(f.breaks) | {Fraction(-1), Fraction(1)}
    found, seen = [], set()

    def rec(word, lo, hi, m, c):
        # the current cylinder [lo, hi] maps by x -> m*x + c into piece word[-1]'s image
        if count is not None and len(found) >= count:
            return
        if len(word) == period:
            if m == 1:
                return
            x = c / (1 - m)
            if not lo <= x <= hi:
                return
            pts = [x]
            for _ in range(period - 1):
                pts.append(f(pts[-1]))
            if len(set(pts)) < period or f(pts[-1]) != x:
                return
            key = frozenset(pts)
            if key in seen:
                return
            seen.add(key)
            if interior and any(p in breaks for p in pts):
                return
            if region is not None and not all(_inside(p, region) for p in pts):
                return
            k = pts.index(min(pts))
            pts = pts[k:] + pts[:k]
            signs = tuple(_sgn(f.piece_at(p).c[0]) for p in pts)
            orb = Orbit(tuple(pts), signs)
            if orientation is not None and orb.total_sign != orientation:
                return
            found.append(orb)
            return
        for i in aff:
            p = f.pieces[i]
            if word:
                # points of the cylinder whose current image lies in piece i
                ya, yb = m * lo + c, m * hi + c
                ylo, yhi = max(min(ya, yb), p.lo), min(max(ya, yb), p.hi)
                if ylo > yhi:
                    continue
                xa, xb = (ylo - c) / m, (yhi - c) / m
                nlo, nhi = min(xa, xb), max(xa, xb)
            else:
                nlo, nhi = p.lo, p.hi
            pm, pc = p.c
            if word:
                rec(word + (i,), nlo, nhi, pm * m, pm * c + pc)
            else:
                rec((i,), nlo, nhi, pm, pc)

    rec((), None, None, None, None)
    if not found:
        raise OrbitSearchError(f"no periodic orbit of period {period} found")
    return found


def preimages(f, w, region=None):
    out = set()
    for p in f.pieces:
        if p.kind != "affine" or p.c[0] == 0:
            continue
        x = (w - p.c[1]) / p.c[0]
        if p.lo <= x <= p.hi and (region is None or _inside(x, region)):
            out.add(x)
    return sorted(out)


# ---------------------------------------------------------------------------
# blow-up maps
# ---------------------------------------------------------------------------

def blowup_maps(eps, n, p):
    """(R, S) for the collapse of [p - eps/n, p + eps/n] inside radius eps."""
    eps = Fraction(eps) if _exact(eps) else eps
    if not eps > 0 or not isinstance(n, int) or n < 2:
        raise ValueError("need eps > 0 and an integer n >= 2")
    inner = eps / n
    k = Fraction(n, n - 1)

    def R(x):
        r = abs(x - p)
        if r >= eps:
            return x
        if r <= inner:
            return p
        return p + _sgn(x - p) * k * (r - inner)

    def S(y):
        r = abs(y - p)
        if r >= eps or r == 0:
            return y
        return p + _sgn(y - p) * (r / k + inner)

    return R, S


class Blowup:
    """Truncated blow-up g = R_1 o ... o R_K of the points q_1, ..., q_K.

    The k-th collapse is centred at f_{k-1}(q_k), where f_k = S_k o ... o S_1
    is the inverse of g_k off the collapsed set.  ``intervals`` lists the
    final blown intervals (p_k, eps_k) with eps_k = delta_k/n_k.
    """

    def __init__(self, Q, deltas, ns):
        if not (len(Q) == len(deltas) == len(ns)):
            raise ValueError("Q, deltas and ns must have the same length")
        self.Q = [Fraction(q) for q in Q]
        self.deltas = [Fraction(d) for d in deltas]
        self.ns = list(ns)
        self.R, self.S, self.centers = [], [], []
        blown = []
        for k, (q, d, n) in enumerate(zip(self.Q, self.deltas, self.ns), 1):
            if not -1 < q < 1:
                raise BlowupError(k, f"{q} is not interior")
            c = self.finv(q)
            dist = min(c + 1, 1 - c)
            for lo, hi in blown:
                dist = 0 if lo <= c <= hi else min(dist, abs(c - lo), abs(c - hi))
            if not d < dist:
                raise BlowupError(k, f"delta {d} is not below the distance {dist}")
            R, S = blowup_maps(d, n, c)
            self.R.append(R)
            self.S.append(S)
            self.centers.append(c)
            blown.append((c - d / n, c + d / n))
        self.intervals = [(c, d / n) for c, d, n in zip(self.centers, self.deltas, self.ns)]

    def g(self, x, upto=None):
        K = len(self.R) if upto is None else upto
        for R in reversed(self.R[:K]):
            x = R(x)
        return x

    __call__ = g

    def finv(self, y, upto=None):
        K = len(self.S) if upto is None else upto
        for S in self.S[:K]:
            y = S(y)
        return y

    def apply(self, xs):
        """Vectorized float g."""
        x = np.array(xs, dtype=np.float64)
        for c, d, n in reversed(list(zip(self.centers, self.deltas, self.ns))):
            c, d = float(c), float(d)
            r = np.abs(x - c)
            col = r <= d / n
            mid = (r < d) & ~col
            x = np.where(col, c, np.where(mid, c + np.sign(x - c) * n / (n - 1) * (r - d / n), x))
        return x

    def blown_index(self, x):
        for k, (p, e) in enumerate(self.intervals):
            if p - e < x < p + e:
                return k
        return None


def blowup_compose(Q, deltas, ns):
    b = Blowup(Q, deltas, ns)
    return b, [(p - e, p + e) for p, e in b.intervals]


def cauchy_defect(blowup, xs):
    """max over x, k1 < k2 of |g_k1(x) - g_k2(x)| - sum_{k1 <= k <= k2} delta_k.

    g_0 is the identity; the sum runs over the 1-based deltas k1..k2 (k1 = 0
    contributes nothing).  Negative means the bound holds everywhere.
    """
    K = len(blowup.R)
    cum = np.concatenate([[0.0], np.cumsum([float(d) for d in blowup.deltas])])
    worst = -math.inf
    for x in xs:
        vals = np.array([float(blowup.g(x, k)) for k in range(K + 1)])
        for k1 in range(K):
            bound = cum[k1 + 1:] - cum[max(k1 - 1, 0)]
            worst = max(worst, float(np.max(np.abs(vals[k1 + 1:] - vals[k1]) - bound)))
    return worst


# ---------------------------------------------------------------------------
# realization
# ---------------------------------------------------------------------------

def match_scale(s, max_period=64):
    """(|theta|, xi) with xi/|theta| closest to s; ties go to the shorter orbit."""
    s = Fraction(s)
    if not 0 < s <= 1:
        raise RealizeError(f"scale {s} is not in (0, 1]")
    best = None
    for per in range(1, max_period + 1):
        xi = max(1, math.floor(s * per + Fraction(1, 2)))
        if xi > per:
            continue
        err = abs(Fraction(xi, per) - s)
        if best is None or err < best[0]:
            best = (err, per, xi)
    return best[1], best[2]


def _scale_candidates(s, max_period):
    s = Fraction(s)
    out = []
    for per in range(1, max_period + 1):
        xi = max(1, math.floor(s * per + Fraction(1, 2)))
        if xi <= per:
            out.append((abs(Fraction(xi, per) - s), per, xi))
    out.sort()
    return [(p, x) for _, p, x in out]


def atom_map(h):
    """tent(N) with N the odd integer nearest 3^h (h in log 3 units); h = 0 is the identity."""
    h = Fraction(h)
    if h == 0:
        return identity_map(), 1
    v = 3 ** float(h)
    N = max(3, 2 * round((v - 1) / 2) + 1)
    return tent(N), N


@dataclass
class Tower:
    index: int
    orbit: Orbit
    balls: list           # blow-up indices of the orbit points, cycle order
    frame: list           # orientation o_i of ball i
    period: int
    xi: int
    scale: Fraction       # requested
    child: "Realization"

    @property
    def achieved(self):
        return Fraction(self.xi, self.period)


@dataclass
class Realization:
    F: PiecewiseMap
    f: PiecewiseMap
    pi: Blowup | None
    blocks: dict                          # 0 -> K_0 intervals, m -> inner balls of tower m
    towers: list = field(default_factory=list)
    kinds: list = field(default_factory=list)   # per blown point: ("orbit", m, i) or ("pre", depth)
    targets: list = field(default_factory=list)  # per blown point: index of the image point
    signs: list = field(default_factory=list)
    h_requested: Fraction | None = None
    N: int | None = None
    notes: list = field(default_factory=list)

    def pi_apply(self, xs):
        return np.asarray(xs, dtype=np.float64) if self.pi is None else self.pi.apply(xs)

    def pi_exact(self, x):
        return x if self.pi is None else self.pi.g(x)

    @property
    def region(self):
        """Open intervals making up the interior of K_0."""
        return self.blocks[0]

    def h_estimate_target(self):
        """Truncated maximum of the base entropy and the scaled child entropies."""
        if self.N is not None:
            return math.log(self.N) if self.N > 1 else 0.0
        base = self.base_target
        return max([base] + [float(t.achieved) * t.child.h_estimate_target() for t in self.towers])

    base_target: float = 0.0

    def to_json(self):
        d = {"F": self.F.to_json(), "f": self.f.to_json(), "towers": [], "blown": []}
        if self.pi is not None:
            for k, ((p, e), q, dl, n) in enumerate(zip(self.pi.intervals, self.pi.Q,
                                                      self.pi.deltas, self.pi.ns)):
                d["blown"].append({"q": fmt_frac(q), "p": fmt_frac(p), "eps": fmt_frac(e),
                                   "delta": fmt_frac(dl), "n": n, "kind": list(self.kinds[k]),
                                   "image": self.targets[k]})
        for t in self.towers:
            d["towers"].append({"m": t.index, "period": t.period, "xi": t.xi,
                                "scale": fmt_frac(t.scale), "achieved": fmt_frac(t.achieved),
                                "orbit": [fmt_frac(p) for p in t.orbit.points],
                                "child": t.child.F.name or "composite"})
        d["blocks"] = {str(k): [[fmt_frac(a), fmt_frac(b)] for a, b in v] for k, v in self.blocks.items()}
        if self.N is not None:
            d["N"] = self.N
        if self.notes:
            d["notes"] = list(self.notes)
        return d


def _unwrap(model):
    q = ONE
    while isinstance(model, Scaled):
        q *= model.q
        model = model.inner
    return q, model


def realize(model, M=3, D=1, preimage_depth=1, max_period=64):
    """Truncated realization: M orbits per blow-up, copies sewn to depth D."""
    if M < 0 or D < 0 or preimage_depth < 0:
        raise ValueError("M, D and preimage_depth must be >= 0")
    q, node = _unwrap(model)
    if isinstance(node, Atom):
        F, N = atom_map(q * node.h_top)
        R = Realization(F, F, None, {0: [(Fraction(-1), Fraction(1))]}, N=N,
                        h_requested=q * node.h_top)
        if N > 1 and abs(math.log(N) / LOG3 - float(R.h_requested)) > 1e-12:
            R.notes.append(f"h {fmt_frac(R.h_requested)} realized as log {N}")
        return R
    if q != 1:
        raise RealizeError("scaled composites have no interval realization here")
    if not isinstance(node, BlowAndSew):
        raise TypeError(f"not a model: {model!r}")
    base = realize(node.base, M, D, preimage_depth, max_period)
    if D == 0 or M == 0:
        return base
    fam = node.family
    children = []
    for m in range(1, M + 1):
        s, member = fam.copy(m)
        qm, inner = _unwrap(member)
        s = s * qm
        children.append((m, s, realize(inner, M, D - 1, preimage_depth, max_period)))
    return sew(base, children, preimage_depth, max_period)


def sew(base, children, preimage_depth=1, max_period=64):
    """Blow up one orbit per child in ``base.F`` and sew the child in.

    children: list of (m, scale, child realization).
    """
    f = base.F
    region = base.region
    used = set()
    picks = []
    for m, s, child in children:
        orb = None
        for per, xi in _scale_candidates(s, max_period):
            try:
                cands = find_periodic_orbits(f, per, None, interior=True, orientation=1, region=region)
            except OrbitSearchError:
                continue
            cands = [o for o in cands if not used.intersection(o.points)]
            if cands:
                orb = cands[0]
                break
        if orb is None:
            raise OrbitSearchError(f"copy {m}: no orbit realizes scale {fmt_frac(s)}")
        used.update(orb.points)
        picks.append((m, s, child, orb, per, xi))

    # points to blow up: orbits first, then preimage layers
    Q, kinds = [], []
    for m, s, child, orb, per, xi in picks:
        for i, p in enumerate(orb.points):
            Q.append(p)
            kinds.append(("orbit", m, i))
    qset = set(Q)
    layer = list(Q)
    for depth in range(1, preimage_depth + 1):
        nxt = []
        for w in layer:
            for z in preimages(f, w, region):
                if z not in qset:
                    qset.add(z)
                    nxt.append(z)
        nxt.sort()
        for z in nxt:
            Q.append(z)
            kinds.append(("pre", depth))
        layer = nxt
    bridges = sorted({z for w in layer for z in preimages(f, w, region) if z not in qset}
                     | {z for w in Q for z in preimages(f, w, region) if z not in qset})
    crit = set(f.breaks) | {Fraction(-1), Fraction(1)}
    for x in Q + bridges:
        if x in crit:
            raise RealizeError(f"point {x} hits a breakpoint of the base map")

    # schedule: n_k = k + 2, delta_k = eps0 * 2^-k, eps0 half the least gap
    pts = sorted(set(Q) | set(bridges) | crit)
    gap = min(b - a for a, b in zip(pts, pts[1:]))
    eps0 = gap / 2
    deltas = [eps0 / 2 ** k for k in range(1, len(Q) + 1)]
    ns = [k + 2 for k in range(1, len(Q) + 1)]
    bl = Blowup(Q, deltas, ns)
    index = {q: k for k, q in enumerate(Q)}
    targets = [index[f(q)] for q in Q]
    signs = [_sgn(f.piece_at(q).c[0]) for q in Q]

    pieces = []
    # sewn pieces inside the blown intervals
    towers = []
    last_of = {}
    for m, s, child, orb, per, xi in picks:
        ball_ids = [index[p] for p in orb.points]
        frame, o = [], 1
        for k in ball_ids:
            frame.append(o)
            o *= signs[k]
        towers.append(Tower(m, orb, ball_ids, frame, per, xi, Fraction(s), child))
        last_of[ball_ids[-1]] = (child, xi)
    for k, (p, e) in enumerate(bl.intervals):
        j = targets[k]
        pj, ej = bl.intervals[j]
        sg = signs[k]
        half = e / 2
        for lo, hi in ((p - e, p - half), (p + half, p + e)):
            pieces.append(Piece(lo, hi, "push", (1 / e, -p / e, sg, ej, pj)))
        if k in last_of:
            child, xi = last_of[k]
            # y -> chi^xi(sg*y) in ball coordinates; continuity needs sg = frame sign
            pieces.extend(_conjugated(child.F, xi, sg / half, -sg * p / half, ej / 2, pj,
                                      p - half, p + half))
        else:
            pieces.append(Piece(p - half, p + half, "affine", (sg * ej / e, pj - sg * ej / e * p)))

    # the rest of the interval: F = pi^-1 o f o pi
    rho = Fraction(1, 10 ** 14) / max(abs(p.c[0]) for p in f.pieces if p.kind == "affine")
    cuts = {Fraction(-1), Fraction(1)}
    for (p, e), d in zip(bl.intervals, bl.deltas):
        cuts.update({p - e, p + e, p - d, p + d})
    for b in f.breaks:
        cuts.add(bl.finv(b))
    for k, (q, d) in enumerate(zip(Q, deltas)):
        for t in (q - d, q + d):
            for z in preimages(f, t):
                cuts.add(bl.finv(z))
    for z in bridges:
        cuts.update({z - rho, z + rho})
    cuts = sorted(c for c in cuts if -1 <= c <= 1)
    bridge_set = set(bridges)
    for a, b in zip(cuts, cuts[1:]):
        mid = (a + b) / 2
        if bl.blown_index(mid) is not None:
            continue
        fp = f.piece_at(bl.g(mid))
        if fp.kind != "affine":
            pieces.append(Piece(a, b, fp.kind, fp.c, fp.sub, fp.power))
            continue
        if mid in bridge_set:
            ya, yb = _outer(bl, f, a), _outer(bl, f, b)
        else:
            ya, yb = _outer(bl, f, a + (b - a) / 4), _outer(bl, f, b - (b - a) / 4)
            a4, b4 = a + (b - a) / 4, b - (b - a) / 4
            m_ = (yb - ya) / (b4 - a4)
            ya, yb = ya - m_ * (a4 - a), yb + m_ * (b - b4)
        m_ = (yb - ya) / (b - a)
        pieces.append(Piece(a, b, "affine", (m_, ya - m_ * a)))
    F = PiecewiseMap(_merge(sorted(pieces, key=lambda p: p.lo)), "")
    blocks = {0: _complement(bl.intervals)}
    for t in towers:
        blocks[t.index] = sorted((bl.intervals[k][0] - bl.intervals[k][1] / 2,
                                  bl.intervals[k][0] + bl.intervals[k][1] / 2) for k in t.balls)
    R = Realization(F, f, bl, blocks, towers, kinds, targets, signs)
    R.base_target = base.h_estimate_target()
    if bridges:
        R.notes.append(f"{len(bridges)} unblown preimages bridged at width {fmt_frac(2 * rho)}")
    for t in towers:
        if t.achieved != t.scale:
            R.notes.append(f"copy {t.index}: scale {fmt_frac(t.scale)} realized as {t.xi}/{t.period}")
    return R


def _outer(bl, f, x):
    return bl.finv(f(bl.g(x)))


def _complement(intervals):
    out, lo = [], Fraction(-1)
    for p, e in sorted(intervals):
        out.append((lo, p - e))
        lo = p + e
    out.append((lo, Fraction(1)))
    return out


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

def _sample(rng, samples, focus=()):
    xs = [rng.uniform(-1, 1, samples)]
    for a, b in focus:
        xs.append(rng.uniform(float(a), float(b), max(8, samples // max(1, len(focus)))))
    return np.concatenate(xs)


def check_semiconjugacy(F, f, pi, samples=10_000, seed=0, focus=()):
    """sup |pi(F(x)) - f(pi(x))| over uniform samples (plus samples in ``focus``).

    ``pi`` is a Blowup, any vectorized callable, or None for the identity.
    """
    rng = np.random.default_rng(seed)
    xs = _sample(rng, samples, focus)
    ap = (lambda v: np.asarray(v)) if pi is None else (pi.apply if hasattr(pi, "apply") else pi)
    return float(np.max(np.abs(ap(F.apply(xs)) - f.apply(ap(xs)))))


def tower_conjugacy_error(R, samples=200, seed=0):
    """Worst local-coordinate mismatch between F on each K_m and its tower model (exact)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for t in R.towers:
        ys = [Fraction(int(v), 1 << 30) for v in rng.integers(-(1 << 30), (1 << 30) + 1, samples)]
        balls = [R.pi.intervals[k] for k in t.balls]
        n = len(balls)
        for y in ys:
            for i, ((p, e), o) in enumerate(zip(balls, t.frame)):
                x = p + e / 2 * o * y
                if i < n - 1:
                    want, (pn, en), on = y, balls[i + 1], t.frame[i + 1]
                else:
                    want = y
                    for _ in range(t.xi):
                        want = t.child.F(want)
                    (pn, en), on = balls[0], t.frame[0]
                got = (R.F(x) - pn) / (en / 2) * on
                worst = max(worst, abs(float(got - want)))
    return worst


def block_invariance(R, samples=2000, seed=0):
    """Fraction of sampled points of each block whose image leaves the block."""
    rng = np.random.default_rng(seed)
    out = {}
    for k, ivs in R.blocks.items():
        bad = total = 0
        for a, b in ivs:
            xs = rng.uniform(float(a), float(b), max(4, samples // len(ivs)))
            ys = R.F.apply(xs)
            fa = [(float(lo), float(hi)) for lo, hi in ivs]
            tol = 1e-12
            inside = np.zeros(len(ys), dtype=bool)
            for lo, hi in fa:
                inside |= (ys >= lo - tol) & (ys <= hi + tol)
            bad += int((~inside).sum())
            total += len(ys)
        out[k] = bad / total
    return out


def boundary_invariance(R):
    """True when F maps the blown-interval boundaries into themselves (exact)."""
    if R.pi is None:
        return True
    ends = {p + s * e for p, e in R.pi.intervals for s in (-1, 1)}
    return all(R.F(x) in ends for x in ends)


def wandering_check(R, samples=1000, horizon=None, seed=0):
    """Annulus points of the sewn orbits: the radial coordinate must drop every step
    and the orbit may not come back to its starting ring [rho(r0), r0]."""
    rng = np.random.default_rng(seed)
    per_tower = max(1, samples // max(1, len(R.towers)))
    worst = 0
    ok = True
    for t in R.towers:
        balls = [(float(R.pi.intervals[k][0]), float(R.pi.intervals[k][1])) for k in t.balls]
        H = horizon or 3 * t.period
        for _ in range(per_tower):
            i0 = int(rng.integers(len(balls)))
            p, e = balls[i0]
            r0 = rng.uniform(0.5, 1.0)
            x = p + rng.choice([-1.0, 1.0]) * r0 * e
            r_prev, i = r0, i0
            for step in range(1, H + 1):
                x = float(R.F(x))
                i = (i + 1) % len(balls)
                p, e = balls[i]
                r = abs(x - p) / e
                # once the ring has shrunk to float resolution only the bound matters
                if r < 0.5 - 1e-9 or (r_prev - 0.5 > 1e-9 and not r < r_prev):
                    ok = False
                if i == i0 and _rho(r0) < r <= r0:
                    ok = False
                    worst += 1
                r_prev = r
    return {"pass": ok, "returns": worst, "samples": per_tower * len(R.towers)}


# ---------------------------------------------------------------------------
# entropy
# ---------------------------------------------------------------------------

@dataclass
class EntropyEstimate:
    value: float
    eps: float
    n: int
    samples: int
    seed: int
    windows: list          # per window: (centre, width, counts by horizon, slope)

    def __float__(self):
        return self.value


def _window_counts(F, c, w, S, n, eps, ks):
    lo, hi = max(-1.0, c - w / 2), min(1.0, c + w / 2)
    orbits = F.iterate_many(np.linspace(lo, hi, S), n - 1)
    return {k: kernels.separated_count(orbits, eps, k) for k in ks}


def estimate_entropy(F, eps=1e-3, n=12, samples=10_000, seed=0, windows=4, details=False):
    """Growth rate of (k, eps)-separated orbit counts, k <= n.

    Samples are spread over ``windows`` short intervals with seeded centres.
    Each window's width is tuned so the (n, eps) count sits well below the
    number of samples, then log count is fitted against k on the upper half
    of the horizons; the slope is the window's estimate and the largest
    window estimate is returned.  Widths shrink as the estimate needs, so the
    eps-dependent offset of (1/n) log count drops out of the slope.
    """
    if eps <= 0 or n < 2 or samples < windows:
        raise ValueError("need eps > 0, n >= 2 and samples >= windows")
    rng = np.random.default_rng(seed)
    centres = rng.uniform(-1, 1, windows)
    S = samples // windows
    ks = list(range(max(1, n // 2), n + 1))
    rows = []
    best = 0.0
    for c in centres:
        w, tried = 4 * eps, set()
        for _ in range(60):
            cnt = _window_counts(F, c, w, S, n, eps, [n])[n]
            tried.add(w)
            if cnt > S // 4 and w / 2 not in tried:
                w /= 2
            elif cnt < S // 16 and w < 2 and 2 * w not in tried:
                w *= 2
            else:
                break
        counts = _window_counts(F, c, w, S, n, eps, ks)
        kk = [k for k in ks if counts[k] >= 4]
        slope = 0.0
        if len(kk) >= 2:
            slope = float(np.polyfit(kk, np.log([counts[k] for k in kk]), 1)[0])
        slope = max(0.0, slope)
        rows.append((float(c), w, [counts[k] for k in ks], slope))
        best = max(best, slope)
    est = EntropyEstimate(best, eps, n, samples, seed, rows)
    return est if details else best


__all__ = [
    "RealizeError", "OrbitSearchError", "BlowupError", "radial_push", "annulus_push", "Piece",
    "PiecewiseMap", "identity_map", "tent", "to_unit", "from_unit", "compose_affine",
    "power_affine", "iterate", "Orbit", "find_periodic_orbits", "preimages", "blowup_maps",
    "Blowup", "blowup_compose", "cauchy_defect", "match_scale", "atom_map", "Tower",
    "Realization", "realize", "sew", "check_semiconjugacy", "tower_conjugacy_error",
    "block_invariance", "boundary_invariance", "wandering_check", "EntropyEstimate",
    "estimate_entropy",
]
