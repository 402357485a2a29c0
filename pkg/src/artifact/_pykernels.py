"""numpy versions of the hot loops (used when the compiled module is absent)."""

import numpy as np

AFFINE = 0
PUSH = 1

_TWO_PI = 2.0 * np.pi


def apply_flat(breaks, kinds, coef, xs):
    """One application of a flat piecewise map to an array of points."""
    xs = np.asarray(xs, dtype=np.float64)
    idx = np.searchsorted(breaks, xs, side="right") - 1
    idx = np.clip(idx, 0, len(kinds) - 1)
    c = coef[idx]
    out = c[:, 0] * xs + c[:, 1]
    push = kinds[idx] == PUSH
    if push.any():
        cp = c[push]
        u = cp[:, 0] * xs[push] + cp[:, 1]
        r = np.abs(u)
        t = cp[:, 2] * np.sign(u) * (r + 0.1 * np.sin(_TWO_PI * r))
        out[push] = cp[:, 3] * t + cp[:, 4]
    return out


def iterate_flat(breaks, kinds, coef, x0, n):
    x = np.array(x0, dtype=np.float64)
    out = np.empty((x.shape[0], n + 1))
    out[:, 0] = x
    for t in range(n):
        x = apply_flat(breaks, kinds, coef, x)
        out[:, t + 1] = x
    return out


def separated_count(orbits, eps, k):
    """Greedy (k, eps)-separated subset size, scanning the rows in order.

    Row i is kept when its first k entries differ by more than eps (sup norm)
    from every row kept so far.
    """
    orbits = np.ascontiguousarray(orbits[:, :k], dtype=np.float64)
    kept = np.empty_like(orbits)
    nk = 0
    for row in orbits:
        if nk:
            d = np.abs(kept[:nk] - row).max(axis=1)
            if d.min() <= eps:
                continue
        kept[nk] = row
        nk += 1
    return nk
