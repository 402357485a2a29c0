"""Command line: construct, verify, report, realize, estimate.

Model files are the JSON written by ``construct``:
``{"params": ..., "model": ..., "certificate": ..., "verify": ...}``.
Errors go to stdout as ``{"error": {"type": ..., "message": ...}}`` with a
nonzero exit code.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from fractions import Fraction

import click
import numpy as np

from . import entmodel, realize1d
from .constructors import (Certificate, ConstructionError, EmptyClass, construct,
                           verify_certificate)
from .ordinal import Ordinal, OrdinalError, OrdinalParseError
from .seqalg import IndeterminateLimit, fmt_frac
from .transfinite import Calculus, h_sex, u_report

EXIT_FAIL = 1
EXIT_ERROR = 2


class _Fail(Exception):
    def __init__(self, kind, message, **extra):
        super().__init__(message)
        self.kind = kind
        self.extra = extra


def _g(x):
    return f"{float(x):.12g}"


def _dump(obj):
    return json.dumps(obj, indent=2) + "\n"


def _emit(text, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _fraction(text, name):
    try:
        v = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise _Fail("bad_value", f"{name}: not a rational: {text!r}") from None
    return v


def _ordinal(text, name="alpha"):
    try:
        return Ordinal.parse(text)
    except OrdinalParseError as exc:
        raise _Fail("ordinal_parse", f"{name}: {exc}", position=exc.pos) from None
    except OrdinalError as exc:
        raise _Fail("ordinal", f"{name}: {exc}") from None


def _guard(fn):
    """Turn known failures into the machine-readable error object."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _Fail as exc:
            err = {"type": exc.kind, "message": str(exc), **exc.extra}
        except EmptyClass as exc:
            err = {"type": "empty_class", "message": str(exc)}
        except IndeterminateLimit as exc:
            err = {"type": "indeterminate_limit", "message": str(exc)}
        except OrdinalParseError as exc:
            err = {"type": "ordinal_parse", "message": str(exc), "position": exc.pos}
        except (ConstructionError, OrdinalError, entmodel.ModelError,
                realize1d.RealizeError) as exc:
            err = {"type": type(exc).__name__, "message": str(exc)}
        click.echo(_dump({"error": err}), nl=False)
        sys.exit(EXIT_ERROR)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _load(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise _Fail("missing_file", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise _Fail("bad_json", f"{path}: {exc}") from None
    if "model" not in doc:
        raise _Fail("bad_model_file", f"{path} has no 'model' entry")
    model = entmodel.from_json(doc["model"])
    cert = Certificate.from_json(doc["certificate"]) if "certificate" in doc else None
    return doc, model, cert


@click.group()
def main():
    """Exact entropy-structure models and their interval realizations."""


# ---------------------------------------------------------------------------

@main.command("construct")
@click.option("--kind", default="general", show_default=True,
              type=click.Choice(["general", "base_finite", "powers", "irreducible", "s_zero"]))
@click.option("--alpha", help="target order of accumulation (general)")
@click.option("--a", "a", default="1", show_default=True, help="target norm, p/q")
@click.option("--c", "c", default=None, help="entropy cap, p/q")
@click.option("--p", "p", type=int, help="p for base_finite / powers")
@click.option("--beta", help="exponent beta for powers / irreducible")
@click.option("--delta", help="delta for irreducible")
@click.option("--epsilon", help="epsilon for irreducible")
@click.option("--h", "h", default="1", help="entropy of s_zero")
@click.option("-o", "--out", type=click.Path(dir_okay=False), help="output file (default stdout)")
@_guard
def cmd_construct(kind, alpha, a, c, p, beta, delta, epsilon, h, out):
    """Build a certified model and verify it.  Exit 0 iff verification passes."""
    params = {"a": fmt_frac(_fraction(a, "a"))}
    if c is not None:
        params["c"] = fmt_frac(_fraction(c, "c"))
    call = {"a": _fraction(a, "a"), "c": None if c is None else _fraction(c, "c")}
    if kind == "general":
        if alpha is None:
            raise _Fail("missing_option", "--alpha is required")
        call["alpha"] = _ordinal(alpha)
        params["alpha"] = str(call["alpha"])
    elif kind in ("base_finite", "powers"):
        if p is None:
            raise _Fail("missing_option", "--p is required")
        call["p"] = params["p"] = p
        if kind == "powers":
            call["beta"] = _ordinal(beta or "1", "beta")
            params["beta"] = str(call["beta"])
    elif kind == "irreducible":
        if None in (beta, delta, epsilon):
            raise _Fail("missing_option", "--beta, --delta and --epsilon are required")
        call["beta"] = _ordinal(beta, "beta")
        call["delta"] = _ordinal(delta, "delta")
        call["epsilon"] = _fraction(epsilon, "epsilon")
        params.update(beta=str(call["beta"]), delta=str(call["delta"]),
                      epsilon=fmt_frac(call["epsilon"]))
    else:
        call = {"h": _fraction(h, "h")}
        params = {"h": fmt_frac(call["h"])}
    params = {"kind": kind, **params}
    model, cert = construct(kind, call)
    report = verify_certificate(model, cert)
    doc = {"params": params, "model": entmodel.to_json(model),
           "certificate": cert.to_json(), "verify": report}
    _emit(_dump(doc), out)
    sys.exit(0 if report["pass"] else EXIT_FAIL)


@main.command("verify")
@click.argument("model_file")
@_guard
def cmd_verify(model_file):
    """Re-check the certificate stored in MODEL_FILE.  Exit 0 iff it passes."""
    _, model, cert = _load(model_file)
    if cert is None:
        raise _Fail("bad_model_file", "no certificate to verify")
    report = verify_certificate(model, cert)
    click.echo(_dump(report), nl=False)
    sys.exit(0 if report["pass"] else EXIT_FAIL)


# ---------------------------------------------------------------------------

def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


@main.command("report")
@click.argument("model_file")
@click.option("--u-gamma", "gammas", multiple=True, help="ordinal; repeatable")
@click.option("--h-sex", "want_hsex", is_flag=True, help="h, u at the order of accumulation, h_sex")
@click.option("--estimate-entropy", "want_est", is_flag=True, help="realize and estimate entropy")
@click.option("--max-copy", default=2, show_default=True, help="copy indices sampled for tables")
@click.option("--depth", default=2, show_default=True, help="copy nesting sampled for tables")
@click.option("--M", "M", default=3, show_default=True)
@click.option("--D", "D", default=1, show_default=True)
@click.option("--eps", default=1e-3, show_default=True)
@click.option("--n", "n", default=12, show_default=True)
@click.option("--samples", default=10_000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("-o", "--out", type=click.Path(dir_okay=False))
@_guard
def cmd_report(model_file, gammas, want_hsex, want_est, max_copy, depth, M, D, eps, n,
               samples, seed, out):
    """u_gamma tables (JSON), h_sex (CSV) and entropy estimates (CSV)."""
    _, model, _ = _load(model_file)
    calc = Calculus()
    pts = entmodel.sample_points(model, max_copy, depth)
    parts = []
    if gammas:
        tables = [u_report(model, _ordinal(g, "gamma"), pts, calc) for g in gammas]
        parts.append(_dump(tables if len(tables) > 1 else tables[0]))
    if want_hsex:
        a0 = calc.alpha0(model)
        rows = []
        for addr in pts:
            h = entmodel.h_value(model, addr)
            hs = h_sex(model, addr, calc)
            rows.append([entmodel.format_address(addr) or ".", fmt_frac(h), fmt_frac(hs - h),
                         fmt_frac(hs)])
        parts.append(_csv(["address", "h", f"u_{a0}", "h_sex"], rows))
    if want_est:
        R = realize1d.realize(model, M=M, D=D)
        est = realize1d.estimate_entropy(R.F, eps, n, samples, seed)
        parts.append(_csv(["eps", "n", "samples", "seed", "estimate", "target"],
                          [[_g(eps), n, samples, seed, _g(est), _g(R.h_estimate_target())]]))
    if not parts:
        raise _Fail("missing_option", "nothing to report; pass --u-gamma, --h-sex or --estimate-entropy")
    _emit("\n".join(parts), out)


@main.command("realize")
@click.argument("model_file")
@click.option("--M", "M", default=3, show_default=True, help="orbits blown per blow-up")
@click.option("--D", "D", default=1, show_default=True, help="sewing depth")
@click.option("--preimage-depth", default=1, show_default=True)
@click.option("--samples", default=10_000, show_default=True, help="samples for the checks")
@click.option("--seed", default=0, show_default=True)
@click.option("-o", "--out", type=click.Path(dir_okay=False), help="map JSON (default stdout)")
@_guard
def cmd_realize(model_file, M, D, preimage_depth, samples, seed, out):
    """Interval realization of a model, with its checks."""
    _, model, _ = _load(model_file)
    R = realize1d.realize(model, M=M, D=D, preimage_depth=preimage_depth)
    doc = R.to_json()
    doc["checks"] = realization_checks(R, samples, seed)
    _emit(_dump(doc), out)
    sys.exit(0 if doc["checks"]["pass"] else EXIT_FAIL)


def realization_checks(R, samples=10_000, seed=0):
    focus = [] if R.pi is None else [(p - e, p + e) for p, e in R.pi.intervals]
    semi = realize1d.check_semiconjugacy(R.F, R.f, R.pi, samples, seed, focus)
    cont = R.F.continuity_defect()
    out = {"continuity": _g(cont), "endpoints_fixed": R.F.endpoints_fixed(),
           "semiconjugacy": _g(semi)}
    ok = cont < 1e-12 and out["endpoints_fixed"] and semi < 1e-9
    if R.towers:
        tower = realize1d.tower_conjugacy_error(R, seed=seed)
        wand = realize1d.wandering_check(R, 1000, seed=seed)
        bnd = realize1d.boundary_invariance(R)
        out.update(tower_conjugacy=_g(tower), wandering=wand["pass"], boundary_invariant=bnd)
        ok = ok and tower < 1e-9 and wand["pass"] and bnd
    out["pass"] = bool(ok)
    return out


@main.command("estimate")
@click.argument("model_file", required=False)
@click.option("--tent", "tent_n", type=int, help="use tent(N) instead of a model")
@click.option("--identity", is_flag=True, help="use the identity map")
@click.option("--M", "M", default=3, show_default=True)
@click.option("--D", "D", default=1, show_default=True)
@click.option("--eps", "eps_list", multiple=True, type=float, help="repeatable (default 1e-3)")
@click.option("--n", "n", default=12, show_default=True)
@click.option("--samples", default=10_000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--counts", type=click.Path(dir_okay=False), help="per-window counts CSV")
@click.option("--orbits", type=click.Path(dir_okay=False), help="sample orbits CSV")
@click.option("--orbit-count", default=16, show_default=True)
@click.option("-o", "--out", type=click.Path(dir_okay=False))
@_guard
def cmd_estimate(model_file, tent_n, identity, M, D, eps_list, n, samples, seed, counts,
                 orbits, orbit_count, out):
    """Separated-set entropy estimates as CSV."""
    if sum(bool(v) for v in (model_file, tent_n, identity)) != 1:
        raise _Fail("bad_options", "give exactly one of MODEL_FILE, --tent, --identity")
    if tent_n:
        F, target = realize1d.tent(tent_n), math.log(tent_n)
    elif identity:
        F, target = realize1d.identity_map(), 0.0
    else:
        _, model, _ = _load(model_file)
        R = realize1d.realize(model, M=M, D=D)
        F, target = R.F, R.h_estimate_target()
    rows, crow = [], []
    for eps in eps_list or (1e-3,):
        est = realize1d.estimate_entropy(F, eps, n, samples, seed, details=True)
        rows.append([_g(eps), n, samples, seed, _g(est.value), _g(target)])
        ks = list(range(max(1, n // 2), n + 1))
        for w, (c, width, cs, slope) in enumerate(est.windows):
            for k, cnt in zip(ks, cs):
                crow.append([_g(eps), n, w, _g(c), _g(width), k, cnt, _g(slope)])
    _emit(_csv(["eps", "n", "samples", "seed", "estimate", "target"], rows), out)
    if counts:
        _emit(_csv(["eps", "n", "window", "centre", "width", "k", "count", "slope"], crow), counts)
    if orbits:
        xs = np.random.default_rng(seed).uniform(-1, 1, orbit_count)
        orb = F.iterate_many(xs, n)
        _emit(_csv(["x0"] + [f"x{t}" for t in range(1, n + 1)],
                   [[_g(v) for v in row] for row in orb]), orbits)


if __name__ == "__main__":  # pragma: no cover
    main()
