"""Command-line driver: ``hermite-hardy {selftest,certify,evolve,export}``.

Exit codes: 0 pass, 1 numeric or certification failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys

import numpy as np

from . import bounds, oscillator, quadrature, specfun, spectra, transforms, weights
from .errors import AccuracyError, ConsistencyError, CoverageError, DomainError, RangeError

log = logging.getLogger("hermite_hardy")

DEFAULT_TIMES = "0,0.7,1.5707963267948966,2.1"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# self tests


def _chk_orthonormality():
    rule = quadrature.gauss_hermite_rule(200)
    s, lg = specfun.hermite_table(64, rule.nodes)
    H = s * np.exp(lg)
    G = (H * rule.scaled_weights) @ H.T
    err = float(np.max(np.abs(G - np.eye(65))))
    return err < 1e-10, f"max Gram error {err:.2e} (n <= 64)"


def _chk_fourier():
    xi = np.linspace(-3, 3, 7)
    err = 0.0
    for n in range(0, 17):
        f = spectra.hermite_function(n)
        got = quadrature.fourier_transform_num(f, xi, method="quadrature")
        want = (-1j) ** n * specfun.hermite_values(n, xi)[n]
        err = max(err, float(np.max(np.abs(got - want))))
    return err < 1e-8, f"max |F h_n - (-i)^n h_n| = {err:.2e} (n <= 16)"


def _chk_hankel():
    err = 0.0
    for nu in (0.0, 0.5, 1.5):
        for k in range(0, 9):
            f = spectra.LaguerreFunction(k, nu)
            s = np.array([0.5, 1.0, 2.0, 4.0])
            got = quadrature.hankel_transform_num(f, nu, s, method="quadrature")
            sg, lg = specfun.laguerre_table(k, nu, s)
            want = (-1) ** k * sg[k] * np.exp(lg[k])
            scale = float(np.max(np.abs(want)))
            err = max(err, float(np.max(np.abs(got - want))) / scale)
    return err < 1e-8, f"max scaled error {err:.2e} (k <= 8)"


def _chk_bargmann():
    cal = transforms.calibrate_bargmann()
    f = spectra.GaussPoly(1.3, [1.0, 0.4, 0.2])
    a = np.asarray(transforms.bargmann_hermite_coeffs(f, 24))
    b = spectra.hermite_coeffs(f, 24).values
    err = float(np.max(np.abs(a - b)))
    ok = err < 1e-7 and abs(cal.from_h0 - cal.from_h1) < 1e-10
    return ok, f"coefficient relation {err:.2e}, calibration K = {cal.constant:.12f}"


def _chk_fock():
    f = spectra.GaussPoly(1.4)
    c = spectra.laguerre_coeffs(f, 0.5, 60)
    z = np.array([0.3, 1 + 0.5j, 2j, -1.5])
    a = transforms.fock_transform_eval(f, 0.5, z)
    b = transforms.fock_series(c, 0.5, z)
    err = float(np.max(np.abs(a - b)))
    return err < 1e-7, f"series vs integral {err:.2e}"


def _chk_plancherel():
    vals = []
    for n in (64, 128, 256, 512, 1024):
        x = math.sqrt(2 * n + 1) * math.cosh(0.5)
        exact = specfun.hermite_log(n, x).log_mag
        approx = specfun.plancherel_rotach_log(n, x).log_mag
        vals.append(n * abs(math.expm1(approx - exact)))
    ok = all(v <= 2 * vals[0] for v in vals[1:])
    return ok, "n*relerr: " + ", ".join(f"{v:.3g}" for v in vals)


def _chk_young():
    v = np.array([0.5, 1.0, 2.0, 3.0])
    got = np.array([weights.young_conjugate(lambda u: 0.5 * u * u, vi) for vi in v])
    err = float(np.max(np.abs(got - 0.5 * v * v)))
    return err < 1e-8, f"quadratic self-conjugacy {err:.2e}"


def _chk_weights():
    rep = weights.check_weight_conditions(weights.WeightSpec.log_power(0.25))
    ok = rep.alpha_holds and rep.beta_sigma_holds and rep.gamma_holds and rep.delta_holds
    return ok, f"log-power weight conditions, L = {rep.alpha_L:.3g}"


def _chk_oscillator():
    f = spectra.GaussPoly(1.3, [1.0, 0.5, 0.2])
    x = np.linspace(-3, 3, 7)
    a = oscillator.solution_eval(f, 0.9, x, N=80)
    b = oscillator.mehler_solution(f, 0.9, x)
    c = spectra.hermite_coeffs(f, 80)
    drift = abs(oscillator.evolve_coeffs(c, 0.9).norm_sq() - c.norm_sq())
    err = float(np.max(np.abs(a - b)))
    return err < 1e-9 and drift < 1e-12, f"Mehler deviation {err:.2e}, norm drift {drift:.1e}"


def _chk_parseval():
    f = spectra.GaussPoly(0.8, [1.0, 0.3])
    c = spectra.hermite_coeffs(f, 120)
    err = abs(c.norm_sq() - f.norm_sq()) / f.norm_sq()
    return err < 1e-10, f"Parseval {err:.2e}"


CHECKS = {
    "orthonormality": _chk_orthonormality,
    "fourier-eigen": _chk_fourier,
    "hankel-eigen": _chk_hankel,
    "bargmann": _chk_bargmann,
    "fock": _chk_fock,
    "plancherel-rotach": _chk_plancherel,
    "young-conjugate": _chk_young,
    "weight-conditions": _chk_weights,
    "oscillator": _chk_oscillator,
    "parseval": _chk_parseval,
}


def cmd_selftest(args):
    names = [n for n in CHECKS if not args.filter or args.filter.lower() in n]
    if not names:
        raise UsageError(f"no self-test matches {args.filter!r}; available: {', '.join(CHECKS)}")
    failed = 0
    for n in names:
        try:
            ok, detail = CHECKS[n]()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {n:20s} {detail}")
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# certify

REQUIRED = {
    "3.1": ["kappa", "beta", "y"],
    "3.2": ["kappa", "beta", "y", "d"],
    "1.5": ["kappa", "beta", "s", "y"],
    "1.2": ["s", "lam", "eps"],
    "1.3": ["s", "lam", "eps"],
    "1.4": ["s", "lam", "eps", "d"],
    "3.3": ["gamma", "d"],
    "3.4": ["gamma", "d"],
    "5.1": ["p", "q", "nu"],
    "1.7": ["a", "c", "d"],
    "1.8": ["a", "c", "d"],
    "P6.2": ["a", "c", "d"],
}
FLAG = {"lam": "lambda"}


def _need(args, theorem):
    missing = [k for k in REQUIRED[theorem] if getattr(args, k) is None]
    if missing:
        raise UsageError(f"theorem {theorem} requires " + ", ".join("--" + FLAG.get(k, k) for k in missing))


def _weight(args):
    if args.weight == "zero":
        return weights.WeightSpec()
    return weights.WeightSpec.log_power(args.weight_s)


def _xgrid(args, lo, hi, n):
    return bounds.GridSpec(args.spacing, lo if args.xmin is None else args.xmin,
                           hi if args.xmax is None else args.xmax, n if args.points is None else args.points)


def _radial_member(a, d):
    """``(1 + |x|^2) e^{-b|x|^2/2}`` with ``b = 1/a`` for ``a < 1`` and ``b = a`` otherwise."""
    b = 1 / a if a < 1 else a
    poly = {(0,) * d: 1.0}
    for j in range(d):
        e = [0] * d
        e[j] = 2
        poly[tuple(e)] = 1.0
    return spectra.GaussPoly(b, dim=d, poly=poly)


def _certify(args):
    th = args.theorem
    if th not in REQUIRED:
        raise UsageError(f"unknown theorem {th!r}; choose from {', '.join(REQUIRED)}")
    _need(args, th)
    thr = args.threads
    if th == "3.1":
        k, b, y = args.kappa, args.beta, args.y
        return bounds.certify(th, lambda x: bounds.weighted_hermite_sum(k, b, 0.5, y, x),
                              lambda x: bounds.thm31_rhs(k, b, y, x), _xgrid(args, 2, 40, 80), threads=thr,
                              params={"kappa": k, "beta": b, "y": y})
    if th == "3.2":
        k, b, y, d = args.kappa, args.beta, args.y, int(args.d)

        def diag(r):
            return np.full(d, r / math.sqrt(d))

        return bounds.certify(th, lambda r: bounds.weighted_hermite_sum_multi(k, b, y, diag(r)),
                              lambda r: bounds.thm32_rhs(k, b, y, diag(r)),
                              _xgrid(args, 2 * math.sqrt(d), 40, 80), threads=thr,
                              params={"kappa": k, "beta": b, "y": y, "d": d, "ray": "diagonal"})
    if th == "1.5":
        k, b, s, y = args.kappa, args.beta, args.s, args.y
        lo = max(2.0, 1.01 * weights.min_admissible_x(s, y))
        return bounds.certify(th, lambda x: bounds.weighted_hermite_sum(k, b, s, y, x),
                              lambda x: bounds.thm15_rhs(k, b, s, y, x), _xgrid(args, lo, 40, 80), threads=thr,
                              params={"kappa": k, "beta": b, "s": s, "y": y, "case": bounds.thm15_case(s, y)})
    if th == "1.2":
        s, lam, eps = args.s, args.lam, args.eps
        y = bounds.y_of_lambda(s, lam)
        nmax = args.nmax or 60
        return bounds.certify(th, lambda n: float(spectra.coeff_rule_log(s, y, [[int(n)]])[0]),
                              lambda n: bounds.coeff_bound_logweight(s, lam, eps, int(n)),
                              bounds.GridSpec("index", 0, nmax), params={"s": s, "lam": lam, "eps": eps, "y": y})
    if th in ("1.3", "1.4"):
        d = 1 if th == "1.3" else int(args.d)
        return oscillator.decay_certificate("1.3", _times(args), _xgrid(args, 2, 12, 41), s=args.s, lam=args.lam,
                                            eps=args.eps, d=d, threads=thr)
    if th == "3.3":
        return oscillator.decay_certificate("3.3", _times(args), _xgrid(args, 2, 12, 41), gamma=args.gamma,
                                            d=int(args.d), threads=thr)
    if th == "3.4":
        g, d = args.gamma, int(args.d)
        nmax = args.nmax or 40
        c = spectra.GaussPoly(math.tanh(2 * g), dim=d).exact_hermite(2 * nmax)
        best = {n: c.log_abs[c.degrees == n].max() for n in range(2 * nmax + 1)}
        rep = bounds.certify(th, lambda n: best[int(n)], lambda n: bounds.coeff_bound_gaussian(g, d, int(n)),
                             bounds.GridSpec("index", 1, nmax), params={"gamma": g, "d": d})
        improved, gp, first = bounds.gaussian_rate_comparison(g, d)
        rep.params.update(improved_rate=improved, gamma_prime=gp, improved_from=first)
        return rep
    w = _weight(args)
    lam = 1.0 if args.lam is None else args.lam
    if th == "5.1":
        p, q, nu = args.p, args.q, args.nu
        nmax = args.nmax or 40
        # e^{-r^2/(2p)} and its transform p^{nu+1} e^{-p s^2/2} both sit in the class for p <= 1
        f = spectra.GaussPoly(1 / min(p, 1.0))
        c = f.laguerre_exact(nu, 2 * nmax)

        def bound(k, l_):
            return bounds.laguerre_coeff_bound(p, q, lam, nu, int(k), l=l_, w=w)

        return _with_l(th, lambda k: c.log_abs[int(k)], bound, bounds.GridSpec("index", 0, nmax), args,
                       {"p": p, "q": q, "nu": nu, "lam": lam, "weight": args.weight})
    a, cc, d = args.a, args.c, int(args.d)
    f = _radial_member(a, d)
    if th in ("1.7", "1.8"):
        nmax = args.nmax or 8
        fam = {"1.7": ("1.7a", 2), "1.8": ("1.8a", 1)}[th]
        which = fam[0] if a >= fam[1] else th + "b"
        norms = {k: spectra.projection_log_norm(f, k, method="exact") for k in range(2 * nmax + 1)}

        def bound(k, l_):
            return bounds.projection_norm_bound(which, a, cc, lam, d, int(k), l=l_, w=w)

        return _with_l(th, lambda k: norms[int(k)], bound, bounds.GridSpec("index", 0, nmax), args,
                       {"a": a, "c": cc, "d": d, "lam": lam, "branch": which, "f_rate": f.a})
    # P6.2
    L = weights.check_weight_conditions(w).alpha_L if w.variant != "zero" else 0.0

    def zpt(r):
        # a fixed direction in C^d with mixed real and imaginary parts
        u = np.exp(1j * np.arange(1, d + 1) * 0.7) / math.sqrt(d)
        return (r * u)[None, :]

    def lhs(r):
        v = abs(transforms.stft_eval(f, f, zpt(r))[0])
        return math.log(v) if v > 0 else -math.inf

    return bounds.certify(th, lhs, lambda r: bounds.prop62_envelope(a, cc, lam, [r], w=w, L=L),
                          bounds.GridSpec("linear", 0 if args.xmin is None else args.xmin,
                                          12 if args.xmax is None else args.xmax, args.points or 49),
                          threads=thr, params={"a": a, "c": cc, "d": d, "lam": lam, "L": L, "f_rate": f.a})


def _with_l(th, lhs, bound, grid, args, params):
    if args.l is not None:
        rep = bounds.certify(th, lhs, lambda k: bound(k, args.l), grid, params=params)
        rep.params["l"] = args.l
        return rep
    l_, rep = bounds.select_l(th, lhs, bound, grid)
    if rep is None:
        # no l passes; report the middle of the grid so the failure is visible
        rep = bounds.certify(th, lhs, lambda k: bound(k, 1.0), grid, params=params)
        rep.params["l"] = 1.0
        return rep
    rep.params.update(params)
    return rep


def _times(args):
    try:
        ts = [float(t) for t in args.times.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --times: {exc}")
    if not ts:
        raise UsageError("empty time list")
    return ts


def cmd_certify(args):
    rep = _certify(args)
    out = args.out or f"cert_{args.theorem}.json"
    rep.to_json(out)
    csv_path = out[:-5] + ".csv" if out.endswith(".json") else out + ".csv"
    rep.to_csv(csv_path)
    print(f"theorem {rep.theorem_id}: {'PASS' if rep.passed else 'FAIL'}  C_fit = {rep.C_fit:.6g}  "
          f"log growth = {rep.log_C_refined - rep.log_C_fit:.3g}  ratio_min = {rep.ratio_min:.3g}")
    return 0 if rep.passed else 1


# ---------------------------------------------------------------------------
# evolve / export


def _u0(args):
    spec = args.u0
    try:
        if spec == "rule":
            s = 0.25 if args.s is None else args.s
            lam = 1 / 32 if args.lam is None else args.lam
            return spectra.CoeffRule(s, bounds.y_of_lambda(s, lam))
        kind, _, val = spec.partition(":")
        if kind == "hermite":
            return spectra.hermite_function(int(val or 0))
        if kind == "gauss":
            return spectra.GaussPoly(float(val or 1.0))
    except ValueError as exc:
        raise UsageError(f"bad --u0 {spec!r}: {exc}")
    raise UsageError(f"unknown --u0 {spec!r}; use hermite:N, gauss:A or rule")


def cmd_evolve(args):
    u0 = _u0(args)
    ts = _times(args)
    xs = np.linspace(args.xmin if args.xmin is not None else 2.0, args.xmax if args.xmax is not None else 12.0,
                     args.points or 5)
    env = None
    if args.envelope == "1.3":
        s = 0.25 if args.s is None else args.s
        lam = 1 / 32 if args.lam is None else args.lam
        env = lambda x: bounds.thm13_rhs(s, lam, 0.05 if args.eps is None else args.eps, x)  # noqa: E731
    elif args.envelope == "3.3":
        g = 0.6 if args.gamma is None else args.gamma
        env = lambda x: bounds.thm33_rhs(g, 1, x)  # noqa: E731
    rows = ["t,x,re,im,abs,abs_log,envelope_log,envelope"]
    for t in ts:
        syn = oscillator.solution_eval(u0, t, xs, N=args.nmax or 64, full=True)
        for x, m, sc in zip(xs, syn.mantissa, syn.log_scale):
            lg = math.log(abs(m)) + sc if m != 0 else -math.inf
            v = m * math.exp(sc) if sc > -745 else 0j
            el = bounds._as_log(env(x)) if env and abs(x) > 1 else math.nan
            rows.append(",".join([bounds.fmt(t), bounds.fmt(x), bounds.fmt(v.real), bounds.fmt(v.imag),
                                  bounds.fmt(abs(v)), bounds.fmt(lg), bounds.fmt(el), bounds.fmt(bounds._plain(el))
                                  if not math.isnan(el) else "nan"]))
    _write(args.out or "evolve.csv", rows)
    return 0


def cmd_export(args):
    if args.kind == "coeffs":
        u0 = _u0(args)
        c = spectra.hermite_coeffs(u0, args.nmax if args.nmax is not None else 16)
        if args.u0.startswith("hermite"):
            keep = np.isfinite(c.log_abs)
            rows = ["alpha_1,re,im"] + [f"{int(a[0])},{bounds.fmt(v.real)},{bounds.fmt(v.imag)}"
                                        for a, v, k in zip(c.indices, c.values, keep) if k]
        else:
            rows = ["alpha_1,re,im"] + [f"{int(a[0])},{bounds.fmt(v.real)},{bounds.fmt(v.imag)}"
                                        for a, v in zip(c.indices, c.values)]
        _write(args.out or "coeffs.csv", rows)
        return 0
    n = args.n or 16
    rule = (quadrature.gauss_hermite_rule(n) if args.family == "hermite"
            else quadrature.gauss_laguerre_rule(n, args.nu or 0.0))
    rows = ["node,weight,log_weight"] + [",".join(bounds.fmt(v) for v in r)
                                         for r in zip(rule.nodes, rule.weights, rule.log_weights)]
    _write(args.out or "rule.csv", rows)
    return 0


def _write(path, rows):
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")


# ---------------------------------------------------------------------------
# parser


def _read_config(path):
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for i, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{i}: expected key = value")
                k, v = (t.strip() for t in line.split("=", 1))
                out[k.replace("-", "_")] = v
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}")
    return out


def _global_flags(suppress):
    g = argparse.ArgumentParser(add_help=False)
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    g.add_argument("--out", **kw)
    g.add_argument("--config", **kw)
    g.add_argument("--threads", type=int, **kw)
    g.add_argument("--seed", type=int, **({"default": 0} if not suppress else kw))
    g.add_argument("-v", "--verbose", action="store_true", **kw)
    return g


def build_parser():
    # global flags may sit before or after the subcommand; the subcommand copy must not reset them
    p = argparse.ArgumentParser(prog="hermite-hardy", parents=[_global_flags(False)],
                                description=__doc__.splitlines()[0])
    glob = _global_flags(True)
    sub = p.add_subparsers(dest="command", required=True)

    st = sub.add_parser("selftest", parents=[glob])
    st.add_argument("filter", nargs="?")

    num = argparse.ArgumentParser(add_help=False)
    for name in ("kappa", "beta", "y", "s", "eps", "gamma", "p", "q", "nu", "a", "c", "l", "xmin", "xmax",
                 "weight_s"):
        num.add_argument("--" + name.replace("_", "-"), dest=name, type=float)
    num.add_argument("--lambda", dest="lam", type=float)
    num.add_argument("--d", type=int)
    num.add_argument("--points", type=int)
    num.add_argument("--nmax", type=int)
    num.add_argument("--times", default=DEFAULT_TIMES)
    num.add_argument("--spacing", choices=["log", "linear"], default="log")
    num.add_argument("--weight", choices=["log_power", "zero"], default="log_power")
    num.set_defaults(weight_s=0.25)

    ce = sub.add_parser("certify", parents=[glob, num])
    ce.add_argument("--theorem", required=True)

    ev = sub.add_parser("evolve", parents=[glob, num])
    ev.add_argument("--u0", default="hermite:0")
    ev.add_argument("--envelope", choices=["none", "1.3", "3.3"], default="none")

    ex = sub.add_parser("export", parents=[glob, num])
    ex.add_argument("kind", choices=["coeffs", "rule"])
    ex.add_argument("--u0", default="hermite:0")
    ex.add_argument("--family", choices=["hermite", "laguerre"], default="hermite")
    ex.add_argument("--n", type=int)
    return p


def _apply_config(parser, args, argv):
    """Fill values from the config file for every option not given on the command line."""
    conf = _read_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions if a.dest != "help"}
    given = set()
    for tok in argv:
        if tok.startswith("--"):
            flag = tok.split("=", 1)[0]
            for a in actions.values():
                if flag in a.option_strings:
                    given.add(a.dest)
    bad = [k for k in conf if k not in actions]
    if bad:
        raise UsageError(f"unknown config keys: {', '.join(bad)}")
    for k, v in conf.items():
        if k in given:
            continue
        act = actions[k]
        try:
            val = act.type(v) if act.type is not None else v
        except ValueError as exc:
            raise UsageError(f"config key {k}: {exc}")
        if act.choices is not None and val not in act.choices:
            raise UsageError(f"config key {k}: {v!r} not in {list(act.choices)}")
        setattr(args, k, val)


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(argv)
        if args.config:
            _apply_config(parser, args, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        np.seterr(all="ignore")
        return {"selftest": cmd_selftest, "certify": cmd_certify, "evolve": cmd_evolve,
                "export": cmd_export}[args.command](args)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    except (UsageError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (AccuracyError, ConsistencyError, CoverageError, RangeError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
