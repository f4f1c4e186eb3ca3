"""Bound evaluators (log domain) and the certification engine.

Every evaluator returns a :class:`LogScaled`; the certification engine fits
the implicit constant of an inequality ``lhs <~ rhs`` on a grid as
``C_fit = exp(max(log lhs - log rhs))`` and accepts it when the refit on
a refined grid grows by at most 5%.
"""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from . import specfun, weights
from .errors import DomainError
from .specfun import LogScaled

log = logging.getLogger(__name__)

LOG_PI = math.log(math.pi)
STABILITY = math.log(1.05)


# ---------------------------------------------------------------------------
# Weighted Hermite sums


def _log_terms(kappa, beta, s, y, logh, n):
    return -kappa * y * n ** (1.0 / (2 * s)) - beta * np.log(n) + kappa * logh


def _tail_majorants(kappa, beta, s, y, n_hi):
    """``log sum_{m > n} e^{-kappa y m^p} pi^{-kappa/4} m^{-beta}`` for every ``n < n_hi``, plus the remainder past ``n_hi``."""
    p = 1.0 / (2 * s)
    m = np.arange(1, n_hi + 1, dtype=float)
    lt = -kappa * y * m**p - beta * np.log(m) - 0.25 * kappa * LOG_PI
    # remainder past n_hi: the terms decay at least geometrically with ratio q there
    slope = -kappa * y * p * n_hi ** (p - 1) - beta / n_hi
    rem = lt[-1] + slope - math.log1p(-math.exp(slope)) if slope < 0 else math.inf
    rev = np.logaddexp.accumulate(np.concatenate([[rem], lt[::-1]]))[::-1]
    # rev[i] = log sum_{m >= i+1} (index i <-> m = i + 1), so the tail after n is rev[n]
    return rev


def weighted_hermite_sum(kappa, beta, s, y, x, tol=1e-14):
    """``sum_{n >= 1} e^{-kappa y n^{1/(2s)}} n^{-beta} |h_n(x)|^kappa`` in the log domain.

    Truncated at the first ``n`` whose tail majorant (using ``|h_m| <= pi^{-1/4}``)
    drops below ``tol`` times the partial sum.
    """
    if not kappa > 0 or not y > 0:
        raise DomainError("kappa and y must be positive")
    if not 0 < s <= 0.5:
        raise DomainError("s must lie in (0, 1/2]")
    x = float(x)
    if abs(x) <= 1:
        raise DomainError("need |x| > 1")
    N = 64
    while True:
        sg, lg = specfun.hermite_table(N, np.array([x]))
        n = np.arange(1, N + 1, dtype=float)
        terms = _log_terms(kappa, beta, s, y, lg[1:, 0], n)
        partial = np.logaddexp.accumulate(terms)
        tails = _tail_majorants(kappa, beta, s, y, N + 1)
        # tail after including n terms is tails[n]
        ok = np.nonzero(tails[1 : N + 1] < partial + math.log(tol))[0]
        if ok.size:
            cut = int(ok[0]) + 1
            sign, total = specfun.log_sum_signed(np.ones(cut), terms[:cut])
            return LogScaled.from_log(1, total)
        if N >= 1 << 16:
            raise DomainError("weighted Hermite sum did not reach its truncation criterion")
        N *= 2


def weighted_hermite_sum_multi(kappa, beta, y, x, s=0.5):
    """``sum_{|alpha| >= 1} e^{-kappa y sum alpha_j^{1/(2s)}} prod max(alpha_j, 1)^{-beta} |h_alpha(x)|^kappa``.

    The sum factorises: with ``a_j = |h_0(x_j)|^kappa`` and ``T_j`` the
    one-dimensional sum over ``n >= 1``, it equals ``prod(a_j + T_j) - prod a_j``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.abs(x) <= 1):
        raise DomainError("need |x_j| > 1 for every coordinate")
    full, base = 0.0, 0.0
    for xj in x:
        a = kappa * (-0.25 * LOG_PI - 0.5 * xj * xj)
        t = weighted_hermite_sum(kappa, beta, s, y, xj).log_mag
        full += np.logaddexp(a, t)
        base += a
    # log(e^full - e^base), full > base
    return LogScaled.from_log(1, full + math.log(-math.expm1(base - full)))


# ---------------------------------------------------------------------------
# Right-hand sides


def default_theta(s):
    return lambda r: (2 * r) ** (2 * s) / 2


def branch_threshold(s):
    """``2^{1/(2s) - 1}``: the case split of the weighted-sum estimate."""
    return 2.0 ** (1.0 / (2 * s) - 1)


def thm15_case(s, y):
    """Case 1 when ``y > 2^{1/(2s)-1}``, else case 2.  Disagreement with the ``(2s)^{2s}`` split is logged."""
    case = 1 if y > branch_threshold(s) else 2
    alt = 1 if y > (2 * s) ** (2 * s) else 2
    if alt != case:
        log.info("case split differs for s=%g, y=%g: threshold %g gives %d, (2s)^(2s)=%g gives %d",
                 s, y, branch_threshold(s), case, (2 * s) ** (2 * s), alt)
    return case


def thm15_rhs(kappa, beta, s, y, x, theta=None, case=None):
    """``|x| l^{-2s(kappa/4+beta)/(1-2s)} exp(-kappa F (x^2/2 P - L))`` with ``l = log(1 + sqrt2 |x|)``.

    ``F = 1`` in case 1 and ``theta(y)^{1/(2s)}`` in case 2.
    """
    q = weights.eq1_quantities(s, y, x)
    x = abs(float(x))
    case = thm15_case(s, y) if case is None else case
    F = 1.0
    if case == 2:
        th = (theta or default_theta(s))(y)
        F = th ** (1.0 / (2 * s))
    lg = (math.log(x) - 2 * s * (kappa / 4 + beta) / (1 - 2 * s) * math.log(q.log_plus)
          - kappa * F * (0.5 * x * x * q.P - q.L))
    return LogScaled.from_log(1, lg)


def thm31_rhs(kappa, beta, y, x):
    """``|x|^{1 - kappa/2 - 2 beta} e^{-kappa x^2 tanh(y)/2}``."""
    x = abs(float(x))
    if x <= 1:
        raise DomainError("need |x| > 1")
    return LogScaled.from_log(1, (1 - kappa / 2 - 2 * beta) * math.log(x) - 0.5 * kappa * x * x * math.tanh(y))


def thm32_rhs(kappa, beta, y, x):
    x = np.abs(np.atleast_1d(np.asarray(x, dtype=float)))
    if np.any(x <= 1):
        raise DomainError("need |x_j| > 1")
    lg = (1 - kappa / 2 - 2 * beta) * float(np.sum(np.log(x))) - 0.5 * kappa * float(x @ x) * math.tanh(y)
    return LogScaled.from_log(1, lg)


def y_of_lambda(s, lam):
    """``((1 - 2s)/lam)^{(1-2s)/(2s)} s``."""
    return ((1 - 2 * s) / lam) ** ((1 - 2 * s) / (2 * s)) * s


def coeff_bound_logweight(s, lam, eps, index, d=None):
    """Coefficient bound for the log-power class.

    One dimension: ``exp(-(1-eps) y n^{1/(2s)})`` with ``y = y_of_lambda(s, lam)``.
    For a multi-index both readings are returned: ``"statement"`` with
    ``(s/(2d)) sum_j alpha_j^{1/(2s)}`` and ``"proof"`` with ``(s/2) max_j alpha_j^{1/(2s)}``.
    """
    if not 0 < s < 0.5:
        raise DomainError("s must lie in (0, 1/2)")
    if not lam > 0 or eps < 0:
        raise DomainError("need lam > 0 and eps >= 0")
    idx = np.atleast_1d(np.asarray(index, dtype=float))
    d = idx.size if d is None else d
    p = 1.0 / (2 * s)
    k = ((1 - 2 * s) / lam) ** ((1 - 2 * s) / (2 * s))
    if d == 1:
        return LogScaled.from_log(1, -(1 - eps) * k * s * float(idx[0]) ** p)
    powers = idx**p
    return {
        "statement": LogScaled.from_log(1, -(1 - eps) * k * s / (2 * d) * float(powers.sum())),
        "proof": LogScaled.from_log(1, -(1 - eps) * k * s / 2 * float(powers.max())),
    }


def coeff_bound_gaussian(gamma, d, alpha):
    """``d^{|alpha|} |alpha|^{(d-2)/4} e^{-gamma |alpha|}``; ``alpha`` may be a multi-index or its length."""
    n = int(np.sum(alpha))
    if n < 1:
        raise DomainError("need |alpha| >= 1")
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    return LogScaled.from_log(1, n * math.log(d) + (d - 2) / 4 * math.log(n) - gamma * n)


def gaussian_rate_comparison(gamma, d, nmax=200):
    """Whether ``d^n n^{(d-2)/4} e^{-gamma n}`` eventually sits below ``e^{-gamma n / d}`` on ``n <= nmax``.

    Returns ``(improved, gamma_prime, first_n)`` where ``gamma_prime = gamma - log d``
    and ``first_n`` is the index from which the comparison holds to the end (None if never).
    """
    n = np.arange(1, nmax + 1)
    new = n * math.log(d) + (d - 2) / 4 * np.log(n) - gamma * n
    old = -gamma * n / d
    ok = new <= old + 1e-12
    first = None
    for i in range(n.size - 1, -1, -1):
        if not ok[i]:
            break
        first = int(n[i])
    return first is not None and first < nmax, gamma - math.log(d), first


def _best_over_l(fn, l):
    if l is not None:
        return fn(float(l))
    grid = np.geomspace(1e-3, 1e3, 61)
    return min(fn(float(li)) for li in grid)


def _conj(fun, v, spec=None):
    # a zero weight contributes no growth allowance; its literal conjugate is +inf for v > 0
    if spec is not None and spec.variant == "zero" and fun == spec.phi:
        return 0.0
    # the wide bracket only suits the bare log-power weight; A e^{2u} + w peaks early
    if spec is not None and spec.variant == "log_power" and fun == spec.phi:
        q = (1 - 2 * spec.s) / (2 * spec.s)
        return weights.young_conjugate(fun, v, umax=max(50.0, 5.0 * v**q))
    return weights.young_conjugate(fun, v)


def laguerre_coeff_bound(p, q, lam, nu, k, l=None, w=None):
    """``2^{2k} Gamma(k+nu+1) exp(2k log q - (1/l) phi*(2lk))`` (``p >= 1``); ``zeta_{p,q}*`` replaces ``phi*`` for ``p < 1``.

    ``l=None`` takes the smallest value over a 61-point log grid on [1e-3, 1e3]
    separately for this ``k``.
    """
    w = w or weights.WeightSpec()
    if not nu > -0.5 or q <= 0 or p <= 0:
        raise DomainError("need nu > -1/2 and p, q > 0")
    if k < 0:
        raise DomainError("k must be non-negative")
    if p >= 1:
        fun = w.phi
    else:
        A = weights.zeta_coef(p, q)
        fun = weights.exp_plus_weight(A, w)
    base = 2 * k * math.log(2) + math.lgamma(k + nu + 1) + 2 * k * math.log(q)

    def at(l_):
        return base - _conj(fun, 2 * l_ * k, w) / l_

    return LogScaled.from_log(1, _best_over_l(at, l))


def projection_norm_bound(theorem, a, c, lam, d, k, l=None, w=None, q=None):
    """Projection-norm bounds.

    ``"1.7a"`` (``a >= 2``) and ``"1.7b"`` (``0 < a < 2``):
    ``2^{2k}(k+d-1)! exp(2k log(c/sqrt2) - (1/l) g*(2lk))`` with ``g = phi`` or ``psi_{a,c}``.
    ``"1.8a"`` (``a >= 1``) and ``"1.8b"`` (``0 < a < 1``):
    ``2^k k! (2k+d)^{(d-2)/4} exp(2k log q - (1/l) g*(2lk))`` with ``g = phi`` or ``Psi_{a,c}``;
    ``q`` defaults to ``c/sqrt2``.
    """
    w = w or weights.WeightSpec()
    ranges = {"1.7a": a >= 2, "1.7b": 0 < a < 2, "1.8a": a >= 1, "1.8b": 0 < a < 1}
    if theorem not in ranges:
        raise DomainError(f"unknown bound {theorem!r}")
    if not ranges[theorem]:
        fam = theorem[:3]
        other = [t for t in ranges if t.startswith(fam) and ranges[t]]
        raise DomainError(f"a={a} is outside the range of {theorem}; use {other[0] if other else 'none'}")
    if theorem == "1.7a" or theorem == "1.8a":
        fun = w.phi
    elif theorem == "1.7b":
        fun = weights.exp_plus_weight(weights.psi_coef(a, c), w)
    else:
        fun = weights.exp_plus_weight(weights.Psi_coef(a, c), w)
    if theorem.startswith("1.7"):
        base = 2 * k * math.log(2) + math.lgamma(k + d) + 2 * k * math.log(c / math.sqrt(2))
    else:
        q = c / math.sqrt(2) if q is None else q
        base = k * math.log(2) + math.lgamma(k + 1) + (d - 2) / 4 * math.log(2 * k + d) + 2 * k * math.log(q)

    def at(l_):
        return base - _conj(fun, 2 * l_ * k, w) / l_

    return LogScaled.from_log(1, _best_over_l(at, l))


def prop62_envelope(a, c, lam, z, w=None, L=1.0):
    """``exp(-a|z|^2/8 + L lam w(c|z|/2))``."""
    w = w or weights.WeightSpec()
    r = float(np.linalg.norm(np.atleast_1d(z)))
    return LogScaled.from_log(1, -a * r * r / 8 + L * lam * float(w(c * r / 2)))


def thm13_rhs(s, lam, eps, x, theta=None, d=1):
    """Time-uniform envelope for the evolved log-power class (``d = 1``) or its product form (``d >= 2``)."""
    y = y_of_lambda(s, lam)
    g = 2 * s / (1 - 2 * s)
    ls = weights.lambda_s(s)
    x = np.abs(np.atleast_1d(np.asarray(x, dtype=float)))
    if d == 1:
        crit, coef = lam, 2.0**g
    else:
        crit, coef = (2 * d) ** g * lam, (4 * d) ** g
    F = 1.0
    if crit >= ls:
        F = (theta or default_theta(s))(y) ** (1.0 / (2 * s))
    total = 0.0
    for xi in x:
        q = weights.eq1_quantities(s, y, xi)
        total += -(1 - eps) * F * (0.5 * xi * xi * q.P - lam * coef * q.log_plus ** (1 / (1 - 2 * s)))
    return LogScaled.from_log(1, total)


def thm13_branch_agreement(s, lam):
    """Compare the ``lam < lambda_s`` split with the ``y > 2^{1/(2s)-1}`` split under ``y = y_of_lambda``."""
    by_lam = lam < weights.lambda_s(s)
    by_y = y_of_lambda(s, lam) > branch_threshold(s)
    if by_lam != by_y:
        log.warning("branch criteria disagree for s=%g, lam=%g", s, lam)
    return by_lam == by_y


def thm33_rhs(gamma, d, x):
    """``|x|^{(d-1)/(2d)} e^{-tanh(gamma/d)|x|^2/2}``."""
    r = float(np.linalg.norm(np.atleast_1d(x)))
    return LogScaled.from_log(1, (d - 1) / (2 * d) * math.log(r) - math.tanh(gamma / d) * r * r / 2)


# ---------------------------------------------------------------------------
# Certification


@dataclass(frozen=True)
class GridSpec:
    """``kind`` is ``log`` / ``linear`` (real points) or ``index`` (integers lo..hi)."""

    kind: str
    lo: float
    hi: float
    points: int = 0

    def values(self):
        if self.kind == "log":
            return np.geomspace(self.lo, self.hi, self.points)
        if self.kind == "linear":
            return np.linspace(self.lo, self.hi, self.points)
        if self.kind == "index":
            return np.arange(int(self.lo), int(self.hi) + 1)
        raise DomainError(f"unknown grid kind {self.kind!r}")

    def refined(self):
        """Doubled grid: ``2n - 1`` points on the same range, or twice the index range."""
        if self.kind == "index":
            return GridSpec("index", self.lo, 2 * self.hi)
        return GridSpec(self.kind, self.lo, self.hi, 2 * self.points - 1)


@dataclass
class CertReport:
    theorem_id: str
    grid: dict
    log_C_fit: float
    log_ratio_min: float
    log_ratio_max: float
    log_C_refined: float
    log_ratio_min_refined: float
    passed: bool
    stable: bool
    failures: list = field(default_factory=list)
    points: list = field(default_factory=list)
    log_ratios: list = field(default_factory=list)
    trend: float = 0.0
    params: dict = field(default_factory=dict)
    lhs_log: list = field(default_factory=list)
    rhs_log: list = field(default_factory=list)

    @property
    def C_fit(self):
        return math.exp(self.log_C_fit) if self.log_C_fit < 709 else math.inf

    @property
    def ratio_min(self):
        return math.exp(self.log_ratio_min) if self.log_ratio_min > -745 else 0.0

    @property
    def ratio_max(self):
        return self.C_fit

    @property
    def sharp(self):
        """Lower ratio bounded away from 0 under refinement."""
        return (math.isfinite(self.log_ratio_min) and
                self.log_ratio_min_refined >= self.log_ratio_min - STABILITY)

    def to_dict(self):
        out = asdict(self)
        out.update(C_fit=self.C_fit, ratio_min=self.ratio_min, ratio_max=self.ratio_max, sharp=self.sharp)
        return out

    def to_json(self, path=None):
        text = dumps(self.to_dict())
        if path:
            with open(path, "w", newline="\n") as fh:
                fh.write(text + "\n")
        return text

    def to_csv(self, path):
        """One row per evaluated point; magnitudes as (sign, log) pairs next to the plain value."""
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write("index,point,lhs_sign,lhs_log,lhs,rhs_sign,rhs_log,rhs,log_ratio\n")
            for i, (p, a, b, r) in enumerate(zip(self.points, self.lhs_log, self.rhs_log, self.log_ratios)):
                pt = ";".join(fmt(v) for v in np.atleast_1d(p))
                cols = [str(i), pt]
                for lg in (a, b):
                    cols += ["0" if lg == -math.inf else "1", fmt(lg), fmt(_plain(lg))]
                cols.append(fmt(r))
                fh.write(",".join(cols) + "\n")


def _plain(lg):
    if lg == -math.inf:
        return 0.0
    if lg > 709.78:
        return math.inf
    return math.exp(lg)


def fmt(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return "%.16e" % v


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in o]
    if isinstance(o, (bool, np.bool_)):
        return bool(o)
    if isinstance(o, (int, np.integer)):
        return int(o)
    if isinstance(o, (float, np.floating)):
        v = float(o)
        return fmt(v) if not math.isfinite(v) else _Float(v)
    return o


class _Float(float):
    def __repr__(self):
        return "%.16e" % self


def dumps(obj):
    """JSON with sorted keys, fixed float format, infinities as strings."""
    return _encode(_jsonable(obj))


def _encode(o, indent=0):
    pad = " " * (indent + 1)
    if isinstance(o, dict):
        if not o:
            return "{}"
        items = [f'{pad}{json.dumps(k)}: {_encode(o[k], indent + 1)}' for k in sorted(o)]
        return "{\n" + ",\n".join(items) + "\n" + " " * indent + "}"
    if isinstance(o, list):
        if not o:
            return "[]"
        return "[" + ", ".join(_encode(v, indent + 1) for v in o) + "]"
    if isinstance(o, _Float):
        return repr(o)
    return json.dumps(o)


def _as_log(v):
    if isinstance(v, LogScaled):
        if v.sign <= 0:
            return -math.inf if v.sign == 0 else math.nan
        return v.log_mag
    return float(v)


def _evaluate(points, lhs, rhs, threads=None):
    """``(log lhs, log rhs)`` per point, or None where evaluation fails; order follows ``points``."""
    def one(p):
        try:
            a, b = _as_log(lhs(p)), _as_log(rhs(p))
            if math.isnan(a - b) or b == -math.inf:
                return None
            return a, b
        except (ArithmeticError, ValueError, RuntimeError) as exc:
            log.debug("evaluation failed at %s: %s", p, exc)
            return None

    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(one, points))
    return [one(p) for p in points]


def certify(theorem_id, lhs, rhs, grid, refine=True, threads=None, params=None):
    """Fit ``C`` with ``lhs <= C rhs`` on ``grid`` and check it on the refined grid.

    ``grid`` is a :class:`GridSpec` or a pair ``(points, refined_points)``.
    Points where an evaluator fails are recorded and excluded; more than 1%
    failures forces a fail.
    """
    if isinstance(grid, GridSpec):
        pts, pts_ref = list(grid.values()), list(grid.refined().values()) if refine else None
        gdesc = asdict(grid)
    else:
        pts, pts_ref = list(grid[0]), (list(grid[1]) if refine and len(grid) > 1 else None)
        gdesc = {"kind": "explicit", "points": len(pts)}
    ev = _evaluate(pts, lhs, rhs, threads)
    failures = [_jsonable(p) for p, v in zip(pts, ev) if v is None]
    pairs = [v for v in ev if v is not None]
    good = np.array([a - b for a, b in pairs], dtype=float)
    ok_pts = [p for p, v in zip(pts, ev) if v is not None]
    if good.size == 0:
        return CertReport(theorem_id, gdesc, math.inf, -math.inf, math.inf, math.inf, -math.inf,
                          False, False, failures, params=params or {})
    lc, lmin = float(good.max()), float(good.min())
    if pts_ref is not None:
        rr = _evaluate(pts_ref, lhs, rhs, threads)
        gr = np.array([v[0] - v[1] for v in rr if v is not None], dtype=float)
        failures += [_jsonable(p) for p, v in zip(pts_ref, rr) if v is None and p not in pts]
        lc_ref = float(gr.max()) if gr.size else math.inf
        lmin_ref = float(gr.min()) if gr.size else -math.inf
    else:
        lc_ref, lmin_ref = lc, lmin
    stable = math.isfinite(lc) and math.isfinite(lc_ref) and lc_ref - lc <= STABILITY
    frac_fail = len(failures) / max(1, len(pts) + (len(pts_ref) if pts_ref else 0))
    passed = bool(stable and frac_fail <= 0.01)
    # slope of the log ratio against log|point| over the upper half of the grid
    trend = 0.0
    mags = np.array([float(np.linalg.norm(np.atleast_1d(p))) for p in ok_pts])
    if good.size >= 4 and np.all(mags > 0):
        half = good.size // 2
        xs = np.log(mags[half:])
        if np.ptp(xs) > 0:
            trend = float(np.polyfit(xs, good[half:], 1)[0])
    return CertReport(theorem_id, gdesc, lc, lmin, lc, lc_ref, lmin_ref, passed, bool(stable), failures,
                      [_jsonable(p) for p in ok_pts], good.tolist(), trend, params or {},
                      [a for a, _ in pairs], [b for _, b in pairs])


def select_l(theorem_id, lhs, bound_at_l, grid, l_grid=None):
    """Pick one free parameter ``l`` for a whole certificate.

    Among ``l`` on a 61-point log grid over [1e-3, 1e3], keep those whose
    certificate passes and return the one with the smallest certified bound
    ``C_fit * rhs`` at the last grid point, together with its report.
    """
    l_grid = np.geomspace(1e-3, 1e3, 61) if l_grid is None else l_grid
    top = grid.values()[-1]
    best = None
    for l_ in l_grid:
        rep = certify(theorem_id, lhs, lambda p, l_=l_: bound_at_l(p, float(l_)), grid)
        if not rep.passed:
            continue
        score = rep.log_C_fit + _as_log(bound_at_l(top, float(l_)))
        if best is None or score < best[0]:
            best = (score, float(l_), rep)
    if best is None:
        return None, None
    best[2].params["l"] = best[1]
    return best[1], best[2]
