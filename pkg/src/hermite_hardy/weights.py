"""Weight functions, their regularity conditions and Young conjugates."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .errors import ConjugateTruncationWarning, CoverageError, DomainError

VARIANTS = ("zero", "log_power", "tabulated")


@dataclass(frozen=True)
class WeightSpec:
    """A weight ``w`` together with the class parameters ``lam`` and ``c``.

    ``log_power`` is ``(log(1 + t))^{1/(1-2s)}``; ``tabulated`` interpolates
    ``samples = (t, w)`` linearly and is constant beyond the last sample.
    """

    variant: str = "zero"
    s: float | None = None
    samples: tuple | None = field(default=None, repr=False)
    lam: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise DomainError(f"unknown weight variant {self.variant!r}")
        if not (self.lam > 0 and self.c > 0):
            raise DomainError("lam and c must be positive")
        if self.variant == "log_power":
            if self.s is None or not 0 < self.s < 0.5:
                raise DomainError(f"log_power needs s in (0, 1/2), got {self.s}")
        if self.variant == "tabulated":
            if self.samples is None:
                raise DomainError("tabulated weight needs samples")
            t, w = (np.asarray(a, dtype=float) for a in self.samples)
            if t.ndim != 1 or t.shape != w.shape or t.size < 2:
                raise DomainError("samples must be two equal-length 1-d arrays")
            if np.any(np.diff(t) <= 0):
                raise DomainError("sample abscissae must be strictly increasing")
            if t[0] < 0:
                raise DomainError("sample abscissae must be non-negative")
            if np.any(np.diff(w) < 0):
                raise DomainError("tabulated weight must be non-decreasing")
            object.__setattr__(self, "samples", (t, w))

    @classmethod
    def log_power(cls, s, lam=1.0, c=1.0):
        return cls("log_power", s=s, lam=lam, c=c)

    @classmethod
    def from_csv(cls, path, lam=1.0, c=1.0):
        data = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
        if data.shape[1] != 2:
            raise DomainError("weight CSV must have two columns (t, w)")
        return cls("tabulated", samples=(data[:, 0], data[:, 1]), lam=lam, c=c)

    @property
    def exponent(self):
        return 1.0 / (1.0 - 2.0 * self.s)

    @property
    def t_max(self):
        return float(self.samples[0][-1]) if self.variant == "tabulated" else math.inf

    def __call__(self, t):
        return weight_eval(self, t)

    def phi(self, u):
        """``w(e^u)``; for log_power this is ``log(1 + e^u)^p`` computed without overflow."""
        u = np.asarray(u, dtype=float)
        if self.variant == "log_power":
            return np.logaddexp(0.0, u) ** self.exponent
        return weight_eval(self, np.exp(u))

    def scaled(self, t):
        """``lam * w(c t)``, the form entering class membership."""
        return self.lam * weight_eval(self, self.c * np.asarray(t, dtype=float))

    def conjugate(self, v, **kw):
        """Young conjugate of ``phi``, using the polynomial bracket for log_power."""
        if self.variant == "log_power" and "umax" not in kw:
            q = (1 - 2 * self.s) / (2 * self.s)
            kw["umax"] = max(50.0, 5.0 * float(np.max(v)) ** q)
        return young_conjugate(self.phi, v, **kw)


def weight_eval(spec: WeightSpec, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise DomainError("weight argument must be non-negative")
    if spec.variant == "zero":
        out = np.zeros_like(t)
    elif spec.variant == "log_power":
        out = np.log1p(t) ** spec.exponent
    else:
        ts, ws = spec.samples
        out = np.interp(t, ts, ws)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Young conjugate


def _sup_on(phi, v, umax, xtol):
    res = optimize.minimize_scalar(lambda u: -(u * v - float(phi(u))), bounds=(0.0, umax),
                                   method="bounded", options={"xatol": xtol, "maxiter": 2000})
    u = float(res.x)
    best = u * v - float(phi(u))
    # the bounded search never lands exactly on an endpoint
    for end in (0.0, umax):
        val = end * v - float(phi(end))
        if val >= best:
            u, best = end, val
    return best, u


def young_conjugate(phi, v, umax=None, return_argmax=False):
    """``sup_{u >= 0} [u v - phi(u)]`` for convex ``phi``.

    With ``umax=None`` the search interval starts at [0, 50] and is doubled
    while the maximiser sits on its right end (up to 2^20 * 50).  A maximiser
    on the final right end issues :class:`ConjugateTruncationWarning` and the
    boundary value is returned.
    """
    vs = np.atleast_1d(np.asarray(v, dtype=float))
    if np.any(vs < 0):
        raise DomainError("conjugate argument must be non-negative")
    vals = np.empty_like(vs)
    args = np.empty_like(vs)
    for i, vi in enumerate(vs):
        U = 50.0 if umax is None else float(umax)
        tries = 21 if umax is None else 1
        for _ in range(tries):
            xtol = 1e-12 * max(1.0, U)
            best, u = _sup_on(phi, vi, U, xtol)
            if u < U * (1 - 1e-9):
                break
            U *= 2
        else:
            U_last = U / 2
            warnings.warn(ConjugateTruncationWarning(
                f"supremum at the search boundary u={U_last:.6g} (value {best:.6g})"), stacklevel=2)
        vals[i], args[i] = best, u
    if np.ndim(v) == 0:
        vals, args = float(vals[0]), float(args[0])
    return (vals, args) if return_argmax else vals


def exp_conjugate(A, v):
    """Closed-form conjugate of ``A e^{2u}`` on ``u >= 0``."""
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore"):
        ustar = 0.5 * np.log(v / (2 * A))
    out = np.where(ustar >= 0, ustar * v - 0.5 * v, -A)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Auxiliary exponential-plus-weight functions


@dataclass
class AuxRecord:
    psi: float | None
    zeta: float | None
    Psi: float | None
    psi_conj: float | None = None
    zeta_conj: float | None = None
    Psi_conj: float | None = None


def psi_coef(a, c):
    if not 0 < a <= 2 or c <= 0:
        raise DomainError(f"psi_(a,c) needs 0 < a <= 2 and c > 0, got a={a}, c={c}")
    return math.sqrt((2 - a) / (2 + a)) / (2 * c * c)


def zeta_coef(p, q):
    if not -1 < p <= 1 or q <= 0:
        raise DomainError(f"zeta_(p,q) needs -1 < p <= 1 and q > 0, got p={p}, q={q}")
    return math.sqrt((1 - p) / (1 + p)) / (4 * q * q)


def Psi_coef(a, c):
    if not 0 < a <= 1 or c <= 0:
        raise DomainError(f"Psi_(a,c) needs 0 < a <= 1 and c > 0, got a={a}, c={c}")
    return math.sqrt((1 - a) / (1 + a)) / (2 * c * c)


def exp_plus_weight(A, spec):
    """The convex function ``u -> A e^{2u} + w(e^u)``."""

    def f(u):
        return A * np.exp(2 * np.asarray(u, dtype=float)) + spec.phi(u)

    return f


def psi_ac(a, c, spec, t):
    return exp_plus_weight(psi_coef(a, c), spec)(t)


def zeta_pq(p, q, spec, t):
    return exp_plus_weight(zeta_coef(p, q), spec)(t)


def Psi_ac(a, c, spec, t):
    return exp_plus_weight(Psi_coef(a, c), spec)(t)


def aux_weight_functions(a, c, p, q, t, spec=None, v=None):
    """Evaluate the three auxiliary functions at ``t`` (and their conjugates at ``v``).

    Entries whose parameters are out of range are ``None``.
    """
    spec = spec or WeightSpec()
    out = {}
    for name, coef in (("psi", lambda: psi_coef(a, c)), ("zeta", lambda: zeta_coef(p, q)),
                       ("Psi", lambda: Psi_coef(a, c))):
        try:
            A = coef()
        except DomainError:
            out[name] = out[name + "_conj"] = None
            continue
        fn = exp_plus_weight(A, spec)
        out[name] = float(fn(t))
        out[name + "_conj"] = None if v is None else young_conjugate(fn, v)
    return AuxRecord(**out)


# ---------------------------------------------------------------------------
# Quantities P_{s,y}, L_{s,y}, lambda_s


@dataclass(frozen=True)
class Eq1Record:
    P: float
    L: float
    lambda_s: float
    log_plus: float


def log_plus_sqrt2(x):
    """``log(1 + sqrt(2)|x|)``."""
    return np.log1p(math.sqrt(2.0) * np.abs(np.asarray(x, dtype=float)))


def lambda_s(s):
    _check_s(s)
    return 0.5 * (1 - 2 * s) * s ** (2 * s / (1 - 2 * s))


def _check_s(s):
    if not 0 < s < 0.5:
        raise DomainError(f"s must lie in (0, 1/2), got {s}")


def _radicand(s, y, x):
    g = 2 * s / (1 - 2 * s)
    return 1 - 2.0 / x**2 * ((2 * s / y) * log_plus_sqrt2(x)) ** g


def min_admissible_x(s, y):
    """Smallest ``x > 0`` beyond which the radicand of ``P_{s,y}`` stays positive."""
    hi = 1.0
    while _radicand(s, y, hi) <= 0:
        hi *= 2
        if hi > 1e300:
            raise DomainError("radicand never becomes positive")
    # radicand -> -inf as x -> 0 when the bracket is positive; locate the last sign change
    xs = np.geomspace(1e-8, hi, 2000)
    r = _radicand(s, y, xs)
    neg = np.nonzero(r <= 0)[0]
    if neg.size == 0:
        return 0.0
    i = neg[-1]
    return float(optimize.brentq(lambda x: _radicand(s, y, x), xs[i], xs[i + 1], xtol=1e-14))


def eq1_quantities(s, y, x):
    _check_s(s)
    if y <= 0:
        raise DomainError("y must be positive")
    x = abs(float(x))
    if x == 0 or _radicand(s, y, x) < 0:
        raise DomainError(f"P_(s,y)(x) undefined at x={x}; need x >= {min_admissible_x(s, y):.6g}")
    ell = float(log_plus_sqrt2(x))
    P = math.sqrt(_radicand(s, y, x))
    g = 2 * s / (1 - 2 * s)
    L = (1 - 2 * s) * (2 * s / y) ** g * ell ** (1 / (1 - 2 * s))
    return Eq1Record(P=P, L=L, lambda_s=lambda_s(s), log_plus=ell)


# ---------------------------------------------------------------------------
# Regularity conditions


@dataclass
class ConditionReport:
    alpha_holds: bool
    alpha_L: float
    beta_sigma_holds: bool
    beta_tail: float
    beta_star_consistent: bool
    beta_star_L: float
    beta_star_C: float
    gamma_holds: bool
    delta_holds: bool
    sigma: float
    counterexamples: dict = field(default_factory=dict)


def default_grid():
    return np.concatenate([[0.0], np.geomspace(1e-3, 1e6, 361)])


def check_weight_conditions(spec: WeightSpec, sigma=2.0, grid=None):
    """Test the regularity conditions of ``w`` on a sample grid.

    (beta*) is only checked on the grid: the fitted ``(L, C)`` are reported
    and the flag means "numerically consistent".
    """
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    grid = default_grid() if grid is None else np.sort(np.asarray(grid, dtype=float))
    if grid[0] > 0 or grid[-1] < 1e6:
        raise CoverageError("grid must cover [0, 1e6]")
    if spec.variant == "tabulated" and spec.t_max < 1e6:
        raise CoverageError(f"tabulated weight ends at t={spec.t_max:g}, need 1e6")
    bad = {}
    w = np.asarray(weight_eval(spec, grid), dtype=float)
    pos = grid[grid > 0]
    umax = math.log(grid[-1])

    # (alpha): L = sup w(t+s) / (w(t) + w(s) + 1), checked for growth with the range
    T, S = np.meshgrid(pos, pos)
    with np.errstate(over="ignore", invalid="ignore"):
        ratio = weight_eval(spec, T + S) / (weight_eval(spec, T) + weight_eval(spec, S) + 1)
    ratio = np.where(np.isfinite(ratio), ratio, np.inf)
    L_full = max(1.0, float(ratio.max()))
    inner = (T <= math.sqrt(grid[-1])) & (S <= math.sqrt(grid[-1]))
    L_inner = max(1.0, float(ratio[inner].max()))
    alpha = math.isfinite(L_full) and L_full <= 1.05 * L_inner + 1e-12
    if not alpha:
        i = np.unravel_index(np.argmax(ratio), ratio.shape)
        bad["alpha"] = (float(T[i]), float(S[i]))

    # (beta_sigma): int_0^U phi(u) e^{-sigma u} du, tail = I(U) - I(U/2)
    def partial(U):
        pts = None
        if spec.variant == "tabulated":
            lt = np.log(spec.samples[0][spec.samples[0] > 1])
            pts = lt[lt < U] if (lt < U).any() else None
        val, _ = integrate.quad(lambda u: float(spec.phi(u)) * math.exp(-sigma * u), 0.0, U,
                                points=pts, limit=4000, epsabs=1e-12, epsrel=1e-9)
        return val

    I_full, I_half = partial(umax), partial(umax / 2)
    tail = I_full - I_half
    beta = tail <= 1e-3 * max(I_full, 1.0)
    if not beta:
        bad["beta_sigma"] = float(grid[-1])

    # (beta*_sigma): J(t) = int_1^inf w(ts) s^{-1-sigma} ds <= a w(t) + C
    # trapezoid in u = log s, vectorised over t; truncated where the tabulated range ends
    u = np.linspace(0.0, umax + 20, 8001)
    with np.errstate(over="ignore"):
        arg = np.minimum(np.outer(grid, np.exp(u)), spec.t_max)
    integrand = np.asarray(weight_eval(spec, arg)) * np.exp(-sigma * u)
    Js = integrate.trapezoid(integrand, u, axis=1)
    big = w > max(1.0, 0.5 * w[-1]) if w[-1] > 0 else np.zeros_like(w, dtype=bool)
    a = float(np.max(Js[big] / w[big])) if big.any() else 0.0
    C = float(np.max(Js - a * w))
    bstar_L = 1 + 2 * a / math.pi
    # (beta*) implies (beta_sigma), so a failed tail test rules it out
    bstar = beta and math.isfinite(a) and math.isfinite(C)

    # (gamma): log t / w(t) strictly decreasing on the top half of the grid and w > 0
    top = grid >= math.sqrt(grid[-1])
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.log(grid[top]) / w[top]
        dr = np.diff(r)
    ok = np.isfinite(r[1:]) & (dr < 0)
    gamma = bool(np.isfinite(r[0]) and ok.all())
    if not gamma:
        bad["gamma"] = float(grid[top][np.argmin(ok) + 1])

    # (delta): convexity of phi(u) = w(e^u) by second divided differences
    if spec.variant == "tabulated":
        u = np.log(spec.samples[0][spec.samples[0] > 0])
    else:
        u = np.linspace(math.log(pos[0]), umax, 2001)
    ph = np.asarray(spec.phi(u), dtype=float)
    d1 = np.diff(ph) / np.diff(u)
    d2 = np.diff(d1)
    tol = 1e-10 * max(1.0, float(np.max(np.abs(d1))))
    delta = bool(np.all(d2 >= -tol))
    if not delta:
        bad["delta"] = float(np.exp(u[np.argmin(d2) + 1]))

    return ConditionReport(alpha_holds=bool(alpha), alpha_L=L_full, beta_sigma_holds=bool(beta),
                           beta_tail=float(tail), beta_star_consistent=bool(bstar), beta_star_L=bstar_L,
                           beta_star_C=C, gamma_holds=gamma, delta_holds=delta, sigma=float(sigma),
                           counterexamples=bad)
