"""Test functions, Hermite/Laguerre coefficient vectors, synthesis and projection norms.

Coefficients are carried as ``log_abs`` plus a unit ``phase`` so that values
far below the double range (``e^{-y n^{1/(2s)}}`` for small ``s``) survive.
Multi-indices are stored densely in graded-lexicographic order: by total
degree, and within one degree with the first component decreasing.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gammaln

from . import quadrature, specfun
from .errors import AccuracyError, CoverageError, DomainError

MAX_DEGREE = 256


# ---------------------------------------------------------------------------
# Multi-index codec


def _compositions(n, d):
    if d == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(n - first, d - 1):
            yield (first,) + rest


@lru_cache(maxsize=32)
def multi_indices(d: int, N: int) -> np.ndarray:
    """All ``alpha`` in N^d with ``|alpha| <= N``, graded-lexicographic, shape (K, d)."""
    if d < 1 or N < 0:
        raise DomainError("need d >= 1 and N >= 0")
    rows = [a for n in range(N + 1) for a in _compositions(n, d)]
    out = np.array(rows, dtype=np.int64).reshape(-1, d)
    out.setflags(write=False)
    return out


def flat_index(alpha) -> int:
    """Position of ``alpha`` in the graded-lexicographic enumeration."""
    alpha = tuple(int(a) for a in alpha)
    d, n = len(alpha), sum(alpha)
    # number of indices of total degree < n is C(n - 1 + d, d)
    pos = math.comb(n - 1 + d, d) if n > 0 else 0
    rem = n
    for j in range(d - 1):
        # compositions with a larger j-th entry come first
        for bigger in range(rem, alpha[j], -1):
            pos += math.comb(rem - bigger + d - j - 2, d - j - 2)
        rem -= alpha[j]
    return pos


class CoeffVector:
    """Expansion coefficients ``c_alpha`` for ``|alpha| <= N``."""

    def __init__(self, dim, N, log_abs, phase, kind="hermite", nu=None):
        self.dim = int(dim)
        self.N = int(N)
        self.log_abs = np.asarray(log_abs, dtype=float)
        self.phase = np.asarray(phase, dtype=complex)
        self.kind = kind
        self.nu = nu
        K = multi_indices(self.dim, self.N).shape[0]
        if self.log_abs.shape != (K,) or self.phase.shape != (K,):
            raise DomainError(f"expected {K} coefficients for d={dim}, N={N}")

    @classmethod
    def from_values(cls, dim, N, values, **kw):
        values = np.asarray(values, dtype=complex)
        mag = np.abs(values)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_abs = np.log(mag)
            phase = np.where(mag > 0, values / mag, 0)
        return cls(dim, N, log_abs, phase, **kw)

    @classmethod
    def unit(cls, alpha, N=None, **kw):
        alpha = tuple(int(a) for a in np.atleast_1d(alpha))
        N = sum(alpha) if N is None else N
        K = multi_indices(len(alpha), N).shape[0]
        log_abs = np.full(K, -np.inf)
        phase = np.zeros(K, dtype=complex)
        i = flat_index(alpha)
        log_abs[i], phase[i] = 0.0, 1.0
        return cls(len(alpha), N, log_abs, phase, **kw)

    @property
    def indices(self):
        return multi_indices(self.dim, self.N)

    @property
    def degrees(self):
        return self.indices.sum(axis=1)

    @property
    def values(self):
        with np.errstate(under="ignore"):
            return self.phase * np.exp(self.log_abs)

    def __len__(self):
        return self.log_abs.size

    def __getitem__(self, alpha):
        alpha = tuple(int(a) for a in np.atleast_1d(alpha))
        if len(alpha) != self.dim:
            raise DomainError("multi-index has the wrong length")
        if min(alpha) < 0 or sum(alpha) > self.N:
            return 0j
        return complex(self.values[flat_index(alpha)])

    def log_abs_at(self, alpha):
        alpha = tuple(int(a) for a in np.atleast_1d(alpha))
        if sum(alpha) > self.N:
            return -math.inf
        return float(self.log_abs[flat_index(alpha)])

    def truncate(self, N):
        """Restriction (or zero padding) to degree ``N``."""
        K = multi_indices(self.dim, N).shape[0]
        m = min(K, len(self))
        la = np.full(K, -np.inf)
        ph = np.zeros(K, dtype=complex)
        la[:m], ph[:m] = self.log_abs[:m], self.phase[:m]
        return CoeffVector(self.dim, N, la, ph, kind=self.kind, nu=self.nu)

    def scale_phase(self, factor):
        """Multiply ``c_alpha`` by unit-modulus ``factor(|alpha|)``."""
        return CoeffVector(self.dim, self.N, self.log_abs, self.phase * factor(self.degrees),
                           kind=self.kind, nu=self.nu)

    def level_log_norm(self, k):
        """``log (sum_{|alpha| = k} |c_alpha|^2)^{1/2}``."""
        la = self.log_abs[self.degrees == k]
        if la.size == 0 or not np.isfinite(la).any():
            return -math.inf
        top = la.max()
        return float(top + 0.5 * math.log(np.sum(np.exp(2 * (la - top)))))

    def norm_sq(self):
        la = self.log_abs[np.isfinite(self.log_abs)]
        if la.size == 0:
            return 0.0
        return float(math.fsum(np.exp(2 * la)))

    def to_csv(self, path):
        vals = self.values
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"alpha_{j + 1}" for j in range(self.dim)] + ["re", "im"])
            for alpha, v in zip(self.indices, vals):
                w.writerow([int(a) for a in alpha] + ["%.16e" % v.real, "%.16e" % v.imag])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        head, body = rows[0], rows[1:]
        if head[-2:] != ["re", "im"] or not all(h.startswith("alpha_") for h in head[:-2]):
            raise DomainError("coefficient CSV needs header alpha_1..alpha_d,re,im")
        d = len(head) - 2
        alphas = [tuple(int(v) for v in r[:d]) for r in body]
        N = max((sum(a) for a in alphas), default=0)
        vals = np.zeros(multi_indices(d, N).shape[0], dtype=complex)
        for a, r in zip(alphas, body):
            vals[flat_index(a)] = complex(float(r[d]), float(r[d + 1]))
        return cls.from_values(d, N, vals)


# ---------------------------------------------------------------------------
# Test functions


def _points(x, dim):
    x = np.asarray(x)
    if dim == 1 and x.ndim <= 1:
        return x.reshape(-1, 1)
    x = np.atleast_2d(x)
    if x.shape[-1] != dim:
        raise DomainError(f"points of dimension {x.shape[-1]} for a d={dim} function")
    return x


class TestFunction:
    """Base class; subclasses fill in what they can compute in closed form."""

    __test__ = False
    dim = 1
    rate = 1.0

    def __call__(self, x):
        raise NotImplementedError

    def fourier(self):
        return None

    def separable_terms(self):
        return None

    def exact_hermite(self, N):
        return None

    def norm_sq(self):
        c = hermite_coeffs(self, 64)
        return c.norm_sq()


class Monomial1D:
    """``x^k e^{-a x^2 / 2}`` on the line, a factor of a separable term."""

    def __init__(self, a, k):
        self.rate = float(a)
        self.k = int(k)

    def __call__(self, x):
        x = np.asarray(x)
        return x**self.k * np.exp(-0.5 * self.rate * x * x)

    def __eq__(self, other):
        return isinstance(other, Monomial1D) and (self.rate, self.k) == (other.rate, other.k)

    def __hash__(self):
        return hash(("mono", self.rate, self.k))


def _ft_poly(k, a):
    """Polynomial ``g_k`` with ``F[x^k e^{-ax^2/2}](xi) = a^{-1/2} g_k(xi) e^{-xi^2/(2a)}``."""
    g = np.array([1.0 + 0j])
    P = np.polynomial.polynomial
    for _ in range(k):
        g = 1j * P.polysub(P.polyder(g) if g.size > 1 else np.array([0j]), P.polymulx(g) / a)
    return g


class GaussPoly(TestFunction):
    """``e^{-a|x|^2/2} sum_beta p_beta x^beta``.

    Built either from radial coefficients (``coeffs[k]`` multiplies ``|x|^k``,
    odd ``k`` only allowed when ``dim = 1``) or from an explicit monomial
    dictionary ``poly = {beta: p_beta}``.  Coefficients may be complex.
    """

    def __init__(self, a, coeffs=(1.0,), dim=1, poly=None):
        if not a > 0:
            raise DomainError(f"decay rate must be positive, got {a}")
        self.a = float(a)
        self.dim = int(dim)
        if poly is None:
            poly = {}
            for k, ck in enumerate(coeffs):
                if ck == 0:
                    continue
                if self.dim == 1:
                    poly[(k,)] = poly.get((k,), 0) + ck
                    continue
                if k % 2:
                    raise DomainError("odd powers of |x| are not polynomial for d > 1")
                m = k // 2
                for beta in _compositions(m, self.dim):
                    mult = math.factorial(m) / math.prod(math.factorial(b) for b in beta)
                    key = tuple(2 * b for b in beta)
                    poly[key] = poly.get(key, 0) + ck * mult
        self.poly = {tuple(int(b) for b in k): complex(v) for k, v in poly.items() if v != 0}
        if any(len(k) != self.dim for k in self.poly):
            raise DomainError("monomial exponents do not match the dimension")

    @property
    def rate(self):
        return self.a

    @property
    def is_real(self):
        return all(v.imag == 0 for v in self.poly.values())

    def __call__(self, x):
        x = _points(x, self.dim)
        out = np.zeros(x.shape[0], dtype=complex)
        for beta, p in self.poly.items():
            out += p * np.prod(x ** np.array(beta), axis=1)
        out *= np.exp(-0.5 * self.a * np.sum(x * x, axis=1))
        return out.real if self.is_real else out

    def separable_terms(self):
        return [(p, [Monomial1D(self.a, b) for b in beta]) for beta, p in self.poly.items()]

    def fourier(self):
        a, P = self.a, np.polynomial.polynomial
        out = {}
        for beta, p in self.poly.items():
            prod = np.array([[p * a ** (-self.dim / 2)]], dtype=complex).reshape((1,) * self.dim)
            for j, b in enumerate(beta):
                g = _ft_poly(b, a)
                shape = [1] * self.dim
                shape[j] = g.size
                prod = prod * g.reshape(shape)
            for idx in zip(*np.nonzero(prod)):
                out[idx] = out.get(idx, 0) + prod[idx]
        return GaussPoly(1.0 / a, dim=self.dim, poly=out)

    def reflect(self):
        return GaussPoly(self.a, dim=self.dim,
                         poly={b: p * (-1) ** sum(b) for b, p in self.poly.items()})

    def conj(self):
        return GaussPoly(self.a, dim=self.dim, poly={b: p.conjugate() for b, p in self.poly.items()})

    def norm_sq(self):
        def moment(m):
            if m % 2:
                return 0.0
            return math.gamma((m + 1) / 2) / self.a ** ((m + 1) / 2)

        total = 0j
        for b1, p1 in self.poly.items():
            for b2, p2 in self.poly.items():
                total += p1 * p2.conjugate() * math.prod(moment(i + j) for i, j in zip(b1, b2))
        return float(total.real)

    def exact_hermite(self, N):
        """Closed-form coefficients, summed in the log domain."""
        tables = {}
        for beta in self.poly:
            for b in beta:
                if b not in tables:
                    tables[b] = _mono_hermite_log(self.a, b, N)
        idx = multi_indices(self.dim, N)
        K = idx.shape[0]
        logs = np.full((len(self.poly), K), -np.inf)
        phases = np.zeros((len(self.poly), K), dtype=complex)
        for t, (beta, p) in enumerate(self.poly.items()):
            lg = np.full(K, math.log(abs(p)))
            ph = np.full(K, p / abs(p), dtype=complex)
            for j, b in enumerate(beta):
                s_tab, l_tab = tables[b]
                lg = lg + l_tab[idx[:, j]]
                ph = ph * s_tab[idx[:, j]]
            logs[t], phases[t] = lg, ph
        return _combine_terms(self.dim, N, logs, phases)

    def hankel(self, nu):
        """Closed-form Hankel image of a radial Gaussian ``c e^{-a r^2/2}``: ``c a^{-nu-1} e^{-s^2/(2a)}``."""
        if set(self.poly) != {(0,)} or self.dim != 1:
            return None
        return GaussPoly(1.0 / self.a, [self.poly[(0,)] * self.a ** (-nu - 1)])

    def laguerre_exact(self, nu, N):
        """Laguerre coefficients of the radial profile ``e^{-a r^2/2}`` (pure Gaussians only)."""
        if set(self.poly) != {(0,)} or self.dim != 1:
            return None
        rho = (self.a - 1) / (self.a + 1)
        k = np.arange(N + 1)
        c0 = self.poly[(0,)]
        lg = (math.log(abs(c0)) + (nu + 1) * math.log(1 - rho)
              + gammaln(k + nu + 1) - gammaln(k + 1) - math.log(2))
        if rho == 0:
            lg = np.where(k == 0, lg, -np.inf)
        else:
            lg = lg + k * math.log(abs(rho))
        ph = (c0 / abs(c0)) * np.sign(rho) ** k if rho < 0 else np.full(N + 1, c0 / abs(c0))
        return CoeffVector(1, N, lg, np.asarray(ph, dtype=complex), kind="laguerre", nu=nu)


def _combine_terms(dim, N, logs, phases):
    """Sum rows of ``phase * exp(log)`` column-wise without leaving the log domain."""
    K = logs.shape[1]
    if logs.shape[0] == 1:
        return CoeffVector(dim, N, logs[0], np.where(np.isfinite(logs[0]), phases[0], 0))
    out_l = np.full(K, -np.inf)
    out_p = np.zeros(K, dtype=complex)
    for i in range(K):
        m, lscale = specfun.log_sum_complex(logs[:, i], phases[:, i])
        if m != 0:
            out_l[i] = lscale + math.log(abs(m))
            out_p[i] = m / abs(m)
    return CoeffVector(dim, N, out_l, out_p)


def _mono_hermite_log(a, k, N):
    """Signs and logs of ``<x^k e^{-a x^2/2}, h_n>`` for ``n <= N``.

    The Bargmann image of ``x^k e^{-ax^2/2}`` is ``sqrt(2/A) e^{mu z^2/4} q(z)``
    with ``A = 1 + a``, ``mu = (1 - a)/(1 + a)`` and ``q`` a polynomial of
    degree ``k``; the Taylor coefficients of that product give the answer.
    """
    A = 1.0 + a
    mu = (1.0 - a) / (1.0 + a)
    # q(z) = sum_{j even} C(k, j) (j-1)!! A^{-j/2} A^{-(k-j)} z^{k-j}; log of the coefficient of z^i
    q_log = {}
    for j in range(0, k + 1, 2):
        i = k - j
        dfact = math.lgamma(j + 1) - (j // 2) * math.log(2) - math.lgamma(j // 2 + 1)
        q_log[i] = (math.lgamma(k + 1) - math.lgamma(j + 1) - math.lgamma(i + 1) + dfact
                    - 0.5 * j * math.log(A) - i * math.log(A))
    signs = np.zeros(N + 1)
    logs = np.full(N + 1, -np.inf)
    base = 0.5 * math.log(2 / A) + 0.25 * math.log(math.pi)
    for n in range(N + 1):
        tl, ts = [], []
        for i, ql in q_log.items():
            if i > n or (n - i) % 2:
                continue
            m = (n - i) // 2
            if m and mu == 0:
                continue
            lm = m * math.log(abs(mu) / 4) if m else 0.0
            tl.append(ql + lm - math.lgamma(m + 1))
            ts.append(1.0 if mu >= 0 or m % 2 == 0 else -1.0)
        if not tl:
            continue
        s, lg = specfun.log_sum_signed(np.array(ts), np.array(tl))
        if s == 0:
            continue
        signs[n] = s
        logs[n] = lg + base + 0.5 * (n * math.log(2) + math.lgamma(n + 1))
    return signs, logs


class HermiteFactor:
    """``h_n`` on the line as a separable factor."""

    rate = 1.0

    def __init__(self, n):
        self.n = int(n)

    def __call__(self, x):
        x = np.asarray(x)
        s, lg = specfun.hermite_table(self.n, x.real if np.isrealobj(x) else x.real)
        return s[self.n] * np.exp(lg[self.n])

    def __eq__(self, other):
        return isinstance(other, HermiteFactor) and other.n == self.n

    def __hash__(self):
        return hash(("herm", self.n))


class HermiteSeries(TestFunction):
    """Finite Hermite series ``sum_alpha c_alpha h_alpha``."""

    def __init__(self, coeffs: CoeffVector, tail_bound=0.0):
        self.coeffs = coeffs
        self.dim = coeffs.dim
        self.tail_bound = float(tail_bound)

    def __call__(self, x):
        r = synthesize(self.coeffs, x)
        return r.value if np.iscomplexobj(r.value) and np.any(r.value.imag) else r.value.real

    def fourier(self):
        return HermiteSeries(self.coeffs.scale_phase(lambda n: (-1j) ** (n % 4)), self.tail_bound)

    def reflect(self):
        return HermiteSeries(self.coeffs.scale_phase(lambda n: (-1.0) ** (n % 2)), self.tail_bound)

    def separable_terms(self):
        c = self.coeffs
        keep = np.nonzero(np.isfinite(c.log_abs))[0]
        vals = c.values
        return [(vals[i], [HermiteFactor(a) for a in c.indices[i]]) for i in keep]

    def exact_hermite(self, N):
        return self.coeffs.truncate(N)

    def norm_sq(self):
        return self.coeffs.norm_sq()


def hermite_function(alpha, N=None):
    """``h_alpha`` as a test function."""
    return HermiteSeries(CoeffVector.unit(alpha, N))


def coeff_rule_log(s, y, idx):
    """``log c_alpha = -y sum_j alpha_j^{1/(2s)}`` for an index array of shape (K, d)."""
    return -y * np.sum(np.asarray(idx, dtype=float) ** (1.0 / (2 * s)), axis=-1)


def coeff_rule_truncation(s, y, tol=1e-14, cap=MAX_DEGREE):
    """First ``n`` at which the tail majorant drops below ``tol`` times the partial majorant."""
    m = np.arange(cap + 400, dtype=float)
    terms = np.exp(-y * m ** (1.0 / (2 * s))) * math.pi**-0.25
    partial = np.cumsum(terms)
    tail = partial[-1] - partial
    # the neglected part beyond the sampled range is below the last term by superexponential decay
    tail = tail + terms[-1]
    ok = np.nonzero(tail[: cap + 1] < tol * partial[: cap + 1])[0]
    if ok.size == 0:
        raise AccuracyError(f"coefficient rule tail not below {tol:g} by degree {cap}",
                            estimate=float(tail[cap] / partial[cap]))
    n = int(ok[0])
    return n, float(tail[n]), float(partial[n])


class CoeffRule(HermiteSeries):
    """Hermite series with ``c_alpha = exp(-y sum_j alpha_j^{1/(2s)})``, truncated where the tail is negligible."""

    def __init__(self, s, y, dim=1):
        if not 0 < s <= 0.5:
            raise DomainError(f"s must lie in (0, 1/2], got {s}")
        if not y > 0:
            raise DomainError("y must be positive")
        self.s, self.y = float(s), float(y)
        n, tail, partial = coeff_rule_truncation(s, y)
        # a multi-index beyond |alpha| <= d*n has some entry above n
        N = dim * n
        idx = multi_indices(dim, N)
        inside = np.all(idx <= n, axis=1)
        la = np.where(inside, coeff_rule_log(s, y, idx), -np.inf)
        cv = CoeffVector(dim, N, la, np.where(inside, 1.0 + 0j, 0j))
        bound = dim * tail * partial ** (dim - 1)
        super().__init__(cv, tail_bound=bound)

    def exact_hermite(self, N):
        idx = multi_indices(self.dim, N)
        return CoeffVector(self.dim, N, coeff_rule_log(self.s, self.y, idx),
                           np.ones(idx.shape[0], dtype=complex))


class Sampled(TestFunction):
    """One-dimensional samples on a grid, cubic-spline interpolated and zero outside."""

    def __init__(self, grid, values):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 4:
            raise DomainError("grid and values must be matching 1-d arrays of length >= 4")
        if np.any(np.diff(grid) <= 0):
            raise DomainError("grid must be strictly increasing")
        self.grid, self.values = grid, values
        self._spline = CubicSpline(grid, values)

    def __call__(self, x):
        x = np.asarray(x, dtype=float).ravel()
        inside = (x >= self.grid[0]) & (x <= self.grid[-1])
        out = np.zeros(x.shape, dtype=self.values.dtype)
        out[inside] = self._spline(x[inside])
        return out

    def check_coverage(self, tol=1e-12):
        peak = float(np.max(np.abs(self.values)))
        if max(abs(self.values[0]), abs(self.values[-1])) > tol * peak:
            raise CoverageError("samples do not decay to zero at the grid ends")

    def separable_terms(self):
        self.check_coverage()
        return [(1.0, [self])]


class LinearCombination(TestFunction):
    def __init__(self, terms):
        self.terms = [(complex(c), f) for c, f in terms]
        dims = {f.dim for _, f in self.terms}
        if len(dims) != 1:
            raise DomainError("all terms must share a dimension")
        self.dim = dims.pop()

    @property
    def rate(self):
        return min(f.rate for _, f in self.terms)

    def __call__(self, x):
        out = sum(c * np.asarray(f(x), dtype=complex) for c, f in self.terms)
        return out.real if all(c.imag == 0 for c, _ in self.terms) and np.isrealobj(
            self.terms[0][1](np.zeros((1, self.dim)) if self.dim > 1 else np.zeros(1))) else out

    def fourier(self):
        parts = [(c, f.fourier()) for c, f in self.terms]
        return None if any(g is None for _, g in parts) else LinearCombination(parts)

    def separable_terms(self):
        out = []
        for c, f in self.terms:
            t = f.separable_terms()
            if t is None:
                return None
            out += [(c * p, facs) for p, facs in t]
        return out

    def exact_hermite(self, N):
        parts = [(c, f.exact_hermite(N)) for c, f in self.terms]
        if any(v is None for _, v in parts):
            return None
        logs = np.array([np.log(abs(c)) + v.log_abs if c != 0 else np.full(len(v), -np.inf)
                         for c, v in parts])
        phases = np.array([(c / abs(c) if c != 0 else 0) * v.phase for c, v in parts])
        return _combine_terms(self.dim, N, logs, phases)

    def laguerre_exact(self, nu, N):
        parts = [(c, getattr(f, "laguerre_exact", lambda *a: None)(nu, N)) for c, f in self.terms]
        if any(v is None for _, v in parts):
            return None
        vals = sum(c * v.values for c, v in parts)
        return CoeffVector.from_values(1, N, vals, kind="laguerre", nu=nu)


class LaguerreFunction(TestFunction):
    """Radial ``psi_k^nu(r) = L_k^nu(r^2) e^{-r^2/2}``."""

    rate = 1.0

    def __init__(self, k, nu):
        if not nu > -0.5:
            raise DomainError("nu must exceed -1/2")
        self.k, self.nu = int(k), float(nu)

    def __call__(self, r):
        s, lg = specfun.laguerre_table(self.k, self.nu, np.abs(np.asarray(r, dtype=float)))
        return s[self.k] * np.exp(lg[self.k])

    def laguerre_exact(self, nu, N):
        if nu != self.nu:
            return None
        vals = np.zeros(N + 1, dtype=complex)
        if self.k <= N:
            vals[self.k] = specfun.laguerre_psi_norm_sq(self.k, nu)
        return CoeffVector.from_values(1, N, vals, kind="laguerre", nu=nu)

    def hankel(self, nu):
        if nu != self.nu:
            return None
        sign = (-1.0) ** self.k
        return lambda s: sign * self(s)


# ---------------------------------------------------------------------------
# Coefficients


def _factor_table(fac, N, tol):
    """``<fac, h_n>`` for ``n <= N`` by Gauss-Hermite quadrature scaled to the product's decay."""
    rate = fac.rate + 1.0
    sigma = math.sqrt(2.0 / rate)

    def run(n):
        rule = quadrature.gauss_hermite_rule(n)
        x = sigma * rule.nodes
        s, lg = specfun.hermite_table(N, x)
        fx = np.asarray(fac(x))
        w = rule.log_weights + rule.nodes**2
        return sigma * ((s * np.exp(lg + w)) @ fx)

    # absolute floor relative to the factor's L^2 norm, for tables that vanish by symmetry
    fnorm = math.sqrt(abs(quadrature.gaussian_line_integral(lambda x: np.abs(fac(x)) ** 2, 2 * fac.rate)))
    n0 = max(quadrature.DEFAULT_NODES, 2 * N + 32)
    return quadrature.converge(run, tol, atol=1e-15 * max(fnorm, 1e-300), n0=n0,
                               what="Hermite coefficient quadrature")


def hermite_coeffs(f: TestFunction, N: int, method="auto", tol=1e-9) -> CoeffVector:
    """Coefficients ``<f, h_alpha>`` for ``|alpha| <= N``.

    ``method="auto"`` uses the stored coefficients of Hermite series and
    quadrature for everything else; ``"exact"`` forces closed forms and
    ``"quadrature"`` forces tensorised Gauss-Hermite quadrature.
    """
    if not 0 <= N <= MAX_DEGREE:
        raise DomainError(f"degree must be in [0, {MAX_DEGREE}], got {N}")
    if method == "exact" or (method == "auto" and isinstance(f, HermiteSeries)):
        c = f.exact_hermite(N)
        if c is None:
            raise DomainError(f"no closed-form coefficients for {type(f).__name__}")
        return c
    terms = f.separable_terms()
    if terms is None:
        raise DomainError(f"{type(f).__name__} has no quadrature route")
    tables = {}
    idx = multi_indices(f.dim, N)
    out = np.zeros(idx.shape[0], dtype=complex)
    for coef, factors in terms:
        prod = np.full(idx.shape[0], coef, dtype=complex)
        for j, fac in enumerate(factors):
            if fac not in tables:
                tables[fac] = _factor_table(fac, N, tol)
            prod *= tables[fac][idx[:, j]]
        out += prod
    return CoeffVector.from_values(f.dim, N, out)


def laguerre_coeffs(f, nu, N, method="auto", tol=1e-9) -> CoeffVector:
    """``<f, psi_k^nu>`` in ``L^2(R+, r^{2nu+1} dr)`` for ``k <= N``.

    With ``t = r^2`` the inner product is ``(1/2) int f(sqrt t) L_k^nu(t) e^{-t/2} t^nu dt``,
    evaluated with a generalised Gauss-Laguerre rule stretched to the decay of the integrand.
    """
    if not nu > -0.5:
        raise DomainError(f"nu must exceed -1/2, got {nu}")
    if not 0 <= N <= MAX_DEGREE:
        raise DomainError(f"degree must be in [0, {MAX_DEGREE}], got {N}")
    if method in ("auto", "exact"):
        ex = getattr(f, "laguerre_exact", lambda *a: None)(nu, N)
        if ex is not None:
            return ex
        if method == "exact":
            raise DomainError(f"no closed-form Laguerre coefficients for {type(f).__name__}")
    tau = 2.0 / (f.rate + 1.0)

    def run(n):
        rule = quadrature.gauss_laguerre_rule(n, float(nu))
        u = rule.nodes
        r = np.sqrt(tau * u)
        s, lg = specfun.laguerre_table(N, nu, r)
        fr = np.asarray(f(r))
        return 0.5 * tau ** (nu + 1) * ((s * np.exp(lg + rule.log_weights + u)) @ fr)

    n0 = max(quadrature.DEFAULT_NODES, 2 * N + 32)
    vals = quadrature.converge(run, tol, n0=n0, what="Laguerre coefficient quadrature")
    return CoeffVector.from_values(1, N, vals, kind="laguerre", nu=nu)


# ---------------------------------------------------------------------------
# Synthesis and projections


@dataclass
class Synthesis:
    """``mantissa * exp(log_scale)`` per point, with a bound on the neglected tail."""

    mantissa: np.ndarray
    log_scale: np.ndarray
    tail_bound: float = 0.0

    @property
    def value(self):
        with np.errstate(under="ignore", over="ignore"):
            return self.mantissa * np.exp(self.log_scale)


def synthesize(c: CoeffVector, x, tail_bound=None) -> Synthesis:
    """``sum_alpha c_alpha h_alpha(x)`` accumulated in the log domain."""
    x = _points(x, c.dim).astype(float)
    keep = np.nonzero(np.isfinite(c.log_abs))[0]
    idx = c.indices[keep]
    m = x.shape[0]
    logs = np.repeat(c.log_abs[keep][:, None], m, axis=1)
    phases = np.repeat(c.phase[keep][:, None], m, axis=1)
    for j in range(c.dim):
        s, lg = specfun.hermite_table(c.N, x[:, j])
        logs = logs + lg[idx[:, j]]
        phases = phases * s[idx[:, j]]
    mant = np.zeros(m, dtype=complex)
    scale = np.full(m, -np.inf)
    for i in range(m):
        mant[i], scale[i] = specfun.log_sum_complex(logs[:, i], phases[:, i])
    if tail_bound is None:
        tail_bound = 0.0
    return Synthesis(mant, scale, float(tail_bound))


def synthesize_function(f: HermiteSeries, x) -> Synthesis:
    return synthesize(f.coeffs, x, tail_bound=f.tail_bound)


def projection_norm(f, k, d=None, method="auto"):
    """``||P_k f||_2``, the norm of the degree-``k`` block of Hermite coefficients."""
    if d is not None and d != f.dim:
        raise DomainError(f"dimension {d} does not match the function (d={f.dim})")
    return math.exp(projection_log_norm(f, k, method))


def projection_log_norm(f, k, method="auto"):
    c = hermite_coeffs(f, k, method=method)
    return c.level_log_norm(k)
