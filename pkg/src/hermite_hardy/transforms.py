"""Bargmann, short-time Fourier, symplectic Fourier and Fock transforms."""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.special import comb, gammaln

from . import quadrature, specfun
from .errors import AccuracyError, ConsistencyError, CoverageError, DomainError, RangeError
from .spectra import HermiteFactor, Monomial1D, _compositions, _points

PRINTED_BARGMANN_PREFACTOR = math.pi**-0.5


# ---------------------------------------------------------------------------
# Bargmann transform


def _hermite_poly_complex(n, x):
    """``h_n(x) e^{x^2/2}`` at complex ``x`` by the normalised three-term recurrence."""
    p0 = np.full(x.shape, math.pi**-0.25, dtype=complex)
    if n == 0:
        return p0
    p1 = math.sqrt(2.0) * x * p0
    for k in range(1, n):
        p0, p1 = p1, math.sqrt(2.0 / (k + 1)) * x * p1 - math.sqrt(k / (k + 1)) * p0
    return p1


def _bargmann_1d(fac, z, tol=1e-12):
    """``e^{-z^2/4} int fac(xi) e^{-xi^2/2 + z xi} dxi`` for an array of complex ``z``."""
    z = np.asarray(z, dtype=complex)
    A = fac.rate + 1.0
    if isinstance(fac, HermiteFactor):
        # h_n e^{-xi^2/2 + z xi} e^{-z^2/4} = poly(xi) e^{-(xi - z/2)^2}: shift the
        # contour to xi = z/2 + t and the Gauss-Hermite rule is exact
        rule = quadrature.gauss_hermite_rule(fac.n // 2 + 2)
        pts = 0.5 * z.ravel()[:, None] + rule.nodes[None, :]
        return (_hermite_poly_complex(fac.n, pts) @ rule.weights).reshape(z.shape)
    if isinstance(fac, Monomial1D):
        # entire integrand: centre the contour at the saddle z/A and fold the
        # exponent into exp(-A (xi - z/A)^2 / 2) so nothing overflows
        out = np.empty(z.shape, dtype=complex)
        for i, zi in enumerate(z.ravel()):
            c = zi / A

            def g(xi, c=c):
                return xi**fac.k * np.exp(-0.5 * A * (xi - c) ** 2)

            val = quadrature.adaptive_line_integral(g, A, c, tol=tol, atol=1e-300)
            out.ravel()[i] = val * np.exp(zi * zi * (0.5 / A - 0.25))
        return out
    out = np.empty(z.shape, dtype=complex)
    for i, zi in enumerate(z.ravel()):
        c = zi.real / A

        def g(xi, zi=zi, c=c):
            return fac(xi) * np.exp(-0.5 * xi * xi + zi * xi - 0.5 * A * c * c)

        val = quadrature.adaptive_line_integral(g, A, c, tol=tol, atol=1e-300)
        out.ravel()[i] = val * np.exp(0.5 * A * c * c - 0.25 * zi * zi)
    return out


def bargmann_eval(f, z, prefactor=None, tol=1e-12):
    """``Bf(z) = K^d e^{-z.z/4} int f(xi) e^{-|xi|^2/2 + z.xi} dxi``.

    ``K`` defaults to the calibrated constant (see :func:`calibrate_bargmann`).
    ``z`` has shape ``(m, d)`` (or ``(m,)`` when ``d = 1``).
    """
    z = _points(np.asarray(z, dtype=complex), f.dim)
    if np.any(np.abs(z) > 40):
        raise DomainError("|z_j| must not exceed 40")
    K = calibrate_bargmann().constant if prefactor is None else prefactor
    terms = f.separable_terms()
    if terms is None:
        raise DomainError(f"{type(f).__name__} has no quadrature route")
    out = np.zeros(z.shape[0], dtype=complex)
    for coef, factors in terms:
        prod = np.full(z.shape[0], coef, dtype=complex)
        for j, fac in enumerate(factors):
            prod *= _bargmann_1d(fac, z[:, j], tol)
        out += prod
    return K**f.dim * out


@dataclass(frozen=True)
class BargmannCalibration:
    constant: float
    from_h0: float
    from_h1: float
    printed: float = PRINTED_BARGMANN_PREFACTOR


_CALIBRATION = None


def calibrate_bargmann():
    """Fix the one-dimensional prefactor so the Taylor/Hermite coefficient relation is exact for h_0 and h_1.

    The relation asks for ``Bh_0(0) = pi^{-1/4}`` and ``(Bh_1)'(0) = pi^{-1/4}/sqrt 2``.
    Both integrals are evaluated by quadrature; their ratios give two estimates
    of the constant, which must agree.
    """
    global _CALIBRATION
    if _CALIBRATION is None:
        rule = quadrature.gauss_hermite_rule(64)
        x = rule.nodes
        w = rule.weights
        s, lg = specfun.hermite_table(1, x)
        h0 = s[0] * np.exp(lg[0] + 0.5 * x * x)  # h_n e^{x^2/2}: the e^{-x^2} weight absorbs the rest
        h1 = s[1] * np.exp(lg[1] + 0.5 * x * x)
        i0 = float(np.sum(w * h0))  # int h_0 e^{-xi^2/2}
        i1 = float(np.sum(w * h1 * x))  # d/dz at 0 of int h_1 e^{-xi^2/2 + z xi}
        k0 = math.pi**-0.25 / i0
        k1 = math.pi**-0.25 / math.sqrt(2.0) / i1
        if abs(k0 - k1) > 1e-12 * k0:
            raise ConsistencyError(f"calibration from h_0 ({k0}) and h_1 ({k1}) disagree")
        _CALIBRATION = BargmannCalibration(0.5 * (k0 + k1), k0, k1)
    return _CALIBRATION


def taylor_coeffs(g, n_max, r=1.0, nodes=None):
    """Taylor coefficients ``a_0..a_{n_max}`` of an entire ``g`` by the trapezoidal Cauchy integral."""
    if not 0 <= n_max <= 128:
        raise DomainError("n_max must be in [0, 128]")
    if not r > 0:
        raise DomainError("contour radius must be positive")
    if n_max * abs(math.log(r)) > 600:
        better = math.exp(600 / max(n_max, 1)) if r > 1 else math.exp(-600 / max(n_max, 1))
        raise RangeError(f"r^n leaves the double range for r={r}; use r closer to 1, e.g. {better:.3g}")
    M = max(8 * n_max, 64) if nodes is None else int(nodes)
    if M < 8 * n_max:
        raise DomainError("need at least 8 * n_max contour nodes")
    theta = 2 * np.pi * np.arange(M) / M
    vals = np.asarray(g(r * np.exp(1j * theta)), dtype=complex)
    a = np.fft.fft(vals) / M
    n = np.arange(n_max + 1)
    return a[: n_max + 1] / r**n


def bargmann_hermite_coeffs(f, n_max, r=None):
    """``<f, h_n>`` from the Taylor coefficients of ``Bf`` (one dimension).

    The default radius ``sqrt(2 n_max)`` balances the growth of
    ``sqrt(2^n n!)`` against ``r^n`` so rounding is not amplified.
    """
    if f.dim != 1:
        raise DomainError("Taylor route is one-dimensional")
    if r is None:
        r = max(1.0, math.sqrt(2.0 * n_max))
    c = taylor_coeffs(lambda z: bargmann_eval(f, z), n_max, r)
    n = np.arange(n_max + 1)
    return np.exp(0.5 * (n * math.log(2) + gammaln(n + 1) + 0.5 * math.log(math.pi))) * c


# ---------------------------------------------------------------------------
# Short-time Fourier transform


def _stft_1d(fac, gac, x, y, n=None):
    """``(2 pi)^{-1/2} int e^{i(x xi + x y/2)} fac(xi + y) conj(gac(xi)) dxi`` for arrays x, y."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    rf, rg = fac.rate, gac.rate
    R = rf + rg
    sigma = math.sqrt(2.0 / R)

    ok = fac.analytic is not None and gac.analytic is not None

    def run(nn):
        rule = quadrature.gauss_hermite_rule(nn)
        c = -y * rf / R
        if ok:
            # move the line to the stationary point c + ix/R; the modulation no longer cancels
            xi = (c + 1j * x / R)[:, None] + sigma * rule.nodes[None, :]
            vals = fac.analytic(xi + y[:, None]) * np.conj(gac.analytic(np.conj(xi)))
        else:
            xi = c[:, None] + sigma * rule.nodes[None, :]
            vals = np.asarray(fac(xi + y[:, None])) * np.conj(np.asarray(gac(xi)))
        vals = vals * np.exp(1j * x[:, None] * (xi + 0.5 * y[:, None]))
        return sigma * (vals @ rule.scaled_weights)

    if n is not None:
        return run(n) / math.sqrt(2 * math.pi)
    return quadrature.converge(run, 1e-11, atol=1e-17, n0=64, what="STFT quadrature") / math.sqrt(2 * math.pi)


def _flat_eval(fac):
    """Wrap a 1-d factor so it accepts arrays of any shape."""

    def f(x):
        x = np.asarray(x)
        return np.asarray(fac(x.ravel())).reshape(x.shape)

    return f


class _Factor:
    def __init__(self, fac):
        self.rate = fac.rate
        self._f = _flat_eval(fac)
        self.analytic = None
        if isinstance(fac, HermiteFactor):
            self.analytic = lambda z: _hermite_poly_complex(fac.n, z) * np.exp(-0.5 * z * z)
        elif isinstance(fac, Monomial1D):
            self.analytic = fac

    def __call__(self, x):
        return self._f(x)


def stft_eval(f, g, z, n=None):
    """``V(f, g)(x + iy)`` at complex points ``z`` of shape ``(m, d)``."""
    if f.dim != g.dim:
        raise DomainError("f and g must share a dimension")
    z = _points(np.asarray(z, dtype=complex), f.dim)
    tf, tg = f.separable_terms(), g.separable_terms()
    if tf is None or tg is None:
        raise DomainError("STFT needs separable test functions")
    out = np.zeros(z.shape[0], dtype=complex)
    for (p, facs), (q, gacs) in product(tf, tg):
        prod = np.full(z.shape[0], p * np.conj(q), dtype=complex)
        for j in range(f.dim):
            prod *= _stft_1d(_Factor(facs[j]), _Factor(gacs[j]), z[:, j].real, z[:, j].imag, n)
        out += prod
    return out


# ---------------------------------------------------------------------------
# Symplectic Fourier transform (d = 1, sampled on a planar grid)


@dataclass
class PlaneSamples:
    """Values of a function on the tensor grid ``u + i v`` (one complex dimension)."""

    u: np.ndarray
    v: np.ndarray
    values: np.ndarray  # shape (len(u), len(v))

    @classmethod
    def from_function(cls, F, half_width=12.0, step=0.1):
        m = int(round(2 * half_width / step)) + 1
        u = np.linspace(-half_width, half_width, m)
        U, V = np.meshgrid(u, u, indexing="ij")
        vals = np.asarray(F((U + 1j * V).ravel())).reshape(U.shape)
        return cls(u, u.copy(), vals)


def symplectic_ft_eval(F: PlaneSamples, z, coverage_tol=1e-13):
    """``F_S F(z) = int e^{-(i/2) Im(z conj(zeta))} F(zeta) dzeta`` by the trapezoidal rule on the samples.

    The rule is spectrally accurate when ``F`` has decayed to negligible
    size on the grid boundary, which is checked first.
    """
    vals = np.asarray(F.values)
    peak = float(np.max(np.abs(vals)))
    edge = max(np.abs(vals[0]).max(), np.abs(vals[-1]).max(), np.abs(vals[:, 0]).max(),
               np.abs(vals[:, -1]).max())
    if edge > coverage_tol * peak:
        raise CoverageError(f"samples not negligible on the grid boundary ({edge / peak:.2e} of peak)")
    du = F.u[1] - F.u[0]
    dv = F.v[1] - F.v[0]
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    out = np.empty(z.shape, dtype=complex)
    for i, zi in enumerate(z):
        a, b = zi.real, zi.imag
        # Im(z conj(zeta)) = b u - a v
        ku = np.exp(-0.5j * b * F.u)
        kv = np.exp(0.5j * a * F.v)
        out[i] = du * dv * (ku @ vals @ kv)
    return out


# ---------------------------------------------------------------------------
# Fock transform U_nu


def fock_transform_eval(f, nu, z, tol=1e-12):
    """``U_nu f(z) = e^{-z^2/4} int_0^inf f(r) [J_nu(izr)/(izr)^nu] e^{-r^2/2} r^{2nu+1} dr``."""
    if not nu > -0.5:
        raise DomainError(f"nu must exceed -1/2, got {nu}")
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(np.abs(z) > 20):
        raise DomainError("|z| must not exceed 20")
    tau = 2.0 / (f.rate + 1.0)

    def run(n):
        rule = quadrature.gauss_laguerre_rule(n, float(nu))
        u = rule.nodes
        r = np.sqrt(tau * u)
        w = np.exp(rule.log_weights + u - 0.5 * r * r)
        fr = np.asarray(f(r), dtype=complex)
        kern = specfun.bessel_j_norm_array(nu, 1j * np.outer(z, r)) * 2.0**-nu
        return 0.5 * tau ** (nu + 1) * (kern @ (w * fr))

    val = quadrature.converge(run, tol, atol=1e-300, what="Fock transform quadrature")
    return np.exp(-0.25 * z * z) * val


def fock_series(coeffs, nu, z):
    """Right-hand side of the Laguerre series for ``U_nu f``: coefficients ``<f, psi_k^nu>`` in, values out."""
    c = np.asarray(coeffs.values if hasattr(coeffs, "values") else coeffs, dtype=complex)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    k = np.arange(c.size)
    logw = -(nu + 2 * k) * math.log(2) - gammaln(k + nu + 1)
    return ((-1.0) ** k * np.exp(logw) * c) @ (z[None, :] ** (2 * k[:, None]))


# ---------------------------------------------------------------------------
# Projection norms through the STFT


def _laguerre_poly(k, alpha):
    """Monomial coefficients of ``L_k^alpha(t)``."""
    m = np.arange(k + 1)
    return (-1.0) ** m * comb(k + alpha, k - m) / np.exp(gammaln(m + 1))


def projection_norms_via_stft(f, levels, d=None, n=None):
    """``||P_k f||_2`` for each ``k`` in ``levels``, from
    ``(2 pi)^{-d/2} int V(f, f)(z) L_k^{d-1}(|z|^2/2) e^{-|z|^2/4} dz``.

    ``V(f, f)`` is a sum of products of one-dimensional transforms and the
    Laguerre factor expands into powers of ``|z_j|^2/2``, so the ``2d``-dimensional
    integral reduces to planar moments per coordinate.  Each is done with a
    tensor Gauss-Hermite rule for the weight ``e^{-|z_j|^2/4}``.
    """
    d = f.dim if d is None else d
    if d != f.dim or d not in (1, 2):
        raise DomainError("projection norm via the STFT is implemented for d in {1, 2}")
    levels = [int(k) for k in np.atleast_1d(levels)]
    if any(not 0 <= k <= 8 for k in levels):
        raise DomainError("levels must be in [0, 8]")
    terms = f.separable_terms()
    if terms is None:
        raise DomainError("needs a separable test function")
    kmax = max(levels)
    lags = {k: _laguerre_poly(k, d - 1) for k in levels}

    def planar_moments(fac, gac, nn):
        # int V1(x+iy) s^i e^{-s/2} dx dy with s = (x^2 + y^2)/2, i <= kmax
        rule = quadrature.gauss_hermite_rule(nn)
        u = 2.0 * rule.nodes
        X, Y = np.meshgrid(u, u, indexing="ij")
        V = _stft_1d(_Factor(fac), _Factor(gac), X.ravel(), Y.ravel(), n=n or 160).reshape(X.shape)
        S = 0.5 * (X * X + Y * Y)
        W = 4.0 * np.outer(rule.weights, rule.weights)
        return np.array([np.sum(W * V * S**i) for i in range(kmax + 1)])

    def total(nn):
        cache = {}
        acc = np.zeros(len(levels), dtype=complex)
        for (p, facs), (q, gacs) in product(terms, terms):
            mom = []
            for j in range(d):
                key = (facs[j], gacs[j])
                if key not in cache:
                    cache[key] = planar_moments(facs[j], gacs[j], nn)
                mom.append(cache[key])
            for i, k in enumerate(levels):
                s = 0j
                for m in range(k + 1):
                    for beta in _compositions(m, d):
                        mult = math.factorial(m) / math.prod(math.factorial(b) for b in beta)
                        s += lags[k][m] * mult * math.prod(mom[j][beta[j]] for j in range(d))
                acc[i] += p * np.conj(q) * s
        return acc

    scale = f.norm_sq()
    prev = total(40)
    for nn in (80, 160):
        val = total(nn)
        err = float(np.max(np.abs(val - prev)))
        if err <= 1e-11 * scale:
            break
        prev = val
    else:
        raise AccuracyError("planar quadrature for the projection norm did not settle", estimate=err)
    val = val / (2 * math.pi) ** (d / 2)
    tol = 1e-8 * max(scale, float(np.max(np.abs(val))))
    if np.any(val.real < -tol) or np.any(np.abs(val.imag) > tol):
        raise ConsistencyError(f"squared projection norms came out as {val}")
    return np.sqrt(np.maximum(val.real, 0.0))


def projection_norm_via_stft(f, k, d=None, n=None):
    """Single-level version of :func:`projection_norms_via_stft`."""
    return float(projection_norms_via_stft(f, [k], d, n)[0])
