"""Gaussian quadrature rules and quadrature-based Fourier / Hankel transforms."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import AccuracyError, DomainError
from . import specfun

DEFAULT_NODES = 200


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights of a Gauss rule.

    ``log_weights`` is always finite; ``weights`` may underflow to 0 for the
    outermost nodes of large rules.  ``scaled_weights`` is ``w_i e^{x_i^2}``
    (Hermite) or ``w_i e^{x_i}`` (Laguerre), i.e. the weights to use when the
    integrand is supplied without the weight function.
    """

    kind: str
    nodes: np.ndarray
    weights: np.ndarray
    log_weights: np.ndarray
    nu: float | None = None

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def scaled_weights(self) -> np.ndarray:
        if self.kind == "hermite":
            return np.exp(self.log_weights + self.nodes**2)
        return np.exp(self.log_weights + self.nodes)


def _golub_welsch(diag, off, log_mu0):
    """Nodes (Newton-polished) and log-weights via the Christoffel function."""
    n = diag.size
    if n == 1:
        return diag.copy(), np.array([log_mu0])
    try:
        nodes = eigh_tridiagonal(diag, off, eigvals_only=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ArithmeticError(f"tridiagonal eigensolver failed: {exc}") from exc

    b = np.concatenate([[0.0], off])  # b[k] couples p_{k-1} and p_k

    def orthonormal_run(x):
        # p_k(x) for k < n (orthonormal, p_0 = mu0^{-1/2}), with a shared per-node scale
        logscale = np.full_like(x, -0.5 * log_mu0)
        p_prev = np.zeros_like(x)
        p = np.ones_like(x)
        dp_prev = np.zeros_like(x)
        dp = np.zeros_like(x)
        sum_sq = np.ones_like(x)  # sum p_k^2 in units of exp(2*logscale)
        for k in range(n):
            bn = off[k] if k < n - 1 else 1.0
            p_next = ((x - diag[k]) * p - b[k] * p_prev) / bn
            dp_next = ((x - diag[k]) * dp + p - b[k] * dp_prev) / bn
            p_prev, p = p, p_next
            dp_prev, dp = dp, dp_next
            if k < n - 1:
                sum_sq += p * p
            r = np.maximum(np.abs(p), np.abs(p_prev))
            fix = r > 1e100
            if fix.any():
                f = r[fix]
                p[fix] /= f
                p_prev[fix] /= f
                dp[fix] /= f
                dp_prev[fix] /= f
                sum_sq[fix] /= f * f
                logscale[fix] += np.log(f)
        # p now holds b_n-scaled p_n (with bn = 1), dp its derivative
        return p, dp, sum_sq, logscale

    for _ in range(2):
        pn, dpn, _, _ = orthonormal_run(nodes)
        step = pn / dpn
        nodes = nodes - np.where(np.isfinite(step), step, 0.0)
    _, _, sum_sq, logscale = orthonormal_run(nodes)
    log_w = -(np.log(sum_sq) + 2 * logscale)
    return nodes, log_w


@lru_cache(maxsize=64)
def gauss_hermite_rule(n: int) -> QuadratureRule:
    """Gauss-Hermite rule for the weight ``e^{-x^2}`` on the real line."""
    if not 1 <= n <= 1024:
        raise DomainError(f"rule size must be in [1, 1024], got {n}")
    diag = np.zeros(n)
    off = np.sqrt(np.arange(1, n) / 2.0)
    nodes, log_w = _golub_welsch(diag, off, 0.5 * math.log(math.pi))
    # exact symmetry
    nodes = 0.5 * (nodes - nodes[::-1])
    log_w = 0.5 * (log_w + log_w[::-1])
    if n % 2:
        nodes[n // 2] = 0.0
    for arr in (nodes, log_w):
        arr.setflags(write=False)
    w = np.exp(log_w)
    w.setflags(write=False)
    return QuadratureRule("hermite", nodes, w, log_w)


@lru_cache(maxsize=64)
def gauss_laguerre_rule(n: int, nu: float = 0.0) -> QuadratureRule:
    """Generalised Gauss-Laguerre rule for the weight ``t^nu e^{-t}`` on (0, inf)."""
    if not 1 <= n <= 1024:
        raise DomainError(f"rule size must be in [1, 1024], got {n}")
    if not nu > -1:
        raise DomainError(f"nu must exceed -1, got {nu}")
    k = np.arange(n)
    diag = 2 * k + nu + 1.0
    kk = np.arange(1, n)
    off = np.sqrt(kk * (kk + nu))
    nodes, log_w = _golub_welsch(diag, off, math.lgamma(nu + 1))
    for arr in (nodes, log_w):
        arr.setflags(write=False)
    w = np.exp(log_w)
    w.setflags(write=False)
    return QuadratureRule("laguerre", nodes, w, log_w, nu=float(nu))


# ---------------------------------------------------------------------------
# Gaussian-weighted line integrals with centre/scale adaptation


def gaussian_line_integral(integrand, rate, center=0.0, n=None):
    """``int_R g(xi) dxi`` for ``g`` decaying roughly like ``exp(-rate (xi - center)^2 / 2)``.

    ``integrand`` receives the (possibly complex, when ``center`` is complex)
    nodes and returns values.  A complex centre shifts the contour, which is
    legitimate for entire integrands with Gaussian decay in the strip.
    Returns the value for a rule of ``n`` nodes (default 200).
    """
    n = DEFAULT_NODES if n is None else n
    rule = gauss_hermite_rule(n)
    sigma = math.sqrt(2.0 / rate)
    xi = center + sigma * rule.nodes
    vals = integrand(xi)
    return sigma * np.sum(rule.scaled_weights * vals, axis=-1)


def node_schedule(n0=None):
    """Rule sizes tried by the adaptive integrators: 200, 400, 800, 1024."""
    n = DEFAULT_NODES if n0 is None else n0
    sizes = []
    while n < 1024:
        sizes.append(n)
        n *= 2
    sizes.append(1024)
    return sizes


def converge(run, tol, atol=0.0, n0=None, what="quadrature"):
    """Evaluate ``run(n)`` on the node schedule until successive results agree."""
    sizes = node_schedule(n0)
    prev = run(sizes[0])
    err = math.inf
    for n in sizes[1:]:
        cur = run(n)
        err = float(np.max(np.abs(cur - prev)))
        if err <= tol * float(np.max(np.abs(cur))) or err <= atol:
            return cur
        prev = cur
    raise AccuracyError(f"{what} did not converge with {sizes[-1]} nodes", estimate=err)


def adaptive_line_integral(integrand, rate, center=0.0, tol=1e-12, n0=None, atol=0.0):
    """Double the node count until two successive answers agree to ``tol`` (relative) or ``atol``."""
    return converge(lambda n: gaussian_line_integral(integrand, rate, center, n), tol, atol, n0)


# ---------------------------------------------------------------------------
# Transforms


def fourier_transform_num(f, xi, method="auto", tol=1e-11):
    """Fourier transform ``(2 pi)^{-d/2} int e^{-i xi.x} f(x) dx`` of a test function.

    ``xi`` is an array of shape ``(m, d)`` (or ``(m,)`` in one dimension).
    With ``method="auto"`` closed forms are used where the test function
    provides one; ``method="quadrature"`` forces tensorised Gauss-Hermite
    quadrature over the separable terms of ``f``.
    """
    xi = _as_points(xi, f.dim)
    if np.any(np.abs(xi) > 80):
        raise DomainError("|xi| must not exceed 80")
    if method == "auto":
        ft = f.fourier()
        if ft is not None:
            return ft(xi)
    terms = f.separable_terms()
    if terms is None:
        raise DomainError(f"{type(f).__name__} has no quadrature route in d={f.dim}")
    out = np.zeros(xi.shape[0], dtype=complex)
    for coef, factors in terms:
        prod = np.full(xi.shape[0], coef, dtype=complex)
        for j, fac in enumerate(factors):
            w = xi[:, j]

            def g(x, w=w, fac=fac):
                return fac(x)[None, :] * np.exp(-1j * np.outer(w, x))

            val = adaptive_line_integral(g, fac.rate, 0.0, tol=tol, atol=1e-15)
            prod *= val / math.sqrt(2 * math.pi)
        out += prod
    return out


def hankel_transform_num(f, nu, s, method="auto", tol=1e-12):
    """Hankel transform ``int_0^inf f(r) J_nu(sr)/(sr)^nu r^{2nu+1} dr``.

    ``f`` is a radial test function (callable on ``r >= 0`` with a Gaussian
    rate attribute ``rate``).  Substituting ``t = r^2`` turns the measure into
    ``t^nu dt / 2``, handled by a generalised Gauss-Laguerre rule scaled to
    the Gaussian decay of ``f``.
    """
    if not nu > -0.5:
        raise DomainError(f"nu must exceed -1/2, got {nu}")
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s < 0):
        raise DomainError("s must be non-negative")
    if method == "auto" and hasattr(f, "hankel"):
        h = f.hankel(nu)
        if h is not None:
            return h(s)
    tau = 2.0 / f.rate

    def run(n):
        rule = gauss_laguerre_rule(n, float(nu))
        u = rule.nodes
        r = np.sqrt(tau * u)
        w = np.exp(rule.log_weights + u)
        fr = np.asarray(f(r))
        kern = specfun.bessel_j_norm_array(nu, np.outer(s, r)).real * 2.0**-nu
        return 0.5 * tau ** (nu + 1) * (kern @ (w * fr))

    return converge(run, tol, atol=1e-16, what="Hankel quadrature")


def _as_points(x, dim):
    x = np.asarray(x, dtype=float)
    if dim == 1 and x.ndim <= 1:
        return x.reshape(-1, 1)
    x = np.atleast_2d(x)
    if x.shape[-1] != dim:
        raise DomainError(f"points of dimension {x.shape[-1]} for a d={dim} function")
    return x
