"""Spectral propagation for ``i u_t = (-Delta + |x|^2) u`` sign convention ``u = sum e^{i(2|a|+d)t} c_a h_a``."""
from __future__ import annotations

import math

import numpy as np

from . import bounds, specfun, spectra, weights
from .errors import AccuracyError, DomainError
from .spectra import CoeffVector, CoeffRule, HermiteSeries

TAIL_TOL = 1e-8


def evolve_coeffs(c: CoeffVector, t, d=None):
    """Multiply ``c_alpha`` by ``e^{i(2|alpha| + d)t}``."""
    d = c.dim if d is None else d
    if d != c.dim:
        raise DomainError(f"dimension {d} does not match the coefficients (d={c.dim})")
    t = float(t)
    return c.scale_phase(lambda n: np.exp(1j * (2 * n + d) * t))


def _coeffs(u0, N):
    """Closed forms when the function has them, quadrature otherwise."""
    try:
        c = u0.exact_hermite(N)
    except (AttributeError, NotImplementedError):
        c = None
    if c is None:
        return spectra.hermite_coeffs(u0, N, method="quadrature"), False
    return c, True


def _abs_block(c: CoeffVector, lo, x):
    """``log sum_{|alpha| > lo} |c_alpha| |h_alpha(x)|`` per point."""
    sel = np.nonzero((c.degrees > lo) & np.isfinite(c.log_abs))[0]
    if sel.size == 0:
        return np.full(x.shape[0], -np.inf)
    logs = np.repeat(c.log_abs[sel][:, None], x.shape[0], axis=1)
    idx = c.indices[sel]
    for j in range(c.dim):
        _, lg = specfun.hermite_table(c.N, x[:, j])
        logs = logs + lg[idx[:, j]]
    top = logs.max(axis=0)
    with np.errstate(invalid="ignore"):
        out = top + np.log(np.sum(np.exp(logs - np.where(np.isfinite(top), top, 0)), axis=0))
    return np.where(np.isfinite(top), out, -np.inf)


def solution_eval(u0, t, x, N=64, full=False):
    """``u(x, t)`` from the truncated Hermite expansion of ``u0``.

    The neglected tail is estimated pointwise from the next block of
    coefficients (degrees ``N < |alpha| <= min(2N, 256)``), doubled, plus any
    tail bound the series carries; above ``1e-8 |u|`` it raises AccuracyError.
    With ``full=True`` a :class:`spectra.Synthesis` is returned (log-domain values).
    """
    if not 0 <= N <= spectra.MAX_DEGREE:
        raise DomainError(f"N must lie in [0, {spectra.MAX_DEGREE}]")
    x = spectra._points(x, u0.dim).astype(float)
    M = min(2 * N, spectra.MAX_DEGREE)
    c, exact = _coeffs(u0, M)
    syn = spectra.synthesize(evolve_coeffs(c.truncate(N), t), x)
    tail_log = _abs_block(c, N, x) + math.log(2)
    if isinstance(u0, HermiteSeries) and not isinstance(u0, CoeffRule):
        # stored coefficients past M and the series' own tail, with |h_alpha| <= pi^{-d/4}
        st = u0.coeffs
        past = st.log_abs[(st.degrees > M) & np.isfinite(st.log_abs)]
        extra = u0.tail_bound + float(np.sum(np.exp(past)))
        if extra > 0:
            tail_log = np.logaddexp(tail_log, math.log(extra) - 0.25 * u0.dim * math.log(math.pi))
    with np.errstate(divide="ignore"):
        val_log = np.log(np.abs(syn.mantissa)) + syn.log_scale
    bad = tail_log > val_log + math.log(TAIL_TOL)
    bad &= np.isfinite(tail_log)
    if np.any(bad):
        i = int(np.nonzero(bad)[0][0])
        raise AccuracyError(f"truncation tail at x={x[i].tolist()} exceeds 1e-8 of |u|; increase N beyond {N}",
                            estimate=float(np.exp(tail_log[i] - val_log[i])))
    syn = spectra.Synthesis(syn.mantissa, syn.log_scale, float(np.exp(tail_log.max())) if tail_log.size else 0.0)
    return syn if full else syn.value


def solution_log_abs(u0, t, x, N=64):
    syn = solution_eval(u0, t, x, N, full=True)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(syn.mantissa)) + syn.log_scale


def quarter_period_error(u0, t, xi, N=64):
    """Max deviation of ``F u(., t)`` from ``e^{i d pi/4} u(., t - pi/4)`` and from ``u(., t + pi/2)``.

    ``F u(t)`` is evaluated through the Fourier eigen-relation on the
    evolved coefficients, independently of the time shift.
    """
    c, _ = _coeffs(u0, N)
    d = u0.dim
    ct = evolve_coeffs(c, t)
    fu = spectra.synthesize(ct.scale_phase(lambda n: (-1j) ** (n % 4)), xi).value
    shifted = np.exp(1j * d * math.pi / 4) * spectra.synthesize(evolve_coeffs(c, t - math.pi / 4), xi).value
    literal = spectra.synthesize(evolve_coeffs(c, t + math.pi / 2), xi).value
    scale = max(1.0, float(np.max(np.abs(fu))))
    return {"corrected": float(np.max(np.abs(fu - shifted)) / scale),
            "literal": float(np.max(np.abs(fu - literal)) / scale)}


def _ray_points(r, d, axis=True):
    """Points at radius ``r`` along the diagonal and (optionally) along the first axis."""
    r = float(r)
    pts = [np.full(d, r / math.sqrt(d))]
    if axis:
        pts.append(np.eye(d)[0] * r)
    return np.array(pts)


def decay_certificate(kind, times, grid: bounds.GridSpec, u0=None, N=None, s=0.25, lam=1 / 32, eps=0.05,
                      gamma=0.6, d=1, threads=None):
    """Certify ``|u(x, t)| <= C * envelope(x)`` jointly over ``times`` and the radial ``grid``.

    ``kind="1.3"``: log-power class (``d = 1``, or the product form for ``d >= 2``),
    default ``u0 = CoeffRule(s, y(lam))``.  ``kind="3.3"``: Gaussian class with
    default ``u0 = exp(-tanh(2 gamma)|x|^2/2)`` and envelope
    ``|x|^{(d-1)/(2d)} e^{-tanh(gamma/d)|x|^2/2}``.
    """
    times = [float(t) for t in times]
    if N is None:
        # the Gaussian datum needs the longer expansion to resolve |x| ~ 12
        N = 120 if kind == "3.3" else 64
    if kind == "1.3":
        bounds.thm13_branch_agreement(s, lam)
        y = bounds.y_of_lambda(s, lam)
        u0 = CoeffRule(s, y, dim=d) if u0 is None else u0

        def env(p):
            return bounds.thm13_rhs(s, lam, eps, p, d=d)

        params = {"s": s, "lam": lam, "eps": eps, "y": y, "d": d,
                  "branch": 1 if lam < weights.lambda_s(s) else 2}
    elif kind == "3.3":
        u0 = spectra.GaussPoly(math.tanh(2 * gamma), dim=d) if u0 is None else u0

        def env(p):
            return bounds.thm33_rhs(gamma, d, p)

        params = {"gamma": gamma, "d": d}
    else:
        raise DomainError(f"unknown decay certificate {kind!r}")
    if u0.dim != d:
        raise DomainError("initial datum dimension mismatch")
    params.update(times=times, N=N)
    # the product envelope needs every coordinate in its admissible range, so only the diagonal
    axis = kind == "3.3"
    tid = kind if d == 1 or kind == "3.3" else "1.4"

    def lhs(p):
        r, t = p
        pts = _ray_points(r, d, axis) if d > 1 else np.array([[r]])
        vals = solution_log_abs(u0, t, pts, N)
        return float(vals.max())

    def rhs(p):
        r, _ = p
        pts = _ray_points(r, d, axis) if d > 1 else np.array([[r]])
        return max(bounds._as_log(env(q if d > 1 else q[0])) for q in pts)

    def joint(g):
        return [(float(r), t) for t in times for r in g.values()]

    return bounds.certify(tid, lhs, rhs, (joint(grid), joint(grid.refined())),
                          threads=threads, params=params)


def mehler_solution(u0, t, x, n=800):
    """``u(x, t)`` in one dimension from the Mehler kernel, integrated against ``u0``.

    Uses ``sum_n w^n h_n(x) h_n(y) = (pi(1-w^2))^{-1/2} exp(-((1+w^2)(x^2+y^2) - 4wxy) / (2(1-w^2)))``
    with ``w = e^{2it}``; ``t`` must avoid multiples of ``pi/2``.
    """
    from . import quadrature

    w = np.exp(2j * t)
    if abs(1 - w * w) < 1e-8:
        raise DomainError("resonant time")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    pref = np.exp(1j * t) / np.sqrt(math.pi * (1 - w * w))
    out = np.empty(x.shape, dtype=complex)
    for i, xi in enumerate(x):
        def kern(y, xi=xi):
            return np.exp(-((1 + w * w) * (xi * xi + y * y) - 4 * w * xi * y) / (2 * (1 - w * w))) * u0(y)
        out[i] = pref * quadrature.gaussian_line_integral(kern, u0.rate, 0.0, n)
    return out
