"""Log-scaled Hermite, Laguerre and Bessel evaluations.

Everything that can under- or overflow is carried as a sign and the natural
log of the magnitude.  The array routines (``hermite_table``,
``laguerre_table``) return all degrees up to ``nmax`` at once and are what
the quadrature and summation code uses internally; the scalar functions wrap
them and return :class:`LogScaled`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError

LOG_PI = math.log(math.pi)
# renormalisation window for the running recurrence magnitude
_RESCALE_HI = math.exp(300.0)
_RESCALE_LO = math.exp(-300.0)


@dataclass(frozen=True)
class LogScaled:
    """Real number ``sign * exp(log_mag)``."""

    sign: int
    log_mag: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise DomainError(f"sign must be -1, 0 or 1, got {self.sign}")
        if (self.sign == 0) != (self.log_mag == -math.inf):
            raise DomainError("sign == 0 exactly when log_mag == -inf")

    @classmethod
    def from_float(cls, value: float) -> "LogScaled":
        if value == 0.0:
            return cls.zero()
        if not math.isfinite(value):
            raise DomainError("cannot represent a non-finite value")
        return cls(1 if value > 0 else -1, math.log(abs(value)))

    @classmethod
    def zero(cls) -> "LogScaled":
        return cls(0, -math.inf)

    @classmethod
    def from_log(cls, sign, log_mag) -> "LogScaled":
        sign = int(sign)
        log_mag = float(log_mag)
        if sign == 0 or log_mag == -math.inf:
            return cls.zero()
        return cls(sign, log_mag)

    def __mul__(self, other):
        if not isinstance(other, LogScaled):
            other = LogScaled.from_float(float(other))
        return LogScaled.from_log(self.sign * other.sign, self.log_mag + other.log_mag)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, LogScaled):
            other = LogScaled.from_float(float(other))
        if other.sign == 0:
            raise ZeroDivisionError("division by a LogScaled zero")
        return LogScaled.from_log(self.sign * other.sign, self.log_mag - other.log_mag)

    def __neg__(self):
        return LogScaled.from_log(-self.sign, self.log_mag)

    def __abs__(self):
        return LogScaled.from_log(abs(self.sign), self.log_mag)

    def __pow__(self, power: float):
        # real powers are taken of the magnitude only
        if self.sign == 0:
            return LogScaled.zero() if power > 0 else LogScaled(1, 0.0)
        sign = self.sign if float(power).is_integer() and int(power) % 2 else 1
        return LogScaled.from_log(sign, power * self.log_mag)

    def __float__(self):
        if self.sign == 0:
            return 0.0
        if self.log_mag > 709.78:
            return math.copysign(math.inf, self.sign)
        return self.sign * math.exp(self.log_mag)

    def to_float(self) -> float:
        return float(self)


def log_sum_signed(signs, logs):
    """Signed log-sum-exp: returns (sign, log|sum|) of ``sum(sign_i * exp(log_i))``.

    The shifted terms are accumulated with ``math.fsum``.
    """
    signs = np.asarray(signs, dtype=float).ravel()
    logs = np.asarray(logs, dtype=float).ravel()
    keep = (signs != 0) & (logs > -np.inf)
    if not keep.any():
        return 0, -math.inf
    signs, logs = signs[keep], logs[keep]
    top = float(logs.max())
    total = math.fsum((signs * np.exp(logs - top)).tolist())
    if total == 0.0:
        return 0, -math.inf
    return (1 if total > 0 else -1), top + math.log(abs(total))


def log_sum_complex(logs, phases):
    """Complex log-sum: returns (mantissa, log_scale) with sum = mantissa*exp(log_scale)."""
    logs = np.asarray(logs, dtype=float).ravel()
    phases = np.asarray(phases, dtype=complex).ravel()
    keep = (logs > -np.inf) & (phases != 0)
    if not keep.any():
        return 0j, -math.inf
    logs, phases = logs[keep], phases[keep]
    top = float(logs.max())
    terms = phases * np.exp(logs - top)
    total = complex(math.fsum(terms.real.tolist()), math.fsum(terms.imag.tolist()))
    return total, top


# ---------------------------------------------------------------------------
# Hermite functions


def hermite_table(nmax: int, x):
    """Signs and log-magnitudes of ``h_0(x) ... h_nmax(x)``.

    Returns two arrays of shape ``(nmax + 1,) + shape(x)``.  Uses the
    normalised three-term recurrence
    ``h_{k+1} = x sqrt(2/(k+1)) h_k - sqrt(k/(k+1)) h_{k-1}`` with the
    Gaussian factor and every rescaling folded into a per-point exponent.
    """
    if nmax < 0:
        raise DomainError("degree must be non-negative")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("x must be finite")
    shape = x.shape
    xs = x.ravel()
    signs = np.empty((nmax + 1, xs.size))
    logs = np.empty((nmax + 1, xs.size))

    scale = -0.5 * xs * xs
    p_prev = np.zeros_like(xs)
    p = np.full_like(xs, math.pi ** -0.25)
    with np.errstate(divide="ignore"):
        signs[0] = 1.0
        logs[0] = np.log(p) + scale
        for k in range(nmax):
            p_next = xs * math.sqrt(2.0 / (k + 1)) * p - math.sqrt(k / (k + 1.0)) * p_prev
            p_prev, p = p, p_next
            r = np.maximum(np.abs(p), np.abs(p_prev))
            fix = (r > _RESCALE_HI) | ((r < _RESCALE_LO) & (r > 0))
            if fix.any():
                f = r[fix]
                p[fix] /= f
                p_prev[fix] /= f
                scale[fix] += np.log(f)
            signs[k + 1] = np.sign(p)
            logs[k + 1] = np.log(np.abs(p)) + scale
    return signs.reshape((nmax + 1,) + shape), logs.reshape((nmax + 1,) + shape)


def hermite_values(nmax: int, x):
    """Plain-double ``h_n(x)`` table (values that underflow become 0)."""
    s, lg = hermite_table(nmax, x)
    with np.errstate(over="ignore"):
        return s * np.exp(lg)


def hermite_log(n: int, x: float) -> LogScaled:
    """``h_n(x)`` as a :class:`LogScaled`."""
    if n < 0:
        raise DomainError("degree must be non-negative")
    if not math.isfinite(x):
        raise DomainError("x must be finite")
    s, lg = hermite_table(n, np.array([x]))
    return LogScaled.from_log(s[n, 0], lg[n, 0])


def hermite_multi_log(alpha, x) -> LogScaled:
    alpha = tuple(int(a) for a in alpha)
    x = np.asarray(x, dtype=float).ravel()
    if len(alpha) != x.size:
        raise DomainError(f"multi-index of length {len(alpha)} but point of dimension {x.size}")
    if any(a < 0 for a in alpha):
        raise DomainError("multi-index entries must be non-negative")
    out = LogScaled(1, 0.0)
    for a, xj in zip(alpha, x):
        out = out * hermite_log(a, float(xj))
    return out


def hermite_extended(n: int, x: float, dps: int = 34) -> LogScaled:
    """Reference value of ``h_n(x)`` from the same recurrence run in ``dps``-digit arithmetic."""
    import mpmath

    if n < 0:
        raise DomainError("degree must be non-negative")
    with mpmath.workdps(dps):
        xm = mpmath.mpf(x)
        p_prev = mpmath.mpf(0)
        p = mpmath.power(mpmath.pi, mpmath.mpf(-0.25)) * mpmath.exp(-xm * xm / 2)
        for k in range(n):
            p, p_prev = xm * mpmath.sqrt(mpmath.mpf(2) / (k + 1)) * p - mpmath.sqrt(mpmath.mpf(k) / (k + 1)) * p_prev, p
        if p == 0:
            return LogScaled.zero()
        return LogScaled(1 if p > 0 else -1, float(mpmath.log(abs(p))))


def plancherel_rotach_log(n: int, x: float) -> LogScaled:
    """Leading Plancherel-Rotach approximation of ``h_n(x)`` beyond the turning point.

    With ``x = sqrt(2n+1) cosh(phi)``::

        h_n(x) ~ exp[(n/2 + 1/4)(2 phi - sinh 2phi)] / (2^{3/4} pi^{1/2} n^{1/4} sinh(phi)^{1/2})

    i.e. ``e^{-x^2/2} H_n(x)`` divided by ``sqrt(2^n n! sqrt(pi))``.
    """
    if n < 1:
        raise DomainError("Plancherel-Rotach form needs n >= 1")
    t = math.sqrt(2 * n + 1)
    if not x > t:
        raise DomainError(f"x = {x} is not beyond the turning point {t}")
    phi = math.acosh(x / t)
    log_mag = (
        (n / 2 + 0.25) * (2 * phi - math.sinh(2 * phi))
        - 0.75 * math.log(2)
        - 0.5 * LOG_PI
        - 0.25 * math.log(n)
        - 0.5 * math.log(math.sinh(phi))
    )
    return LogScaled(1, log_mag)


# ---------------------------------------------------------------------------
# Laguerre functions  psi_k^nu(s) = L_k^nu(s^2) exp(-s^2/2)


def laguerre_table(kmax: int, nu: float, s):
    """Signs and log-magnitudes of ``psi_0^nu(s) ... psi_kmax^nu(s)``."""
    if kmax < 0:
        raise DomainError("degree must be non-negative")
    if not nu > -0.5:
        raise DomainError(f"type parameter nu must exceed -1/2, got {nu}")
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or not np.all(np.isfinite(s)):
        raise DomainError("s must be finite and non-negative")
    shape = s.shape
    t = (s * s).ravel()
    signs = np.empty((kmax + 1, t.size))
    logs = np.empty((kmax + 1, t.size))
    scale = -0.5 * t
    p_prev = np.zeros_like(t)
    p = np.ones_like(t)
    with np.errstate(divide="ignore"):
        signs[0] = 1.0
        logs[0] = scale
        for j in range(kmax):
            p_next = ((2 * j + 1 + nu - t) * p - (j + nu) * p_prev) / (j + 1)
            p_prev, p = p, p_next
            r = np.maximum(np.abs(p), np.abs(p_prev))
            fix = (r > _RESCALE_HI) | ((r < _RESCALE_LO) & (r > 0))
            if fix.any():
                f = r[fix]
                p[fix] /= f
                p_prev[fix] /= f
                scale[fix] += np.log(f)
            signs[j + 1] = np.sign(p)
            logs[j + 1] = np.log(np.abs(p)) + scale
    return signs.reshape((kmax + 1,) + shape), logs.reshape((kmax + 1,) + shape)


def laguerre_psi_log(k: int, nu: float, s: float) -> LogScaled:
    sg, lg = laguerre_table(k, nu, np.array([s]))
    return LogScaled.from_log(sg[k, 0], lg[k, 0])


def laguerre_psi_norm_sq(k: int, nu: float) -> float:
    """Squared norm of ``psi_k^nu`` in ``L^2(R+, r^{2nu+1} dr)``: ``Gamma(k+nu+1) / (2 k!)``."""
    return 0.5 * math.exp(math.lgamma(k + nu + 1) - math.lgamma(k + 1))


# ---------------------------------------------------------------------------
# Bessel


_SERIES_RADIUS = 8.0


def _bessel_series(nu, z):
    w = -(z * z) / 4.0
    term = 1.0 / special.gamma(nu + 1.0) + 0j
    total = term
    k = 0
    while True:
        term = term * w / ((k + 1) * (k + nu + 1))
        total += term
        k += 1
        if abs(term) <= 1e-17 * abs(total) or k > 500:
            return total


def bessel_j_norm(nu: float, z) -> complex:
    """Entire function ``J_nu(z) / (z/2)^nu = sum_k (-1)^k (z/2)^{2k} / (k! Gamma(k+nu+1))``.

    Power series for ``|z| <= 8`` (and along the imaginary axis, where the
    terms do not alternate); otherwise the exponentially scaled AMOS routine
    ``scipy.special.jve`` with the branch of ``(z/2)^nu`` divided out.
    """
    if nu < 0:
        raise DomainError("order must be non-negative")
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError("z must be finite")
    if z.real < 0:
        z = -z  # even function
    az = abs(z)
    if az == 0.0:
        return complex(1.0 / special.gamma(nu + 1.0))
    if az <= _SERIES_RADIUS or (abs(z.real) <= 1e-12 * az and az <= 600):
        return complex(_bessel_series(nu, z))
    scaled = special.jve(nu, z)
    expo = abs(z.imag) - nu * np.log(z / 2)
    return complex(scaled * np.exp(expo))


def bessel_j_norm_array(nu: float, z) -> np.ndarray:
    """Vectorised :func:`bessel_j_norm` (same branch rules)."""
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    zf = z.ravel().copy()
    zf = np.where(zf.real < 0, -zf, zf)
    out = np.empty(zf.shape, dtype=complex)
    az = np.abs(zf)
    series = (az <= _SERIES_RADIUS) | ((np.abs(zf.real) <= 1e-12 * az) & (az <= 600))
    if series.any():
        zs = zf[series]
        w = -(zs * zs) / 4.0
        term = np.full(zs.shape, 1.0 / special.gamma(nu + 1.0), dtype=complex)
        total = term.copy()
        for k in range(600):
            term = term * w / ((k + 1) * (k + nu + 1))
            total += term
            if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
                break
        out[series] = total
    rest = ~series
    if rest.any():
        zr = zf[rest]
        out[rest] = special.jve(nu, zr) * np.exp(np.abs(zr.imag) - nu * np.log(zr / 2))
    return out.reshape(shape)
