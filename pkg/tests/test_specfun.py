import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hermite_hardy import specfun
from hermite_hardy.errors import DomainError
from hermite_hardy.specfun import LogScaled


def mp_hermite_fn(n, x, dps=40):
    """h_n(x) straight from mpmath's Hermite polynomial."""
    with mpmath.workdps(dps):
        x = mpmath.mpf(x)
        v = mpmath.hermite(n, x) * mpmath.exp(-x * x / 2)
        v /= mpmath.sqrt(mpmath.mpf(2) ** n * mpmath.factorial(n) * mpmath.sqrt(mpmath.pi))
        return v


def rel_log_err(ls: LogScaled, ref):
    if ref == 0:
        return 0.0 if ls.sign == 0 else math.inf
    assert ls.sign == int(mpmath.sign(ref))
    return abs(math.expm1(ls.log_mag - float(mpmath.log(abs(ref)))))


class TestLogScaled:
    def test_zero_invariant(self):
        assert LogScaled.zero().log_mag == -math.inf
        with pytest.raises(DomainError):
            LogScaled(0, 1.0)
        with pytest.raises(DomainError):
            LogScaled(1, -math.inf)

    def test_product_quotient(self):
        a, b = LogScaled.from_float(-3.0), LogScaled.from_float(0.25)
        assert float(a * b) == pytest.approx(-0.75, rel=1e-15)
        assert float(a / b) == pytest.approx(-12.0, rel=1e-15)
        assert (a * LogScaled.zero()).sign == 0

    def test_overflow_to_inf(self):
        assert float(LogScaled(1, 1000.0)) == math.inf
        assert float(LogScaled(1, -1000.0)) == 0.0


class TestHermite:
    def test_h0_at_zero(self):
        v = specfun.hermite_log(0, 0.0)
        assert v.sign == 1
        assert v.log_mag == pytest.approx(-0.25 * math.log(math.pi), abs=1e-15)

    def test_h1_at_zero(self):
        v = specfun.hermite_log(1, 0.0)
        assert v.sign == 0 and v.log_mag == -math.inf

    @pytest.mark.parametrize("n,x", [(100, 5.0), (256, 0.3), (200, 30.0), (50, 60.0), (256, 59.5), (7, -2.2)])
    def test_against_mpmath(self, n, x):
        assert rel_log_err(specfun.hermite_log(n, x), mp_hermite_fn(n, x)) < 1e-10

    def test_extended_precision_oracle(self):
        a = specfun.hermite_log(100, 5.0)
        b = specfun.hermite_extended(100, 5.0)
        assert a.sign == b.sign
        assert abs(a.log_mag - b.log_mag) < 1e-10

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            specfun.hermite_log(-1, 0.0)
        with pytest.raises(DomainError):
            specfun.hermite_log(3, math.nan)

    def test_multi(self):
        v = specfun.hermite_multi_log((0, 0), (0.0, 0.0))
        assert v.log_mag == pytest.approx(-0.5 * math.log(math.pi), abs=1e-15)
        assert specfun.hermite_multi_log((1, 0), (0.0, 2.3)).sign == 0
        a = specfun.hermite_multi_log((3, 2), (1.5, -0.7))
        b = specfun.hermite_log(3, 1.5) * specfun.hermite_log(2, -0.7)
        assert a.sign == b.sign and a.log_mag == pytest.approx(b.log_mag, abs=1e-14)
        with pytest.raises(DomainError):
            specfun.hermite_multi_log((1, 2), (0.5,))

    def test_recurrence_consistency(self):
        x = np.array([-60.0, -13.1, -0.4, 0.9, 7.7, 25.0, 44.0, 60.0])
        s, lg = specfun.hermite_table(256, x)
        for n in range(1, 255):
            a = np.log(np.abs(x) * math.sqrt(2 / (n + 1))) + lg[n]
            b = math.log(math.sqrt(n / (n + 1))) + lg[n - 1]
            # measured against the larger recurrence term, which sets the cancellation scale
            top = np.maximum(a, b)
            lhs = s[n] * np.sign(x) * np.exp(a - top) - s[n - 1] * np.exp(b - top)
            rhs = s[n + 1] * np.exp(lg[n + 1] - top)
            assert np.max(np.abs(lhs - rhs)) < 1e-11

    @given(st.integers(0, 256), st.floats(-60, 60))
    @settings(max_examples=200, deadline=None)
    def test_uniform_bound_and_parity(self, n, x):
        a, b = specfun.hermite_log(n, x), specfun.hermite_log(n, -x)
        if a.sign:
            assert a.log_mag <= -0.25 * math.log(math.pi) + 1e-12
            assert b.sign == a.sign * (-1) ** n
            assert b.log_mag == a.log_mag


class TestPlancherelRotach:
    def errors(self, phi=0.5, ns=(64, 128, 256, 512, 1024)):
        out = []
        for n in ns:
            x = math.sqrt(2 * n + 1) * math.cosh(phi)
            a, b = specfun.plancherel_rotach_log(n, x), specfun.hermite_log(n, x)
            assert a.sign == b.sign
            out.append(abs(math.expm1(a.log_mag - b.log_mag)))
        return out

    def test_order_one_over_n(self):
        e = self.errors()
        C = 64 * e[0]
        assert e[2] <= C / 256 * 2

    def test_monotone(self):
        e = self.errors(ns=(64, 128, 256, 512))
        assert all(b < a for a, b in zip(e, e[1:]))

    def test_sign_random(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = int(rng.integers(1, 400))
            phi = float(rng.uniform(0.1, 1.5))
            x = math.sqrt(2 * n + 1) * math.cosh(phi)
            assert specfun.plancherel_rotach_log(n, x).sign == specfun.hermite_log(n, x).sign

    def test_outside_region(self):
        with pytest.raises(DomainError):
            specfun.plancherel_rotach_log(10, 2.0)


class TestLaguerre:
    @pytest.mark.parametrize("nu", [0.0, 0.5, 1.5, 3.0])
    @pytest.mark.parametrize("s", [0.0, 0.7, 2.5])
    def test_low_degrees(self, nu, s):
        assert float(specfun.laguerre_psi_log(0, nu, s)) == pytest.approx(math.exp(-s * s / 2), rel=1e-14)
        assert float(specfun.laguerre_psi_log(1, nu, s)) == pytest.approx((1 + nu - s * s) * math.exp(-s * s / 2),
                                                                           rel=1e-13, abs=1e-300)

    @pytest.mark.parametrize("nu", [0.0, 0.5, 2.0])
    @pytest.mark.parametrize("s", [0.3, 1.0, 2.2])
    def test_generating_function(self, nu, s):
        rho = 0.3
        sg, lg = specfun.laguerre_table(40, nu, np.array([s]))
        total = math.fsum((rho**k * sg[k, 0] * math.exp(lg[k, 0])) for k in range(41))
        ref = (1 - rho) ** (-nu - 1) * math.exp(-0.5 * (1 + rho) / (1 - rho) * s * s)
        assert total == pytest.approx(ref, rel=1e-9)

    @pytest.mark.parametrize("k,nu,s", [(30, 0.5, 3.1), (64, 1.5, 7.0), (12, 0.0, 0.45)])
    def test_against_mpmath(self, k, nu, s):
        ref = mpmath.laguerre(k, nu, s * s) * mpmath.exp(-s * s / 2)
        assert rel_log_err(specfun.laguerre_psi_log(k, nu, s), ref) < 1e-10

    def test_bad_nu(self):
        with pytest.raises(DomainError):
            specfun.laguerre_psi_log(2, -0.5, 1.0)

    def test_phi_substitution(self):
        # phi_k^{d-1}(z) = L_k^{d-1}(|z|^2/2) e^{-|z|^2/4}; s = |z|/sqrt 2
        for d in (1, 2, 3):
            for r in (0.4, 1.7, 3.3):
                ref = mpmath.laguerre(5, d - 1, r * r / 2) * mpmath.exp(-r * r / 4)
                assert rel_log_err(specfun.laguerre_psi_log(5, d - 1, r / math.sqrt(2)), ref) < 1e-12


class TestBessel:
    @pytest.mark.parametrize("nu", [0.0, 0.5, 1.0, 2.5])
    def test_at_zero(self, nu):
        assert specfun.bessel_j_norm(nu, 0.0) == pytest.approx(1 / math.gamma(nu + 1), rel=1e-15)

    def test_half_order(self):
        z = 2.0
        j = math.sqrt(2 / (math.pi * z)) * math.sin(z)
        assert specfun.bessel_j_norm(0.5, z).real == pytest.approx(j / (z / 2) ** 0.5, rel=1e-13)

    def test_imaginary_positive(self):
        v = specfun.bessel_j_norm(0.0, 3j)
        assert abs(v.imag) < 1e-14 * abs(v) and v.real > 0

    @pytest.mark.parametrize("nu", [0.0, 0.5, 1.5, 4.0])
    @pytest.mark.parametrize("z", [0.3, 5.0, 9.0, 17.3, 49.0, 3 + 4j, 20j, 35 - 10j])
    def test_against_mpmath(self, nu, z):
        with mpmath.workdps(30):
            ref = complex(mpmath.besselj(nu, z) / (mpmath.mpc(z) / 2) ** nu)
        got = specfun.bessel_j_norm(nu, z)
        assert abs(got - ref) <= 1e-10 * abs(ref)

    def test_non_finite(self):
        with pytest.raises(DomainError):
            specfun.bessel_j_norm(0.0, complex(math.inf, 0))
