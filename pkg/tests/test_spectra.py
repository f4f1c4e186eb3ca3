import math

import mpmath
import numpy as np
import pytest
from scipy.special import gammaln, roots_hermite

from hermite_hardy import spectra, specfun, weights
from hermite_hardy.errors import DomainError
from hermite_hardy.spectra import CoeffRule, CoeffVector, GaussPoly


def mp_coeff(f, n):
    """<f, h_n> by adaptive mpmath quadrature of the defining integral."""
    with mpmath.workdps(30):
        norm = mpmath.sqrt(mpmath.mpf(2) ** n * mpmath.factorial(n) * mpmath.sqrt(mpmath.pi))

        def g(x):
            return f(x) * mpmath.hermite(n, x) * mpmath.exp(-x * x / 2) / norm

        return float(mpmath.quad(g, [-mpmath.inf, 0, mpmath.inf]))


class TestCodec:
    def test_graded_lex(self):
        idx = spectra.multi_indices(2, 2)
        assert idx.tolist() == [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]

    def test_flat_roundtrip(self):
        idx = spectra.multi_indices(3, 7)
        assert all(spectra.flat_index(a) == i for i, a in enumerate(idx))

    def test_csv_roundtrip(self, tmp_path):
        c = CoeffVector.from_values(2, 3, np.arange(10) * (1 - 0.5j))
        c.to_csv(tmp_path / "c.csv")
        head = (tmp_path / "c.csv").read_text().splitlines()[0]
        assert head == "alpha_1,alpha_2,re,im"
        back = CoeffVector.from_csv(tmp_path / "c.csv")
        assert np.allclose(back.values, c.values, rtol=1e-15)


class TestHermiteCoeffs:
    def test_unit_vector(self):
        c = spectra.hermite_coeffs(spectra.hermite_function(3), 12, method="quadrature")
        v = c.values
        assert abs(v[3] - 1) < 1e-12
        assert np.max(np.abs(np.delete(v, 3))) < 1e-12

    def test_scaled_gaussian(self):
        gamma = 0.5
        a = math.tanh(2 * gamma)
        f = GaussPoly(a)
        c = spectra.hermite_coeffs(f, 20, method="quadrature").values
        for n in range(0, 21):
            ref = mp_coeff(lambda x: mpmath.exp(-a * x * x / 2), n)
            assert abs(c[n] - ref) < 1e-12
        # even levels only; each step of two multiplies by mu sqrt((2k-1)/(2k))
        assert np.max(np.abs(c[1::2])) < 1e-14
        mu = (1 - a) / (1 + a)
        ce = spectra.hermite_coeffs(f, 20, method="exact").values.real
        ratios = ce[2:21:2] / ce[0:19:2]
        k = np.arange(1, 11)
        assert np.allclose(ratios, np.sqrt(mu * mu * (2 * k - 1) / (2 * k)), rtol=1e-10)

    def test_exact_matches_quadrature(self):
        f = GaussPoly(0.6, [1.0, -0.4, 0.3])
        a = spectra.hermite_coeffs(f, 60, method="exact").values
        b = spectra.hermite_coeffs(f, 60, method="quadrature").values
        assert np.max(np.abs(a - b)) < 1e-12

    def test_parseval(self):
        f = GaussPoly(1.0, [1.0, 0.0, 1.0])
        c = spectra.hermite_coeffs(f, 40, method="quadrature")
        assert c.norm_sq() == pytest.approx(f.norm_sq(), rel=1e-9)

    def test_degree_cap(self):
        with pytest.raises(DomainError):
            spectra.hermite_coeffs(GaussPoly(1.0), 257)

    def test_fourier_commutation(self):
        n = np.arange(41)
        for f in (GaussPoly(0.7, [1.0, 0.5, -0.2, 0.1]), GaussPoly(1.8, [0.3, 1.0])):
            c = spectra.hermite_coeffs(f, 40, method="quadrature").values
            cf = spectra.hermite_coeffs(f.fourier(), 40, method="quadrature").values
            assert np.max(np.abs(cf - (-1j) ** n * c)) < 1e-8


class TestLaguerreCoeffs:
    @pytest.mark.parametrize("nu", [0.0, 0.5, 2.0])
    def test_ground_state(self, nu):
        c = spectra.laguerre_coeffs(GaussPoly(1.0), nu, 8, method="quadrature").values
        assert c[0] == pytest.approx(math.gamma(nu + 1) / 2, rel=1e-12)
        assert np.max(np.abs(c[1:])) < 1e-12

    def test_scaled(self):
        p, nu = 3.0, 0.5
        rho = (p - 1) / (p + 1)
        k = np.arange(16)
        ref = (1 - rho) ** (nu + 1) * rho**k * np.exp(gammaln(k + nu + 1) - gammaln(k + 1)) / 2
        got = spectra.laguerre_coeffs(GaussPoly(p), nu, 15, method="quadrature").values
        assert np.max(np.abs(got - ref) / ref) < 1e-9
        exact = spectra.laguerre_coeffs(GaussPoly(p), nu, 15).values
        assert np.max(np.abs(exact - ref) / ref) < 1e-12

    def test_linearity(self):
        f, g = GaussPoly(2.0), GaussPoly(0.5)
        h = spectra.LinearCombination([(1.5, f), (-2.0, g)])
        kw = dict(nu=1.0, N=10, method="quadrature")
        a = spectra.laguerre_coeffs(h, **kw).values
        b = 1.5 * spectra.laguerre_coeffs(f, **kw).values - 2 * spectra.laguerre_coeffs(g, **kw).values
        assert np.max(np.abs(a - b)) < 1e-12

    def test_bad_nu(self):
        with pytest.raises(DomainError):
            spectra.laguerre_coeffs(GaussPoly(1.0), -0.5, 4)


class TestSynthesis:
    def test_ground_state(self):
        x = np.linspace(-5, 5, 11)
        got = spectra.synthesize(CoeffVector.unit(0), x).value
        assert np.allclose(got, math.pi**-0.25 * np.exp(-x * x / 2), rtol=1e-15)

    def test_round_trip(self):
        f = GaussPoly(0.7, [1.0, 0.2, -0.5])
        x = np.random.default_rng(11).uniform(-3, 3, 10)
        c = spectra.hermite_coeffs(f, 60)
        assert np.max(np.abs(spectra.synthesize(c, x).value - f(x))) < 1e-8

    def test_coeff_rule_bruteforce(self):
        f = CoeffRule(0.25, 1.0)
        x = 6.0
        got = spectra.synthesize_function(f, [x])
        with mpmath.workdps(40):
            ref = 0
            for n in range(401):
                h = mpmath.hermite(n, x) * mpmath.exp(-x * x / 2)
                h /= mpmath.sqrt(mpmath.mpf(2) ** n * mpmath.factorial(n) * mpmath.sqrt(mpmath.pi))
                ref += mpmath.exp(-mpmath.mpf(n) ** 2) * h
        err = abs(complex(got.value[0]) - float(ref))
        assert err <= got.tail_bound + 1e-15 * abs(float(ref))

    def test_tiny_values_survive(self):
        # far out the value underflows doubles; the log scale still carries it
        syn = spectra.synthesize(CoeffVector.unit(0), [40.0])
        assert syn.log_scale[0] + math.log(abs(syn.mantissa[0])) == pytest.approx(-800 - 0.25 * math.log(math.pi))


class TestCoeffRule:
    @pytest.mark.parametrize("s,y", [(0.5, 0.2), (0.25, 0.002)])
    def test_forward(self, s, y):
        f = CoeffRule(s, y)
        x, w = roots_hermite(320)
        u = spectra.synthesize_function(f, x).value.real
        sg, lg = specfun.hermite_table(60, x)
        c = (sg * np.exp(lg + x * x)) @ (w * u)
        n = np.arange(61)
        ref = np.exp(-y * n ** (1 / (2 * s)))
        assert np.max(np.abs(c / ref - 1)) < 1e-6

    def test_truncation(self):
        n, tail, partial = spectra.coeff_rule_truncation(0.25, 1.0)
        assert tail < 1e-14 * partial
        assert n == CoeffRule(0.25, 1.0).coeffs.N

    def test_bad_params(self):
        with pytest.raises(DomainError):
            CoeffRule(0.6, 1.0)
        with pytest.raises(DomainError):
            CoeffRule(0.25, 0.0)

    def test_class_membership(self):
        s, lam = 0.25, 1 / 32
        y = ((1 - 2 * s) / lam) ** ((1 - 2 * s) / (2 * s)) * s
        f = CoeffRule(s, y)
        w = weights.WeightSpec.log_power(s)
        x = np.linspace(0, 12, 121)
        env = -x * x / 2 + lam * w(x)
        for g in (f, f.fourier()):
            syn = spectra.synthesize_function(g, x)
            val = np.log(np.abs(syn.mantissa)) + syn.log_scale
            ratio = val - env
            assert np.all(np.isfinite(ratio))
            # a moderate fitted constant on the whole window
            assert ratio.max() < 5


class TestProjection:
    def test_unit_level(self):
        f = spectra.hermite_function((2, 3))
        for k in range(8):
            assert spectra.projection_norm(f, k) == pytest.approx(1.0 if k == 5 else 0.0, abs=1e-15)

    def test_parseval_2d(self):
        f = GaussPoly(0.9, [1.0, 0.0, 0.4], dim=2)
        total = math.fsum(spectra.projection_norm(f, k, method="quadrature") ** 2 for k in range(0, 80))
        assert total == pytest.approx(f.norm_sq(), rel=1e-8)

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            spectra.projection_norm(GaussPoly(1.0), 1, d=2)
