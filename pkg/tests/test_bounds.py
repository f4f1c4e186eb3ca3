import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hermite_hardy import bounds as B, spectra, weights
from hermite_hardy.errors import DomainError
from hermite_hardy.specfun import LogScaled
from hermite_hardy.spectra import GaussPoly

LP = weights.WeightSpec.log_power(0.25)
ZERO = weights.WeightSpec()


def mp_abs_h(nmax, x):
    """|h_n(x)| for n <= nmax from mpmath, as doubles."""
    with mpmath.workdps(30):
        x = mpmath.mpf(x)
        out = []
        for n in range(nmax + 1):
            v = mpmath.hermite(n, x) * mpmath.exp(-x * x / 2)
            v /= mpmath.sqrt(mpmath.mpf(2) ** n * mpmath.factorial(n) * mpmath.sqrt(mpmath.pi))
            out.append(abs(float(v)))
    return np.array(out)


H_TABLES = {x: mp_abs_h(500, x) for x in (1.5, 2.5, 3.0, 4.0)}


def naive_sum(kappa, beta, s, y, x, nmax=500):
    h = H_TABLES[x][1:nmax + 1]
    n = np.arange(1, nmax + 1, dtype=float)
    return math.fsum(np.exp(-kappa * y * n ** (1 / (2 * s))) * n**-beta * h**kappa)


class TestWeightedSum:
    def test_dominated_first_term(self):
        got = float(B.weighted_hermite_sum(1.0, 0.0, 0.5, 50.0, 3.0))
        assert got == pytest.approx(math.exp(-50) * H_TABLES[3.0][1], rel=1e-6)

    def test_bruteforce_example(self):
        got = float(B.weighted_hermite_sum(2.0, 0.0, 0.5, 0.7, 2.5))
        assert got == pytest.approx(naive_sum(2.0, 0.0, 0.5, 0.7, 2.5), rel=1e-10)

    @pytest.mark.parametrize("kappa", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("beta", [0.0, 1.0])
    @pytest.mark.parametrize("s", [0.25, 0.5])
    @pytest.mark.parametrize("y", [0.4, 0.7, 1.2])
    def test_bruteforce_lattice(self, kappa, beta, s, y):
        for x in (1.5, 2.5, 4.0):
            got = float(B.weighted_hermite_sum(kappa, beta, s, y, x))
            assert got == pytest.approx(naive_sum(kappa, beta, s, y, x), rel=1e-10)

    def test_monotone_in_y(self):
        v = [B.weighted_hermite_sum(1.0, 1.0, 0.25, y, 2.5).log_mag for y in np.linspace(0.2, 5, 25)]
        assert np.all(np.diff(v) < 0)

    def test_domain(self):
        with pytest.raises(DomainError):
            B.weighted_hermite_sum(1.0, 0.0, 0.5, 1.0, 0.9)

    def test_multi_factorises(self):
        x = (1.5, 2.5)
        got = B.weighted_hermite_sum_multi(1.0, 0.0, 0.7, x).log_mag
        # direct double sum over |alpha| >= 1, each index up to 200
        n = np.arange(0, 201, dtype=float)
        t = [np.exp(-0.7 * n) * H_TABLES[xi][:201] for xi in x]
        total = np.outer(t[0], t[1]).sum() - t[0][0] * t[1][0]
        assert got == pytest.approx(math.log(total), abs=1e-12)


class TestThm15:
    def test_continuity_at_switch(self):
        s = 0.25
        y = B.branch_threshold(s)
        for x in (3.0, 10.0, 30.0):
            a = B.thm15_rhs(1.0, 0.0, s, y, x, case=1).log_mag
            b = B.thm15_rhs(1.0, 0.0, s, y, x, case=2).log_mag
            assert abs(a - b) < 1e-9 * max(1, abs(a))

    def test_case_split(self):
        assert B.thm15_case(0.25, 3.0) == 1 and B.thm15_case(0.25, 1.0) == 2

    def test_large_x_slope(self):
        x = np.linspace(20, 40, 21)
        lg = [B.thm15_rhs(2.0, 1.0, 0.25, 3.0, xi).log_mag for xi in x]
        slope = np.polyfit(x * x / 2, lg, 1)[0]
        assert slope == pytest.approx(-2.0, rel=1e-2)

    def test_literal_value(self):
        x, y = 5.0, 3.0
        ell = math.log(1 + math.sqrt(2) * x)
        P = math.sqrt(1 - 2 / x**2 * (0.5 / y * ell))
        L = 0.5 * (0.5 / y) * ell**2
        want = math.log(x) - 0.25 * math.log(ell) - (x * x / 2 * P - L)
        assert B.thm15_rhs(1.0, 0.0, 0.25, y, x).log_mag == pytest.approx(want, rel=1e-13)

    def test_inadmissible(self):
        with pytest.raises(DomainError):
            B.thm15_rhs(1.0, 0.0, 0.25, 0.01, 2.0)


class TestThm31:
    def test_kappa_two(self):
        for y, x in ((0.7, 3.0), (2.0, 10.0)):
            assert B.thm31_rhs(2.0, 0.0, y, x).log_mag == pytest.approx(-x * x * math.tanh(y), rel=1e-15)

    def test_limit(self):
        a = B.thm31_rhs(1.0, 0.5, 40.0, 6.0).log_mag
        assert a == pytest.approx((1 - 0.5 - 1) * math.log(6) - 18, rel=1e-14)

    def test_literal(self):
        want = 4**-1.5 * math.exp(-16 * math.tanh(0.5) / 2)
        assert float(B.thm31_rhs(1.0, 1.0, 0.5, 4.0)) == pytest.approx(want, rel=1e-14)


class TestCoefficientBounds:
    def test_index_zero(self):
        assert float(B.coeff_bound_logweight(0.25, 1.0, 0.05, 0)) == 1.0

    def test_example_16(self):
        assert B.coeff_bound_logweight(0.25, 1.0, 0.0, 16).log_mag == pytest.approx(-32.0, rel=1e-15)

    def test_multi_forms(self):
        k = 7
        one = B.coeff_bound_logweight(0.25, 1.0, 0.05, k).log_mag
        both = B.coeff_bound_logweight(0.25, 1.0, 0.05, (k, 0))
        assert both["statement"].log_mag == pytest.approx(one / 4, rel=1e-14)
        assert both["proof"].log_mag == pytest.approx(one / 2, rel=1e-14)

    def test_gaussian(self):
        assert B.coeff_bound_gaussian(0.5, 1, 9).log_mag == pytest.approx(-0.25 * math.log(9) - 4.5, rel=1e-14)
        assert B.coeff_bound_gaussian(0.5, 2, (4, 6)).log_mag == pytest.approx(10 * math.log(2) - 5, rel=1e-14)
        with pytest.raises(DomainError):
            B.coeff_bound_gaussian(0.5, 2, 0)

    def test_rate_comparison(self):
        d = 2
        thresh = d / (d - 1) * math.log(d)
        for g in (thresh + 0.01, 1.5, 3.0):
            improved, gp, first = B.gaussian_rate_comparison(g, d)
            assert improved and gp == pytest.approx(g - math.log(d)) and gp > g / d
        assert not B.gaussian_rate_comparison(0.5, d)[0]


class TestLaguerreBound:
    def test_k_zero(self):
        assert float(B.laguerre_coeff_bound(2.0, 1.0, 1.0, 0.5, 0, w=ZERO)) == pytest.approx(math.gamma(1.5))
        # with a log-power weight phi*(0) = -phi(0) < 0; the bound only grows
        assert float(B.laguerre_coeff_bound(2.0, 1.0, 1.0, 0.5, 0, w=LP)) >= math.gamma(1.5)

    def test_zero_weight(self):
        k, nu, q = 5, 1.5, 0.8
        want = 2 * k * math.log(2) + math.lgamma(k + nu + 1) + 2 * k * math.log(q)
        assert B.laguerre_coeff_bound(1.0, q, 1.0, nu, k, w=ZERO).log_mag == pytest.approx(want, rel=1e-14)

    def test_dominates_measured(self):
        # one l for the whole index range, picked by the certificate
        nu, k = 0.5, 8
        c = spectra.laguerre_coeffs(GaussPoly(3.0), nu, 24).values
        l, rep = B.select_l("5.1", lambda n: math.log(abs(c[int(n)])),
                            lambda n, l: B.laguerre_coeff_bound(1 / 3, 1.0, 1.0, nu, int(n), l=l, w=LP),
                            B.GridSpec("index", 1, 12))
        bound = B.laguerre_coeff_bound(1 / 3, 1.0, 1.0, nu, k, l=l, w=LP)
        assert rep.passed and math.isfinite(bound.log_mag) and bound.log_mag >= math.log(abs(c[k]))

    def test_per_index_minimum_undercuts(self):
        # minimising l separately at each k lets (1/l) phi*(2lk) ~ l k^2 run off: the value drops below the data
        nu, k = 0.5, 8
        c = spectra.laguerre_coeffs(GaussPoly(3.0), nu, k).values
        assert B.laguerre_coeff_bound(1 / 3, 1.0, 1.0, nu, k, w=LP).log_mag < math.log(abs(c[k]))


def f17():
    return GaussPoly(2.5, [1.0, 0.0, 1.0], dim=2)


class TestProjectionBound:
    def test_k_zero(self):
        assert float(B.projection_norm_bound("1.7a", 2.5, 1.0, 1.0, 3, 0, w=ZERO)) == pytest.approx(2.0)

    def test_zero_weight(self):
        k, d, c = 4, 2, 1.3
        want = 2 * k * math.log(2) + math.lgamma(k + d) + 2 * k * math.log(c / math.sqrt(2))
        assert B.projection_norm_bound("1.7a", 3.0, c, 1.0, d, k, w=ZERO).log_mag == pytest.approx(want, rel=1e-14)

    def test_branch_errors(self):
        with pytest.raises(DomainError, match="1.7b"):
            B.projection_norm_bound("1.7a", 1.0, 1.0, 1.0, 2, 3)
        with pytest.raises(DomainError, match="1.8a"):
            B.projection_norm_bound("1.8b", 1.5, 1.0, 1.0, 2, 3)

    def test_dominates_measured(self):
        f = f17()

        def lhs(k):
            v = spectra.projection_norm(f, int(k), method="exact")
            return math.log(v) if v > 0 else -math.inf

        l, rep = B.select_l("1.7", lhs, lambda k, l: B.projection_norm_bound("1.7a", 2.5, 1.0, 1.0, 2, int(k), l=l, w=LP),
                            B.GridSpec("index", 1, 8))
        assert rep.passed
        assert B.projection_norm_bound("1.7a", 2.5, 1.0, 1.0, 2, 6, l=l, w=LP).log_mag >= lhs(6)

    def test_thm18_value(self):
        k, d, c = 3, 3, 1.0
        q = c / math.sqrt(2)
        want = k * math.log(2) + math.lgamma(k + 1) + (d - 2) / 4 * math.log(2 * k + d) + 2 * k * math.log(q)
        assert B.projection_norm_bound("1.8a", 1.0, c, 1.0, d, k, w=ZERO).log_mag == pytest.approx(want, rel=1e-14)


class TestMonotone:
    @given(st.sampled_from([0.1, 0.25, 0.4]), st.floats(0.05, 5), st.floats(0, 0.5), st.integers(4, 200))
    @settings(max_examples=60, deadline=None)
    def test_logweight(self, s, lam, eps, n):
        a = B.coeff_bound_logweight(s, lam, eps, n).log_mag
        b = B.coeff_bound_logweight(s, lam, eps, n + 1).log_mag
        assert b <= a

    @given(st.integers(1, 3), st.floats(0.01, 4), st.integers(4, 300))
    @settings(max_examples=60, deadline=None)
    def test_gaussian(self, d, gamma, n):
        # the literal bound only decays once gamma exceeds log d (+ the polynomial factor)
        if gamma <= math.log(d) + max(0.0, (d - 2) / 4) * math.log1p(1 / n):
            return
        assert B.coeff_bound_gaussian(gamma, d, n + 1).log_mag <= B.coeff_bound_gaussian(gamma, d, n).log_mag

    @pytest.mark.parametrize("l", [0.5, 1.0, 3.0])
    def test_laguerre_fixed_l(self, l):
        v = [B.laguerre_coeff_bound(2.0, 1.0, 1.0, 0.5, k, l=l, w=LP).log_mag for k in range(4, 40)]
        assert np.all(np.diff(v) <= 0)

    @pytest.mark.parametrize("x0", [3.0, 8.0])
    def test_rhs_in_x(self, x0):
        x = np.linspace(x0, 40, 30)
        for fn in (lambda t: B.thm31_rhs(1.0, 0.0, 0.7, t), lambda t: B.thm15_rhs(1.0, 1.0, 0.25, 3.0, t),
                   lambda t: B.thm33_rhs(0.6, 2, t)):
            v = [fn(t).log_mag for t in x]
            assert np.all(np.diff(v) <= 0)


class TestEnvelopes:
    def test_prop62(self):
        z = np.array([3.0, 4.0])
        want = -2.5 * 25 / 8 + 1.0 * 0.5 * float(LP(1.2 * 5 / 2))
        assert B.prop62_envelope(2.5, 1.2, 0.5, z, w=LP).log_mag == pytest.approx(want, rel=1e-14)

    def test_thm33(self):
        x = np.array([3.0, 4.0])
        want = 0.25 * math.log(5) - math.tanh(0.3) * 12.5
        assert B.thm33_rhs(0.6, 2, x).log_mag == pytest.approx(want, rel=1e-14)

    def test_thm13_branches_agree(self):
        for s in (0.1, 0.25, 0.4):
            ls = weights.lambda_s(s)
            for lam in (0.2 * ls, 0.9 * ls, 1.1 * ls, 3 * ls):
                assert B.thm13_branch_agreement(s, lam)

    def test_y_of_lambda(self):
        assert B.y_of_lambda(0.25, 1 / 32) == pytest.approx(4.0, rel=1e-15)


class TestCertify:
    GRID = B.GridSpec("log", 2.0, 40.0, 20)

    def test_identity(self):
        fn = lambda x: LogScaled.from_log(1, -x * x)
        r = B.certify("id", fn, fn, self.GRID)
        assert r.C_fit == 1.0 and r.ratio_min == 1.0 and r.ratio_max == 1.0 and r.passed

    def test_double(self):
        r = B.certify("x2", lambda x: LogScaled.from_float(2 * math.exp(-x)), lambda x: LogScaled.from_log(1, -x),
                      self.GRID)
        assert r.C_fit == pytest.approx(2.0, rel=1e-14) and r.passed

    def test_plain_floats_are_logs(self):
        r = B.certify("x2", lambda x: math.log(2) - x, lambda x: -x, self.GRID)
        assert r.C_fit == pytest.approx(2.0, rel=1e-14)

    def test_unstable_growth_fails(self):
        # ratio grows like x: refinement keeps the top point, but an index grid extends it
        g = B.GridSpec("index", 1, 20)
        r = B.certify("grow", lambda n: LogScaled.from_log(1, 0.1 * n), lambda n: LogScaled.from_log(1, 0.0), g)
        assert not r.stable and not r.passed

    def test_failures(self):
        def lhs(x):
            if 10 < x < 12:
                raise ArithmeticError("boom")
            return LogScaled.from_log(1, -x)

        r = B.certify("f", lhs, lambda x: LogScaled.from_log(1, -x), self.GRID)
        assert r.failures and not r.passed
        assert len(r.points) + len([p for p in r.failures if p in list(self.GRID.values())]) == 20

    def test_thm31_pipeline(self):
        g = B.GridSpec("log", 2.0, 40.0, 80)
        r = B.certify("3.1", lambda x: B.weighted_hermite_sum(2.0, 0.0, 0.5, 0.7, x),
                      lambda x: B.thm31_rhs(2.0, 0.0, 0.7, x), g)
        assert r.passed and r.sharp
        assert 0 < r.ratio_min <= r.ratio_max < math.inf

    def test_serialisation(self, tmp_path):
        fn = lambda x: LogScaled.from_log(1, -x * x)
        r = B.certify("id", fn, fn, B.GridSpec("linear", 1.0, 3.0, 3))
        text = r.to_json(tmp_path / "r.json")
        d = json.loads(text)
        assert d["theorem_id"] == "id" and d["passed"] is True
        assert list(d) == sorted(d)
        r.to_csv(tmp_path / "r.csv")
        rows = (tmp_path / "r.csv").read_text().splitlines()
        assert rows[0] == "index,point,lhs_sign,lhs_log,lhs,rhs_sign,rhs_log,rhs,log_ratio"
        assert len(rows) == 4

    def test_deterministic(self):
        fn = lambda x: B.thm31_rhs(1.0, 0.0, 0.7, x)
        a = B.certify("d", fn, fn, self.GRID).to_json()
        b = B.certify("d", fn, fn, self.GRID, threads=4).to_json()
        assert a == b

    def test_select_l(self):
        k_grid = B.GridSpec("index", 1, 12)
        nu = 0.5
        c = spectra.laguerre_coeffs(GaussPoly(3.0), nu, 24).values

        def lhs(k):
            return math.log(abs(c[int(k)]))

        def rhs(k, l):
            return B.laguerre_coeff_bound(1 / 3, 1.0, 1.0, nu, int(k), l=l, w=LP)

        l, rep = B.select_l("5.1", lhs, rhs, k_grid)
        assert l is not None and rep.passed and rep.params["l"] == l
        assert 1e-3 <= l <= 1e3
