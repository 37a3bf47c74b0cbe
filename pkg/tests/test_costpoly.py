"""Cost-curve arithmetic, fitting and geometry."""

import math

import numpy as np
import pytest

from polydom.costpoly import (
    DEFAULT_N_MAX,
    CostPolynomial,
    CostSample,
    cost_dominates,
    fit,
    intersections,
    read_timing_csv,
    sum_polys,
    write_timing_csv,
)
from polydom.errors import (
    DegenerateFit,
    IdenticalCurves,
    InsufficientSamples,
    ValidationError,
)


def poly(*coeffs):
    return CostPolynomial(tuple(float(c) for c in coeffs))


def random_poly(rng, degree=4, scale=10.0):
    d = int(rng.integers(0, degree + 1))
    return CostPolynomial(tuple(float(x) for x in rng.uniform(0, scale, d + 1)))


class TestEval:
    def test_direct_arithmetic(self):
        assert poly(7, 4, 3).eval(10) == 347

    def test_constant(self):
        p = poly(50)
        for n in (0, 1, 17, 1e6):
            assert p.eval(n) == 50

    def test_quadratic_vs_linear_at_ten(self):
        # the two curves cross, so neither stays cheaper: at n=10 the
        # linear one costs 62 while the quadratic costs 200
        assert poly(32, 3).eval(10) == 62
        assert poly(0, 0, 2).eval(10) == 200

    def test_negative_size_rejected(self):
        with pytest.raises(ValidationError):
            poly(1, 1).eval(-1)

    def test_nondecreasing_in_n(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            p = random_poly(rng)
            a, b = sorted(rng.uniform(0, 1e6, 2))
            assert p.eval(a) <= p.eval(b)

    def test_negative_coefficients_rejected(self):
        with pytest.raises(ValidationError):
            poly(1, -2)

    def test_degree_cap(self):
        with pytest.raises(ValidationError):
            poly(1, 1, 1, 1, 1, 1)


class TestSum:
    def test_two_linears(self):
        assert sum_polys([poly(1, 1), poly(3, 2)]) == poly(4, 3)

    def test_empty_sum_is_zero(self):
        zero = sum_polys([])
        assert zero == poly(0)
        assert zero.eval(123) == 0

    def test_mixed_degrees(self):
        assert sum_polys([poly(50), poly(0, 0, 2)]) == poly(50, 0, 2)

    def test_associative_and_commutative(self):
        # dyadic coefficients make float addition exact, so the coefficient
        # vectors can be compared verbatim across any grouping
        rng = np.random.default_rng(11)
        for _ in range(50):
            ps = [
                CostPolynomial(tuple(float(x) / 256.0 for x in rng.integers(0, 2000, 3)))
                for _ in range(4)
            ]
            forward = sum_polys(ps)
            backward = sum_polys(ps[::-1])
            regrouped = (ps[0] + ps[1]) + (ps[2] + ps[3])
            assert forward == backward == regrouped


class TestFit:
    def test_noiseless_quadratic_recovery(self):
        samples = [CostSample(n, 2.0 * n * n + 3.0) for n in (1, 2, 3, 4)]
        fitted = fit(samples, degree=2, quantile=1.0)
        assert np.allclose(fitted.coeffs + (0,) * (3 - len(fitted.coeffs)), [3, 0, 2], atol=1e-6)

    def test_constant_feature(self):
        samples = [CostSample(n, 5.0) for n in (1, 5, 9, 20)]
        assert fit(samples, degree=2).coeffs == (5.0,)

    def test_worst_case_quantile_dominates_median_fit(self):
        rng = np.random.default_rng(3)
        sizes = [1, 5, 10, 20, 40]
        samples = []
        for n in sizes:
            for _ in range(9):
                samples.append(CostSample(n, n + 10.0 + float(rng.uniform(0, 0.5))))
        samples.append(CostSample(40, 1000.0))  # one outlier at the largest size
        worst = fit(samples, degree=1, quantile=1.0)
        median = fit(samples, degree=1, quantile=0.5)
        for n in sizes:
            assert worst.eval(n) >= median.eval(n)

    def test_insufficient_sizes(self):
        with pytest.raises(InsufficientSamples):
            fit([CostSample(3, 1.0), CostSample(3, 2.0)], degree=2)

    def test_rank_deficient_design(self):
        samples = [CostSample(10**6 + i, 2.0 * (10**6 + i) + 3.0) for i in range(4)]
        with pytest.raises(DegenerateFit):
            fit(samples, degree=3)

    def test_noiseless_recovery_within_relative_tolerance(self):
        rng = np.random.default_rng(23)
        for _ in range(25):
            true = random_poly(rng, degree=2, scale=5.0)
            samples = [CostSample(n, true.eval(n)) for n in (1, 3, 7, 12, 30)]
            fitted = fit(samples, degree=2)
            for n in (1, 3, 7, 12, 30):
                expect = true.eval(n)
                assert fitted.eval(n) == pytest.approx(expect, rel=1e-6, abs=1e-6)


class TestIntersections:
    def test_quadratic_crossing(self):
        roots = intersections(poly(0, 0, 2), poly(32, 3))
        expected = (3 + math.sqrt(265)) / 4
        assert len(roots) == 1
        assert roots[0] == pytest.approx(expected, abs=1e-9)

    def test_parallel_linears_never_cross(self):
        assert intersections(poly(1, 1), poly(3, 2)) == []

    def test_identical_curves_rejected(self):
        with pytest.raises(IdenticalCurves):
            intersections(poly(5), poly(5, 0))

    def test_grid_scan_agreement(self):
        # curves engineered to cross at well-separated points (base
        # coefficients large enough that base + diff stays a valid curve),
        # then audited against a dense sign-change scan
        rng = np.random.default_rng(5)
        n_max = 1000.0
        grid = np.linspace(1e-9, n_max, 10_000)
        for _ in range(40):
            base = CostPolynomial((float(rng.uniform(150, 300)), float(rng.uniform(250, 400))))
            k = int(rng.integers(1, 3))
            roots_true = np.sort(rng.uniform(5, n_max - 5, k))
            while k == 2 and roots_true[1] - roots_true[0] < 2.0:
                roots_true = np.sort(rng.uniform(5, n_max - 5, k))
            lead = float(rng.uniform(0.01, 0.1))
            diff = np.array([1.0])
            for r in roots_true:
                diff = np.convolve(diff, [-r, 1.0])
            diff *= lead
            padded = list(base.coeffs) + [0.0] * (len(diff) - len(base.coeffs))
            q = CostPolynomial(tuple(a + b for a, b in zip(padded, diff)))
            got = intersections(base, q, n_max=n_max)
            assert len(got) == k
            assert np.allclose(got, roots_true, atol=1e-6)
            vals = np.array([q.eval(g) - base.eval(g) for g in grid])
            sign_changes = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
            assert len(sign_changes) == k
            for idx in sign_changes:
                lo, hi = grid[idx], grid[idx + 1]
                assert sum(1 for r in got if lo <= r <= hi) == 1
            for r in got:
                idx = min(max(int(np.searchsorted(grid, r)) - 1, 0), len(grid) - 2)
                assert np.sign(vals[idx]) * np.sign(vals[idx + 1]) <= 0


class TestCostDominates:
    def test_linear_pair(self):
        assert cost_dominates(poly(1, 1), poly(3, 2))

    def test_crossing_pair(self):
        assert not cost_dominates(poly(0, 0, 2), poly(32, 3))
        assert not cost_dominates(poly(32, 3), poly(0, 0, 2))

    def test_weak_self_dominance(self):
        p = poly(5, 1)
        assert cost_dominates(p, p)

    def test_no_false_positives_at_samples(self):
        rng = np.random.default_rng(13)
        pairs = 0
        while pairs < 60:
            p, q = random_poly(rng), random_poly(rng)
            if p == q:
                continue
            pairs += 1
            if cost_dominates(p, q):
                ns = rng.uniform(0, DEFAULT_N_MAX, 10_000)
                assert all(p.eval(n) <= q.eval(n) + 1e-9 for n in ns)


class TestTimingCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "timings.csv"
        rows = [("colors", 1, 4.0), ("colors", 2, 5.5), ("edges", 1, 0.25)]
        write_timing_csv(str(path), rows)
        loaded = read_timing_csv(str(path))
        assert set(loaded) == {"colors", "edges"}
        assert loaded["colors"] == [CostSample(1, 4.0), CostSample(2, 5.5)]

    def test_missing_columns_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("feature,elapsed_ms\nf,1.0\n")
        with pytest.raises(ValidationError):
            read_timing_csv(str(path))


class TestJson:
    def test_round_trip(self):
        p = poly(3, 0, 2)
        assert CostPolynomial.from_json_dict(p.to_json_dict()) == p
