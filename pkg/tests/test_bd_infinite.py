import json
import math

import numpy as np
import pytest

from qsamp import (
    GapViolation,
    InvalidParameter,
    NotConverged,
    accelerated_poisson_family,
    amplitude,
    build_general,
    dirichlet_eigenpair,
    dirichlet_form,
    eigen_convergence,
    entrance_check,
    exact_bd_amplitude,
    full_spectrum,
    gap_identity_check,
    hitting_time_from,
    lyapunov_check,
    pi_measure,
    poisson_family,
    rho_family,
    sample_path,
    spectral_bound,
    tail_sum_estimate,
    theorem_bound,
    truncate_neumann,
)
from qsamp.bd_infinite import RateFamily, parse_rate_family


class TestPiMeasure:
    def test_poisson_factorials(self):
        pi = pi_measure(poisson_family(), 8)
        expect = np.array([1.0 / math.factorial(n) for n in range(1, 9)])
        np.testing.assert_allclose(pi, expect, rtol=1e-13)

    def test_single_state(self):
        np.testing.assert_allclose(pi_measure(poisson_family(), 1), [1.0])

    def test_constant_rates_telescope(self):
        fam = RateFamily(lambda n: 3.0 * np.ones_like(np.asarray(n, float)),
                         lambda n: 3.0 * np.ones_like(np.asarray(n, float)))
        np.testing.assert_allclose(pi_measure(fam, 10), np.ones(10), rtol=1e-14)

    def test_accelerated_same_weights_as_poisson(self):
        # the acceleration multiplies b and d by matched factors, so pi is untouched
        a = pi_measure(accelerated_poisson_family(), 12)
        p = pi_measure(poisson_family(), 12)
        np.testing.assert_allclose(a, p, rtol=1e-12)


class TestEntranceCheck:
    def test_poisson_fails_s(self):
        v = entrance_check(poisson_family(), 10_000)
        assert v.r_series_diverges == "yes"
        assert v.s_series_converges == "no"
        assert v.is_entrance_boundary is False

    def test_accelerated_satisfies_both(self):
        v = entrance_check(accelerated_poisson_family(), 10_000)
        assert v.r_series_diverges == "yes"
        assert v.s_series_converges == "yes"
        assert v.is_entrance_boundary is True

    def test_subcritical_drift_fails_s(self):
        # constant rates with rho < 1: the return series has constant terms
        v = entrance_check(rho_family(0.5), 5_000)
        assert v.s_series_converges == "no"
        assert v.r_series_diverges == "yes"

    def test_supercritical_drift_fails_s(self):
        # pi is not summable, so every return term is infinite
        v = entrance_check(rho_family(2.0), 5_000)
        assert v.s_series_converges == "no"

    def test_verdicts_stable_under_cutoff_extension(self):
        for fam in (poisson_family(), accelerated_poisson_family(), rho_family(0.5)):
            a = entrance_check(fam, 2_000)
            b = entrance_check(fam, 10_000)
            for field in ("r_series_diverges", "s_series_converges"):
                va, vb = getattr(a, field), getattr(b, field)
                if va != "inconclusive":
                    assert va == vb

    def test_partial_sums_shapes(self):
        v = entrance_check(poisson_family(), 500)
        assert len(v.r_partial_sums) == 499
        assert len(v.s_partial_sums) == 499
        assert v.z_partial == pytest.approx(math.e - 1.0, rel=1e-10)

    def test_small_cutoff_rejected(self):
        with pytest.raises(InvalidParameter):
            entrance_check(poisson_family(), 5)


class TestTruncateNeumann:
    def test_poisson_n3_rows(self):
        gen = truncate_neumann(poisson_family(), 3)
        k = gen.k_matrix()
        np.testing.assert_allclose(
            k, [[-2.0, 1.0, 0.0], [2.0, -3.0, 1.0], [0.0, 3.0, -3.0]]
        )
        assert gen.absorption_rates[0] == 1.0

    def test_n2_is_valid_two_state(self):
        gen = truncate_neumann(poisson_family(), 2)
        assert gen.n_states == 2
        np.testing.assert_allclose(gen.k_matrix(), [[-2.0, 1.0], [2.0, -2.0]])

    def test_ground_eigenvalue_decreases_with_size(self):
        vals = [
            dirichlet_eigenpair(truncate_neumann(poisson_family(), n)).lambda0
            for n in (5, 10, 20, 40)
        ]
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))

    def test_too_small(self):
        with pytest.raises(InvalidParameter):
            truncate_neumann(poisson_family(), 1)


class TestEigenConvergence:
    def test_accelerated_pipeline(self):
        series = eigen_convergence(
            accelerated_poisson_family(), 4, [2 ** k for k in range(6, 11)], 1e-8
        )
        assert series.lambda_monotone
        assert series.lambda0_prime_monotone
        assert series.phi_nondecreasing
        assert np.isfinite(series.lambda0_limit)
        assert np.isfinite(series.lambda0_prime_limit)
        assert series.lambda0_prime_limit > series.lambda0_limit
        # tables are wide enough and padded with +inf where n >= N
        assert series.lambda_table.shape == (5, 5)
        amps = series.amplitudes()
        assert np.all(np.diff(amps) >= -1e-12)

    def test_null_drift_never_converges(self):
        # b = d = 1 drifts nowhere; the ground eigenvalue decays like 1/N^2
        with pytest.raises(NotConverged):
            eigen_convergence(rho_family(1.0), 2, [64, 128, 256], 1e-12)

    def test_bad_schedule(self):
        with pytest.raises(InvalidParameter):
            eigen_convergence(poisson_family(), 2, [64], 1e-6)
        with pytest.raises(InvalidParameter):
            eigen_convergence(poisson_family(), 2, [64, 32], 1e-6)


class TestTheoremBound:
    def test_tail_zero_reduces_to_finite_spectral_bound(self):
        gen = truncate_neumann(accelerated_poisson_family(), 12)
        rep = full_spectrum(gen)
        finite = spectral_bound(rep)
        limits = {
            "lambda0": rep.eigenvalues[0],
            "lambda0_prime": rep.lambda0_prime,
            "lambdas": rep.eigenvalues[1:],
        }
        mine = theorem_bound(limits, tail_bound=0.0)
        assert mine.bound == pytest.approx(finite.bound, rel=1e-12)

    def test_golden_route(self, golden):
        rep = full_spectrum(golden)
        limits = {
            "lambda0": rep.eigenvalues[0],
            "lambda0_prime": rep.lambda0_prime,
            "lambdas": rep.eigenvalues[1:],
        }
        out = theorem_bound(limits, tail_bound=0.0)
        assert out.bound == pytest.approx(1 + 2 / math.sqrt(5), abs=1e-9)

    def test_tail_inflates_bound_validly(self):
        series = eigen_convergence(
            accelerated_poisson_family(), 4, [64, 128, 256, 512], 1e-8
        )
        base = theorem_bound(series, tail_bound=0.0)
        tail = tail_sum_estimate(accelerated_poisson_family(), 512, 4)
        assert tail > 0
        padded = theorem_bound(series, tail_bound=tail)
        assert padded.bound > base.bound
        assert padded.tail_factor < 1
        # the padded bound dominates every truncation amplitude
        assert np.all(series.amplitudes() <= padded.bound)

    def test_gap_violation(self):
        with pytest.raises(GapViolation):
            theorem_bound({"lambda0": 1.0, "lambda0_prime": 0.9, "lambdas": [2.0]})

    def test_tail_sum_decreases_in_n_used(self):
        fam = accelerated_poisson_family()
        sums = [tail_sum_estimate(fam, 256, j) for j in (0, 3, 8)]
        assert sums[0] > sums[1] > sums[2] > 0


class TestGapIdentity:
    def test_two_state_closed_form(self):
        # b = d = 1 truncated at 2 is the golden-ratio instance where the
        # identity can be checked by hand
        assert gap_identity_check(rho_family(1.0), 2) <= 1e-12

    def test_accelerated_small_residual(self):
        for n in (64, 256, 1024):
            assert gap_identity_check(accelerated_poisson_family(), n) <= 1e-8

    def test_poisson_small_residual(self):
        assert gap_identity_check(poisson_family(), 128) <= 1e-8


class TestHittingTime:
    def test_from_one_is_zero(self):
        assert hitting_time_from(poisson_family(), 1) == 0.0

    def test_unit_rates_quadratic(self):
        for x in (2, 5, 9):
            assert hitting_time_from(rho_family(1.0), x) == pytest.approx(x * (x - 1) / 2)

    def test_limit_matches_s_series(self):
        # for the accelerated family the x -> infinity limit is the (S) value
        fam = accelerated_poisson_family()
        v = entrance_check(fam, 4000)
        late = hitting_time_from(fam, 4000)
        assert late == pytest.approx(float(v.s_partial_sums[-1]), rel=1e-6)

    def test_monte_carlo_cross_check(self):
        # the formula value is the reflected-truncation hitting time, so
        # simulate exactly that chain from its top state
        x = 5
        gen = truncate_neumann(rho_family(1.0), x)
        rng = np.random.default_rng(33)
        times = [sample_path(gen, x, 1, rng).elapsed for _ in range(4000)]
        mean = float(np.mean(times))
        se = float(np.std(times) / math.sqrt(len(times)))
        assert abs(mean - hitting_time_from(rho_family(1.0), x)) <= 3 * se


class TestLyapunov:
    def test_eigenvector_is_tight(self):
        fam = accelerated_poisson_family()
        n = 64
        gen = truncate_neumann(fam, n)
        pair = dirichlet_eigenpair(gen)
        ok, worst = lyapunov_check(fam, pair.phi, pair.lambda0, n, tol=1e-10)
        assert ok
        assert abs(worst) <= 1e-10

    def test_larger_rate_fails(self):
        fam = accelerated_poisson_family()
        n = 64
        gen = truncate_neumann(fam, n)
        pair = dirichlet_eigenpair(gen)
        ok, worst = lyapunov_check(fam, pair.phi, 1.5 * pair.lambda0, n)
        assert not ok
        assert worst < 0

    def test_shrunk_rate_holds(self):
        fam = accelerated_poisson_family()
        series = eigen_convergence(fam, 2, [64, 128, 256], 1e-8)
        n = 256
        phi = series.phi_list[-1]
        ok, worst = lyapunov_check(fam, phi, 0.9 * series.lambda0_limit, n)
        assert ok
        assert worst > 0


class TestDirichletForm:
    def test_eigenvector_attains_ground_value(self):
        fam = poisson_family()
        n = 40
        gen = truncate_neumann(fam, n)
        pair = dirichlet_eigenpair(gen)
        q = dirichlet_form(fam, pair.phi, n)
        assert q == pytest.approx(pair.lambda0, rel=1e-10)

    def test_indicator_of_state_one(self):
        fam = accelerated_poisson_family()
        n = 30
        f = np.zeros(n)
        f[0] = 1.0
        b, d = fam.realize(n)
        assert dirichlet_form(fam, f, n) == pytest.approx(d[0] + b[0], rel=1e-12)

    def test_random_vectors_dominate_ground_value(self):
        fam = poisson_family()
        n = 25
        lam0 = dirichlet_eigenpair(truncate_neumann(fam, n)).lambda0
        rng = np.random.default_rng(35)
        for _ in range(25):
            f = rng.normal(size=n)
            assert dirichlet_form(fam, f, n) >= lam0 * (1 - 1e-10)


class TestQualitativeAbsorption:
    def test_escape_probability_tracks_series(self):
        # sum 1/(pi_x b_x) diverging means sure absorption: from state 5 the
        # poisson walk almost never reaches a high cut before state 1, while
        # the supercritical walk usually does
        rng = np.random.default_rng(37)
        top = 40
        gen_p = truncate_neumann(poisson_family(), top)
        hits_p = sum(sample_path(gen_p, 5, top, rng).hit_target for _ in range(300))
        gen_r = truncate_neumann(rho_family(2.0), top)
        hits_r = sum(sample_path(gen_r, 5, top, rng).hit_target for _ in range(300))
        assert hits_p == 0
        assert hits_r > 250


def test_wallis_sanity():
    # prod over odd k >= 3 of (1 - 1/k^2) converges to pi/4
    k = np.arange(3, 200_001, 2, dtype=float)
    partial = np.exp(np.log1p(-1.0 / k ** 2).sum())
    assert partial == pytest.approx(math.pi / 4, rel=1e-5)


def test_parse_rate_family(tmp_path):
    assert parse_rate_family("poisson").name == "poisson"
    assert parse_rate_family("poisson-accelerated").name == "poisson-accelerated"
    fam = parse_rate_family("rho:2.5")
    b, d = fam.realize(4)
    np.testing.assert_allclose(b, [2.5, 2.5, 2.5])
    spec = tmp_path / "rates.json"
    spec.write_text(json.dumps({"b": "log(e + n)**2", "d": "n * log(e - 1 + n)**2"}))
    custom = parse_rate_family(str(spec))
    cb, cd = custom.realize(10)
    ab, ad = accelerated_poisson_family().realize(10)
    np.testing.assert_allclose(cb, ab)
    np.testing.assert_allclose(cd, ad)


def test_rate_family_positivity_enforced():
    bad = RateFamily(lambda n: np.asarray(n, float) - 2.0, lambda n: np.ones_like(np.asarray(n, float)))
    with pytest.raises(InvalidParameter):
        bad.realize(5)
