import math

import numpy as np
import pytest

from qsamp import (
    NonPositiveInput,
    NotDiagonalizableDetected,
    amplitude,
    build_general,
    build_rho_chain,
    dirichlet_eigenpair,
    full_spectrum,
    lambda0_minor,
    minor,
    quasi_stationary_dist,
    reversible_measure,
)
from conftest import random_reversible_generator

# roots of the 2x2 characteristic polynomial lam^2 - 3 lam + 1, by hand
GOLDEN_LAM0 = (3 - math.sqrt(5)) / 2
GOLDEN_LAM1 = (3 + math.sqrt(5)) / 2
GOLDEN_RATIO = (1 + math.sqrt(5)) / 2


def closed_form_spectrum(n):
    k = np.arange(n)
    return 2.0 * (1.0 - np.cos((2 * k + 1) * np.pi / (2 * n)))


class TestDirichletEigenpair:
    def test_golden(self, golden):
        pair = dirichlet_eigenpair(golden)
        assert pair.lambda0 == pytest.approx(GOLDEN_LAM0, abs=1e-12)
        assert pair.phi[0] == 1.0
        assert pair.phi[1] == pytest.approx(GOLDEN_RATIO, abs=1e-12)

    def test_singleton(self):
        gen = build_general(1, [], {1: 2.5})
        pair = dirichlet_eigenpair(gen)
        assert pair.lambda0 == 2.5
        assert pair.phi == pytest.approx([1.0])

    def test_drifted_chain_closed_form(self):
        for n in (2, 5, 17):
            pair = dirichlet_eigenpair(build_rho_chain(n, 1.0))
            expect = 2.0 * (1.0 - math.cos(math.pi / (2 * n)))
            assert pair.lambda0 == pytest.approx(expect, abs=1e-12)

    def test_residual_invariant(self, golden, rho1_chain10):
        for gen in (golden, rho1_chain10):
            pair = dirichlet_eigenpair(gen)
            k = gen.k_matrix()
            res = np.abs(k @ pair.phi + pair.lambda0 * pair.phi).max()
            assert res <= 1e-10 * pair.lambda0 * np.abs(pair.phi).max() + 1e-13

    def test_lambda0_below_min_exit_rate(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            gen = random_reversible_generator(rng)
            pair = dirichlet_eigenpair(gen)
            min_exit = float((-gen.diagonal).min())
            assert pair.lambda0 <= min_exit
            if gen.n_states > 1:
                assert pair.lambda0 < min_exit

    def test_positivity(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            pair = dirichlet_eigenpair(random_reversible_generator(rng))
            assert np.all(pair.phi > 0)

    def test_normalizations(self, rho1_chain10):
        first = dirichlet_eigenpair(rho1_chain10, "first")
        assert first.phi[0] == 1.0
        mx = dirichlet_eigenpair(rho1_chain10, "max")
        assert mx.phi.max() == pytest.approx(1.0)
        qsd = dirichlet_eigenpair(rho1_chain10, "qsd")
        nu = quasi_stationary_dist(rho1_chain10)
        assert float(nu @ qsd.phi) == pytest.approx(1.0, abs=1e-12)
        for pair in (mx, qsd):
            assert amplitude(pair) == pytest.approx(amplitude(first), rel=1e-12)

    def test_deterministic(self, rho1_chain10):
        a = dirichlet_eigenpair(rho1_chain10)
        b = dirichlet_eigenpair(rho1_chain10)
        assert a.lambda0 == b.lambda0
        assert np.array_equal(a.phi, b.phi)

    def test_non_reversible_still_works(self):
        # drifted 3-cycle: clockwise 2, counterclockwise 1
        gen = build_general(
            3,
            [(1, 2, 2.0), (2, 3, 2.0), (3, 1, 2.0),
             (2, 1, 1.0), (3, 2, 1.0), (1, 3, 1.0)],
            {1: 0.5},
        )
        eta, witness = reversible_measure(gen)
        assert eta is None and witness is not None
        pair = dirichlet_eigenpair(gen)
        oracle = np.linalg.eigvals(-gen.k_matrix())
        assert pair.lambda0 == pytest.approx(float(np.min(oracle.real)), rel=1e-10)
        assert np.all(pair.phi > 0)


class TestFullSpectrum:
    def test_closed_form(self):
        for n in (2, 5, 20):
            rep = full_spectrum(build_rho_chain(n, 1.0))
            np.testing.assert_allclose(rep.eigenvalues, closed_form_spectrum(n), atol=1e-10)

    def test_golden(self, golden):
        rep = full_spectrum(golden, compute_minors=True)
        np.testing.assert_allclose(rep.eigenvalues, [GOLDEN_LAM0, GOLDEN_LAM1], atol=1e-12)
        assert rep.lambda0_prime == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(rep.minor_spectra[1], [1.0], atol=1e-12)
        np.testing.assert_allclose(rep.minor_spectra[2], [2.0], atol=1e-12)

    def test_singleton(self):
        rep = full_spectrum(build_general(1, [], {1: 3.0}))
        np.testing.assert_allclose(rep.eigenvalues, [3.0])
        assert math.isinf(rep.lambda0_prime)

    def test_matches_dense_oracle_on_random_reversible(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            gen = random_reversible_generator(rng)
            rep = full_spectrum(gen)
            oracle = np.sort(np.linalg.eigvals(-gen.k_matrix()).real)
            np.testing.assert_allclose(rep.eigenvalues, oracle, rtol=1e-8, atol=1e-10)

    def test_interlacing_on_random_reversible(self):
        rng = np.random.default_rng(6)
        for _ in range(40):
            gen = random_reversible_generator(rng)
            rep = full_spectrum(gen, compute_minors=True)
            lam = rep.eigenvalues
            for x, tilde in rep.minor_spectra.items():
                assert lam[0] < tilde[0] - 1e-12 * lam[0]
                for i, t in enumerate(tilde):
                    assert lam[i] <= t + 1e-9
                    assert t <= lam[i + 1] + 1e-9

    def test_complex_spectrum_detected(self):
        # strong one-directional drift on a 3-cycle has complex eigenvalues
        gen = build_general(
            3,
            [(1, 2, 5.0), (2, 3, 5.0), (3, 1, 5.0),
             (2, 1, 0.01), (3, 2, 0.01), (1, 3, 0.01)],
            {1: 1.0},
        )
        with pytest.raises(NotDiagonalizableDetected):
            full_spectrum(gen)


class TestReversibleMeasure:
    def test_rho_chain_product_weights(self):
        for rho in (0.5, 2.0):
            n = 6
            gen = build_rho_chain(n, rho)
            eta, witness = reversible_measure(gen)
            assert witness is None
            pi = np.array([rho ** x for x in range(n)])
            pi[-1] = rho ** (n - 1) / (1 + rho)
            np.testing.assert_allclose(eta, pi / pi.sum(), rtol=1e-12)

    def test_detailed_balance_invariant(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            gen = random_reversible_generator(rng)
            eta, witness = reversible_measure(gen)
            assert witness is None
            k = gen.k_matrix()
            flows = eta[:, None] * k
            off = ~np.eye(gen.n_states, dtype=bool)
            scale = np.abs(flows[off]).max()
            assert np.abs((flows - flows.T)[off]).max() <= 1e-12 * scale

    def test_unbalanced_cycle_witness(self):
        gen = build_general(
            3,
            [(1, 2, 2.0), (2, 3, 2.0), (3, 1, 2.0),
             (2, 1, 1.0), (3, 2, 1.0), (1, 3, 1.0)],
            {1: 1.0},
        )
        eta, witness = reversible_measure(gen)
        assert eta is None
        assert witness[0] == witness[-1]  # closed cycle
        assert len(set(witness[:-1])) >= 3

    def test_one_way_cycle_witness(self):
        gen = build_general(3, [(1, 2, 1.0), (2, 3, 1.0), (3, 1, 1.0)], {1: 1.0})
        eta, witness = reversible_measure(gen)
        assert eta is None and witness is not None

    def test_symmetric_two_state(self):
        # hand solve: eta(1) * 1 = eta(2) * 1
        gen = build_general(2, [(1, 2, 1.0), (2, 1, 1.0)], {1: 1.0})
        eta, _ = reversible_measure(gen)
        np.testing.assert_allclose(eta, [0.5, 0.5], rtol=1e-14)


class TestQuasiStationary:
    def test_singleton(self):
        assert quasi_stationary_dist(build_general(1, [], {1: 1.0})) == pytest.approx([1.0])

    def test_golden(self, golden):
        # eta uniform, so nu is proportional to phi itself
        nu = quasi_stationary_dist(golden)
        expect = np.array([1.0, GOLDEN_RATIO])
        np.testing.assert_allclose(nu, expect / expect.sum(), rtol=1e-12)

    def test_left_eigensolve_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            gen = random_reversible_generator(rng)
            nu = quasi_stationary_dist(gen)
            k = gen.k_matrix()
            w, vl = np.linalg.eig(k.T)
            i = int(np.argmax(w.real))
            oracle = np.abs(vl[:, i].real)
            oracle /= oracle.sum()
            np.testing.assert_allclose(nu, oracle, rtol=1e-8, atol=1e-12)
            lam0 = dirichlet_eigenpair(gen).lambda0
            assert np.abs(nu @ k + lam0 * nu).max() <= 1e-10

    def test_eta_phi_relation(self):
        rng = np.random.default_rng(10)
        gen = random_reversible_generator(rng)
        eta, _ = reversible_measure(gen)
        pair = dirichlet_eigenpair(gen)
        expect = eta * pair.phi
        np.testing.assert_allclose(
            quasi_stationary_dist(gen), expect / expect.sum(), rtol=1e-9
        )


class TestAmplitude:
    def test_golden(self, golden):
        assert amplitude(dirichlet_eigenpair(golden)) == pytest.approx(GOLDEN_RATIO, abs=1e-12)

    def test_constant(self):
        assert amplitude(np.ones(5)) == 1.0

    def test_drifted_chain_linear_growth(self):
        amp = amplitude(dirichlet_eigenpair(build_rho_chain(100, 1.0)))
        assert abs(amp * math.pi / 200.0 - 1.0) <= 1e-3

    def test_scale_invariance(self):
        rng = np.random.default_rng(12)
        phi = np.exp(rng.normal(size=9))
        for c in (1e-7, 0.5, 3e8):
            assert amplitude(c * phi) == pytest.approx(amplitude(phi), rel=1e-12)

    def test_nonpositive_rejected(self):
        with pytest.raises(NonPositiveInput):
            amplitude(np.array([1.0, 0.0]))
        with pytest.raises(NonPositiveInput):
            amplitude(np.array([1.0, -2.0]))


class TestLambda0Minor:
    def test_golden_cases(self, golden):
        assert lambda0_minor(golden, 1) == pytest.approx(1.0, abs=1e-12)
        assert lambda0_minor(golden, 2) == pytest.approx(2.0, abs=1e-12)

    def test_singleton_convention(self):
        assert math.isinf(lambda0_minor(build_general(1, [], {1: 1.0}), 1))

    def test_cross_check_with_eigenpair(self):
        gen = build_rho_chain(3, 1.0)
        sub = minor(gen, {1})
        assert lambda0_minor(gen, 1) == pytest.approx(
            dirichlet_eigenpair(sub).lambda0, rel=1e-10
        )

    def test_strict_minor_gap(self):
        rng = np.random.default_rng(13)
        for _ in range(30):
            gen = random_reversible_generator(rng)
            lam0 = dirichlet_eigenpair(gen).lambda0
            for x in range(1, gen.n_states + 1):
                assert lambda0_minor(gen, x) > lam0 * (1 + 1e-12)

    def test_domain_monotonicity_birth_death(self):
        # nested intervals of a drifted chain: smaller domain, larger eigenvalue
        gen = build_rho_chain(12, 1.3)
        k = gen.k_matrix()
        values = []
        for keep in (12, 9, 6, 3):
            sub = k[:keep, :keep]
            values.append(dirichlet_eigenpair(sub).lambda0)
        assert all(a < b for a, b in zip(values, values[1:]))

    def test_reducible_minor(self):
        # removing the middle of a 3-chain leaves two singleton blocks
        gen = build_rho_chain(3, 1.0)
        k = gen.k_matrix()
        expect = min(-k[0, 0], -k[2, 2])
        assert lambda0_minor(gen, 2) == pytest.approx(expect, abs=1e-12)
