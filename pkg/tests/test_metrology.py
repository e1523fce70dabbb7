import math
import unittest

import numpy as np

import hcslab.catalog as catalog
import hcslab.coherent as coherent
import hcslab.fock as fock
import hcslab.metrology as metrology


class test_variance_functions(unittest.TestCase):
    def setUp(self):
        self.h3 = metrology.algebra("h3")
        self.h4 = metrology.algebra("h4")
        self.sl2 = metrology.algebra("sl2")

    def test_coherent_state_variance(self):
        """
        This test checks if every product coherent state has maximal h3 variance 1/2
        """
        for state in (coherent.coherent([0.7]), coherent.coherent([1.0, -0.5j, 2.0])):
            result = metrology.max_one_local_variance(state, self.h3)
            self.assertAlmostEqual(result.max_variance, 0.5, places=10, msg="wrong coherent variance")
            self.assertAlmostEqual(result.qfi, 2.0, places=10, msg="qfi is not 4 max_variance")

    def test_even_cat_variance(self):
        """
        This test checks if the maximal h3 variance of the even cat is Var x(0)
        """
        result = metrology.max_one_local_variance(catalog.cat(1.0, 1), self.h3)
        expected = 1.0 + math.tanh(1.0) + 0.5
        self.assertAlmostEqual(result.max_variance, expected, places=10, msg="wrong cat variance")
        self.assertAlmostEqual(abs(result.optimal_coefficients[0]), 1.0, places=8, msg="wrong maximizer")
        self.assertEqual(result.num_modes, 1, "wrong mode count")

    def test_backends_agree(self):
        """
        This test checks if the covariance matrices of HCS_2 agree between backends
        """
        state = catalog.hcs(2, 0.8)
        fock_state = coherent.to_fock(state, fock.profile([fock.default_cutoff(0.8)] * 2))
        for spec in (self.h3, self.h4, self.sl2):
            analytic = metrology.covariance_matrix(state, spec)
            numeric = metrology.covariance_matrix(fock_state, spec)
            self.assertLess(float(np.max(np.abs(analytic - numeric))), 1e-8, f"{spec.name} disagrees")

    def test_max_dominates_samples(self):
        """
        This test checks if the maximal variance is never below the variance of a
        random unit coefficient vector
        """
        state = catalog.omega(2, 0.9)
        top = metrology.max_one_local_variance(state, self.sl2).max_variance
        rng = np.random.default_rng(3)
        for _ in range(5):
            coeffs = rng.normal(size=6)
            coeffs /= np.linalg.norm(coeffs)
            sampled = metrology.one_local_variance(state, self.sl2, coeffs)
            self.assertLessEqual(sampled, top + 1e-10, "sampled variance above the maximum")

    def test_identity_changes_nothing(self):
        """
        This test checks if appending the identity to the algebra leaves the maximum unchanged
        """
        state = catalog.hcs(2, 1.0)
        plain = metrology.max_one_local_variance(state, self.h4).max_variance
        extended = metrology.max_one_local_variance(state, metrology.algebra("h4", True)).max_variance
        self.assertAlmostEqual(plain, extended, places=10, msg="identity changed the maximum")

    def test_orthogonal_mixing_changes_nothing(self):
        """
        This test checks if an orthogonal change of generator basis leaves the maximum unchanged
        """
        c, s = math.cos(0.3), math.sin(0.3)
        mixing = np.array([[c, -s], [s, c]])
        state = catalog.ecs(2, 1.0)
        plain = metrology.max_one_local_variance(state, self.h3).max_variance
        mixed = metrology.max_one_local_variance(state, metrology.algebra("h3", mixing=mixing)).max_variance
        self.assertAlmostEqual(plain, mixed, places=10, msg="basis change moved the maximum")

    def test_mixing_must_be_orthogonal(self):
        """
        This test checks if a mixing matrix of the wrong size raises AlgebraCreationError
        """
        with self.assertRaises(metrology.AlgebraCreationError):
            metrology.algebra("h3", mixing=np.eye(3))

    def test_coefficient_length(self):
        """
        This test checks if a coefficient vector of the wrong length raises CoefficientLengthError
        """
        with self.assertRaises(metrology.CoefficientLengthError):
            metrology.one_local_variance(catalog.hcs(2, 1.0), self.h3, [1.0, 0.0])

    def test_omega_two_photon_variance(self):
        """
        This test checks if the two-photon variance of Omega matches its closed form
        """
        for N in (1, 2, 3):
            for z in (1.0, 0.7):
                coeffs = metrology.two_photon_coefficients(N, z)
                numeric = metrology.one_local_variance(catalog.omega(N, 0.8), self.sl2, coeffs)
                closed = metrology.omega_two_photon_variance(N, 0.8, z)
                self.assertAlmostEqual(numeric, closed, places=8, msg=f"wrong variance N={N} z={z}")


class test_qfi_functions(unittest.TestCase):
    def test_qfi_of_fock_ghz(self):
        """
        This test checks if (|000> + |111>)/sqrt(2) has QFI N^2 for the total photon number
        """
        state = catalog.fock_pair(0, 1, 0.0, 3)
        cutoffs = state.cutoffs
        total = fock.number(0, cutoffs) + fock.number(1, cutoffs) + fock.number(2, cutoffs)
        self.assertAlmostEqual(metrology.qfi_pure(state, total), 9.0, places=10, msg="wrong GHZ qfi")

    def test_qfi_of_even_cat(self):
        """
        This test checks if the QFI of the even cat for x(0) is 4 Var x(0)
        """
        cutoffs = fock.profile([fock.default_cutoff(1.0)])
        state = coherent.to_fock(catalog.cat(1.0, 1), cutoffs)
        qfi = metrology.qfi_pure(state, fock.quadrature(0, 0.0, cutoffs))
        self.assertAlmostEqual(qfi, 4.0 * (0.5 + 1.0 + math.tanh(1.0)), places=8, msg="wrong cat qfi")

    def test_qfi_needs_hermitian(self):
        """
        This test checks if a non-Hermitian generator raises NonHermitianGeneratorError
        """
        cutoffs = fock.profile([5])
        with self.assertRaises(metrology.NonHermitianGeneratorError):
            metrology.qfi_pure(fock.vacuum(cutoffs), fock.annihilation(0, cutoffs))


class test_nrf_functions(unittest.TestCase):
    def setUp(self):
        self.h3 = metrology.algebra("h3")
        self.h4 = metrology.algebra("h4")
        self.sl2 = metrology.algebra("sl2")

    def test_ecs_nrf(self):
        """
        This test checks if ECS_2^+ at alpha = 2 has N^rF close to (4 alpha^2 + 1/2) / (1/2) under h3
        """
        state = catalog.ecs(2, 2.0)
        result = metrology.nrf(state, metrology.branches("ECS", 2, 2.0), self.h3)
        self.assertAlmostEqual(result.nrf, 33.0, places=3, msg="wrong ECS nrf")
        self.assertEqual(len(result.branch_max_variances), 2, "wrong number of branch maxima")
        for value in result.branch_max_variances:
            self.assertAlmostEqual(value, 0.5, places=10, msg="coherent branch variance is not 1/2")

    def test_ecs_h3_exponent(self):
        """
        This test checks if N^rF of ECS_2^+ grows linearly in alpha^2 under h3
        """
        alphas = [math.sqrt(x) for x in (1.0, 2.0, 4.0, 6.0)]
        sweep = metrology.nrf_sweep("ECS", self.h3, 2, alphas)
        self.assertGreaterEqual(sweep.exponent, 0.8, "exponent too small")
        self.assertLessEqual(sweep.exponent, 1.2, "exponent too large")
        self.assertEqual(len(sweep.nrf), 4, "wrong sweep length")

    def test_ecs_h4_exponent(self):
        """
        This test checks if N^rF of ECS_2^+ stays of order one under h4
        """
        alphas = [math.sqrt(x) for x in (1.0, 2.0, 4.0, 6.0)]
        sweep = metrology.nrf_sweep("ECS", self.h4, 2, alphas)
        self.assertGreaterEqual(sweep.exponent, -0.2, "exponent too small")
        self.assertLessEqual(sweep.exponent, 0.3, "exponent too large")

    def test_omega_sl2_exponent(self):
        """
        This test checks if N^rF of Omega grows linearly in alpha^2 under sl2
        """
        alphas = [math.sqrt(x) for x in (2.0, 4.0, 8.0, 16.0)]
        sweep = metrology.nrf_sweep("Omega", self.sl2, 2, alphas)
        self.assertGreaterEqual(sweep.exponent, 0.8, "exponent too small")
        self.assertLessEqual(sweep.exponent, 1.2, "exponent too large")

    def test_scaling_exponent(self):
        """
        This test checks if the log-log slope of y = x^2 is 2
        """
        self.assertAlmostEqual(
            metrology.scaling_exponent([1.0, 2.0, 4.0], [1.0, 4.0, 16.0]), 2.0, places=10, msg="wrong slope"
        )

    def test_unknown_family(self):
        """
        This test checks if asking for the branches of a family without them raises ConfigurationError
        """
        with self.assertRaises(metrology.ConfigurationError):
            metrology.branches("FockBell", 2, 1.0)

    def test_squeezed_nrf_invariance(self):
        """
        This test checks if the squeezed hierarchical state in the transported
        basis has the N^rF of Omega(alpha e^w)
        """
        result = metrology.squeezed_hcs_nrf(0.8, 0.4, 2)
        self.assertAlmostEqual(result.transported / result.reference, 1.0, delta=1e-6, msg="ratio is not 1")

    def test_squeezed_nrf_without_squeezing(self):
        """
        This test checks if w = 0 gives the plain Omega N^rF in both bases
        """
        result = metrology.squeezed_hcs_nrf(0.8, 0.0, 2)
        self.assertAlmostEqual(result.transported, result.reference, places=6, msg="w = 0 differs from Omega")
        self.assertAlmostEqual(result.fixed_basis, result.transported, places=10, msg="bases differ at w = 0")


if __name__ == "__main__":
    unittest.main()
