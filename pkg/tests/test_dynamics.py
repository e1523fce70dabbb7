import math
import unittest

import numpy as np

import hcslab.catalog as catalog
import hcslab.coherent as coherent
import hcslab.dynamics as dynamics
import hcslab.fock as fock
from hcslab.validator import BeamSplitterSpec


class test_beam_splitter_functions(unittest.TestCase):
    def test_rotation_on_odd_cat(self):
        """
        This test checks if the balanced rotation sends an odd cat of amplitude
        sqrt(2) alpha and the vacuum to |alpha, -alpha> - |-alpha, alpha>
        """
        alpha = 0.8
        state = coherent.tensor(catalog.cat(math.sqrt(2.0) * alpha, -1), coherent.coherent([0.0]))
        spec = BeamSplitterSpec(modes=(0, 1), angle=math.pi / 2.0, convention="rotation")
        out = dynamics.apply_beam_splitter(state, spec)
        expected = coherent.make_superposition([1.0, -1.0], [[alpha, -alpha], [-alpha, alpha]]).normalized()
        self.assertAlmostEqual(coherent.fidelity(out, expected), 1.0, places=10, msg="wrong output state")

    def test_backends_agree(self):
        """
        This test checks if the entropy after a beam splitter agrees between backends
        """
        spec = BeamSplitterSpec(modes=(0, 1), angle=0.9)
        analytic = dynamics.entanglement_entropy(
            dynamics.apply_beam_splitter(catalog.hcs(2, 0.7), spec), [0]
        )
        fock_state = catalog.build({"family": "HCS", "N": 2, "alpha": 0.7}, "fock")
        numeric = dynamics.entanglement_entropy(dynamics.apply_beam_splitter(fock_state, spec), [0])
        self.assertAlmostEqual(analytic, numeric, places=6, msg="backends disagree")

    def test_entropy_surface_without_splitter(self):
        """
        This test checks if the entropy surface at theta = 0 reports one bit for HCS_2^+
        """
        rows = dynamics.beam_splitter_entropy_surface(lambda a: catalog.hcs(2, a), [0.8, 1.5], [0.0])
        self.assertEqual(len(rows), 2, "wrong number of rows")
        for alpha, theta, entropy, _ in rows:
            self.assertAlmostEqual(entropy, 1.0, places=8, msg=f"wrong entropy at alpha={alpha}")

    def test_product_state_entropy(self):
        """
        This test checks if a product coherent state has no reduced entropy
        """
        entropy = dynamics.entanglement_entropy(coherent.coherent([0.4, 0.9]), [1])
        self.assertAlmostEqual(entropy, 0.0, places=8, msg="product state entangled")

    def test_entropy_surface_mirror_symmetry(self):
        """
        This test checks if the entropy after B(theta) equals the entropy after B(pi - theta)
        """
        thetas = [0.3, 1.1, math.pi - 1.1, math.pi - 0.3]
        rows = dynamics.beam_splitter_entropy_surface(lambda a: catalog.hcs(2, a), [0.7, 1.5], thetas)
        for start in (0, 4):
            entropies = [row[2] for row in rows[start : start + 4]]
            self.assertAlmostEqual(entropies[0], entropies[3], places=10, msg="theta and pi - theta differ")
            self.assertAlmostEqual(entropies[1], entropies[2], places=10, msg="theta and pi - theta differ")

    def test_entropy_surface_stays_maximal(self):
        """
        This test checks if HCS_2^+ keeps S_E >= 0.99 after B(theta) for alpha >= 1.5
        and stays within 1e-4 of one bit at alpha = 2
        """
        thetas = list(np.linspace(0.1, math.pi - 0.1, 15))
        rows = dynamics.beam_splitter_entropy_surface(lambda a: catalog.hcs(2, a), [1.5, 2.0, 3.0], thetas)
        for alpha, theta, entropy, _ in rows:
            self.assertGreaterEqual(entropy, 0.99, f"entropy {entropy} at alpha={alpha}, theta={theta}")
            if alpha == 2.0:
                self.assertAlmostEqual(entropy, 1.0, delta=1e-4, msg=f"not one bit at theta={theta}")

    def test_entanglement_fluctuation(self):
        """
        This test checks if the entanglement fluctuation is 0 for flat spectra and
        sqrt(pq)|log2(p/q)| for a two-level spectrum (p, q)
        """
        cutoffs = fock.profile([3, 3])
        amplitudes = np.zeros(9, dtype=complex)
        amplitudes[0], amplitudes[4] = math.sqrt(0.8), math.sqrt(0.2)
        state = fock.make_state(cutoffs, amplitudes)
        self.assertAlmostEqual(dynamics.entanglement_fluctuation(state, [0]), 0.8, places=10, msg="wrong fluctuation")
        self.assertAlmostEqual(
            dynamics.entanglement_fluctuation(catalog.fock_bell(), [0]), 0.0, places=10, msg="flat spectrum fluctuates"
        )
        self.assertAlmostEqual(
            dynamics.entanglement_fluctuation(coherent.coherent([0.4, 0.9]), [1]), 0.0, places=8, msg="product state fluctuates"
        )


class test_damping_functions(unittest.TestCase):
    def setUp(self):
        self.bell = catalog.fock_bell()

    def test_kraus_completeness(self):
        """
        This test checks if the Kraus operators of the loss channel sum to the identity
        """
        operators = dynamics.kraus_operators(0.3, 6)
        total = sum(k.T @ k for k in operators)
        self.assertTrue(np.allclose(total, np.eye(6)), "Kraus operators are not complete")

    def test_kraus_on_fock_bell(self):
        """
        This test checks if the damped Fock Bell state has the closed-form populations
        and coherence for several gamma t
        """
        for gamma_t in (0.5, 1.0, 2.0):
            eta = math.exp(-2.0 * gamma_t)
            rho = dynamics.damp(self.bell, eta).matrix
            self.assertAlmostEqual(rho[0, 0].real, 0.5 + 0.5 * (1.0 - eta) ** 2, places=12, msg="wrong p00")
            self.assertAlmostEqual(rho[1, 1].real, 0.5 * eta * (1.0 - eta), places=12, msg="wrong p01")
            self.assertAlmostEqual(rho[3, 3].real, 0.5 * eta * (1.0 - eta), places=12, msg="wrong p10")
            self.assertAlmostEqual(rho[4, 4].real, 0.5 * eta * eta, places=12, msg="wrong p11")
            self.assertAlmostEqual(abs(rho[0, 4]), 0.5 * eta, places=12, msg="wrong coherence")

    def test_lindblad_matches_kraus(self):
        """
        This test checks if the numeric master equation reproduces the Kraus channel
        """
        run = dynamics.make_run(gamma=0.5, time_grid=[0.0, 0.5, 1.5], backend="numeric")
        trajectory = dynamics.amplitude_damping_evolve(self.bell, run).trajectory
        for t, rho in zip(run.time_grid, trajectory):
            exact = dynamics.damp(self.bell, run.transmissivity(t))
            self.assertLess(
                float(np.max(np.abs(rho.matrix - exact.matrix))), 1e-7, f"numeric result off at t={t}"
            )

    def test_energy_convention(self):
        """
        This test checks if the energy convention halves the decay of the amplitude
        """
        amplitude = dynamics.make_run(gamma=1.0, time_grid=[1.0])
        energy = dynamics.make_run(gamma=1.0, time_grid=[1.0], rate_convention="energy")
        self.assertAlmostEqual(amplitude.transmissivity(1.0), math.exp(-2.0), places=14, msg="wrong eta")
        self.assertAlmostEqual(energy.transmissivity(1.0), math.exp(-1.0), places=14, msg="wrong eta")

    def test_coherent_damping(self):
        """
        This test checks if damping a coherent state shrinks its label by sqrt(eta)
        """
        rho = dynamics.damp(coherent.coherent([1.0]), 0.36)
        self.assertEqual(rho.num_dyads, 1, "dyads not merged")
        self.assertTrue(np.allclose(rho.kets, [[0.6]]), "wrong damped label")

    def test_backends_agree_under_damping(self):
        """
        This test checks if the damped reduced entropy of HCS_2^+ agrees between backends
        """
        state = catalog.hcs(2, 1.0)
        fock_state = coherent.to_fock(state, fock.profile([fock.default_cutoff(1.0)] * 2))
        analytic = dynamics.entanglement_entropy(dynamics.damp(state, 0.5), [0])
        numeric = dynamics.entanglement_entropy(dynamics.damp(fock_state, 0.5), [0])
        self.assertAlmostEqual(analytic, numeric, places=6, msg="backends disagree")

    def test_numeric_matches_analytic_on_cat_states(self):
        """
        This test checks if the numeric master equation and the exact coherent damping
        of HCS_2^+ agree entrywise at six (alpha, t) points
        """
        for alpha in (0.5, 1.0):
            cutoffs = fock.profile([fock.default_cutoff(alpha)] * 2)
            state = catalog.hcs(2, alpha)
            run = dynamics.make_run(gamma=0.1, time_grid=[0.0, 1.0, 4.0, 9.0], backend="numeric")
            trajectory = dynamics.amplitude_damping_evolve(state, run, cutoffs).trajectory
            for t, rho in zip(run.time_grid[1:], trajectory[1:]):
                exact = coherent.density_to_fock(dynamics.damp(state, run.transmissivity(t)), cutoffs)
                self.assertLess(
                    float(np.max(np.abs(rho.matrix - exact.matrix))),
                    1e-6,
                    f"backends disagree at alpha={alpha}, t={t}",
                )

    def test_numeric_run_at_large_alpha(self):
        """
        This test checks if the numeric backend integrates HCS_2^+(2) to gamma t = 0.3
        and returns positive densities matching the exact damping
        """
        alpha = 2.0
        cutoffs = fock.profile([24, 24], tail_tolerance=1e-9)
        state = catalog.hcs(2, alpha)
        run = dynamics.make_run(gamma=0.1, time_grid=[0.0, 3.0], backend="numeric")
        rho = dynamics.amplitude_damping_evolve(state, run, cutoffs).trajectory[-1]
        self.assertGreaterEqual(float(rho.eigenvalues().min()), -1e-10, "negative eigenvalue kept")
        self.assertAlmostEqual(rho.trace, 1.0, places=10, msg="trace not restored")
        exact = coherent.density_to_fock(dynamics.damp(state, run.transmissivity(3.0)), cutoffs)
        self.assertLess(float(np.max(np.abs(rho.matrix - exact.matrix))), 1e-6, "numeric result off")

    def test_hcs_entropy_under_slow_damping(self):
        """
        This test checks if at gamma = 0.1 HCS_2^+(2) keeps S_E > 0.9 up to t = 9 and
        HCS_2^+(0.5) stays above 0.2
        """
        run = dynamics.make_run(gamma=0.1, time_grid=[0.0, 3.0, 6.0, 9.0])
        points = dynamics.damping_entropy_trajectory(catalog.hcs(2, 2.0), run, [0])
        self.assertAlmostEqual(points[0].entropy, 1.0, delta=1e-6, msg="wrong initial entropy")
        self.assertGreater(points[-1].entropy, 0.9, "HCS_2^+(2) lost its entanglement")
        for point in dynamics.damping_entropy_trajectory(catalog.hcs(2, 0.5), run, [0]):
            self.assertGreater(point.entropy, 0.2, f"HCS_2^+(0.5) entropy too low at t={point.t}")

    def test_ecs_minus_decays(self):
        """
        This test checks if ECS_2^-(1) falls below 0.05 bits by gamma t = 5 and stays there
        """
        run = dynamics.make_run(gamma=0.1, time_grid=[0.0, 50.0, 80.0])
        points = dynamics.damping_entropy_trajectory(catalog.ecs(2, 1.0, -1), run, [0])
        self.assertGreater(points[0].entropy, 0.9, "ECS_2^-(1) starts unentangled")
        for point in points[1:]:
            self.assertLess(point.entropy, 0.05, f"ECS_2^-(1) still entangled at t={point.t}")

    def test_entropy_trajectory(self):
        """
        This test checks if the trajectory starts at one bit with unit purity and keeps unit trace
        """
        run = dynamics.make_run(gamma=0.5, time_grid=[0.0, 1.0, 2.0])
        points = dynamics.damping_entropy_trajectory(catalog.hcs(2, 1.0), run, [0])
        self.assertEqual(len(points), 3, "wrong number of points")
        self.assertAlmostEqual(points[0].entropy, 1.0, places=8, msg="wrong initial entropy")
        self.assertAlmostEqual(points[0].purity, 1.0, places=10, msg="initial state not pure")
        for point in points:
            self.assertAlmostEqual(point.trace, 1.0, places=10, msg=f"trace lost at t={point.t}")
        self.assertLess(points[2].purity, 1.0, "damped state still pure")

    def test_asymptotic_fock_bell(self):
        """
        This test checks if the long-time reduced entropy of the Fock Bell state is
        zero and flagged against the literature value of one bit
        """
        run = dynamics.make_run(gamma=0.5, time_grid=[0.0, 4.0])
        report = dynamics.asymptotic_entropy(self.bell, [0], run)
        self.assertAlmostEqual(report.limit_entropy, 0.0, places=10, msg="wrong limit entropy")
        self.assertTrue(report.contradicted, "literature value not flagged")
        self.assertEqual(report.final_t, 4.0, "wrong final time")
        p = 0.5 * math.exp(-4.0)
        expected = -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)
        self.assertAlmostEqual(report.final_entropy, expected, places=10, msg="wrong entropy at t = 4")

    def test_asymptotic_agreeing_value(self):
        """
        This test checks if a matching literature value is not flagged
        """
        report = dynamics.asymptotic_entropy(self.bell, [0], literature_value=0.0)
        self.assertFalse(report.contradicted, "matching value flagged")
        self.assertAlmostEqual(report.final_entropy, 1.0, places=10, msg="wrong undamped entropy")

    def test_damping_surface(self):
        """
        This test checks if the damping surface has one row per amplitude and time
        """
        rows = dynamics.damping_entropy_surface(lambda a: catalog.hcs(2, a), [0.8, 1.2], [0.0, 1.0], 0.3)
        self.assertEqual(len(rows), 4, "wrong number of rows")
        self.assertAlmostEqual(rows[0][2], 1.0, places=8, msg="wrong undamped entropy")

    def test_invalid_runs(self):
        """
        This test checks if a nonpositive rate or an unsorted grid raises DampingRunError
        """
        with self.assertRaises(dynamics.DampingRunError):
            dynamics.make_run(gamma=0.0, time_grid=[0.0, 1.0])
        with self.assertRaises(dynamics.DampingRunError):
            dynamics.make_run(gamma=1.0, time_grid=[1.0, 0.5])
        with self.assertRaises(dynamics.DampingRunError):
            dynamics.make_run(gamma=1.0, time_grid=[])

    def test_numeric_needs_cutoffs(self):
        """
        This test checks if a coherent input on the numeric backend without cutoffs raises DampingRunError
        """
        run = dynamics.make_run(gamma=1.0, time_grid=[0.0, 1.0], backend="numeric")
        with self.assertRaises(dynamics.DampingRunError):
            dynamics.amplitude_damping_evolve(catalog.hcs(2, 1.0), run)


if __name__ == "__main__":
    unittest.main()
