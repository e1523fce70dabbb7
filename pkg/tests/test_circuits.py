import math
import unittest

import numpy as np

import hcslab.catalog as catalog
import hcslab.circuits as circuits
import hcslab.coherent as coherent
import hcslab.fock as fock
from hcslab.custom_exceptions import ConfigurationError
from hcslab.validator import BeamSplitterSpec, CircuitOp


class test_subspace_gates(unittest.TestCase):
    def setUp(self):
        self.alpha = 1.0
        self.cutoff = fock.default_cutoff(self.alpha)

    def test_subspace_matrix_is_unitary(self):
        """
        This test checks if the subspace Hadamard and sigma_x are unitary on the truncated mode
        """
        for kind in ("hadamard", "x", "z"):
            matrix = circuits.subspace_matrix(kind, self.alpha, self.cutoff)
            error = np.max(np.abs(matrix @ matrix.conj().T - np.eye(self.cutoff)))
            self.assertLess(float(error), 1e-12, f"subspace {kind} is not unitary")

    def test_subspace_sigma_x_swaps_cats(self):
        """
        This test checks if sigma_x on the cat subspace maps psi_+ to psi_-
        """
        single = fock.profile([self.cutoff])
        matrix = circuits.subspace_matrix("x", self.alpha, self.cutoff)
        plus = coherent.to_fock(catalog.cat(self.alpha, 1), single)
        minus = coherent.to_fock(catalog.cat(self.alpha, -1), single)
        image = fock.single_mode(0, single, matrix).apply(plus)
        self.assertAlmostEqual(image.fidelity(minus), 1.0, places=10, msg="psi_+ not sent to psi_-")

    def test_subspace_action_matches_matrix(self):
        """
        This test checks if the coherent-label Hadamard agrees with the Fock subspace matrix
        """
        single = fock.profile([self.cutoff])
        state = coherent.coherent([self.alpha])
        labels = circuits.subspace_action(state, 0, "hadamard", self.alpha)
        matrix = circuits.subspace_matrix("hadamard", self.alpha, self.cutoff)
        image = fock.single_mode(0, single, matrix).apply(coherent.to_fock(state, single))
        self.assertAlmostEqual(
            image.fidelity(coherent.to_fock(labels, single)), 1.0, places=10, msg="backends disagree"
        )
        self.assertAlmostEqual(labels.norm(), 1.0, places=10, msg="subspace action not unitary")

    def test_subspace_needs_positive_alpha(self):
        """
        This test checks if a subspace gate at alpha = 0 raises SubspaceDomainError
        """
        with self.assertRaises(circuits.SubspaceDomainError):
            circuits.subspace_matrix("hadamard", 0.0, 10)

    def test_subspace_action_foreign_label(self):
        """
        This test checks if a label off +-alpha raises SubspaceDomainError
        """
        with self.assertRaises(circuits.SubspaceDomainError):
            circuits.subspace_action(coherent.coherent([0.5]), 0, "x", 1.0)

    def test_parity_flip_needs_qubit(self):
        """
        This test checks if a conditional parity flip onto a field mode raises QubitModeError
        """
        cutoffs = fock.profile([6, 6])
        with self.assertRaises(circuits.QubitModeError):
            circuits.conditional_parity_flip(0, 1, cutoffs)

    def test_parity_flip_on_odd_photon(self):
        """
        This test checks if one photon flips the qubit and two photons do not
        """
        cutoffs = fock.profile([4, 2], qubit_modes=(1,))
        flip = circuits.conditional_parity_flip(0, 1, cutoffs)
        odd = flip.apply(fock.basis_state([1, 0], cutoffs))
        even = flip.apply(fock.basis_state([2, 0], cutoffs))
        self.assertAlmostEqual(odd.fidelity(fock.basis_state([1, 1], cutoffs)), 1.0, places=12, msg="odd kept")
        self.assertAlmostEqual(even.fidelity(fock.basis_state([2, 0], cutoffs)), 1.0, places=12, msg="even flipped")


class test_run_circuit(unittest.TestCase):
    def test_trace_out_must_be_last(self):
        """
        This test checks if a TraceOut followed by another op raises CircuitOrderError
        """
        ops = [
            CircuitOp(kind="TraceOut", modes=(1,)),
            CircuitOp(kind="PhaseShift", mode=0, phi=0.3),
        ]
        with self.assertRaises(circuits.CircuitOrderError):
            circuits.run_circuit(coherent.coherent([0.5, 0.2]), ops)

    def test_detection_on_vacuum(self):
        """
        This test checks if detecting a photon in the vacuum raises DetectionImpossibleError
        """
        with self.assertRaises(circuits.DetectionImpossibleError):
            circuits.run_circuit(fock.vacuum(fock.profile([4])), [CircuitOp(kind="Photodetect", mode=0)])

    def test_qubit_gate_on_coherent_backend(self):
        """
        This test checks if a qubit gate on a coherent superposition raises UnsupportedOpError
        """
        op = CircuitOp(kind="QubitGate", gate="x", modes=(0,))
        with self.assertRaises(circuits.UnsupportedOpError):
            circuits.run_circuit(coherent.coherent([0.5]), [op])

    def test_history_and_weight(self):
        """
        This test checks if the history holds one state per op and detection
        weights multiply into the success weight
        """
        spec = BeamSplitterSpec(modes=(0, 1), angle=math.pi / 2.0)
        ops = [CircuitOp(kind="BeamSplitter", beam_splitter=spec), CircuitOp(kind="Photodetect", mode=0)]
        run = circuits.run_circuit(coherent.coherent([math.sqrt(2.0), 0.0]), ops, record=True)
        self.assertEqual(len(run.history), 2, "wrong history length")
        self.assertAlmostEqual(run.success_weight, 1.0, places=12, msg="wrong detection weight")

    def test_subspace_hadamard_on_even_cat(self):
        """
        This test checks if the subspace Hadamard sends psi_+ to (psi_+ + psi_-)/sqrt(2)
        in both backends
        """
        alpha = 1.2
        single = fock.profile([fock.default_cutoff(alpha)])
        plus = coherent.to_fock(catalog.cat(alpha, 1), single).normalized()
        minus = coherent.to_fock(catalog.cat(alpha, -1), single).normalized()
        expected = fock.make_state(single, (plus.amplitudes + minus.amplitudes) / math.sqrt(2.0))
        op = circuits.subspace_hadamard(alpha)
        analytic = circuits.run_circuit(catalog.cat(alpha, 1), [op]).state
        numeric = circuits.run_circuit(plus, [op]).state
        self.assertAlmostEqual(
            coherent.to_fock(analytic, single).normalized().fidelity(expected), 1.0, places=8, msg="analytic Hadamard wrong"
        )
        self.assertAlmostEqual(numeric.fidelity(expected), 1.0, places=8, msg="Fock Hadamard wrong")

    def test_trace_out_gives_density(self):
        """
        This test checks if tracing out a mode of a product state leaves a pure density
        """
        ops = [CircuitOp(kind="TraceOut", modes=(1,))]
        run = circuits.run_circuit(fock.basis_state([1, 2], fock.profile([3, 3])), ops)
        self.assertEqual(run.state.dims, [3], "wrong kept cutoffs")
        self.assertAlmostEqual(run.state.purity(), 1.0, places=12, msg="reduced product state is mixed")


class test_generation_schemes(unittest.TestCase):
    def test_qubit_mediated_generation(self):
        """
        This test checks if the qubit-mediated circuit prepares HCS_2^+ with the qubits back in |g, g>
        """
        for alpha in (0.8, 1.5):
            report = circuits.qubit_mediated_generation(alpha)
            self.assertAlmostEqual(report.fidelity, 1.0, places=8, msg=f"wrong fidelity at {alpha}")
            self.assertAlmostEqual(
                report.intermediate_fidelity, 1.0, places=8, msg=f"wrong intermediate state at {alpha}"
            )
            self.assertAlmostEqual(report.qubit_purity, 1.0, places=8, msg=f"qubits entangled at {alpha}")

    def test_generation_without_uncompute(self):
        """
        This test checks if dropping the second qubit CNOT leaves the qubits entangled with the field
        """
        report = circuits.qubit_mediated_generation(1.0, skip_uncompute=True)
        self.assertAlmostEqual(report.fidelity, 0.25, places=8, msg="wrong ablated fidelity")
        self.assertAlmostEqual(report.qubit_purity, 0.5, places=8, msg="wrong qubit purity")

    def test_direct_route_sigma_x(self):
        """
        This test checks if the beam-splitter route with sigma_x on mode 2 prepares HCS_2^+
        """
        report = circuits.direct_preparation_route(1.0)
        self.assertAlmostEqual(report.bell_fidelity, 1.0, places=10, msg="wrong Bell state")
        self.assertAlmostEqual(report.hcs_fidelity, 1.0, places=10, msg="HCS_2^+ not reached")

    def test_direct_route_annihilation(self):
        """
        This test checks if the annihilation variant of the direct route gives ECS_2^+
        """
        report = circuits.direct_preparation_route(1.0, "annihilation")
        self.assertAlmostEqual(report.ecs_fidelity, 1.0, places=10, msg="ECS_2^+ not reached")
        self.assertLess(report.hcs_minus_fidelity, 0.999, "annihilation variant gave HCS_2^-")

    def test_direct_route_unknown_variant(self):
        """
        This test checks if an unknown variant raises ConfigurationError
        """
        with self.assertRaises(ConfigurationError):
            circuits.direct_preparation_route(1.0, "squeeze")


class test_photon_loss(unittest.TestCase):
    def setUp(self):
        self.alpha = 1.0

    def test_limit_of_small_tap(self):
        """
        This test checks if a small tap gives the loss-operator state and its
        limiting fidelity with HCS_2^+
        """
        report = circuits.coherent_photon_loss_protocol(self.alpha, 0.01, 0.0)
        limit = circuits.limiting_photon_loss_fidelity(self.alpha)
        self.assertGreater(report.loss_operator_fidelity, 0.999, "output is not the loss-operator state")
        self.assertAlmostEqual(report.fidelity, limit, delta=1e-3, msg="wrong fidelity with HCS_2^+")
        self.assertGreater(report.success_weight, 0.0, "no detection weight")

    def test_limiting_fidelity(self):
        """
        This test checks if the loss-operator state has the closed-form fidelity with HCS_2^+
        """
        state = catalog.loss_operator_state(self.alpha, 0.0, 1)
        self.assertAlmostEqual(
            coherent.fidelity(state, catalog.hcs(2, self.alpha)),
            circuits.limiting_photon_loss_fidelity(self.alpha),
            places=10,
            msg="wrong limiting fidelity",
        )

    def test_backends_agree(self):
        """
        This test checks if the Fock and analytic runs of the protocol agree
        """
        analytic = circuits.coherent_photon_loss_protocol(self.alpha, 0.3, 0.2)
        numeric = circuits.coherent_photon_loss_protocol(self.alpha, 0.3, 0.2, backend="fock")
        self.assertAlmostEqual(analytic.fidelity, numeric.fidelity, places=6, msg="fidelities disagree")
        self.assertAlmostEqual(
            analytic.success_weight, numeric.success_weight, places=8, msg="detection weights disagree"
        )

    def test_intermediate_is_normalized(self):
        """
        This test checks if the superposition reaching the detectors is normalized
        """
        state = circuits.photon_loss_intermediate(self.alpha, 0.2, 0.0)
        self.assertAlmostEqual(state.norm(), 1.0, places=10, msg="intermediate state not normalized")
        self.assertEqual(state.num_modes, 4, "wrong mode count")

    def test_intermediate_labels_and_coefficients(self):
        """
        This test checks if the four terms reaching the detectors carry the labels
        (c x1, -s (x1 e^{i phi} + x3)/sqrt2, c x3, s (x1 e^{i phi} - x3)/sqrt2) with the
        product of the input cat coefficients
        """
        alpha, epsilon, phi = 1.2, 0.3, 0.4
        c, s = math.cos(epsilon / 2.0), math.sin(epsilon / 2.0)
        odd = 1.0 / math.sqrt(2.0 - 2.0 * math.exp(-2.0 * alpha**2))
        even = 1.0 / math.sqrt(2.0 + 2.0 * math.exp(-2.0 * alpha**2))
        rotated = np.exp(1j * phi)
        state = circuits.photon_loss_intermediate(alpha, epsilon, phi)
        self.assertEqual(state.num_terms, 4, "wrong number of terms")
        for x1 in (alpha, -alpha):
            for x3 in (alpha, -alpha):
                expected = np.array(
                    [
                        c * x1,
                        -s * (x1 * rotated + x3) / math.sqrt(2.0),
                        c * x3,
                        s * (x1 * rotated - x3) / math.sqrt(2.0),
                    ]
                )
                rows = [i for i, row in enumerate(state.alphas) if np.allclose(row, expected, atol=1e-12)]
                self.assertEqual(len(rows), 1, f"no term with labels {expected}")
                coefficient = np.sign(x1) * odd * even
                self.assertAlmostEqual(
                    abs(state.coeffs[rows[0]] - coefficient), 0.0, places=12, msg="wrong coefficient"
                )

    def test_fidelity_improves_as_tap_shrinks(self):
        """
        This test checks if the loss-operator fidelity rises and the detection weight
        falls as epsilon goes 0.1, 0.05, 0.01
        """
        reports = [circuits.coherent_photon_loss_protocol(self.alpha, eps, 0.0) for eps in (0.1, 0.05, 0.01)]
        for wider, narrower in zip(reports, reports[1:]):
            self.assertLess(
                wider.loss_operator_fidelity, narrower.loss_operator_fidelity, "fidelity did not improve"
            )
            self.assertGreater(wider.success_weight, narrower.success_weight, "weight did not fall")
        self.assertGreater(reports[-1].loss_operator_fidelity, 0.999, "small tap far from the loss state")

    def test_detection_on_mode_four(self):
        """
        This test checks if detection on mode 4 gives psi_+^2 - e^{-i phi} tanh(alpha^2) psi_-^2
        and not the plus-sign state
        """
        plus, minus = catalog.cat(self.alpha, 1), catalog.cat(self.alpha, -1)
        explicit = (
            coherent.tensor(plus, plus)
            - math.tanh(self.alpha**2) * coherent.tensor(minus, minus)
        ).normalized()
        self.assertAlmostEqual(
            coherent.fidelity(explicit, catalog.loss_operator_state(self.alpha, 0.0, -1)),
            1.0,
            places=10,
            msg="minus loss-operator state has the wrong form",
        )
        report = circuits.coherent_photon_loss_protocol(self.alpha, 0.01, 0.0, detect_mode=4)
        self.assertEqual(report.detect_mode, 4, "detector not recorded")
        self.assertGreater(report.loss_operator_fidelity, 0.999, "mode 4 output is not the minus state")
        plus_state = catalog.loss_operator_state(self.alpha, 0.0, 1)
        wrong_sign = coherent.density_fidelity(report.density, plus_state)
        self.assertLess(wrong_sign, 0.5, "mode 4 output matches the plus-sign state")
        self.assertAlmostEqual(
            report.fidelity,
            circuits.limiting_photon_loss_fidelity(self.alpha),
            delta=1e-3,
            msg="wrong fidelity with HCS_2^-",
        )

    def test_phase_on_tapped_field(self):
        """
        This test checks if phi = pi/3 gives (a_1 + e^{-i phi} a_3)(psi_- x psi_+) with the
        phase-independent limiting fidelity
        """
        phi = math.pi / 3.0
        report = circuits.coherent_photon_loss_protocol(self.alpha, 0.01, phi)
        self.assertGreater(report.loss_operator_fidelity, 0.999, "output is not the loss-operator state")
        self.assertAlmostEqual(
            report.fidelity,
            circuits.limiting_photon_loss_fidelity(self.alpha),
            delta=1e-3,
            msg="wrong fidelity with the phased HCS_2^+",
        )
        unphased = coherent.density_fidelity(report.density, catalog.loss_operator_state(self.alpha, 0.0, 1))
        self.assertLess(unphased, 0.99, "phase on mode 2 had no effect")

    def test_invalid_settings(self):
        """
        This test checks if a third detector or a tap angle past pi/4 raises ConfigurationError
        """
        with self.assertRaises(ConfigurationError):
            circuits.coherent_photon_loss_protocol(self.alpha, 0.1, 0.0, detect_mode=3)
        with self.assertRaises(ConfigurationError):
            circuits.coherent_photon_loss_protocol(self.alpha, 1.0, 0.0)


if __name__ == "__main__":
    unittest.main()
