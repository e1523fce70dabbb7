"""
Generation circuits for two-mode hierarchical cat states: the coherent
photon-loss linear-optics scheme and the qubit-mediated Hadamard/CNOT scheme,
plus the direct beam-splitter route.

Field modes and qubits share one tensor engine; a qubit is a cutoff-2 mode
with |g> at level 0 and |e> at level 1.
"""

import logging
import math
from typing import Any, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from hcslab import catalog, coherent, fock
from hcslab.coherent import CoherentSuperposition
from hcslab.custom_exceptions import ConfigurationError, DegenerateStateError, SubsystemError
from hcslab.fock import FockState
from hcslab.validator import BeamSplitterSpec, CircuitOp, CutoffProfile

logger = logging.getLogger(__name__)

HybridState = FockState

DETECTION_FLOOR = 1e-14

QUBIT_GATES = {
    "hadamard": np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0),
    "x": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]]),
    "cnot": np.array(
        [[1.0, 0, 0, 0], [0, 1.0, 0, 0], [0, 0, 0, 1.0], [0, 0, 1.0, 0]]
    ),
}

SUBSPACE_GATES = {
    "hadamard": QUBIT_GATES["hadamard"],
    "x": QUBIT_GATES["x"],
    "z": QUBIT_GATES["z"],
}


class DetectionImpossibleError(DegenerateStateError):
    pass


class UnsupportedOpError(ConfigurationError):
    pass


class CircuitOrderError(ConfigurationError):
    pass


class QubitModeError(SubsystemError):
    pass


class SubspaceDomainError(SubsystemError):
    pass


def _cat_basis(alpha: float, cutoff: int) -> np.ndarray:
    # orthonormal columns psi_+, psi_- truncated at ``cutoff``
    single = fock.profile([cutoff])
    columns = [coherent.to_fock(catalog.cat(alpha, s), single).normalized().amplitudes for s in (1, -1)]
    return np.array(columns).T


def subspace_matrix(kind: str, alpha: float, cutoff: int) -> np.ndarray:
    """
    P_K M P_K + (I - P_K) on one truncated mode, M the 2x2 gate in the
    {psi_+, psi_-} basis of K = span{psi_+(alpha), psi_-(alpha)}.
    """
    if not alpha > 0:
        raise SubspaceDomainError("the cat subspace needs alpha > 0")
    basis = _cat_basis(alpha, cutoff)
    projector = basis @ basis.conj().T
    return basis @ SUBSPACE_GATES[kind] @ basis.conj().T + np.eye(cutoff) - projector


def subspace_hadamard(alpha: float, mode: int = 0) -> CircuitOp:
    return CircuitOp(kind="SubspaceHadamard", mode=mode, alpha=alpha)


def subspace_sigma_x(alpha: float, mode: int = 0) -> CircuitOp:
    return CircuitOp(kind="SubspaceSigmaX", mode=mode, alpha=alpha)


def subspace_action(psi: CoherentSuperposition, mode: int, kind: str, alpha: float) -> CoherentSuperposition:
    """
    Apply a subspace gate to a coherent superposition whose labels on ``mode``
    are all +-alpha, exactly in the coherent backend.

    With |alpha> = (n_+ psi_+ + n_- psi_-)/2, n_+- = sqrt(2 (1 +- e^{-2 alpha^2})),
    the gate acts on the {|alpha>, |-alpha>} coefficients as C M C^{-1}.
    """
    if not alpha > 0:
        raise SubspaceDomainError("the cat subspace needs alpha > 0")
    overlap = math.exp(-2.0 * alpha * alpha)
    plus, minus = math.sqrt(2.0 * (1.0 + overlap)), math.sqrt(2.0 * (1.0 - overlap))
    change = np.array([[1.0 / plus, 1.0 / minus], [1.0 / plus, -1.0 / minus]])
    action = change @ SUBSPACE_GATES[kind] @ np.linalg.inv(change)
    coeffs, labels = [], []
    for coeff, row in zip(psi.coeffs, psi.alphas):
        if abs(row[mode] - alpha) < 1e-12:
            column = 0
        elif abs(row[mode] + alpha) < 1e-12:
            column = 1
        else:
            raise SubspaceDomainError(f"label {row[mode]} on mode {mode} is not +-{alpha}")
        for target, label in enumerate((alpha, -alpha)):
            shifted = row.copy()
            shifted[mode] = label
            coeffs.append(coeff * action[target, column])
            labels.append(shifted)
    return coherent.make_superposition(coeffs, labels).merged()


def _qubit_check(modes: Sequence[int], cutoffs: CutoffProfile):
    for mode in modes:
        if mode not in cutoffs.qubit_modes:
            raise QubitModeError(f"mode {mode} is not a qubit")


def conditional_parity_flip(field: int, qubit: int, cutoffs: CutoffProfile) -> fock.FockOperator:
    """
    Flip the qubit when the field photon number is odd: P_e x I + P_o x sigma_x.
    """
    _qubit_check([qubit], cutoffs)
    parity = np.diag(fock.parity_matrix(cutoffs.per_mode_cutoff[field]))
    even, odd = np.diag((1.0 + parity) / 2.0), np.diag((1.0 - parity) / 2.0)
    matrix = np.kron(even, np.eye(2)) + np.kron(odd, QUBIT_GATES["x"])
    return fock.make_operator(cutoffs, (field, qubit), matrix)


def conditional_field_pi(field: int, qubit: int, cutoffs: CutoffProfile) -> fock.FockOperator:
    """
    e^{i pi a^dagger a} on the field when the qubit is excited.
    """
    _qubit_check([qubit], cutoffs)
    cutoff = cutoffs.per_mode_cutoff[field]
    matrix = np.kron(np.eye(cutoff), np.diag([1.0, 0.0])) + np.kron(
        fock.parity_matrix(cutoff), np.diag([0.0, 1.0])
    )
    return fock.make_operator(cutoffs, (field, qubit), matrix)


def _qubit_gate(op: CircuitOp, cutoffs: CutoffProfile) -> fock.FockOperator:
    _qubit_check(op.modes, cutoffs)
    if op.gate is not None:
        matrix = QUBIT_GATES[op.gate]
    else:
        matrix = np.array([[complex(re, im) for re, im in row] for row in op.matrix])
    if matrix.shape != (2 ** len(op.modes),) * 2:
        raise QubitModeError(f"gate of shape {matrix.shape} on {len(op.modes)} qubits")
    return fock.make_operator(cutoffs, op.modes, matrix)


def op_operator(op: CircuitOp, cutoffs: CutoffProfile) -> fock.FockOperator:
    """
    The unitary of a unitary op on the given cutoffs.
    """
    if op.kind == "BeamSplitter":
        return fock.beam_splitter(op.beam_splitter, cutoffs)
    if op.kind == "PhaseShift":
        return fock.phase_shift(op.mode, op.phi, cutoffs)
    if op.kind == "QubitGate":
        return _qubit_gate(op, cutoffs)
    if op.kind == "ConditionalParityFlip":
        return conditional_parity_flip(op.mode, op.qubit, cutoffs)
    if op.kind == "ConditionalFieldPi":
        return conditional_field_pi(op.mode, op.qubit, cutoffs)
    if op.kind in ("SubspaceHadamard", "SubspaceSigmaX"):
        kind = "hadamard" if op.kind == "SubspaceHadamard" else "x"
        matrix = subspace_matrix(kind, op.alpha, cutoffs.per_mode_cutoff[op.mode])
        return fock.single_mode(op.mode, cutoffs, matrix)
    raise UnsupportedOpError(f"{op.kind} is not unitary")


def _photodetect(state, mode: int) -> tuple:
    if isinstance(state, FockState):
        image = fock.annihilation(mode, state.cutoffs).apply(state)
    else:
        image = coherent.annihilate(state, mode)
    weight = image.norm() ** 2
    if weight < DETECTION_FLOOR:
        raise DetectionImpossibleError(f"detection on mode {mode} has probability {weight:.3e}")
    return image.normalized(), weight


def _coherent_step(state: CoherentSuperposition, op: CircuitOp) -> CoherentSuperposition:
    if op.kind == "BeamSplitter":
        return coherent.beam_splitter(state, op.beam_splitter)
    if op.kind == "PhaseShift":
        return coherent.phase_shift(state, op.mode, op.phi)
    if op.kind == "SubspaceHadamard":
        return subspace_action(state, op.mode, "hadamard", op.alpha)
    if op.kind == "SubspaceSigmaX":
        return subspace_action(state, op.mode, "x", op.alpha)
    raise UnsupportedOpError(f"{op.kind} has no coherent-label action")


class CircuitRun(BaseModel):
    """
    Output of a circuit: the final pure state (or density after TraceOut), the
    product of detection weights and, when recorded, the state after each op.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    state: Any
    success_weight: float = 1.0
    history: list[Any] = []


def run_circuit(initial, ops: Sequence[CircuitOp], record: bool = False) -> CircuitRun:
    """
    Apply ``ops`` in order to a FockState (field modes and qubits) or to a
    CoherentSuperposition (linear-optics ops only).

    Photodetect applies the annihilation operator of its mode and renormalizes,
    multiplying the success weight by the squared norm. TraceOut must be last
    and turns the state into a density operator.
    """
    state, weight, history = initial, 1.0, []
    for index, op in enumerate(ops):
        if op.kind == "TraceOut":
            if index != len(ops) - 1:
                raise CircuitOrderError("TraceOut must be the last op")
            keep = [m for m in range(state.num_modes) if m not in op.modes]
            if isinstance(state, FockState):
                state = fock.reduced_density(state, keep)
            else:
                state = coherent.reduce(coherent.pure_density(state), keep)
        elif op.kind == "Photodetect":
            state, detected = _photodetect(state, op.mode)
            weight *= detected
            logger.info(f"photodetection on mode {op.mode}: weight {detected:.6g}")
        elif isinstance(state, FockState):
            state = op_operator(op, state.cutoffs).apply(state)
        else:
            state = _coherent_step(state, op)
        if record:
            history.append(state)
    return CircuitRun(state=state, success_weight=weight, history=history)


def _rotation(i: int, j: int, angle: float) -> CircuitOp:
    spec = BeamSplitterSpec(modes=(i, j), angle=angle, convention="rotation")
    return CircuitOp(kind="BeamSplitter", beam_splitter=spec)


def photon_loss_ops(epsilon: float, phi: float, detect_mode: int) -> list:
    """
    U_12(eps), U_34(eps), e^{i phi n_2}, U_24(pi/2), detection on mode 2 or 4,
    trace over modes 2 and 4 (labels counted from 1, indices from 0).
    """
    return [
        _rotation(0, 1, epsilon),
        _rotation(2, 3, epsilon),
        CircuitOp(kind="PhaseShift", mode=1, phi=phi),
        _rotation(1, 3, math.pi / 2.0),
        CircuitOp(kind="Photodetect", mode=detect_mode - 1),
        CircuitOp(kind="TraceOut", modes=(1, 3)),
    ]


def photon_loss_input(alpha: float) -> CoherentSuperposition:
    vacuum = coherent.coherent([0.0])
    return coherent.tensor(catalog.cat(alpha, -1), vacuum, catalog.cat(alpha, 1), vacuum)


def photon_loss_intermediate(alpha: float, epsilon: float, phi: float) -> CoherentSuperposition:
    """
    The four-term coherent superposition reaching the detectors.
    """
    ops = photon_loss_ops(epsilon, phi, 2)[:4]
    return run_circuit(photon_loss_input(alpha), ops).state


class PhotonLossReport(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    density: Any
    fidelity: float
    loss_operator_fidelity: float
    success_weight: float
    detect_mode: int
    backend: str


def photon_loss_targets(alpha: float, phi: float, detect_mode: int) -> tuple:
    """
    The equal-weight family (psi_+^2 + sign e^{-i phi} psi_-^2)/sqrt(2) and the
    loss-operator state (a_1 + sign e^{-i phi} a_3)(psi_- x psi_+), sign + for
    detection on mode 2 and - for mode 4.
    """
    sign = 1 if detect_mode == 2 else -1
    return catalog.hcs(2, alpha, -phi, sign), catalog.loss_operator_state(alpha, phi, sign)


def coherent_photon_loss_protocol(
    alpha: float, epsilon: float, phi: float, detect_mode: int = 2, backend: str = "analytic"
) -> PhotonLossReport:
    """
    Run the coherent photon-loss scheme and score the output on modes 1, 3.

    Parameters:
    - alpha (float): Cat amplitude of the two input cats.
    - epsilon (float): Tap angle in (0, pi/4).
    - phi (float): Phase on the tapped field of mode 2.
    - detect_mode (int): 2 or 4.
    - backend (str): "analytic" (coherent labels) or "fock".

    Returns:
    - The PhotonLossReport.
    """
    if detect_mode not in (2, 4):
        raise ConfigurationError("detection happens on mode 2 or mode 4")
    if not 0.0 < epsilon < math.pi / 4.0:
        raise ConfigurationError("epsilon must lie in (0, pi/4)")
    initial = photon_loss_input(alpha)
    if backend == "fock":
        field, tap = fock.default_cutoff(alpha), 11
        initial = coherent.to_fock(initial, fock.profile([field, tap, field, tap]))
    run = run_circuit(initial, photon_loss_ops(epsilon, phi, detect_mode))
    family, loss_state = photon_loss_targets(alpha, phi, detect_mode)
    if backend == "fock":
        cutoffs = run.state.cutoffs
        fidelity = run.state.fidelity_with(coherent.to_fock(family, cutoffs))
        loss_fidelity = run.state.fidelity_with(coherent.to_fock(loss_state, cutoffs))
    else:
        fidelity = coherent.density_fidelity(run.state, family)
        loss_fidelity = coherent.density_fidelity(run.state, loss_state)
    logger.info(
        f"photon loss alpha={alpha} eps={epsilon} phi={phi}: fidelity {fidelity:.8f}, "
        f"loss-operator fidelity {loss_fidelity:.8f}"
    )
    return PhotonLossReport(
        density=run.state,
        fidelity=fidelity,
        loss_operator_fidelity=loss_fidelity,
        success_weight=run.success_weight,
        detect_mode=detect_mode,
        backend=backend,
    )


def limiting_photon_loss_fidelity(alpha: float) -> float:
    """
    Fidelity of psi_+^2 + tanh(alpha^2) psi_-^2 with HCS_2^+, the eps -> 0 limit
    at phi = 0: (1 + t)^2 / (2 (1 + t^2)), t = tanh alpha^2.
    """
    t = math.tanh(alpha * alpha)
    return (1.0 + t) ** 2 / (2.0 * (1.0 + t * t))


FIELD_1, FIELD_2, QUBIT_1, QUBIT_2 = 0, 1, 2, 3


def generation_ops(alpha: float, skip_uncompute: bool = False) -> list:
    """
    The qubit-mediated sequence; ``skip_uncompute`` drops the second qubit CNOT.
    """
    cnot = CircuitOp(kind="QubitGate", gate="cnot", modes=(QUBIT_1, QUBIT_2))
    flip = CircuitOp(kind="ConditionalParityFlip", mode=FIELD_1, qubit=QUBIT_1)
    ops = [
        subspace_hadamard(alpha, FIELD_1),
        subspace_hadamard(alpha, FIELD_2),
        flip,
        cnot,
        CircuitOp(kind="ConditionalFieldPi", mode=FIELD_2, qubit=QUBIT_2),
        cnot,
        flip,
        subspace_hadamard(alpha, FIELD_2),
    ]
    if skip_uncompute:
        del ops[5]
    return ops


def hybrid_cutoffs(alpha: float) -> CutoffProfile:
    cutoff = fock.default_cutoff(alpha)
    return fock.profile([cutoff, cutoff, 2, 2], qubit_modes=(QUBIT_1, QUBIT_2))


def _with_ground_qubits(fields: CoherentSuperposition, cutoffs: CutoffProfile) -> FockState:
    field_state = coherent.to_fock(fields, cutoffs.subset([FIELD_1, FIELD_2]))
    qubits = fock.basis_state([0, 0], cutoffs.subset([QUBIT_1, QUBIT_2]))
    return fock.tensor(field_state, qubits)


def _after_first_cnot(alpha: float, cutoffs: CutoffProfile) -> FockState:
    # 1/2 [psi_+ (psi_+ + psi_-) |gg> + psi_- (psi_+ + psi_-) |ee>]
    fields = cutoffs.subset([FIELD_1, FIELD_2])
    qubits = cutoffs.subset([QUBIT_1, QUBIT_2])
    plus = coherent.to_fock(catalog.cat(alpha, 1), fields.subset([0])).normalized()
    minus = coherent.to_fock(catalog.cat(alpha, -1), fields.subset([0])).normalized()
    rotated = (plus + minus) * (1.0 / math.sqrt(2.0))
    ground = fock.basis_state([0, 0], qubits)
    excited = fock.basis_state([1, 1], qubits)
    first = fock.tensor(plus, rotated, ground)
    second = fock.tensor(minus, rotated, excited)
    return (first + second) * (1.0 / math.sqrt(2.0))


class GenerationReport(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    state: Any
    fidelity: float
    intermediate_fidelity: float
    qubit_purity: float


def qubit_mediated_generation(alpha: float, skip_uncompute: bool = False) -> GenerationReport:
    """
    Prepare HCS_2^+ x |g, g> from psi_+ x psi_+ x |g, g> with subspace
    Hadamards, conditional parity flips, qubit CNOTs and a conditional field pi.
    """
    if not alpha > 0:
        raise SubspaceDomainError("qubit-mediated generation needs alpha > 0")
    cutoffs = hybrid_cutoffs(alpha)
    plus = catalog.cat(alpha, 1)
    initial = _with_ground_qubits(coherent.tensor(plus, plus), cutoffs)
    run = run_circuit(initial, generation_ops(alpha, skip_uncompute), record=True)
    target = _with_ground_qubits(catalog.hcs(2, alpha), cutoffs)
    final = run.state
    intermediate = run.history[3].fidelity(_after_first_cnot(alpha, cutoffs))
    qubits = fock.reduced_density(final, [QUBIT_1, QUBIT_2])
    fidelity = final.fidelity(target)
    logger.info(f"qubit-mediated generation alpha={alpha}: fidelity {fidelity:.10f}")
    return GenerationReport(
        state=final,
        fidelity=fidelity,
        intermediate_fidelity=intermediate,
        qubit_purity=qubits.purity(),
    )


class DirectRouteReport(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    state: Any
    bell_fidelity: float
    hcs_fidelity: float
    ecs_fidelity: Optional[float] = None
    hcs_minus_fidelity: Optional[float] = None


def direct_preparation_route(alpha: float, variant: str = "sigma_x") -> DirectRouteReport:
    """
    U_12(pi/2) on psi_-(sqrt(2) alpha) x |0>, then e^{i pi n_2}, giving
    (psi_+ psi_- + psi_- psi_+)/sqrt(2); then sigma_x on K for mode 2 ("sigma_x")
    or the annihilation operator of mode 2 ("annihilation").
    """
    if variant not in ("sigma_x", "annihilation"):
        raise ConfigurationError(f"unknown direct-route variant {variant}")
    source = coherent.tensor(catalog.cat(math.sqrt(2.0) * alpha, -1), coherent.coherent([0.0]))
    ops = [_rotation(0, 1, math.pi / 2.0), CircuitOp(kind="PhaseShift", mode=1, phi=math.pi)]
    bell = run_circuit(source, ops).state.merged()
    plus, minus = catalog.cat(alpha, 1), catalog.cat(alpha, -1)
    reference = (coherent.tensor(plus, minus) + coherent.tensor(minus, plus)).normalized()
    bell_fidelity = coherent.fidelity(bell, reference)
    if variant == "sigma_x":
        state = run_circuit(bell, [subspace_sigma_x(alpha, 1)]).state
        return DirectRouteReport(
            state=state,
            bell_fidelity=bell_fidelity,
            hcs_fidelity=coherent.fidelity(state, catalog.hcs(2, alpha)),
        )
    state = run_circuit(bell, [CircuitOp(kind="Photodetect", mode=1)]).state
    ecs_fidelity = coherent.fidelity(state, catalog.ecs(2, alpha, 1))
    hcs_minus = coherent.fidelity(state, catalog.hcs(2, alpha, 0.0, -1))
    if abs(hcs_minus - 1.0) > 1e-6:
        logger.warning(
            f"annihilation on the Bell state gives ECS_2^+ (fidelity {ecs_fidelity:.8f}), "
            f"not HCS_2^- (fidelity {hcs_minus:.8f})"
        )
    return DirectRouteReport(
        state=state,
        bell_fidelity=bell_fidelity,
        hcs_fidelity=coherent.fidelity(state, catalog.hcs(2, alpha)),
        ecs_fidelity=ecs_fidelity,
        hcs_minus_fidelity=hcs_minus,
    )
