"""
Constructors for the named cat-state families, in the analytic (coherent
superposition) backend and the truncated Fock backend, plus the alternative
constructions used to cross-check them.

Phase convention: hierarchical states carry ``sign * exp(i theta)`` on the odd
branch, so sign=+1, theta=0 is the "+" member and sign=-1 the "-" member.
"""

import itertools
import logging
import math
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from hcslab import coherent, fock
from hcslab.coherent import CoherentSuperposition
from hcslab.custom_exceptions import ConfigurationError, DegenerateStateError, ToleranceError
from hcslab.fock import FockState
from hcslab.validator import CutoffProfile, StateSpec, build_state_spec

logger = logging.getLogger(__name__)

FOCK_ONLY = ("SqueezedHCS", "FockBell", "FockPair")


class DegenerateNormalizationError(DegenerateStateError):
    pass


class BackendUnavailableError(ConfigurationError):
    pass


class IsometryError(ToleranceError):
    pass


class IsometryCreationError(ConfigurationError):
    pass


def _normalizer(squared: float, label: str) -> float:
    if squared < 1e-12:
        raise DegenerateNormalizationError(f"{label} has vanishing norm ({squared:.3e})")
    return 1.0 / math.sqrt(squared)


def cat(alpha: complex, sign: int = 1) -> CoherentSuperposition:
    """
    Even (sign=+1) or odd (sign=-1) coherent state, normalized by
    sqrt(2 + 2 sign e^{-2|alpha|^2}).
    """
    squared = 2.0 + 2.0 * sign * math.exp(-2.0 * abs(alpha) ** 2)
    scale = _normalizer(squared, "even cat" if sign > 0 else "odd cat")
    return coherent.make_superposition([scale, sign * scale], [[alpha], [-alpha]])


def rotated_odd_cat(alpha: complex) -> CoherentSuperposition:
    """
    e^{i pi a^dagger a / 2} psi_-, the odd branch of the Omega family.
    """
    return coherent.phase_shift(cat(alpha, -1), 0, math.pi / 2.0)


def z4_state(alpha: complex, j: int) -> CoherentSuperposition:
    """
    Z/4Z coherent state e_j: coefficient i^{-jk} on |i^k alpha>, supported on
    photon numbers n = j mod 4.
    """
    labels = [[alpha * 1j**k] for k in range(4)]
    coeffs = [(1j) ** (-j * k) for k in range(4)]
    state = coherent.make_superposition(coeffs, labels)
    _normalizer(state.norm_squared(), f"Z4 state e_{j}")
    return state.normalized()


def _power(state, count: int):
    if isinstance(state, FockState):
        return fock.tensor_power(state, count)
    return coherent.tensor(*([state] * count))


def coherent_product(N: int, alpha: complex) -> CoherentSuperposition:
    return coherent.coherent([alpha] * N)


def ecs(N: int, alpha: complex, sign: int = 1) -> CoherentSuperposition:
    """
    Entangled coherent state (|alpha>^N + sign |-alpha>^N) / sqrt(2 + 2 sign e^{-2N|alpha|^2}).
    """
    squared = 2.0 + 2.0 * sign * math.exp(-2.0 * N * abs(alpha) ** 2)
    scale = _normalizer(squared, "entangled coherent state")
    return coherent.make_superposition([scale, sign * scale], [[alpha] * N, [-alpha] * N])


def _branch_sum(first, second, phase: complex):
    # branches are orthogonal for every family routed here
    return (first + phase * second).normalized()


def hcs(N: int, alpha: complex, theta: float = 0.0, sign: int = 1) -> CoherentSuperposition:
    """
    (psi_+^N + sign e^{i theta} psi_-^N) / sqrt(2).
    """
    phase = sign * np.exp(1j * theta)
    return _branch_sum(_power(cat(alpha, 1), N), _power(cat(alpha, -1), N), phase)


def omega(N: int, alpha: complex, theta: float = 0.0, sign: int = 1) -> CoherentSuperposition:
    """
    (psi_+^N + sign e^{i theta} (e^{i pi n/2} psi_-)^N) / sqrt(2).
    """
    phase = sign * np.exp(1j * theta)
    return _branch_sum(_power(cat(alpha, 1), N), _power(rotated_odd_cat(alpha), N), phase)


def squeezed_hcs(N: int, alpha: float, w: float, cutoffs: CutoffProfile = None) -> FockState:
    """
    S(w)^N Omega(alpha e^w) in the Fock backend, the hierarchical state whose
    branches are superpositions of squeezed states.
    """
    amplitude = alpha * math.exp(w)
    if cutoffs is None:
        cutoffs = fock.profile([fock.default_cutoff(amplitude, w)] * N)
    state = coherent.to_fock(omega(N, amplitude), cutoffs)
    for mode in range(N):
        state = fock.squeeze(mode, w, cutoffs).apply(state)
    logger.debug(f"squeezed hierarchical state on cutoffs {cutoffs.per_mode_cutoff}")
    return fock.check_tail(state)


class PartialIsometrySpec(BaseModel):
    """
    Single-mode partial isometry used to build two-branch families.

    parity: e^{i pi a^dagger a}
    phase_displacement: e^{i angle a^dagger a} D(beta)
    fock_swap: e^{i angle}|m><n| + e^{-i angle}|n><m|
    explicit: a truncated matrix acting on an explicit domain vector
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: Literal["parity", "phase_displacement", "fock_swap", "explicit"]
    angle: float = 0.0
    beta: tuple[float, float] = (0.0, 0.0)
    n: int = 0
    m: int = 1
    matrix: Optional[np.ndarray] = None

    @model_validator(mode="after")
    def _kind_parameters(self):
        if self.kind == "fock_swap" and self.n == self.m:
            raise ValueError("fock_swap needs two distinct photon numbers")
        if self.kind == "explicit":
            if self.matrix is None or self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
                raise ValueError("explicit isometry needs a square matrix")
        return self

    @property
    def displacement(self) -> complex:
        return complex(self.beta[0], self.beta[1])

    @property
    def analytic(self) -> bool:
        return self.kind in ("parity", "phase_displacement")

    def apply_coherent(self, psi: CoherentSuperposition) -> CoherentSuperposition:
        if self.kind == "parity":
            return coherent.parity(psi, 0)
        if self.kind == "phase_displacement":
            shifted = coherent.displace(psi, 0, self.displacement)
            return coherent.phase_shift(shifted, 0, self.angle)
        raise BackendUnavailableError(f"isometry {self.kind} has no coherent-label action")

    def fock_matrix(self, cutoff: int) -> np.ndarray:
        if self.kind == "parity":
            return fock.parity_matrix(cutoff)
        if self.kind == "phase_displacement":
            single = fock.profile([cutoff])
            return fock.phase_matrix(cutoff, self.angle) @ fock.displacement(0, self.displacement, single).matrix
        if self.kind == "fock_swap":
            if max(self.n, self.m) >= cutoff:
                raise fock.ModeIndexError(f"levels {self.n}, {self.m} exceed cutoff {cutoff}")
            matrix = np.zeros((cutoff, cutoff), dtype=complex)
            matrix[self.m, self.n] = np.exp(1j * self.angle)
            matrix[self.n, self.m] = np.exp(-1j * self.angle)
            return matrix
        if self.matrix.shape[0] != cutoff:
            raise fock.ModeIndexError(f"explicit matrix of size {self.matrix.shape[0]} for cutoff {cutoff}")
        return np.asarray(self.matrix, dtype=complex)

    def apply(self, state):
        if isinstance(state, FockState):
            return fock.apply_local(state, 0, self.fock_matrix(state.dims[0]))
        return self.apply_coherent(state)

    def overlap(self, state) -> complex:
        """
        <phi|U|phi> for a normalized single-mode domain vector.
        """
        image = self.apply(state)
        if isinstance(state, FockState):
            return state.inner(image)
        return coherent.inner_product(state, image)


def make_isometry(**fields) -> PartialIsometrySpec:
    try:
        return PartialIsometrySpec(**fields)
    except ValidationError as e:
        raise IsometryCreationError("Error partial isometry not created:" + str(e)) from None


def _norm(state) -> float:
    return state.norm()


def _check_isometric(state, image, isometry: PartialIsometrySpec):
    deviation = abs(_norm(image) - 1.0)
    if deviation > 1e-10:
        raise IsometryError(
            f"{isometry.kind} isometry changes the norm of its domain vector by {deviation:.3e}"
        )


def build_general_two_branch(phi, isometry: PartialIsometrySpec, N: int):
    """
    (I + U^N)|phi>^N / sqrt(2 + 2 Re(z^N)) with z = <phi|U|phi>.

    Parameters:
    - phi (CoherentSuperposition | FockState): Normalized single-mode state.
    - isometry (PartialIsometrySpec): The partial isometry U.
    - N (int): The number of modes.

    Returns:
    - The normalized N-mode state, in the backend of ``phi``.
    """
    phi = phi.normalized()
    image = isometry.apply(phi)
    _check_isometric(phi, image, isometry)
    z = isometry.overlap(phi)
    normalizer = _normalizer(2.0 + 2.0 * (z**N).real, "two-branch superposition")
    state = (_power(phi, N) + _power(image, N)) * normalizer
    logger.debug(f"two-branch state from {isometry.kind}: z = {z:.6g}")
    return state


def build_general_hcs(phi_prime, isometry: PartialIsometrySpec, N: int, theta: float = 0.0):
    """
    (e_1^N + e^{i theta} e_2^N)/sqrt(2) with e_1,2 = (I +- V)|phi'>/sqrt(2 +- 2w),
    w = <phi'|V|phi'> real.
    """
    phi_prime = phi_prime.normalized()
    image = isometry.apply(phi_prime)
    _check_isometric(phi_prime, image, isometry)
    w = isometry.overlap(phi_prime)
    if abs(w.imag) > 1e-10:
        raise IsometryError(f"<phi'|V|phi'> = {w} is not real")
    first = (phi_prime + image) * _normalizer(2.0 + 2.0 * w.real, "kitten e_1")
    second = (phi_prime - image) * _normalizer(2.0 - 2.0 * w.real, "kitten e_2")
    return _branch_sum(_power(first, N), _power(second, N), np.exp(1j * theta))


def fock_pair(n: int, m: int, phi: float, N: int, cutoffs: CutoffProfile = None) -> FockState:
    """
    (|n>^N + e^{i phi}|m>^N)/sqrt(2), through the two-branch constructor with a
    Fock swap.
    """
    if cutoffs is None:
        cutoffs = fock.profile([max(n, m) + 2] * N)
    single = cutoffs.subset([0])
    swap = make_isometry(kind="fock_swap", n=n, m=m, angle=phi)
    return build_general_two_branch(fock.basis_state([n], single), swap, N)


def fock_bell(cutoffs: CutoffProfile = None) -> FockState:
    return fock_pair(0, 1, 0.0, 2, cutoffs)


def build_group_expansion(N: int, alpha: float, sign: int = 1) -> CoherentSuperposition:
    """
    Hierarchical state written as a sum over the 2^N local parity flips of
    |alpha>^N, with weights cosh^{-N/2}(alpha^2) + sign (-1)^{|k|} sinh^{-N/2}(alpha^2)
    and prefactor e^{N alpha^2/2} / 2^{N+1/2}.
    """
    x = alpha * alpha
    if x == 0:
        raise DegenerateNormalizationError("group expansion needs alpha != 0")
    prefactor = math.exp(N * x / 2.0) / 2.0 ** (N + 0.5)
    even = math.cosh(x) ** (-N / 2.0)
    odd = math.sinh(x) ** (-N / 2.0)
    coeffs, labels = [], []
    for flips in itertools.product((0, 1), repeat=N):
        weight = even + sign * (-1) ** sum(flips) * odd
        coeffs.append(prefactor * weight)
        labels.append([alpha * (-1) ** k for k in flips])
    state = coherent.make_superposition(coeffs, labels).merged()
    deviation = abs(state.norm_squared() - 1.0)
    if deviation > 1e-10:
        logger.warning(f"group expansion norm deviates from 1 by {deviation:.3e}; renormalizing")
        state = state.normalized()
    return state


def build_concatenated(family: str, M: int, N: int, alpha: complex, sign: int = 1) -> CoherentSuperposition:
    """
    (X_+^M + sign X_-^M)/sqrt(2) for blocks X = HCS_N (family "CHCS") or ECS_N
    (family "CECS").
    """
    if family == "CHCS":
        plus, minus = hcs(N, alpha, 0.0, 1), hcs(N, alpha, 0.0, -1)
    elif family == "CECS":
        plus, minus = ecs(N, alpha, 1), ecs(N, alpha, -1)
    else:
        raise ConfigurationError(f"unknown concatenated family {family}")
    return _branch_sum(_power(plus, M), _power(minus, M), sign)


def bell_basis(alpha: complex) -> list:
    """
    Maximally entangled basis of span{|+-alpha>|+-alpha>}: HCS_2^+, HCS_2^-,
    ECS_2^- and (parity x I) ECS_2^-.
    """
    odd_ecs = ecs(2, alpha, -1)
    return [hcs(2, alpha, 0.0, 1), hcs(2, alpha, 0.0, -1), odd_ecs, coherent.parity(odd_ecs, 0)]


def loss_operator_state(alpha: complex, phi: float, sign: int = 1) -> CoherentSuperposition:
    """
    (a_1 + sign e^{-i phi} a_2)(psi_- x psi_+), normalized.
    """
    product = coherent.tensor(cat(alpha, -1), cat(alpha, 1))
    state = coherent.annihilate(product, 0) + (sign * np.exp(-1j * phi)) * coherent.annihilate(product, 1)
    return state.normalized()


def binary_discrimination(alpha: complex, N: int) -> tuple:
    """
    Success probability of the {C-ECS_{1,N}^+, C-ECS_{1,N}^-} measurement for
    telling |alpha>^N from |-alpha>^N with equal priors, and the Helstrom bound.
    """
    plus = build_concatenated("CECS", 1, N, alpha, 1)
    minus = build_concatenated("CECS", 1, N, alpha, -1)
    right = abs(coherent.inner_product(plus, coherent_product(N, alpha))) ** 2
    left = abs(coherent.inner_product(minus, coherent_product(N, -alpha))) ** 2
    bound = 0.5 * (1.0 + math.sqrt(1.0 - math.exp(-4.0 * N * abs(alpha) ** 2)))
    return 0.5 * (right + left), bound


def ecs_hcs_overlap(N: int, alpha: float, ecs_sign: int, hcs_sign: int) -> float:
    """
    Closed form of <ECS_N^s|HCS_N^t> for real alpha.
    """
    decay = math.exp(-2.0 * alpha * alpha)
    plus = ((1.0 + decay) / 2.0) ** (N / 2.0)
    minus = ((1.0 - decay) / 2.0) ** (N / 2.0)
    total = math.exp(-2.0 * N * alpha * alpha)
    if ecs_sign > 0:
        return (plus + hcs_sign * minus * (N % 2 == 0)) / math.sqrt(1.0 + total)
    return hcs_sign * minus * (N % 2 == 1) / math.sqrt(1.0 - total)


def default_cutoffs(spec: StateSpec) -> CutoffProfile:
    """
    Per-mode cutoffs large enough for the family's largest coherent label.
    """
    alpha = abs(spec.amplitude)
    count = spec.N * (spec.M if spec.family in ("CHCS", "CECS") else 1)
    if spec.family == "SqueezedHCS":
        return fock.profile([fock.default_cutoff(alpha * math.exp(spec.w), spec.w)] * count)
    if spec.family == "FockPair" or (spec.family == "GeneralTwoBranch" and spec.isometry == "fock_swap"):
        return fock.profile([max(spec.n, spec.m) + 2] * count)
    if spec.family == "FockBell":
        return fock.profile([3, 3])
    if spec.family in ("GeneralTwoBranch", "GeneralHCS") and spec.isometry == "phase_displacement":
        alpha = max(alpha, abs(spec.amplitude + spec.displacement))
    return fock.profile([fock.default_cutoff(alpha)] * count)


def _isometry_for(spec: StateSpec, angle: float) -> PartialIsometrySpec:
    return make_isometry(kind=spec.isometry, angle=angle, beta=spec.beta, n=spec.n, m=spec.m)


def _analytic(spec: StateSpec) -> CoherentSuperposition:
    alpha, N = spec.amplitude, spec.N
    family = spec.family
    if family == "Coherent":
        return coherent_product(N, alpha)
    if family == "EvenCat":
        return cat(alpha, 1)
    if family == "OddCat":
        return cat(alpha, -1)
    if family == "ECS":
        return ecs(N, alpha, spec.sign)
    if family == "HCS":
        return hcs(N, alpha, spec.theta, spec.sign)
    if family == "Omega":
        return omega(N, alpha, spec.theta, spec.sign)
    if family == "Z4Basis":
        return _power(z4_state(alpha, spec.j), N)
    if family == "GeneralTwoBranch":
        return build_general_two_branch(coherent.coherent([alpha]), _isometry_for(spec, spec.theta), N)
    if family == "GeneralHCS":
        isometry = _isometry_for(spec, spec.phi)
        return build_general_hcs(coherent.coherent([alpha]), isometry, N, spec.theta)
    if family in ("CHCS", "CECS"):
        return build_concatenated(family, spec.M, N, alpha, spec.sign)
    raise BackendUnavailableError(f"{family} has no analytic representation")


def _fock_only(spec: StateSpec, cutoffs: CutoffProfile) -> FockState:
    if spec.family == "SqueezedHCS":
        return squeezed_hcs(spec.N, abs(spec.amplitude), spec.w, cutoffs)
    if spec.family == "FockBell":
        return fock_bell(cutoffs)
    if spec.family == "FockPair":
        return fock_pair(spec.n, spec.m, spec.phi, spec.N, cutoffs)
    single = cutoffs.subset([0])
    isometry = _isometry_for(spec, spec.theta if spec.family == "GeneralTwoBranch" else spec.phi)
    domain = fock.basis_state([spec.n], single)
    if spec.family == "GeneralTwoBranch":
        return build_general_two_branch(domain, isometry, spec.N)
    return build_general_hcs(domain, isometry, spec.N, spec.theta)


def is_fock_only(spec: StateSpec) -> bool:
    return spec.family in FOCK_ONLY or (
        spec.family in ("GeneralTwoBranch", "GeneralHCS") and spec.isometry == "fock_swap"
    )


def build(
    spec: Union[StateSpec, dict, str], backend: str = "analytic", cutoffs: CutoffProfile = None
) -> Union[CoherentSuperposition, FockState]:
    """
    Build the normalized state a descriptor names.

    Parameters:
    - spec (StateSpec | dict | str): The descriptor, or its JSON/dict encoding.
    - backend (str): "analytic" for a CoherentSuperposition, "fock" for a FockState.
    - cutoffs (CutoffProfile): Fock cutoffs; defaults to ``default_cutoffs(spec)``.

    Returns:
    - The state in the requested backend.
    """
    if not isinstance(spec, StateSpec):
        spec = build_state_spec(spec)
    if backend not in ("analytic", "fock"):
        raise ConfigurationError(f"unknown backend {backend}")
    logger.debug(f"building {spec.canonical_json()} on the {backend} backend")
    if is_fock_only(spec):
        if backend == "analytic":
            raise BackendUnavailableError(f"{spec.family} is only available on the fock backend")
        return _fock_only(spec, cutoffs or default_cutoffs(spec))
    state = _analytic(spec)
    if backend == "analytic":
        return state
    return coherent.to_fock(state, cutoffs or default_cutoffs(spec))
