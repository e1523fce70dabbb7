"""
Truncated Fock-space numerics.

States are dense amplitude vectors over the multi-index basis |n_1, ..., n_N>
in row-major order. Operators keep a dense matrix on the modes they act on
(their support) and are contracted into states with ``numpy.tensordot``, so a
single-mode gate on a four-mode state never builds the full Kronecker product.
This backend is the brute-force reference that every closed form and the
coherent backend are checked against.
"""

import logging
import math
import string
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator
from scipy.linalg import expm

from hcslab import config
from hcslab.custom_exceptions import (
    ConfigurationError,
    DegenerateStateError,
    SubsystemError,
    ToleranceError,
    TruncationError,
)
from hcslab.validator import BeamSplitterSpec, CutoffProfile

logger = logging.getLogger(__name__)

# eigenvalue floor accepted on integrator and channel outputs
SETTLE_TOLERANCE = 1e-8


class ModeIndexError(SubsystemError):
    pass


class KeepSetError(SubsystemError):
    pass


class TailViolationError(TruncationError):
    pass


class NotPositiveError(ToleranceError):
    pass


class FockCreationError(ConfigurationError):
    pass


class DensityCreationError(ToleranceError):
    pass


class ZeroNormError(DegenerateStateError):
    pass


class EmptySupportError(DegenerateStateError):
    pass


def default_cutoff(alpha: complex = 0.0, w: float = 0.0) -> int:
    """
    Per-mode cutoff ceil(|alpha|^2 + 8|alpha| + 10), scaled by e^{2|w|} when
    the state is squeezed.
    """
    r = abs(alpha)
    return int(math.ceil((r * r + 8.0 * r + 10.0) * math.exp(2.0 * abs(w))))


def profile(
    cutoffs: Sequence[int], tail_tolerance: float = None, qubit_modes: Sequence[int] = ()
) -> CutoffProfile:
    try:
        return CutoffProfile(
            per_mode_cutoff=tuple(int(c) for c in cutoffs),
            tail_tolerance=config.TAIL_TOLERANCE if tail_tolerance is None else tail_tolerance,
            qubit_modes=tuple(qubit_modes),
        )
    except ValidationError as e:
        raise FockCreationError("Error cutoff profile not created:" + str(e)) from None


def _contract(matrix: np.ndarray, positions: list, tensor: np.ndarray, dims: list) -> np.ndarray:
    # contracts a support matrix into the given tensor axes; trailing axes pass through
    k = len(positions)
    sub = [dims[p] for p in positions]
    op = matrix.reshape(sub + sub)
    out = np.tensordot(op, tensor, axes=(list(range(k, 2 * k)), positions))
    return np.moveaxis(out, list(range(k)), positions)


class FockState(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    cutoffs: CutoffProfile
    amplitudes: np.ndarray

    @field_validator("amplitudes", mode="before")
    @classmethod
    def _complex_vector(cls, value):
        return np.asarray(value, dtype=complex)

    @model_validator(mode="after")
    def _length_matches_cutoffs(self):
        if self.amplitudes.ndim != 1 or self.amplitudes.shape[0] != self.cutoffs.dimension:
            raise ValueError(
                f"amplitude vector of shape {self.amplitudes.shape} does not match "
                f"cutoffs {self.cutoffs.per_mode_cutoff}"
            )
        return self

    @property
    def num_modes(self) -> int:
        return self.cutoffs.num_modes

    @property
    def dims(self) -> list:
        return list(self.cutoffs.per_mode_cutoff)

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "FockState":
        norm = self.norm()
        if norm < 1e-150:
            raise ZeroNormError("cannot normalize a zero vector")
        return make_state(self.cutoffs, self.amplitudes / norm)

    def inner(self, other: "FockState") -> complex:
        if self.dims != other.dims:
            raise ModeIndexError(f"cutoff mismatch {self.dims} vs {other.dims}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "FockState") -> float:
        overlap = abs(self.inner(other)) ** 2
        return float(overlap / (self.norm() ** 2 * other.norm() ** 2))

    def tensor(self, other: "FockState") -> "FockState":
        return make_state(
            self.cutoffs.concat(other.cutoffs), np.kron(self.amplitudes, other.amplitudes)
        )

    def probabilities(self) -> np.ndarray:
        return np.abs(self.tensor_view()) ** 2

    def to_density(self) -> "DensityOperator":
        return make_density(self.cutoffs, np.outer(self.amplitudes, self.amplitudes.conj()))

    def __add__(self, other: "FockState") -> "FockState":
        if self.dims != other.dims:
            raise ModeIndexError(f"cutoff mismatch {self.dims} vs {other.dims}")
        return make_state(self.cutoffs, self.amplitudes + other.amplitudes)

    def __sub__(self, other: "FockState") -> "FockState":
        return self + (-1.0) * other

    # numpy scalars on the left defer to __rmul__
    __array_ufunc__ = None

    def __mul__(self, scalar: complex) -> "FockState":
        return make_state(self.cutoffs, complex(scalar) * self.amplitudes)

    __rmul__ = __mul__


def make_state(cutoffs: CutoffProfile, amplitudes) -> FockState:
    try:
        return FockState(cutoffs=cutoffs, amplitudes=amplitudes)
    except ValidationError as e:
        raise FockCreationError("Error Fock state not created:" + str(e)) from None


def basis_state(levels: Sequence[int], cutoffs: CutoffProfile) -> FockState:
    if len(levels) != cutoffs.num_modes:
        raise ModeIndexError(f"{len(levels)} levels given for {cutoffs.num_modes} modes")
    for mode, level in enumerate(levels):
        if not 0 <= level < cutoffs.per_mode_cutoff[mode]:
            raise ModeIndexError(f"level {level} is outside the cutoff of mode {mode}")
    amplitudes = np.zeros(cutoffs.dimension, dtype=complex)
    amplitudes[np.ravel_multi_index(tuple(levels), cutoffs.per_mode_cutoff)] = 1.0
    return make_state(cutoffs, amplitudes)


def vacuum(cutoffs: CutoffProfile) -> FockState:
    return basis_state([0] * cutoffs.num_modes, cutoffs)


def coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    """
    Truncated coherent-state amplitudes e^{-|alpha|^2/2} alpha^n / sqrt(n!).
    """
    amplitudes = np.empty(cutoff, dtype=complex)
    amplitudes[0] = 1.0
    for n in range(1, cutoff):
        amplitudes[n] = amplitudes[n - 1] * alpha / math.sqrt(n)
    return amplitudes * math.exp(-abs(alpha) ** 2 / 2.0)


def tensor(*states: FockState) -> FockState:
    result = states[0]
    for state in states[1:]:
        result = result.tensor(state)
    return result


def tensor_power(state: FockState, count: int) -> FockState:
    return tensor(*([state] * count))


def top_level_mass(state: FockState) -> list:
    """
    Probability mass sitting in the top Fock level of each mode.
    """
    probabilities = state.probabilities() / max(state.norm() ** 2, 1e-300)
    masses = []
    for mode, cutoff in enumerate(state.dims):
        masses.append(float(np.take(probabilities, cutoff - 1, axis=mode).sum()))
    return masses


def check_tail(state: FockState) -> FockState:
    """
    Raise TailViolationError when any field mode carries top-level mass at or
    above the profile's tail tolerance. Qubit modes are skipped.
    """
    tolerance = state.cutoffs.tail_tolerance
    for mode, mass in enumerate(top_level_mass(state)):
        if mode in state.cutoffs.qubit_modes:
            continue
        if mass >= tolerance:
            raise TailViolationError(
                f"mode {mode} holds {mass:.3e} in its top level "
                f"(cutoff {state.dims[mode]}, tolerance {tolerance:.1e})"
            )
    return state


class FockOperator(BaseModel):
    """
    Operator stored as a dense matrix on its support modes. ``modes`` fixes
    the axis order of ``matrix``; ``to_dense`` embeds it in the full space.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    cutoffs: CutoffProfile
    modes: tuple[int, ...]
    matrix: np.ndarray
    hermitian_flag: bool = False

    @field_validator("matrix", mode="before")
    @classmethod
    def _complex_matrix(cls, value):
        return np.asarray(value, dtype=complex)

    @model_validator(mode="after")
    def _support_is_consistent(self):
        if len(set(self.modes)) != len(self.modes) or len(self.modes) == 0:
            raise ValueError(f"invalid support {self.modes}")
        for mode in self.modes:
            if not 0 <= mode < self.cutoffs.num_modes:
                raise ValueError(f"mode {mode} is out of range")
        size = 1
        for mode in self.modes:
            size *= self.cutoffs.per_mode_cutoff[mode]
        if self.matrix.shape != (size, size):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match support size {size}")
        if self.hermitian_flag:
            deviation = np.max(np.abs(self.matrix - self.matrix.conj().T))
            if deviation >= 1e-12:
                raise ValueError(f"matrix flagged Hermitian deviates by {deviation:.2e}")
        return self

    def _positions(self) -> list:
        return list(self.modes)

    def apply(self, state: FockState) -> FockState:
        if state.cutoffs.per_mode_cutoff != self.cutoffs.per_mode_cutoff:
            raise ModeIndexError("operator and state use different cutoffs")
        out = _contract(self.matrix, self._positions(), state.tensor_view(), state.dims)
        return make_state(state.cutoffs, out.reshape(-1))

    def expectation(self, state: FockState) -> complex:
        return state.inner(self.apply(state))

    def lifted(self, modes: Sequence[int]) -> np.ndarray:
        """
        Matrix of this operator on a superset of its support, in ``modes`` order.
        """
        modes = list(modes)
        dims = [self.cutoffs.per_mode_cutoff[m] for m in modes]
        size = int(np.prod(dims))
        positions = [modes.index(m) for m in self.modes]
        identity = np.eye(size, dtype=complex).reshape(dims + [size])
        return _contract(self.matrix, positions, identity, dims).reshape(size, size)

    def to_dense(self) -> np.ndarray:
        return self.lifted(range(self.cutoffs.num_modes))

    def dagger(self) -> "FockOperator":
        return make_operator(
            self.cutoffs, self.modes, self.matrix.conj().T, self.hermitian_flag
        )

    def exponential(self, coefficient: complex) -> "FockOperator":
        return make_operator(self.cutoffs, self.modes, expm(coefficient * self.matrix))

    def unitarity_error(self) -> float:
        product = self.matrix.conj().T @ self.matrix
        return float(np.max(np.abs(product - np.eye(product.shape[0]))))

    def _union(self, other: "FockOperator") -> tuple:
        if self.cutoffs.per_mode_cutoff != other.cutoffs.per_mode_cutoff:
            raise ModeIndexError("operators use different cutoffs")
        return tuple(sorted(set(self.modes) | set(other.modes)))

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        modes = self._union(other)
        return make_operator(self.cutoffs, modes, self.lifted(modes) @ other.lifted(modes))

    def __add__(self, other: "FockOperator") -> "FockOperator":
        modes = self._union(other)
        return make_operator(
            self.cutoffs,
            modes,
            self.lifted(modes) + other.lifted(modes),
            self.hermitian_flag and other.hermitian_flag,
        )

    def __mul__(self, scalar: complex) -> "FockOperator":
        scalar = complex(scalar)
        return make_operator(
            self.cutoffs,
            self.modes,
            scalar * self.matrix,
            self.hermitian_flag and scalar.imag == 0.0,
        )

    __rmul__ = __mul__


def make_operator(
    cutoffs: CutoffProfile, modes: Sequence[int], matrix, hermitian_flag: bool = False
) -> FockOperator:
    try:
        return FockOperator(
            cutoffs=cutoffs, modes=tuple(modes), matrix=matrix, hermitian_flag=hermitian_flag
        )
    except ValidationError as e:
        raise FockCreationError("Error Fock operator not created:" + str(e)) from None


def _check_mode(mode: int, cutoffs: CutoffProfile):
    if not 0 <= mode < cutoffs.num_modes:
        raise ModeIndexError(f"mode {mode} is out of range for {cutoffs.num_modes} modes")


def lowering_matrix(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff)), k=1).astype(complex)


def number_matrix(cutoff: int) -> np.ndarray:
    return np.diag(np.arange(cutoff)).astype(complex)


def parity_matrix(cutoff: int) -> np.ndarray:
    return np.diag((-1.0) ** np.arange(cutoff)).astype(complex)


def phase_matrix(cutoff: int, phi: float) -> np.ndarray:
    return np.diag(np.exp(1j * phi * np.arange(cutoff)))


def single_mode(mode: int, cutoffs: CutoffProfile, matrix, hermitian: bool = False) -> FockOperator:
    _check_mode(mode, cutoffs)
    return make_operator(cutoffs, (mode,), matrix, hermitian)


def annihilation(mode: int, cutoffs: CutoffProfile) -> FockOperator:
    """
    Ladder operator a on ``mode``: a|n> = sqrt(n)|n-1>, identity elsewhere.
    The truncated matrix drops the transition out of the top level.
    """
    _check_mode(mode, cutoffs)
    return single_mode(mode, cutoffs, lowering_matrix(cutoffs.per_mode_cutoff[mode]))


def creation(mode: int, cutoffs: CutoffProfile) -> FockOperator:
    return annihilation(mode, cutoffs).dagger()


def number(mode: int, cutoffs: CutoffProfile) -> FockOperator:
    _check_mode(mode, cutoffs)
    return single_mode(mode, cutoffs, number_matrix(cutoffs.per_mode_cutoff[mode]), True)


def parity(mode: int, cutoffs: CutoffProfile) -> FockOperator:
    _check_mode(mode, cutoffs)
    return single_mode(mode, cutoffs, parity_matrix(cutoffs.per_mode_cutoff[mode]), True)


def phase_shift(mode: int, phi: float, cutoffs: CutoffProfile) -> FockOperator:
    _check_mode(mode, cutoffs)
    return single_mode(mode, cutoffs, phase_matrix(cutoffs.per_mode_cutoff[mode], phi))


def quadrature(mode: int, theta: float, cutoffs: CutoffProfile) -> FockOperator:
    """
    x^(theta) = (a e^{-i theta} + a^dagger e^{i theta}) / sqrt(2).
    """
    _check_mode(mode, cutoffs)
    lowering = lowering_matrix(cutoffs.per_mode_cutoff[mode])
    matrix = (lowering * np.exp(-1j * theta) + lowering.conj().T * np.exp(1j * theta)) / math.sqrt(2.0)
    return single_mode(mode, cutoffs, matrix, True)


def displacement(mode: int, beta: complex, cutoffs: CutoffProfile) -> FockOperator:
    """
    D(beta) = exp(beta a^dagger - conj(beta) a), by matrix exponential of the
    truncated generator.

    Raises TailViolationError when the Poisson mass of D(beta)|0> in the top
    level reaches the tail tolerance.
    """
    _check_mode(mode, cutoffs)
    cutoff = cutoffs.per_mode_cutoff[mode]
    if beta != 0:
        top = cutoff - 1
        log_mass = -abs(beta) ** 2 + top * math.log(abs(beta) ** 2) - math.lgamma(top + 1)
        if log_mass >= math.log(cutoffs.tail_tolerance):
            raise TailViolationError(
                f"displacement {beta} leaves {math.exp(log_mass):.3e} in level {top} of mode {mode}"
            )
    lowering = lowering_matrix(cutoff)
    generator = beta * lowering.conj().T - np.conj(beta) * lowering
    return single_mode(mode, cutoffs, expm(generator))


def squeeze(mode: int, w: complex, cutoffs: CutoffProfile) -> FockOperator:
    """
    S(w) = exp((conj(w) a^2 - w a^dagger^2) / 2) from the truncated generator.
    """
    _check_mode(mode, cutoffs)
    cutoff = cutoffs.per_mode_cutoff[mode]
    lowering = lowering_matrix(cutoff)
    two_photon = lowering @ lowering
    generator = 0.5 * (np.conj(w) * two_photon - w * two_photon.conj().T)
    unitary = expm(generator)
    tail = float(np.sum(np.abs(unitary[-2:, 0]) ** 2))
    if tail >= cutoffs.tail_tolerance:
        raise TailViolationError(
            f"squeezing {w} leaves {tail:.3e} in the top levels of mode {mode}"
        )
    return single_mode(mode, cutoffs, unitary)


def beam_splitter(spec: BeamSplitterSpec, cutoffs: CutoffProfile) -> FockOperator:
    """
    Two-mode beam splitter on spec.modes = (i, j).

    symmetric: B(theta) = exp(i theta/2 (a_i^dagger a_j + a_j^dagger a_i))
    rotation:  U_ij(theta) = exp(theta/2 (a_i^dagger a_j - a_j^dagger a_i))
    """
    i, j = spec.modes
    _check_mode(i, cutoffs)
    _check_mode(j, cutoffs)
    di, dj = cutoffs.per_mode_cutoff[i], cutoffs.per_mode_cutoff[j]
    lower_i = np.kron(lowering_matrix(di), np.eye(dj))
    lower_j = np.kron(np.eye(di), lowering_matrix(dj))
    hop = lower_i.conj().T @ lower_j
    if spec.convention == "symmetric":
        generator = 0.5j * spec.angle * (hop + hop.conj().T)
    else:
        generator = 0.5 * spec.angle * (hop - hop.conj().T)
    return make_operator(cutoffs, (i, j), expm(generator))


class LadderPolynomial:
    """
    Single-mode operator in normal order: sum of c * (a^dagger)^p a^q, kept as
    a {(p, q): c} mapping. Products are normal ordered exactly, so the same
    polynomial is evaluated on coherent terms (as moments) and on truncated
    Fock matrices.
    """

    __array_ufunc__ = None

    def __init__(self, terms: dict = None):
        self.terms = {}
        for (p, q), coefficient in (terms or {}).items():
            key = (int(p), int(q))
            self.terms[key] = self.terms.get(key, 0.0) + complex(coefficient)
        self.terms = {key: c for key, c in self.terms.items() if c != 0}

    @classmethod
    def identity(cls) -> "LadderPolynomial":
        return cls({(0, 0): 1.0})

    @classmethod
    def lowering(cls, power: int = 1) -> "LadderPolynomial":
        return cls({(0, power): 1.0})

    @classmethod
    def raising(cls, power: int = 1) -> "LadderPolynomial":
        return cls({(power, 0): 1.0})

    @classmethod
    def number(cls) -> "LadderPolynomial":
        return cls({(1, 1): 1.0})

    @classmethod
    def quadrature(cls, theta: float) -> "LadderPolynomial":
        return cls(
            {
                (0, 1): np.exp(-1j * theta) / math.sqrt(2.0),
                (1, 0): np.exp(1j * theta) / math.sqrt(2.0),
            }
        )

    def __add__(self, other: "LadderPolynomial") -> "LadderPolynomial":
        merged = dict(self.terms)
        for key, coefficient in other.terms.items():
            merged[key] = merged.get(key, 0.0) + coefficient
        return LadderPolynomial(merged)

    def __sub__(self, other: "LadderPolynomial") -> "LadderPolynomial":
        return self + (-1.0) * other

    def __mul__(self, other):
        if not isinstance(other, LadderPolynomial):
            return LadderPolynomial({key: complex(other) * c for key, c in self.terms.items()})
        product = {}
        for (p, q), c1 in self.terms.items():
            for (r, s), c2 in other.terms.items():
                # a^q a^dagger^r = sum_k C(q,k) C(r,k) k! a^dagger^(r-k) a^(q-k)
                for k in range(min(q, r) + 1):
                    weight = math.comb(q, k) * math.comb(r, k) * math.factorial(k)
                    key = (p + r - k, q + s - k)
                    product[key] = product.get(key, 0.0) + c1 * c2 * weight
        return LadderPolynomial(product)

    def __rmul__(self, scalar):
        return LadderPolynomial({key: complex(scalar) * c for key, c in self.terms.items()})

    def dagger(self) -> "LadderPolynomial":
        return LadderPolynomial({(q, p): np.conj(c) for (p, q), c in self.terms.items()})

    def is_hermitian(self, tolerance: float = 1e-12) -> bool:
        conjugate = self.dagger().terms
        keys = set(self.terms) | set(conjugate)
        return all(
            abs(self.terms.get(key, 0.0) - conjugate.get(key, 0.0)) < tolerance for key in keys
        )

    def matrix(self, cutoff: int) -> np.ndarray:
        lowering = lowering_matrix(cutoff)
        raising = lowering.conj().T
        result = np.zeros((cutoff, cutoff), dtype=complex)
        for (p, q), coefficient in self.terms.items():
            result += coefficient * (
                np.linalg.matrix_power(raising, p) @ np.linalg.matrix_power(lowering, q)
            )
        return result

    def __repr__(self) -> str:
        return f"LadderPolynomial({self.terms})"


def apply_local(state: FockState, mode: int, matrix: np.ndarray) -> FockState:
    _check_mode(mode, state.cutoffs)
    out = _contract(np.asarray(matrix, dtype=complex), [mode], state.tensor_view(), state.dims)
    return make_state(state.cutoffs, out.reshape(-1))


def expectation(state: FockState, factors: dict) -> complex:
    """
    <state| prod_j P_j |state> for single-mode LadderPolynomials keyed by mode.
    """
    image = state
    for mode, polynomial in factors.items():
        image = apply_local(image, mode, polynomial.matrix(state.dims[mode]))
    return state.inner(image)


class DensityOperator(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    cutoffs: CutoffProfile
    matrix: np.ndarray

    @field_validator("matrix", mode="before")
    @classmethod
    def _complex_matrix(cls, value):
        return np.asarray(value, dtype=complex)

    @model_validator(mode="after")
    def _is_a_density(self):
        size = self.cutoffs.dimension
        if self.matrix.shape != (size, size):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match dimension {size}")
        trace = np.trace(self.matrix)
        if abs(trace - 1.0) > 1e-8:
            raise ValueError(f"trace {trace} is not 1")
        deviation = np.max(np.abs(self.matrix - self.matrix.conj().T))
        if deviation > 1e-10:
            raise ValueError(f"matrix is not Hermitian (deviation {deviation:.2e})")
        lowest = np.linalg.eigvalsh(self.matrix).min()
        if lowest < -1e-10:
            raise ValueError(f"matrix has eigenvalue {lowest:.2e}")
        return self

    @property
    def num_modes(self) -> int:
        return self.cutoffs.num_modes

    @property
    def dims(self) -> list:
        return list(self.cutoffs.per_mode_cutoff)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def fidelity_with(self, state: FockState) -> float:
        return float(np.real(np.vdot(state.amplitudes, self.matrix @ state.amplitudes)))


def make_density(cutoffs: CutoffProfile, matrix) -> DensityOperator:
    try:
        return DensityOperator(cutoffs=cutoffs, matrix=matrix)
    except ValidationError as e:
        raise DensityCreationError("Error density operator not created:" + str(e)) from None


def settle_density(cutoffs: CutoffProfile, matrix, tolerance: float = SETTLE_TOLERANCE) -> DensityOperator:
    """
    Density operator from an integrator or channel output: the Hermitian part,
    with negative eigenvalues down to -``tolerance`` set to zero and the trace
    restored to 1. A lower eigenvalue raises NotPositiveError.
    """
    matrix = np.asarray(matrix, dtype=complex)
    hermitian = 0.5 * (matrix + matrix.conj().T)
    values, vectors = np.linalg.eigh(hermitian)
    lowest = float(values.min())
    if lowest < -tolerance:
        raise NotPositiveError(f"density has eigenvalue {lowest:.3e} below -{tolerance:.1e}")
    if lowest < 0.0:
        logger.debug(f"clipping eigenvalue {lowest:.3e}")
        values = np.clip(values, 0.0, None)
        hermitian = (vectors * values) @ vectors.conj().T
        hermitian = 0.5 * (hermitian + hermitian.conj().T)
    return make_density(cutoffs, hermitian / np.trace(hermitian).real)


def _keep_list(keep, num_modes: int) -> list:
    keep = sorted(set(keep))
    if len(keep) == 0 or len(keep) == num_modes:
        raise KeepSetError("keep must be a nonempty proper subset of the modes")
    if keep[0] < 0 or keep[-1] >= num_modes:
        raise ModeIndexError(f"keep set {keep} is out of range for {num_modes} modes")
    return keep


def partial_trace(rho: DensityOperator, keep) -> DensityOperator:
    """
    Trace out every mode not in ``keep``.

    Parameters:
    - rho (DensityOperator): The global density operator.
    - keep (set[int]): The modes to keep, a nonempty proper subset.

    Returns:
    - The reduced DensityOperator on the kept modes, in ascending mode order.
    """
    keep = _keep_list(keep, rho.num_modes)
    n = rho.num_modes
    dims = rho.dims
    ket = list(string.ascii_letters[:n])
    bra = list(string.ascii_letters[n : 2 * n])
    for mode in range(n):
        if mode not in keep:
            bra[mode] = ket[mode]
    output = "".join(ket[m] for m in keep) + "".join(bra[m] for m in keep)
    reduced = np.einsum("".join(ket) + "".join(bra) + "->" + output, rho.matrix.reshape(dims + dims))
    size = int(np.prod([dims[m] for m in keep]))
    return make_density(rho.cutoffs.subset(keep), reduced.reshape(size, size))


def reduced_density(state: FockState, keep) -> DensityOperator:
    """
    Reduced density of a pure state, contracted straight from its amplitudes.
    """
    keep = _keep_list(keep, state.num_modes)
    size = int(np.prod([state.dims[m] for m in keep]))
    matrix = np.moveaxis(state.tensor_view(), keep, list(range(len(keep)))).reshape(size, -1)
    return make_density(state.cutoffs.subset(keep), matrix @ matrix.conj().T)


def spectrum_entropy(eigenvalues: np.ndarray, clip: float = None) -> float:
    clip = config.EIGEN_CLIP if clip is None else clip
    kept = eigenvalues[eigenvalues > clip]
    return max(0.0, float(-np.sum(kept * np.log2(kept))))


def spectrum_fluctuation(eigenvalues: np.ndarray, clip: float = None) -> float:
    """
    Root variance of H_E = -log2(rho) over the clipped support.
    """
    clip = config.EIGEN_CLIP if clip is None else clip
    kept = eigenvalues[eigenvalues > clip]
    if kept.size == 0:
        raise EmptySupportError("the reduced state has no eigenvalue above the clip")
    hamiltonian = -np.log2(kept)
    mean = np.sum(kept * hamiltonian)
    second = np.sum(kept * hamiltonian**2)
    return float(math.sqrt(max(second - mean**2, 0.0)))


def check_positive(eigenvalues: np.ndarray):
    lowest = float(eigenvalues.min())
    if lowest < -1e-10:
        raise NotPositiveError(f"density has eigenvalue {lowest:.3e}")


def von_neumann_entropy(rho: DensityOperator) -> float:
    """
    S = -sum lambda log2 lambda over eigenvalues above the eigen clip, in bits.
    """
    eigenvalues = rho.eigenvalues()
    check_positive(eigenvalues)
    return spectrum_entropy(eigenvalues)
