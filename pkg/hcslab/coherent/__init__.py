"""
Exact analytic backend: states are finite superpositions of multimode coherent
terms, stored as a coefficient vector ``coeffs`` (T,) and a label matrix
``alphas`` (T, N). Overlaps, moments, partial traces, linear optics and
amplitude damping are all closed-form operations on the labels, so this
backend scales to amplitudes and mode counts the Fock backend cannot reach.
"""

import itertools
import logging
import math
from typing import NamedTuple, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from hcslab import config, fock
from hcslab.custom_exceptions import (
    ConfigurationError,
    DegenerateStateError,
    SubsystemError,
    ToleranceError,
)
from hcslab.validator import BeamSplitterSpec, CutoffProfile

logger = logging.getLogger(__name__)


class ModeMismatchError(SubsystemError):
    pass


class CoherentCreationError(ConfigurationError):
    pass


class ZeroSuperpositionError(DegenerateStateError):
    pass


class GramConditionError(ToleranceError):
    pass


class CoherentTerm(NamedTuple):
    coeff: complex
    alphas: tuple


def kernel_matrix(bra_labels: np.ndarray, ket_labels: np.ndarray) -> np.ndarray:
    """
    Matrix of overlaps <a_i|b_j> between rows of two label matrices.
    """
    bra_labels = np.atleast_2d(bra_labels)
    ket_labels = np.atleast_2d(ket_labels)
    exponent = (
        -0.5 * np.sum(np.abs(bra_labels) ** 2, axis=1)[:, None]
        - 0.5 * np.sum(np.abs(ket_labels) ** 2, axis=1)[None, :]
        + bra_labels.conj() @ ket_labels.T
    )
    return np.exp(exponent)


def row_kernel(bra_labels: np.ndarray, ket_labels: np.ndarray) -> np.ndarray:
    """
    Row-wise overlaps <a_i|b_i>.
    """
    exponent = np.sum(
        -0.5 * np.abs(bra_labels) ** 2 - 0.5 * np.abs(ket_labels) ** 2 + bra_labels.conj() * ket_labels,
        axis=1,
    )
    return np.exp(exponent)


def overlap_kernel(alphas: Sequence[complex], betas: Sequence[complex]) -> complex:
    """
    <alpha_vec|beta_vec> = prod_j exp(-|a_j|^2/2 - |b_j|^2/2 + conj(a_j) b_j).
    """
    if len(alphas) != len(betas):
        raise ModeMismatchError(f"label lengths differ: {len(alphas)} vs {len(betas)}")
    return complex(
        kernel_matrix(np.asarray(alphas, dtype=complex), np.asarray(betas, dtype=complex))[0, 0]
    )


def _merge_rows(coeffs: np.ndarray, rows: np.ndarray, distance: float) -> tuple:
    # groups rows closer than ``distance``; coefficients of a group are summed
    representatives = []
    merged = []
    for coeff, row in zip(coeffs, rows):
        for index, representative in enumerate(representatives):
            if np.linalg.norm(row - representative) <= distance:
                merged[index] += coeff
                break
        else:
            representatives.append(row)
            merged.append(complex(coeff))
    return np.array(merged, dtype=complex), np.array(representatives, dtype=complex).reshape(
        len(representatives), rows.shape[1]
    )


class CoherentSuperposition(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    coeffs: np.ndarray
    alphas: np.ndarray

    @field_validator("coeffs", "alphas", mode="before")
    @classmethod
    def _complex_array(cls, value):
        return np.asarray(value, dtype=complex)

    @model_validator(mode="after")
    def _shapes_agree(self):
        if self.coeffs.ndim != 1 or self.alphas.ndim != 2:
            raise ValueError("coeffs must be a vector and alphas a (terms, modes) matrix")
        if self.coeffs.shape[0] != self.alphas.shape[0] or self.coeffs.shape[0] == 0:
            raise ValueError(
                f"{self.coeffs.shape[0]} coefficients for {self.alphas.shape[0]} label rows"
            )
        if not (np.all(np.isfinite(self.coeffs)) and np.all(np.isfinite(self.alphas))):
            raise ValueError("coefficients and labels must be finite")
        return self

    @property
    def num_modes(self) -> int:
        return self.alphas.shape[1]

    @property
    def num_terms(self) -> int:
        return self.coeffs.shape[0]

    def terms(self) -> list:
        return [CoherentTerm(complex(c), tuple(row)) for c, row in zip(self.coeffs, self.alphas)]

    def gram(self) -> np.ndarray:
        return kernel_matrix(self.alphas, self.alphas)

    def norm_squared(self) -> float:
        return float(np.real(self.coeffs.conj() @ self.gram() @ self.coeffs))

    def norm(self) -> float:
        return math.sqrt(max(self.norm_squared(), 0.0))

    def normalized(self) -> "CoherentSuperposition":
        norm = self.norm()
        if norm < 1e-150:
            raise ZeroSuperpositionError("cannot normalize a zero superposition")
        return make_superposition(self.coeffs / norm, self.alphas)

    def merged(self, distance: float = None) -> "CoherentSuperposition":
        distance = config.MERGE_DISTANCE if distance is None else distance
        coeffs, alphas = _merge_rows(self.coeffs, self.alphas, distance)
        return make_superposition(coeffs, alphas)

    def tensor(self, other: "CoherentSuperposition") -> "CoherentSuperposition":
        left = np.repeat(self.alphas, other.num_terms, axis=0)
        right = np.tile(other.alphas, (self.num_terms, 1))
        return make_superposition(
            np.kron(self.coeffs, other.coeffs), np.concatenate([left, right], axis=1)
        )

    def __add__(self, other: "CoherentSuperposition") -> "CoherentSuperposition":
        _same_modes(self, other)
        return make_superposition(
            np.concatenate([self.coeffs, other.coeffs]),
            np.concatenate([self.alphas, other.alphas]),
        ).merged()

    def __sub__(self, other: "CoherentSuperposition") -> "CoherentSuperposition":
        return self + (-1.0) * other

    __array_ufunc__ = None

    def __mul__(self, scalar: complex) -> "CoherentSuperposition":
        return make_superposition(complex(scalar) * self.coeffs, self.alphas)

    __rmul__ = __mul__


def make_superposition(coeffs, alphas) -> CoherentSuperposition:
    try:
        return CoherentSuperposition(coeffs=coeffs, alphas=alphas)
    except ValidationError as e:
        raise CoherentCreationError("Error coherent superposition not created:" + str(e)) from None


def coherent(alphas: Sequence[complex]) -> CoherentSuperposition:
    """
    Product coherent state |alpha_1, ..., alpha_N>.
    """
    return make_superposition([1.0], [list(alphas)])


def tensor(*states: CoherentSuperposition) -> CoherentSuperposition:
    result = states[0]
    for state in states[1:]:
        result = result.tensor(state)
    return result.merged()


def _same_modes(psi, phi):
    if psi.num_modes != phi.num_modes:
        raise ModeMismatchError(f"mode counts differ: {psi.num_modes} vs {phi.num_modes}")


def inner_product(psi: CoherentSuperposition, phi: CoherentSuperposition) -> complex:
    _same_modes(psi, phi)
    return complex(psi.coeffs.conj() @ kernel_matrix(psi.alphas, phi.alphas) @ phi.coeffs)


def fidelity(psi: CoherentSuperposition, phi: CoherentSuperposition) -> float:
    overlap = abs(inner_product(psi, phi)) ** 2
    return float(overlap / (psi.norm_squared() * phi.norm_squared()))


def cross_moment(psi: CoherentSuperposition, phi: CoherentSuperposition, powers: dict) -> complex:
    """
    <psi| prod_j a_j^dagger^p_j a_j^q_j |phi> for ``powers`` = {mode: (p, q)}.

    Each pair <beta|...|alpha> contributes conj(beta)^p alpha^q <beta|alpha>.
    """
    _same_modes(psi, phi)
    bra_weight = np.ones(psi.num_terms, dtype=complex)
    ket_weight = np.ones(phi.num_terms, dtype=complex)
    for mode, (p, q) in powers.items():
        if not 0 <= mode < psi.num_modes:
            raise ModeMismatchError(f"mode {mode} is out of range")
        bra_weight = bra_weight * psi.alphas[:, mode].conj() ** p
        ket_weight = ket_weight * phi.alphas[:, mode] ** q
    kernel = kernel_matrix(psi.alphas, phi.alphas)
    return complex((psi.coeffs * bra_weight.conj()).conj() @ kernel @ (phi.coeffs * ket_weight))


def moment(psi: CoherentSuperposition, powers: dict) -> complex:
    return cross_moment(psi, psi, powers)


def matrix_element(psi: CoherentSuperposition, phi: CoherentSuperposition, factors: dict) -> complex:
    """
    <psi| prod_j P_j |phi> for single-mode LadderPolynomials keyed by mode.
    """
    modes = list(factors)
    total = 0.0
    for combination in itertools.product(*(factors[m].terms.items() for m in modes)):
        weight = 1.0
        powers = {}
        for mode, ((p, q), coefficient) in zip(modes, combination):
            weight *= coefficient
            powers[mode] = (p, q)
        total += weight * cross_moment(psi, phi, powers)
    return complex(total)


def expectation(psi: CoherentSuperposition, factors: dict) -> complex:
    return matrix_element(psi, psi, factors)


def apply_transfer(
    psi: CoherentSuperposition, modes: Sequence[int], transfer: np.ndarray
) -> CoherentSuperposition:
    """
    Passive linear optics on ``modes``: labels map as alpha -> T alpha.
    """
    modes = list(modes)
    for mode in modes:
        if not 0 <= mode < psi.num_modes:
            raise ModeMismatchError(f"mode {mode} is out of range")
    alphas = psi.alphas.copy()
    alphas[:, modes] = psi.alphas[:, modes] @ np.asarray(transfer, dtype=complex).T
    return make_superposition(psi.coeffs, alphas)


def beam_splitter_transfer(spec: BeamSplitterSpec) -> np.ndarray:
    c = math.cos(spec.angle / 2.0)
    s = math.sin(spec.angle / 2.0)
    if spec.convention == "symmetric":
        return np.array([[c, 1j * s], [1j * s, c]])
    return np.array([[c, s], [-s, c]], dtype=complex)


def beam_splitter(psi: CoherentSuperposition, spec: BeamSplitterSpec) -> CoherentSuperposition:
    return apply_transfer(psi, spec.modes, beam_splitter_transfer(spec))


def phase_shift(psi: CoherentSuperposition, mode: int, phi: float) -> CoherentSuperposition:
    return apply_transfer(psi, [mode], np.array([[np.exp(1j * phi)]]))


def parity(psi: CoherentSuperposition, mode: int) -> CoherentSuperposition:
    return apply_transfer(psi, [mode], np.array([[-1.0]]))


def annihilate(psi: CoherentSuperposition, mode: int) -> CoherentSuperposition:
    """
    a_mode psi, unnormalized: each coefficient picks up its label.
    """
    if not 0 <= mode < psi.num_modes:
        raise ModeMismatchError(f"mode {mode} is out of range")
    return make_superposition(psi.coeffs * psi.alphas[:, mode], psi.alphas)


def displace(psi: CoherentSuperposition, mode: int, beta: complex) -> CoherentSuperposition:
    """
    D(beta)|alpha> = exp((beta conj(alpha) - conj(beta) alpha)/2) |alpha + beta>.
    """
    if not 0 <= mode < psi.num_modes:
        raise ModeMismatchError(f"mode {mode} is out of range")
    labels = psi.alphas[:, mode]
    phases = np.exp(0.5 * (beta * labels.conj() - np.conj(beta) * labels))
    alphas = psi.alphas.copy()
    alphas[:, mode] = labels + beta
    return make_superposition(psi.coeffs * phases, alphas)


def to_fock(psi: CoherentSuperposition, cutoffs: CutoffProfile) -> fock.FockState:
    """
    Expand in the truncated Fock basis and check the tail of every mode.
    """
    if cutoffs.num_modes != psi.num_modes:
        raise ModeMismatchError(f"{cutoffs.num_modes} cutoffs for {psi.num_modes} modes")
    amplitudes = np.zeros(cutoffs.dimension, dtype=complex)
    for coeff, row in zip(psi.coeffs, psi.alphas):
        vector = np.ones(1, dtype=complex)
        for alpha, cutoff in zip(row, cutoffs.per_mode_cutoff):
            vector = np.kron(vector, fock.coherent_amplitudes(alpha, cutoff))
        amplitudes += coeff * vector
    logger.debug(f"expanded {psi.num_terms} coherent terms into dimension {cutoffs.dimension}")
    return fock.check_tail(fock.make_state(cutoffs, amplitudes))


class CoherentDensity(BaseModel):
    """
    Density operator sum_d c_d |k_d><b_d| over coherent dyads.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    coeffs: np.ndarray
    kets: np.ndarray
    bras: np.ndarray

    @field_validator("coeffs", "kets", "bras", mode="before")
    @classmethod
    def _complex_array(cls, value):
        return np.asarray(value, dtype=complex)

    @model_validator(mode="after")
    def _unit_trace(self):
        if self.kets.shape != self.bras.shape or self.kets.ndim != 2:
            raise ValueError("kets and bras must be label matrices of equal shape")
        if self.coeffs.shape != (self.kets.shape[0],):
            raise ValueError("one coefficient per dyad is required")
        trace = np.sum(self.coeffs * row_kernel(self.bras, self.kets))
        if abs(trace - 1.0) > 1e-10:
            raise ValueError(f"trace {trace} is not 1")
        return self

    @property
    def num_modes(self) -> int:
        return self.kets.shape[1]

    @property
    def num_dyads(self) -> int:
        return self.coeffs.shape[0]

    @property
    def trace(self) -> float:
        return float(np.real(np.sum(self.coeffs * row_kernel(self.bras, self.kets))))

    def purity(self) -> float:
        # tr(rho^2) = sum_ij c_i c_j <b_i|k_j> <b_j|k_i>
        cross = kernel_matrix(self.bras, self.kets)
        return float(np.real(self.coeffs @ (cross * cross.T) @ self.coeffs))

    def is_hermitian(self, tolerance: float = 1e-10) -> bool:
        adjoint = make_density_unchecked(self.coeffs.conj(), self.bras, self.kets)
        difference = _hilbert_schmidt_distance(self, adjoint)
        return difference < tolerance

    def damped(self, eta: float) -> "CoherentDensity":
        """
        Independent amplitude damping with transmissivity ``eta`` on every mode:
        |k><b| -> exp((1 - eta)(-|k|^2/2 - |b|^2/2 + conj(b) k)) |sqrt(eta) k><sqrt(eta) b|.
        """
        exponent = np.sum(
            -0.5 * np.abs(self.kets) ** 2 - 0.5 * np.abs(self.bras) ** 2 + self.bras.conj() * self.kets,
            axis=1,
        )
        root = math.sqrt(eta)
        return make_density(
            self.coeffs * np.exp((1.0 - eta) * exponent), root * self.kets, root * self.bras
        )


def _hilbert_schmidt_distance(rho: CoherentDensity, sigma: CoherentDensity) -> float:
    # Hilbert-Schmidt norm of rho - sigma through the dyad kernels
    coeffs = np.concatenate([rho.coeffs, -sigma.coeffs])
    kets = np.concatenate([rho.kets, sigma.kets])
    bras = np.concatenate([rho.bras, sigma.bras])
    value = np.real(coeffs.conj() @ (kernel_matrix(kets, kets) * kernel_matrix(bras, bras).T) @ coeffs)
    return math.sqrt(max(float(value), 0.0))


def make_density(coeffs, kets, bras) -> CoherentDensity:
    try:
        return CoherentDensity(coeffs=coeffs, kets=kets, bras=bras)
    except ValidationError as e:
        raise CoherentCreationError("Error coherent density not created:" + str(e)) from None


def make_density_unchecked(coeffs, kets, bras) -> CoherentDensity:
    return CoherentDensity.model_construct(
        coeffs=np.asarray(coeffs, dtype=complex),
        kets=np.asarray(kets, dtype=complex),
        bras=np.asarray(bras, dtype=complex),
    )


def merge_dyads(rho: CoherentDensity, distance: float = None) -> CoherentDensity:
    distance = config.MERGE_DISTANCE if distance is None else distance
    rows = np.concatenate([rho.kets, rho.bras], axis=1)
    coeffs, rows = _merge_rows(rho.coeffs, rows, distance)
    n = rho.num_modes
    return make_density(coeffs, rows[:, :n], rows[:, n:])


def pure_density(psi: CoherentSuperposition) -> CoherentDensity:
    psi = psi.normalized()
    t = psi.num_terms
    coeffs = np.outer(psi.coeffs, psi.coeffs.conj()).reshape(-1)
    kets = np.repeat(psi.alphas, t, axis=0)
    bras = np.tile(psi.alphas, (t, 1))
    return make_density(coeffs, kets, bras)


def reduce(rho: CoherentDensity, keep) -> CoherentDensity:
    """
    Partial trace: traced modes fold their overlaps <b|k> into the coefficients.

    Parameters:
    - rho (CoherentDensity): The global density.
    - keep (set[int]): The modes to keep, a nonempty proper subset.

    Returns:
    - The reduced CoherentDensity, duplicate dyads merged.
    """
    keep = sorted(set(keep))
    if len(keep) == 0 or len(keep) == rho.num_modes:
        raise fock.KeepSetError("keep must be a nonempty proper subset of the modes")
    if keep[0] < 0 or keep[-1] >= rho.num_modes:
        raise ModeMismatchError(f"keep set {keep} is out of range for {rho.num_modes} modes")
    traced = [m for m in range(rho.num_modes) if m not in keep]
    factors = row_kernel(rho.bras[:, traced], rho.kets[:, traced])
    return merge_dyads(make_density(rho.coeffs * factors, rho.kets[:, keep], rho.bras[:, keep]))


def density_fidelity(rho: CoherentDensity, psi: CoherentSuperposition) -> float:
    """
    <psi|rho|psi> for a normalized psi.
    """
    psi = psi.normalized()
    left = psi.coeffs.conj() @ kernel_matrix(psi.alphas, rho.kets)
    right = kernel_matrix(rho.bras, psi.alphas) @ psi.coeffs
    return float(np.real(np.sum(left * rho.coeffs * right)))


def density_spectrum(rho: CoherentDensity) -> np.ndarray:
    """
    Nonzero spectrum of a dyad-set density through its Gram matrix.

    With distinct labels l_i, rho = sum_ij C_ij |l_i><l_j| and Gram G = B B^dagger,
    the nonzero eigenvalues of rho are those of B^dagger C B.
    """
    n = rho.num_modes
    stacked = np.concatenate([rho.kets, rho.bras])
    _, labels = _merge_rows(np.zeros(stacked.shape[0]), stacked, config.MERGE_DISTANCE)

    def index_of(row):
        return int(np.argmin(np.linalg.norm(labels - row, axis=1)))

    size = labels.shape[0]
    coefficients = np.zeros((size, size), dtype=complex)
    for coeff, ket, bra in zip(rho.coeffs, rho.kets, rho.bras):
        coefficients[index_of(ket), index_of(bra)] += coeff
    gram = kernel_matrix(labels.reshape(size, n), labels.reshape(size, n))
    values, vectors = np.linalg.eigh(gram)
    largest = values.max()
    condition = largest / values.min() if values.min() > 0 else math.inf
    if condition > config.GRAM_CONDITION_LIMIT:
        raise GramConditionError(
            f"Gram matrix of {size} coherent labels has condition {condition:.3e}; merge nearby terms"
        )
    retained = values > config.GRAM_REGULARIZATION * largest
    root = vectors[:, retained] * np.sqrt(values[retained])
    reduced = root.conj().T @ coefficients @ root
    reduced = 0.5 * (reduced + reduced.conj().T)
    logger.debug(f"Gram spectrum over {size} labels, condition {condition:.3e}")
    spectrum = np.linalg.eigvalsh(reduced)
    fock.check_positive(spectrum)
    return spectrum


def entropy_from_gram(rho: CoherentDensity) -> float:
    return fock.spectrum_entropy(density_spectrum(rho))


def density_to_fock(rho: CoherentDensity, cutoffs: CutoffProfile) -> fock.DensityOperator:
    if cutoffs.num_modes != rho.num_modes:
        raise ModeMismatchError(f"{cutoffs.num_modes} cutoffs for {rho.num_modes} modes")

    def vector(row):
        result = np.ones(1, dtype=complex)
        for alpha, cutoff in zip(row, cutoffs.per_mode_cutoff):
            result = np.kron(result, fock.coherent_amplitudes(alpha, cutoff))
        return result

    kets = np.array([vector(row) for row in rho.kets])
    bras = np.array([vector(row) for row in rho.bras])
    matrix = (kets.T * rho.coeffs) @ bras.conj()
    return fock.make_density(cutoffs, matrix)


def husimi_amplitudes(psi: CoherentSuperposition, points: np.ndarray) -> np.ndarray:
    """
    <beta|psi> at every row of ``points`` (P, N).
    """
    return kernel_matrix(np.atleast_2d(points), psi.alphas) @ psi.coeffs


def wigner_values(rho: CoherentDensity, points: np.ndarray) -> np.ndarray:
    """
    (2/pi)^N tr(rho D(g) Pi D(-g)) at every row of ``points`` (P, N), using
    <b|D(g) Pi D(-g)|k> = exp(2i Im(conj(g) k)) <b|2g - k> per mode.
    """
    points = np.atleast_2d(np.asarray(points, dtype=complex))
    kets = rho.kets[None, :, :]
    bras = rho.bras[None, :, :]
    gamma = points[:, None, :]
    target = 2.0 * gamma - kets
    exponent = (
        2j * np.imag(gamma.conj() * kets)
        - 0.5 * np.abs(bras) ** 2
        - 0.5 * np.abs(target) ** 2
        + bras.conj() * target
    )
    terms = np.exp(np.sum(exponent, axis=2)) @ rho.coeffs
    return (2.0 / math.pi) ** rho.num_modes * np.real(terms)


def bargmann_values(psi: CoherentSuperposition, points: np.ndarray) -> np.ndarray:
    """
    f(z) = sum_t c_t prod_j exp(-|alpha_tj|^2/2 + alpha_tj z_j).
    """
    points = np.atleast_2d(np.asarray(points, dtype=complex))
    exponent = -0.5 * np.sum(np.abs(psi.alphas) ** 2, axis=1)[None, :] + points @ psi.alphas.T
    return np.exp(exponent) @ psi.coeffs
