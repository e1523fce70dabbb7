"""
Variance maximization over 1-local observables, pure-state quantum Fisher
information and the usefulness ratio N^rF of a two-branch superposition.

A 1-local observable is H = sum_{j,k} c_{jk} G_k^{(j)} with generators G_k of a
fixed single-mode algebra placed on mode j. Coefficients are laid out
mode-major (index j * K + k) and normalized to unit Euclidean norm, so the
maximal variance is the top eigenvalue of the symmetrized covariance matrix.
"""

import logging
import math
from typing import Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from hcslab import catalog, coherent, fock
from hcslab.custom_exceptions import ConfigurationError, DegenerateStateError, ToleranceError
from hcslab.fock import FockOperator, FockState, LadderPolynomial
from hcslab.validator import MetrologyReport

logger = logging.getLogger(__name__)


class CovarianceError(ToleranceError):
    pass


class DegenerateBranchesError(DegenerateStateError):
    pass


class AlgebraCreationError(ConfigurationError):
    pass


class CoefficientLengthError(ConfigurationError):
    pass


class NonHermitianGeneratorError(ConfigurationError):
    pass


def _generators(name: str) -> list:
    x0 = LadderPolynomial.quadrature(0.0)
    x1 = LadderPolynomial.quadrature(math.pi / 2.0)
    if name == "h3":
        return [x0, x1]
    if name == "h4":
        return [x0, x1, LadderPolynomial.number()]
    return [
        LadderPolynomial({(1, 1): 0.5, (0, 0): 0.25}),
        LadderPolynomial({(0, 2): 0.5, (2, 0): 0.5}),
        LadderPolynomial({(0, 2): 0.5j, (2, 0): -0.5j}),
    ]


class AlgebraSpec(BaseModel):
    """
    Named single-mode algebra and its Hermitian generator basis.

    h3: x^(0), x^(pi/2); h4 adds a^dagger a; sl2: n/2 + 1/4, (a^2 + a^dagger^2)/2,
    i(a^2 - a^dagger^2)/2. ``mixing`` optionally replaces the basis by real
    orthogonal combinations of it.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: Literal["h3", "h4", "sl2"]
    include_identity: bool = False
    mixing: Optional[np.ndarray] = None

    @model_validator(mode="after")
    def _mixing_is_orthogonal(self):
        if self.mixing is not None:
            size = len(_generators(self.name))
            if self.mixing.shape != (size, size):
                raise ValueError(f"mixing must be {size}x{size} for {self.name}")
            if np.max(np.abs(self.mixing @ self.mixing.T - np.eye(size))) > 1e-10:
                raise ValueError("mixing must be real orthogonal")
        return self

    def generators(self) -> list:
        base = _generators(self.name)
        if self.mixing is not None:
            mixed = []
            for row in self.mixing:
                combination = LadderPolynomial()
                for weight, generator in zip(row, base):
                    combination = combination + float(weight) * generator
                mixed.append(combination)
            base = mixed
        if self.include_identity:
            base = base + [LadderPolynomial.identity()]
        for generator in base:
            if not generator.is_hermitian():
                raise NonHermitianGeneratorError(f"{generator} is not Hermitian")
        return base

    def fock_matrices(self, cutoff: int) -> list:
        return [generator.matrix(cutoff) for generator in self.generators()]


def algebra(name: str, include_identity: bool = False, mixing: np.ndarray = None) -> AlgebraSpec:
    try:
        return AlgebraSpec(name=name, include_identity=include_identity, mixing=mixing)
    except ValidationError as e:
        raise AlgebraCreationError("Error algebra not created:" + str(e)) from None


def _fock_covariance(state: FockState, matrices: list) -> np.ndarray:
    # Re<G_a psi|G_b psi> - <G_a><G_b> with the same generator matrices on every mode
    images = []
    for mode in range(state.num_modes):
        for matrix in matrices:
            images.append(fock.apply_local(state, mode, matrix).amplitudes)
    images = np.array(images)
    means = np.real(images @ state.amplitudes.conj())
    gram = np.real(images.conj() @ images.T)
    return gram - np.outer(means, means)


def _coherent_covariance(state: coherent.CoherentSuperposition, generators: list) -> np.ndarray:
    labels = [(mode, generator) for mode in range(state.num_modes) for generator in generators]
    means = np.array([coherent.expectation(state, {mode: g}).real for mode, g in labels])
    size = len(labels)
    covariance = np.zeros((size, size))
    for a in range(size):
        for b in range(a, size):
            (ma, ga), (mb, gb) = labels[a], labels[b]
            factors = {ma: ga * gb} if ma == mb else {ma: ga, mb: gb}
            value = coherent.expectation(state, factors).real - means[a] * means[b]
            covariance[a, b] = covariance[b, a] = value
    return covariance


def covariance_matrix(state, spec: AlgebraSpec, matrices: list = None) -> np.ndarray:
    """
    Symmetrized covariance of the generators on every mode, mode-major.

    Parameters:
    - state (FockState | CoherentSuperposition): A normalized pure state.
    - spec (AlgebraSpec): The algebra.
    - matrices (list[np.ndarray]): Fock matrices replacing the algebra basis.

    Returns:
    - The (N*K, N*K) real symmetric matrix.
    """
    if isinstance(state, FockState):
        if matrices is None:
            cutoff = state.dims[0]
            if any(d != cutoff for d in state.dims):
                raise fock.ModeIndexError("covariance needs equal cutoffs on every mode")
            matrices = spec.fock_matrices(cutoff)
        return _fock_covariance(state, matrices)
    return _coherent_covariance(state, spec.generators())


def one_local_variance(state, spec: AlgebraSpec, coeffs: Sequence[float]) -> float:
    covariance = covariance_matrix(state, spec)
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (covariance.shape[0],):
        raise CoefficientLengthError(
            f"{coeffs.shape[0]} coefficients for {covariance.shape[0]} mode-generator pairs"
        )
    return float(coeffs @ covariance @ coeffs)


def _top_eigenpair(covariance: np.ndarray) -> tuple:
    values, vectors = np.linalg.eigh(covariance)
    if values[0] < -1e-10:
        raise CovarianceError(f"covariance matrix has eigenvalue {values[0]:.3e}")
    vector = vectors[:, -1]
    if vector[np.argmax(np.abs(vector))] < 0:
        vector = -vector
    return float(values[-1]), vector


def max_one_local_variance(state, spec: AlgebraSpec, matrices: list = None) -> MetrologyReport:
    """
    Maximal variance over unit-norm 1-local coefficient vectors and its maximizer.
    """
    top, vector = _top_eigenpair(covariance_matrix(state, spec, matrices))
    return MetrologyReport(
        max_variance=top,
        optimal_coefficients=[float(v) for v in vector],
        qfi=4.0 * top,
        algebra=spec.name,
        num_modes=state.num_modes,
    )


def nrf(state, branches: Sequence, spec: AlgebraSpec, matrices: list = None) -> MetrologyReport:
    """
    Maximal 1-local variance of ``state`` over the mean of the branch maxima.

    Raises DegenerateBranchesError when every branch is an eigenvector of the
    whole algebra (denominator below 1e-12).
    """
    report = max_one_local_variance(state, spec, matrices)
    branch_maxima = [max_one_local_variance(b, spec, matrices).max_variance for b in branches]
    denominator = float(np.mean(branch_maxima))
    if denominator < 1e-12:
        raise DegenerateBranchesError(f"branch variances average to {denominator:.3e}")
    return report.model_copy(
        update={"nrf": report.max_variance / denominator, "branch_max_variances": branch_maxima}
    )


def qfi_pure(state: FockState, operator: FockOperator) -> float:
    """
    4 Var(H) for a pure state and a Hermitian FockOperator.
    """
    deviation = float(np.max(np.abs(operator.matrix - operator.matrix.conj().T)))
    if deviation > 1e-12:
        raise NonHermitianGeneratorError(f"generator deviates from Hermitian by {deviation:.2e}")
    image = operator.apply(state)
    mean = state.inner(image).real
    second = image.inner(image).real
    return float(4.0 * (second - mean**2))


def two_photon_coefficients(N: int, z: complex) -> np.ndarray:
    """
    sl2 coefficients of sum_j (conj(z) a_j^2 + z a_j^dagger^2).
    """
    return np.tile([0.0, 2.0 * np.real(z), -2.0 * np.imag(z)], N)


def omega_two_photon_variance(N: int, alpha: float, z: complex) -> float:
    """
    Variance of sum_j (conj(z) a_j^2 + z a_j^dagger^2) in Omega(alpha), real alpha.
    """
    x = alpha * alpha
    r = np.real(np.conj(z) * x)
    modulus = abs(z) ** 2
    single = (
        2.0 * np.real(np.conj(z) ** 2 * x * x)
        + 2.0 * modulus * x * x
        - 4.0 * r * r
        + 2.0 * modulus * x * (math.tanh(x) + 1.0 / math.tanh(x))
        + 2.0 * modulus
    )
    return float(4.0 * N * N * r * r + N * single)


def branches(family: str, N: int, alpha: complex) -> list:
    """
    The two product branches of a two-branch family, normalized.
    """
    if family == "ECS":
        return [catalog.coherent_product(N, alpha), catalog.coherent_product(N, -alpha)]
    if family == "HCS":
        return [catalog._power(catalog.cat(alpha, 1), N), catalog._power(catalog.cat(alpha, -1), N)]
    if family == "Omega":
        return [
            catalog._power(catalog.cat(alpha, 1), N),
            catalog._power(catalog.rotated_odd_cat(alpha), N),
        ]
    raise ConfigurationError(f"no branch decomposition for {family}")


def family_state(family: str, N: int, alpha: complex) -> coherent.CoherentSuperposition:
    if family == "ECS":
        return catalog.ecs(N, alpha, 1)
    if family == "HCS":
        return catalog.hcs(N, alpha)
    if family == "Omega":
        return catalog.omega(N, alpha)
    raise ConfigurationError(f"no branch decomposition for {family}")


def scaling_exponent(xs: Sequence[float], ys: Sequence[float]) -> float:
    """
    Slope of the least-squares line through (log x, log y).
    """
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


class NrfSweep(BaseModel):
    family: str
    algebra: str
    num_modes: int
    photon_scale: list[float]
    nrf: list[float]
    exponent: float


def nrf_sweep(family: str, spec: AlgebraSpec, N: int, alphas: Sequence[float]) -> NrfSweep:
    """
    N^rF of a family over amplitudes, with the log-log exponent against alpha^2.
    """
    values = []
    for alpha in alphas:
        report = nrf(family_state(family, N, alpha), branches(family, N, alpha), spec)
        logger.info(f"{family} alpha={alpha:.4g}: nrf {report.nrf:.6g}")
        values.append(report.nrf)
    scale = [float(a * a) for a in alphas]
    return NrfSweep(
        family=family,
        algebra=spec.name,
        num_modes=N,
        photon_scale=scale,
        nrf=values,
        exponent=scaling_exponent(scale, values),
    )


class SqueezedNrfReport(BaseModel):
    alpha: float
    w: float
    num_modes: int
    transported: float
    fixed_basis: float
    reference: float


def squeezed_hcs_nrf(alpha: float, w: float, N: int) -> SqueezedNrfReport:
    """
    N^rF of S(w)^N Omega(alpha e^w) under sl2, in the transported basis
    {S G_k S^dagger} and in the fixed basis, next to the analytic N^rF of
    Omega(alpha e^w).
    """
    if not (alpha > 0 and w >= 0):
        raise ConfigurationError("squeezed hierarchical states need alpha > 0 and w >= 0")
    amplitude = alpha * math.exp(w)
    cutoff = fock.default_cutoff(amplitude, w)
    cutoffs = fock.profile([cutoff] * N)
    single = cutoffs.subset([0])
    squeezer = fock.squeeze(0, w, single).matrix

    def squeezed(state):
        result = coherent.to_fock(state, cutoffs)
        for mode in range(N):
            result = fock.apply_local(result, mode, squeezer)
        return fock.check_tail(result)

    spec = algebra("sl2")
    state = catalog.squeezed_hcs(N, alpha, w, cutoffs)
    parts = [squeezed(b) for b in branches("Omega", N, amplitude)]
    transported = [squeezer @ g @ squeezer.conj().T for g in spec.fock_matrices(cutoff)]
    logger.info(f"squeezed Omega: alpha={alpha}, w={w}, cutoff {cutoff}")
    return SqueezedNrfReport(
        alpha=alpha,
        w=w,
        num_modes=N,
        transported=nrf(state, parts, spec, transported).nrf,
        fixed_basis=nrf(state, parts, spec).nrf,
        reference=nrf(catalog.omega(N, amplitude), branches("Omega", N, amplitude), spec).nrf,
    )
