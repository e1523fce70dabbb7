"""
Photon statistics, squeezing diagnostics and phase-space representations
(Husimi Q, Wigner, Bargmann), each computed on either backend, with the closed
forms for the hierarchical and entangled coherent families next to them.
"""

import logging
import math
from typing import Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.special import eval_genlaguerre, gammaln

from hcslab import catalog, coherent, fock
from hcslab.coherent import CoherentDensity, CoherentSuperposition
from hcslab.custom_exceptions import ConfigurationError, DegenerateStateError, TruncationError
from hcslab.fock import DensityOperator, FockState, LadderPolynomial
from hcslab.validator import GridAxis

logger = logging.getLogger(__name__)


class UndefinedMandelError(DegenerateStateError):
    pass


class BargmannTailError(TruncationError):
    pass


class CompressionBasisError(ConfigurationError):
    pass


def expectation(state, factors: dict) -> complex:
    """
    <prod_j P_j> for single-mode LadderPolynomials keyed by mode, on either backend.
    """
    if isinstance(state, FockState):
        return fock.expectation(state, factors)
    return coherent.expectation(state, factors)


def photon_number_distribution(state, max_n: int) -> np.ndarray:
    """
    P(n_1, ..., n_N) = |<n|psi>|^2 on the box [0, max_n]^N.

    Parameters:
    - state (FockState | CoherentSuperposition): The pure state.
    - max_n (int): The largest photon number per mode.

    Returns:
    - An array of shape (max_n + 1,) * N.
    """
    if isinstance(state, FockState):
        if max_n >= min(state.dims):
            raise fock.ModeIndexError(f"max_n {max_n} exceeds the cutoffs {state.dims}")
        probabilities = state.probabilities() / state.norm() ** 2
    else:
        largest = float(np.max(np.abs(state.alphas)))
        cutoff = max(fock.default_cutoff(largest), max_n + 1)
        expanded = coherent.to_fock(state, fock.profile([cutoff] * state.num_modes))
        probabilities = expanded.probabilities() / expanded.norm() ** 2
    box = tuple(slice(0, max_n + 1) for _ in range(probabilities.ndim))
    return probabilities[box]


def hcs_photon_distribution(N: int, alpha: complex, levels: Sequence[int]) -> float:
    """
    Closed form of P(n) for the "+" hierarchical state.
    """
    x = abs(alpha) ** 2
    total = 0.0
    for j in (0, 1):
        product = 1.0
        for n in levels:
            product *= (1 + (-1) ** (n + j)) * alpha**n / math.sqrt(math.factorial(n))
        total += product / (1 + (-1) ** j * math.exp(-2.0 * x)) ** (N / 2.0)
    return math.exp(-N * x) / 2 ** (N + 1) * abs(total) ** 2


def quadrature_variance(state, mode: int, theta: float) -> float:
    """
    Var(x^(theta)) with x^(theta) = (a e^{-i theta} + a^dagger e^{i theta})/sqrt(2).
    """
    x = LadderPolynomial.quadrature(theta)
    mean = expectation(state, {mode: x}).real
    second = expectation(state, {mode: x * x}).real
    return float(second - mean**2)


def hcs_quadrature_variance(alpha: complex, theta: float) -> float:
    """
    1/2 + |alpha|^2 (coth 2|alpha|^2 + cos(2 Arg alpha - 2 theta)).
    """
    x = abs(alpha) ** 2
    return 0.5 + x * (1.0 / math.tanh(2.0 * x) + math.cos(2.0 * np.angle(alpha) - 2.0 * theta))


def cat_quadrature_variances(alpha: float) -> tuple:
    """
    Variances of x^(0) and x^(pi/2) in the even cat with real alpha.
    """
    x = alpha * alpha
    return x * (1.0 + math.tanh(x)) + 0.5, 0.5 - x * (1.0 - math.tanh(x))


def amplitude_squared_squeezing(state, mode: int, theta: float) -> float:
    """
    Var(Y_theta) - <n + 1/2> for Y_theta = (a^2 e^{-i theta} + a^dagger^2 e^{i theta})/2.
    Negative values signal amplitude-squared squeezing; a^2 eigenstates give 0.
    """
    y = LadderPolynomial({(0, 2): 0.5 * np.exp(-1j * theta), (2, 0): 0.5 * np.exp(1j * theta)})
    mean = expectation(state, {mode: y}).real
    second = expectation(state, {mode: y * y}).real
    photons = expectation(state, {mode: LadderPolynomial.number()}).real
    return float(second - mean**2 - photons - 0.5)


def mean_photon_number(state, mode: int) -> float:
    return float(expectation(state, {mode: LadderPolynomial.number()}).real)


def mandel_q(state, mode: int) -> float:
    """
    (<n^2> - <n>^2 - <n>)/<n>, using <n^2> - <n> = <a^dagger^2 a^2>.
    """
    mean = mean_photon_number(state, mode)
    if mean < 1e-14:
        raise UndefinedMandelError(f"mode {mode} has mean photon number {mean:.3e}")
    pairs = expectation(state, {mode: LadderPolynomial({(2, 2): 1.0})}).real
    return float((pairs - mean**2) / mean)


def hcs_mandel_q(alpha: complex) -> float:
    """
    Single-mode Mandel parameter of HCS_N^+- for N >= 2: -2|alpha|^2 / sinh(4|alpha|^2).
    """
    x = abs(alpha) ** 2
    return -2.0 * x / math.sinh(4.0 * x)


def parity_weights(state, modes: Sequence[int] = None) -> tuple:
    """
    (||P_e psi||^2, ||P_o psi||^2) for the total photon parity over ``modes``
    (all modes by default).
    """
    modes = list(range(state.num_modes)) if modes is None else list(modes)
    if isinstance(state, FockState):
        probabilities = state.probabilities() / state.norm() ** 2
        total = np.zeros(probabilities.shape, dtype=int)
        for mode in modes:
            shape = [1] * probabilities.ndim
            shape[mode] = probabilities.shape[mode]
            total = total + np.arange(probabilities.shape[mode]).reshape(shape)
        even = float(probabilities[total % 2 == 0].sum())
        return even, float(probabilities[total % 2 == 1].sum())
    flipped = state
    for mode in modes:
        flipped = coherent.parity(flipped, mode)
    average = coherent.inner_product(state, flipped).real / state.norm_squared()
    return 0.5 * (1.0 + average), 0.5 * (1.0 - average)


class PhaseSpaceGrid(BaseModel):
    """
    Rectangular grid over the complex coordinates of ``num_modes`` modes.

    Axis names are "re_<mode>" or "im_<mode>"; coordinates without an axis are
    held at ``fixed`` (default 0). Points run in row-major order over ``axes``.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    num_modes: int
    axes: tuple[GridAxis, ...]
    fixed: dict[str, float] = {}
    values: Optional[np.ndarray] = None

    @property
    def shape(self) -> tuple:
        return tuple(axis.steps for axis in self.axes)

    def points(self) -> np.ndarray:
        coordinates = {}
        for name, value in self.fixed.items():
            coordinates[name] = np.full(int(np.prod(self.shape)), value)
        mesh = np.meshgrid(*(axis.values() for axis in self.axes), indexing="ij")
        for axis, values in zip(self.axes, mesh):
            coordinates[axis.name] = values.reshape(-1)
        size = int(np.prod(self.shape))
        points = np.zeros((size, self.num_modes), dtype=complex)
        for mode in range(self.num_modes):
            points[:, mode] = coordinates.get(f"re_{mode}", np.zeros(size)) + 1j * coordinates.get(
                f"im_{mode}", np.zeros(size)
            )
        return points

    def cell_area(self) -> float:
        area = 1.0
        for axis in self.axes:
            if axis.steps > 1:
                area *= (axis.stop - axis.start) / (axis.steps - 1)
        return area

    def with_values(self, values: np.ndarray) -> "PhaseSpaceGrid":
        return self.model_copy(update={"values": np.asarray(values).reshape(self.shape)})

    def rows(self) -> list:
        """
        One row per point: axis coordinates then the value (re, im for complex grids).
        """
        mesh = [m.reshape(-1) for m in np.meshgrid(*(axis.values() for axis in self.axes), indexing="ij")]
        flat = self.values.reshape(-1)
        rows = []
        for index in range(flat.shape[0]):
            row = [float(m[index]) for m in mesh]
            if np.iscomplexobj(flat):
                row += [float(flat[index].real), float(flat[index].imag)]
            else:
                row.append(float(flat[index]))
            rows.append(row)
        return rows


def _coherent_bra_rows(points: np.ndarray, cutoff: int) -> np.ndarray:
    # rows conj(<n|beta>) so that <beta|psi> = rows @ psi
    return np.array([fock.coherent_amplitudes(beta, cutoff).conj() for beta in points])


def _fock_overlaps(state: FockState, points: np.ndarray) -> np.ndarray:
    # <beta|psi> for every point, contracting one mode at a time
    dims = state.dims
    tensor = state.tensor_view()
    result = _coherent_bra_rows(points[:, 0], dims[0]) @ tensor.reshape(dims[0], -1)
    for mode in range(1, state.num_modes):
        result = result.reshape(points.shape[0], dims[mode], -1)
        rows = _coherent_bra_rows(points[:, mode], dims[mode])
        result = np.einsum("pn,pnr->pr", rows, result)
    return result.reshape(-1)


def q_function(state, grid: PhaseSpaceGrid) -> PhaseSpaceGrid:
    """
    Q(beta) = |<beta|psi>|^2 / pi^N on every grid point.
    """
    points = grid.points()
    if isinstance(state, FockState):
        amplitudes = _fock_overlaps(state, points) / state.norm()
    else:
        amplitudes = coherent.husimi_amplitudes(state, points) / state.norm()
    return grid.with_values(np.abs(amplitudes) ** 2 / math.pi**state.num_modes)


def hcs_q_function(alpha: complex, beta1: complex, beta2: complex) -> float:
    """
    Closed form of the Q-function of HCS_2^+: half the sum of the products of
    single-mode even and odd cat Q-functions plus a sinh/sin cross term, with
    u_j = conj(beta_j) alpha.
    """
    x = abs(alpha) ** 2
    weight = math.exp(-abs(beta1) ** 2 - abs(beta2) ** 2)

    def cat_q(beta, sign):
        u = np.conj(beta) * alpha
        shape = abs(np.cosh(u)) ** 2 if sign > 0 else abs(np.sinh(u)) ** 2
        scale = math.cosh(x) if sign > 0 else math.sinh(x)
        return math.exp(-abs(beta) ** 2) * shape / (math.pi * scale)

    u1, u2 = np.conj(beta1) * alpha, np.conj(beta2) * alpha
    cross = (
        math.sinh(2 * u1.real) * math.sinh(2 * u2.real) - math.sin(2 * u1.imag) * math.sin(2 * u2.imag)
    )
    diagonal = 0.5 * (cat_q(beta1, 1) * cat_q(beta2, 1) + cat_q(beta1, -1) * cat_q(beta2, -1))
    return float(diagonal + weight * cross / (2.0 * math.pi**2 * math.sinh(2.0 * x)))


def displaced_parity_matrix(gamma: complex, cutoff: int) -> np.ndarray:
    """
    <m| D(gamma) Pi D(-gamma) |n> = (-1)^n <m|D(2 gamma)|n>, from the Laguerre
    form of the displacement matrix elements.
    """
    beta = 2.0 * gamma
    r2 = abs(beta) ** 2
    levels = np.arange(cutoff)
    m, n = np.meshgrid(levels, levels, indexing="ij")
    low, high = np.minimum(m, n), np.maximum(m, n)
    gap = high - low
    log_scale = 0.5 * (gammaln(low + 1) - gammaln(high + 1)) - r2 / 2.0
    if beta == 0:
        magnitude = np.where(gap == 0, np.exp(log_scale), 0.0)
    else:
        magnitude = np.exp(log_scale + gap * math.log(abs(beta)))
    laguerre = eval_genlaguerre(low, gap, r2)
    # m >= n carries beta^(m-n); m < n carries (-conj beta)^(n-m)
    phase = np.where(m >= n, np.exp(1j * gap * np.angle(beta)), (-1.0) ** gap * np.exp(-1j * gap * np.angle(beta)))
    elements = magnitude * laguerre * phase
    return elements * ((-1.0) ** levels)[None, :]


def _fock_wigner(rho: DensityOperator, points: np.ndarray) -> np.ndarray:
    dims = rho.dims
    k = len(dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    ket, bra = letters[:k], letters[k : 2 * k]
    operands = ",".join(bra[j] + ket[j] for j in range(k))
    subscripts = f"{ket}{bra},{operands}->"
    tensor = rho.matrix.reshape(dims + dims)
    values = np.empty(points.shape[0])
    for index, point in enumerate(points):
        matrices = [displaced_parity_matrix(point[j], dims[j]) for j in range(k)]
        values[index] = np.einsum(subscripts, tensor, *matrices).real
    return (2.0 / math.pi) ** k * values


def wigner_function(
    state: Union[FockState, CoherentSuperposition, DensityOperator, CoherentDensity],
    grid: PhaseSpaceGrid,
    modes: Sequence[int] = None,
) -> PhaseSpaceGrid:
    """
    W(gamma) = (2/pi)^k <D(gamma) Pi D(-gamma)> on the reduced state of ``modes``,
    normalized to unit integral.

    Parameters:
    - state: A pure state or a density operator on either backend.
    - grid (PhaseSpaceGrid): Grid with num_modes equal to len(modes).
    - modes (list[int]): The modes kept; all modes by default.

    Returns:
    - The grid with Wigner values attached.
    """
    if isinstance(state, (FockState, DensityOperator)):
        rho = state.to_density() if isinstance(state, FockState) else state
        if modes is not None and len(modes) < rho.num_modes:
            rho = fock.partial_trace(rho, modes)
        return grid.with_values(_fock_wigner(rho, grid.points()))
    rho = coherent.pure_density(state) if isinstance(state, CoherentSuperposition) else state
    if modes is not None and len(modes) < rho.num_modes:
        rho = coherent.reduce(rho, modes)
    return grid.with_values(coherent.wigner_values(rho, grid.points()))


def bargmann_function(state, points: np.ndarray) -> np.ndarray:
    """
    f(z) = sum_n c_n prod_j z_j^n_j / sqrt(n_j!) at every row of ``points``.
    """
    points = np.atleast_2d(np.asarray(points, dtype=complex))
    if not isinstance(state, FockState):
        return coherent.bargmann_values(state, points)
    dims = state.dims
    result = None
    tensor = state.tensor_view()
    for mode in range(state.num_modes):
        levels = np.arange(dims[mode])
        powers = points[:, mode][:, None] ** levels[None, :] / np.exp(0.5 * gammaln(levels + 1))[None, :]
        if result is None:
            result = powers @ tensor.reshape(dims[0], -1)
        else:
            result = np.einsum("pn,pnr->pr", powers, result.reshape(points.shape[0], dims[mode], -1))
        top = np.abs(powers[:, -1]) * np.max(np.abs(np.take(tensor, dims[mode] - 1, axis=mode)))
        if np.max(top) > math.sqrt(state.cutoffs.tail_tolerance):
            raise BargmannTailError(
                f"series tail {np.max(top):.3e} at mode {mode} exceeds the tolerance"
            )
    return result.reshape(-1)


def hcs_bargmann(alpha: complex, z: complex, w: complex, sign: int = 1) -> complex:
    """
    Closed form Bargmann function of HCS_2^+ (sign=+1) or HCS_2^- (sign=-1).
    """
    decay = np.exp(-2.0 * abs(alpha) ** 2)
    total, difference = np.cosh(alpha * (z + w)), np.cosh(alpha * (z - w))
    if sign < 0:
        total, difference = difference, total
    return complex(
        math.sqrt(2.0) * math.exp(-abs(alpha) ** 2) * (total - decay * difference) / (1.0 - decay**2)
    )


class PauliReport(BaseModel):
    """
    Compressions of single-mode operators onto a two-dimensional cat subspace,
    in its orthonormal basis: K = span{psi_+, psi_-} for ``basis`` "hcs", or
    span{psi_+, e^{i pi n/2} psi_-} for "omega".

    ``normalized_two_photon`` is the compression of
    (a^2 e^{-2i Arg alpha} + a^dagger^2 e^{2i Arg alpha}) / (2|alpha|^2): the
    identity on the hcs subspace and sigma_z on the omega subspace.
    ``duality_constant`` is c in P (a^2 e^{-2i Arg alpha} + h.c.) P = c |alpha|^2 sigma_z
    on the omega subspace (0 on the hcs subspace, where that compression is
    proportional to the identity).
    """

    alpha: tuple[float, float]
    basis: str
    quadrature: list[list[tuple[float, float]]]
    conjugate_quadrature: list[list[tuple[float, float]]]
    parity: list[list[tuple[float, float]]]
    two_photon: list[list[tuple[float, float]]]
    normalized_two_photon: list[list[tuple[float, float]]]
    sigma_x_constant: float
    sigma_y_constant: float
    sigma_z_constant: float
    duality_constant: float
    max_residual: float


def _pairs(matrix: np.ndarray) -> list:
    return [[(float(v.real), float(v.imag)) for v in row] for row in matrix]


def compress(basis: Sequence[CoherentSuperposition], factors: dict) -> np.ndarray:
    """
    Matrix <b_i| prod P |b_j> of single-mode polynomials on a list of states.
    """
    size = len(basis)
    matrix = np.zeros((size, size), dtype=complex)
    for i in range(size):
        for j in range(size):
            matrix[i, j] = coherent.matrix_element(basis[i], basis[j], factors)
    return matrix


def pauli_compressions(alpha: complex, basis: str = "hcs") -> PauliReport:
    """
    Compress x^(Arg alpha), x^(Arg alpha + pi/2), the photon parity, the
    two-photon operator e^{i pi n} a^2 + a^dagger^2 e^{-i pi n} and the balanced
    two-photon quadrature onto the cat subspace named by ``basis``.

    On the hcs subspace the quadratures, parity and two-photon operator are
    c sigma_x, c sigma_y, sigma_z and c sigma_z, and ``max_residual`` measures
    the departure from that pattern. On the omega subspace the parity and the
    normalized two-photon quadrature are both sigma_z, which is what
    ``max_residual`` measures there; the quadrature constants are the raw
    off-diagonal entries.
    """
    if basis not in ("hcs", "omega"):
        raise CompressionBasisError(f"unknown compression basis {basis}")
    if alpha == 0:
        raise catalog.DegenerateNormalizationError("the cat subspace is degenerate at alpha = 0")
    argument = float(np.angle(alpha))
    x = abs(alpha) ** 2
    second = catalog.cat(alpha, -1) if basis == "hcs" else catalog.rotated_odd_cat(alpha)
    states = [catalog.cat(alpha, 1), second]
    quadrature = compress(states, {0: LadderPolynomial.quadrature(argument)})
    conjugate = compress(states, {0: LadderPolynomial.quadrature(argument + math.pi / 2.0)})
    parity = np.array(
        [[coherent.inner_product(b, coherent.parity(c, 0)) for c in states] for b in states]
    )
    lowering = compress(states, {0: LadderPolynomial.lowering(2)})
    # both subspaces are invariant under a^2, so e^{i pi n} a^2 compresses to parity times a^2
    two_photon = parity @ lowering
    two_photon = two_photon + two_photon.conj().T
    balanced = compress(
        states, {0: LadderPolynomial({(0, 2): np.exp(-2j * argument), (2, 0): np.exp(2j * argument)})}
    )
    normalized = balanced / (2.0 * x)
    sigma_x = np.array([[0, 1], [1, 0]], dtype=complex)
    sigma_y = np.array([[0, -1j], [1j, 0]])
    sigma_z = np.diag([1.0, -1.0]).astype(complex)
    c_x = float(quadrature[0, 1].real)
    c_y = float((conjugate[1, 0] / 1j).real)
    c_z = float(two_photon[0, 0].real)
    if basis == "hcs":
        duality = 0.0
        residual = max(
            np.max(np.abs(quadrature - c_x * sigma_x)),
            np.max(np.abs(conjugate - c_y * sigma_y)),
            np.max(np.abs(two_photon - c_z * sigma_z)),
            np.max(np.abs(parity - sigma_z)),
            np.max(np.abs(normalized - np.eye(2))),
        )
        expected_x = math.sqrt(x) * math.exp(x) / math.sqrt(math.sinh(2 * x))
        if abs(c_x - expected_x) > 1e-8 * max(1.0, expected_x):
            logger.warning(f"sigma_x constant {c_x} differs from {expected_x}")
    else:
        duality = float(balanced[0, 0].real / x)
        residual = max(
            np.max(np.abs(normalized - sigma_z)),
            np.max(np.abs(parity - sigma_z)),
        )
        if abs(duality - 1.0) > 1e-8:
            logger.warning(f"two-photon duality constant is {duality:.10g}, literature value 1")
    return PauliReport(
        alpha=(float(np.real(alpha)), float(np.imag(alpha))),
        basis=basis,
        quadrature=_pairs(quadrature),
        conjugate_quadrature=_pairs(conjugate),
        parity=_pairs(parity),
        two_photon=_pairs(two_photon),
        normalized_two_photon=_pairs(normalized),
        sigma_x_constant=c_x,
        sigma_y_constant=c_y,
        sigma_z_constant=c_z,
        duality_constant=duality,
        max_residual=float(residual),
    )


class StatsReport(BaseModel):
    photon_distribution: list[list[float]]
    mean_n: list[float]
    mandel_q: list[Optional[float]]
    thetas: list[float]
    quadrature_variance: list[float]
    parity_weights: tuple[float, float]


def stats_report(state, max_n: int, thetas: Sequence[float], mode: int = 0) -> StatsReport:
    """
    Bundle the photon distribution rows (indices then probability), per-mode
    means and Mandel parameters, a quadrature variance sweep on ``mode`` and the
    total parity weights.
    """
    distribution = photon_number_distribution(state, max_n)
    rows = [list(index) + [float(p)] for index, p in np.ndenumerate(distribution)]
    means, mandel = [], []
    for m in range(state.num_modes):
        means.append(mean_photon_number(state, m))
        try:
            mandel.append(mandel_q(state, m))
        except UndefinedMandelError:
            mandel.append(None)
    return StatsReport(
        photon_distribution=rows,
        mean_n=means,
        mandel_q=mandel,
        thetas=list(thetas),
        quadrature_variance=[quadrature_variance(state, mode, t) for t in thetas],
        parity_weights=parity_weights(state),
    )
