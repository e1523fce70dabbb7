"""
Pydantic records shared across hcslab: state descriptors, cutoff profiles,
circuit operations, run configurations, reports and output manifests.
"""

import json
from typing import Any, Literal, Optional

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from hcslab import __version__, config
from hcslab.custom_exceptions import ConfigurationError

FAMILIES = (
    "Coherent",
    "EvenCat",
    "OddCat",
    "ECS",
    "HCS",
    "Omega",
    "Z4Basis",
    "SqueezedHCS",
    "GeneralTwoBranch",
    "GeneralHCS",
    "CHCS",
    "CECS",
    "FockBell",
    "FockPair",
)


class StateSpecError(ConfigurationError):
    pass


class RunConfigError(ConfigurationError):
    pass


class CircuitSpecError(ConfigurationError):
    pass


def complex_pair(value: Any) -> tuple:
    """
    Accept a number, a complex, a "1+2j" string, a [re, im] pair or a
    {"re": .., "im": ..} mapping and return a (re, im) tuple.
    """
    if isinstance(value, dict):
        return (float(value.get("re", 0.0)), float(value.get("im", 0.0)))
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError("complex pair must have two entries")
        return (float(value[0]), float(value[1]))
    if isinstance(value, str):
        parsed = complex(value.replace(" ", ""))
        return (parsed.real, parsed.imag)
    parsed = complex(value)
    return (parsed.real, parsed.imag)


class CutoffProfile(BaseModel):
    model_config = ConfigDict(frozen=True)

    per_mode_cutoff: tuple[int, ...]
    tail_tolerance: float = Field(default=config.TAIL_TOLERANCE, ge=0.0)
    # cutoff-2 modes standing for qubits; they are exempt from tail checks
    qubit_modes: tuple[int, ...] = ()

    @field_validator("per_mode_cutoff")
    @classmethod
    def _cutoffs_at_least_two(cls, value):
        if len(value) == 0:
            raise ValueError("at least one mode is required")
        if any(cutoff < 2 for cutoff in value):
            raise ValueError("every cutoff must be at least 2")
        return value

    @model_validator(mode="after")
    def _qubits_are_two_level(self):
        for mode in self.qubit_modes:
            if mode < 0 or mode >= len(self.per_mode_cutoff):
                raise ValueError(f"qubit mode {mode} is out of range")
            if self.per_mode_cutoff[mode] != 2:
                raise ValueError(f"qubit mode {mode} must have cutoff 2")
        return self

    @property
    def num_modes(self) -> int:
        return len(self.per_mode_cutoff)

    @property
    def dimension(self) -> int:
        dimension = 1
        for cutoff in self.per_mode_cutoff:
            dimension *= cutoff
        return dimension

    def subset(self, modes) -> "CutoffProfile":
        modes = list(modes)
        return CutoffProfile(
            per_mode_cutoff=tuple(self.per_mode_cutoff[m] for m in modes),
            tail_tolerance=self.tail_tolerance,
            qubit_modes=tuple(
                i for i, m in enumerate(modes) if m in self.qubit_modes
            ),
        )

    def concat(self, other: "CutoffProfile") -> "CutoffProfile":
        shift = self.num_modes
        return CutoffProfile(
            per_mode_cutoff=self.per_mode_cutoff + other.per_mode_cutoff,
            tail_tolerance=min(self.tail_tolerance, other.tail_tolerance),
            qubit_modes=self.qubit_modes
            + tuple(m + shift for m in other.qubit_modes),
        )


class StateSpec(BaseModel):
    """
    Catalog descriptor of a state family and its parameters.

    ``alpha`` and ``beta`` are stored as (re, im) pairs; ``amplitude`` returns
    the complex value. ``sign`` selects the + or - member of two-sign families;
    for HCS the odd branch carries ``sign * exp(i theta)``.
    """

    model_config = ConfigDict(frozen=True)

    family: Literal[FAMILIES]
    N: int = Field(default=1, ge=1)
    alpha: tuple[float, float] = (0.0, 0.0)
    theta: float = 0.0
    sign: Literal[1, -1] = 1
    w: float = 0.0
    M: int = Field(default=1, ge=1)
    j: int = Field(default=0, ge=0, le=3)
    n: int = Field(default=0, ge=0)
    m: int = Field(default=1, ge=0)
    phi: float = 0.0
    isometry: Literal["parity", "phase_displacement", "fock_swap"] = "parity"
    beta: tuple[float, float] = (0.0, 0.0)

    @field_validator("alpha", "beta", mode="before")
    @classmethod
    def _parse_complex(cls, value):
        return complex_pair(value)

    @model_validator(mode="after")
    def _family_parameters(self):
        if self.family == "FockBell" and self.N != 2:
            raise ValueError("FockBell is a two-mode state, N must be 2")
        if self.family == "FockPair" and self.n == self.m:
            raise ValueError("FockPair needs two distinct photon numbers")
        if self.family in ("EvenCat", "OddCat") and self.N != 1:
            raise ValueError(f"{self.family} is a single-mode state, N must be 1")
        if self.family == "GeneralTwoBranch" and self.isometry == "fock_swap":
            if self.n == self.m:
                raise ValueError("fock_swap needs two distinct photon numbers")
        return self

    @property
    def amplitude(self) -> complex:
        return complex(self.alpha[0], self.alpha[1])

    @property
    def displacement(self) -> complex:
        return complex(self.beta[0], self.beta[1])

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True)


class BeamSplitterSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    modes: tuple[int, int]
    angle: float
    convention: Literal["symmetric", "rotation"] = "symmetric"

    @field_validator("modes")
    @classmethod
    def _distinct_modes(cls, value):
        if value[0] == value[1]:
            raise ValueError("a beam splitter needs two distinct modes")
        if min(value) < 0:
            raise ValueError("mode indices must be non-negative")
        return value


class GridAxis(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    start: float
    stop: float
    steps: int = Field(ge=1)

    @model_validator(mode="after")
    def _finite_extent(self):
        if self.steps > 1 and not self.stop > self.start:
            raise ValueError(f"axis {self.name} needs stop > start")
        return self

    def values(self) -> list:
        if self.steps == 1:
            return [self.start]
        step = (self.stop - self.start) / (self.steps - 1)
        return [self.start + i * step for i in range(self.steps)]


class GridSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    axes: tuple[GridAxis, ...]

    def axis(self, name: str) -> GridAxis:
        for axis in self.axes:
            if axis.name == name:
                return axis
        raise KeyError(name)

    def has(self, name: str) -> bool:
        return any(axis.name == name for axis in self.axes)


def parse_grid(text: str) -> GridSpec:
    """
    Parse "name=start:stop:steps,name=..." into a GridSpec.

    Parameters:
    - text (str): The grid description, e.g. "alpha=0.2:3.0:57,theta=0.1:3.04:30".

    Returns:
    - The validated GridSpec.
    """
    axes = []
    try:
        for chunk in text.split(","):
            name, bounds = chunk.split("=")
            start, stop, steps = bounds.split(":")
            axes.append(
                GridAxis(
                    name=name.strip(),
                    start=float(start),
                    stop=float(stop),
                    steps=int(steps),
                )
            )
        return GridSpec(axes=tuple(axes))
    except ValidationError as e:
        raise RunConfigError("Error grid not created:" + str(e)) from None
    except ValueError:
        raise RunConfigError(f"Error grid not created: cannot parse '{text}'") from None


class CircuitOp(BaseModel):
    """
    One step of a circuit. ``kind`` selects which of the optional fields are
    read; unused fields keep their defaults.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal[
        "BeamSplitter",
        "PhaseShift",
        "Photodetect",
        "TraceOut",
        "QubitGate",
        "ConditionalParityFlip",
        "ConditionalFieldPi",
        "SubspaceHadamard",
        "SubspaceSigmaX",
    ]
    beam_splitter: Optional[BeamSplitterSpec] = None
    mode: int = Field(default=0, ge=0)
    modes: tuple[int, ...] = ()
    qubit: int = Field(default=0, ge=0)
    phi: float = 0.0
    alpha: float = 0.0
    gate: Optional[Literal["hadamard", "x", "z", "cnot"]] = None
    # explicit unitary as [[re, im], ...] rows
    matrix: Optional[list[list[tuple[float, float]]]] = None

    @model_validator(mode="after")
    def _kind_parameters(self):
        if self.kind == "BeamSplitter" and self.beam_splitter is None:
            raise ValueError("BeamSplitter needs a beam_splitter spec")
        if self.kind == "TraceOut" and len(self.modes) == 0:
            raise ValueError("TraceOut needs the modes to discard")
        if self.kind == "QubitGate":
            if (self.gate is None) == (self.matrix is None):
                raise ValueError("QubitGate needs exactly one of gate or matrix")
            if len(self.modes) == 0:
                raise ValueError("QubitGate needs target modes")
        if self.kind in ("SubspaceHadamard", "SubspaceSigmaX") and not self.alpha > 0:
            raise ValueError(f"{self.kind} needs alpha > 0")
        return self


def build_circuit_ops(payload) -> list:
    """
    Validate a JSON list of op records.

    Parameters:
    - payload (str | list): JSON text or an already decoded list.

    Returns:
    - The list of CircuitOp.
    """
    try:
        records = json.loads(payload) if isinstance(payload, str) else payload
        if not isinstance(records, list):
            raise CircuitSpecError("Error circuit not created: expected a list of ops")
        return [CircuitOp(**record) for record in records]
    except ValidationError as e:
        raise CircuitSpecError("Error circuit not created:" + str(e)) from None
    except json.JSONDecodeError as e:
        raise CircuitSpecError("Error circuit not created:" + str(e)) from None


def build_state_spec(payload) -> StateSpec:
    """
    Validate a state descriptor given as JSON text or a dict.
    """
    try:
        if isinstance(payload, str):
            return StateSpec.model_validate_json(payload)
        return StateSpec(**payload)
    except ValidationError as e:
        raise StateSpecError("Error state spec not created:" + str(e)) from None


class MetrologyReport(BaseModel):
    max_variance: float
    optimal_coefficients: list[float]
    qfi: float
    nrf: Optional[float] = None
    branch_max_variances: list[float] = []
    algebra: str
    num_modes: int
    normalization: str = "unit_euclidean"


class TrajectoryPoint(BaseModel):
    t: float
    entropy: float
    fluctuation: float
    trace: float
    purity: float


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    command: Literal[
        "pnd",
        "mandel",
        "entropy-scan",
        "damp",
        "metrology",
        "circuit",
        "qfunc",
        "wigner",
        "bargmann",
    ]
    state: Optional[StateSpec] = None
    backend: Literal["fock", "analytic", "both"] = "analytic"
    cutoff: Optional[int] = Field(default=None, ge=2)
    grid: Optional[GridSpec] = None
    out: str
    format: Literal["csv", "json"] = "csv"
    seed: int = 0
    tolerance: float = Field(default=1e-5, gt=0.0)
    options: dict[str, Any] = {}


class Manifest(BaseModel):
    command: str
    state: Optional[dict] = None
    backend: str
    cutoffs: Optional[list[int]] = None
    tail_tolerance: float = config.TAIL_TOLERANCE
    eigen_clip: float = config.EIGEN_CLIP
    tolerance: float
    seed: int
    version: str = __version__
    metadata: dict[str, Any] = {}
