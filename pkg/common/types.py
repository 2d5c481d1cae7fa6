from typing import Any, Literal
from enum import Enum
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator
from typing_extensions import Self


# Tolerance used by structural invariants of the value types below.
JOINT_TOL = 1e-10


class PotentialMode(str, Enum):
    SMOOTH = "smooth"
    ABSTRACT_EXTREMA = "abstract-extrema"


class CriticalKind(str, Enum):
    MINIMUM = "minimum"
    MAXIMUM = "maximum"


class SegmentKind(str, Enum):
    SHIFTED_POTENTIAL = "shifted-potential"
    CONSTANT = "constant"


class KinkType(str, Enum):
    INCREASING_TO_CONSTANT = "increasing-to-constant"
    CONSTANT_TO_DECREASING = "constant-to-decreasing"
    CONSTANT_TO_INCREASING = "constant-to-increasing"
    DECREASING_TO_CONSTANT = "decreasing-to-constant"


class Provenance(str, Enum):
    FREIDLIN_WENTZELL = "freidlin-wentzell"
    USER_SUPPLIED = "user-supplied"
    INDUCED = "induced"


class TrajectoryType(str, Enum):
    UPHILL = "uphill"
    DOWNHILL = "downhill"


class Direction(str, Enum):
    LEFT = "left"
    RIGHT = "right"


class Scheme(str, Enum):
    LAX_FRIEDRICHS = "lax-friedrichs"
    GODUNOV = "godunov"


# ---------------------------------------------------------------- potential

class PotentialSpec(BaseModel):
    """Potential description as read from a config file."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    mode: PotentialMode = PotentialMode.SMOOTH
    name: str | None = None
    cos: list[tuple[float, float]] = Field(default_factory=list)
    sin: list[tuple[float, float]] = Field(default_factory=list)
    offset: float = 0.0
    tilt: float | None = None
    extrema: list[float] | None = None
    positions: list[float] | None = None
    interpolate: bool = False

    @model_validator(mode="after")
    def check_mode_fields(self) -> Self:
        if self.mode == PotentialMode.SMOOTH:
            if self.extrema is not None:
                raise ValueError("'extrema' is only valid in abstract-extrema mode")
            for freq, coef in list(self.cos) + list(self.sin):
                if not (math.isfinite(freq) and math.isfinite(coef)):
                    raise ValueError("non-finite coefficient")
                if freq < 0 or abs(2 * freq - round(2 * freq)) > 1e-12:
                    raise ValueError(f"frequency {freq} must be a non-negative multiple of 1/2")
            if not math.isfinite(self.offset) or (self.tilt is not None and not math.isfinite(self.tilt)):
                raise ValueError("non-finite offset or tilt")
        else:
            if self.cos or self.sin:
                raise ValueError("coefficients are only valid in smooth mode")
            if not self.extrema or len(self.extrema) < 3 or len(self.extrema) % 2 == 0:
                raise ValueError("'extrema' must list 2k+1 alternating values starting at a maximum")
            if not all(math.isfinite(v) for v in self.extrema):
                raise ValueError("non-finite extremum value")
            if self.positions is not None and len(self.positions) != len(self.extrema):
                raise ValueError("'positions' must have one entry per extremum")
        return self


class Potential(BaseModel):
    """Skew-periodic potential U(x) = Ũ(x) − b̄·x.

    Smooth mode is a trigonometric polynomial on the fundamental domain [0, 1)
    with a linear term fixed so that U(1) − U(0) = −b̄; abstract-extrema mode
    keeps the ordered critical values on a "chain" of positions.
    """

    model_config = ConfigDict(frozen=True)

    mode: PotentialMode
    name: str | None = None
    cos: tuple[tuple[float, float], ...] = ()
    sin: tuple[tuple[float, float], ...] = ()
    offset: float = 0.0
    tilt: float
    linear: float = 0.0
    chain_positions: tuple[float, ...] = ()
    chain_values: tuple[float, ...] = ()
    interpolate: bool = False

    @property
    def is_smooth(self) -> bool:
        return self.mode == PotentialMode.SMOOTH

    @property
    def has_derivatives(self) -> bool:
        return self.is_smooth or self.interpolate


class CriticalPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: CriticalKind
    index: int
    position: float
    value: float
    curvature: float | None = None


class CriticalPointSet(BaseModel):
    """Interleaved maxima/minima on one period.

    ``maxima`` holds k+1 entries, the last one being the first maximum shifted
    by one period. Chain index 2i is maximum i, chain index 2i+1 is minimum i.
    """

    model_config = ConfigDict(frozen=True)

    minima: list[CriticalPoint]
    maxima: list[CriticalPoint]
    tilt: float

    @model_validator(mode="after")
    def check_interleaving(self) -> Self:
        k = len(self.minima)
        if k < 1 or len(self.maxima) != k + 1:
            raise ValueError("need k >= 1 minima and k+1 maxima (last one wraps)")
        for i in range(k):
            left, mid, right = self.maxima[i], self.minima[i], self.maxima[i + 1]
            if not (left.position < mid.position < right.position):
                raise ValueError(f"critical points are not strictly interleaved around minimum {i + 1}")
            if not (mid.value < left.value and mid.value < right.value):
                raise ValueError(f"minimum {i + 1} is not below its neighbouring maxima")
        if abs(self.maxima[k].position - self.maxima[0].position - 1.0) > 1e-9:
            raise ValueError("last maximum must be the first one shifted by one period")
        return self

    @property
    def k(self) -> int:
        return len(self.minima)

    def chain_point(self, c: int) -> tuple[float, float]:
        """Position and value of chain index c (any integer)."""
        period, r = divmod(c, 2 * self.k)
        point = self.maxima[r // 2] if r % 2 == 0 else self.minima[r // 2]
        return point.position + period, point.value - period * self.tilt

    def chain_kind(self, c: int) -> CriticalKind:
        return CriticalKind.MAXIMUM if c % 2 == 0 else CriticalKind.MINIMUM

    def points(self) -> list[CriticalPoint]:
        """All critical points of one period in chain order."""
        ordered = []
        for i in range(self.k):
            ordered.append(self.maxima[i])
            ordered.append(self.minima[i])
        return ordered


# ----------------------------------------------------------------- curves

class Segment(BaseModel):
    model_config = ConfigDict(frozen=True)

    start: float
    end: float
    kind: SegmentKind
    level: float
    source: int | None = None
    tie: bool = False

    def value_at(self, u: float) -> float:
        return u + self.level if self.kind == SegmentKind.SHIFTED_POTENTIAL else self.level


class PiecewiseCurve(BaseModel):
    """Exact curve made of ``U(x) + c`` and constant pieces.

    Periodic curves tile [period_anchor, period_anchor + 1]; directional
    barriers use their own window and set ``periodic`` to False.
    """

    model_config = ConfigDict(frozen=True)

    segments: list[Segment]
    period_anchor: float
    periodic: bool = True
    label: str | None = None

    @model_validator(mode="after")
    def check_tiling(self) -> Self:
        if not self.segments:
            raise ValueError("curve needs at least one segment")
        if abs(self.segments[0].start - self.period_anchor) > JOINT_TOL:
            raise ValueError("first segment must start at the period anchor")
        for seg in self.segments:
            if seg.end < seg.start - JOINT_TOL:
                raise ValueError("segment with negative length")
        for left, right in zip(self.segments, self.segments[1:]):
            if abs(left.end - right.start) > JOINT_TOL:
                raise ValueError(f"gap or overlap at x={left.end:.12g}")
        if self.periodic and abs(self.end - self.period_anchor - 1.0) > JOINT_TOL:
            raise ValueError("periodic curve must span exactly one period")
        return self

    @property
    def end(self) -> float:
        return self.segments[-1].end

    def joints(self) -> list[float]:
        return [seg.start for seg in self.segments[1:]]

    def shifted(self, constant: float) -> "PiecewiseCurve":
        segments = [seg.model_copy(update={"level": seg.level + constant}) for seg in self.segments]
        return self.model_copy(update={"segments": segments})


class Kink(BaseModel):
    model_config = ConfigDict(frozen=True)

    position: float
    left_slope: float | None = None
    right_slope: float | None = None
    type: KinkType


class PeierlsBarrier(BaseModel):
    model_config = ConfigDict(frozen=True)

    anchor: float
    anchor_kind: CriticalKind | None = None
    anchor_index: int | None = None
    curve: PiecewiseCurve
    connection: float | None = None
    has_kink: bool = False
    tie: bool = False


class BarrierTable(BaseModel):
    """h̃_R(x_i; x_{j+1}), h̃_L(x_i; x_j) and h(x_i; x_j) on the minima.

    ``critical`` extends h to every pair of critical points in chain order.
    """

    model_config = ConfigDict(frozen=True)

    hR_tilde: list[list[float]]
    hL_tilde: list[list[float]]
    peierls: list[list[float]]
    critical: list[list[float]] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_entries(self) -> Self:
        k = len(self.peierls)
        for table in (self.hR_tilde, self.hL_tilde, self.peierls):
            if len(table) != k or any(len(row) != k for row in table):
                raise ValueError("barrier tables must be k x k")
            if any(v < -JOINT_TOL for row in table for v in row):
                raise ValueError("barrier entries must be non-negative")
        if any(abs(self.peierls[i][i]) > JOINT_TOL for i in range(k)):
            raise ValueError("Peierls diagonal must vanish")
        return self

    @property
    def k(self) -> int:
        return len(self.peierls)


# -------------------------------------------------------------- landscape

class BoundaryData(BaseModel):
    model_config = ConfigDict(frozen=True)

    minima_values: list[float]
    maxima_values: dict[int, float] = Field(default_factory=dict)
    provenance: Provenance = Provenance.USER_SUPPLIED
    argmins: list[list[int]] = Field(default_factory=list)

    @field_validator("minima_values")
    @classmethod
    def check_finite(cls, values: list[float]) -> list[float]:
        if not values or not all(math.isfinite(v) for v in values):
            raise ValueError("boundary values must be finite and non-empty")
        return values

    @property
    def k(self) -> int:
        return len(self.minima_values)


class DiscreteKamReport(BaseModel):
    consistent: bool
    residuals: list[float]
    maxima_residuals: dict[int, float] = Field(default_factory=dict)


class Landscape(BaseModel):
    model_config = ConfigDict(frozen=True)

    W: PiecewiseCurve
    Wstar: PiecewiseCurve
    boundary: BoundaryData | None = None
    kinks: list[Kink] = Field(default_factory=list)
    minimum: float = 0.0
    ties: list[tuple[float, float]] = Field(default_factory=list)


class ExtendedRepresentationReport(BaseModel):
    passed: bool
    sup_error: float
    maxima_values: list[float]
    never_lowered: bool


class LiftedCurve(BaseModel):
    anchor: float
    anchor_kind: CriticalKind
    anchor_index: int
    value: float
    curve: PiecewiseCurve
    active: list[tuple[float, float]] = Field(default_factory=list)


class UniquenessReport(BaseModel):
    induced_equal: bool
    induced_sup_difference: float
    forced_sup_difference: float
    forced_values: dict[int, float]


# -------------------------------------------------------------- viscosity

class KinkRecord(BaseModel):
    position: float
    left_slope: float
    right_slope: float
    superdifferential: tuple[float, float] | None = None
    subdifferential: tuple[float, float] | None = None
    subsolution_pass: bool
    supersolution_pass: bool

    @model_validator(mode="after")
    def check_differentials(self) -> Self:
        if self.left_slope > self.right_slope and self.subdifferential is not None:
            raise ValueError("concave corner has an empty subdifferential")
        if self.left_slope < self.right_slope and self.superdifferential is not None:
            raise ValueError("convex corner has an empty superdifferential")
        return self


class ViscosityReport(BaseModel):
    continuous: bool
    max_sample_residual: float
    kinks: list[KinkRecord]
    subsolution: bool
    supersolution: bool
    passed: bool
    failures: list[float] = Field(default_factory=list)


class ShockRecord(BaseModel):
    position: float
    rho_left: float
    rho_right: float
    rankine_hugoniot_residual: float
    rankine_hugoniot: bool
    admissible: bool


class EntropyReport(BaseModel):
    shocks: list[ShockRecord]
    admissible: bool


# --------------------------------------------------------------- dynamics

class AubrySet(BaseModel):
    points: list[CriticalPoint]
    mather: list[tuple[float, float]]


class Trajectory(BaseModel):
    """Backward characteristic sampled at non-positive, decreasing times."""

    model_config = ConfigDict(frozen=True)

    type: TrajectoryType
    start: float
    times: list[float]
    positions: list[float]
    actions: list[float]
    terminal: float
    terminal_kind: CriticalKind | None = None
    anchor_kink: float | None = None

    @model_validator(mode="after")
    def check_samples(self) -> Self:
        if not self.times or not len(self.times) == len(self.positions) == len(self.actions):
            raise ValueError("times, positions and actions must be non-empty and of equal length")
        if self.times[0] != 0.0 or any(b >= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must start at 0 and decrease")
        return self


class CalibrationReport(BaseModel):
    type: TrajectoryType
    start: float
    terminal: float
    action: float
    landscape_difference: float
    max_error: float
    passed: bool


class DominationReport(BaseModel):
    paths: int
    max_violation: float
    passed: bool


# ------------------------------------------------------------- stochastic

class GridFunction(BaseModel):
    """Values on the uniform circle grid x_n = start + n/N."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    start: float = 0.0
    periodic: bool = True
    time: float | None = None

    @field_validator("values", mode="before")
    @classmethod
    def coerce_array(cls, values: Any) -> np.ndarray:
        return np.asarray(values, dtype=float)

    @model_validator(mode="after")
    def check_values(self) -> Self:
        if self.values.ndim != 1 or self.values.size < 16:
            raise ValueError("grid functions need N >= 16 samples")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function values must be finite")
        return self

    @field_serializer("values")
    def serialize_values(self, values: np.ndarray, _info):
        return values.tolist()

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def grid(self) -> np.ndarray:
        return self.start + np.arange(self.n) / self.n


class LdpRow(BaseModel):
    eps: float
    sup_error: float


class LdpReport(BaseModel):
    rows: list[LdpRow]
    decreasing: bool
    final_error: float


class FluxReport(BaseModel):
    mean: float
    max_deviation: float
    relative_deviation: float
    expected_sign: int


class ChainModel(BaseModel):
    model_config = ConfigDict(frozen=True)

    epsilon: float
    a: list[float]
    b: list[float]
    log_a: list[float]
    log_b: list[float]
    Q: list[list[float]]

    @model_validator(mode="after")
    def check_generator(self) -> Self:
        for i, row in enumerate(self.Q):
            if abs(sum(row)) > 1e-12 * max(1.0, max(abs(v) for v in row)):
                raise ValueError(f"row {i + 1} of Q does not sum to zero")
            if any(v < 0 for j, v in enumerate(row) if j != i):
                raise ValueError("off-diagonal rates must be non-negative")
        return self

    @property
    def k(self) -> int:
        return len(self.a)


class ChainStationary(BaseModel):
    nu_numeric: list[float]
    nu_closed: list[float]
    exponents: list[float]
    normalized_exponents: list[float]
    agreement: float


# -------------------------------------------------------------- evolution

class SchemeConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = 1000
    cfl: float = 0.45
    T: float = 1.0
    scheme: Scheme = Scheme.LAX_FRIEDRICHS
    epsilon: float | None = None
    dt: float | None = None

    @model_validator(mode="after")
    def check_ranges(self) -> Self:
        if not 0.0 < self.cfl <= 0.5:
            raise ValueError("CFL number must lie in (0, 0.5]")
        if self.n < 64:
            raise ValueError("grid needs N >= 64 points")
        if self.T < 0:
            raise ValueError("final time must be non-negative")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        return self


class ExchangeRow(BaseModel):
    eps: float
    fokker_planck_distance: float
    hje_distance: float


class ExchangeReport(BaseModel):
    T: float
    n: int
    rows: list[ExchangeRow]


class DriftRow(BaseModel):
    t: float
    sup_drift: float


# ----------------------------------------------------------- file reports

class VerifyReport(BaseModel):
    curve: str
    viscosity: ViscosityReport
    entropy: EntropyReport
    passed: bool


class CalibrationSummary(BaseModel):
    reports: list[CalibrationReport]
    passed: bool


class ChainReport(BaseModel):
    model: ChainModel
    stationary: ChainStationary


class PeierlsCurves(BaseModel):
    """Peierls barrier of every minimum, as exact segment lists."""

    barriers: list[PeierlsBarrier]


# --------------------------------------------------------------------- cli

class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    potential: PotentialSpec
    out_dir: str = "out"
    seed: int = 0
    samples: int = 1000
    tolerances: dict[str, float] = Field(default_factory=dict)
    params: dict[str, Any] = Field(default_factory=dict)

    @field_validator("samples")
    @classmethod
    def check_samples(cls, samples: int) -> int:
        if samples < 2:
            raise ValueError("need at least two samples")
        return samples


class ErrorPayload(BaseModel):
    code: int
    message: str
    data: Any | None = None


class InputError(ErrorPayload):
    code: int = 1
    message: str = "Input could not be processed"
    data: Any | None = None


class VerificationFailure(ErrorPayload):
    code: int = 2
    message: str = "Verification failed"
    data: Any | None = None


class PipelineReport(BaseModel):
    potential: str | None = None
    k: int
    tilt: float
    boundary: BoundaryData | None = None
    kinks: list[Kink] = Field(default_factory=list)
    verdicts: dict[str, bool] = Field(default_factory=dict)
    ldp: LdpReport | None = None
    errors: list[ErrorPayload] = Field(default_factory=list)
    status: Literal["ok", "verification-failed", "input-error"] = "ok"
