from configparser import ConfigParser, Error as ConfigParserError
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union
import logging

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from inverse_erm.config import DEFAULT_BASE_SEED, DEFAULT_C_TAU, DEFAULT_SLOPE_TOLERANCE, DEFAULT_XI
from inverse_erm.ext.error import BaseCustomError, ConfigError
from inverse_erm.models.operators import (
    ADDITIVE_CONVOLUTION, CONVOLUTION, DENSITY, IDENTITY, RADON, WHITE_NOISE, DiagonalOperator, RadonGeometry
)
from inverse_erm.models.sequence_core import CoefVec, EllipsoidSpec, MultiIndex
from inverse_erm.models.truth import (
    EXPLICIT, FIXED_TRIG, check_membership, component_part, make_additive_truth, make_truth,
    parse_coefficients
)

logger = logging.getLogger(__name__)


def _split(value):
    if isinstance(value, str):
        return [item.strip() for item in value.replace(";", ",").split(",") if item.strip()]
    return value


def _expand_grid(value) -> List[float]:
    """`2^8..2^16` expands to consecutive powers; anything else is a comma list."""
    if isinstance(value, str) and ".." in value:
        lo, hi = (part.strip() for part in value.split("..", 1))
        base_lo, exp_lo = lo.split("^")
        base_hi, exp_hi = hi.split("^")
        if float(base_lo) != float(base_hi):
            raise ValueError("a power range needs a common base")
        return [float(base_lo) ** e for e in range(int(exp_lo), int(exp_hi) + 1)]
    return [float(v) for v in _split(value)]


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ExperimentSection(Section):
    name: str = "experiment"
    model: Literal["white_noise", "density"] = WHITE_NOISE
    estimator: Literal["net", "dense", "additive"] = "net"
    n_grid: List[float]
    replications: int = Field(1, ge=1)
    base_seed: int = DEFAULT_BASE_SEED
    noiseless: bool = False
    slope_tolerance: float = Field(DEFAULT_SLOPE_TOLERANCE, gt=0)

    @field_validator("n_grid", mode="before")
    @classmethod
    def parse_grid(cls, value):
        return _expand_grid(value)

    @field_validator("n_grid")
    @classmethod
    def increasing(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("n_grid must not be empty")
        if any(v <= 1 for v in value):
            raise ValueError("every n must exceed 1")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("n_grid must be strictly increasing")
        return value


class OperatorSection(Section):
    kind: Literal["identity", "convolution", "radon2d", "additive_convolution"] = CONVOLUTION
    q: Optional[float] = Field(None, ge=0)
    kernel: Optional[str] = None
    chord_prefactor: Literal["svd", "printed"] = "svd"


class EllipsoidSection(Section):
    d: int = Field(1, ge=1)
    s: float = Field(..., gt=0)
    L: float = Field(1.0, gt=0)
    parity: bool = False


class TruthSection(Section):
    generator: Literal["fixed_trig", "boundary", "random_interior", "explicit"] = FIXED_TRIG
    coefficients: Optional[str] = None
    fraction: float = Field(0.9, gt=0, le=1)
    seed: int = 0


class DeltaSection(Section):
    rule: Literal["optimal", "fixed"] = "optimal"
    kappa: float = Field(1.0, gt=0)
    value: Optional[float] = Field(None, gt=0)


class AdditiveSection(Section):
    components: List[Tuple[float, float]]
    L: float = Field(1.0, gt=0)

    @field_validator("components", mode="before")
    @classmethod
    def parse_components(cls, value):
        if isinstance(value, str):
            return [tuple(float(v) for v in item.split(":")) for item in _split(value)]
        return value

    @field_validator("components")
    @classmethod
    def valid_components(cls, value):
        if not value:
            raise ValueError("at least one component is required")
        for s, q in value:
            if s <= 0 or q < 0:
                raise ValueError(f"component ({s}, {q}) needs s > 0 and q >= 0")
        return value


class BoundSection(Section):
    xi: float = DEFAULT_XI
    c_tau: float = Field(DEFAULT_C_TAU, gt=0)
    c: float = Field(1.0, gt=0)


class ScalingsSection(Section):
    delta_grid: List[float]
    seed: int = 0
    tolerance_entropy: float = 0.25
    tolerance_rho: float = 0.1

    @field_validator("delta_grid", mode="before")
    @classmethod
    def parse_grid(cls, value):
        return [float(v) for v in _split(value)]

    @field_validator("delta_grid")
    @classmethod
    def spans_decade(cls, value: List[float]) -> List[float]:
        if len(value) < 4:
            raise ValueError("at least 4 grid points are required")
        if any(v <= 0 for v in value):
            raise ValueError("every delta must be positive")
        if max(value) < 10.0 * min(value) * (1.0 - 1e-12):
            raise ValueError("the grid must span at least one decade")
        return sorted(value)


class ExperimentConfig(Section):
    experiment: ExperimentSection
    operator: OperatorSection = Field(default_factory=OperatorSection)
    ellipsoid: Optional[EllipsoidSection] = None
    truth: TruthSection = Field(default_factory=TruthSection)
    delta: DeltaSection = Field(default_factory=DeltaSection)
    additive: Optional[AdditiveSection] = None
    bound: BoundSection = Field(default_factory=BoundSection)
    scalings: Optional[ScalingsSection] = None

    @model_validator(mode="after")
    def consistent(self) -> "ExperimentConfig":
        kind = self.operator.kind
        if self.experiment.estimator == "additive" or kind == ADDITIVE_CONVOLUTION:
            if self.additive is None:
                raise ConfigError("additive experiments need an [additive] section", key="additive.components")
            if kind != ADDITIVE_CONVOLUTION or self.experiment.estimator != "additive":
                raise ConfigError("additive estimator and additive_convolution operator go together", key="operator.kind")
            if self.experiment.model != WHITE_NOISE:
                raise ConfigError("additive experiments use the white-noise model", key="experiment.model")
        else:
            if self.ellipsoid is None:
                raise ConfigError("missing [ellipsoid] section", key="ellipsoid.s")
            if kind == CONVOLUTION and self.operator.q is None and not self.operator.kernel:
                raise ConfigError("convolution needs q or kernel", key="operator.q")
            if kind == RADON and self.ellipsoid.d != 2:
                raise ConfigError("the Radon operator acts on d = 2", key="ellipsoid.d")
        if self.experiment.model == DENSITY:
            if kind not in (IDENTITY, CONVOLUTION):
                raise ConfigError("the density model needs a self-basis operator", key="operator.kind")
            if self.ellipsoid.d > 2:
                raise ConfigError("density sampling supports d <= 2", key="ellipsoid.d")
            if self.experiment.estimator != "net":
                raise ConfigError("the density model uses the net estimator", key="experiment.estimator")
        if self.delta.rule == "fixed" and self.delta.value is None:
            raise ConfigError("fixed delta rule needs a value", key="delta.value")
        if self.truth.generator == EXPLICIT and not self.truth.coefficients:
            raise ConfigError("explicit truth needs coefficients", key="truth.coefficients")
        return self

    # ---------------------------------------------------------------- builders

    @property
    def is_additive(self) -> bool:
        return self.experiment.estimator == "additive"

    def ellipsoid_spec(self) -> EllipsoidSpec:
        e = self.ellipsoid
        return EllipsoidSpec(d=e.d, s=e.s, L=e.L, parity=e.parity)

    def components(self) -> List[Tuple[EllipsoidSpec, float]]:
        return [(EllipsoidSpec(d=1, s=s, L=self.additive.L), q) for s, q in self.additive.components]

    def build_operator(self) -> DiagonalOperator:
        op = self.operator
        if op.kind == IDENTITY:
            return DiagonalOperator.identity(self.ellipsoid.d)
        if op.kind == RADON:
            return DiagonalOperator.radon(RadonGeometry(op.chord_prefactor))
        if op.kind == ADDITIVE_CONVOLUTION:
            return DiagonalOperator.additive([q for _, q in self.additive.components])
        if op.kernel:
            multipliers = parse_coefficients(op.kernel, self.ellipsoid.d)
            return DiagonalOperator.convolution_kernel(dict(multipliers.items()), self.ellipsoid.d, op.q)
        return DiagonalOperator.convolution(op.q, self.ellipsoid.d)

    def effective_q(self) -> float:
        """Degree of ill-posedness used by rate formulas and delta rules."""
        if self.operator.kind == IDENTITY:
            return 0.0
        if self.operator.kind == RADON:
            return 0.5
        return self.operator.q if self.operator.q is not None else 0.0

    def build_truth(self) -> CoefVec:
        t = self.truth
        if self.is_additive:
            return make_additive_truth([spec for spec, _ in self.components()], t.generator, t.fraction, t.coefficients)
        return make_truth(self.ellipsoid_spec(), t.generator, t.fraction, t.seed, t.coefficients)


def _error_key(error: ValidationError) -> str:
    first = error.errors()[0]
    return ".".join(str(part) for part in first["loc"]) or "config"


def _check_truth(config: ExperimentConfig):
    truth = config.build_truth()
    if config.is_additive:
        for k, (spec, _) in enumerate(config.components()):
            check_membership(spec, component_part(truth, k))
        stray = [idx for idx in truth if sum(1 for v in idx.j if v > 0) != 1]
        if stray:
            raise ConfigError(f"additive truth has a non-component index {stray[0]}", key="truth.coefficients")
    else:
        check_membership(config.ellipsoid_spec(), truth)
    if config.experiment.model == DENSITY and truth.get(MultiIndex((0,) * config.ellipsoid.d), 0.0) != 1.0:
        raise ConfigError("a density truth needs the constant coefficient 1", key="truth.coefficients")


def parse_experiment_config(sections: dict) -> ExperimentConfig:
    """Validate a nested mapping section -> key -> value."""
    try:
        config = ExperimentConfig.model_validate(sections)
    except ValidationError as e:
        key = _error_key(e)
        message = e.errors()[0]["msg"]
        logger.warning(f"Configuration rejected at {key}: {message}")
        raise ConfigError(f"invalid value for '{key}': {message}", key=key)
    except ValueError as e:
        raise ConfigError(f"invalid configuration: {str(e)}")

    try:
        _check_truth(config)
    except ConfigError as e:
        raise e
    except BaseCustomError as e:
        raise ConfigError(f"invalid truth: {e.message}", key="truth")
    return config


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read an INI experiment file; unknown sections and keys are errors."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"configuration file not found: {path}", key="config")
    parser = ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(path.read_text(encoding="utf-8"), source=str(path))
    except ConfigParserError as e:
        raise ConfigError(f"cannot parse {path}: {str(e)}", key="config")
    sections = {name: dict(parser.items(name)) for name in parser.sections()}
    logger.info(f"Loaded experiment configuration {path}")
    return parse_experiment_config(sections)

