from pydantic import BaseModel
from typing import Dict, List, Optional, Union


class RawRow(BaseModel):
    n: float
    replication: int
    delta: float
    mise: float


class SweepRow(BaseModel):
    n: float
    mise_mean: float
    mise_stderr: float
    delta: float
    log_card: float
    rho: float
    bound: float
    passed: bool
    c_tau: Optional[float] = None


class SweepResult(BaseModel):
    name: str
    model: str
    estimator: str
    rows: List[SweepRow]
    raw: List[RawRow]
    slope: Optional[float] = None
    ci95: Optional[float] = None
    theory_slope: float
    slope_tolerance: float
    slope_passed: Optional[bool] = None
    bound_kind: str
    bounds_passed: bool
    generator: str
    gaussian_method: str

    @property
    def passed(self) -> bool:
        return self.bounds_passed and self.slope_passed is not False


class ScalingRow(BaseModel):
    delta: float
    net_log_card: Optional[float] = None
    rho: Optional[float] = None
    rho_K: Optional[float] = None
    packing_count: Optional[int] = None
    packing_gv_log_card: Optional[float] = None
    packing_min_dist: Optional[float] = None
    packing_max_dist: Optional[float] = None
    error: Optional[str] = None


class SlopeCheck(BaseModel):
    name: str
    slope: Optional[float] = None
    expected: Optional[float] = None
    tolerance: Optional[float] = None
    passed: Optional[bool] = None


class ScalingReport(BaseModel):
    name: str
    rows: List[ScalingRow]
    slopes: List[SlopeCheck]
    theory_exponent: float
    upper_exponent: Optional[float] = None
    lower_exponent: Optional[float] = None
    exponent_tolerance: Optional[float] = None
    exponents_match: bool = False

    @property
    def passed(self) -> bool:
        return self.exponents_match and all(check.passed is not False for check in self.slopes)


class CheckResult(BaseModel):
    name: str
    passed: bool
    max_residual: float
    tolerance: float
    detail: str = ""


class VerificationReport(BaseModel):
    level: str
    checks: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


class EstimateSummary(BaseModel):
    name: str
    n: float
    seed: int
    delta: float
    mise: float
    risk: float
    certificate: Dict[str, Union[bool, int, float, str, None]]
