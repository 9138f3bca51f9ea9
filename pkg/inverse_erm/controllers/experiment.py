from typing import Dict, List, Optional, Tuple, Union
import logging

from pydantic import ValidationError

from inverse_erm.controllers.harness import estimate_once, replication_seed, row_design, verify_scalings
from inverse_erm.controllers.verification import FAST, run_verification_suite
from inverse_erm.ext.error import BaseCustomError, ConfigError, HarnessError, PreconditionError
from inverse_erm.models.estimators import Certificate
from inverse_erm.models.nets import build_packing, verify_packing
from inverse_erm.models.operators import DENSITY
from inverse_erm.models.rates import rate_additive, rate_convolution, rate_radon, rate_summary
from inverse_erm.models.simulate import DensityObs, density_statistics, sample_density, simulate_white_noise
from inverse_erm.schemas.experiment import AdditiveSection, ExperimentConfig
from inverse_erm.schemas.results import EstimateSummary, ScalingReport, VerificationReport

logger = logging.getLogger(__name__)

TableValue = Union[float, bool]


def parse_additive(text: str) -> List[tuple]:
    try:
        return AdditiveSection(components=text).components
    except ValidationError as e:
        raise ConfigError(f"invalid additive components '{text}': {e.errors()[0]['msg']}", key="additive")


def rates_table(s: Optional[float] = None, q: Optional[float] = None, d: int = 1,
                additive: Optional[str] = None, radon: bool = False) -> Dict[str, TableValue]:
    """Exponents keyed for `key = value` output; additive components replace (s, q, d)."""
    if additive:
        components = parse_additive(additive)
        table: Dict[str, TableValue] = {
            f"component_{k + 1}_mise_exponent": rate_convolution(cs, cq, 1) for k, (cs, cq) in enumerate(components)
        }
        table["mise_exponent"] = rate_additive(components)
        return table
    if s is None or q is None:
        raise ConfigError("rates need s and q, or an additive component list", key="s" if s is None else "q")
    table = dict(rate_summary(s, q, d))
    if radon:
        table["radon_mise_exponent"] = rate_radon(s)
    return table


def format_value(value: TableValue) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    return repr(float(value))


def format_table(table: Dict[str, TableValue]) -> str:
    return "".join(f"{key} = {format_value(value)}\n" for key, value in table.items())


def certificate_dict(cert: Certificate) -> Dict[str, Union[bool, int, float, str, None]]:
    out: Dict[str, Union[bool, int, float, str, None]] = {
        "kind": cert.kind,
        "exact_grid_argmin": cert.exact_grid_argmin,
        "kkt_residual": cert.kkt_residual,
        "lagrange_multiplier": cert.lagrange_multiplier,
        "eps_n": cert.eps_n,
        "suboptimality_bound": cert.suboptimality_bound,
    }
    if cert.dense_conditions is not None:
        out["dense_eligible"] = cert.dense_conditions.eligible
    if cert.per_component:
        out["components"] = len(cert.per_component)
    return out


def with_seed(config: ExperimentConfig, seed: Optional[int]) -> ExperimentConfig:
    if seed is None:
        return config
    experiment = config.experiment.model_copy(update={"base_seed": int(seed)})
    return config.model_copy(update={"experiment": experiment})


def _grid_n(config: ExperimentConfig, n: Optional[float]) -> float:
    n = float(n) if n is not None else config.experiment.n_grid[-1]
    if n <= 1:
        raise PreconditionError(f"n must exceed 1, got {n}")
    return n


def estimate_summary(config: ExperimentConfig, seed: Optional[int] = None, n: Optional[float] = None) -> EstimateSummary:
    """One simulate + estimate at n (default: the largest grid value), replication 0."""
    config = with_seed(config, seed)
    n = _grid_n(config, n)
    design, report, loss = estimate_once(config, n, 0)
    return EstimateSummary(name=config.experiment.name, n=n, seed=config.experiment.base_seed, delta=design.delta,
                           mise=loss, risk=report.risk_value, certificate=certificate_dict(report.certificate))


def estimate_text(summary: EstimateSummary) -> str:
    lines = [f"name = {summary.name}", f"n = {summary.n!r}", f"seed = {summary.seed}",
             f"delta = {summary.delta!r}", f"mise = {summary.mise!r}", f"risk = {summary.risk!r}"]
    for key, value in summary.certificate.items():
        if value is not None:
            text = format_value(value) if isinstance(value, (bool, float)) else str(value)
            lines.append(f"certificate.{key} = {text}")
    return "\n".join(lines) + "\n"


def simulate_text(config: ExperimentConfig, seed: Optional[int] = None, n: Optional[float] = None) -> str:
    """Draw the replication-0 observation at n and list it per active index."""
    config = with_seed(config, seed)
    n = _grid_n(config, n)
    design = row_design(config, n)
    truth = config.build_truth()
    op = config.build_operator()
    substream = replication_seed(config, design, 0)
    lines = [f"model = {config.experiment.model}", f"n = {n!r}", f"seed = {substream}", f"delta = {design.delta!r}"]

    if config.experiment.model == DENSITY:
        sample = sample_density(op, truth, int(round(n)), substream)
        stats = density_statistics(DensityObs(sample=sample, op=op, theta_true=truth), design.active)
        lines.append(f"acceptance_rate = {sample.acceptance_rate!r}")
        lines.extend(f"z.{idx} = {stats[idx]!r}" for idx in design.active)
    else:
        obs = simulate_white_noise(op, truth.restrict(design.active), n, design.active, substream,
                                   zero_noise=config.experiment.noiseless)
        lines.append(f"generator = {obs.generator}")
        lines.extend(f"y.{idx} = {obs.y[idx]!r}" for idx in design.active)
    return "\n".join(lines) + "\n"


def packing_text(config: ExperimentConfig, delta: float, seed: int = 0) -> Tuple[str, bool]:
    """Build and brute-force check a packing; returns the report and whether it holds."""
    if config.is_additive:
        raise PreconditionError("Packings are built on a single ellipsoid, not an additive model")
    spec = config.ellipsoid_spec()
    packing = build_packing(spec, delta, seed)
    min_dist, max_dist, count = verify_packing(packing)
    passed = min_dist >= delta * (1.0 - 1e-12) and max_dist <= 2.0 * delta * (1.0 + 1e-12)
    lines = [
        f"delta = {delta!r}", f"M = {packing.M}", f"M_star = {packing.M_star}", f"m = {packing.m}",
        f"gamma = {packing.gamma!r}", f"hamming_threshold = {packing.hamming_threshold}",
        f"count = {count}", f"gv_log_cardinality = {packing.gv_log_cardinality!r}",
        f"min_dist = {min_dist!r}", f"max_dist = {max_dist!r}", f"pass = {str(passed).lower()}",
    ]
    return "\n".join(lines) + "\n", passed


class ExperimentController:

    @staticmethod
    async def get_rates(s: Optional[float], q: Optional[float], d: int, additive: Optional[str] = None,
                        radon: bool = False) -> Dict[str, TableValue]:
        try:
            return rates_table(s, q, d, additive, radon)
        except BaseCustomError as e:
            raise e
        except Exception as e:
            raise HarnessError(f"ExperimentController error: {str(e)}")

    @staticmethod
    async def estimate(config: ExperimentConfig, seed: Optional[int] = None, n: Optional[float] = None) -> EstimateSummary:
        try:
            summary = estimate_summary(config, seed, n)
            logger.info(f"Estimate {summary.name} at n={summary.n}: mise={summary.mise:.6g}")
            return summary
        except BaseCustomError as e:
            raise e
        except Exception as e:
            raise HarnessError(f"ExperimentController error: {str(e)}")

    @staticmethod
    async def scalings(config: ExperimentConfig, delta_grid: Optional[List[float]] = None) -> ScalingReport:
        try:
            return verify_scalings(config, delta_grid)
        except BaseCustomError as e:
            raise e
        except Exception as e:
            raise HarnessError(f"ExperimentController error: {str(e)}")

    @staticmethod
    async def verify(level: str = FAST) -> VerificationReport:
        try:
            return run_verification_suite(level)
        except BaseCustomError as e:
            raise e
        except Exception as e:
            raise HarnessError(f"ExperimentController error: {str(e)}")
