"""
Monte Carlo experiment driver: MISE sweeps over n, log-log slopes, scaling
checks for nets and packings, and CSV/text outputs.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence, Tuple
import logging
import os

import numpy as np
import pandas as pd
from scipy.stats import linregress, t as student_t

from inverse_erm.ext.error import BaseCustomError, HarnessError, OutputExistsError, PreconditionError
from inverse_erm.models.estimators import (
    EstimateReport, additive_estimate, additive_nets, delta_net_estimate, dense_estimate, mise
)
from inverse_erm.models.nets import (
    NetSpec, build_net, build_packing, net_log_cardinality, net_rho, verify_packing
)
from inverse_erm.models.operators import DENSITY, RADON, WHITE_NOISE, DiagonalOperator, rho_K, singular_values
from inverse_erm.models.rates import (
    additive_risk_bound, density_c_tau, density_constants, lower_bound_exponent, net_risk_bound,
    optimal_delta, rate_additive, rate_convolution, rate_exponent_net, rate_radon
)
from inverse_erm.models.seeding import GAUSSIAN_METHOD, GENERATOR_NAME, index_hash, substream_seed
from inverse_erm.models.sequence_core import MultiIndex, sorted_indices
from inverse_erm.models.simulate import DensityObs, sample_density, simulate_white_noise
from inverse_erm.schemas.experiment import ExperimentConfig
from inverse_erm.schemas.results import (
    RawRow, ScalingReport, ScalingRow, SlopeCheck, SweepResult, SweepRow
)

logger = logging.getLogger(__name__)

RAW_COLUMNS = ["n", "replication", "delta", "mise"]
AGGREGATE_COLUMNS = ["n", "mise_mean", "mise_stderr", "delta", "bound", "pass"]
FLOAT_FORMAT = "%.17g"


def fmt(value: float) -> str:
    return FLOAT_FORMAT % value


# -------------------------------------------------------------------------------- Per-n design

@dataclass(frozen=True, eq=False)
class RowDesign:
    n: float
    delta: float
    deltas: Tuple[float, ...]
    nets: Tuple[NetSpec, ...]
    active: Tuple[MultiIndex, ...]


def delta_rule(config: ExperimentConfig, n: float, s: float, q: float, d: int) -> float:
    if config.delta.rule == "fixed":
        return config.delta.value
    return optimal_delta(n, s, q, d, config.delta.kappa)


def row_design(config: ExperimentConfig, n: float) -> RowDesign:
    if config.is_additive:
        components = config.components()
        deltas = tuple(delta_rule(config, n, spec.s, q, 1) for spec, q in components)
        nets = tuple(additive_nets(components, deltas))
        active = sorted_indices(idx for net in nets for idx in net.indices)
        return RowDesign(n=n, delta=sum(deltas), deltas=deltas, nets=nets, active=active)

    spec = config.ellipsoid_spec()
    delta = delta_rule(config, n, spec.s, config.effective_q(), spec.d)
    net = build_net(spec, delta)
    return RowDesign(n=n, delta=delta, deltas=(delta,), nets=(net,), active=net.indices)


def replication_seed(config: ExperimentConfig, design: RowDesign, replication: int) -> int:
    return substream_seed(config.experiment.base_seed, replication, design.n, index_hash(design.active))


def estimate_once(config: ExperimentConfig, n: float, replication: int) -> Tuple[RowDesign, EstimateReport, float]:
    """Simulate one observation, estimate, and return the MISE against the full truth."""
    design = row_design(config, n)
    truth = config.build_truth()
    op = config.build_operator()
    seed = replication_seed(config, design, replication)

    if config.experiment.model == DENSITY:
        sample = sample_density(op, truth, int(round(n)), seed)
        report = delta_net_estimate(DensityObs(sample=sample, op=op, theta_true=truth), design.nets[0])
        return design, report, mise(report.theta_hat, truth)

    obs = simulate_white_noise(op, truth.restrict(design.active), n, design.active, seed,
                               zero_noise=config.experiment.noiseless)
    if config.experiment.estimator == "additive":
        report = additive_estimate(obs, config.components(), design.deltas)
    elif config.experiment.estimator == "dense":
        report = dense_estimate(obs, config.ellipsoid_spec())
    else:
        report = delta_net_estimate(obs, design.nets[0])
    return design, report, mise(report.theta_hat, truth)


def _replicate(task: Tuple[ExperimentConfig, float, int]) -> Tuple[float, int, float, float]:
    config, n, replication = task
    try:
        design, _, value = estimate_once(config, n, replication)
    except BaseCustomError as e:
        e.message = f"n={n!r}, replication={replication}: {e.message}"
        raise e
    return n, replication, design.delta, value


# -------------------------------------------------------------------------------- Bounds

def _rho(op: DiagonalOperator, net: NetSpec) -> float:
    try:
        return net_rho(op, net)
    except PreconditionError:
        return float(np.max(1.0 / singular_values(op, net.indices))) if net.indices else 0.0


def row_bound(config: ExperimentConfig, design: RowDesign, op: DiagonalOperator) -> Tuple[float, float, float, Optional[float]]:
    """(bound, log cardinality, rho, C_tau) of one sweep row; C_tau is None for additive rows."""
    n = design.n
    bound_cfg = config.bound
    if config.is_additive:
        rhos = [_rho(op, net) for net in design.nets]
        cards = [net_log_cardinality(net) for net in design.nets]
        bound = additive_risk_bound(design.delta, rhos, cards, n, bound_cfg.c)
        return bound, sum(cards), max(rhos), None

    net = design.nets[0]
    rho = _rho(op, net)
    log_card = net_log_cardinality(net)
    if config.experiment.model != DENSITY:
        bound = net_risk_bound(design.delta, rho, log_card, n, bound_cfg.xi, bound_cfg.c_tau, WHITE_NOISE)
        return bound, log_card, rho, bound_cfg.c_tau

    if rho < 1.0:
        raise PreconditionError(f"The density bound needs rho(Q, F_delta) >= 1, got {rho!r} at n={n!r}")
    constants = density_constants(op, net)
    C_tau = density_c_tau(constants[0], constants[1], bound_cfg.xi, bound_cfg.c_tau)
    if C_tau != bound_cfg.c_tau:
        logger.warning(f"n={n:g}: C_tau raised from {bound_cfg.c_tau:g} to {C_tau:g} to admit xi={bound_cfg.xi:g} "
                       f"(B_inf={constants[0]:.6g}, B'_inf={constants[1]:.6g})")
    bound = net_risk_bound(design.delta, rho, log_card, n, bound_cfg.xi, C_tau, DENSITY, constants)
    return bound, log_card, rho, C_tau


def theory_mise_exponent(config: ExperimentConfig) -> float:
    if config.is_additive:
        return rate_additive(config.additive.components)
    spec = config.ellipsoid
    if config.operator.kind == RADON:
        return rate_radon(spec.s)
    return rate_convolution(spec.s, config.effective_q(), spec.d)


def bound_kind(config: ExperimentConfig) -> str:
    if config.is_additive:
        return "additive_oracle"
    return "net_oracle_density" if config.experiment.model == DENSITY else "net_oracle_white_noise"


# -------------------------------------------------------------------------------- Sweeps

def fit_loglog_slope(rows: Sequence[Tuple[float, float]]) -> Tuple[float, float]:
    """OLS slope of log y on log x with the half-width of its 95% confidence interval."""
    if len(rows) < 3:
        raise PreconditionError(f"Slope fitting needs at least 3 rows, got {len(rows)}")
    x = np.array([r[0] for r in rows], dtype=float)
    y = np.array([r[1] for r in rows], dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise PreconditionError("Slope fitting needs positive values")
    fit = linregress(np.log(x), np.log(y))
    ci95 = float(student_t.ppf(0.975, len(rows) - 2) * fit.stderr)
    return float(fit.slope), ci95


def _tasks(config: ExperimentConfig) -> List[Tuple[ExperimentConfig, float, int]]:
    return [(config, n, r) for n in config.experiment.n_grid for r in range(config.experiment.replications)]


def run_mise_sweep(config: ExperimentConfig, jobs: int = 1) -> SweepResult:
    """
    Run every (n, replication) pair, aggregate per n, fit the log-log slope
    and check each row against its oracle bound.

    Results do not depend on jobs: each replication draws from its own
    substream and rows are aggregated in grid order.
    """
    exp = config.experiment
    logger.info(f"Sweep {exp.name}: {len(exp.n_grid)} values of n, {exp.replications} replications, jobs={jobs}")
    tasks = _tasks(config)
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                outcomes = list(pool.map(_replicate, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
        else:
            outcomes = [_replicate(task) for task in tasks]
    except BaseCustomError as e:
        raise e
    except Exception as e:
        raise HarnessError(f"Sweep error: {str(e)}")

    raw = [RawRow(n=n, replication=r, delta=delta, mise=value) for n, r, delta, value in outcomes]
    op = config.build_operator()

    rows = []
    for n in exp.n_grid:
        values = np.array([row.mise for row in raw if row.n == n])
        design = row_design(config, n)
        bound, log_card, rho, c_tau = row_bound(config, design, op)
        mean = float(np.mean(values))
        stderr = float(np.std(values, ddof=1) / np.sqrt(len(values))) if len(values) > 1 else 0.0
        rows.append(SweepRow(n=n, mise_mean=mean, mise_stderr=stderr, delta=design.delta, log_card=log_card,
                             rho=rho, bound=bound, passed=mean <= bound, c_tau=c_tau))
        logger.info(f"Sweep {exp.name}: n={n:g} mise={mean:.6g} bound={bound:.6g}")

    theory = -theory_mise_exponent(config)
    slope = ci95 = slope_passed = None
    points = [(row.n, row.mise_mean) for row in rows]
    if len(points) >= 3 and all(m > 0 for _, m in points):
        slope, ci95 = fit_loglog_slope(points)
        slope_passed = abs(slope - theory) <= exp.slope_tolerance

    return SweepResult(
        name=exp.name, model=exp.model, estimator=exp.estimator, rows=rows, raw=raw, slope=slope, ci95=ci95,
        theory_slope=theory, slope_tolerance=exp.slope_tolerance, slope_passed=slope_passed,
        bound_kind=bound_kind(config), bounds_passed=all(row.passed for row in rows),
        generator=GENERATOR_NAME, gaussian_method=GAUSSIAN_METHOD,
    )


def sweep_report(result: SweepResult) -> str:
    lines = [
        f"name = {result.name}",
        f"model = {result.model}",
        f"estimator = {result.estimator}",
        f"generator = {result.generator}",
        f"gaussian_method = {result.gaussian_method}",
        f"bound = {result.bound_kind}",
        f"theory_slope = {fmt(result.theory_slope)}",
    ]
    if result.slope is not None:
        lines += [
            f"fitted_slope = {fmt(result.slope)}",
            f"ci95 = {fmt(result.ci95)}",
            f"slope_tolerance = {fmt(result.slope_tolerance)}",
            f"slope_pass = {str(result.slope_passed).lower()}",
        ]
    lines.append(f"bounds_pass = {str(result.bounds_passed).lower()}")
    for row in result.rows:
        line = (
            f"row n={fmt(row.n)} mise_mean={fmt(row.mise_mean)} delta={fmt(row.delta)} "
            f"log_card={fmt(row.log_card)} rho={fmt(row.rho)} bound={fmt(row.bound)} pass={str(row.passed).lower()}"
        )
        if row.c_tau is not None:
            line += f" c_tau={fmt(row.c_tau)}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def write_sweep_outputs(result: SweepResult, out_dir, force: bool = False) -> List[Path]:
    """Write raw.csv, aggregate.csv and report.txt; existing files need force."""
    out = Path(out_dir)
    targets = [out / "raw.csv", out / "aggregate.csv", out / "report.txt"]
    existing = [p for p in targets if p.exists()]
    if existing and not force:
        raise OutputExistsError(f"{existing[0]} exists; pass --force to overwrite")
    out.mkdir(parents=True, exist_ok=True)

    raw = pd.DataFrame([row.model_dump() for row in result.raw], columns=RAW_COLUMNS)
    raw.to_csv(targets[0], index=False, float_format=FLOAT_FORMAT)

    aggregate = pd.DataFrame(
        [[row.n, row.mise_mean, row.mise_stderr, row.delta, row.bound, str(row.passed).lower()] for row in result.rows],
        columns=AGGREGATE_COLUMNS,
    )
    aggregate.to_csv(targets[1], index=False, float_format=FLOAT_FORMAT)
    targets[2].write_text(sweep_report(result), encoding="utf-8")
    logger.info(f"Sweep outputs written to {out}")
    return targets


# -------------------------------------------------------------------------------- Scalings

def _slope_check(name: str, deltas: Iterable[float], values: Iterable[Optional[float]],
                 expected: Optional[float], tolerance: Optional[float]) -> SlopeCheck:
    points = [(d, v) for d, v in zip(deltas, values) if v is not None and v > 0]
    if len(points) < 3:
        return SlopeCheck(name=name, expected=expected, tolerance=tolerance)
    slope, _ = fit_loglog_slope(points)
    passed = None if expected is None else abs(slope - expected) <= tolerance
    return SlopeCheck(name=name, slope=slope, expected=expected, tolerance=tolerance, passed=passed)


def verify_scalings(config: ExperimentConfig, delta_grid: Optional[Sequence[float]] = None) -> ScalingReport:
    """
    Slopes in log delta of the net log-cardinality (-d/s), the net operator
    norm rho(Q, F_delta) (-q/s), the packing divergence rho_K (+q/s) and the
    guaranteed packing log-cardinality (-d/s).

    The upper psi exponent comes from the fitted net slopes and the lower one
    from the fitted packing slopes; they match when they agree within the
    error the slope tolerances allow.
    """
    if config.is_additive:
        raise PreconditionError("Scaling checks run on a single ellipsoid, not an additive model")
    scalings = config.scalings
    if delta_grid is None:
        if scalings is None:
            raise PreconditionError("No delta grid: add a [scalings] section or pass one")
        delta_grid = scalings.delta_grid
    delta_grid = sorted(delta_grid)
    if len(delta_grid) < 4 or delta_grid[-1] < 10.0 * delta_grid[0] * (1.0 - 1e-12):
        raise PreconditionError("The delta grid needs at least 4 points spanning one decade")
    seed = scalings.seed if scalings else 0
    tol_entropy = scalings.tolerance_entropy if scalings else 0.25
    tol_rho = scalings.tolerance_rho if scalings else 0.1

    spec = config.ellipsoid_spec()
    op = config.build_operator()
    q = config.effective_q()

    rows = []
    for delta in delta_grid:
        net = build_net(spec, delta)
        row = ScalingRow(delta=delta, net_log_card=net_log_cardinality(net), rho=_rho(op, net))
        try:
            packing = build_packing(spec, delta, seed)
            min_dist, max_dist, count = verify_packing(packing)
            row.rho_K = rho_K(op, packing.points(), WHITE_NOISE)
            row.packing_count = count
            row.packing_gv_log_card = packing.gv_log_cardinality
            row.packing_min_dist = min_dist
            row.packing_max_dist = max_dist
        except BaseCustomError as e:
            row.error = e.message
            logger.warning(f"Packing at delta={delta}: {e.message}")
        rows.append(row)

    deltas = [row.delta for row in rows]
    net_card = _slope_check("net_log_cardinality", deltas, [r.net_log_card for r in rows], -spec.d / spec.s, tol_entropy)
    rho_check = _slope_check("rho", deltas, [r.rho for r in rows], -q / spec.s, tol_rho)
    rho_K_check = _slope_check("rho_K", deltas, [r.rho_K for r in rows], q / spec.s, tol_rho)
    packing_card = _slope_check("packing_gv_log_cardinality", deltas, [r.packing_gv_log_card for r in rows],
                                -spec.d / spec.s, tol_entropy)
    slopes = [net_card, rho_check, rho_K_check, packing_card]

    upper = lower = None
    if net_card.slope is not None and rho_check.slope is not None:
        upper = _measured_exponent(rate_exponent_net, -rho_check.slope, -net_card.slope)
    if packing_card.slope is not None and rho_K_check.slope is not None:
        lower = _measured_exponent(lower_bound_exponent, rho_K_check.slope, -packing_card.slope)
    # |1/x - 1/y| = |x - y| / (x y), and |x - y| <= 4 tol_rho + 2 tol_entropy when all four slopes pass
    exponent_tolerance = exponents_match = None
    if upper is not None and lower is not None:
        exponent_tolerance = (4.0 * tol_rho + 2.0 * tol_entropy) * upper * lower
        exponents_match = abs(upper - lower) <= exponent_tolerance
    report = ScalingReport(name=config.experiment.name, rows=rows, slopes=slopes,
                           theory_exponent=rate_exponent_net(q / spec.s, spec.d / spec.s),
                           upper_exponent=upper, lower_exponent=lower, exponent_tolerance=exponent_tolerance,
                           exponents_match=bool(exponents_match))
    logger.info(f"Scalings {config.experiment.name}: " + ", ".join(
        f"{c.name}={c.slope!r}" for c in slopes) + f", exponents_match={report.exponents_match}")
    return report


def _measured_exponent(exponent: Callable[[float, float], float], a: float, b: float) -> Optional[float]:
    """psi exponent from fitted slopes; None when the slopes leave the exponent's domain."""
    try:
        return exponent(max(a, 0.0), b)
    except PreconditionError:
        return None


def _optional(value: Optional[float]) -> str:
    return "nan" if value is None else fmt(value)


def scaling_report_text(report: ScalingReport) -> str:
    lines = [f"name = {report.name}"]
    for row in report.rows:
        parts = [f"delta={fmt(row.delta)}"]
        for key in ("net_log_card", "rho", "rho_K", "packing_count", "packing_gv_log_card",
                    "packing_min_dist", "packing_max_dist"):
            value = getattr(row, key)
            if value is not None:
                parts.append(f"{key}={value if isinstance(value, int) else fmt(value)}")
        if row.error:
            parts.append(f"error={row.error!r}")
        lines.append("row " + " ".join(parts))
    for check in report.slopes:
        line = f"{check.name}_slope = {_optional(check.slope)}"
        if check.expected is not None:
            line += f" expected = {fmt(check.expected)} pass = {str(bool(check.passed)).lower()}"
        lines.append(line)
    lines.append(f"theory_psi_exponent = {fmt(report.theory_exponent)}")
    lines.append(f"upper_psi_exponent = {_optional(report.upper_exponent)}")
    lines.append(f"lower_psi_exponent = {_optional(report.lower_exponent)}")
    lines.append(f"exponent_tolerance = {_optional(report.exponent_tolerance)}")
    lines.append(f"exponents_match = {str(report.exponents_match).lower()}")
    return "\n".join(lines) + "\n"


def default_jobs() -> int:
    return os.cpu_count() or 1