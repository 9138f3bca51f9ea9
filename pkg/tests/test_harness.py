import pytest

from inverse_erm.controllers import harness
from inverse_erm.controllers.harness import (
    fit_loglog_slope, row_bound, row_design, run_mise_sweep, scaling_report_text, sweep_report, verify_scalings,
    write_sweep_outputs
)
from inverse_erm.ext.error import AdmissibilityError, ConfigError, OutputExistsError, PreconditionError
from inverse_erm.models.operators import DENSITY
from inverse_erm.models.rates import density_constants, density_xi_lower, net_risk_bound
from inverse_erm.schemas.experiment import load_experiment_config, parse_experiment_config

SCALING_GRID = [0.01, 0.0046415888336127786, 0.0021544346900318843, 0.001,
                0.00046415888336127773, 0.00021544346900318823, 0.0001]


def test_fit_loglog_slope():
    slope, ci95 = fit_loglog_slope([(1.0, 1.0), (10.0, 0.1), (100.0, 0.01)])
    assert slope == pytest.approx(-1.0)
    assert ci95 == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(PreconditionError):
        fit_loglog_slope([(1.0, 1.0), (10.0, 0.1)])
    with pytest.raises(PreconditionError):
        fit_loglog_slope([(1.0, 1.0), (10.0, 0.0), (100.0, 0.01)])


def test_parse_config(deconvolution_sections):
    config = parse_experiment_config(deconvolution_sections)
    assert config.experiment.n_grid == [64.0, 128.0, 256.0, 512.0, 1024.0]
    assert config.experiment.replications == 3
    assert config.effective_q() == 1.0
    assert not config.is_additive


@pytest.mark.parametrize("section, key, value, expected_key", [
    ("experiment", "replications", "0", "experiment.replications"),
    ("experiment", "n_grid", "2^8..3^9", "experiment.n_grid"),
    ("ellipsoid", "shape", "round", "ellipsoid.shape"),
    ("operator", "kind", "laplace", "operator.kind"),
])
def test_config_errors_name_the_key(deconvolution_sections, section, key, value, expected_key):
    deconvolution_sections[section][key] = value
    with pytest.raises(ConfigError) as exc:
        parse_experiment_config(deconvolution_sections)
    assert exc.value.key == expected_key


def test_config_cross_section_errors(deconvolution_sections):
    del deconvolution_sections["ellipsoid"]
    with pytest.raises(ConfigError) as exc:
        parse_experiment_config(deconvolution_sections)
    assert exc.value.key == "ellipsoid.s"


def test_density_truth_needs_unit_mass(deconvolution_sections):
    deconvolution_sections["experiment"]["model"] = "density"
    deconvolution_sections["truth"] = {"generator": "explicit", "coefficients": "0=0.5, 1=0.1"}
    with pytest.raises(ConfigError) as exc:
        parse_experiment_config(deconvolution_sections)
    assert exc.value.key == "truth.coefficients"


def test_load_config_file(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(
        "[experiment]\nname = small\nn_grid = 100, 1000  # two values\n\n"
        "[operator]\nkind = identity\n\n[ellipsoid]\ns = 2\n",
        encoding="utf-8",
    )
    config = load_experiment_config(path)
    assert config.experiment.n_grid == [100.0, 1000.0]
    assert config.effective_q() == 0.0
    with pytest.raises(ConfigError) as exc:
        load_experiment_config(tmp_path / "missing.ini")
    assert exc.value.key == "config"


def test_sweep_does_not_depend_on_jobs(deconvolution_sections):
    config = parse_experiment_config(deconvolution_sections)
    serial = run_mise_sweep(config, jobs=1)
    parallel = run_mise_sweep(config, jobs=2)
    assert [r.model_dump() for r in serial.raw] == [r.model_dump() for r in parallel.raw]
    assert sweep_report(serial) == sweep_report(parallel)
    assert len(serial.raw) == 15
    assert [row.n for row in serial.rows] == config.experiment.n_grid


def test_noiseless_sweep_is_within_delta(deconvolution_sections):
    deconvolution_sections["experiment"]["noiseless"] = "true"
    config = parse_experiment_config(deconvolution_sections)
    result = run_mise_sweep(config)
    for row in result.raw:
        assert row.mise <= row.delta ** 2
    assert result.bounds_passed


def test_row_design_follows_the_delta_rule(deconvolution_sections):
    deconvolution_sections["delta"] = {"rule": "fixed", "value": "0.2"}
    config = parse_experiment_config(deconvolution_sections)
    design = row_design(config, 1000.0)
    assert design.delta == 0.2
    assert design.nets[0].M == 2


def test_sweep_outputs(deconvolution_sections, tmp_path):
    config = parse_experiment_config(deconvolution_sections)
    result = run_mise_sweep(config)
    paths = write_sweep_outputs(result, tmp_path / "out")
    assert [p.name for p in paths] == ["raw.csv", "aggregate.csv", "report.txt"]
    raw_lines = paths[0].read_text().splitlines()
    assert raw_lines[0] == "n,replication,delta,mise"
    assert len(raw_lines) == 16
    assert paths[1].read_text().splitlines()[0] == "n,mise_mean,mise_stderr,delta,bound,pass"
    assert paths[2].read_text() == sweep_report(result)

    with pytest.raises(OutputExistsError):
        write_sweep_outputs(result, tmp_path / "out")
    write_sweep_outputs(result, tmp_path / "out", force=True)


def test_identity_scalings(deconvolution_sections):
    deconvolution_sections["operator"] = {"kind": "identity"}
    config = parse_experiment_config(deconvolution_sections)
    report = verify_scalings(config, [0.1, 0.05, 0.02, 0.01])
    slopes = {check.name: check for check in report.slopes}
    assert slopes["rho"].slope == pytest.approx(0.0, abs=1e-12)
    assert slopes["rho_K"].slope == pytest.approx(0.0, abs=1e-12)
    assert slopes["packing_gv_log_cardinality"].expected == -0.5
    assert report.theory_exponent == pytest.approx(0.4)
    assert report.upper_exponent == pytest.approx(1.0 / (2.0 - slopes["net_log_cardinality"].slope))
    text = scaling_report_text(report)
    assert "theory_psi_exponent = " in text
    assert f"exponents_match = {str(report.exponents_match).lower()}" in text


def test_exponents_follow_the_measured_packing_slopes(deconvolution_sections, monkeypatch):
    # a flat divergence makes the lower exponent disagree with the upper one
    monkeypatch.setattr(harness, "rho_K", lambda *args, **kwargs: 1.0)
    config = parse_experiment_config(deconvolution_sections)
    report = verify_scalings(config, [0.01, 0.005, 0.002, 0.001])
    slopes = {check.name: check for check in report.slopes}
    assert slopes["rho_K"].slope == pytest.approx(0.0, abs=1e-12)
    assert slopes["rho_K"].passed is False
    packing_slope = slopes["packing_gv_log_cardinality"].slope
    assert report.lower_exponent == pytest.approx(1.0 / (2.0 - packing_slope))
    assert report.upper_exponent is not None
    assert abs(report.upper_exponent - report.lower_exponent) > report.exponent_tolerance
    assert not report.exponents_match
    assert not report.passed


def test_scalings_need_a_decade(deconvolution_sections):
    config = parse_experiment_config(deconvolution_sections)
    with pytest.raises(PreconditionError):
        verify_scalings(config, [0.1, 0.09, 0.08, 0.07])
    with pytest.raises(PreconditionError):
        verify_scalings(config)


@pytest.mark.slow
def test_deconvolution_scalings(deconvolution_sections):
    config = parse_experiment_config(deconvolution_sections)
    report = verify_scalings(config, SCALING_GRID)
    slopes = {check.name: check for check in report.slopes}
    assert slopes["net_log_cardinality"].slope == pytest.approx(-0.5, abs=0.25)
    assert slopes["rho"].slope == pytest.approx(-0.5, abs=0.1)
    assert slopes["rho_K"].slope == pytest.approx(0.5, abs=0.1)
    assert slopes["packing_gv_log_cardinality"].expected == -0.5
    assert slopes["packing_gv_log_cardinality"].passed
    assert report.exponents_match
    assert all(row.packing_min_dist >= row.delta * (1.0 - 1e-12) for row in report.rows)
    assert report.passed


@pytest.fixture
def density_sections(deconvolution_sections):
    deconvolution_sections["experiment"]["model"] = "density"
    deconvolution_sections["ellipsoid"]["L"] = "1.5"
    deconvolution_sections["truth"] = {"generator": "explicit", "coefficients": "0=1, 1=0.3, 2=0.1"}
    return deconvolution_sections


def test_density_row_records_the_admissible_c_tau(density_sections):
    config = parse_experiment_config(density_sections)
    op = config.build_operator()
    design = row_design(config, 1024.0)
    bound, log_card, rho, c_tau = row_bound(config, design, op)
    B, B_prime = density_constants(op, design.nets[0])
    assert c_tau >= config.bound.c_tau
    assert density_xi_lower(B, B_prime, c_tau) <= config.bound.xi
    assert bound == net_risk_bound(design.delta, rho, log_card, 1024.0, config.bound.xi, c_tau, DENSITY, (B, B_prime))


def test_density_row_needs_rho_at_least_one(density_sections, monkeypatch):
    monkeypatch.setattr(harness, "_rho", lambda op, net: 0.5)
    config = parse_experiment_config(density_sections)
    with pytest.raises(PreconditionError):
        row_bound(config, row_design(config, 1024.0), config.build_operator())


def test_density_row_rejects_xi_at_one_half(density_sections):
    density_sections["bound"] = {"xi": "0.5"}
    config = parse_experiment_config(density_sections)
    with pytest.raises(AdmissibilityError):
        row_bound(config, row_design(config, 1024.0), config.build_operator())


def test_sweep_report_lists_c_tau(deconvolution_sections):
    config = parse_experiment_config(deconvolution_sections)
    result = run_mise_sweep(config)
    assert all(row.c_tau == 9.0 for row in result.rows)
    assert all(line.endswith(" c_tau=9") for line in sweep_report(result).splitlines() if line.startswith("row "))
