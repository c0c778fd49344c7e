from fractions import Fraction

import pytest

from app.core.config import get_settings
from app.main import EXIT_ERROR, EXIT_NO_EQUILIBRIUM, EXIT_OK, Verdict, main
from app.services.flow.metrics import MetricsReport, summary_frame
from app.services.instances.examples import fig7, gen_example
from app.services.instances.io import load_flow, load_instance, save_instance


@pytest.fixture
def catalogue(tmp_path):
    """Écrit les exemples du catalogue dans un répertoire temporaire."""

    def write(name: str) -> str:
        path = tmp_path / f"{name}.json"
        save_instance(gen_example(name), str(path))
        return str(path)

    return write


@pytest.mark.integration
class TestCommands:
    def test_build(self, catalogue, capsys):
        assert main(["build", catalogue("fig1")]) == EXIT_OK
        out = capsys.readouterr().out
        assert "nodes=16" in out
        assert "edges=18" in out
        assert "demand=2" in out

    def test_solve_single_then_verify(self, catalogue, tmp_path, capsys):
        instance = catalogue("fig1")
        flow_path = str(tmp_path / "fig1.flow.json")
        metrics_path = tmp_path / "fig1.metrics.csv"
        code = main(["solve", instance, "--method", "single", "--out", flow_path, "--metrics", str(metrics_path)])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "outcome=equilibrium" in out
        assert "s_r0=1" in out
        assert "social_cost=21/2" in out
        assert metrics_path.exists()
        assert len(load_flow(flow_path)) == 2

        assert main(["verify", instance, flow_path, "--seed", "5"]) == EXIT_OK
        verdict = capsys.readouterr().out
        assert "outcome=equilibrium" in verdict
        assert verdict.strip().endswith("seed=5")

    def test_exact_without_equilibrium(self, catalogue, capsys):
        assert main(["solve", catalogue("fig4"), "--method", "exact"]) == EXIT_NO_EQUILIBRIUM
        assert "outcome=no-equilibrium" in capsys.readouterr().out

    def test_heuristic_with_trace(self, catalogue, tmp_path, capsys):
        trace = tmp_path / "trace.csv"
        code = main(
            ["solve", catalogue("fig6"), "--method", "heuristic", "--seed", "1", "--trace", str(trace)]
        )
        assert code == EXIT_OK
        assert trace.read_text().startswith("iter,selected_commodity,regret")
        assert "seed=1" in capsys.readouterr().out

    def test_sysopt(self, catalogue, capsys):
        assert main(["solve", catalogue("fig7"), "--method", "sysopt"]) == EXIT_OK
        assert "social_cost=9 " in capsys.readouterr().out

    def test_price_of_stability(self, catalogue, capsys):
        assert main(["pos", catalogue("fig7")]) == EXIT_OK
        out = capsys.readouterr().out
        assert "status=defined" in out
        assert "value=10/9" in out

    def test_pos_without_equilibrium(self, catalogue):
        assert main(["pos", catalogue("fig4")]) == EXIT_NO_EQUILIBRIUM


@pytest.mark.integration
class TestGenerate:
    def test_parametric_example(self, tmp_path):
        out = tmp_path / "fig7.json"
        assert main(["gen", "--example", "fig7", "--param", "2", "--out", str(out)]) == EXIT_OK
        assert load_instance(str(out)) == fig7(Fraction(2))

    def test_parameter_refused(self, tmp_path):
        out = tmp_path / "fig1.json"
        assert main(["gen", "--example", "fig1", "--param", "1", "--out", str(out)]) == EXIT_ERROR
        assert not out.exists()

    def test_sat_formula(self, tmp_path):
        formula = tmp_path / "formula.cnf"
        formula.write_text("p cnf 2 2\n1 -2 0\n2 0\n")
        out = tmp_path / "sat.json"
        assert main(["gen", "--sat", str(formula), "--mode", "fixed", "--out", str(out)]) == EXIT_OK
        instance = load_instance(str(out))
        assert len(instance.commodities) == 4

    def test_scaled_random_instance(self, tmp_path):
        out = tmp_path / "random.json"
        assert main(["gen", "--random", "3", "--scale", "2", "--out", str(out)]) == EXIT_OK
        assert load_instance(str(out)).commodities

    def test_exactly_one_source(self, tmp_path):
        assert main(["gen", "--out", str(tmp_path / "none.json")]) == EXIT_ERROR

    def test_fixed_mode_requires_sat(self):
        with pytest.raises(SystemExit):
            main(["gen", "--example", "fig1", "--mode", "fixed"])


@pytest.mark.integration
def test_missing_file_is_an_error(tmp_path):
    assert main(["build", str(tmp_path / "absent.json")]) == EXIT_ERROR


@pytest.mark.integration
def test_invalid_environment(catalogue, mocker):
    mocker.patch.dict("os.environ", {"TRANSITFLUX_EDGE_LIMIT": "-1"})
    assert main(["build", catalogue("fig1")]) == EXIT_ERROR


@pytest.mark.integration
def test_invalid_log_level(catalogue, mocker):
    mocker.patch.dict("os.environ", {"TRANSITFLUX_LOG_LEVEL": "verbose"})
    with pytest.raises(RuntimeError, match="TRANSITFLUX_LOG_LEVEL"):
        get_settings()
    assert main(["build", catalogue("fig1")]) == EXIT_ERROR


@pytest.mark.unit
def test_undefined_factors_share_one_placeholder():
    report = MetricsReport(
        rows=(), mean_rho=None, p99_rho=None, share_zero_regret=Fraction(0), social_cost=Fraction(5)
    )
    line = Verdict("best-effort", "verify", 0, 0.0, report).line()
    assert "mean_rho=na p99_rho=na" in line
    assert summary_frame(report).iloc[0]["p99_rho"] == "na"
