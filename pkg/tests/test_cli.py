import io
import json
import os
from fractions import Fraction as F

import pytest

from gwboot.bifurcation import ScalarMapSpec, exit_time
from gwboot.cli import COMMANDS, RunConfig, ValidationError, emit_plot_data, main, parse_xi, run
from gwboot.dynamics import StopRule, iterate, measure_metastability
from gwboot.offspring import OffspringDistribution, delta

SEC51 = '{"r":2,"support":{"2":"3/5","5":"2/5"}}'


def run_cli(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


class TestExamples:
    def test_qc(self, capsys):
        code, out, _ = run_cli(["qc", "--xi", SEC51], capsys)
        assert code == 0
        rep = json.loads(out)
        assert rep["schema"] == "gwboot/1"
        assert rep["q_c"] == "5/6"
        assert [a["x"] for a in rep["argmax"]] == ["0/1"]
        assert rep["manifest"]["config"]["command"] == "qc"

    def test_design(self, capsys):
        code, out, _ = run_cli(["design", "--r", "2", "--nus", "1", "--xs", "1/10"], capsys)
        assert code == 0
        rep = json.loads(out)
        assert rep["xi"]["support"] == {"2": "13/18", "3": "5/18"}
        assert rep["q_c"] == "20/29"

    def test_iterate_zeros(self, capsys):
        code, out, _ = run_cli(["iterate", "--xi", "δ2", "--q", "0", "--t", "5"], capsys)
        assert code == 0
        assert json.loads(out)["trace"]["values"] == [0.0] * 6

    def test_iterate_csv(self, capsys):
        code, out, err = run_cli(["iterate", "--xi", "delta2", "--q", "1/2", "--t", "3", "--exact", "--format", "csv"], capsys)
        assert code == 0
        # the root stays healthy unless both children are infected: phi' = q (1 - (1 - phi)^2)
        phis = [F(1, 2)]
        for _ in range(3):
            phis.append(F(1, 2) * (1 - (1 - phis[-1]) ** 2))
        assert out.splitlines() == ["t,phi"] + [f"{t},{p.numerator}/{p.denominator}" for t, p in enumerate(phis)]
        assert json.loads(err)["schema"] == "gwboot/1"

    def test_classify_and_phase_diagram(self, capsys):
        code, out, _ = run_cli(["classify", "--xi", SEC51], capsys)
        assert code == 0 and json.loads(out)["case"]
        code, out, _ = run_cli(["phase-diagram", "--xi", SEC51], capsys)
        assert code == 0
        assert len(json.loads(out)["transitions"]) == 2

    def test_gk(self, capsys):
        code, out, _ = run_cli(["gk", "--k", "3", "--x", "1/2"], capsys)
        assert code == 0
        assert json.loads(out)


class TestExitCodes:
    def test_invalid_law(self, capsys):
        code, _, err = run_cli(["qc", "--xi", '{"r":2,"support":{"2":"1/2"}}'], capsys)
        assert code == 2
        assert "error" in err

    def test_missing_parameter(self, capsys):
        code, _, _ = run_cli(["iterate", "--xi", "delta2"], capsys)
        assert code == 2

    def test_certificate_failure(self, capsys):
        code, out, _ = run_cli(["design", "--r", "2", "--nus", "1", "--xs", "9/10"], capsys)
        assert code == 3
        err = json.loads(out)["error"]
        assert err["type"] and "violations" in err

    def test_io_failure(self, capsys, tmp_path):
        code, _, err = run_cli(["qc", "--xi", SEC51, "--out", str(tmp_path / "missing" / "x.json")], capsys)
        assert code == 4
        assert "cannot write" in err

    def test_missing_config(self, capsys, tmp_path):
        code, _, _ = run_cli(["--config", str(tmp_path / "none.json")], capsys)
        assert code == 4

    def test_unknown_config_key(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"command": "qc", "parameters": {"xi": "delta2"}, "colour": "red"}))
        code, _, _ = run_cli(["--config", str(cfg)], capsys)
        assert code == 2

    def test_unknown_parameter(self):
        with pytest.raises(ValidationError):
            RunConfig("qc", {"xi": "delta2", "bogus": 1}).resolved()

    def test_csv_not_offered(self):
        with pytest.raises(ValidationError):
            RunConfig("qc", {"xi": "delta2"}, {"path": None, "format": "csv"}).resolved()


class TestManifest:
    def test_rerun_is_byte_identical(self, tmp_path, capsys):
        first = tmp_path / "a.json"
        code, _, _ = run_cli(["simulate", "--xi", "delta2", "--q", "0.9", "--t", "1", "--n-trees", "2000", "--seed", "7", "--out", str(first)], capsys)
        assert code == 0
        man = first.with_name("a.json.manifest.json")
        data = json.loads(man.read_text())
        assert data["config"]["seed"] == 7
        second = tmp_path / "b.json"
        code, _, _ = run_cli(["--config", str(man), "--out", str(second)], capsys)
        assert code == 0
        a = json.loads(first.read_text())
        b = json.loads(second.read_text())
        a["manifest"]["config"]["output"] = b["manifest"]["config"]["output"] = None
        assert a == b

    def test_csv_rerun(self, tmp_path, capsys):
        out = tmp_path / "trace.csv"
        assert main(["iterate", "--xi", SEC51, "--q", "0.8", "--t", "50", "--format", "csv", "--out", str(out)]) == 0
        man = str(out) + ".manifest.json"
        out2 = tmp_path / "trace2.csv"
        assert main(["--config", man, "--out", str(out2)]) == 0
        assert out.read_bytes() == out2.read_bytes()

    def test_decimal_input_is_exact(self, capsys):
        code, out, _ = run_cli(["iterate", "--xi", "delta2", "--q", "0.1", "--t", "1", "--exact"], capsys)
        assert json.loads(out)["trace"]["q"] == "1/10"

    def test_precision_env(self, monkeypatch, capsys):
        monkeypatch.setenv("GWBOOT_PRECISION", "113")
        code, out, _ = run_cli(["iterate", "--xi", "delta2", "--q", "1/2", "--t", "2"], capsys)
        assert code == 0
        rep = json.loads(out)
        assert rep["manifest"]["config"]["precision_bits"] == 113
        assert rep["trace"]["precision_bits"] == 113
        monkeypatch.setenv("GWBOOT_PRECISION", "ten")
        assert main(["qc", "--xi", "delta2"]) == 2

    def test_no_leftover_temp_files(self, tmp_path, capsys):
        main(["qc", "--xi", "delta2", "--out", str(tmp_path / "q.json")])
        assert sorted(os.listdir(tmp_path)) == ["q.json", "q.json.manifest.json"]

    def test_every_command_has_subparser(self, capsys):
        for name in COMMANDS:
            with pytest.raises(SystemExit) as ex:
                main([name, "--help"])
            assert ex.value.code == 0


class TestParseXi:
    def test_forms(self, tmp_path):
        f = tmp_path / "xi.json"
        f.write_text(SEC51)
        a = parse_xi(SEC51)
        assert parse_xi("@" + str(f)) == a
        assert parse_xi(json.loads(SEC51)) == a
        assert parse_xi("δ3") == parse_xi("delta3") == delta(3)

    def test_garbage(self):
        with pytest.raises(ValidationError):
            parse_xi("not a law")


class TestPlotData:
    def test_phi_vs_t(self, two_plus_five):
        tr = iterate(two_plus_five, F(4, 5), StopRule.steps(30))
        csv = emit_plot_data(tr, "phi_vs_t").splitlines()
        assert csv[0] == "t,phi"
        assert len(csv) == 32

    def test_g_of_x_with_reference_lines(self, two_plus_five):
        csv = emit_plot_data(two_plus_five, "g_of_x", points=11, qs=[0.8, F(5, 6), 0.95]).splitlines()
        assert csv[0] == "x,g,inv_q_4/5,inv_q_5/6,inv_q_19/20"
        first = csv[1].split(",")
        assert float(first[1]) == pytest.approx(1.2)  # g(0) = 6/5
        assert float(first[3]) == pytest.approx(1.2)
        last = csv[-1].split(",")
        assert float(last[0]) == 1.0 and float(last[1]) == pytest.approx(1.0)

    def test_loglog_plateau(self, quad_well):
        rep = measure_metastability(quad_well, eps_grid=[1e-2, 1e-3, 1e-4])
        csv = emit_plot_data(rep, "loglog_plateau").splitlines()
        assert csv[0] == "plateau,x,log_eps,log_length,fit_slope,fit_intercept"
        assert len(csv) > 1

    def test_rescaled_exit(self):
        rep = exit_time(ScalarMapSpec(exponent=4, eps=1e-4))
        csv = emit_plot_data([rep], "rescaled_exit").splitlines()
        assert csv[0] == "epsilon,N,rescaled,lower,upper,within"
        assert csv[1].endswith("true")

    @pytest.mark.parametrize("kind", ["phi_vs_t", "loglog_plateau", "g_of_x", "rescaled_exit"])
    def test_kind_mismatch(self, kind):
        with pytest.raises(ValidationError):
            emit_plot_data(object(), kind)

    def test_unknown_kind(self, two_plus_five):
        with pytest.raises(ValidationError):
            emit_plot_data(two_plus_five, "histogram")
