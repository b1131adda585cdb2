import json
import os

import numpy as np
import pytest

from pnrchan import cli
from pnrchan.recordio import parse_config, read_shot_records


def run_cli(*args):
    return cli.main(list(args))


class TestSimulateAnalyze:
    def test_simulate_writes_the_documented_format(self, tmp_path, capsys):
        out = tmp_path / "shots.csv"
        code = run_cli("simulate", "--signal-mean", "2.0", "--lo-mean", "8.0",
                       "--xi", "0.9", "--shots", "200", "--seed", "5",
                       "-o", str(out))
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "shot_id,symbol,n_t,n_r"
        assert len(lines) == 401
        assert lines[1].split(",")[1] == "0"
        summary = capsys.readouterr().out
        assert "plugin_mi[wf]" in summary

    def test_fixed_seed_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ("simulate", "--signal-mean", "2.0", "--lo-mean", "8.0",
                "--xi", "0.9", "--shots", "500", "--seed", "42")
        assert run_cli(*args, "-o", str(a)) == 0
        assert run_cli(*args, "-o", str(b)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_zero_shots_is_a_validation_error(self, tmp_path):
        code = run_cli("simulate", "--signal-mean", "2.0", "--lo-mean", "8.0",
                       "--shots", "0", "-o", str(tmp_path / "x.csv"))
        assert code == 1

    def test_analyze_round_trip_reproduces_summary(self, tmp_path, capsys):
        out = tmp_path / "shots.csv"
        run_cli("simulate", "--signal-mean", "3.07", "--lo-mean", "12.17",
                "--xi", "0.94", "--shots", "2000", "--seed", "7", "-o", str(out))
        capsys.readouterr()
        report_path = tmp_path / "report.json"
        code = run_cli("analyze", str(out), "--known-lo-mean", "12.17",
                       "-o", str(report_path))
        assert code == 0
        payload = json.loads(report_path.read_text())
        run = read_shot_records(out)
        n1, m1 = run.shots_for(1)
        assert payload["arm_means"]["symbol1"]["n"] == pytest.approx(n1.mean())
        assert payload["calibration"]["xi"] == pytest.approx(0.94, abs=0.05)
        assert 0.9 < payload["plugin_mi"]["wf"]["value"] <= 1.0

    def test_analyze_stdout_when_no_output(self, tmp_path, capsys):
        out = tmp_path / "shots.csv"
        run_cli("simulate", "--signal-mean", "1.0", "--lo-mean", "4.0",
                "--shots", "50", "--seed", "1", "-o", str(out))
        capsys.readouterr()
        assert run_cli("analyze", str(out)) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["calibration"] is None

    def test_analyze_rejects_single_symbol_file(self, tmp_path, capsys):
        path = tmp_path / "one.csv"
        path.write_text("shot_id,symbol,n_t,n_r\n0,1,3,1\n1,1,2,0\n")
        assert run_cli("analyze", str(path)) == 1
        assert "symbol" in capsys.readouterr().err

    def test_analyze_rejects_header_only_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("shot_id,symbol,n_t,n_r\n")
        assert run_cli("analyze", str(path)) == 1

    def test_analyze_names_malformed_line(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("shot_id,symbol,n_t,n_r\n0,1,3,1\n1,1,oops,0\n")
        assert run_cli("analyze", str(path)) == 1
        assert "line 3" in capsys.readouterr().err


class TestSweep:
    def test_small_sweep_table(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code = run_cli("sweep", "--mode", "lo", "--signal-mean", "2.0",
                       "--xi", "0.9", "--grid", "1:9:5",
                       "--strategies", "wf,hl,bds", "-o", str(out))
        assert code == 0
        lines = out.read_text().splitlines()
        header = [l for l in lines if not l.startswith("#")][0]
        assert header == "lo_mean,i_wf,i_hl,i_bds,trunc_err"
        assert len([l for l in lines if not l.startswith("#")]) == 6

    def test_empty_strategy_list_rejected(self, tmp_path):
        code = run_cli("sweep", "--mode", "lo", "--signal-mean", "2.0",
                       "--grid", "1:9:5", "--strategies", "",
                       "-o", str(tmp_path / "x.csv"))
        assert code == 1

    def test_non_monotone_grid_rejected(self, tmp_path):
        code = run_cli("sweep", "--mode", "lo", "--signal-mean", "2.0",
                       "--grid", "1,3,2", "-o", str(tmp_path / "x.csv"))
        assert code == 1

    def test_unwritable_path_is_io_error(self, tmp_path):
        target = tmp_path / "missing-dir" / "out.csv"
        code = run_cli("sweep", "--mode", "lo", "--signal-mean", "2.0",
                       "--grid", "1:9:3", "-o", str(target))
        assert code == 2
        assert not target.exists()

    def test_failed_run_leaves_no_partial_output(self, tmp_path):
        target = tmp_path / "out.csv"
        code = run_cli("sweep", "--mode", "lo", "--signal-mean", "2.0",
                       "--grid", "1,2,oops", "-o", str(target))
        assert code == 1
        assert not target.exists()
        assert not list(tmp_path.iterdir())

    def test_zero_tail_tolerance_fails_certification(self, tmp_path):
        code = run_cli("sweep", "--mode", "lo", "--signal-mean", "2.0",
                       "--grid", "1:9:3", "--tail-tol", "0",
                       "-o", str(tmp_path / "x.csv"))
        assert code == 3

    def test_workers_do_not_change_bytes(self, tmp_path):
        a, b = tmp_path / "w1.csv", tmp_path / "w8.csv"
        args = ("sweep", "--mode", "loss", "--signal-mean", "3.2",
                "--lo-mean", "12.15", "--xi", "0.94", "--grid", "0:13.44:7",
                "--strategies", "wf,bds", "--security", "ia-dr,ia-rr")
        assert run_cli(*args, "--workers", "1", "-o", str(a)) == 0
        assert run_cli(*args, "--workers", "4", "-o", str(b)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_rerun_is_idempotent(self, tmp_path):
        a, b = tmp_path / "r1.csv", tmp_path / "r2.csv"
        args = ("sweep", "--preset", "fig3")
        assert run_cli(*args, "-o", str(a)) == 0
        assert run_cli(*args, "-o", str(b)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "my.cfg"
        cfg.write_text("mode = lo\nsignal_mean = 2.0\nxi = 0.9\n"
                       "grid = 1:9:4\nstrategies = wf\n")
        out = tmp_path / "out.csv"
        assert run_cli("sweep", "--config", str(cfg), "--strategies", "wf,bds",
                       "-o", str(out)) == 0
        header = [l for l in out.read_text().splitlines()
                  if not l.startswith("#")][0]
        assert header == "lo_mean,i_wf,i_bds,trunc_err"

    def test_visibility_band_columns(self, tmp_path):
        out = tmp_path / "band.csv"
        assert run_cli("sweep", "--mode", "lo", "--signal-mean", "3.07",
                       "--xi", "0.86,0.91", "--grid", "6:12.17:3",
                       "--strategies", "wf", "-o", str(out)) == 0
        header = [l for l in out.read_text().splitlines()
                  if not l.startswith("#")][0]
        assert header == "lo_mean,i_wf[xi=0.86],i_wf[xi=0.91],trunc_err"

    def test_workers_env_variable(self, tmp_path, monkeypatch):
        monkeypatch.setenv("PNRCHAN_WORKERS", "2")
        out = tmp_path / "env.csv"
        assert run_cli("sweep", "--mode", "lo", "--signal-mean", "2.0",
                       "--grid", "1:5:4", "--strategies", "hl",
                       "-o", str(out)) == 0
        monkeypatch.setenv("PNRCHAN_WORKERS", "zero")
        assert run_cli("sweep", "--mode", "lo", "--signal-mean", "2.0",
                       "--grid", "1:5:4", "--strategies", "hl",
                       "-o", str(out)) == 1

    def test_transmissivity_alternative_input(self, tmp_path):
        by_loss = tmp_path / "a.csv"
        by_t = tmp_path / "b.csv"
        common = ("simulate", "--signal-mean", "2.0", "--lo-mean", "6.0",
                  "--xi", "0.9", "--shots", "100", "--seed", "3")
        assert run_cli(*common, "--loss-db", "3.0103", "-o", str(by_loss)) == 0
        assert run_cli(*common, "--transmissivity", str(10 ** -0.30103),
                       "-o", str(by_t)) == 0
        assert by_loss.read_bytes() == by_t.read_bytes()

    def test_gnuplot_script_emission(self, tmp_path):
        out = tmp_path / "table.csv"
        script = tmp_path / "table.gp"
        assert run_cli("sweep", "--mode", "lo", "--signal-mean", "2.0",
                       "--grid", "1:5:3", "--strategies", "wf,hl",
                       "--gnuplot-script", str(script), "-o", str(out)) == 0
        text = script.read_text()
        assert str(out) in text
        assert "i_hl" in text and "plot" in text


class TestSecurityCommand:
    def test_lossless_row_has_unit_k(self, tmp_path):
        out = tmp_path / "sec.csv"
        assert run_cli("security", "--signal-mean", "3.2", "--lo-mean", "12.15",
                       "--xi", "0.94", "--grid", "0,3,6", "-o", str(out)) == 0
        lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        header = lines[0].split(",")
        first = dict(zip(header, lines[1].split(",")))
        assert first["loss_db"] == "0"
        assert first["k_dr"] == "1" and first["k_ca_wf"] == "1"
        assert first["i_ae_wf"] == "0"

    def test_no_signal_rows_use_the_sentinel(self, tmp_path):
        out = tmp_path / "sec0.csv"
        assert run_cli("security", "--signal-mean", "0", "--lo-mean", "4.0",
                       "--xi", "0.9", "--grid", "1,2", "-o", str(out)) == 0
        lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        header = lines[0].split(",")
        row = dict(zip(header, lines[1].split(",")))
        assert row["k_dr"] == "undefined"
        assert row["i_ab_wf"] == "0"

    def test_every_cell_is_finite_or_sentinel(self, tmp_path):
        out = tmp_path / "sec.csv"
        assert run_cli("security", "--preset", "fig6", "-o", str(out)) == 0
        lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        for line in lines[1:]:
            for cell in line.split(","):
                if cell == "undefined":
                    continue
                assert np.isfinite(float(cell))


class TestPresets:
    def test_listing_names_all_bundled_presets(self, capsys):
        assert run_cli("presets") == 0
        out = capsys.readouterr().out
        for name in ("fig3", "fig4", "fig5", "fig6"):
            assert name in out

    def test_unknown_preset_rejected(self, tmp_path):
        assert run_cli("sweep", "--preset", "fig99",
                       "-o", str(tmp_path / "x.csv")) == 1

    def test_preset_command_mismatch_rejected(self, tmp_path):
        assert run_cli("security", "--preset", "fig3",
                       "-o", str(tmp_path / "x.csv")) == 1

    def test_config_parser(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("# comment\nkey = some value\n\nother=2\n")
        assert parse_config(cfg) == {"key": "some value", "other": "2"}


class TestRecordIo:
    def test_comment_lines_are_skipped_on_read(self, tmp_path):
        path = tmp_path / "shots.csv"
        path.write_text("# provenance note\nshot_id,symbol,n_t,n_r\n0,0,1,2\n1,1,3,0\n")
        run = read_shot_records(path)
        assert len(run) == 2

    def test_wrong_header_is_named(self, tmp_path):
        path = tmp_path / "shots.csv"
        path.write_text("id,symbol,a,b\n0,0,1,2\n")
        with pytest.raises(Exception) as err:
            read_shot_records(path)
        assert "header" in str(err.value)

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli("--version")
        assert exc.value.code == 0
