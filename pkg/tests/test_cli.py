import json
import os
import subprocess
import sys

import numpy as np
import pytest

from jddtest import PairedSample, TestConfig, critical_value, write_sample_csv
from jddtest.cli import main
from conftest import clustered_pair, random_sample

PINNED_ENV = {"SOURCE_DATE_EPOCH": "1700000000"}


def run_cli(*args, env_extra=None, cwd=None):
    env = {**os.environ, **PINNED_ENV, **(env_extra or {})}
    return subprocess.run(
        [sys.executable, "-m", "jddtest", *map(str, args)],
        capture_output=True, text=True, env=env, cwd=cwd,
    )


@pytest.fixture(scope="module")
def csv_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("csv")
    rng = np.random.default_rng(0)
    base = random_sample(rng, 30, 3, 2)
    write_sample_csv(base, root / "base.csv")
    copy = PairedSample(xs=base.xs.copy(), ys=base.ys.copy())
    write_sample_csv(copy, root / "copy.csv")
    p, q = clustered_pair(m=25, dx=2, dy=2, separation=10.0)
    write_sample_csv(p, root / "near.csv")
    write_sample_csv(q, root / "far.csv")
    write_sample_csv(random_sample(rng, 10, 3, 2), root / "ten.csv")
    write_sample_csv(PairedSample([[0.5]], [[0.25]]), root / "single.csv")
    (root / "bad.csv").write_text("a,b\n1,2\n")
    return root


def data_lines(text: str) -> list[str]:
    return [ln for ln in text.splitlines() if ln and not ln.startswith("#")]


class TestTestCommand:
    def test_identical_samples_accept_exit_zero(self, csv_dir):
        proc = run_cli("test", "--p", csv_dir / "base.csv", "--q", csv_dir / "copy.csv",
                       "--alpha", "0.05")
        assert proc.returncode == 0
        assert "ACCEPT" in proc.stdout
        assert "JDD            : 0.0" in proc.stdout

    def test_planted_shift_rejects_exit_three(self, csv_dir):
        proc = run_cli("test", "--p", csv_dir / "near.csv", "--q", csv_dir / "far.csv",
                       "--alpha", "0.05")
        assert proc.returncode == 3
        assert "REJECT" in proc.stdout

    def test_malformed_csv_exit_two(self, csv_dir):
        proc = run_cli("test", "--p", csv_dir / "bad.csv", "--q", csv_dir / "base.csv")
        assert proc.returncode == 2
        assert "error:" in proc.stderr

    def test_missing_file_exit_two(self, csv_dir):
        proc = run_cli("test", "--p", csv_dir / "nope.csv", "--q", csv_dir / "base.csv")
        assert proc.returncode == 2

    def test_unequal_sizes_cite_restriction(self, csv_dir):
        proc = run_cli("test", "--p", csv_dir / "base.csv", "--q", csv_dir / "ten.csv")
        assert proc.returncode == 2
        assert "m = n" in proc.stderr

    def test_json_report_echoes_inputs(self, csv_dir):
        proc = run_cli("test", "--p", csv_dir / "near.csv", "--q", csv_dir / "far.csv",
                       "--alpha", "0.1", "--json")
        assert proc.returncode == 3
        document = json.loads(proc.stdout)
        report = document["report"]
        assert report["reject"] is True
        assert report["alpha"] == 0.1
        assert report["m"] == 25 and report["n"] == 25
        assert report["kernel_bound"] == 1.0
        assert document["inputs"].keys() == {"p", "q"}
        assert report["jdd"] > report["critical_value"]

    def test_marginal_baselines_reported(self, tmp_path):
        # purely-joint shift: JDD fires while both marginal baselines stay low
        rng = np.random.default_rng(9)
        x = rng.normal(size=(150, 1))
        write_sample_csv(PairedSample(xs=x, ys=x.copy()), tmp_path / "p.csv")
        x2 = rng.normal(size=(150, 1))
        write_sample_csv(PairedSample(xs=x2, ys=-x2), tmp_path / "q.csv")
        proc = run_cli("test", "--p", tmp_path / "p.csv", "--q", tmp_path / "q.csv",
                       "--marginals", "--json")
        document = json.loads(proc.stdout)
        assert document["report"]["jdd"] > 3 * document["marginals"]["mmd_x"]
        assert document["report"]["jdd"] > 3 * document["marginals"]["mmd_y"]

    def test_linear_kernel_mode(self, csv_dir, tmp_path):
        rng = np.random.default_rng(5)
        s = random_sample(rng, 12, 2, 2, nonneg=True)
        write_sample_csv(s, tmp_path / "nn.csv")
        proc = run_cli("test", "--p", tmp_path / "nn.csv", "--q", tmp_path / "nn.csv",
                       "--kernel", "linear")
        assert proc.returncode == 0


class TestThresholdCommand:
    def test_single_cell_matches_library(self):
        proc = run_cli("threshold", "--alphas", "0.05", "--ms", "50")
        assert proc.returncode == 0
        rows = data_lines(proc.stdout)
        assert rows[0] == "alpha,m,critical_value"
        expected = critical_value(TestConfig(0.05, 1.0, 50))
        assert rows[1] == f"0.05,50,{expected!r}"

    def test_grid_shape_and_monotonicity(self):
        proc = run_cli("threshold", "--alphas", "0.05:0.95:0.05", "--ms", "10:1000:50")
        rows = data_lines(proc.stdout)[1:]
        assert len(rows) == 19 * 20
        grid = np.array([float(r.split(",")[2]) for r in rows]).reshape(19, 20)
        assert np.all(np.diff(grid, axis=1) < 0)
        assert np.all(np.diff(grid, axis=0) > 0)

    def test_convergence_curve_strictly_decreasing(self):
        proc = run_cli("threshold", "--alphas", "0.05", "--ms", "10:1000:10")
        values = [float(r.split(",")[2]) for r in data_lines(proc.stdout)[1:]]
        assert len(values) == 100
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_bad_range_syntax_exit_two(self):
        proc = run_cli("threshold", "--alphas", "0.05:0.95", "--ms", "10")
        assert proc.returncode == 2
        proc = run_cli("threshold", "--alphas", "oops", "--ms", "10")
        assert proc.returncode == 2

    def test_manifest_comments_present(self, tmp_path):
        out = tmp_path / "grid.csv"
        proc = run_cli("threshold", "--alphas", "0.1", "--ms", "10", "--out", out)
        assert proc.returncode == 0 and proc.stdout == ""
        text = out.read_text()
        assert text.startswith("# jddtest threshold\n")
        assert "# version:" in text and "# timestamp:" in text and "# args:" in text


class TestMnistSweepCommand:
    def test_sweep_schema_and_null_acceptance(self, idx_files):
        images, labels = idx_files
        proc = run_cli("mnist-sweep", "--images", images, "--labels", labels,
                       "--digit", "3", "--m", "60", "--seed", "11",
                       "--rho-min", "-20", "--rho-max", "20", "--rho-step", "10")
        assert proc.returncode == 0
        rows = data_lines(proc.stdout)
        assert rows[0] == "rho,jdd,critical_value,reject"
        body = [r.split(",") for r in rows[1:]]
        assert [b[0] for b in body] == ["-20.0", "-10.0", "0.0", "10.0", "20.0"]
        zero_row = body[2]
        assert zero_row[3] == "false"

    def test_trials_add_summary_columns(self, idx_files):
        images, labels = idx_files
        proc = run_cli("mnist-sweep", "--images", images, "--labels", labels,
                       "--digit", "1", "--m", "24", "--seed", "3", "--trials", "3",
                       "--rho-min", "0", "--rho-max", "10", "--rho-step", "10")
        rows = data_lines(proc.stdout)
        assert rows[0] == "rho,jdd,critical_value,reject,jdd_mean,jdd_min,jdd_max"
        for row in rows[1:]:
            cells = row.split(",")
            assert float(cells[5]) <= float(cells[4]) <= float(cells[6])

    def test_byte_identical_reruns(self, idx_files):
        images, labels = idx_files
        args = ("mnist-sweep", "--images", images, "--labels", labels,
                "--digit", "0", "--m", "30", "--seed", "5",
                "--rho-min", "0", "--rho-max", "30", "--rho-step", "15")
        first = run_cli(*args)
        second = run_cli(*args)
        assert first.stdout == second.stdout and first.returncode == second.returncode == 0

    def test_missing_files_exit_two(self, tmp_path):
        proc = run_cli("mnist-sweep", "--images", tmp_path / "none", "--labels",
                       tmp_path / "none2", "--seed", "1")
        assert proc.returncode == 2


class TestCalibrateCommand:
    def test_gaussian_schema_and_summary(self):
        proc = run_cli("calibrate", "--generator", "gaussian", "--m", "40",
                       "--trials", "4", "--seed", "8")
        assert proc.returncode == 0
        rows = data_lines(proc.stdout)
        assert rows[0] == "kind,trial,jdd,critical_value,reject,rejection_rate"
        assert len(rows) == 6  # header + 4 trials + summary
        assert rows[-1].startswith("summary,")
        assert rows[-1].endswith(",0.0")

    def test_mnist_generator(self, idx_files):
        images, labels = idx_files
        proc = run_cli("calibrate", "--generator", "mnist", "--images", images,
                       "--labels", labels, "--digit", "3", "--m", "20",
                       "--trials", "3", "--seed", "4")
        assert proc.returncode == 0
        assert data_lines(proc.stdout)[-1].endswith(",0.0")

    def test_mnist_generator_requires_files(self):
        proc = run_cli("calibrate", "--generator", "mnist", "--m", "10",
                       "--trials", "2", "--seed", "1")
        assert proc.returncode == 2


class TestRademacherCommand:
    def test_single_observation_tight_case(self, csv_dir):
        proc = run_cli("rademacher", "--p", csv_dir / "single.csv", "--seed", "6",
                       "--trials", "50")
        assert proc.returncode == 0
        rows = data_lines(proc.stdout)
        assert rows[0] == "m,mc_mean,mc_std_error,jensen_bound,k_over_sqrt_m"
        cells = rows[1].split(",")
        assert cells == ["1", "1.0", "0.0", "1.0", "1.0"]

    def test_chain_holds_on_random_sample(self, csv_dir):
        proc = run_cli("rademacher", "--p", csv_dir / "base.csv", "--seed", "2",
                       "--trials", "400")
        assert proc.returncode == 0
        m, mean, se, jensen, ks = (float(c) for c in data_lines(proc.stdout)[1].split(","))
        assert mean <= jensen + 3 * se + 1e-12
        assert jensen <= ks + 1e-12

    def test_violation_exit_code_four(self, csv_dir, monkeypatch, capsys):
        # no honest input can violate the chain, so force the estimate
        import jddtest.cli as cli
        from jddtest.discrepancy import RademacherEstimate

        monkeypatch.setattr(
            cli, "rademacher_mc_estimate",
            lambda *a, **k: RademacherEstimate(mean=99.0, std_error=0.0, trials=2),
        )
        code = main(["rademacher", "--p", str(csv_dir / "base.csv"), "--seed", "1",
                     "--trials", "2", "--out", os.devnull])
        assert code == 4
        assert "bound violation" in capsys.readouterr().err


class TestPlots:
    def test_threshold_plot_written_and_deterministic(self, tmp_path):
        args = ("threshold", "--alphas", "0.01:0.2:0.01", "--ms", "10:200:10",
                "--out", tmp_path / "grid.csv", "--plot", tmp_path / "grid.png")
        assert run_cli(*args).returncode == 0
        first = (tmp_path / "grid.png").read_bytes()
        assert first[:8] == b"\x89PNG\r\n\x1a\n"
        assert run_cli(*args).returncode == 0
        assert (tmp_path / "grid.png").read_bytes() == first

    def test_sweep_plot(self, idx_files, tmp_path):
        images, labels = idx_files
        proc = run_cli("mnist-sweep", "--images", images, "--labels", labels,
                       "--digit", "0", "--m", "20", "--seed", "5",
                       "--rho-min", "0", "--rho-max", "20", "--rho-step", "10",
                       "--trials", "2",
                       "--out", tmp_path / "sweep.csv", "--plot", tmp_path / "sweep.png")
        assert proc.returncode == 0
        assert (tmp_path / "sweep.png").stat().st_size > 0

    def test_calibrate_and_rademacher_plots(self, csv_dir, tmp_path):
        assert run_cli("calibrate", "--generator", "gaussian", "--m", "15",
                       "--trials", "3", "--seed", "2",
                       "--out", tmp_path / "c.csv", "--plot", tmp_path / "c.png").returncode == 0
        assert run_cli("rademacher", "--p", csv_dir / "base.csv", "--seed", "3",
                       "--trials", "60",
                       "--out", tmp_path / "r.csv", "--plot", tmp_path / "r.png").returncode == 0
        assert (tmp_path / "c.png").stat().st_size > 0
        assert (tmp_path / "r.png").stat().st_size > 0


def test_no_subcommand_exits_two():
    proc = run_cli()
    assert proc.returncode == 2
