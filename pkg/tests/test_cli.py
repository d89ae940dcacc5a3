import json
import os

import numpy as np
import pandas as pd

from src.cli import cli
from src.classifiers import METHODS
from src.dataset import load_csv
from src.schemas import sim_design_schema
from src.synth import generate

FAST = {"settings": {"B": 10, "MCD_STARTS": 20, "PP_RANDOM_DIRECTIONS": 20, "PP_REFINE_ROUNDS": 5}}


def _read(path):
    with open(path, "rb") as handle:
        return handle.read()


def _real_csv(write_file, rows_per_class=12, shift=3.0):
    rng = np.random.default_rng(0)
    lines = ["g1,g2,g3,label"]
    for label, offset in (("normal", [0.0, 0.0, 0.0]), ("tumour", [shift, 0.0, 0.0])):
        for row in np.exp(rng.standard_normal((rows_per_class, 3)) * 0.3 + offset):
            lines.append(",".join(f"{value:.6f}" for value in row) + f",{label}")
    return write_file("real.csv", "\n".join(lines) + "\n")


def test_simulate_single_cell(runner, tmp_path):
    """
    The default grid writes one dataset and one manifest that regenerates it
    """

    out = str(tmp_path / "sim")
    result = runner.invoke(cli, ["simulate", "--out", out, "--seed", "7"])
    assert result.exit_code == 0, result.output
    assert sorted(os.listdir(out)) == ["G2_p10_rho0_eps0_kappa9.csv", "G2_p10_rho0_eps0_kappa9.manifest"]

    with open(os.path.join(out, "G2_p10_rho0_eps0_kappa9.manifest"), encoding="utf-8") as handle:
        manifest = json.load(handle)
    assert manifest["rows"] == 60
    design = sim_design_schema.load(manifest["design"])
    written = load_csv(os.path.join(out, "G2_p10_rho0_eps0_kappa9.csv"))
    np.testing.assert_array_equal(written.features, generate(design).features)


def test_simulate_grid(runner, write_file, tmp_path):
    """
    A 3 x 3 grid over p and epsilon gives nine dataset and manifest pairs
    """

    config = write_file("grid.ini", "[grid]\np = 5, 10, 20\nepsilon = 0, 0.05, 0.1\n[design]\nn_per_class = 8\n")
    out = str(tmp_path / "grid")
    result = runner.invoke(cli, ["simulate", "--config", config, "--out", out])
    assert result.exit_code == 0, result.output
    files = os.listdir(out)
    assert len([name for name in files if name.endswith(".manifest")]) == 9
    assert len([name for name in files if name.endswith(".csv")]) == 9


def test_simulate_is_reproducible(runner, tmp_path):
    """
    The same seed writes the same bytes
    """

    first, second = str(tmp_path / "a"), str(tmp_path / "b")
    for out in (first, second):
        assert runner.invoke(cli, ["simulate", "--out", out, "--seed", "3"]).exit_code == 0
    for name in os.listdir(first):
        assert _read(os.path.join(first, name)) == _read(os.path.join(second, name))


def test_bench_single_method(runner, write_file, tmp_path):
    """
    One cell, one method, five replications: one report row and five plot rows
    """

    config = write_file("bench.ini", "[grid]\np = 5\n[design]\nn_per_class = 12\n[eval]\nmethods = rf\n")
    out = str(tmp_path / "bench")
    result = runner.invoke(cli, ["bench", "--config", config, "--out", out, "--R", "5"], obj=FAST)
    assert result.exit_code == 0, result.output

    report = pd.read_csv(os.path.join(out, "report.csv"), keep_default_na=False)
    assert len(report) == 1
    assert report.loc[0, "method"] == "rf"
    assert report.loc[0, "R"] == 5
    assert report.loc[0, "runtime_ms"] == "NA"
    plot = pd.read_csv(os.path.join(out, "plot_data.csv"))
    assert len(plot) == 5

    with open(os.path.join(out, "report.json"), encoding="utf-8") as handle:
        document = json.load(handle)
    assert document["config"]["B"] == 10
    assert document["config"]["METHODS"] == ["rf"]


def test_bench_rerun_is_byte_identical(runner, write_file, tmp_path):
    """
    Rerunning with the same seed reproduces every output file
    """

    config = write_file("bench.ini", "[grid]\np = 4\n[design]\nn_per_class = 10\n[eval]\nmethods = lda, pp-mad\n")
    first, second = str(tmp_path / "a"), str(tmp_path / "b")
    for out in (first, second):
        result = runner.invoke(cli, ["bench", "--config", config, "--out", out, "--R", "2", "--seed", "11"], obj=FAST)
        assert result.exit_code == 0, result.output
    for name in ("report.csv", "plot_data.csv", "report.json"):
        assert _read(os.path.join(first, name)) == _read(os.path.join(second, name))


def test_bench_infeasible_method_reads_na(runner, write_file, tmp_path):
    """
    linda with p far above the class size fails every replication without stopping the run
    """

    config = write_file("wide.ini", "[grid]\np = 1000\n[design]\nn_per_class = 10\n")
    out = str(tmp_path / "wide")
    result = runner.invoke(cli, ["bench", "--config", config, "--out", out, "--R", "2", "--methods", "dda,linda"],
                           obj=FAST)
    assert result.exit_code == 0, result.output
    report = pd.read_csv(os.path.join(out, "report.csv"), keep_default_na=False).set_index("method")
    assert report.loc["linda", "avte_mean"] == "NA"
    assert report.loc["linda", "failure_count"] == 2
    assert report.loc["dda", "avte_mean"] != "NA"


def test_eval_real_all_methods(runner, write_file, tmp_path):
    """
    Every registered method gets a row on a real dataset
    """

    data = _real_csv(write_file)
    out = str(tmp_path / "real")
    result = runner.invoke(cli, ["eval-real", data, "--out", out, "--R", "2", "--log-median"], obj=FAST)
    assert result.exit_code == 0, result.output
    report = pd.read_csv(os.path.join(out, "report.csv"), keep_default_na=False)
    assert report["method"].tolist() == list(METHODS)
    assert set(report["source"]) == {"real"}
    assert (report["failure_count"] == 0).all()


def test_eval_real_label_column(runner, write_file, tmp_path):
    """
    The label column can be renamed
    """

    data = write_file("renamed.csv", "a,b,group\n1,2,x\n2,3,x\n3,4,x\n7,8,y\n8,9,y\n9,7,y\n")
    out = str(tmp_path / "renamed")
    result = runner.invoke(cli, ["eval-real", data, "--label-column", "group", "--methods", "dda", "--R", "1",
                                 "--out", out])
    assert result.exit_code == 0, result.output
    with open(os.path.join(out, "report.json"), encoding="utf-8") as handle:
        assert json.load(handle)["config"]["LABEL_COLUMN"] == "group"


def test_eval_real_log_median_rejects_nonpositive(runner, write_file, tmp_path):
    """
    Log-median normalization of a zero cell is a data error
    """

    data = write_file("zero.csv", "a,b,label\n1,0,x\n2,3,x\n3,4,x\n7,8,y\n8,9,y\n9,7,y\n")
    result = runner.invoke(cli, ["eval-real", data, "--log-median", "--out", str(tmp_path / "zero")])
    assert result.exit_code == 3
    assert "positive" in result.output


def test_unknown_key_names_line(runner, write_file, tmp_path):
    """
    An unknown key is reported with its line
    """

    config = write_file("typo.ini", "[forest]\nB = 10\n\nmax_dept = 3\n")
    result = runner.invoke(cli, ["bench", "--config", config, "--out", str(tmp_path / "typo")])
    assert result.exit_code == 2
    assert "line 4" in result.output
    assert "max_dept" in result.output


def test_empty_methods_option(runner, tmp_path):
    """
    A --methods value naming nothing is a config error
    """

    result = runner.invoke(cli, ["bench", "--methods", " , ", "--out", str(tmp_path / "none")])
    assert result.exit_code == 2


def test_verbose_flag(runner, tmp_path):
    """
    --verbose is accepted ahead of any command
    """

    result = runner.invoke(cli, ["--verbose", "simulate", "--out", str(tmp_path / "v")])
    assert result.exit_code == 0, result.output
