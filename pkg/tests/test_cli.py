"""End-to-end tests for the command-line driver.

Every command runs in-process through ``main(argv)``; reports land in tmp
files via --out (or are parsed from captured stdout/stderr).
"""

import json
import shutil

import numpy as np
import pytest

from microsets.cli import DEFAULT_SEED, main


def run(tmp_path, *argv, name="report.json"):
    """Run the CLI with --out, return (exit_code, report_dict_or_None)."""
    out = tmp_path / name
    code = main([str(a) for a in argv] + ["--out", str(out)])
    report = json.loads(out.read_text()) if out.exists() else None
    return code, report


def run_stderr(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    err = json.loads(captured.err) if captured.err.strip() else None
    return code, err


# -- sequences ---------------------------------------------------------------


def test_seq_gen_writes_sequence_file(tmp_path):
    code, payload = run(tmp_path, "seq", "gen", "--gamma", "1/2", "--length", 400)
    assert code == 0
    assert payload["gamma"] == "1/2"
    assert len(payload["bits"]) == 400
    assert payload["schedule"] == sorted(payload["schedule"])
    # reports are self-contained: version plus resolved config
    assert payload["version"]
    assert payload["config"]["length"] == 400


def test_seq_roundtrip_check_ok(tmp_path):
    run(tmp_path, "seq", "gen", "--gamma", "1/2", "--length", 2000, name="s.json")
    code, rep = run(tmp_path, "seq", "check", "--in", tmp_path / "s.json")
    assert code == 0
    assert rep["ok"] is True
    ms = [c["m"] for c in rep["result"]["checks"]]
    assert ms == list(range(1, len(ms) + 1)) and len(ms) >= 3
    assert all(c["ok"] for c in rep["result"]["checks"])


def test_seq_check_detects_missing_zero_runs(tmp_path):
    # alternating bits have no 2-run of zeros inside the m=2 window
    code, rep = run(tmp_path, "seq", "check", "--bits", "10", "--repeat", 20)
    assert code == 1
    assert rep["ok"] is False
    assert any(f["check"] == "zero_window_m2" for f in rep["failures"])


# -- moran trees ---------------------------------------------------------------


def test_moran_build_report(tmp_path):
    code, rep = run(tmp_path, "moran", "build", "--gamma", "1/2",
                    "--length", 200, "--rho", "1/2", "--d", 1)
    assert code == 0
    res = rep["result"]
    assert res["depth"] == 200
    assert 0 < res["branching_levels"] < 200
    assert res["deepest_count"] == 2 ** res["branching_levels"]


def test_moran_build_materializes_tree_file(tmp_path):
    tree_file = tmp_path / "tree.json"
    code, _ = run(tmp_path, "moran", "build", "--gamma", "1/2", "--length", 100,
                  "--materialize", 4, "--tree-out", tree_file)
    assert code == 0
    data = json.loads(tree_file.read_text())
    assert data["kind"] == "cube_tree"
    # the explicit file round-trips through the tree subcommands
    code, rep = run(tmp_path, "tree", "subtree", "--in", tree_file, "--code", "1")
    assert code == 0
    assert len(rep["levels"]) == len(data["levels"]) - 1


def test_moran_microset_report(tmp_path):
    code, rep = run(tmp_path, "moran", "microset", "--gamma", "1/2",
                    "--length", 120, "--code", "1,1")
    assert code == 0
    assert rep["result"]["magnification"] == 4.0


def test_moran_check_small_ok(tmp_path):
    code, rep = run(tmp_path, "moran", "check-small", "--gamma", "1/2",
                    "--length", 300, "--m", 2, "--samples", 500)
    assert code == 0
    assert rep["result"]["max_count"] <= rep["result"]["bound"] == 9


# -- dimension subcommands --------------------------------------------------------


def test_dim_formula_periodic_anchor(tmp_path):
    # density 2/3 at rho = 1/2 gives dimension 2/3
    code, rep = run(tmp_path, "dim", "assouad-formula", "--bits", "110",
                    "--repeat", 1000, "--rho", "1/2", "--n-max", 3000)
    assert code == 0
    assert abs(rep["result"]["value"] - 2 / 3) < 1e-3


def test_dim_calibrate_all_ones(tmp_path):
    code, rep = run(tmp_path, "dim", "calibrate", "--bits", "1",
                    "--repeat", 2000, "--d", 1, "--alpha", "0.5")
    assert code == 0
    assert abs(rep["result"]["rho0"] - 0.25) < 1e-9
    assert abs(rep["result"]["achieved"] - 0.5) < 1e-9


def test_dim_calibrate_infeasible_is_parameter_error(capsys):
    code, err = run_stderr(capsys, "dim", "calibrate", "--gamma", "1/2",
                           "--length", 2000, "--d", 1, "--alpha", "0.9")
    assert code == 2
    assert err["error"]["type"] == "InfeasibleTarget"


def test_dim_estimate_cantor(tmp_path):
    code, rep = run(tmp_path, "dim", "estimate", "--cloud", "cantor:10",
                    "--scale-gap", 8)
    assert code == 0
    assert 0.55 <= rep["result"]["value"] <= 0.70


# -- partitions and their trees -----------------------------------------------------


@pytest.fixture(scope="module")
def ctree_file(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("ctree")
    code, _ = run(tmp, "cubes", "tree", "--cloud", "cantor:8",
                  "--rho", "1/4", "--kmax", 5, name="ctree.json")
    assert code == 0
    return tmp / "ctree.json"


def test_cubes_build_payload(tmp_path):
    code, payload = run(tmp_path, "cubes", "build", "--cloud", "cantor:6",
                        "--rho", "1/4", "--kmax", 4)
    assert code == 0
    assert payload["kind"] == "inner_partition"
    assert payload["rho"] == "1/4"
    assert len(payload["levels"]) == 5
    root = payload["levels"][0]["cubes"]
    assert len(root) == 1 and root[0]["parent"] == -1
    cube = payload["levels"][2]["cubes"][0]
    assert set(cube) == {"id", "center_index", "center", "parent"}
    assert all(len(o) == payload["n_points"] for o in payload["owners"])
    consts = payload["constants"]
    assert consts["C_meas"] <= consts["C_target"]
    assert consts["M_meas"] >= 1


def test_cubes_validate_ok(tmp_path):
    code, rep = run(tmp_path, "cubes", "validate", "--cloud", "cantor:8",
                    "--rho", "1/4", "--kmax", 5)
    assert code == 0
    assert rep["ok"] is True
    assert all(rep["result"]["properties"].values())


def test_tree_lowerdim_on_partition_tree(tmp_path, ctree_file):
    code, rep = run(tmp_path, "tree", "lowerdim", "--in", ctree_file,
                    "--min-gap", 2)
    assert code == 0
    assert 0 < rep["result"]["value"] <= 1


# -- pigeonhole ---------------------------------------------------------------


def test_pigeonhole_good_then_find(tmp_path, ctree_file):
    code, rep = run(tmp_path, "pigeonhole", "good", "--tree", ctree_file,
                    "--t", "0.9", "--ell", 2, name="good.json")
    assert code == 0
    res = rep["result"]
    assert res["verified"] is True
    assert res["n"] >= 1 and res["k"] - res["n"] >= 2
    # direct descent at the full depth; s must clear log #T_k / (k log 1/rho)
    tree = json.loads(ctree_file.read_text())
    k = len(tree["levels"]) - 1
    s = np.log(len(tree["levels"][k])) / (k * np.log(4)) + 0.05
    code, rep2 = run(tmp_path, "pigeonhole", "find", "--tree", ctree_file,
                     "--s", s, "--t", "0.95", "--ell", 1, "--k", k,
                     name="find.json")
    assert code == 0
    assert rep2["result"]["verified"] is True


def test_pigeonhole_witness_failure_is_parameter_error(capsys, ctree_file):
    # ell = 4 needs depth 8; the tree is only 5 deep
    code, err = run_stderr(capsys, "pigeonhole", "good", "--tree", ctree_file,
                           "--t", "0.9", "--ell", 4)
    assert code == 2
    assert err["error"]["type"] in ("WitnessNotFound", "PreconditionError")


# -- packing ---------------------------------------------------------------


def test_pack_estimate_grid_anchor(tmp_path):
    code, rep = run(tmp_path, "pack", "estimate", "--cloud", "grid:0.001",
                    "--s", 1, "--delta", "0.01")
    assert code == 0
    assert 0.9 <= rep["result"]["lower_sum"] <= 1.1


def test_pack_estimate_upper_bound_failure(tmp_path):
    code, rep = run(tmp_path, "pack", "estimate", "--cloud", "grid:0.001",
                    "--s", 1, "--delta", "0.01", "--upper-bound", "0.5")
    assert code == 1
    assert rep["ok"] is False
    assert rep["failures"][0]["check"] == "packing_upper_bound"


# -- tangent pipeline ---------------------------------------------------------------


def test_tangent_run_blocks_and_exit(tmp_path):
    code, rep = run(tmp_path, "tangent", "run", "--cloud", "cantor:8",
                    "--ell-max", 2, "--samples", 25)
    assert code == 0
    statuses = {b["ell"]: b["status"] for b in rep["result"]["blocks"]}
    assert statuses[2] == "verified"
    assert rep["result"]["symbolic"]["holds"] is True


def test_tangent_run_numeric_beta(tmp_path):
    code, rep = run(tmp_path, "tangent", "run", "--cloud", "cantor:8",
                    "--ell-max", 2, "--samples", 10, "--beta", "1/2")
    assert code == 0
    assert rep["result"]["beta"] == 0.5
    assert rep["result"]["beta_source"] == "given"


def test_tangent_jobs_matches_serial(tmp_path):
    _, serial = run(tmp_path, "tangent", "run", "--cloud", "cantor:8",
                    "--ell-max", 3, "--samples", 25, name="s.json")
    _, parallel = run(tmp_path, "tangent", "run", "--cloud", "cantor:8",
                      "--ell-max", 3, "--samples", 25, "--jobs", 3, name="p.json")
    assert serial["result"] == parallel["result"]


# -- theorem drivers ---------------------------------------------------------------


def test_verify_theorem_a_fallback(tmp_path):
    # the length-2000 prefix cannot reach 0.9; the run records the fallback
    # and still verifies all covering counts at the attainable ratio
    code, rep = run(tmp_path, "verify", "theorem-a", "--gamma", "1/2",
                    "--alpha", "0.9", "--depth", 2000, "--m-max", 3,
                    "--trials", 5)
    assert code == 0
    res = rep["result"]
    assert res["calibration"]["status"] == "infeasible_fallback"
    assert res["calibration"]["rho0"] == 0.5
    assert res["covering"]["bound"] == 9
    assert all(v <= 9 for v in res["covering"]["max_per_m"].values())
    assert all(c["ok"] for c in res["checks"])


def test_verify_theorem_a_calibrated(tmp_path):
    code, rep = run(tmp_path, "verify", "theorem-a", "--gamma", "1/2",
                    "--alpha", "0.3", "--depth", 2000, "--m-max", 2,
                    "--trials", 3)
    assert code == 0
    cal = rep["result"]["calibration"]
    assert cal["status"] == "calibrated"
    assert 0 < cal["rho0"] < 0.5
    assert abs(cal["achieved"] - 0.3) < 1e-6


def test_verify_theorem_a_trivial_target(tmp_path):
    code, rep = run(tmp_path, "verify", "theorem-a", "--gamma", "1/2",
                    "--alpha", 0, "--depth", 500)
    assert code == 0
    assert rep["result"]["status"] == "trivial"


def test_verify_theorem_a_target_at_ambient_dimension(capsys):
    code, err = run_stderr(capsys, "verify", "theorem-a", "--gamma", "1/2",
                           "--alpha", 1, "--d", 1, "--depth", 500)
    assert code == 2
    assert err["error"]["type"] == "InfeasibleTarget"


def test_verify_theorem_b_cantor(tmp_path):
    code, rep = run(tmp_path, "verify", "theorem-b", "--cloud", "cantor:10",
                    "--ell-max", 4)
    assert code == 0
    pipe = rep["result"]["pipeline"]
    # exponent comes from the cloud's geometric estimate, near log2/log3
    assert 0.55 <= pipe["beta_cloud"] <= 0.70
    assert pipe["beta"] == pipe["beta_cloud"]
    assert pipe["packing_bound"] > 0
    assert [b["ell"] for b in pipe["blocks"]] == [1, 2, 3, 4]
    verified = [b for b in pipe["blocks"] if b["status"] == "verified"]
    assert verified and all(b["worst_ratio"] >= 1 for b in verified)


def test_verify_theorem_b_single_point_degenerate(tmp_path):
    code, rep = run(tmp_path, "verify", "theorem-b", "--cloud", "single:1",
                    "--ell-max", 2)
    assert code == 0
    assert rep["result"]["pipeline"]["beta"] == 0.0


def test_verify_theorem_b_grid(tmp_path):
    code, rep = run(tmp_path, "verify", "theorem-b", "--cloud", "grid:0.001",
                    "--ell-max", 2)
    assert code == 0
    pipe = rep["result"]["pipeline"]
    assert pipe["beta_cloud"] > 0.9  # near the ambient dimension 1
    assert rep["ok"] is True


# -- plots ---------------------------------------------------------------


@pytest.fixture(scope="module")
def artifacts(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("plot-src")
    run(tmp, "seq", "gen", "--gamma", "1/2", "--length", 600, name="seq.json")
    run(tmp, "cubes", "tree", "--cloud", "cantor:8", "--kmax", 5, name="tree.json")
    run(tmp, "pigeonhole", "good", "--tree", tmp / "tree.json",
        "--t", "0.9", "--ell", 2, name="pig.json")
    run(tmp, "tangent", "run", "--cloud", "cantor:8", "--ell-max", 2,
        "--samples", 15, name="tan.json")
    return tmp


@pytest.mark.parametrize("kind,src,header", [
    ("cesaro", "seq.json", "n,mean"),
    ("window-sup-mean", "seq.json", "n,sup_mean"),
    ("ratio-profile", "pig.json", "j,min_ratio,threshold"),
    ("scatter", "tan.json", "ell,r,mass_ratio"),
])
def test_plot_emits_csv_and_png(tmp_path, artifacts, kind, src, header):
    csv = tmp_path / f"{kind}.csv"
    code, rep = run(tmp_path, "plot", "--report", artifacts / src,
                    "--kind", kind, "--out-csv", csv)
    assert code == 0
    lines = csv.read_text().splitlines()
    assert lines[0] == header and len(lines) > 1
    png = csv.with_suffix(".png")
    assert png.exists() and png.read_bytes()[:4] == b"\x89PNG"
    assert rep["result"]["rows"] == len(lines) - 1


def test_plot_missing_series_is_parameter_error(capsys, artifacts):
    code, err = run_stderr(capsys, "plot", "--report", artifacts / "seq.json",
                           "--kind", "scatter", "--out-csv", "/tmp/never.csv")
    assert code == 2
    assert "no tangent blocks" in err["error"]["message"]


def test_plot_reruns_byte_identical(tmp_path, artifacts):
    csv = tmp_path / "r.csv"
    run(tmp_path, "plot", "--report", artifacts / "tan.json",
        "--kind", "scatter", "--out-csv", csv)
    first = (csv.read_bytes(), csv.with_suffix(".png").read_bytes())
    run(tmp_path, "plot", "--report", artifacts / "tan.json",
        "--kind", "scatter", "--out-csv", csv)
    assert (csv.read_bytes(), csv.with_suffix(".png").read_bytes()) == first


# -- determinism and seeds --------------------------------------------------------


def test_report_reruns_byte_identical(tmp_path):
    argv = ["verify", "theorem-b", "--cloud", "cantor:8", "--ell-max", 2]
    run(tmp_path, *argv, name="a.json")
    run(tmp_path, *argv, name="b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_env_seed_matches_flag(tmp_path, monkeypatch):
    monkeypatch.setenv("MICROSET_SEED", "7")
    _, env_rep = run(tmp_path, "tangent", "run", "--cloud", "cantor:8",
                     "--ell-max", 2, "--samples", 10, name="env.json")
    monkeypatch.delenv("MICROSET_SEED")
    _, flag_rep = run(tmp_path, "tangent", "run", "--cloud", "cantor:8",
                      "--ell-max", 2, "--samples", 10, "--seed", 7, name="fl.json")
    _, default_rep = run(tmp_path, "tangent", "run", "--cloud", "cantor:8",
                         "--ell-max", 2, "--samples", 10, name="d.json")
    env_blocks = env_rep["result"]["blocks"]
    assert env_blocks == flag_rep["result"]["blocks"]
    assert env_blocks != default_rep["result"]["blocks"]


def test_default_seed_documented():
    assert DEFAULT_SEED == 20260814


def test_console_script_installed():
    assert shutil.which("microsets") is not None
