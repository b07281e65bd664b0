import json

import pytest

from tests import CONFIGS_PATH

from ._utils import cli, execute

AFFINE_PROBLEM = """\
[domain]
shape = "ball"
center = [0.0, 0.0]
radius = 1.0

[operator]
kind = "KthEigenvalue"
k = 1
dim = 2

[boundary]
kind = "affine"
slope = [1.0, -0.5]
intercept = 0.25

[reference]
kind = "affine"
slope = [1.0, -0.5]
intercept = 0.25

[solver]
h = 0.25
h_ladder = [0.5, 0.25]
tol = 1e-10
boundary_values = "node"
"""


@pytest.fixture
def affine_problem(tmp_path):
    path = tmp_path / "affine.toml"
    path.write_text(AFFINE_PROBLEM)
    return path


def test_cli_help():
    execute(["--help"])


def test_cli_version():
    result = execute(["--version"])
    assert result.stdout.startswith("ellbranch ")


def test_missing_command_is_a_usage_error():
    result = execute([], expected_status=1)
    assert "error:" in result.stderr


def test_dual_membership_of_an_indefinite_matrix():
    result = cli("dual", "--set", "PSD", "--matrix", "[[1,0],[0,-1]]")
    assert "in_set: false" in result.stdout
    assert "in_dual: true" in result.stdout


def test_dual_accepts_json_descriptors():
    result = cli(
        "dual",
        "--set",
        '{"kind": "Pk", "k": 1, "dim": 2}',
        "--matrix",
        "[[1,0],[0,-1]]",
        json_output=True,
    )
    payload = result.json()
    assert payload["in_set"] is True
    assert (payload["set"]["kind"], payload["set"]["k"]) == ("Pk", 1)


@pytest.mark.parametrize(
    ("matrix", "expected_error"),
    (
        pytest.param(
            "[[1,0],[0", "Invalid configuration in --matrix", id="json"
        ),
        pytest.param("[1,2]", "expected a square matrix", id="not-square"),
    ),
)
def test_invalid_matrices_are_reported(matrix, expected_error):
    result = cli(
        "dual", "--set", "PSD", "--matrix", matrix, expected_status=1
    )
    assert expected_error in result.stderr


def test_unknown_set_kinds_are_reported():
    result = cli(
        "dual", "--set", "Sphere", "--matrix", "[[1]]", expected_status=1
    )
    assert "unknown kind 'Sphere'" in result.stderr


def test_cone_certificate_of_the_identity():
    result = cli(
        "cone", "--set", "PSD", "--matrix", "[[1,0],[0,1]]", json_output=True
    )
    payload = result.json()
    assert payload["in_cone"] is True
    assert payload["eps"] == pytest.approx(0.1)


def test_hausdorff_of_a_set_with_itself():
    result = cli(
        "hausdorff",
        "--set",
        "PSD",
        "--set",
        "PSD",
        "--dim",
        "2",
        "--samples",
        "64",
        json_output=True,
    )
    assert result.json()["estimate"] == pytest.approx(0, abs=1e-9)


def test_falsify_classical_exits_with_a_witness():
    result = cli("falsify-classical", "--xn", "1e-4", expected_status=2)
    assert "gap=0.7071067" in result.stdout
    assert "Check 'classical-structure' failed" in result.stderr


def test_falsify_classical_writes_report_and_metadata(tmp_path):
    cli(
        "falsify-classical",
        "--xn",
        "1e-2,1e-4",
        output="falsify.json",
        expected_status=2,
    )
    report = json.loads((tmp_path / "falsify.json").read_text())
    assert report["verdict"] == "fail"
    assert report["witness"]["radius"] == pytest.approx(1e-4)
    assert len(report["details"]["gap_trace"]) == 2

    meta = json.loads((tmp_path / "falsify.meta.json").read_text())
    assert meta["command"] == "falsify-classical"
    assert "elapsed" in meta
    assert "elapsed" not in report


def test_invalid_radii_are_a_usage_error():
    result = cli(
        "falsify-classical", "--xn", "tiny", expected_status=1
    )
    assert "expected numbers" in result.stderr


def test_unknown_tables_are_rejected(tmp_path):
    path = tmp_path / "problem.toml"
    path.write_text(AFFINE_PROBLEM + "\n[plot]\ncolor = 'red'\n")

    result = cli("solve", str(path), expected_status=1)
    assert "unknown tables ['plot']" in result.stderr


def test_missing_files_are_reported(tmp_path):
    result = cli("solve", str(tmp_path / "nope.toml"), expected_status=1)
    assert "nope.toml" in result.stderr


def test_solve_writes_grid_and_report(tmp_path, affine_problem):
    result = cli(
        "solve", str(affine_problem), output="solution.csv", json_output=True
    )
    payload = result.json()
    assert payload["converged"] is True
    assert payload["max_error"] < 1e-6

    grid = (tmp_path / "solution.csv").read_text().splitlines()
    assert grid[0] == "x1,x2,mask,value"
    report = (tmp_path / "solution.report.json").read_text()
    assert json.loads(report) == payload
    assert (tmp_path / "solution.meta.json").exists()


def test_solve_reports_non_convergence(tmp_path, affine_problem):
    affine_problem.write_text(
        AFFINE_PROBLEM.replace("tol = 1e-10", "tol = 1e-10\nmax_sweeps = 1")
    )
    result = cli(
        "solve", str(affine_problem), output="solution.csv", expected_status=2
    )
    assert "did not converge" in result.stderr

    report = json.loads((tmp_path / "solution.report.json").read_text())
    assert report["converged"] is False
    assert len(report["history"]) == 1
    assert not (tmp_path / "solution.csv").exists()


def test_converge_writes_a_table(tmp_path, affine_problem):
    result = cli("converge", str(affine_problem), output="table.csv")
    assert "decreasing:" in result.stdout

    rows = (tmp_path / "table.csv").read_text().splitlines()
    assert rows[0] == "h,max_error,sweeps"
    assert [row.split(",")[0] for row in rows[1:]] == ["0.5", "0.25"]


def test_can_expand_parameters_from_environment(monkeypatch):
    monkeypatch.setenv("ELLBRANCH_ADDOPTS", "--json")
    result = cli("dual", "--set", "PSD", "--matrix", "[[2]]")
    assert result.json()["in_dual"] is True


def test_same_seed_gives_identical_reports():
    args = (
        "verify-ucf",
        str(CONFIGS_PATH / "ucf_ma.toml"),
        "--samples",
        "256",
    )
    first = cli(*args, json_output=True, seed=7)
    second = cli(*args, json_output=True, seed=7)
    assert first.stdout == second.stdout


@pytest.mark.slow
def test_uusc_passes_for_monge_ampere():
    result = cli(
        "verify-uusc", str(CONFIGS_PATH / "uusc_ma.toml"), json_output=True
    )
    assert result.json()["verdict"] in ("pass", "pass-up-to-cap")


@pytest.mark.slow
def test_uusc_fails_for_non_constant_linear_coefficients():
    result = cli(
        "verify-uusc",
        str(CONFIGS_PATH / "uusc_linear.toml"),
        json_output=True,
        expected_status=2,
    )
    witness = result.json()["witness"]
    assert witness is not None
