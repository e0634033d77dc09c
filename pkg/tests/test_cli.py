import csv
import json

import numpy as np
import pytest

from bergvar import cli
from bergvar.errors import ConfigError


def run(tmp_path, command, config, *flags):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config), encoding="utf-8")
    out = tmp_path / "out"
    code = cli.main([command, "--config", str(path), "--out", str(out), *flags])
    summary = None
    name = tmp_path / "out" / f"{command}.json"
    if name.exists():
        summary = json.loads(name.read_text(encoding="utf-8"))
    return code, summary, out


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize(
    "value,expected",
    [(0.5, 0.5), ([0.1, -0.2], 0.1 - 0.2j), ("0.1+0.2j", 0.1 + 0.2j), ("0.3-0.1i", 0.3 - 0.1j), (2, 2)],
)
def test_parse_complex(value, expected):
    assert cli.parse_complex(value) == expected


@pytest.mark.parametrize("value", [True, "abc", [1, 2, 3], None])
def test_parse_complex_rejects(value):
    with pytest.raises(ConfigError):
        cli.parse_complex(value)


@pytest.mark.parametrize(
    "spec,kind",
    [
        ({"kind": "affine", "a": [0, 0.3]}, "affine"),
        ({"kind": "identity"}, "trivial"),
        ({"kind": "trivial", "form": "mobius", "c": 0.3}, "trivial"),
        ({"kind": "trivial", "form": "exp", "c": [-1, 0]}, "trivial"),
        ({"kind": "trivial", "terms": [[1, 2, 0.1]]}, "trivial"),
        ({"kind": "polynomial", "terms": [[1, 0, 1, 0.25], [1, 2, 0, "0.1"]]}, "polynomial"),
        ({"kind": "radial"}, "radial"),
        ({"kind": "radial", "profile": "constant", "radius": 0.8}, "radial"),
    ],
)
def test_family_declarations(spec, kind):
    assert cli.family_from_config(spec).kind == kind


@pytest.mark.parametrize(
    "spec",
    [{"kind": "spiral"}, {"kind": "affine", "b": [0]}, {"a": [0]}, {"kind": "radial", "profile": "cubic"}],
)
def test_family_declarations_rejected(spec):
    with pytest.raises(ConfigError):
        cli.family_from_config(spec)


def test_kernel_unit_disc(tmp_path):
    code, summary, out = run(tmp_path, "kernel", {"family": {"kind": "identity"}, "degree": 40})
    assert code == 0
    assert summary["k00_form"][0] == pytest.approx(1 / (2 * np.pi), abs=1e-8)
    assert summary["k00_classical"][0] == pytest.approx(1 / np.pi, abs=1e-8)
    assert len(summary["config_hash"]) == 64
    assert summary["tolerances"]["psd"] == 1e-8
    rows = read_csv(out / "kernel.csv")
    assert len(rows) == 64
    assert set(rows[0]) == {
        "zeta_re", "zeta_im", "eta_re", "eta_im", "k_form_re", "k_form_im", "k_classical_re", "k_classical_im"
    }


def test_kernel_ellipse_hermitian(tmp_path):
    code, summary, _ = run(tmp_path, "kernel", {"family": {"kind": "affine", "a": [0, 0.6]}, "t": 0.5})
    assert code == 0
    assert summary["checks"]["hermitian"] == "PASS"


def test_kernel_degree_too_high(tmp_path, capsys):
    code, _, _ = run(tmp_path, "kernel", {"family": {"kind": "identity"}, "n_r": 8}, "--degree", "30")
    assert code == 2
    assert "DegreeTooHigh" in capsys.readouterr().err


@pytest.mark.parametrize(
    "config",
    [
        {"family": {"kind": "identity"}, "bogus": 1},
        {"family": {"kind": "identity"}, "tolerances": {"identityy": 1e-3}},
        {"family": {"kind": "identity"}, "step": -1},
        {"degree": 10},
        {"family": {"kind": "identity", "t_max": 2}},
    ],
)
def test_config_errors_exit_2(tmp_path, config):
    assert run(tmp_path, "kernel", config)[0] == 2


def test_invalid_json_exit_2(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json", encoding="utf-8")
    assert cli.main(["kernel", "--config", str(path)]) == 2
    assert cli.main(["kernel", "--config", str(tmp_path / "missing.json")]) == 2


def test_probe_outside_stencil_exit_2(tmp_path):
    config = {"family": {"kind": "affine", "a": [0, 0.3]}, "probes": [0.99], "t": 0.1}
    assert run(tmp_path, "variation", config)[0] == 2


def test_numerical_failure_exit_3(tmp_path, capsys):
    # |a(t)| reaches 1.5 on the parameter disc, so the fiber map folds
    assert run(tmp_path, "kernel", {"family": {"kind": "affine", "a": [0, 3.0]}})[0] == 3
    assert "NonInjectiveFiber" in capsys.readouterr().err


def test_variation_radial(tmp_path):
    code, summary, out = run(tmp_path, "variation", {"family": {"kind": "radial"}, "probes": [0]})
    assert code == 0
    assert summary["max_residual"] < 1e-3
    assert summary["calibration"]["passed"]
    row = read_csv(out / "variation.csv")[0]
    assert float(row["lhs_re"]) == pytest.approx(1 / np.pi, abs=1e-3)
    assert float(row["boundary_re"]) == pytest.approx(1 / np.pi, abs=1e-3)


def test_variation_identity_all_zero(tmp_path):
    code, _, out = run(tmp_path, "variation", {"family": {"kind": "identity"}, "t_grid": [0, 0.1]})
    assert code == 0
    for row in read_csv(out / "variation.csv"):
        for key in ("lhs_re", "boundary_re", "dbar_re", "t_term_re"):
            assert float(row[key]) == 0


def test_variation_affine_t_term(tmp_path):
    code, _, out = run(tmp_path, "variation", {"family": {"kind": "affine", "a": [0, 0.3]}, "t": 0})
    assert code == 0
    rows = [r for r in read_csv(out / "variation.csv") if r["zeta_re"] == r["eta_re"] and r["zeta_im"] == r["eta_im"]]
    for r in rows:
        assert float(r["t_term_re"]) == pytest.approx(0.09 / (2 * np.pi), rel=1e-6)


def test_variation_weighted_slack(tmp_path):
    config = {"family": {"kind": "affine", "a": [0, 0.3]}, "weight": [[0, 0, 1, 1, 1.0]], "t_grid": [0, 0.1]}
    code, summary, out = run(tmp_path, "variation", config)
    assert code == 0 and summary["weighted"]
    assert summary["min_slack"] >= -1e-4
    assert summary["checks"]["inequality"] == "PASS"


def test_variation_assertion_failure(tmp_path):
    config = {"family": {"kind": "affine", "a": [0, 0.3]}, "t": 0.1, "tolerances": {"identity_c": 1e-9}}
    code, summary, _ = run(tmp_path, "variation", config, "--tol", "1e-9")
    assert code == 1
    assert summary["status"] == "FAIL"


@pytest.mark.parametrize(
    "family,verdict",
    [
        ({"kind": "affine", "a": [0]}, "TRIVIAL"),
        ({"kind": "affine", "a": [0, 0, 1]}, "NONTRIVIAL"),
        ({"kind": "trivial", "form": "mobius", "c": 0.3}, "TRIVIAL"),
    ],
)
def test_triviality(tmp_path, family, verdict):
    code, summary, out = run(tmp_path, "triviality", {"family": family, "t_grid": [0.2]})
    assert code == 0
    assert summary["verdict"] == verdict
    if verdict == "NONTRIVIAL":
        assert summary["sup_eta"][0] == pytest.approx(0.4006, abs=1e-4)
        rows = read_csv(out / "obstruction.csv")
        assert all(float(r["o_abs"]) == pytest.approx(0.4 / (1 - 0.04**2), rel=1e-8) for r in rows)


def test_triviality_rejects_radial(tmp_path):
    assert run(tmp_path, "triviality", {"family": {"kind": "radial"}})[0] == 2


def test_psh_scan_commands(tmp_path):
    code, summary, out = run(tmp_path, "psh-scan", {"family": {"kind": "radial"}, "t_grid": [0, 0.1], "z_grid": [0, [0, 0.2]]})
    assert code == 0 and summary["min_value"] > 1.9
    assert len(read_csv(out / "psh_diagonal.csv")) == 4
    code, summary, out = run(
        tmp_path, "psh-scan", {"family": {"kind": "radial"}, "t": 0, "psh": {"subject": "kf", "bump": {"radius": 0.1}}}
    )
    assert code == 0
    assert summary["min_value"] == pytest.approx(2.0, abs=1e-2)
    code, _, _ = run(tmp_path, "psh-scan", {"family": {"kind": "radial"}, "t_grid": [0.499]})
    assert code == 2


def test_calibrate(tmp_path):
    code, summary, out = run(tmp_path, "calibrate", {})
    assert code == 0
    assert summary["k_ttbar"] == pytest.approx(1 / np.pi, abs=1e-3)
    assert summary["boundary"] == pytest.approx(1 / np.pi, abs=1e-3)
    assert summary["k2_max_deviation"] < 1e-6
    assert len(read_csv(out / "calibration.csv")) == 3


def test_reports_deterministic(tmp_path):
    config = {"family": {"kind": "polynomial", "terms": [[1, 0, 1, 0.25], [1, 2, 0, 0.1]]}, "t": 0.1}
    run(tmp_path, "variation", config)
    first = (tmp_path / "out" / "variation.csv").read_bytes(), (tmp_path / "out" / "variation.json").read_bytes()
    run(tmp_path, "variation", config)
    second = (tmp_path / "out" / "variation.csv").read_bytes(), (tmp_path / "out" / "variation.json").read_bytes()
    assert first == second
    assert not list((tmp_path / "out").glob("*.tmp"))


def test_flags_override_and_hash(tmp_path):
    _, a, _ = run(tmp_path, "kernel", {"family": {"kind": "identity"}, "degree": 10})
    _, b, _ = run(tmp_path, "kernel", {"family": {"kind": "identity"}, "degree": 20}, "--degree", "10")
    _, c, _ = run(tmp_path, "kernel", {"family": {"kind": "identity"}, "degree": 12})
    assert a["config_hash"] == b["config_hash"] != c["config_hash"]
    assert b["degree"] == 10


def test_stdout_summary(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"family": {"kind": "identity"}, "degree": 5}), encoding="utf-8")
    assert cli.main(["kernel", "--config", str(path)]) == 0
    assert json.loads(capsys.readouterr().out)["status"] == "PASS"
