"""Command-line front end: ``bergvar {kernel,variation,triviality,psh-scan,calibrate}``.

Each command reads one JSON config (``--config``), applies flag
overrides, prints a JSON summary and, with ``--out DIR``, writes the
summary plus plot-ready CSV grids atomically.

Exit codes: 0 ok, 1 assertion failure, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .bergman import RadialBump, Weight, bergman_space, default_probes, reproduce_residual
from .errors import BergvarError, ConfigError, DegreeTooHigh, NumericalFailure
from .family import AffineMotion, PolynomialMotion, RadialFamily, TrivialMotion
from .variation import (
    VariationConfig,
    psh_scan,
    radial_calibration,
    triviality_verdict,
    variation_matrices,
)

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
MAX_DEGREE = 80

TOP_LEVEL_KEYS = {
    "family",
    "weight",
    "degree",
    "n_r",
    "n_theta",
    "n_b",
    "step",
    "richardson",
    "t",
    "t_grid",
    "probes",
    "z_grid",
    "tolerances",
    "tol",
    "psh",
    "out",
}
TOLERANCE_KEYS = {"identity", "identity_c", "psd", "obstruction", "psh", "inequality"}
FAMILY_KEYS = {
    "affine": {"a"},
    "identity": set(),
    "trivial": {"form", "c", "terms"},
    "polynomial": {"terms"},
    "radial": {"profile", "kappa", "scale", "radius"},
}
PSH_KEYS = {"subject", "bump"}
BUMP_KEYS = {"radius", "power", "center"}


# ---------------------------------------------------------------------------
# config parsing


def parse_complex(value) -> complex:
    """Accept a real number, ``[re, im]`` or a string such as ``"0.1+0.2j"``."""
    if isinstance(value, bool):
        raise ConfigError(f"not a complex number: {value!r}")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", "").replace("i", "j"))
        except ValueError:
            pass
    raise ConfigError(f"not a complex number: {value!r}")


def _complex_list(values, name) -> list[complex]:
    if not isinstance(values, list):
        raise ConfigError(f"{name} must be a list")
    return [parse_complex(v) for v in values]


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {', '.join(unknown)}")


def family_from_config(spec: dict):
    """Build a deformation family from its declaration."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("family needs a 'kind'")
    kind = spec["kind"]
    if kind not in FAMILY_KEYS:
        raise ConfigError(f"unknown family kind {kind!r}")
    _check_keys(spec, FAMILY_KEYS[kind] | {"kind", "t_max"}, "family")
    t_max = float(spec.get("t_max", 0.5))
    if not 0 < t_max < 1:
        raise ConfigError("t_max must lie in (0, 1)")
    if kind == "affine":
        return AffineMotion(_complex_list(spec.get("a", [0]), "family.a"), t_max=t_max)
    if kind == "identity":
        return TrivialMotion.identity(t_max=t_max)
    if kind == "trivial":
        form = spec.get("form", "polynomial")
        if form == "polynomial":
            terms = [(int(p), int(q), parse_complex(c)) for p, q, c in spec.get("terms", [])]
            return TrivialMotion.polynomial(terms, t_max=t_max)
        if form in ("exp", "mobius"):
            c = parse_complex(spec.get("c", 0))
            return TrivialMotion.exponential(c, t_max) if form == "exp" else TrivialMotion.mobius(c, t_max)
        raise ConfigError(f"unknown trivial-motion form {form!r}")
    if kind == "polynomial":
        try:
            terms = [(int(p), int(q), int(r), parse_complex(c)) for p, q, r, c in spec.get("terms", [])]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"polynomial terms must be [p, q, r, c]: {exc}") from None
        return PolynomialMotion(terms, t_max=t_max)
    profile = spec.get("profile", "gaussian")
    if profile == "gaussian":
        return RadialFamily.gaussian(float(spec.get("kappa", 1.0)), float(spec.get("scale", 1.0)), t_max=t_max)
    if profile == "constant":
        return RadialFamily.constant(float(spec.get("radius", 1.0)), t_max=t_max)
    raise ConfigError(f"unknown radial profile {profile!r}")


def _positive_int(cfg, key, default, low=1, high=None):
    v = cfg.get(key, default)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, int) or v < low or (high is not None and v > high):
        raise ConfigError(f"{key} must be an integer in [{low}, {high if high else 'inf'}]")
    return v


def config_from_dict(cfg: dict) -> VariationConfig:
    """Translate the top-level numeric keys into a :class:`VariationConfig`."""
    tols = cfg.get("tolerances", {})
    _check_keys(tols, TOLERANCE_KEYS, "tolerances")
    for k, v in tols.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0:
            raise ConfigError(f"tolerance {k} must be a positive number")
    step = cfg.get("step", 1e-2)
    if isinstance(step, bool) or not isinstance(step, (int, float)) or not 0 < step < 0.25:
        raise ConfigError("step must lie in (0, 0.25)")
    weight = cfg.get("weight")
    weight = None if weight is None else Weight.from_list(weight)
    degree = _positive_int(cfg, "degree", 20, 0)
    if degree > MAX_DEGREE:
        raise DegreeTooHigh(f"degree {degree} exceeds the supported maximum {MAX_DEGREE}")
    return VariationConfig(
        degree=degree,
        step=float(step),
        n_r=_positive_int(cfg, "n_r", None, 2),
        n_theta=_positive_int(cfg, "n_theta", None, 4),
        n_b=_positive_int(cfg, "n_b", 256, 4),
        weight=weight,
        richardson=bool(cfg.get("richardson", False)),
        identity_tol=float(tols.get("identity", 1e-3)),
        identity_c=float(tols.get("identity_c", 10.0)),
        psd_tol=float(tols.get("psd", 1e-8)),
        obstruction_tol=float(tols.get("obstruction", 1e-6)),
        psh_tol=float(tols.get("psh", 1e-4)),
        inequality_tol=float(tols.get("inequality", 1e-4)),
    )


def load_config(path: str | None, overrides: dict) -> dict:
    """Read the JSON config, reject unknown keys and apply flag overrides."""
    cfg: dict = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in config: {exc}") from None
    _check_keys(cfg, TOP_LEVEL_KEYS, "config")
    cfg = dict(cfg)
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    return cfg


def config_hash(cfg: dict) -> str:
    """SHA-256 of the canonical JSON form of the effective config, output path excluded."""
    body = {k: v for k, v in cfg.items() if k != "out"}
    return hashlib.sha256(json.dumps(body, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def _apply_tol(vc: VariationConfig, tol: float | None, field_name: str) -> VariationConfig:
    return vc if tol is None else replace(vc, **{field_name: float(tol)})


# ---------------------------------------------------------------------------
# output


def _c(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


class Report:
    """Collects the JSON summary and CSV grids of one command."""

    def __init__(self, command: str, cfg: dict, vc: VariationConfig | None):
        self.command = command
        self.summary: dict[str, Any] = {
            "command": command,
            "version": __version__,
            "config_hash": config_hash(cfg),
            "tolerances": vc.tolerances() if vc else {},
        }
        self.grids: dict[str, tuple[list, list]] = {}
        self.passed = True

    def grid(self, name, header, rows):
        self.grids[name] = (header, rows)

    def write(self, out: str | None):
        self.summary["status"] = "PASS" if self.passed else "FAIL"
        text = json.dumps(self.summary, indent=2, sort_keys=True)
        if out:
            d = Path(out)
            for name, (header, rows) in self.grids.items():
                _atomic_write(d / f"{name}.csv", _csv_text(header, rows))
            _atomic_write(d / f"{self.command}.json", text + "\n")
        return text


# ---------------------------------------------------------------------------
# commands


def _require_family(cfg):
    if "family" not in cfg:
        raise ConfigError("config needs a 'family' declaration")
    return family_from_config(cfg["family"])


def _t_grid(cfg):
    if "t_grid" in cfg:
        return _complex_list(cfg["t_grid"], "t_grid")
    return [parse_complex(cfg.get("t", 0))]


class CalibrationFailed(Exception):
    """The radial closed-form suite failed, so no other result is trusted."""


def _run_calibration(vc: VariationConfig, cfg: dict, report: Report) -> VariationConfig:
    cal = radial_calibration(replace(vc, weight=None, richardson=False))
    report.summary["calibration"] = {"passed": cal.passed, "identity_c": cal.identity_c, "checks": cal.checks}
    if not cal.passed:
        raise CalibrationFailed("radial calibration failed; pairing conventions are not trustworthy")
    if "identity_c" not in cfg.get("tolerances", {}):
        vc = replace(vc, identity_c=cal.identity_c)
    report.summary["tolerances"] = vc.tolerances()
    return vc


def cmd_kernel(cfg: dict, tol: float | None) -> Report:
    vc = config_from_dict(cfg)
    family = _require_family(cfg)
    report = Report("kernel", cfg, vc)
    t = parse_complex(cfg.get("t", 0))
    space = bergman_space(family, t, vc.degree, vc.weight, ref=vc.reference())
    probes = _complex_list(cfg["probes"], "probes") if "probes" in cfg else list(default_probes(space))
    P = np.asarray(probes, dtype=complex)
    Kf = space.kernel_grid(P, P)
    herm = float(np.max(np.abs(Kf - Kf.conj().T)))
    psd = float(np.min(np.linalg.eigvalsh(0.5 * (Kf + Kf.conj().T))))
    rr = reproduce_residual(space, np.eye(space.degree + 1)[:, min(5, space.degree)], P)
    diag = space.diagnostics
    herm_tol = 1e-12 * max(1.0, float(np.max(np.abs(Kf))))
    psd_tol = tol if tol is not None else vc.psd_tol
    checks = {"hermitian": herm <= herm_tol, "psd": psd >= -psd_tol}
    report.passed = all(checks.values())
    report.summary.update(
        family=family.describe(),
        t=_c(t),
        degree=vc.degree,
        modes=space.modes,
        k00_form=_c(space.kernel(0j, 0j)),
        k00_classical=_c(space.classical_kernel(0j, 0j)),
        gram={
            "smallest_retained": diag.smallest_retained,
            "largest": diag.largest,
            "truncated": diag.truncated,
            "condition": diag.condition,
        },
        hermitian_defect=herm,
        psd_min_eigenvalue=psd,
        reproduce={"function": rr.function_residual, "kernel": rr.kernel_residual},
        checks={k: "PASS" if v else "FAIL" for k, v in checks.items()},
    )
    rows = []
    for a, z in enumerate(P):
        for b, e in enumerate(P):
            k = Kf[a, b]
            rows.append([z.real, z.imag, e.real, e.imag, k.real, k.imag, 2 * k.real, 2 * k.imag])
    report.grid(
        "kernel",
        ["zeta_re", "zeta_im", "eta_re", "eta_im", "k_form_re", "k_form_im", "k_classical_re", "k_classical_im"],
        rows,
    )
    return report


DEFAULT_VARIATION_PROBES = (0j, 0.2 + 0j, -0.1 + 0.1j, 0.15j)


def cmd_variation(cfg: dict, tol: float | None) -> Report:
    vc = _apply_tol(config_from_dict(cfg), tol, "identity_tol")
    family = _require_family(cfg)
    report = Report("variation", cfg, vc)
    vc = _run_calibration(vc, cfg, report)
    weighted = vc.weight is not None and not vc.weight.is_zero
    if weighted and tol is not None:
        vc = replace(vc, inequality_tol=float(tol))
    probes = _complex_list(cfg["probes"], "probes") if "probes" in cfg else list(DEFAULT_VARIATION_PROBES)
    tol_id = vc.identity_tolerance()
    rows, worst, min_slack, psd_min = [], 0.0, np.inf, np.inf
    for t in _t_grid(cfg):
        vm = variation_matrices(family, t, probes, vc)
        psd_min = min(psd_min, float(np.min(np.linalg.eigvalsh(vm.dbar))), float(np.min(np.linalg.eigvalsh(vm.t_term))))
        if weighted:
            min_slack = min(min_slack, float(np.min(vm.slack)))
        else:
            worst = max(worst, float(np.max(vm.residual)))
        for a in range(len(probes)):
            for b in range(len(probes)):
                r = vm.pair(a, b)
                rows.append(
                    [
                        *_c(t),
                        *_c(r.zeta),
                        *_c(r.eta),
                        *_c(r.lhs),
                        *_c(r.boundary_term),
                        *_c(r.dbar_term),
                        *_c(r.t_term),
                        *_c(r.cphi_term),
                        r.s_norms[0],
                        r.s_norms[1],
                        r.residual,
                        "" if r.slack is None else r.slack,
                    ]
                )
    checks = {"psd": psd_min >= -vc.psd_tol}
    if weighted:
        checks["inequality"] = min_slack >= -vc.inequality_tol
        report.summary["min_slack"] = min_slack
    else:
        checks["identity"] = worst < tol_id
        report.summary["max_residual"] = worst
        report.summary["identity_tolerance"] = tol_id
    report.passed = all(checks.values())
    report.summary.update(
        family=family.describe(),
        weighted=weighted,
        h=vc.step,
        probes=[_c(p) for p in probes],
        psd_min_eigenvalue=psd_min,
        checks={k: "PASS" if v else "FAIL" for k, v in checks.items()},
    )
    header = ["t_re", "t_im", "zeta_re", "zeta_im", "eta_re", "eta_im"]
    for name in ("lhs", "boundary", "dbar", "t_term", "cphi"):
        header += [f"{name}_re", f"{name}_im"]
    header += ["s_norm_eta", "s_norm_zeta", "residual", "slack"]
    report.grid("variation", header, rows)
    return report


def cmd_triviality(cfg: dict, tol: float | None) -> Report:
    vc = _apply_tol(config_from_dict(cfg), tol, "obstruction_tol")
    family = _require_family(cfg)
    if not family.is_motion:
        raise ConfigError("triviality needs a holomorphic-motion family")
    report = Report("triviality", cfg, vc)
    vc = _run_calibration(vc, cfg, report)
    probes = _complex_list(cfg["probes"], "probes") if "probes" in cfg else None
    verdict = triviality_verdict(family, _t_grid(cfg), vc, probes)
    rows = []
    for rep in verdict.reports:
        for eta, o in zip(rep.probes, rep.values):
            rows.append([rep.t.real, rep.t.imag, eta.real, eta.imag, o.real, o.imag, abs(o)])
    crit_ok = bool(np.all(verdict.criterion_ii >= -vc.identity_tolerance()))
    report.passed = crit_ok
    report.summary.update(
        family=family.describe(),
        verdict=verdict.verdict,
        t_grid=[_c(t) for t in verdict.t_grid],
        sup_eta=[r.sup_eta for r in verdict.reports],
        spread=[r.spread for r in verdict.reports],
        criterion_ii=verdict.criterion_ii.tolist(),
        criterion_ii_refined=verdict.criterion_ii_refined.tolist(),
        consistent=verdict.consistent,
        checks={"criterion_ii_nonnegative": "PASS" if crit_ok else "FAIL"},
    )
    report.grid("obstruction", ["t_re", "t_im", "eta_re", "eta_im", "o_re", "o_im", "o_abs"], rows)
    return report


def cmd_psh_scan(cfg: dict, tol: float | None) -> Report:
    vc = _apply_tol(config_from_dict(cfg), tol, "psh_tol")
    family = _require_family(cfg)
    report = Report("psh-scan", cfg, vc)
    vc = _run_calibration(vc, cfg, report)
    psh = cfg.get("psh", {})
    _check_keys(psh, PSH_KEYS, "psh")
    subject = psh.get("subject", "diagonal")
    bump = None
    if "bump" in psh:
        _check_keys(psh["bump"], BUMP_KEYS, "psh.bump")
        b = psh["bump"]
        bump = RadialBump(float(b.get("radius", 0.1)), int(b.get("power", 4)), parse_complex(b.get("center", 0)))
    z_grid = _complex_list(cfg["z_grid"], "z_grid") if "z_grid" in cfg else None
    scan = psh_scan(subject, family, vc, _t_grid(cfg), z_grid, bump)
    report.passed = scan.passed
    rows = []
    if scan.subject == "diagonal":
        header = ["t_re", "t_im", "z_re", "z_im", "min_eigenvalue"]
        for i, t in enumerate(scan.t_grid):
            for j, z in enumerate(scan.z_grid):
                rows.append([t.real, t.imag, z.real, z.imag, scan.values[i, j]])
    else:
        header = ["t_re", "t_im", "ddbar_log_kf"]
        rows = [[t.real, t.imag, v] for t, v in zip(scan.t_grid, scan.values)]
    report.summary.update(
        family=family.describe(),
        subject=scan.subject,
        min_value=scan.min_value,
        checks={"psh": "PASS" if scan.passed else "FAIL"},
    )
    report.grid(f"psh_{scan.subject}", header, rows)
    return report


def cmd_calibrate(cfg: dict, tol: float | None) -> Report:
    vc = config_from_dict(cfg)
    report = Report("calibrate", cfg, vc)
    cal = radial_calibration(replace(vc, weight=None))
    report.passed = cal.passed
    report.summary.update(
        k_ttbar=cal.k_ttbar,
        boundary=cal.boundary,
        dbar=cal.dbar,
        t_term=cal.t_term,
        expected=1 / np.pi,
        k2_max_deviation=float(np.max(np.abs(cal.k2 - 2.0))),
        residuals={repr(h): r for h, r in cal.residuals.items()},
        identity_c=cal.identity_c,
        checks={k: "PASS" if v else "FAIL" for k, v in cal.checks.items()},
    )
    report.grid(
        "calibration",
        ["h", "residual"],
        [[h, r] for h, r in cal.residuals.items()],
    )
    return report


COMMANDS = {
    "kernel": cmd_kernel,
    "variation": cmd_variation,
    "triviality": cmd_triviality,
    "psh-scan": cmd_psh_scan,
    "calibrate": cmd_calibrate,
}


COMMAND_HELP = {
    "kernel": "kernel values, Gram diagnostics and structural checks on one fiber",
    "variation": "second-variation balance (or weighted lower bound) on a probe set",
    "triviality": "triviality verdict of a holomorphic motion",
    "psh-scan": "plurisubharmonicity scan of log K or log K_f",
    "calibrate": "radial closed-form suite pinning the pairing conventions",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bergvar", description="Bergman kernel variation laboratory")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=COMMAND_HELP[name])
        p.add_argument("--config", type=str, default=None, help="JSON config file")
        p.add_argument("--out", type=str, default=None, help="directory for the JSON summary and CSV grids")
        p.add_argument("--degree", type=int, default=None, help="polynomial degree N")
        p.add_argument("--step", type=float, default=None, help="stencil step h")
        p.add_argument("--tol", type=float, default=None, help="override the command's pass tolerance")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, {"out": args.out, "degree": args.degree, "step": args.step})
        tol = args.tol if args.tol is not None else cfg.get("tol")
        if tol is not None and (isinstance(tol, bool) or not isinstance(tol, (int, float)) or tol <= 0):
            raise ConfigError("tol must be a positive number")
        report = COMMANDS[args.command](cfg, tol)
        print(report.write(cfg.get("out")))
    except ConfigError as exc:
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CalibrationFailed as exc:
        print(f"assertion failure: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    except BergvarError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK if report.passed else EXIT_ASSERT


if __name__ == "__main__":
    sys.exit(main())
