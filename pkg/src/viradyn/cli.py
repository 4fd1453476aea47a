"""Command-line front end: simulate, analyze, linearize, reproduce.

Trajectories are written as CSV with the fixed header ``t,T,Tstar,V``
(9 significant digits, LF line endings) next to a flat ``key=value``
metrics file; analysis reports are structured text.  Exit codes:
0 success, 2 usage or configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import classify, eigen3, equilibria, jacobian
from .errors import NumericalError
from .integrator import MeshSpec
from .model import (
    EfficacySchedule,
    ModelKind,
    ModelParams,
    SystemState,
    TreatmentWindow,
)
from .scenario import (
    DEFAULT_INITIAL,
    ScenarioConfig,
    ScenarioResult,
    compare_linearization,
    reference_scenarios,
    run,
)

__all__ = ["CliConfig", "UsageError", "parse_args", "emit_trajectory",
           "emit_analysis", "main"]

_PARAM_NAMES = ("s", "d", "beta", "k", "m1", "m2")
_DEFAULT_MESH = (0.0, 400.0, 0.1)
_METRIC_KEYS = (
    "final_T", "final_Tstar", "final_V",
    "peak_viral_load", "peak_viral_load_day",
    "min_viral_load_during_treatment", "min_viral_load_during_treatment_day",
    "suppression_days", "rebound_day",
)


class UsageError(ValueError):
    """Bad flags or configuration; maps to exit code 2."""


@dataclass(frozen=True)
class CliConfig:
    command: str
    config_path: Path | None = None
    model: ModelKind | None = None
    param_overrides: tuple[tuple[str, float], ...] = ()
    t0: float | None = None
    t1: float | None = None
    h: float | None = None
    init: tuple[float, float, float] | None = None
    treat: tuple[tuple[float, float, float, float | None], ...] = ()
    out: Path | None = None

    def to_argv(self) -> list[str]:
        """Flag rendering that parses back to an equal CliConfig.

        Values are joined as ``--flag=value`` so that negative numbers
        (including scientific notation) survive argparse.
        """
        argv = [self.command]
        if self.model is not None:
            argv.append(f"--model={self.model.value}")
        if self.config_path is not None:
            argv.append(f"--config={self.config_path}")
        for name, value in self.param_overrides:
            argv.append(f"--param={name}={value!r}")
        for flag, value in (("--t0", self.t0), ("--t1", self.t1), ("--h", self.h)):
            if value is not None:
                argv.append(f"{flag}={value!r}")
        if self.init is not None:
            argv.append("--init=" + ",".join(repr(x) for x in self.init))
        for start, end, u1, u2 in self.treat:
            spec = f"{start!r}:{end!r}:{u1!r}"
            if u2 is not None:
                spec += f":{u2!r}"
            argv.append(f"--treat={spec}")
        if self.out is not None:
            argv.append(f"--out={self.out}")
        return argv


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # raise instead of exiting so parse_args is pure
        raise UsageError(message)


def _float_arg(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number {text!r}") from None


def _model_arg(text: str) -> ModelKind:
    for kind in ModelKind:
        if text == kind.value:
            return kind
    choices = ", ".join(kind.value for kind in ModelKind)
    raise argparse.ArgumentTypeError(f"unknown model {text!r} (choose from {choices})")


def _param_arg(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    if name not in _PARAM_NAMES:
        raise argparse.ArgumentTypeError(
            f"unknown parameter {name!r} (choose from {', '.join(_PARAM_NAMES)})"
        )
    return name, _float_arg(value)


def _init_arg(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected T,Tstar,V, got {text!r}")
    return tuple(_float_arg(p) for p in parts)  # type: ignore[return-value]


def _treat_arg(text: str) -> tuple[float, float, float, float | None]:
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise argparse.ArgumentTypeError(f"expected start:end:u1[:u2], got {text!r}")
    values = [_float_arg(p) for p in parts]
    start, end, u1 = values[:3]
    u2 = values[3] if len(values) == 4 else None
    if not start < end:
        raise argparse.ArgumentTypeError(f"window start must precede end in {text!r}")
    for u in (u1,) if u2 is None else (u1, u2):
        if not 0.0 <= u <= 1.0:
            raise argparse.ArgumentTypeError(f"efficacy must lie in [0, 1] in {text!r}")
    return start, end, u1, u2


def _build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--model", type=_model_arg, default=None,
                        help="model variant: basic, two-control, or combined")
    common.add_argument("--config", type=Path, default=None,
                        help="JSON scenario file; flags override its values")
    common.add_argument("--param", type=_param_arg, action="append", default=[],
                        metavar="KEY=VAL", help="override a rate constant (repeatable)")
    common.add_argument("--t0", type=_float_arg, default=None, help="start time (day)")
    common.add_argument("--t1", type=_float_arg, default=None, help="end time (day)")
    common.add_argument("--h", type=_float_arg, default=None, help="mesh step (day)")
    common.add_argument("--init", type=_init_arg, default=None, metavar="T,TSTAR,V",
                        help="initial state")
    common.add_argument("--treat", type=_treat_arg, action="append", default=[],
                        metavar="START:END:U1[:U2]",
                        help="treatment window, half-open (repeatable); a single "
                             "efficacy binds to u2 for the combined model")
    common.add_argument("--out", type=Path, default=None, help="output path")

    parser = _Parser(prog="viradyn",
                     description="Within-host viral dynamics simulator and analyzer")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("simulate", parents=[common],
                   help="integrate a scenario and write the trajectory CSV")
    sub.add_parser("analyze", parents=[common],
                   help="report equilibria, Jacobians, eigenvalues, stability")
    sub.add_parser("linearize", parents=[common],
                   help="compare the nonlinear flow with its linearization")
    sub.add_parser("reproduce", parents=[common],
                   help="run the built-in scenario suite into a directory")
    return parser


def parse_args(argv: list[str]) -> CliConfig:
    """Parse flags into a CliConfig, raising UsageError on bad input."""
    ns = _build_parser().parse_args(argv)
    treat = tuple(ns.treat)
    ordered = sorted(treat, key=lambda w: w[0])
    for prev, nxt in zip(ordered, ordered[1:]):
        if nxt[0] < prev[1]:
            raise UsageError(
                f"--treat: overlapping windows [{prev[0]:g}, {prev[1]:g}) and "
                f"[{nxt[0]:g}, {nxt[1]:g})"
            )
    return CliConfig(
        command=ns.command,
        config_path=ns.config,
        model=ns.model,
        param_overrides=tuple(ns.param),
        t0=ns.t0,
        t1=ns.t1,
        h=ns.h,
        init=ns.init,
        treat=treat,
        out=ns.out,
    )


# ---------------------------------------------------------------------------
# configuration resolution: defaults <- JSON file <- flags


def _load_config_file(path: Path) -> dict:
    try:
        raw = json.loads(path.read_text())
    except OSError as err:
        raise UsageError(f"--config: cannot read {path}: {err.strerror}") from None
    except json.JSONDecodeError as err:
        raise UsageError(f"--config: invalid JSON in {path}: {err}") from None
    if not isinstance(raw, dict):
        raise UsageError(f"--config: {path} must hold a JSON object")
    known = {"kind", "params", "mesh", "initial", "schedule", "label"}
    unknown = set(raw) - known
    if unknown:
        raise UsageError(f"--config: unknown keys {sorted(unknown)} in {path}")
    return raw


def _bind_window(window: tuple[float, float, float, float | None],
                 kind: ModelKind) -> TreatmentWindow:
    start, end, u1, u2 = window
    if u2 is None:
        if kind is ModelKind.COMBINED:
            u1, u2 = 0.0, u1
        else:
            u1, u2 = u1, 0.0
    elif kind is ModelKind.COMBINED and u1 != 0.0:
        raise UsageError(
            "--treat: the combined model has a single efficacy; give one value "
            "or set u1 to 0"
        )
    return TreatmentWindow(start, end, u1, u2)


def resolve_scenario(cli: CliConfig) -> ScenarioConfig:
    """Merge defaults, the optional JSON file, and inline flags."""
    kind = ModelKind.BASIC
    params_fields = {name: getattr(ModelParams(), name) for name in _PARAM_NAMES}
    a, b, h = _DEFAULT_MESH
    initial = DEFAULT_INITIAL
    windows: list[TreatmentWindow] = []
    label = "cli"

    if cli.config_path is not None:
        raw = _load_config_file(cli.config_path)
        try:
            if "kind" in raw:
                kind = _model_arg(str(raw["kind"]))
            for name, value in raw.get("params", {}).items():
                if name not in _PARAM_NAMES:
                    raise UsageError(f"--config: unknown parameter {name!r}")
                params_fields[name] = float(value)
            mesh_raw = raw.get("mesh", {})
            a = float(mesh_raw.get("a", a))
            b = float(mesh_raw.get("b", b))
            h = float(mesh_raw.get("h", h))
            if "initial" in raw:
                ini = raw["initial"]
                initial = SystemState(float(ini["T"]), float(ini["T_star"]),
                                      float(ini["V"]))
            for seg in raw.get("schedule", []):
                windows.append(TreatmentWindow(float(seg["t_start"]), float(seg["t_end"]),
                                               float(seg["u1"]), float(seg["u2"])))
            label = str(raw.get("label", label))
        except argparse.ArgumentTypeError as err:
            raise UsageError(f"--config: {err}") from None
        except (KeyError, TypeError, ValueError) as err:
            if isinstance(err, UsageError):
                raise
            raise UsageError(f"--config: malformed value in {cli.config_path}: {err}") from None

    if cli.model is not None:
        kind = cli.model
    for name, value in cli.param_overrides:
        params_fields[name] = value
    if cli.t0 is not None:
        a = cli.t0
    if cli.t1 is not None:
        b = cli.t1
    if cli.h is not None:
        h = cli.h
    if cli.init is not None:
        initial = SystemState(*cli.init)
    if cli.treat:
        windows = [_bind_window(w, kind) for w in cli.treat]

    params = ModelParams(**params_fields)
    mesh = MeshSpec(a, b, h)
    schedule = EfficacySchedule(tuple(windows))
    return ScenarioConfig(kind, params, mesh, initial, schedule, label=label)


# ---------------------------------------------------------------------------
# output writers


def _fmt(x: float, digits: int = 9) -> str:
    return f"{x:.{digits}g}"


def _fmt_complex(z: complex, digits: int = 6) -> str:
    if z.imag == 0.0:
        return _fmt(z.real, digits)
    sign = "+" if z.imag >= 0.0 else "-"
    return f"{_fmt(z.real, digits)}{sign}{_fmt(abs(z.imag), digits)}i"


def _metrics_lines(result: ScenarioResult) -> list[str]:
    m = result.metrics
    values = {
        "final_T": m.final_state.T,
        "final_Tstar": m.final_state.T_star,
        "final_V": m.final_state.V,
        "peak_viral_load": m.peak_viral_load,
        "peak_viral_load_day": m.peak_viral_load_day,
        "min_viral_load_during_treatment": m.min_viral_load_during_treatment,
        "min_viral_load_during_treatment_day": m.min_viral_load_during_treatment_day,
        "suppression_days": m.suppression_days,
        "rebound_day": m.rebound_day,
    }
    return [f"{key}={'none' if values[key] is None else _fmt(values[key])}"
            for key in _METRIC_KEYS]


def metrics_path_for(csv_path: Path) -> Path:
    return csv_path.with_suffix(".metrics.txt")


def emit_trajectory(result: ScenarioResult, path: Path) -> Path:
    """Write the trajectory CSV plus its sibling key=value metrics file."""
    path = Path(path)
    lines = ["t,T,Tstar,V"]
    for t, row in zip(result.trajectory.times, result.trajectory.states):
        lines.append(",".join(_fmt(x) for x in (t, row[0], row[1], row[2])))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    with open(metrics_path_for(path), "w", newline="\n") as fh:
        fh.write("\n".join(_metrics_lines(result)) + "\n")
    return path


def render_analysis(params: ModelParams, kind: ModelKind,
                    efficacies: tuple[float, float]) -> str:
    """Structured text: equilibria, Jacobians, eigen-pairs, stability."""
    u1, u2 = efficacies
    lines = [
        "viradyn analysis report",
        f"model: {kind.value}",
        f"efficacies: u1={_fmt(u1, 6)} u2={_fmt(u2, 6)}",
        "params: " + " ".join(f"{n}={_fmt(getattr(params, n), 6)}" for n in _PARAM_NAMES),
    ]
    for eq in equilibria(params, u1, u2, kind):
        J = jacobian(params, u1, u2, kind, eq.point)
        decomposition = eigen3(J)
        report = classify(decomposition)
        lines += [
            "",
            f"equilibrium: {eq.kind.value}",
            f"point: T={_fmt(eq.point.T, 6)} Tstar={_fmt(eq.point.T_star, 6)} "
            f"V={_fmt(eq.point.V, 6)}",
            "jacobian:",
        ]
        lines += ["  [" + ", ".join(_fmt(x, 6) for x in row) + "]" for row in J]
        lines.append("eigenvalues:")
        lines += [f"  {_fmt_complex(z)}" for z in decomposition.eigenvalues]
        lines.append("eigenvectors:")
        lines += ["  [" + ", ".join(_fmt_complex(x) for x in decomposition.eigenvectors[:, i])
                  + "]" for i in range(3)]
        lines += [
            f"classification: {report.classification.value}",
            f"hyperbolic: {'true' if report.hyperbolic else 'false'}",
            f"spectral_abscissa: {_fmt(report.spectral_abscissa, 6)}",
        ]
    return "\n".join(lines) + "\n"


def emit_analysis(params: ModelParams, kind: ModelKind,
                  efficacies: tuple[float, float], path: Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="\n") as fh:
        fh.write(render_analysis(params, kind, efficacies))
    return path


# ---------------------------------------------------------------------------
# command handlers


def _cmd_simulate(cli: CliConfig) -> int:
    config = resolve_scenario(cli)
    result = run(config)
    out = cli.out or Path("trajectory.csv")
    emit_trajectory(result, out)
    final = result.metrics.final_state
    print(f"wrote {out} and {metrics_path_for(out)}")
    print(f"final state: T={_fmt(final.T)} Tstar={_fmt(final.T_star)} V={_fmt(final.V)}")
    return 0


def _cmd_analyze(cli: CliConfig) -> int:
    config = resolve_scenario(cli)
    if config.schedule.segments:
        seg = config.schedule.segments[0]
        efficacies = (seg.u1, seg.u2)
    else:
        efficacies = (0.0, 0.0)
    text = render_analysis(config.params, config.kind, efficacies)
    out = cli.out or Path("analysis.txt")
    with open(out, "w", newline="\n") as fh:
        fh.write(text)
    sys.stdout.write(text)
    print(f"wrote {out}")
    return 0


def _cmd_linearize(cli: CliConfig) -> int:
    config = resolve_scenario(cli)
    if config.kind is not ModelKind.BASIC:
        raise UsageError("--model: linearize works on the basic model")
    if cli.init is not None:
        from .analysis import EquilibriumKind
        infected = [eq for eq in equilibria(config.params, 0.0, 0.0, config.kind)
                    if eq.kind is EquilibriumKind.INFECTED]
        if not infected:
            raise UsageError("no infected equilibrium exists for these parameters")
        perturbation = np.asarray(cli.init) - infected[0].point.as_array()
    else:
        perturbation = np.array([1.0, 0.1, 5.0])

    comparison = compare_linearization(config, perturbation)
    out = cli.out or Path("linearized.csv")
    lines = ["t,T,Tstar,V"]
    for t, row in zip(comparison.times, comparison.linearized):
        lines.append(",".join(_fmt(x) for x in (t, row[0], row[1], row[2])))
    with open(out, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")

    report_path = Path(out).with_suffix(".report.txt")
    report = [
        f"perturbation={','.join(_fmt(x) for x in comparison.perturbation)}",
        f"max_discrepancy_T={_fmt(comparison.component_max[0])}",
        f"max_discrepancy_Tstar={_fmt(comparison.component_max[1])}",
        f"max_discrepancy_V={_fmt(comparison.component_max[2])}",
        f"max_discrepancy={_fmt(comparison.max_discrepancy)}",
    ]
    with open(report_path, "w", newline="\n") as fh:
        fh.write("\n".join(report) + "\n")
    print(f"wrote {out} and {report_path}")
    print(f"max discrepancy vs nonlinear flow: {_fmt(comparison.max_discrepancy)}")
    return 0


def _cmd_reproduce(cli: CliConfig) -> int:
    config = resolve_scenario(cli)  # only the parameter overrides matter here
    out_dir = cli.out or Path("reproduction")
    out_dir.mkdir(parents=True, exist_ok=True)
    h = cli.h if cli.h is not None else 0.1
    summary = ["label," + ",".join(_METRIC_KEYS)]
    for scenario in reference_scenarios(config.params, h=h):
        result = run(scenario)
        emit_trajectory(result, out_dir / f"{scenario.label}.csv")
        values = [line.split("=", 1)[1] for line in _metrics_lines(result)]
        summary.append(",".join([scenario.label] + values))
        print(f"ran {scenario.label}")
    with open(out_dir / "summary.csv", "w", newline="\n") as fh:
        fh.write("\n".join(summary) + "\n")
    print(f"wrote {out_dir / 'summary.csv'}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "analyze": _cmd_analyze,
    "linearize": _cmd_linearize,
    "reproduce": _cmd_reproduce,
}


def main(argv: list[str] | None = None) -> int:
    try:
        cli = parse_args(sys.argv[1:] if argv is None else argv)
        return _COMMANDS[cli.command](cli)
    except ValueError as err:  # UsageError and validation errors alike
        print(f"error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
