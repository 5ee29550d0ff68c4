"""Command-line entry point.

Commands: ``simulate``, ``oracle``, ``ep``, ``ensemble`` and ``figure``.
Options come from flags and, optionally, a JSON file given with
``--config``; flags win over file values. Exit status is 0 on success, 2
on a configuration error and 3 on a numerical failure (partial output is
still written, with a failure marker).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import oracle
from .algebra import bloch_components, density_from_bloch, density_from_state
from .errors import ConfigurationError, InvalidInputError, NumericalFailure
from .experiments import EnsembleSpec, ensemble_dataset, figure_dataset, FIGURES, reframe
from .integrator import IntegratorConfig, propagate
from .output import dump_json, fmt, oracle_csv, report_dict, trajectory_csv, trajectory_jsonl, write_dataset
from .passages import (
    CONSTANT_KAPPA,
    LAB_DIABATIC,
    LINEAR_ADIABATIC,
    QUADRATIC_ADIABATIC,
    ROTATED_DIABATIC,
    PassageSpec,
    ep_times,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

PASSAGE_NAMES = {
    "diabatic": ROTATED_DIABATIC,
    "lab-diabatic": LAB_DIABATIC,
    "linear": LINEAR_ADIABATIC,
    "quadratic": QUADRATIC_ADIABATIC,
    "constant-kappa": CONSTANT_KAPPA,
}
FRAMES = ("native", "lab", "rotated")
FORMATS = ("csv", "jsonl")


@dataclass
class RunConfig:
    passage: str = "diabatic"
    n: float = 0.0
    t0: float = -4.0
    t1: float = 4.0
    dt: float = 1e-3
    method: str = "rk4"
    seed: int = 0
    pure: int = 10
    mixed: int = 10
    frame: str = "native"
    out: str | None = None
    format: str = "csv"
    kappa: float = 1.0
    gamma: tuple = (0.0, 0.0, 0.0)
    amplitudes: tuple | None = None
    bloch: tuple | None = None
    stride: int = 1
    threshold: float = 10.0

    @classmethod
    def keys(cls):
        return [f.name for f in fields(cls)]

    def validate(self):
        if self.passage not in PASSAGE_NAMES:
            raise ConfigurationError(f"unknown passage {self.passage!r}; choose from {sorted(PASSAGE_NAMES)}")
        if self.frame not in FRAMES:
            raise ConfigurationError(f"frame must be one of {FRAMES}")
        if self.format not in FORMATS:
            raise ConfigurationError(f"format must be one of {FORMATS}")
        if self.amplitudes is not None and self.bloch is not None:
            raise ConfigurationError("give the initial state as amplitudes or as a Bloch vector, not both")
        try:
            self.passage_spec()
            self.integrator_config()
            self.ensemble_spec()
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(str(exc)) from None
        return self

    def passage_spec(self) -> PassageSpec:
        return PassageSpec(
            PASSAGE_NAMES[self.passage],
            self.t0,
            self.t1,
            n=self.n,
            kappa0=self.kappa,
            gamma_coeffs=tuple(self.gamma),
        )

    def integrator_config(self) -> IntegratorConfig:
        return IntegratorConfig(
            method=self.method,
            dt=float(self.dt),
            renormalize_threshold=float(self.threshold),
            record_stride=int(self.stride),
        )

    def ensemble_spec(self) -> EnsembleSpec:
        return EnsembleSpec(self.passage_spec(), int(self.pure), int(self.mixed), int(self.seed), self.integrator_config())

    def initial_state(self):
        try:
            if self.bloch is not None:
                return density_from_bloch([float(v) for v in self.bloch])
            amps = self.amplitudes if self.amplitudes is not None else (1.0, 0.0)
            return density_from_state([_complex(a) for a in amps])
        except InvalidInputError as exc:
            raise ConfigurationError(f"bad initial state: {exc}") from None


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        return complex(v.replace(" ", "").replace("i", "j"))
    return complex(v)


def _csv_list(text: str) -> tuple:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _float_list(text: str) -> tuple:
    try:
        return tuple(float(p) for p in _csv_list(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def load_config(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigurationError("config file must hold a JSON object")
    data = {k.replace("-", "_"): v for k, v in data.items()}
    unknown = set(data) - set(RunConfig.keys())
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    return data


def build_config(args) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(load_config(args.config))
    for key in RunConfig.keys():
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None
    return cfg.validate()


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with option values; flags override it")
    p.add_argument("--passage", choices=sorted(PASSAGE_NAMES))
    p.add_argument("--n", type=float, help="passage index (diabatic families)")
    p.add_argument("--t0", type=float, help="window start")
    p.add_argument("--t1", type=float, help="window end")
    p.add_argument("--dt", type=float, help="time step")
    p.add_argument("--method", choices=("euler", "rk4"))
    p.add_argument("--kappa", type=float, help="constant coupling for constant-kappa")
    p.add_argument("--gamma", type=_float_list, help="gamma(t) coefficients c0,c1,c2 for constant-kappa")
    p.add_argument("--stride", type=int, help="record every k-th step")
    p.add_argument("--threshold", type=float, help="log-trace magnitude that triggers renormalization")
    p.add_argument("--frame", choices=FRAMES)
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=FORMATS, help="trajectory file format")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ep-attractor", description="Propagate non-Hermitian two-level passages and measure their attractors.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="propagate one initial state")
    _add_common(p)
    p.add_argument("--amplitudes", type=_csv_list, help="initial amplitudes a,b (complex literals allowed)")
    p.add_argument("--bloch", type=_float_list, help="initial Bloch vector ax,ay,az")

    p = sub.add_parser("oracle", help="tabulate the exact Hermite-function solution")
    _add_common(p)

    p = sub.add_parser("ep", help="report exceptional points of a passage")
    _add_common(p)

    p = sub.add_parser("ensemble", help="propagate a seeded ensemble")
    _add_common(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--pure", type=int)
    p.add_argument("--mixed", type=int)

    p = sub.add_parser("figure", help="regenerate a figure dataset")
    p.add_argument("figure_id", choices=sorted(FIGURES))
    p.add_argument("--frame", choices=FRAMES)
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=FORMATS)
    return parser


def _emit(text: str, out: str | None, name: str):
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    (path / name).write_text(text)


def cmd_simulate(cfg: RunConfig) -> int:
    spec = cfg.passage_spec()
    traj = propagate(spec, cfg.initial_state(), cfg.integrator_config())
    traj = reframe(traj, cfg.frame)
    text = trajectory_csv(traj) if cfg.format == "csv" else trajectory_jsonl(traj)
    _emit(text, cfg.out, f"trajectory.{cfg.format}")
    if cfg.out is not None:
        summary = {
            "format_version": 1,
            "spec": spec.to_dict(),
            "integrator": cfg.integrator_config().to_dict(),
            "frame": traj.frame,
            "ep_times": list(ep_times(spec).times),
            "failed": traj.failed,
            "failure_time": traj.failure_time,
        }
        _emit(dump_json(summary), cfg.out, "summary.json")
    if traj.failed:
        log.error("numerical failure at t=%s", traj.failure_time)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_oracle(cfg: RunConfig) -> int:
    if not float(cfg.n).is_integer() or cfg.n < 0:
        raise ConfigurationError(f"the oracle needs a non-negative integer n, got {cfg.n}")
    n = int(cfg.n)
    spec = cfg.passage_spec()
    steps = max(1, int(round((spec.t_end - spec.t_start) / cfg.dt)))
    t = np.linspace(spec.t_start, spec.t_end, steps + 1)
    rho = oracle.exact_density_matrix(n, t)
    _emit(oracle_csv(t, oracle.x_n(n, t), oracle.dx_n(n, t), bloch_components(rho)), cfg.out, f"oracle_n{n}.csv")
    return EXIT_OK


def format_ep_report(spec: PassageSpec) -> str:
    rep = ep_times(spec)
    desc = spec.family + (f" n={fmt(spec.n)}" if spec.is_diabatic else "")
    lines = [f"passage: {desc} window [{fmt(spec.t_start)}, {fmt(spec.t_end)}]"]
    if not rep.times:
        lines.append("no exceptional points in window")
    for t, v in zip(rep.times, rep.eigenvectors):
        lines.append(f"t_c = {fmt(t)}  coalesced eigenvector = [{_fmt_complex(v[0])}, {_fmt_complex(v[1])}]")
    for a, b, label in rep.regimes:
        lines.append(f"regime [{fmt(a)}, {fmt(b)}]: {label}")
    return "\n".join(lines) + "\n"


def _fmt_complex(z: complex) -> str:
    if z.imag == 0:
        return fmt(z.real)
    if z.real == 0:
        return f"{fmt(z.imag)}j"
    sign = "+" if z.imag >= 0 else "-"
    return f"{fmt(z.real)}{sign}{fmt(abs(z.imag))}j"


def cmd_ep(cfg: RunConfig) -> int:
    _emit(format_ep_report(cfg.passage_spec()), cfg.out, "ep.txt")
    return EXIT_OK


def _emit_dataset(dataset, cfg_out, fmt_name) -> int:
    if cfg_out is None:
        sys.stdout.write(dump_json(report_dict(dataset)))
    else:
        write_dataset(dataset, cfg_out, fmt_name)
    if dataset.report.failures:
        log.error("%d ensemble member(s) failed", dataset.report.failures)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_ensemble(cfg: RunConfig) -> int:
    dataset = ensemble_dataset(cfg.ensemble_spec(), "ensemble", cfg.frame)
    return _emit_dataset(dataset, cfg.out, cfg.format)


def cmd_figure(fig_id: str, frame: str = "native", out=None, fmt_name: str = "csv") -> int:
    dataset = figure_dataset(fig_id, frame)
    return _emit_dataset(dataset, out, fmt_name)


COMMANDS = {"simulate": cmd_simulate, "oracle": cmd_oracle, "ep": cmd_ep, "ensemble": cmd_ensemble}


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "figure":
            return cmd_figure(args.figure_id, args.frame or "native", args.out, args.format or "csv")
        cfg = build_config(args)
        return COMMANDS[args.command](cfg)
    except (ConfigurationError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure at t={exc.t}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
