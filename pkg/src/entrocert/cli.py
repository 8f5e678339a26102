"""Command-line front end: ``entrocert {curves,simulate,attack,optimize,decompose,maxcorr}``."""

from __future__ import annotations

import argparse
import contextlib
import csv
import datetime as _dt
import os
import sys
from dataclasses import dataclass, fields

import numpy as np

from .adversary import (
    AttackStrategy,
    estimate_and_certify,
    estimate_bell_value,
    optimal_fake_fraction,
    simulate_attack,
    simulate_honest,
    true_guess_rate,
)
from .certification import BELL_STATE_VALUE, chsh_randomness, min_entropy, werner_bell_value, werner_randomness
from .linalg import ConvergenceError
from .optimizer import InfeasibleTargetError, OptimizerConfig, optimize_curve
from .protocol import analytic_max_correlation, brute_force_max_correlation, correlation_table
from .states import InvalidStateError, bell_state, werner
from .witness import bell_like_value_direct, bell_like_value_from_correlations, decompose_witness, werner_witness

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3
COMMANDS = ("curves", "simulate", "attack", "optimize", "decompose", "maxcorr")
SEED_ENV = "ENTROCERT_SEED"


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """12 significant digits, locale independent."""
    if x is None:
        return ""
    return format(float(x), ".12g")


@dataclass
class RunConfig:
    command: str
    z_min: float = 0.34
    z_max: float = 1.0
    steps: int = 67
    trials: int = 1_000_000
    seed: int = 0
    restarts: int = 32
    out_path: str = "-"
    format: str = "csv"

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if not -1 / 3 <= self.z_min < self.z_max <= 1:
            raise UsageError(f"need -1/3 <= z_min < z_max <= 1, got [{self.z_min}, {self.z_max}]")
        if self.steps < 2:
            raise UsageError("steps must be >= 2")
        if self.trials < 1:
            raise UsageError("trials must be >= 1")
        if self.restarts < 1:
            raise UsageError("restarts must be >= 1")

    def grid(self) -> np.ndarray:
        return np.linspace(self.z_min, self.z_max, self.steps)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = _Parser(prog="entrocert", description=__doc__)
    parser.add_argument("--config", help="key=value file; command-line flags take precedence")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help=f"RNG seed (default: ${SEED_ENV} or 0)")
    common.add_argument("--out", dest="out_path", default="-", help="output file, '-' for stdout")
    common.add_argument("--format", choices=["csv", "table"], default="csv")
    common.add_argument("--reproducible", action="store_true", help="omit the '# generated:' line")

    grid = _Parser(add_help=False)
    grid.add_argument("--z-min", type=float, default=0.34)
    grid.add_argument("--z-max", type=float, default=1.0)
    grid.add_argument("--steps", type=int, default=67)
    grid.add_argument("--restarts", type=int, default=32)

    trials = _Parser(add_help=False)
    trials.add_argument("--z", type=float, default=0.34, help="Werner parameter of the honest state")
    trials.add_argument("--trials", type=int, default=1_000_000)
    trials.add_argument("--debug-export", action="store_true", help="add the hidden 'faked' column")

    subs = {
        "curves": sub.add_parser("curves", parents=[common, grid], help="analytic, numeric and CHSH curves"),
        "simulate": sub.add_parser("simulate", parents=[common, trials], help="honest protocol rounds"),
        "attack": sub.add_parser("attack", parents=[common, trials], help="stored-output faking attack"),
        "optimize": sub.add_parser("optimize", parents=[common, grid], help="numeric adversary per grid point"),
        "decompose": sub.add_parser("decompose", parents=[common], help="witness expansion coefficients"),
        "maxcorr": sub.add_parser("maxcorr", parents=[common], help="largest single correlation entry"),
    }
    subs["curves"].add_argument("--no-optimize", action="store_true", help="leave h_numeric empty")
    subs["attack"].add_argument("--fake-fraction", type=float, default=None)
    subs["attack"].add_argument("--bernoulli", action="store_true", help="random instead of interleaved fakes")
    subs["decompose"].add_argument("--witness", choices=["werner", "identity"], default="werner")
    subs["maxcorr"].add_argument("--restarts", type=int, default=64)
    subs["maxcorr"].add_argument("--werner-line", action="store_true")
    return parser, subs


def read_config(path: str) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _apply_config(sub: argparse.ArgumentParser, values: dict[str, str]) -> None:
    actions = {a.dest: a for a in sub._actions}
    if "out" in values:
        values["out_path"] = values.pop("out")
    defaults = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None:
            raise UsageError(f"config key {key!r} is not valid for this command")
        if isinstance(action, (argparse._StoreTrueAction,)):
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        else:
            try:
                defaults[key] = action.type(raw) if action.type else raw
            except ValueError:
                raise UsageError(f"config value {key}={raw!r} is not valid") from None
    sub.set_defaults(**defaults)


@contextlib.contextmanager
def _open_out(path: str, stdout):
    if path == "-":
        yield stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    with fh:
        yield fh


def _header(fh, args) -> None:
    if not args.reproducible:
        stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        fh.write(f"# generated: {stamp}\n")


def _run_config(args) -> RunConfig:
    kw = {f.name: getattr(args, f.name) for f in fields(RunConfig) if hasattr(args, f.name)}
    cfg = RunConfig(**kw)
    if args.command in ("curves", "optimize"):
        cfg.validate()
    return cfg


def cmd_curves(args, out) -> int:
    cfg = _run_config(args)
    if cfg.z_min < 0:
        raise UsageError("curves need z_min >= 0 for the CHSH comparison")
    zs = cfg.grid()
    numeric = {}
    if not args.no_optimize:
        results = optimize_curve(zs, OptimizerConfig(restarts=cfg.restarts, seed=cfg.seed))
        numeric = {z: min_entropy(r.p_guess_star) for z, r in results.items()}
    with _open_out(cfg.out_path, out) as fh:
        _header(fh, args)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["z", "h_analytic", "h_numeric", "h_chsh"])
        for z in zs:
            z = float(z)
            h_num = None if args.no_optimize else numeric.get(z, 0.0)
            w.writerow([fmt(z), fmt(werner_randomness(z)), fmt(h_num), fmt(chsh_randomness(z))])
    return EXIT_OK


def _write_records(records, args, out) -> None:
    if args.out_path == "-":
        return
    with _open_out(args.out_path, out) as fh:
        _header(fh, args)
        records.write_csv(fh, debug=args.debug_export)


def _summary(out, pairs) -> None:
    for key, value in pairs:
        out.write(f"{key}={value if isinstance(value, str) else fmt(value)}\n")


def cmd_simulate(args, out) -> int:
    _check_trials(args)
    rho = werner(args.z)
    beta = decompose_witness(werner_witness())
    records = simulate_honest(rho, args.trials, args.seed)
    _write_records(records, args, out)
    report = estimate_and_certify(records, beta, BELL_STATE_VALUE, analytic_max_correlation())
    est = estimate_bell_value(records, beta)
    _summary(out, [
        ("rounds", str(len(records))),
        ("I_hat", est.value),
        ("I_hat_stderr", est.stderr),
        ("I_exact", werner_bell_value(args.z)),
        ("p_guess_bound", report.p_guess_bound),
        ("h_certified_per_round", report.min_entropy_bits),
        ("certified_bits", report.certified_bits),
    ])
    return EXIT_OK


def _check_trials(args) -> None:
    if args.trials < 1:
        raise UsageError("trials must be >= 1")
    if not -1 / 3 <= args.z <= 1:
        raise UsageError(f"z={args.z} outside [-1/3, 1]")


def cmd_attack(args, out) -> int:
    _check_trials(args)
    beta = decompose_witness(werner_witness())
    resource = bell_state()
    i_target = werner_bell_value(args.z)
    if args.fake_fraction is None:
        if i_target >= 0:
            raise UsageError("target state is not entangled; pass --fake-fraction explicitly")
        f = optimal_fake_fraction(i_target, bell_like_value_direct(werner_witness(), resource))
    else:
        f = args.fake_fraction
    if not 0 <= f <= 1:
        raise UsageError(f"fake fraction {f} outside [0, 1]")
    strategy = AttackStrategy(f, resource_state=resource, bernoulli=args.bernoulli)
    records = simulate_attack(strategy, args.trials, args.seed)
    _write_records(records, args, out)
    est = estimate_bell_value(records, beta)
    report = estimate_and_certify(records, beta, BELL_STATE_VALUE, analytic_max_correlation())
    rate, rate_err = true_guess_rate(records, strategy.resource_table)
    _summary(out, [
        ("rounds", str(len(records))),
        ("fake_fraction", f),
        ("I_hat", est.value),
        ("I_hat_stderr", est.stderr),
        ("I_target", i_target),
        ("p_guess_true", rate),
        ("p_guess_true_stderr", rate_err),
        ("p_guess_bound", report.p_guess_bound),
        ("h_certified_per_round", report.min_entropy_bits),
    ])
    return EXIT_OK


def cmd_optimize(args, out) -> int:
    cfg = _run_config(args)
    results = optimize_curve(cfg.grid(), OptimizerConfig(restarts=cfg.restarts, seed=cfg.seed))
    with _open_out(cfg.out_path, out) as fh:
        _header(fh, args)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["z", "i_target", "p_guess", "i_resource", "p_max_resource", "h_numeric", "converged"])
        for z in cfg.grid():
            r = results.get(float(z))
            if r is None:
                w.writerow([fmt(z), fmt(werner_bell_value(z)), "", "", "", fmt(0.0), ""])
                continue
            w.writerow([fmt(z), fmt(r.i_target), fmt(r.p_guess_star), fmt(r.i_rho_star), fmt(r.p_max_star),
                        fmt(min_entropy(r.p_guess_star)), int(r.converged)])
    return EXIT_OK


def cmd_decompose(args, out) -> int:
    w = werner_witness().matrix if args.witness == "werner" else np.eye(4)
    dec = decompose_witness(w)
    mixed = np.eye(4) / 4
    direct = bell_like_value_direct(w, mixed)
    via_beta = bell_like_value_from_correlations(dec, correlation_table(mixed))
    with _open_out(args.out_path, out) as fh:
        _header(fh, args)
        if args.format == "csv":
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["s", "t", "beta"])
            for s in range(4):
                for t in range(4):
                    wr.writerow([s, t, fmt(dec.beta[s, t])])
        else:
            fh.write("beta[s,t]  " + " ".join(f"t={t:<14d}" for t in range(4)) + "\n")
            for s in range(4):
                fh.write(f"s={s}        " + " ".join(f"{fmt(dec.beta[s, t]):<16s}" for t in range(4)) + "\n")
    _summary(out, [
        ("residual", dec.residual),
        ("I(I/4)_direct", direct),
        ("I(I/4)_correlations", via_beta),
    ])
    return EXIT_OK


def cmd_maxcorr(args, out) -> int:
    res = brute_force_max_correlation(args.restarts, args.seed, werner_line=args.werner_line)
    _summary(out, [
        ("analytic", res.analytic),
        ("oracle", res.value),
        ("argmax_abst", ",".join(map(str, res.indices))),
        ("verdict", res.verdict),
    ])
    return EXIT_OK


HANDLERS = {
    "curves": cmd_curves,
    "simulate": cmd_simulate,
    "attack": cmd_attack,
    "optimize": cmd_optimize,
    "decompose": cmd_decompose,
    "maxcorr": cmd_maxcorr,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser, subs = build_parser()
    try:
        return _dispatch(parser, subs, argv, out)
    except SystemExit as exc:  # argparse usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE


def _dispatch(parser, subs, argv, out) -> int:
    try:
        argv = list(sys.argv[1:] if argv is None else argv)
        pre, _ = parser.parse_known_args(argv)
        if pre.config:
            try:
                values = read_config(pre.config)
            except OSError as exc:
                sys.stderr.write(f"entrocert: cannot read config: {exc}\n")
                return EXIT_IO
            _apply_config(subs[pre.command], values)
        args = parser.parse_args(argv)
        if args.seed is None:
            args.seed = _default_seed()
        return HANDLERS[args.command](args, out)
    except (ConvergenceError, InfeasibleTargetError, ArithmeticError) as exc:
        sys.stderr.write(f"entrocert: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except (UsageError, InvalidStateError, ValueError) as exc:
        sys.stderr.write(f"entrocert: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"entrocert: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
