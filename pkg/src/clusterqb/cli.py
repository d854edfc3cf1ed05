"""Command-line front end: curves, size sweeps + fits, and self-checks.

Subcommands
-----------
curve         E(tau) and P(tau) on a uniform tau grid, CSV per (N, beta, tau).
sweep         maximize power across sizes under a cluster rule; writes the
              sweep CSV and a key-value fit report.
fit           power-law fit of an existing sweep CSV, or of synthetic points
              (--inject-power-law, a testing hook).
oracle-check  compare the mode-space energies against dense diagonalization
              on a small-N grid; exits 2 on tolerance violation.

Configuration comes from flags and optionally a YAML file (--config); flags
win over file values, unknown file keys are rejected.  Exit codes: 0 success,
1 usage/config error, 2 numeric tolerance failure (oracle-check only).
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import datetime
import math
import sys
from dataclasses import dataclass

import numpy as np
import yaml

from .energetics import INFINITE, QuenchEngine, QuenchSpec, stored_energy
from .model import H1, H2, ModelSpec
from .optimizer import DEFAULT_GRID_POINTS, default_window
from .scaling import (
    REFERENCE_FIXED_ALPHA,
    ClusterRule,
    Rounding,
    Rule,
    fit_power_law,
    preset_sizes,
    sweep,
)

DEFAULT_PHI_B = 0.0
DEFAULT_PHI_C = math.pi / 2 - 0.3
DEFAULT_CURVE_POINTS = 512

# oracle-check tolerances and grid
ORACLE_ABS_TOL = 1e-8
ORACLE_REL_TOL = 1e-6
ORACLE_REL_FLOOR = 1e-10
ORACLE_SIZES = (6, 8, 10)
ORACLE_RANGES = (1, 2, 3)
ORACLE_ANGLES = ((0.0, math.pi / 3), (0.4, 1.1), (math.pi / 4, math.pi / 2 - 0.3))
ORACLE_BETAS = (1.0, INFINITE)
ORACLE_TAUS = (0.3, 1.0, 2.5)


class UsageError(Exception):
    """Bad flags/config; maps to exit code 1."""


class ToleranceError(Exception):
    """Numeric check failed; maps to exit code 2."""


# -- serialization helpers ------------------------------------------------------


def _g17(x: float) -> str:
    return "%.17g" % float(x)


def _beta_str(beta: float) -> str:
    return "inf" if beta == INFINITE else _g17(beta)


def _parse_beta(text: str) -> float:
    try:
        beta = float(text)
    except ValueError:
        raise UsageError(f"invalid beta {text!r}") from None
    if math.isnan(beta) or beta < 0:
        raise UsageError(f"beta must be >= 0 or inf, got {text}")
    return beta


def _parse_int_list(value) -> list[int]:
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    return [int(tok) for tok in str(value).split(",") if tok.strip()]


def _now_line() -> str:
    ts = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    return f"# generated: {ts}"


def _open_out(path):
    if path:
        return open(path, "w", newline="")
    return contextlib.nullcontext(sys.stdout)


# -- configuration --------------------------------------------------------------

_CONFIG_KEYS = {
    "model",
    "n_rule",
    "n_fixed",
    "rounding",
    "sizes",
    "phi_b",
    "phi_c",
    "beta",
    "tau_max",
    "grid",
    "out",
    "format",
    "jobs",
    "no_meta",
    "inject_power_law",
    "points_in",
    "corrupt_scale",
}


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise UsageError(f"malformed config {path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must be a mapping of keys to values")
    unknown = sorted(set(data) - _CONFIG_KEYS)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    return data


@dataclass
class Settings:
    command: str
    model: str
    rule: ClusterRule
    sizes: list[int]
    phi_b: float
    phi_c: float
    betas: list[float]
    tau_max: float | None
    grid: int
    out: str | None
    jobs: int
    no_meta: bool
    inject_power_law: str | None
    points_in: str | None
    corrupt_scale: float


def _pick(args, config: dict, key: str, default):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in config:
        return config[key]
    return default


def _resolve(args) -> Settings:
    config = _load_config(getattr(args, "config", None))
    command = args.command

    model = str(_pick(args, config, "model", H1)).lower()
    if model not in (H1, H2):
        raise UsageError(f"--model must be h1 or h2, got {model}")

    rule_name = str(_pick(args, config, "n_rule", "fixed")).lower()
    try:
        rule_kind = Rule(rule_name)
    except ValueError:
        raise UsageError(f"unknown --n-rule {rule_name!r}") from None
    rounding_name = str(_pick(args, config, "rounding", "nearest")).lower()
    try:
        rounding = Rounding(rounding_name)
    except ValueError:
        raise UsageError(f"unknown rounding {rounding_name!r}") from None
    n_fixed = _pick(args, config, "n_fixed", 1 if rule_kind is Rule.FIXED else None)
    try:
        rule = ClusterRule(
            rule_kind,
            n_fixed=int(n_fixed) if n_fixed is not None else None,
            rounding=rounding,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    raw_sizes = _pick(args, config, "sizes", None)
    if raw_sizes is None:
        if command == "oracle-check":
            sizes = list(ORACLE_SIZES)
        elif command == "curve":
            sizes = [100]
        else:
            sizes = preset_sizes(rule_kind)
    else:
        try:
            sizes = _parse_int_list(raw_sizes)
        except ValueError:
            raise UsageError(f"--sizes must be a comma list of integers, got {raw_sizes!r}") from None

    phi_b = float(_pick(args, config, "phi_b", DEFAULT_PHI_B))
    phi_c = float(_pick(args, config, "phi_c", DEFAULT_PHI_C))

    raw_beta = _pick(args, config, "beta", None)
    if raw_beta is None:
        betas = [INFINITE, 1.0] if command == "curve" else [INFINITE]
    elif isinstance(raw_beta, (list, tuple)):
        betas = [_parse_beta(str(b)) for b in raw_beta]
    else:
        betas = [_parse_beta(tok) for tok in str(raw_beta).split(",") if tok.strip()]
    if not betas:
        raise UsageError("--beta must supply at least one value")
    if command != "curve" and len(betas) > 1:
        raise UsageError(f"{command} takes a single beta, got {len(betas)}")

    tau_max = _pick(args, config, "tau_max", None)
    if tau_max is not None:
        tau_max = float(tau_max)
        if not tau_max > 0:
            raise UsageError(f"--tau-max must be > 0, got {tau_max}")

    grid = int(_pick(args, config, "grid", DEFAULT_CURVE_POINTS if command == "curve" else DEFAULT_GRID_POINTS))
    if grid < 2:
        raise UsageError(f"--grid must be >= 2, got {grid}")

    fmt = str(_pick(args, config, "format", "csv")).lower()
    if fmt != "csv":
        raise UsageError(f"--format supports only csv, got {fmt}")

    jobs = int(_pick(args, config, "jobs", 1))
    if jobs < 1:
        raise UsageError(f"--jobs must be >= 1, got {jobs}")

    no_meta = bool(_pick(args, config, "no_meta", False))

    return Settings(
        command=command,
        model=model,
        rule=rule,
        sizes=sizes,
        phi_b=phi_b,
        phi_c=phi_c,
        betas=betas,
        tau_max=tau_max,
        grid=grid,
        out=_pick(args, config, "out", None),
        jobs=jobs,
        no_meta=no_meta,
        inject_power_law=_pick(args, config, "inject_power_law", None),
        points_in=_pick(args, config, "points_in", None),
        corrupt_scale=float(_pick(args, config, "corrupt_scale", 1.0)),
    )


def _param_line(s: Settings, with_beta: float | None = None) -> str:
    rule = s.rule
    bits = [f"model={s.model}", f"rule={rule.rule.value}"]
    if rule.rule is Rule.FIXED:
        bits.append(f"n_fixed={rule.n_fixed}")
    else:
        bits.append(f"rounding={rule.rounding.value}")
    bits += [f"phi_b={_g17(s.phi_b)}", f"phi_c={_g17(s.phi_c)}"]
    if with_beta is not None:
        bits.append(f"beta={_beta_str(with_beta)}")
    else:
        bits.append("beta=" + ",".join(_beta_str(b) for b in s.betas))
    bits.append(f"grid={s.grid}")
    if s.tau_max is not None:
        bits.append(f"tau_max={_g17(s.tau_max)}")
    return "# params: " + " ".join(bits)


# -- curve ----------------------------------------------------------------------

CURVE_HEADER = ["model", "N", "n", "phi_b", "phi_c", "beta", "tau", "energy", "power"]


def cmd_curve(s: Settings) -> int:
    if not s.sizes:
        raise UsageError("curve needs at least one size")
    blocks = []
    for N in s.sizes:
        try:
            n = s.rule.resolve(N)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        battery = ModelSpec(s.model, N, n, s.phi_b)
        charger = ModelSpec(s.model, N, n, s.phi_c)
        hi = s.tau_max if s.tau_max is not None else default_window(charger, s.grid)[1]
        taus = np.linspace(hi / s.grid, hi, s.grid)
        for beta in s.betas:
            curve = QuenchEngine(battery, charger, beta).curve(taus)
            blocks.append((N, n, beta, curve))

    with _open_out(s.out) as fh:
        if not s.no_meta:
            fh.write(_now_line() + "\n")
        fh.write(_param_line(s) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CURVE_HEADER)
        for N, n, beta, curve in blocks:
            for tau, e, p in zip(curve.tau, curve.energy, curve.power):
                writer.writerow(
                    [s.model, N, n, _g17(s.phi_b), _g17(s.phi_c), _beta_str(beta),
                     _g17(tau), _g17(e), _g17(p)]
                )
    return 0


# -- sweep + fit ----------------------------------------------------------------

SWEEP_HEADER = ["model", "N", "n", "tau_max", "p_max", "e_max", "boundary_hit"]


def _fit_report_lines(s: Settings, beta: float, rows, fit, extra=()) -> list[str]:
    lines = [_param_line(s, with_beta=beta)]
    if rows is not None:
        ok = [r for r in rows if r.ok]
        lines.append("sizes = " + ",".join(str(r.N) for r in ok))
        lines.append("n_values = " + ",".join(str(r.n) for r in ok))
        rejected = [r for r in rows if not r.ok]
        for r in rejected:
            lines.append(f"rejected = N={r.N}: {r.error}")
        hits = [r.N for r in ok if r.summary.boundary_hit]
        lines.append("boundary_hits = " + (",".join(map(str, hits)) if hits else "none"))
        if ok:
            diag = float(np.mean([r.summary.p_max * r.n / r.N for r in ok]))
            lines.append(f"mean_p_max_n_over_N = {_g17(diag)}")
    if fit is not None:
        lines.append(f"a = {_g17(fit.a)}")
        lines.append(f"alpha = {_g17(fit.alpha)}")
        if s.rule.rule is Rule.FIXED and s.model in REFERENCE_FIXED_ALPHA:
            lines.append(f"alpha_reference = {_g17(REFERENCE_FIXED_ALPHA[s.model])}")
        lines.append(f"r_squared = {_g17(fit.r_squared)}")
        lines.append("residuals = " + ",".join(_g17(r) for r in fit.residuals))
    lines.extend(extra)
    return lines


def cmd_sweep(s: Settings) -> int:
    if not s.sizes:
        raise UsageError("sweep needs at least one size")
    beta = s.betas[0]
    quench = QuenchSpec(phi_b=s.phi_b, phi_c=s.phi_c, beta=beta)
    window = None
    if s.tau_max is not None:
        window = (s.tau_max / s.grid, s.tau_max)
    try:
        rows = sweep(s.model, quench, s.rule, s.sizes, window=window,
                     grid_points=s.grid, jobs=s.jobs)
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    with _open_out(s.out) as fh:
        if not s.no_meta:
            fh.write(_now_line() + "\n")
        fh.write(_param_line(s, with_beta=beta) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for r in rows:
            if not r.ok:
                print(f"warning: skipped N={r.N}: {r.error}", file=sys.stderr)
                continue
            m = r.summary
            writer.writerow(
                [s.model, r.N, r.n, _g17(m.tau_max), _g17(m.p_max), _g17(m.e_at_tau_max),
                 int(m.boundary_hit)]
            )

    ok = [r for r in rows if r.ok]
    fit = None
    if len(ok) >= 3 and all(r.summary.p_max > 0 for r in ok):
        fit = fit_power_law([(r.N, r.summary.p_max) for r in ok])
    lines = _fit_report_lines(s, beta, rows, fit)
    if fit is None:
        lines.append("fit = skipped (needs >= 3 rows with positive p_max)")
    report_path = (s.out + ".fit.txt") if s.out else None
    with _open_out(report_path) as fh:
        if not s.no_meta:
            fh.write(_now_line() + "\n")
        fh.write("\n".join(lines) + "\n")
    return 0


def cmd_fit(s: Settings) -> int:
    if s.inject_power_law is not None:
        try:
            a_str, alpha_str = str(s.inject_power_law).split(",")
            a, alpha = float(a_str), float(alpha_str)
        except ValueError:
            raise UsageError(
                f"--inject-power-law takes 'a,alpha', got {s.inject_power_law!r}"
            ) from None
        if not s.sizes:
            raise UsageError("--inject-power-law needs --sizes")
        points = [(N, a * N**alpha) for N in s.sizes]
        rows = None
    elif s.points_in:
        points, rows = _read_sweep_points(s.points_in), None
    else:
        raise UsageError("fit needs --in <sweep csv> or --inject-power-law a,alpha")

    try:
        fit = fit_power_law(points)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    lines = _fit_report_lines(s, s.betas[0], rows, fit)
    with _open_out(s.out) as fh:
        if not s.no_meta:
            fh.write(_now_line() + "\n")
        fh.write("\n".join(lines) + "\n")
    return 0


def _read_sweep_points(path: str) -> list[tuple[int, float]]:
    points = []
    try:
        with open(path, newline="") as fh:
            rows = [line for line in fh if not line.startswith("#")]
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    for rec in csv.DictReader(rows):
        points.append((int(rec["N"]), float(rec["p_max"])))
    if not points:
        raise UsageError(f"no sweep rows found in {path}")
    return points


# -- oracle check ----------------------------------------------------------------


def cmd_oracle_check(s: Settings) -> int:
    from .oracle import MAX_SITES, oracle_energy

    if not s.sizes:
        raise UsageError("oracle-check needs a nonempty size grid")
    bad = [N for N in s.sizes if N > MAX_SITES]
    if bad:
        raise UsageError(f"oracle-check sizes must be <= {MAX_SITES}, got {bad}")

    max_abs = 0.0
    max_rel = 0.0
    failures = []
    checked = 0
    for kind in (H1, H2):
        for N in s.sizes:
            for n in ORACLE_RANGES:
                if n >= N:
                    continue
                for phi_b, phi_c in ORACLE_ANGLES:
                    for beta in ORACLE_BETAS:
                        battery = ModelSpec(kind, N, n, phi_b)
                        charger = ModelSpec(kind, N, n, phi_c)
                        for tau in ORACLE_TAUS:
                            e_f = s.corrupt_scale * stored_energy(battery, charger, beta, tau)
                            e_o = oracle_energy(battery, charger, beta, tau)
                            checked += 1
                            dev = abs(e_f - e_o)
                            max_abs = max(max_abs, dev)
                            rel = dev / e_o if e_o > ORACLE_REL_FLOOR else 0.0
                            max_rel = max(max_rel, rel)
                            if dev > ORACLE_ABS_TOL or rel > ORACLE_REL_TOL:
                                failures.append(
                                    f"{kind} N={N} n={n} phi=({_g17(phi_b)},{_g17(phi_c)}) "
                                    f"beta={_beta_str(beta)} tau={_g17(tau)}: "
                                    f"formula={_g17(e_f)} oracle={_g17(e_o)} |diff|={_g17(dev)}"
                                )
    print(f"oracle-check: {checked} cases, max |diff| = {_g17(max_abs)}, "
          f"max rel = {_g17(max_rel)}")
    if failures:
        for line in failures:
            print("FAIL " + line, file=sys.stderr)
        raise ToleranceError(f"{len(failures)} of {checked} cases out of tolerance")
    return 0


# -- entry point ----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; route through UsageError so
    # usage problems land on exit code 1 as documented
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="clusterqb", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="YAML config file; flags override its values")
        p.add_argument("--model", choices=[H1, H2], help="chain variant (default h1)")
        p.add_argument("--n-rule", dest="n_rule",
                       choices=[r.value for r in Rule],
                       help="cluster-range rule n(N) (default fixed)")
        p.add_argument("--n-fixed", dest="n_fixed", type=int,
                       help="cluster range for the fixed rule (default 1)")
        p.add_argument("--rounding", choices=[r.value for r in Rounding],
                       help="power-rule rounding (default nearest)")
        p.add_argument("--sizes", help="comma list of chain lengths N")
        p.add_argument("--phi-b", dest="phi_b", type=float,
                       help="battery angle in radians (default 0)")
        p.add_argument("--phi-c", dest="phi_c", type=float,
                       help="charger angle in radians (default pi/2 - 0.3)")
        p.add_argument("--beta", help="inverse temperature, float or 'inf'; "
                                      "curve accepts a comma list (default inf,1)")
        p.add_argument("--tau-max", dest="tau_max", type=float,
                       help="top of the charging-time window (default 4*pi/omega_min)")
        p.add_argument("--grid", type=int, help="tau grid points")
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", choices=["csv"], help="output format")
        p.add_argument("--jobs", type=int, help="parallel workers for sweep rows")
        p.add_argument("--no-meta", dest="no_meta", action="store_const", const=True,
                       help="omit the timestamp header line")

    p_curve = sub.add_parser("curve", help="stored energy and power vs charging time")
    add_common(p_curve)
    p_sweep = sub.add_parser("sweep", help="max power across sizes + power-law fit")
    add_common(p_sweep)
    p_fit = sub.add_parser("fit", help="power-law fit of sweep output")
    add_common(p_fit)
    p_fit.add_argument("--in", dest="points_in", help="sweep CSV to fit")
    p_fit.add_argument("--inject-power-law", dest="inject_power_law",
                       help="testing hook: fit exact points a*N^alpha over --sizes")
    p_check = sub.add_parser("oracle-check",
                             help="validate formulas against dense diagonalization")
    add_common(p_check)
    p_check.add_argument("--corrupt-scale", dest="corrupt_scale", type=float,
                         help="testing hook: scale formula energies by this factor")
    return parser


_COMMANDS = {
    "curve": cmd_curve,
    "sweep": cmd_sweep,
    "fit": cmd_fit,
    "oracle-check": cmd_oracle_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        settings = _resolve(args)
        return _COMMANDS[settings.command](settings)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ToleranceError as exc:
        print(f"tolerance failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
