"""canard-lab command line: validate / sdi / relation / ergodic / density /
simulate / compare over a shared config file. Emits CSV files (atomic writes,
byte-reproducible for identical inputs) and structured text reports.

Exit codes: 0 success, 1 validation/config failure, 2 numeric failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile

import numpy as np

from . import measures as M
from . import relation as R
from . import sim as S
from .config import RunConfig, parse_config
from .errors import (
    CanardLabError,
    ConfigError,
    ExpressionSyntaxError,
    InvalidSystemError,
    OrderDetectionError,
)
from .model import LienardSystem, validate as validate_system
from .sdi import ATTRACTING, REPELLING, SdiEvaluator

_VALIDATION_ERRORS = (ConfigError, ExpressionSyntaxError, OrderDetectionError, InvalidSystemError)


# -- output helpers ---------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_text_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp_canard_")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_csv(path: str, header: str, rows) -> None:
    lines = [header]
    lines.extend(",".join(_fmt(cell) for cell in row) for row in rows)
    _write_text_atomic(path, "\n".join(lines) + "\n")


# -- config-driven builders ---------------------------------------------------------


def _build_system(cfg: RunConfig) -> LienardSystem:
    return LienardSystem.from_text(
        cfg.require("system.f"),
        cfg.require("system.p"),
        cfg.require("system.x_min"),
        cfg.require("system.x_max"),
    )


def _cuts(cfg: RunConfig) -> tuple[float, float]:
    return cfg.require("sections.s_c_minus"), cfg.require("sections.s_c_plus")


def _section_positions(cfg: RunConfig, system: LienardSystem) -> tuple[float, float]:
    s_c_minus, s_c_plus = _cuts(cfg)
    if cfg.has("sections.x_sigma_minus") and cfg.has("sections.x_sigma_plus"):
        return cfg.get("sections.x_sigma_minus"), cfg.get("sections.x_sigma_plus")
    x_minus, x_plus = S.default_sections(system, s_c_minus, s_c_plus)
    if cfg.has("sections.x_sigma_minus"):
        x_minus = cfg.get("sections.x_sigma_minus")
    if cfg.has("sections.x_sigma_plus"):
        x_plus = cfg.get("sections.x_sigma_plus")
    return x_minus, x_plus


def _entry_interval(cfg: RunConfig) -> tuple[float, float]:
    s_c_minus, _ = _cuts(cfg)
    lo = cfg.get("sections.l_lo", s_c_minus / 3.0)
    hi = cfg.get("sections.l_hi", 0.95 * s_c_minus)
    return lo, hi


def _entry_measure(cfg: RunConfig) -> M.TransportMeasure:
    lo = cfg.get("entry.lo")
    hi = cfg.get("entry.hi")
    if lo is None or hi is None:
        l_lo, l_hi = _entry_interval(cfg)
        lo = l_lo if lo is None else lo
        hi = l_hi if hi is None else hi
    kind = cfg.get("entry.kind")
    return M.make_entry(
        kind,
        (lo, hi),
        location=cfg.get("entry.location"),
        scale=cfg.get("entry.scale"),
        values=cfg.get("entry.table"),
        grid_points=cfg.get("density.grid"),
    )


def _two_section(cfg: RunConfig, evaluator: SdiEvaluator) -> R.SlowRelation:
    s_c_minus, s_c_plus = _cuts(cfg)
    return R.SlowRelation.two_section(
        evaluator, _entry_interval(cfg), s_c_minus, s_c_plus,
        solve_tol=cfg.get("relation.solve_tol"),
    )


def _sim_config(cfg: RunConfig, system: LienardSystem, eps: float) -> S.SimConfig:
    x_minus, x_plus = _section_positions(cfg, system)
    return S.SimConfig(
        eps=eps,
        x_sigma_minus=x_minus,
        x_sigma_plus=x_plus,
        abs_tol=cfg.get("sim.abs_tol"),
        rel_tol=cfg.get("sim.rel_tol"),
        max_step=cfg.get("sim.max_step"),
        max_time=cfg.get("sim.max_time"),
    )


def _resolve_s0(cfg: RunConfig, evaluator: SdiEvaluator) -> float:
    s0 = cfg.get("relation.s0")
    if s0 is None:
        s0 = 0.95 * min(evaluator.branch_height_max(ATTRACTING),
                        evaluator.branch_height_max(REPELLING))
    return s0


def _parse_eps(text: str) -> float:
    from .config import _parse_number

    return _parse_number(text, 0)


# -- subcommands -----------------------------------------------------------------


def _cmd_validate(args) -> int:
    cfg = parse_config(args.config)
    lines = ["canard-lab validate"]
    try:
        system = _build_system(cfg)
    except (OrderDetectionError, ExpressionSyntaxError) as exc:
        lines.append(f"FAIL construction: {exc}")
        print("\n".join(lines))
        return 1
    report = validate_system(system)
    lines.append(f"f = {system.f}")
    lines.append(f"p = {system.p}")
    lines.append(f"n = {report.n}")
    lines.append(f"m = {report.m}")
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        witness = "" if check.witness is None else f"  (witness x = {check.witness!r})"
        lines.append(f"{status} {check.name}{witness}")
    lines.append(f"all_passed = {str(report.all_passed).lower()}")
    text = "\n".join(lines)
    print(text)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_text_atomic(os.path.join(args.out, "validate.txt"), text + "\n")
    return 0 if report.all_passed else 1


def _cmd_sdi(args) -> int:
    cfg = parse_config(args.config)
    system = _build_system(cfg)
    evaluator = SdiEvaluator(system)
    smax = min(evaluator.branch_height_max(ATTRACTING),
               evaluator.branch_height_max(REPELLING))
    s_lo = args.s_lo if args.s_lo is not None else cfg.get("sdi.s_lo", 0.01 * smax)
    s_hi = args.s_hi if args.s_hi is not None else cfg.get("sdi.s_hi", 0.95 * smax)
    count = args.s_count if args.s_count is not None else cfg.get("sdi.count")
    rows = []
    for s in np.linspace(s_lo, s_hi, count):
        s = float(s)
        rows.append((
            s,
            evaluator.sdi_minus(s),
            evaluator.sdi_plus(s),
            evaluator.sdi_total(s),
            evaluator.sdi_derivative(s, ATTRACTING),
            evaluator.sdi_derivative(s, REPELLING),
        ))
    os.makedirs(args.out, exist_ok=True)
    _write_csv(os.path.join(args.out, "sdi.csv"),
               "s,I_minus,I_plus,I_total,dI_minus,dI_plus", rows)
    print(f"wrote {os.path.join(args.out, 'sdi.csv')} ({count} rows)")
    return 0


def _cmd_relation(args) -> int:
    cfg = parse_config(args.config)
    system = _build_system(cfg)
    evaluator = SdiEvaluator(system)
    rel = _two_section(cfg, evaluator)
    lo, hi = rel.L
    count = cfg.get("relation.out_count")
    rows = []
    for s in np.linspace(lo, hi, count):
        s = float(s)
        rows.append((s, rel.two_section_relation(s), rel.limit_map(s)))
    os.makedirs(args.out, exist_ok=True)
    _write_csv(os.path.join(args.out, "relation.csv"), "s_minus,S0,tilde_S0", rows)
    case_note = f"case = {rel.case}, buffer = {rel.buffer!r}"
    print(f"wrote {os.path.join(args.out, 'relation.csv')} ({count} rows); {case_note}")
    return 0


def _cmd_ergodic(args) -> int:
    cfg = parse_config(args.config)
    system = _build_system(cfg)
    evaluator = SdiEvaluator(system)
    s0 = args.s0 if args.s0 is not None else _resolve_s0(cfg, evaluator)
    interval = (max(1e-6 * s0, 1e-12), s0)
    grid_points = cfg.get("relation.grid")
    scan = R.find_zeros(evaluator, interval, grid_points)
    mc = R.classify_invariant_measures(evaluator, interval, grid_points)
    lines = ["canard-lab ergodic report"]
    lines.append(f"f = {system.f}")
    lines.append(f"p = {system.p}")
    lines.append(f"n = {system.n}")
    lines.append(f"m = {system.m}")
    lines.append(f"interval = ({interval[0]!r}, {interval[1]!r}]")
    lines.append(f"identically_zero = {str(scan.identically_zero).lower()}")
    lines.append(f"kind = {mc.kind}")
    lines.append(f"uniquely_ergodic = {str(mc.uniquely_ergodic).lower()}")
    if mc.kind == "all_invariant":
        lines.append("atoms = (every point: all probability measures are invariant)")
        lines.append("cyclicity = no finite bound (integral identically zero)")
    else:
        lines.append("atoms = " + ", ".join(repr(a) for a in mc.atoms))
        lines.append("multiplicities = " + (", ".join(str(m) for m in mc.multiplicities)
                                            if mc.multiplicities else "(none)"))
        for zero in scan.zeros:
            rep = R.cyclicity_report(evaluator, zero.location, interval, grid_points)
            lines.append(
                f"cyclicity at {zero.location!r}: bound = {rep.bound}, note = {rep.note}"
            )
        rep = R.cyclicity_report(evaluator, s0, interval, grid_points)
        lines.append(
            f"cyclicity at {s0!r}: bound = {rep.bound}, stability = {rep.stability}, "
            f"regime = {rep.regime}"
        )
    text = "\n".join(lines)
    print(text)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_text_atomic(os.path.join(args.out, "ergodic.txt"), text + "\n")
    return 0


def _cmd_density(args) -> int:
    cfg = parse_config(args.config)
    system = _build_system(cfg)
    evaluator = SdiEvaluator(system)
    rel = _two_section(cfg, evaluator)
    entry = _entry_measure(cfg)
    exit_measure = M.pushforward_measure(entry, rel, grid_points=cfg.get("density.grid"))
    os.makedirs(args.out, exist_ok=True)
    _write_csv(os.path.join(args.out, "entry_density.csv"), "s,density",
               [(float(s), float(d)) for s, d in zip(entry.grid, entry.density)])
    atom_loc, atom_mass = (None, None)
    if exit_measure.atoms:
        atom_loc, atom_mass = exit_measure.atoms[0]
    _write_csv(os.path.join(args.out, "exit_density.csv"),
               "s,density,atom_location,atom_mass",
               [(float(s), float(d), atom_loc, atom_mass)
                for s, d in zip(exit_measure.grid, exit_measure.density)])
    n = cfg.get("sim.samples")
    seed = cfg.get("sim.seed")
    entry_samples = M.sample(entry, n, seed)
    mapped = np.array([rel.limit_map(float(v)) for v in entry_samples.values])
    hist = M.histogram(M.EmpiricalSample(mapped, seed, n), bins=args.bins)
    _write_csv(os.path.join(args.out, "histogram.csv"), "bin_left,bin_right,count", hist)
    print(f"wrote entry_density.csv, exit_density.csv, histogram.csv to {args.out} "
          f"(case = {rel.case})")
    return 0


def _run_ensemble(cfg: RunConfig, system: LienardSystem, eps: float,
                  n: int, seed: int):
    sim_cfg = _sim_config(cfg, system, eps)
    s_c_minus, s_c_plus = _cuts(cfg)
    bracket = (cfg.get("sim.lambda_lo"), cfg.get("sim.lambda_hi"))
    control = S.find_control_lambda(system, sim_cfg, s_c_minus, s_c_plus, bracket)
    entry = _entry_measure(cfg)
    run = S.ensemble_transport(system, sim_cfg, control.lambda_c, entry, n, seed)
    return sim_cfg, control, entry, run


def _cmd_simulate(args) -> int:
    cfg = parse_config(args.config)
    system = _build_system(cfg)
    SdiEvaluator(system)  # reject invalid systems before any integration
    eps = args.eps if args.eps is not None else cfg.get("sim.eps")
    n = args.samples if args.samples is not None else cfg.get("sim.samples")
    seed = args.seed if args.seed is not None else cfg.get("sim.seed")
    _, control, _, run = _run_ensemble(cfg, system, eps, n, seed)
    os.makedirs(args.out, exist_ok=True)
    rows = []
    for i in range(n):
        s_exit = run.exit_by_sample[i]
        rows.append((
            i,
            float(run.entry.values[i]),
            None if np.isnan(s_exit) else float(s_exit),
            run.outcomes[i],
        ))
    _write_csv(os.path.join(args.out, "ensemble.csv"),
               "sample_id,s_entry,s_exit,outcome", rows)
    _write_csv(os.path.join(args.out, "control.csv"), "eps,lambda_c,iterations",
               [(eps, control.lambda_c, control.iterations)])
    if run.exits.count > 0:
        hist = M.histogram(run.exits, bins=args.bins)
    else:
        hist = []
    _write_csv(os.path.join(args.out, "histogram.csv"), "bin_left,bin_right,count", hist)
    if run.flagged:
        print(f"warning: {sum(run.failures.values())}/{n} orbits failed "
              f"({run.failures})", file=sys.stderr)
    print(f"wrote ensemble.csv, control.csv, histogram.csv to {args.out} "
          f"(lambda_c = {control.lambda_c!r}, {run.exits.count}/{n} crossings)")
    return 0


def _cmd_compare(args) -> int:
    if len(args.eps) < 2:
        raise ConfigError("compare requires at least two --eps values")
    cfg = parse_config(args.config)
    system = _build_system(cfg)
    evaluator = SdiEvaluator(system)
    rel = _two_section(cfg, evaluator)
    entry = _entry_measure(cfg)
    limit = M.pushforward_measure(entry, rel, grid_points=cfg.get("density.grid"))
    n = args.samples if args.samples is not None else cfg.get("sim.samples")
    seed = args.seed if args.seed is not None else cfg.get("sim.seed")
    lo, hi = rel.L
    probe = np.linspace(lo, hi, 20)
    limit_vals = np.array([rel.limit_map(float(s)) for s in probe])
    rows = []
    for eps in sorted(args.eps, reverse=True):
        sim_cfg, control, _, run = _run_ensemble(cfg, system, eps, n, seed)
        ks = M.ks_distance(run.exits, limit)
        gaps = []
        for s, ref in zip(probe, limit_vals):
            try:
                gaps.append(abs(S.transition_map(system, sim_cfg, control.lambda_c,
                                                 float(s)) - ref))
            except CanardLabError:
                continue
        sup_gap = float(max(gaps)) if gaps else None
        rows.append((eps, control.lambda_c, ks, sup_gap, sum(run.failures.values())))
    os.makedirs(args.out, exist_ok=True)
    _write_csv(os.path.join(args.out, "compare.csv"),
               "eps,lambda_c,ks_distance,sup_transition_gap,failures", rows)
    ks_list = [r[2] for r in rows]
    nonincreasing = all(ks_list[i + 1] <= ks_list[i] + 1e-12 for i in range(len(ks_list) - 1))
    lines = ["canard-lab compare report",
             f"case = {rel.case}",
             f"buffer = {rel.buffer!r}",
             "eps, lambda_c, ks_distance, sup_transition_gap, failures"]
    lines.extend(
        f"{r[0]!r}, {r[1]!r}, {r[2]!r}, {r[3]!r}, {r[4]}" for r in rows
    )
    lines.append(f"ks_nonincreasing_as_eps_decreases = {str(nonincreasing).lower()}")
    text = "\n".join(lines)
    print(text)
    _write_text_atomic(os.path.join(args.out, "compare.txt"), text + "\n")
    return 0


# -- entry point ------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="canard-lab",
        description="Slow divergence integrals, entry-exit relations and density "
                    "transport for planar slow-fast Lienard systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the run config file")
        p.set_defaults(func=func)
        return p

    p = add("validate", _cmd_validate, "check the standing assumptions")
    p.add_argument("--out", default=None, help="optional directory for validate.txt")

    p = add("sdi", _cmd_sdi, "tabulate the slow divergence integrals")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--s-lo", type=float, default=None)
    p.add_argument("--s-hi", type=float, default=None)
    p.add_argument("--s-count", type=int, default=None)

    p = add("relation", _cmd_relation, "tabulate the two-section slow relation map")
    p.add_argument("--out", default=".", help="output directory")

    p = add("ergodic", _cmd_ergodic, "classify invariant measures and cyclicity bounds")
    p.add_argument("--out", default=None, help="optional directory for ergodic.txt")
    p.add_argument("--s0", type=float, default=None, help="single-section upper height")

    p = add("density", _cmd_density, "entry/exit densities and limit histogram")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--bins", type=int, default=10)

    p = add("simulate", _cmd_simulate, "shooting plus entry-measure ensemble at eps > 0")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--eps", type=_parse_eps, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--bins", type=int, default=10)

    p = add("compare", _cmd_compare, "weak-convergence check across an eps sweep")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--eps", type=_parse_eps, action="append", default=[],
                   help="repeatable; at least two values")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _VALIDATION_ERRORS as exc:
        print(f"canard-lab: {exc}", file=sys.stderr)
        return 1
    except CanardLabError as exc:
        print(f"canard-lab: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
