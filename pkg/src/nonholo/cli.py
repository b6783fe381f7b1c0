"""Command-line front end.

Subcommands ``simulate``, ``floquet``, ``scan`` and ``check`` read one
configuration file and write self-describing artifacts: every file begins
with the format version and the fully resolved configuration.

Exit codes: 0 success, 1 a check failed, 2 configuration or usage error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import traceback
from pathlib import Path

import numpy as np

from . import config as config_mod
from . import floquet as fl
from .diagnostics import energy_series, format_float, initial_state_for_seed, kam_scan
from .errors import ConfigError, HalfTurn, NonholoError, OmegaZero
from .integrators import StepperConfig, integrate, reference_solve, reversibility_defect
from .model import embed, project
from .reduction import dae_field, induced_field, reduced_field

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _threads(arg):
    if arg is None:
        env = os.environ.get("NONHOLO_THREADS")
        if env is None:
            return 1
        try:
            arg = int(env)
        except ValueError:
            raise ConfigError(f"NONHOLO_THREADS must be an integer (got {env!r})") from None
    if arg < 0:
        raise ConfigError("--threads must be >= 0")
    return arg or (os.cpu_count() or 1)


def _initial_state(cfg, spec):
    s0 = cfg["experiment"]["initial_state"]
    if s0 is not None:
        return np.array(s0, dtype=float)
    return initial_state_for_seed(spec, cfg["experiment"]["seeds"][0])


class _Outputs:
    def __init__(self, out_dir, prefix, force):
        self.dir = Path(out_dir)
        self.prefix = prefix
        self.force = force

    def path(self, name):
        p = self.dir / f"{self.prefix}{name}"
        if p.exists() and not self.force:
            raise ConfigError(f"output {p} exists (use --force to overwrite)")
        return p

    def write(self, path, text):
        self.dir.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def _json_clean(x):
    if isinstance(x, float):
        return x if math.isfinite(x) else None
    if isinstance(x, dict):
        return {k: _json_clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_clean(v) for v in x]
    return x


def _json_doc(cfg, kind, body):
    doc = {"header": {"format": config_mod.FORMAT_VERSION, "artifact": kind, "config": cfg}}
    doc.update(body)
    return json.dumps(_json_clean(doc), indent=1) + "\n"


def _comment(lines):
    return "".join(f"# {line}\n" for line in lines)


# --- subcommands --------------------------------------------------------------

def cmd_simulate(cfg, outs, threads):
    spec = config_mod.build_spec(cfg)
    step = config_mod.stepper(cfg)
    exp = cfg["experiment"]
    field = induced_field(spec) if spec.perturbed else reduced_field(spec)
    s0 = _initial_state(cfg, spec)
    path = outs.path("trajectory.csv")
    traj = integrate(field, s0, exp["T"], step, exp["sample_dt"])
    H = energy_series(spec, traj.states)
    nu = np.linalg.norm(fl.u_coords(spec, traj.states), axis=1)
    lines = ["t,q1,q2,q3,p,p3,H,norm_u"]
    for t, s, e, n in zip(traj.times, traj.states, H, nu):
        lines.append(",".join(format_float(x) for x in (t, *s, e, n)))
    outs.write(path, _comment(config_mod.header_lines(cfg, "trajectory")) + "\n".join(lines) + "\n")
    print(f"simulate: {len(traj)} samples, max |dH| = {np.max(np.abs(H - H[0])):.3e} -> {path}")
    return EXIT_OK


def cmd_floquet(cfg, outs, threads):
    spec = config_mod.build_spec(cfg).unperturbed()
    grid = cfg["experiment"]["a_grid"]
    if not grid:
        raise ConfigError("experiment.a_grid is empty")
    path = outs.path("floquet.json")
    records = []
    for a in grid:
        orbit = fl.subsystem_orbit(spec, a)
        try:
            fd = fl.monodromy(spec, orbit)
        except OmegaZero:
            fd = fl.frozen_rotation(spec, orbit)
        rec = fd.to_dict()
        rec.update(period_T3=orbit.period_T3, basepoint=list(orbit.basepoint), frozen=fd.frozen,
                   exp_defect=float(np.max(np.abs(fl.so3_exp(fd.Abar) - fd.Phi1))))
        records.append(rec)
        flag = " resonant" if fd.resonant_flag else ""
        print(f"floquet: a={a!r} sigma={fd.sigma:.12g} xi={fd.xi:.12g} orth={fd.orth_defect:.2e}{flag}")
    outs.write(path, _json_doc(cfg, "floquet", {"tori": records}))
    return EXIT_OK


def cmd_scan(cfg, outs, threads):
    spec = config_mod.build_spec(cfg).unperturbed()
    exp = cfg["experiment"]
    csv_path, json_path = outs.path("scan.csv"), outs.path("scan.json")
    res = kam_scan(
        spec, exp["perturbations"], exp["epsilons"], exp["methods"], exp["T"], exp["seeds"],
        h=cfg["integrator"]["h"], sample_dt=exp["sample_dt"], initial_state=exp["initial_state"],
        stepper=config_mod.stepper(cfg), threads=threads,
    )
    outs.write(csv_path, res.to_csv(config_mod.header_lines(cfg, "scan")))
    outs.write(json_path, _json_doc(cfg, "scan", res.to_json()))
    for r in res.sorted_rows():
        print(f"scan: {r.g_label} eps={r.epsilon!r} {r.method} seed={r.seed}: {r.verdict}")
    return EXIT_OK


def _checks(cfg):
    """Yield ``(name, defect, threshold)`` or ``(name, None, reason)`` for skips."""
    spec = config_mod.build_spec(cfg)
    base = spec.unperturbed()
    step = config_mod.stepper(cfg)
    ref = StepperConfig(method="reference", reference_tol=step.reference_tol)
    s0 = _initial_state(cfg, base)
    red = reduced_field(base)

    times = np.linspace(0.0, 50.0, 11)
    a = reference_solve(red, s0, 50.0, ref, t_eval=times).states
    full = reference_solve(dae_field(base), np.array(embed(base, s0)), 50.0, ref, t_eval=times).states
    proj = np.array([project(base, x, tol=1e-6) for x in full])
    yield "chart_equivalence", float(np.max(np.abs(proj - a))), 1e-8

    traj = reference_solve(red, s0, 100.0, ref, t_eval=np.linspace(0.0, 100.0, 201))
    H = energy_series(base, traj.states)
    nu = np.linalg.norm(fl.u_coords(base, traj.states), axis=1)
    yield "energy_conservation", float(np.max(np.abs(H - H[0]))), 1e-9
    yield "norm_u_conservation", float(np.max(np.abs(nu - nu[0]))), 1e-9

    mid = StepperConfig(method="implicit_midpoint", h=0.1, newton_tol=step.newton_tol,
                        newton_max_iters=step.newton_max_iters)
    yield "midpoint_reversibility", reversibility_defect(red, "implicit_midpoint", s0, 0.1, mid), 1e-10

    if spec.perturbed and spec.perturbation.reversible_flag:
        ind = induced_field(spec)
        x = np.array(s0)
        yield "induced_field_reversibility", float(np.max(np.abs(ind(ind.reversal(x)) + ind.reversal(ind(x))))), 1e-9

    q3, p3 = s0[2], s0[4]
    orbit = fl.subsystem_orbit(base, base.subsystem.F(q3, p3), seed=q3)
    if orbit.is_equilibrium:
        yield "floquet", None, "subsystem at equilibrium (omega = 0)"
        return
    fd = fl.monodromy(base, orbit)
    yield "monodromy_orthogonality", max(fd.orth_defect, fd.det_defect), 1e-10
    yield "monodromy_logarithm", float(np.max(np.abs(fl.so3_exp(fd.Abar) - fd.Phi1))), 1e-9
    taus = np.linspace(0.05, 0.95, 10)
    fp = max(
        float(np.max(np.abs(fl.flow_Phi(base, orbit, t + 1.0) - fl.flow_Phi(base, orbit, t, fd=fd) @ fd.Phi1)))
        for t in taus
    )
    yield "floquet_property", fp, 1e-9
    if fd.half_turn:
        yield "reversibility_identities", None, f"half turn at a={fd.a!r} (sigma = pi)"
        yield "psi_conjugacy", None, "half turn"
        return
    rep = fl.check_reversibility(base, orbit, fd)
    yield "reversibility_identities", max(rep.field_defect, rep.phi_defect, rep.abar_defect, rep.psi_defect), 1e-8

    T10 = 10.0 * orbit.period_T3
    tt = np.linspace(0.0, T10, 401)
    tr = reference_solve(red, s0, T10, ref, t_eval=tt)
    th = np.unwrap(orbit.phase(base, tr.states[:, 2], tr.states[:, 4]), period=1.0)
    v = fl.psi_transform(base, orbit, fd, fl.u_coords(base, tr.states), th)
    pred = fl.so3_exp(fd.Abar, th - th[0]) @ v[0]
    yield "psi_conjugacy", float(np.max(np.abs(v - pred))), 1e-7


def cmd_check(cfg, outs, threads):
    lines, failed, skipped = [], 0, 0
    for name, defect, thr in _checks(cfg):
        if defect is None:
            skipped += 1
            lines.append(f"SKIP {name}: {thr}")
        else:
            ok = defect <= thr
            failed += not ok
            lines.append(f"{'PASS' if ok else 'FAIL'} {name}: defect={defect:.3e} threshold={thr:.0e}")
    lines.append(f"summary: {len(lines) - skipped - failed} passed, {failed} failed, {skipped} skipped")
    print("\n".join(lines))
    if skipped:
        print("warning: some checks were skipped", file=sys.stderr)
    if outs is not None:
        path = outs.path("check.txt")
        outs.write(path, _comment(config_mod.header_lines(cfg, "check")) + "\n".join(lines) + "\n")
    return EXIT_CHECK if failed else EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "floquet": cmd_floquet, "scan": cmd_scan, "check": cmd_check}


def build_parser():
    parser = argparse.ArgumentParser(prog="nonholo", description="Nonholonomically coupled oscillators")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML or JSON experiment configuration (defaults if omitted)")
        p.add_argument("--out", help="output directory (default: current directory; check writes nothing)")
        p.add_argument("--force", action="store_true", help="overwrite existing outputs")
        p.add_argument("--seed", type=int, help="override experiment.seeds with a single seed")
        p.add_argument("--threads", type=int, help="worker threads, 0 = all cores (env NONHOLO_THREADS)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_mod.load(args.config) if args.config else config_mod.resolve({})
        if args.seed is not None:
            cfg["experiment"]["seeds"] = [args.seed]
            cfg = config_mod.resolve(cfg)
        threads = _threads(args.threads)
        out_dir = args.out if args.out is not None else ("." if args.command != "check" else None)
        outs = _Outputs(out_dir, cfg["output"]["prefix"], args.force) if out_dir is not None else None
        return COMMANDS[args.command](cfg, outs, threads)
    except ConfigError as e:
        print(f"nonholo {args.command}: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except HalfTurn as e:
        print(f"nonholo {args.command}: half turn: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except NonholoError as e:
        print(f"nonholo {args.command}: numerical failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as e:
        traceback.print_exc()
        print(f"nonholo {args.command}: numerical failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
