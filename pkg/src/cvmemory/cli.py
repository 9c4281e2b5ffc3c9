"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 configuration error, 3 physics
violation.
"""

from __future__ import annotations

import argparse
import itertools
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from cvmemory import config as cfg
from cvmemory.criteria import (
    dmqm_figure,
    fiber_dmqm_limit,
    fiber_idqm_noise,
    fiber_quantum_lifetime,
    idqm_verdict,
    quantum_lifetime,
)
from cvmemory.errors import ConfigError, InvalidArgument, MemoryErased, PhysicsViolation
from cvmemory.gaussian import apply_channel, cov_standard_error, mc_oracle, vacuum_state
from cvmemory.physics import (
    PhysicalConfig,
    beam_area,
    consistency_report,
    cooperativity,
    derive_g2,
    doppler_rms,
    fiber_loss_rate,
    fiber_transmission,
    fixture_params,
    rescale,
    table2_rows,
)
from cvmemory.physics import read_fixture_csv
from cvmemory.protocol import (
    LossBudget,
    memory_store,
    memory_write,
    pipeline_channel,
)
from cvmemory.report import MEMORY_COLUMNS, Report, render

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_PHYSICS = 0, 1, 2, 3

PARAM_COLUMNS = (
    "setup", "provenance", "g2", "g2_formula", "g2_dev",
    "kappa", "eps_a", "eps_p",
    "kappa_sq_dev", "loss_ratio_dev", "loss_ratio_factor", "identities_ok",
    "cooperativity",
)
LIFETIME_COLUMNS = (
    "scenario", "tau", "lifetime_s", "quantum", "N_over_G_t0", "ref_lifetime_s", "note",
)
BASELINE_COLUMNS = (
    "time_s", "transmission", "loss_db", "rate_db_per_us",
    "idqm_noise", "idqm_pass", "dmqm_equiv_noise", "dmqm_pass", "dmqm_limit_s",
)
WAIST_ION = 60e-6
REF_COOPERATIVITY = 55.0
REF_LIFETIME_S = 9.0
MC_SAMPLES = 100_000


def _rel(a, b):
    return (a - b) / b if b else None


def memory_row(scenario, params, mem, reference=None, note="", gain_tolerance=0.02) -> dict:
    fig = dmqm_figure(mem) if mem.G > 0 else math.inf
    row = {
        "scenario": scenario,
        "kappa": params.kappa, "eps_a": params.eps_a, "eps_p": params.eps_p,
        "G_Q": float(mem.G_Q), "G_P": float(mem.G_P),
        "N_Q": float(mem.N_Q), "N_P": float(mem.N_P),
        "G": mem.G, "N": mem.N, "N_over_G": fig,
        "idqm_pass": bool(idqm_verdict(mem, gain_tolerance).passes),
        "dmqm_pass": bool(fig < 1.0),
        "note": note,
    }
    if reference is not None:
        for key in ("G", "N", "N_over_G"):
            row[f"ref_{key}"] = reference[key]
            row[f"dev_{key}"] = row[key] - reference[key]
    return row


def config_echo(run: cfg.RunConfig) -> dict:
    echo = {"params": run.params_label}
    for name in cfg.PHYSICAL_KEYS:
        echo[name] = getattr(run.physical, name)
    echo.update(
        normalization=run.normalization, tau=run.tau, time=run.time, seed=run.seed,
    )
    return echo


# --- commands ----------------------------------------------------------------


def _param_row(setup, params, phys: PhysicalConfig, g2_formula) -> dict:
    rep = consistency_report(params, phys)
    return {
        "setup": setup,
        "provenance": params.provenance + ("+rescaled" if params.rescaling else ""),
        "g2": params.g2,
        "g2_formula": g2_formula,
        "g2_dev": _rel(g2_formula, params.g2),
        "kappa": params.kappa, "eps_a": params.eps_a, "eps_p": params.eps_p,
        "kappa_sq_dev": rep.kappa_deviation,
        "loss_ratio_dev": rep.ratio_deviation,
        "loss_ratio_factor": rep.ratio_mismatch_factor,
        "identities_ok": bool(rep.kappa_ok and rep.ratio_ok),
        "cooperativity": params.cooperativity,
    }


def table2_param_rows() -> list[dict]:
    rows = []
    for setup, ref in table2_rows().items():
        phys = PhysicalConfig(
            n_photons=float(ref["n_photons"]),
            n_atoms=float(ref["n_atoms"]),
            wavelength=float(ref["lambda_m"]),
            linewidth=float(ref["linewidth_hz"]),
            detuning=float(ref["detuning_over_linewidth"]) * float(ref["linewidth_hz"]),
            beam_area=float(ref["area_m2"]),
        )
        g2f = derive_g2(phys.wavelength, phys.linewidth, phys.beam_area)
        rows.append(_param_row(f"table2:{setup}", fixture_params(setup), phys, g2f))
    return rows


def cooperativity_section() -> dict:
    ion = fixture_params("ion")
    ref = table2_rows()["ion"]
    lam, gamma = float(ref["lambda_m"]), float(ref["linewidth_hz"])
    n_a, t_mirror = float(ref["n_atoms"]), float(ref["mirror_transmission"])
    rows = [{"source": "tabulated g2", "area_m2": float(ref["area_m2"]), "C": ion.cooperativity}]
    for conv in ("full", "effective"):
        area = beam_area(WAIST_ION, conv)
        c = cooperativity(derive_g2(lam, gamma, area), n_a, gamma, t_mirror)
        rows.append({"source": f"g2 from 60 um waist, {conv} area", "area_m2": area, "C": c})
    for r in rows:
        r["ref_C"] = REF_COOPERATIVITY
    return {"columns": ["source", "area_m2", "C", "ref_C"], "rows": rows}


def environment_section(run: cfg.RunConfig) -> dict:
    phys = run.physical
    shift = doppler_rms(phys.temperature, phys.ion_mass, phys.wavelength)
    rows = [
        {"quantity": "doppler_rms_hz", "value": shift},
        {"quantity": "doppler_below_linewidth", "value": bool(shift < phys.linewidth)},
        {"quantity": "doppler_below_detuning", "value": bool(shift < phys.detuning)},
        {"quantity": "collision_time_s", "value": phys.collision_time},
    ]
    return {"columns": ["quantity", "value"], "rows": rows}


def run_params(run: cfg.RunConfig) -> Report:
    params = cfg.resolve_params(run)
    phys = run.physical
    g2f = derive_g2(phys.wavelength, phys.linewidth, phys.beam_area)
    rows = [_param_row(f"config:{run.params_label}", params, phys, g2f)]
    rows += table2_param_rows()
    return Report(
        "params", PARAM_COLUMNS, rows, config_echo(run),
        sections={
            "cooperativity": cooperativity_section(),
            "environment": environment_section(run),
        },
    )


def _oracle_section(params, run: cfg.RunConfig, t: float) -> dict:
    ch = pipeline_channel(params, run.losses, t, run.tau)
    vac = vacuum_state(2)
    exact = apply_channel(vac, ch).cov
    est = mc_oracle(ch, vac, MC_SAMPLES, run.seed)
    z = np.abs(est.cov_hat - exact) / cov_standard_error(exact, MC_SAMPLES)
    return {
        "columns": ["n_samples", "seed", "max_abs_z"],
        "rows": [{"n_samples": MC_SAMPLES, "seed": run.seed, "max_abs_z": float(z.max())}],
    }


def run_memory(run: cfg.RunConfig, t: float | None = None) -> Report:
    t = run.time if t is None else t
    if t < 0:
        raise InvalidArgument("--time must be >= 0")
    params = cfg.resolve_params(run)
    mem = memory_store(memory_write(params, run.losses), t, run.tau)
    row = memory_row(f"{run.params_label} t={t:g}s", params, mem)
    return Report(
        "memory", MEMORY_COLUMNS, [row], {**config_echo(run), "time": t},
        sections={"oracle": _oracle_section(params, run, t)},
    )


def run_lifetime(run: cfg.RunConfig) -> Report:
    params = cfg.resolve_params(run)
    life = quantum_lifetime(params, run.losses, run.tau)
    row = {
        "scenario": run.params_label,
        "tau": run.tau,
        "lifetime_s": life.seconds if life.bounded else "unbounded",
        "quantum": life.quantum,
        "N_over_G_t0": dmqm_figure(memory_write(params, run.losses)),
        "ref_lifetime_s": REF_LIFETIME_S,
        "note": "reference value is an order of magnitude",
    }
    return Report("lifetime", LIFETIME_COLUMNS, [row], config_echo(run))


def _scenario_losses(value_in: str, value_det: str) -> LossBudget:
    if value_in.startswith("window:"):
        per = 0.04
        return LossBudget.from_windows(per, int(value_in.split(":")[1]), int(value_det.split(":")[1]))
    return LossBudget(float(value_in), float(value_det))


def table3_rows(tau: float) -> list[dict]:
    rows = []
    for ref in read_fixture_csv("table3_expected.csv"):
        params = fixture_params(ref["setup"])
        losses = _scenario_losses(ref["loss_in"], ref["loss_det"])
        t = float(ref["time_s"])
        mem = memory_write(params, losses)
        if t > 0:
            mem = memory_store(mem, t, tau)
        reference = {k: float(ref[k]) for k in ("G", "N", "N_over_G")}
        note = "convention-dependent" if ref["convention_dependent"] == "yes" else ""
        rows.append(memory_row(ref["scenario"], params, mem, reference, note))
    return rows


def rescaled_section() -> dict:
    ion = fixture_params("ion")
    p = rescale(ion, 1.0, 3e4 / 8e3)
    rows = [
        memory_row("delta=3e4 gamma, no losses", p, memory_write(p),
                   {"G": 1.0, "N": 0.08, "N_over_G": 0.08}),
        memory_row("delta=3e4 gamma, losses", p, memory_write(p, LossBudget(0.01, 0.05)),
                   {"G": 0.96, "N": 1.6, "N_over_G": 1.6 / 0.96}, "convention-dependent"),
    ]
    return {"columns": list(MEMORY_COLUMNS), "rows": rows}


def run_tables(run: cfg.RunConfig) -> Report:
    rows = table3_rows(run.tau)
    life = quantum_lifetime(fixture_params("ion"), LossBudget(0.01, 0.05), run.tau)
    return Report(
        "tables", MEMORY_COLUMNS, rows, config_echo(run),
        sections={
            "parameters": {"columns": list(PARAM_COLUMNS), "rows": table2_param_rows()},
            "cooperativity": cooperativity_section(),
            "rescaled": rescaled_section(),
            "lifetime": {
                "columns": ["scenario", "lifetime_s", "ref_lifetime_s"],
                "rows": [{
                    "scenario": "ion losses",
                    "lifetime_s": life.seconds if life.bounded else "unbounded",
                    "ref_lifetime_s": REF_LIFETIME_S,
                }],
            },
        },
    )


def _sweep_point(args):
    run, axes, values = args
    point = run.with_overrides(**dict(zip(axes, values)))
    label = ";".join(f"{a}={v!r}" for a, v in zip(axes, values))
    row = {a: v for a, v in zip(axes, values)}
    try:
        params = cfg.resolve_params(point)
        mem = memory_store(memory_write(params, point.losses), point.time, point.tau)
        row.update(memory_row(label, params, mem))
    except (PhysicsViolation, MemoryErased) as exc:
        row.update(scenario=label, note=f"physics-violation: {exc}")
    return row


def run_sweep(run: cfg.RunConfig, workers: int = 1) -> Report:
    if not run.sweeps:
        raise InvalidArgument("sweep needs at least one --vary")
    axes = [ax.path for ax in run.sweeps]
    if len(set(axes)) != len(axes):
        raise InvalidArgument("each sweep path may appear only once")
    count = math.prod(ax.n for ax in run.sweeps)
    if count > cfg.MAX_SWEEP_POINTS:
        raise InvalidArgument(f"sweep has {count} points, limit is {cfg.MAX_SWEEP_POINTS}")
    grid = itertools.product(*(ax.values() for ax in run.sweeps))
    jobs = ((run, axes, values) for values in grid)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_sweep_point, jobs, chunksize=64))
    else:
        rows = [_sweep_point(j) for j in jobs]
    echo = config_echo(run)
    echo["sweep"] = [
        f"{ax.path}={ax.start!r}:{ax.stop!r}:{ax.n}" + (":log" if ax.log else "")
        for ax in run.sweeps
    ]
    return Report("sweep", tuple(axes) + MEMORY_COLUMNS, rows, echo)


def baseline_row(t: float, attenuation: float, index: float) -> dict:
    tr = fiber_transmission(t, attenuation, index)
    rate = fiber_loss_rate(attenuation, index)
    idqm_noise = fiber_idqm_noise(tr) if tr > 0 else 2.0
    equiv = 1.0 / tr - 1.0 if tr > 0 else math.inf
    return {
        "time_s": t,
        "transmission": tr,
        "loss_db": rate * t,
        "rate_db_per_us": rate * 1e-6,
        "idqm_noise": idqm_noise,
        "idqm_pass": bool(idqm_noise < 2.0),
        "dmqm_equiv_noise": equiv,
        "dmqm_pass": bool(equiv < 1.0),
        "dmqm_limit_s": fiber_dmqm_limit(attenuation, index),
    }


def run_baseline(run: cfg.RunConfig, t: float) -> Report:
    if t < 0:
        raise InvalidArgument("--time must be >= 0")
    phys = run.physical
    row = baseline_row(t, phys.fiber_attenuation, phys.fiber_index)
    life = fiber_quantum_lifetime(phys.fiber_attenuation, phys.fiber_index)
    ratio = 1.0 / fiber_transmission(500e-6, phys.fiber_attenuation, phys.fiber_index)
    return Report(
        "baseline", BASELINE_COLUMNS, [row], {**config_echo(run), "time": t},
        sections={
            "limits": {
                "columns": ["quantity", "value"],
                "rows": [
                    {"quantity": "dmqm_limit_s", "value": row["dmqm_limit_s"]},
                    {"quantity": "dmqm_lifetime_bisection_s", "value": life.seconds},
                    {"quantity": "transmission_drop_per_500us", "value": ratio},
                ],
            }
        },
    )


# --- argument handling --------------------------------------------------------


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v <= cfg.U64_MAX:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _nonneg(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid time {text!r}") from None
    if not (math.isfinite(v) and v >= 0):
        raise argparse.ArgumentTypeError("time must be a finite number >= 0")
    return v


def _global_flags(default) -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    p.add_argument("--config", metavar="FILE", default=default,
                   help="configuration file (default: ion cloud)")
    p.add_argument("--format", choices=("table", "csv", "json"), default=default)
    p.add_argument("--seed", type=_seed, default=default, metavar="U64")
    return p


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the command name
    top = _global_flags(None)
    common = _global_flags(argparse.SUPPRESS)

    parser = _Parser(prog="cvmemory", description=__doc__, parents=[top])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("params", parents=[common], help="interface parameters and consistency checks")
    p = sub.add_parser("memory", parents=[common], help="memory figures of merit")
    p.add_argument("--time", type=_nonneg, default=None, metavar="SECONDS")
    sub.add_parser("lifetime", parents=[common], help="storage time of quantum behaviour")
    sub.add_parser("tables", parents=[common], help="model values next to the reference values")
    p = sub.add_parser("sweep", parents=[common], help="CSV sweep over config parameters")
    p.add_argument("--vary", action="append", default=[], metavar="PATH=START:STOP:N[:log]")
    p.add_argument("--workers", type=int, default=1)
    p = sub.add_parser("baseline", parents=[common], help="fiber-loop classical baseline")
    p.add_argument("--time", type=_nonneg, required=True, metavar="SECONDS")
    return parser


def _load(args) -> cfg.RunConfig:
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                data = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc.strerror}") from None
        run = cfg.parse_config(data)
    else:
        run = cfg.parse_config(cfg.default_config_text())
    fmt = args.format or ("csv" if args.command == "sweep" else "table")
    seed = run.seed if args.seed is None else args.seed
    sweeps = tuple(cfg.SweepAxis.parse(v) for v in getattr(args, "vary", []))
    return replace(run, output_format=fmt, seed=seed, sweeps=sweeps)


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        if args.command == "sweep" and args.workers < 1:
            raise UsageError("--workers must be >= 1")
        run_cfg = _load(args)
        if args.command == "params":
            report = run_params(run_cfg)
        elif args.command == "memory":
            report = run_memory(run_cfg, args.time)
        elif args.command == "lifetime":
            report = run_lifetime(run_cfg)
        elif args.command == "tables":
            report = run_tables(run_cfg)
        elif args.command == "sweep":
            report = run_sweep(run_cfg, args.workers)
        else:
            report = run_baseline(run_cfg, args.time)
        stdout.write(render(report, run_cfg.output_format))
        return EXIT_OK
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PhysicsViolation, MemoryErased) as exc:
        print(f"physics violation: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except InvalidArgument as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
