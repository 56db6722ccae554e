"""Command-line front end for the reference experiments.

Subcommands: ``simulate``, ``loadstep``, ``sweep``, ``droop``, ``boundary``.
Exit codes: 0 success, 2 configuration error, 3 diverged run, 4 internal error.
"""

from __future__ import annotations

import argparse
import contextlib
import math
import random
import sys
import traceback
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import svg
from .analysis import NoBoundaryError, SweepSpec, boundary, sweep
from .config import Config, ConfigError, load_config
from .droop import DroopParams, droop_fixed_point
from .engine import LoadChange, Scenario, SetpointChange, Trace, run

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_INTERNAL = 0, 2, 3, 4
GROWTH_FACTOR = 10.0


@contextlib.contextmanager
def forbid_rng():
    """Make any use of the stdlib or numpy global RNGs raise."""

    def boom(*args, **kwargs):
        raise RuntimeError("random number generator used in a seed-free run")

    saved = []
    targets = [(random, n) for n in ("random", "uniform", "randint", "gauss", "choice", "shuffle", "seed")]
    targets += [(np.random, n) for n in ("default_rng", "random", "rand", "randn", "uniform", "normal",
                                          "randint", "choice", "seed", "shuffle", "permutation")]
    for mod, name in targets:
        saved.append((mod, name, getattr(mod, name)))
        setattr(mod, name, boom)
    try:
        yield
    finally:
        for mod, name, fn in saved:
            setattr(mod, name, fn)


def _base_scenario(cfg: Config, **overrides) -> Scenario:
    kw = dict(
        params=cfg.params(),
        spec=cfg.reference(),
        t_end=cfg.t_end_s,
        alpha=cfg.alpha,
        initial_state=cfg.initial_state(),
        control_period=cfg.control_period_s,
        record_decimation=cfg.decimation,
        integrator=cfg.integrator,
    )
    kw.update(overrides)
    return Scenario(**kw)


def _write_metrics(path: Path, items: dict):
    with path.open("w") as fh:
        for k, v in items.items():
            fh.write(f"{k} = {v!r}\n" if isinstance(v, float) else f"{k} = {v}\n")
    for k, v in items.items():
        print(f"{k:28s} {v}")


def _metric_items(m) -> dict:
    return {
        "rms_error_final_period_v": m.rms_error_final_period,
        "max_abs_error_v": m.max_abs_error,
        "settling_time_s": m.settling_time,
        "diverged": m.diverged,
    }


def _trace_plots(trace: Trace, out: Path, window: float = 0.5):
    t = trace["t"]
    first = t <= t[0] + window
    svg.line_plot(out / "voltage.svg",
                  [("v_c", t[first], trace["v_c"][first]), ("v_ref", t[first], trace["v_ref"][first])],
                  title="Capacitor voltage and reference", xlabel="t [s]", ylabel="V")
    fine_t = trace.t_start + np.arange(len(trace.err_fine)) * trace.control_period
    svg.line_plot(out / "error.svg", [("|v_c - v_ref|", fine_t, np.abs(trace.err_fine))],
                  title="Absolute voltage tracking error", xlabel="t [s]", ylabel="V")


def _window_rms(trace: Trace, t_end: float, period: float) -> float:
    h = trace.control_period
    k1 = int(round((t_end - trace.t_start) / h))
    k0 = max(0, k1 - int(round(period / h)))
    seg = trace.err_fine[k0:k1]
    return float(math.sqrt(np.mean(seg * seg))) if seg.size else math.nan


def cmd_simulate(cfg: Config, args) -> int:
    scn = _base_scenario(cfg)
    out = _prepare_out(args)
    trace, metrics = run(scn)
    trace.to_csv(out / "trace.csv")
    _write_metrics(out / "metrics.txt", _metric_items(metrics))
    if args.plot:
        _trace_plots(trace, out)
    return EXIT_DIVERGED if metrics.diverged else EXIT_OK


def cmd_loadstep(cfg: Config, args) -> int:
    r_new = cfg.load_r_new_ohm if args.r_new is None else args.r_new
    t_ev = cfg.load_t_event_s if args.t_event is None else args.t_event
    known = cfg.load_known if args.known is None else args.known
    if not (math.isfinite(r_new) and r_new > 0):
        raise ConfigError("--r-new", f"must be positive, got {r_new}")
    if not 0 <= t_ev <= cfg.t_end_s:
        raise ConfigError("--t-event", f"must lie in [0, t_end_s={cfg.t_end_s}], got {t_ev}")
    scn = _base_scenario(cfg, events=(LoadChange(t_ev, r_new, known),))
    out = _prepare_out(args)
    trace, metrics = run(scn)
    period = scn.spec.period
    pre = _window_rms(trace, t_ev, period)
    post = metrics.rms_error_final_period
    grew = math.isfinite(pre) and pre > 0 and (not math.isfinite(post) or post >= GROWTH_FACTOR * pre)
    diverged = metrics.diverged or grew
    items = {"r_new_ohm": r_new, "t_event_s": t_ev, "known": known,
             "pre_event_rms_error_v": pre, **_metric_items(metrics), "diverged_by_growth": grew}
    trace.to_csv(out / "trace.csv")
    _write_metrics(out / "metrics.txt", items)
    if args.plot:
        _trace_plots(trace, out)
    return EXIT_DIVERGED if diverged else EXIT_OK


def _parse_range(text: str):
    try:
        parts = [float(p) for p in text.split(":")]
    except ValueError:
        raise ConfigError("--range", f"expected START:STOP:STEP, got {text!r}") from None
    if len(parts) != 3:
        raise ConfigError("--range", f"expected START:STOP:STEP, got {text!r}")
    return parts


def cmd_sweep(cfg: Config, args) -> int:
    if args.axis is not None:
        cfg = replace(cfg, sweep_axis=args.axis)
    if args.range is not None:
        start, stop, step = _parse_range(args.range)
        cfg = replace(cfg, sweep_start=start, sweep_stop=stop, sweep_step=step)
    if args.retune is not None:
        cfg = replace(cfg, sweep_retune=args.retune)
    values = cfg.sweep_values()
    if not values:
        raise ConfigError("--range", "sweep range is empty")
    if any(v <= 0 for v in values) or cfg.sweep_step <= 0:
        raise ConfigError("--range", "sweep values and step must be positive")
    spec = SweepSpec(_base_scenario(cfg), cfg.sweep_axis, values, cfg.sweep_retune)
    workers = args.workers or cfg.sweep_workers
    out = _prepare_out(args)
    result = sweep(spec, workers=workers)
    result.to_csv(out / "sweep.csv")
    for row in result.rows():
        print("{:>12.6g} rms={:<12.6g} max={:<12.6g} diverged={} margin={:.4f}".format(*row))
    if args.plot:
        cutoff = None
        if cfg.sweep_axis in ("v_m", "omega"):
            other = cfg.reference().omega if cfg.sweep_axis == "v_m" else cfg.v_m_volt
            try:
                cutoff = boundary(cfg.params(), cfg.sweep_axis, other)
            except NoBoundaryError:
                cutoff = None
        rms = [m.rms_error_final_period if not m.diverged else math.nan for m in result.metrics]
        svg.line_plot(out / "sweep.svg", [("final-period RMS error", result.values, rms)],
                      title=f"Tracking error vs {cfg.sweep_axis}", xlabel=cfg.sweep_axis,
                      ylabel="log10 RMS error [V]", vline=cutoff,
                      vline_label="predicted cutoff" if cutoff is not None else "", logy=True, markers=True)
    return EXIT_OK


def cmd_droop(cfg: Config, args) -> int:
    v_new = cfg.droop_v_m_star_new_volt if args.v_m_star_new is None else args.v_m_star_new
    t_ev = cfg.droop_t_event_s if args.t_event is None else args.t_event
    k_p = cfg.droop_k_p_radps_per_w if args.k_p is None else args.k_p
    k_q = cfg.droop_k_q_volt_per_var if args.k_q is None else args.k_q
    for flag, val in (("--k-p", k_p), ("--k-q", k_q), ("--v-m-star-new", v_new)):
        if not (math.isfinite(val) and val >= 0):
            raise ConfigError(flag, f"must be non-negative, got {val}")
    if not 0 <= t_ev <= cfg.t_end_s:
        raise ConfigError("--t-event", f"must lie in [0, t_end_s={cfg.t_end_s}], got {t_ev}")
    params, ref = cfg.params(), cfg.reference()
    dp = DroopParams.for_load(params, ref.v_m, ref.omega, k_p, k_q, cfg.control_period_s)
    scn = _base_scenario(cfg, initial_state=None, droop=dp,
                         events=(SetpointChange(t_ev, v_new, ref.omega),))
    out = _prepare_out(args)
    trace, metrics = run(scn)
    new_dp = DroopParams.for_load(params, v_new, ref.omega, k_p, k_q, cfg.control_period_s)
    omega_fp, v_fp = droop_fixed_point(params, new_dp)
    items = {"settled_omega_rad_s": trace.final_spec.omega, "settled_v_m_v": trace.final_spec.v_m,
             "predicted_omega_rad_s": omega_fp, "predicted_v_m_v": v_fp, **_metric_items(metrics)}
    trace.to_csv(out / "trace.csv")
    _write_metrics(out / "metrics.txt", items)
    if args.plot:
        _trace_plots(trace, out)
        svg.line_plot(out / "droop.svg", [("commanded V_m", trace["t"], trace["v_m_cmd"])],
                      title="Droop-commanded amplitude", xlabel="t [s]", ylabel="V")
    return EXIT_DIVERGED if metrics.diverged else EXIT_OK


def cmd_boundary(cfg: Config, args) -> int:
    axis = args.axis
    fixed = args.fixed
    if fixed is None:
        fixed = cfg.reference().omega if axis == "v_m" else cfg.v_m_volt
    if not (math.isfinite(fixed) and fixed > 0):
        raise ConfigError("--fixed", f"must be positive, got {fixed}")
    try:
        value = boundary(cfg.params(), axis, fixed)
    except NoBoundaryError as exc:
        print(f"no boundary: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{axis} boundary = {float(value)!r}")
    return EXIT_OK


def _prepare_out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _bool_pair(p, name, dest, help_on, help_off):
    g = p.add_mutually_exclusive_group()
    g.add_argument(f"--{name}", dest=dest, action="store_true", default=None, help=help_on)
    g.add_argument(f"--no-{name}", dest=dest, action="store_false", help=help_off)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybrid-inverter", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="key = value configuration file")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--plot", action="store_true", help="also write SVG plots")
        p.add_argument("--seed-free", action="store_true", help="fail if any random number generator is used")
        p.add_argument("--decimation", type=int, help="record every N-th control tick")

    p = sub.add_parser("simulate", help="single run from the configured initial condition")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("loadstep", help="run with a load resistance step")
    common(p)
    p.add_argument("--r-new", type=float)
    p.add_argument("--t-event", type=float)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--known", dest="known", action="store_true", default=None,
                   help="retune the controller at the step")
    g.add_argument("--unknown", dest="known", action="store_false", help="leave the controller stale")
    p.set_defaults(func=cmd_loadstep)

    p = sub.add_parser("sweep", help="sweep load, amplitude or frequency")
    common(p)
    p.add_argument("--axis", choices=("load_r", "v_m", "omega"))
    p.add_argument("--range", help="START:STOP:STEP (inclusive)")
    _bool_pair(p, "retune", "retune", "retune at each load value", "keep the base-load tuning")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("droop", help="droop outer loop with an amplitude setpoint step")
    common(p)
    p.add_argument("--v-m-star-new", type=float)
    p.add_argument("--t-event", type=float)
    p.add_argument("--k-p", type=float)
    p.add_argument("--k-q", type=float)
    p.set_defaults(func=cmd_droop)

    p = sub.add_parser("boundary", help="predicted stability boundary")
    common(p)
    p.add_argument("--axis", choices=("v_m", "omega"), required=True)
    p.add_argument("--fixed", type=float, help="the other reference parameter")
    p.set_defaults(func=cmd_boundary)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else Config()
        if args.decimation is not None:
            if args.decimation < 1:
                raise ConfigError("--decimation", f"must be a positive integer, got {args.decimation}")
            cfg = replace(cfg, decimation=args.decimation)
        if getattr(args, "workers", None) is not None and args.workers < 1:
            raise ConfigError("--workers", f"must be a positive integer, got {args.workers}")
        ctx = forbid_rng() if args.seed_free else contextlib.nullcontext()
        with ctx:
            return args.func(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
