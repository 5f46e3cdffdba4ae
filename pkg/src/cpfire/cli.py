"""
Command-line front end: ``cpfire <subcommand> --config run.ini --seed N``.

Every subcommand writes ``result.json`` (estimates plus a verbatim echo of
the configuration) and ``plotdata.csv`` (long format) into ``--out``, plus
``series.csv``, ``snapshots/`` and PNG figures where they apply. Wall-clock
timestamps go only to the sidecar ``run.log``.
"""
from __future__ import annotations

import argparse
import configparser
import io
import logging
import math
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Callable

import numpy as np

from . import plotting
from .analysis import formulas
from .analysis.blocks import BlockCriterionConfig, block_event_prob
from .analysis.coexist import coexistence_run
from .analysis.critical import METHODS, LambdaScales, estimate_lambda_c
from .analysis.gap import GapExperimentConfig, gap_experiment
from .analysis.replicates import default_workers, run_replicates
from .analysis.shape import shape_measure
from .analysis.source import SourceGridConfig, source_propagation
from .analysis.stats import Estimate, Z95
from .analysis.survival import survival_probability
from .engine import Observers, ProcessParams, Stop, run_until
from .errors import ConfigError
from .fileio import atomic_write_csv, atomic_write_json
from .kernels import kernel_from_config
from .processes import Initial, ProcessSpec, Variant
from .rng import make_rng, replicate_seed

log = logging.getLogger("cpfire")
log.addHandler(logging.NullHandler())
log.propagate = False

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
SUBCOMMANDS = ("simulate", "sweep", "lambda-c", "block-prob", "shape", "gap", "source", "coexist",
               "formulas")


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in {"1", "true", "yes", "on"}:
        return True
    if v in {"0", "false", "no", "off"}:
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s: str) -> list[float]:
    return [float(v) for v in s.replace(",", " ").split()]


_RATE = {k: float for k in ("beta1", "beta2", "delta1", "delta2", "delta0")}
_KERNEL = {"c1": float, "c2": float, "w_short": float, "w_long": float, "rho": float, "M": int}
SCHEMA: dict[str, dict[str, Callable]] = {
    "run": {"seed": int, "replicates": int, "workers": int},
    "process": {"variant": str, **_RATE, "F": int, "size": int, "window": int},
    "kernel1": _KERNEL,
    "kernel2": _KERNEL,
    "initial": {"kind": str, "type": int, "n": int, "p1": float, "p2": float},
    "simulate": {"t_max": float, "until": str, "cap": int, "samples": int},
    "sweep": {"parameter": str, "values": _floats, "measure": str, "T": float, "focal": int,
              "cap": int, "samples": int},
    "lambda-c": {"method": str, "size": int, "t_max": float, "ratio": float,
                 "decay_replicates": int, "survival_replicates": int, "lam_lo": float,
                 "lam_hi": float, "rel_tol": float, "max_iter": int},
    "block-prob": {"n": int, "L": int, "T": float, "eps": float},
    "shape": {"horizon": float, "samples": int, "coupled": _bool, "eps": float, "burn_in": float},
    "gap": {"L": int, "r1": float, "r2": float, "T": float, "margin": int},
    "source": {"alpha": float, "k": int, "L": int, "r1": float, "T": float, "burn_in": float,
               "checkpoint_every": float},
    "coexist": {"t_max": float, "samples": int, "lambda_c": float, "control": _bool},
    "formulas": {"delta0": float, "F": int, "L": int, "n": int, "T": float, "W": int,
                 "c2": float, "beta1": float, "k": int, "rho": float},
}
SHARED = ("run", "process", "kernel1", "kernel2", "initial")


# ---------------------------------------------------------------------------
# configuration


def read_config(text: str, command: str) -> dict[str, dict]:
    """Parse INI text into typed sections; unknown sections or keys are errors."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from exc
    allowed = set(SHARED) | {command}
    extra = [s for s in cp.sections() if s not in allowed]
    if extra:
        raise ConfigError(f"unknown sections for {command!r}: {', '.join(extra)}")
    out: dict[str, dict] = {s: {} for s in allowed}
    for sec in cp.sections():
        schema = SCHEMA[sec]
        unknown = [k for k in cp[sec] if k not in schema]
        if unknown:
            raise ConfigError(f"unknown keys in [{sec}]: {', '.join(sorted(unknown))}")
        for k, raw in cp[sec].items():
            try:
                out[sec][k] = schema[k](raw)
            except ValueError as exc:
                raise ConfigError(f"[{sec}] {k} = {raw!r}: {exc}") from exc
    return out


def config_echo(cfg: dict) -> dict[str, dict[str, str]]:
    """Typed config back to INI strings; ``read_config`` of the echo gives ``cfg`` again."""
    def fmt(v):
        if isinstance(v, list):
            return " ".join(map(repr, v))
        return repr(v) if isinstance(v, float) else str(v)

    return {s: {k: fmt(v) for k, v in sec.items()} for s, sec in cfg.items() if sec}


def echo_to_ini(echo: dict[str, dict[str, str]]) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read_dict(echo)
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def _variant(p: dict) -> Variant:
    try:
        return Variant(p.get("variant", "two-type-fire"))
    except ValueError as exc:
        raise ConfigError(f"unknown variant {p.get('variant')!r}; use one of "
                          f"{', '.join(v.value for v in Variant)}") from exc


def build_params(cfg: dict) -> ProcessParams:
    p = cfg["process"]
    variant = _variant(p)
    return ProcessParams(
        beta1=p.get("beta1", 0.0), beta2=p.get("beta2", 0.0), delta1=p.get("delta1", 0.0),
        delta2=p.get("delta2", 0.0), delta0=p.get("delta0", 0.0), F=p.get("F", 1),
        kernel1=kernel_from_config(cfg["kernel1"]), kernel2=kernel_from_config(cfg["kernel2"]),
        flip=variant is Variant.ZETA_FLIP)


def build_spec(cfg: dict) -> ProcessSpec:
    p = cfg["process"]
    variant = _variant(p)
    params = build_params(cfg)
    ini = cfg["initial"]
    default = {Variant.ZETA_FLIP: Initial("full", 2), Variant.TWO_TYPE_FIRE: Initial("random", p1=0.25, p2=0.25)}
    initial = Initial(**ini) if ini else default.get(variant, Initial("seed", 1))
    return ProcessSpec(variant, params, p.get("size", 64), p.get("window"), initial)


def _settings(cfg: dict, args) -> tuple[int, int, int]:
    run = cfg["run"]
    seed = args.seed if args.seed is not None else run.get("seed")
    if seed is None:
        raise ConfigError("a seed is required (--seed or [run] seed)")
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    reps = args.replicates if args.replicates is not None else run.get("replicates", 100)
    workers = args.workers if args.workers is not None else run.get("workers", default_workers())
    if reps < 1 or workers < 1:
        raise ConfigError("replicates and workers must be >= 1")
    return seed, reps, workers


# ---------------------------------------------------------------------------
# outputs


def emit_plot_data(path: Path, rows: list[dict], param_cols: list[str]) -> None:
    """Long-format CSV: the parameter columns, then value, ci_lo, ci_hi."""
    header = list(param_cols) + ["value", "ci_lo", "ci_hi"]
    if not rows:
        log.warning("no results: writing a header-only %s", path.name)
    atomic_write_csv(path, header, ([r.get(c, "") for c in header] for r in rows))


def _est_row(est: Estimate, **params) -> dict:
    return {**params, "value": float(est.value), "ci_lo": float(est.ci95[0]), "ci_hi": float(est.ci95[1])}


def _value_row(value: float, **params) -> dict:
    return {**params, "value": float(value), "ci_lo": float(value), "ci_hi": float(value)}


# ---------------------------------------------------------------------------
# subcommands; each returns (result dict, plot rows, plot parameter columns)


def _simulate_one(seed: int, spec: ProcessSpec, stop: Stop, times, snap_times, snap_dir):
    rng = make_rng(seed)
    lat = spec.initial.build(spec.width, spec.width, spec.boundary, rng)
    obs = Observers(sample_times=times, snapshot_times=snap_times, snapshot_dir=snap_dir)
    traj = run_until(lat, spec.params, stop, rng, obs, seed=seed)
    return traj


def cmd_simulate(cfg, seed, reps, workers, out: Path, args):
    spec = build_spec(cfg)
    s = cfg["simulate"]
    t_max = s.get("t_max", 100.0)
    stop = Stop(t_max, s.get("until", "time"), s.get("cap", 0))
    times = np.linspace(0.0, t_max, s.get("samples", 101))
    snap = None
    if args.snapshot_every:
        snap = np.arange(0.0, t_max + 1e-12, args.snapshot_every)
    # replicate 0 runs here so that its snapshots are written by this process
    trajs = [_simulate_one(replicate_seed(seed, 0), spec, stop, times, snap, out / "snapshots")]
    if reps > 1:
        trajs += run_replicates(_simulate_one, seed, reps - 1, spec, stop, times, None, None,
                                workers=workers, start=1)
    N = spec.width * spec.width
    rows_series, per_rep = [], []
    for r, tr in enumerate(trajs):
        for t, a, b in zip(tr.times, tr.n1, tr.n2):
            rows_series.append((r, float(t), int(a), int(b)))
        per_rep.append({"replicate": r, "status": tr.status, "t_end": tr.t_end,
                        "extinction": {str(k): v for k, v in tr.extinction.items()},
                        "tally": tr.tally, "seed": tr.seed})
    atomic_write_csv(out / "series.csv", ["replicate", "t", "n1", "n2"], rows_series)
    plot = []
    for typ in (1, 2):
        mat = np.zeros((len(trajs), len(times)))
        for r, tr in enumerate(trajs):
            v = tr.n1 if typ == 1 else tr.n2
            mat[r, : len(v)] = v / N
            if len(v) < len(times) and len(v):
                mat[r, len(v):] = v[-1] / N
        mean = mat.mean(axis=0)
        se = mat.std(axis=0, ddof=1) / math.sqrt(len(trajs)) if len(trajs) > 1 else np.zeros_like(mean)
        for t, m, e in zip(times, mean, se):
            plot.append({"type": typ, "t": float(t), "value": float(m),
                         "ci_lo": float(m - Z95 * e), "ci_hi": float(m + Z95 * e)})
    first = trajs[0]
    plotting.density_figure(out / "density.png", first.times, first.n1, first.n2, N,
                            title=f"replicate 0 ({spec.variant.value})")
    result = {"spec": spec.describe(), "replicates": per_rep}
    return result, plot, ["type", "t"]


def _sweep_point(cfg: dict, section: str, key: str, value: float) -> dict:
    c = {s: dict(v) for s, v in cfg.items()}
    if section not in SHARED or section == "run":
        raise ConfigError(f"sweep parameter must live in {', '.join(SHARED[1:])}, got [{section}]")
    conv = SCHEMA[section].get(key)
    if conv is None:
        raise ConfigError(f"unknown sweep parameter {section}.{key}")
    if conv not in (int, float):
        raise ConfigError(f"sweep parameter {section}.{key} is not numeric")
    c[section][key] = conv(value) if conv is float else int(round(value))
    return c


def cmd_sweep(cfg, seed, reps, workers, out: Path, args):
    s = cfg["sweep"]
    if "parameter" not in s:
        raise ConfigError("[sweep] needs parameter = <section>.<key>")
    section, _, key = s["parameter"].partition(".")
    values = s.get("values", [])
    measure = s.get("measure", "survival")
    if measure not in ("survival", "coexist"):
        raise ConfigError(f"unknown sweep measure {measure!r}; use survival or coexist")
    T = s.get("T", 100.0)
    # validate every grid point before running any
    points = [(v, build_spec(_sweep_point(cfg, section, key, v))) for v in values]
    plot, results = [], []
    col = f"{section}.{key}"
    for v, spec in points:
        if measure == "survival":
            focal = s.get("focal", 1)
            est = survival_probability(spec, T, reps, seed, focal=focal, cap=s.get("cap", 0),
                                       workers=workers)
            plot.append(_est_row(est, **{col: v, "measure": f"type{focal}-survives"}))
            results.append({"value": v, "estimate": est.to_dict()})
        else:
            res = coexistence_run(spec.params, T, reps, seed, size=spec.width, initial=spec.initial,
                                  samples=s.get("samples", 11), control=False, workers=workers)
            plot.append(_est_row(res.survive1, **{col: v, "measure": "type1-survives"}))
            plot.append(_est_row(res.survive2, **{col: v, "measure": "type2-survives"}))
            results.append({"value": v, "survive1": res.survive1.to_dict(),
                            "survive2": res.survive2.to_dict(),
                            "final_density1": float(res.density1[-1]),
                            "final_density2": float(res.density2[-1])})
    if plot:
        plotting.estimate_figure(out / "sweep.png", [r[col] for r in plot], [r["value"] for r in plot],
                                 [r["ci_lo"] for r in plot], [r["ci_hi"] for r in plot], col,
                                 "survival fraction", groups=[r["measure"] for r in plot])
    return {"parameter": col, "measure": measure, "T": T, "points": results}, plot, [col, "measure"]


def cmd_lambda_c(cfg, seed, reps, workers, out: Path, args):
    s = dict(cfg["lambda-c"])
    method = s.pop("method", "both")
    methods = METHODS if method == "both" else (method,)
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r}; use one of {METHODS} or both")
    scales = LambdaScales(**s)
    kernel = kernel_from_config(cfg["kernel1"])
    res, plot, probes = {}, [], []
    for m in methods:
        est = estimate_lambda_c(kernel, m, scales, seed, workers)
        res[m] = est.to_dict()
        plot.append(_est_row(est, method=m))
        probes += [(m, float(lam), float(r)) for lam, r in est.extra["probes"]]
    atomic_write_csv(out / "series.csv", ["method", "lambda", "ratio"], probes)
    if len(methods) == 2:
        a, b = (res[m]["value"] for m in METHODS)
        res["relative_difference"] = abs(a - b) / (0.5 * (a + b))
    plotting.estimate_figure(out / "probes.png", [p[1] for p in probes], [p[2] for p in probes],
                             [p[2] for p in probes], [p[2] for p in probes], "lambda",
                             "decay ratio", groups=[p[0] for p in probes])
    return {"kernel": kernel.describe(), "scales": asdict(scales), "estimates": res}, plot, ["method"]


def cmd_block_prob(cfg, seed, reps, workers, out: Path, args):
    b = cfg["block-prob"]
    if not {"n", "L", "T"} <= set(b):
        raise ConfigError("[block-prob] needs n, L and T")
    bc = BlockCriterionConfig(**b)
    params = build_params(cfg)
    top, side = block_event_prob(bc, params.beta1, params.delta1, params.delta0, params.F, reps, seed,
                                 params.kernel1, workers)
    factor = formulas.block_unaffected_prob(params.delta0, params.F, bc.L, bc.n, bc.T)
    plot = [_est_row(top, event="top"), _est_row(side, event="side"),
            _value_row(factor, event="fire-free-factor")]
    plotting.estimate_figure(out / "blocks.png", [0, 1], [top.value, side.value],
                             [top.ci95[0], side.ci95[0]], [top.ci95[1], side.ci95[1]],
                             "event (0 = top, 1 = side)", "probability")
    return {"config": asdict(bc), "top": top.to_dict(), "side": side.to_dict(),
            "block_unaffected_prob": factor, "params": params.describe()}, plot, ["event"]


def cmd_shape(cfg, seed, reps, workers, out: Path, args):
    s = cfg["shape"]
    spec = build_spec(cfg)
    horizon = s.get("horizon", 50.0)
    times = np.linspace(0.0, horizon, s.get("samples", 51))
    data = shape_measure(spec, horizon, times, seed, coupled=s.get("coupled", False),
                         eps=s.get("eps", 0.5), burn_in=s.get("burn_in", 0.0))
    names = data.extra["directions"]
    rows = []
    for i, t in enumerate(data.times):
        rows.append((float(t), int(data.area[i]), int(data.valid[i]), float(data.convexity[i]),
                     *map(float, data.extents[i])))
    atomic_write_csv(out / "series.csv", ["t", "area", "valid", "convexity", *names], rows)
    plot = [_value_row(v, direction=n) for n, v in zip(names, data.speeds)]
    plotting.shape_figure(out / "shape.png", data.hit_time, data.times, data.effective_radius,
                          data.radius_fit)
    result = {"spec": spec.describe(), "speeds": dict(zip(names, map(float, data.speeds))),
              "inner_speed": data.inner_speed, "outer_speed": data.outer_speed,
              "radius_fit": data.radius_fit, "valid_samples": int(data.valid.sum())}
    if data.coupled_inner_fraction is not None:
        result["coupled_inner_fraction"] = data.coupled_inner_fraction.tolist()
    return result, plot, ["direction"]


def cmd_gap(cfg, seed, reps, workers, out: Path, args):
    g = cfg["gap"]
    if not {"L", "r1", "r2", "T"} <= set(g):
        raise ConfigError("[gap] needs L, r1, r2 and T")
    gc = GapExperimentConfig(**g)
    params = build_params(cfg)
    e1, e2 = gap_experiment(gc, params, reps, seed, workers)
    plot = [_est_row(e1, estimate="persistence"), _est_row(e2, estimate="no-invasion")]
    return {"config": asdict(gc), "persistence": e1.to_dict(), "no_invasion": e2.to_dict(),
            "params": params.describe()}, plot, ["estimate"]


def cmd_source(cfg, seed, reps, workers, out: Path, args):
    params = build_params(cfg)
    sc = SourceGridConfig(F=params.F, **cfg["source"])
    est = source_propagation(sc, params, reps, seed, workers)
    return {"config": asdict(sc), "k": sc.blocks, "W": sc.W, "M": sc.M,
            "estimate": est.to_dict()}, [_est_row(est, k=sc.blocks)], ["k"]


def cmd_coexist(cfg, seed, reps, workers, out: Path, args):
    c = cfg["coexist"]
    spec = build_spec(cfg)
    if spec.boundary.value != "torus":
        raise ConfigError("coexistence runs use a torus (no window)")
    res = coexistence_run(spec.params, c.get("t_max", 1000.0), reps, seed, size=spec.width,
                          initial=spec.initial, samples=c.get("samples", 21),
                          lambda_c=c.get("lambda_c"), control=c.get("control", True), workers=workers)
    cols = ["t", "density1", "density2"]
    series = [res.times, res.density1, res.density2]
    if res.control_density1 is not None:
        cols += ["control_density1", "control_density2"]
        series += [res.control_density1, res.control_density2]
    atomic_write_csv(out / "series.csv", cols, zip(*[map(float, s) for s in series]))
    plot = [_est_row(res.survive1, run="fire", measure="type1-survives"),
            _est_row(res.survive2, run="fire", measure="type2-survives")]
    if res.control_survive1 is not None:
        plot.append(_est_row(res.control_survive1, run="control", measure="type1-survives"))
    plotting.density_figure(out / "density.png", res.times, res.density1, res.density2, 1,
                            title="mean density with fires")
    if res.control_density1 is not None:
        plotting.density_figure(out / "control_density.png", res.times, res.control_density1,
                                res.control_density2, 1, title="mean density, no fires")
    result = {"spec": spec.describe(), "t_max": float(res.times[-1]),
              "survive1": res.survive1.to_dict(), "survive2": res.survive2.to_dict(),
              "condition": res.condition}
    if res.control_survive1 is not None:
        result["control_survive1"] = res.control_survive1.to_dict()
        result["control_declines"] = res.control_declines
    return result, plot, ["run", "measure"]


def cmd_formulas(cfg, seed, reps, workers, out: Path, args):
    f = {"delta0": 0.0, "F": 1, "L": 1, "n": 1, "T": 1.0, "W": 1, "c2": 1.0, "beta1": 1.0, "k": 1,
         "rho": 2.0, **cfg["formulas"]}
    vals = {
        "block_unaffected": formulas.block_unaffected_prob(f["delta0"], f["F"], f["L"], f["n"], f["T"]),
        "fire_gap": formulas.fire_gap_probability(f["delta0"], f["W"], f["F"], f["T"]),
        "spread_success": formulas.spread_success_bound(f["c2"], f["beta1"], f["k"], f["W"], f["rho"],
                                                        f["L"], f["T"]),
    }
    return {"inputs": f, "values": vals}, [_value_row(v, formula=k) for k, v in vals.items()], ["formula"]


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "lambda-c": cmd_lambda_c,
            "block-prob": cmd_block_prob, "shape": cmd_shape, "gap": cmd_gap, "source": cmd_source,
            "coexist": cmd_coexist, "formulas": cmd_formulas}


# ---------------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cpfire", description=__doc__.strip().splitlines()[0])
    parser.add_argument("command", choices=SUBCOMMANDS)
    parser.add_argument("--config", type=Path, help="INI file with [process], [kernel1], ... sections")
    parser.add_argument("--seed", type=int, help="base seed (unsigned 64-bit)")
    parser.add_argument("--replicates", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--out", type=Path, default=Path("out"))
    parser.add_argument("--snapshot-every", type=float, default=None,
                        help="write lattice snapshots at this spacing (simulate)")
    return parser


def _setup_log(out: Path) -> logging.Handler:
    out.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(out / "run.log", mode="w")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    return handler


def run(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    handler = None
    try:
        text = args.config.read_text() if args.config else ""
        cfg = read_config(text, args.command)
        seed, reps, workers = _settings(cfg, args)
        if args.snapshot_every is not None and not args.snapshot_every > 0:
            raise ConfigError("--snapshot-every must be positive")
        handler = _setup_log(args.out)
        log.info("start %s seed=%d replicates=%d workers=%d", args.command, seed, reps, workers)
        result, plot, cols = COMMANDS[args.command](cfg, seed, reps, workers, args.out, args)
        echo = {"command": args.command, "seed": seed, "replicates": reps, "config_text": text,
                "config": config_echo(cfg)}
        atomic_write_json(args.out / "result.json", {"config_echo": echo, "result": result})
        emit_plot_data(args.out / "plotdata.csv", plot, cols)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME if args.config is None or args.config.exists() else EXIT_CONFIG
    except Exception as exc:  # anything raised mid-run
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        log.exception("runtime error")
        return EXIT_RUNTIME
    finally:
        if handler is not None:
            log.info("end")
            log.removeHandler(handler)
            handler.close()
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
