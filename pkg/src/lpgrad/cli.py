"""Command-line front end: estimate, table, moments-check, mse-sweep.

Run configurations are plain JSON documents (unknown keys rejected) so
runs are reproducible and diffable; results go to CSV with a fixed
schema or to JSON.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import bench
from .errors import DomainError, LpgradError
from .estimator import (
    DECORRELATE_MOMENT,
    DECORRELATE_SAMPLE,
    EstimatorConfig,
    ObjectiveFunction,
    recommended_sigma,
)
from .expr import compile_expression
from .metric import TensorMetric, exp_corr_metric, from_matrix, identity_metric, load_matrix
from .sampler import (
    DirectionLaw,
    RadialLaw,
    draw_batch,
    lp_norm,
    moment_R0,
    sphere_abs_moment,
    sphere_mixed_moment,
)
from .scheme import LOW_ORDER, build_scheme, one_point

__all__ = ["RunConfig", "main", "CSV_HEADER"]

CSV_HEADER = [
    "function", "d", "p", "L", "N", "h", "sigma", "law", "radial",
    "decorrelated", "metric", "rep", "seed", "err", "n_evals", "wall_ms",
]

_FLOAT_FIELDS = {"p", "h", "sigma", "err", "wall_ms"}
_INT_FIELDS = {"d", "L", "N", "rep", "seed", "n_evals"}


@dataclass
class RunConfig:
    """A complete, JSON-serializable description of an estimate run."""

    function: str = "rosenbrock"
    d: int = 10
    p: float = 3.0
    l: int = 1
    n: int = 20
    h: float = 1e-4
    sigma: str | float = "auto-d2"
    law: str = "sphere"
    radial: str = "uniform"
    decorrelate: bool = False
    decorrelate_mode: str = DECORRELATE_MOMENT
    metric: str = "identity"
    seed: int = 0
    reps: int = 1
    m1: float = 2.0
    m2: float = 1.0
    threads: int = 1
    out: str | None = None
    format: str = "csv"

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _build_function(cfg: RunConfig) -> ObjectiveFunction:
    if cfg.function == "rosenbrock":
        return bench.rosenbrock(cfg.d)
    if cfg.function == "synthetic":
        return bench.synthetic_ms(cfg.d, cfg.m1, cfg.m2)
    if cfg.function.startswith("expr:"):
        fun = compile_expression(cfg.function[len("expr:"):])
        return ObjectiveFunction(fun=fun, dim=cfg.d, name="custom-expr")
    raise DomainError(
        f"unknown function {cfg.function!r}; use rosenbrock, synthetic or expr:<expression>"
    )


def _build_metric(spec: str, d: int) -> TensorMetric:
    if spec == "identity":
        return identity_metric(d)
    if spec.startswith("exp-corr:"):
        return exp_corr_metric(d, float(spec[len("exp-corr:"):]))
    if spec.startswith("file:"):
        return from_matrix(load_matrix(spec[len("file:"):]))
    raise DomainError(f"unknown metric {spec!r}; use identity, exp-corr:<rho> or file:<path>")


def _resolve_sigma(sigma, metric: TensorMetric, d: int, p: float) -> float:
    if isinstance(sigma, (int, float)):
        return float(sigma)
    if sigma == "auto-c3":
        return recommended_sigma(metric, d, p, "self-normalizing")
    if sigma == "auto-d2":
        return recommended_sigma(metric, d, p, "d_pow_neg2")
    try:
        return float(sigma)
    except (TypeError, ValueError):
        raise DomainError(f"sigma must be a number, 'auto-c3' or 'auto-d2', got {sigma!r}")


def _build_spec(cfg: RunConfig) -> bench.ExperimentSpec:
    function = _build_function(cfg)
    metric = _build_metric(cfg.metric, cfg.d)
    sigma = _resolve_sigma(cfg.sigma, metric, cfg.d, cfg.p)
    if cfg.law == "sphere":
        law = DirectionLaw.sphere(cfg.p)
    elif cfg.law == "ball":
        law = DirectionLaw.ball(cfg.p)
    elif cfg.law == "iid-uniform":
        # calibrate the half width so E[V_k^2] = sigma^2
        law = DirectionLaw.iid_uniform(math.sqrt(3.0) * sigma)
    else:
        raise DomainError(f"unknown law {cfg.law!r}")
    if cfg.radial == "uniform":
        radial = RadialLaw.uniform(sigma)
    elif cfg.radial == "dirac":
        radial = RadialLaw.dirac(sigma)
    else:
        raise DomainError(f"unknown radial law {cfg.radial!r}")
    scheme = one_point() if cfg.l == 1 else build_scheme(
        [1.0, -1.0] if cfg.l == 2 else list(range(1, cfg.l + 1)), LOW_ORDER
    )
    est_cfg = EstimatorConfig(
        scheme=scheme,
        law=law,
        radial=radial,
        n=cfg.n,
        sigma=sigma,
        h=cfg.h,
        decorrelate=cfg.decorrelate,
        decorrelate_mode=cfg.decorrelate_mode,
    )
    return bench.ExperimentSpec(
        function=function,
        metric=metric,
        cfg=est_cfg,
        reps=cfg.reps,
        seed=cfg.seed,
        metric_label=cfg.metric,
    )


def _csv_cell(name: str, value) -> str:
    if name in _FLOAT_FIELDS:
        return format(float(value), ".17e")
    if name in _INT_FIELDS:
        return str(int(value))
    if name == "decorrelated":
        return "true" if value else "false"
    return str(value)


def _row_record(row: bench.ResultRow) -> dict:
    return {
        "function": row.function, "d": row.d, "p": row.p, "L": row.l, "N": row.n,
        "h": row.h, "sigma": row.sigma, "law": row.law, "radial": row.radial,
        "decorrelated": row.decorrelated, "metric": row.metric, "rep": row.rep,
        "seed": row.seed, "err": row.err, "n_evals": row.n_evals, "wall_ms": row.wall_ms,
    }


def write_rows(rows, out: str | None, fmt: str = "csv") -> None:
    """Write result rows as CSV (fixed schema) or JSON; '-'/None = stdout."""
    if fmt == "csv":
        handle = open(out, "w", newline="") if out and out != "-" else sys.stdout
        try:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for row in rows:
                rec = _row_record(row)
                writer.writerow([_csv_cell(name, rec[name]) for name in CSV_HEADER])
        finally:
            if handle is not sys.stdout:
                handle.close()
    elif fmt == "json":
        payload = []
        for row in rows:
            rec = _row_record(row)
            rec["note"] = row.note
            payload.append(rec)
        text = json.dumps(payload, indent=2)
        if out and out != "-":
            with open(out, "w") as fh:
                fh.write(text + "\n")
        else:
            sys.stdout.write(text + "\n")
    else:
        raise DomainError(f"unknown output format {fmt!r}")


def _threads_default() -> int:
    return int(os.environ.get("LPGRAD_THREADS", "1"))


def _add_estimate_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON run configuration (other flags ignored)")
    sub.add_argument("--function", default="rosenbrock",
                     help="rosenbrock | synthetic | expr:<expression>")
    sub.add_argument("--d", type=int, help="dimension (required unless --config)")
    sub.add_argument("--p", type=float, default=3.0)
    sub.add_argument("--L", dest="l", type=int, default=1)
    sub.add_argument("--N", dest="n", type=int, default=20)
    sub.add_argument("--h", type=float, default=1e-4)
    sub.add_argument("--sigma", default="auto-d2", help="number | auto-c3 | auto-d2")
    sub.add_argument("--law", default="sphere", choices=["sphere", "ball", "iid-uniform"])
    sub.add_argument("--radial", default="uniform", choices=["uniform", "dirac"])
    sub.add_argument("--decorrelate", action="store_true")
    sub.add_argument("--decorrelate-mode", default=DECORRELATE_MOMENT,
                     choices=[DECORRELATE_MOMENT, DECORRELATE_SAMPLE])
    sub.add_argument("--metric", default="identity",
                     help="identity | exp-corr:<rho> | file:<path>")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--reps", type=int, default=1)
    sub.add_argument("--m1", type=float, default=2.0)
    sub.add_argument("--m2", type=float, default=1.0)
    sub.add_argument("--threads", type=int, default=None)
    sub.add_argument("--out", default=None)
    sub.add_argument("--format", default="csv", choices=["csv", "json"])
    sub.add_argument("--save-config", default=None,
                     help="write the effective run configuration to this JSON path")


def _estimate_config(args) -> RunConfig:
    if args.config:
        cfg = RunConfig.from_json(args.config)
        if args.out is not None:
            cfg.out = args.out
        return cfg
    if args.d is None:
        raise DomainError("--d is required")
    return RunConfig(
        function=args.function, d=args.d, p=args.p, l=args.l, n=args.n, h=args.h,
        sigma=args.sigma, law=args.law, radial=args.radial,
        decorrelate=args.decorrelate, decorrelate_mode=args.decorrelate_mode,
        metric=args.metric, seed=args.seed, reps=args.reps, m1=args.m1, m2=args.m2,
        threads=args.threads if args.threads is not None else _threads_default(),
        out=args.out, format=args.format,
    )


def cmd_estimate(args) -> int:
    cfg = _estimate_config(args)
    if cfg.decorrelate and cfg.n < cfg.d:
        raise DomainError(f"--decorrelate needs N >= d (N={cfg.n}, d={cfg.d})")
    if getattr(args, "save_config", None):
        cfg.to_json(args.save_config)
    spec = _build_spec(cfg)
    rows, summary = bench.run_experiment(spec, threads=cfg.threads)
    write_rows(rows, cfg.out, cfg.format)
    print(
        f"mean err = {summary['mean_err']:.6g} (sd {summary['sd_err']:.3g}, "
        f"mean evals {summary['mean_n_evals']:.1f}, failed {summary['n_failed']})",
        file=sys.stderr,
    )
    return 0


def cmd_table(args) -> int:
    threads = args.threads if args.threads is not None else _threads_default()
    specs = bench.table_specs(args.name, reps=args.reps, seed=args.seed)
    rows = []
    for spec in specs:
        cell_rows, summary = bench.run_experiment(spec, threads=threads)
        rows.extend(cell_rows)
        print(
            f"{spec.name}: mean err = {summary['mean_err']:.4g} over {spec.reps} reps",
            file=sys.stderr,
        )
    preset = bench.TABLE_PRESETS[args.name]
    if preset["fdm"]:
        spec0 = specs[0]
        row = bench.fdm_row(spec0.function, spec0.metric, h=1e-4, metric_label=spec0.metric_label)
        rows.append(row)
        print(f"{args.name}[fdm]: err = {row.err:.4g}", file=sys.stderr)
    write_rows(rows, args.out, "csv")
    return 0


def _zscore(samples: np.ndarray, analytic: float) -> tuple[float, float]:
    emp = float(samples.mean())
    sd = float(samples.std())
    if sd == 0.0:
        return emp, 0.0 if emp == analytic else math.inf
    return emp, (emp - analytic) / (sd / math.sqrt(samples.size))


def moments_report(d: int, p: float, draws: int, seed: int, sigma: float = 1.0):
    """Analytic vs empirical moment checks for the sphere/radius laws.

    Returns a list of (name, analytic, empirical, z) covering
    E[|U_1|^q] for q <= 4, E[U_1^2 |U_2|], the E[V_1^2] = sigma^2
    calibration and E[R_0^q] for q <= 4.
    """
    law = DirectionLaw.sphere(p)
    batch = draw_batch(law, RadialLaw.uniform(sigma), draws, d, seed)
    v = batch.values
    r = lp_norm(v, p)  # ||V||_p = R because ||U||_p = 1
    u1 = v[:, 0] / r
    checks = []
    for q in (1, 2, 3, 4):
        emp, z = _zscore(np.abs(u1) ** q, sphere_abs_moment(q, d, p))
        checks.append((f"E|U1|^{q}", sphere_abs_moment(q, d, p), emp, z))
    if d >= 2:
        u2 = v[:, 1] / r
        ana = sphere_mixed_moment(d, p)
        emp, z = _zscore(u1**2 * np.abs(u2), ana)
        checks.append(("E[U1^2|U2|]", ana, emp, z))
    emp, z = _zscore(v[:, 0] ** 2, sigma**2)
    checks.append(("E[V1^2]", sigma**2, emp, z))
    for q in (1, 2, 3, 4):
        ana = moment_R0(q, d, p, sigma)
        emp, z = _zscore(r**q, ana)
        checks.append((f"E[R0^{q}]", ana, emp, z))
    return checks


def cmd_moments_check(args) -> int:
    checks = moments_report(args.d, args.p, args.draws, args.seed, args.sigma)
    worst = 0.0
    print(f"{'moment':>12s} {'analytic':>14s} {'empirical':>14s} {'z':>8s}")
    for name, analytic, empirical, z in checks:
        print(f"{name:>12s} {analytic:14.6e} {empirical:14.6e} {z:8.2f}")
        worst = max(worst, abs(z))
    print(f"max |z| = {worst:.2f} over {len(checks)} checks at d={args.d}, p={args.p}")
    return 0 if worst <= 5.0 else 1


def cmd_mse_sweep(args) -> int:
    cfg = _estimate_config(args)
    spec = _build_spec(cfg)
    n_values = [int(tok) for tok in args.n_values.split(",") if tok.strip()]
    points, slope = bench.mse_sweep(spec, n_values, reps=cfg.reps, threads=cfg.threads)
    handle = open(cfg.out, "w", newline="") if cfg.out and cfg.out != "-" else sys.stdout
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["n", "mse"])
        for n, mse in points:
            writer.writerow([str(n), format(mse, ".17e")])
    finally:
        if handle is not sys.stdout:
            handle.close()
    print(f"log-log slope = {slope:.4f}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="lpgrad", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="run a gradient-estimation experiment")
    _add_estimate_args(est)
    est.set_defaults(handler=cmd_estimate)

    tab = sub.add_parser("table", help="reproduce a benchmark table preset")
    tab.add_argument("--name", required=True, choices=sorted(bench.TABLE_PRESETS))
    tab.add_argument("--reps", type=int, default=50)
    tab.add_argument("--seed", type=int, default=0)
    tab.add_argument("--threads", type=int, default=None)
    tab.add_argument("--out", default=None)
    tab.set_defaults(handler=cmd_table)

    mom = sub.add_parser("moments-check", help="analytic vs empirical moment z-scores")
    mom.add_argument("--d", type=int, required=True)
    mom.add_argument("--p", type=float, required=True)
    mom.add_argument("--draws", type=int, default=1_000_000)
    mom.add_argument("--seed", type=int, default=0)
    mom.add_argument("--sigma", type=float, default=1.0)
    mom.set_defaults(handler=cmd_moments_check)

    swp = sub.add_parser("mse-sweep", help="empirical MSE against sample size")
    _add_estimate_args(swp)
    swp.add_argument("--n-values", default="32,64,128,256,512,1024",
                     help="comma-separated sample sizes")
    swp.set_defaults(handler=cmd_mse_sweep)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except LpgradError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
