"""Command-line entry point: configuration, pipeline invocation, reports."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import experiment, measmodel, netmodel, noise, powerflow

DEFAULT_OUTDIR_ENV = "CRBSENSE_OUTDIR"


@dataclass
class RunConfig:
    network: str | None = None  # None -> bundled fixture
    plan: str = "default"
    variants: str = "table1"
    n_scenarios_crb: int = 100
    n_scenarios_coverage: int = 1000
    master_seed: int = 42
    sigma_seed: int = 0
    pf_tol: float = 1e-8
    wls_tol: float = 1e-8
    outdir: str = "."


def _load_config(args) -> RunConfig:
    cfg = RunConfig()
    cfg.outdir = os.environ.get(DEFAULT_OUTDIR_ENV, cfg.outdir)
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        for key, value in data.items():
            if not hasattr(cfg, key):
                raise SystemExit(f"unknown config key {key!r} in {args.config}")
            setattr(cfg, key, value)
    # flags win over the config file
    for key in vars(cfg):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    if cfg.n_scenarios_crb <= 0 or cfg.n_scenarios_coverage <= 0:
        raise SystemExit("scenario counts must be > 0")
    return cfg


def _resolve_network(cfg: RunConfig):
    if cfg.network is None:
        net = netmodel.bundled_network()
        from importlib import resources

        sha_path = resources.files("crbsense.data").joinpath("cigre_mv.json")
        with resources.as_file(sha_path) as p:
            sha = experiment.file_sha256(p)
    else:
        net = netmodel.load_network(cfg.network)
        sha = experiment.file_sha256(cfg.network)
    return net, sha


def _resolve_variants(cfg: RunConfig) -> list[noise.DistributionSpec]:
    if cfg.variants == "table1":
        return noise.table1_variants()
    if cfg.variants == "gaussian-only":
        return [v for v in noise.table1_variants() if v.family == "gaussian"]
    return noise.load_variant_grid(cfg.variants)


def _resolve_plan(cfg: RunConfig, net) -> measmodel.MeasurementPlan:
    if cfg.plan == "default":
        return measmodel.default_plan(net, sigma_seed=cfg.sigma_seed)
    with open(cfg.plan) as fh:
        return measmodel.plan_from_json(fh.read())


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    status = 0
    failures: list[dict] = []
    net_sha = None
    variants: list[noise.DistributionSpec] = []
    plan = None
    try:
        net, net_sha = _resolve_network(cfg)
        y = netmodel.build_ybus(net)
        variants = _resolve_variants(cfg)
        plan = _resolve_plan(cfg, net)
        n_total = max(cfg.n_scenarios_crb, cfg.n_scenarios_coverage)
        scenarios = experiment.generate_scenarios(
            net, y, n_total, cfg.master_seed, pf_tol=cfg.pf_tol
        )
        result = experiment.run_study(
            net,
            y,
            plan,
            variants,
            scenarios,
            cfg.master_seed,
            n_crb=cfg.n_scenarios_crb,
            n_coverage=cfg.n_scenarios_coverage,
            wls_tol=cfg.wls_tol,
        )
        failures = result.failures
        experiment.write_crb_csv(outdir / "crb_ratios.csv", result.crb_reports)
        experiment.write_coverage_csv(outdir / "coverage.csv", result.coverage)
        experiment.write_rmse_csv(outdir / "rmse.csv", result.rmse)
        if failures:
            status = 1
    except Exception as exc:  # manifest still gets written below
        print(f"sweep failed: {exc}", file=sys.stderr)
        failures = [{"variant_id": "*", "scenario_id": -1, "reason": str(exc)}]
        status = 2
    finally:
        payload = experiment.manifest_payload(
            master_seed=cfg.master_seed,
            sigma_seed=cfg.sigma_seed,
            n_scenarios_crb=cfg.n_scenarios_crb,
            n_scenarios_coverage=cfg.n_scenarios_coverage,
            pf_tol=cfg.pf_tol,
            wls_tol=cfg.wls_tol,
            variants=variants,
            network_sha256=net_sha,
            plan=plan,
            failures=failures,
        )
        experiment.write_manifest(outdir / "run_manifest.json", payload)
    if status == 0:
        print(f"wrote crb_ratios.csv, coverage.csv, rmse.csv, run_manifest.json to {outdir}")
    return status


def cmd_fisher(args) -> int:
    kwargs = {}
    if args.nu is not None:
        kwargs["nu"] = args.nu
    if args.alpha is not None:
        kwargs["alpha"] = args.alpha
    if args.bias is not None:
        kwargs["bias_pct"] = args.bias
    try:
        spec = noise.DistributionSpec(args.family, sigma_pct=1.0, **kwargs)
        cn = noise.calibrate(spec, mu_star=0.0, sigma=args.sigma)
        f_closed = noise.fisher_information(cn)
        f_quad = noise.fisher_information_quadrature(cn)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"family           : {spec.family}")
    print(f"sigma            : {cn.sigma}")
    for name, value in (
        ("t scale", cn.t_scale),
        ("laplace b", cn.laplace_b),
        ("skew-normal xi", cn.sn_xi),
        ("skew-normal omega", cn.sn_omega),
        ("mean", cn.mean),
    ):
        if value is not None:
            print(f"{name:<17}: {value}")
    print(f"F (closed form)  : {f_closed}")
    print(f"F (quadrature)   : {f_quad}")
    print(f"F * sigma^2      : {f_closed * cn.sigma**2}")
    return 0


def cmd_variants(args) -> int:
    for spec in noise.table1_variants():
        cn = noise.calibrate(spec, mu_star=1.0, sigma=spec.sigma_pct)
        f = noise.fisher_information(cn)
        print(f"{spec.variant_id:<28} F*sigma^2 = {f * cn.sigma**2:.6f}")
    return 0


def cmd_plan(args) -> int:
    cfg = _load_config(args)
    net, _ = _resolve_network(cfg)
    plan = measmodel.default_plan(net, sigma_seed=cfg.sigma_seed)
    y = netmodel.build_ybus(net)
    sol = powerflow.solve_power_flow(net, y, 1.0, tol=cfg.pf_tol)
    z_true = measmodel.evaluate_h(net, y, plan, sol.state)
    # nominal sigmas at lambda = 1; variant-driven pseudo rows stay unset
    sigmas = np.full(plan.m, np.nan)
    for i, d in enumerate(plan.descriptors):
        if d.zero_injection:
            sigmas[i] = np.sqrt(measmodel.FLOOR_VARIANCE)
        elif d.source == "real":
            sigmas[i] = max(d.sigma_pct * abs(z_true[i]), measmodel.SIGMA_FLOOR)
    text = measmodel.plan_to_json(plan, sigmas=sigmas)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_powerflow(args) -> int:
    cfg = _load_config(args)
    net, _ = _resolve_network(cfg)
    y = netmodel.build_ybus(net)
    sol = powerflow.solve_power_flow(net, y, args.load_scale, tol=cfg.pf_tol)
    print(f"converged    : {sol.converged}")
    print(f"iterations   : {sol.iterations}")
    print(f"max mismatch : {sol.max_mismatch:.3e} MVA")
    ns = net.non_slack
    for k, i in enumerate(ns):
        print(
            f"bus {net.buses[i].id:>3}  |V| = {sol.state.vmag[k]:.6f} p.u."
            f"  theta = {np.degrees(sol.state.theta[k]):+.4f} deg"
        )
    return 0 if sol.converged else 1


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--network", help="network JSON path (default: bundled fixture)")
    p.add_argument("--seed", dest="master_seed", type=int, help="master RNG seed")
    p.add_argument("--sigma-seed", dest="sigma_seed", type=int, help="real-sensor accuracy draw seed")
    p.add_argument("--pf-tol", dest="pf_tol", type=float, help="power flow tolerance (MVA)")
    p.add_argument("--wls-tol", dest="wls_tol", type=float, help="WLS step tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crbsense",
        description="Sensitivity of WLS state-estimation uncertainty bounds "
        "to pseudo-measurement distributions, via Cramer-Rao bound ratios.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run the full variant sweep and emit CSV reports")
    _add_config_flags(p)
    p.add_argument("--plan", help='measurement plan JSON path or "default"')
    p.add_argument("--variants", help='variant grid JSON path, "table1", or "gaussian-only"')
    p.add_argument("--scenarios", dest="n_scenarios_crb", type=int, help="scenario count for CRB/RMSE")
    p.add_argument(
        "--coverage-scenarios",
        dest="n_scenarios_coverage",
        type=int,
        help="scenario count for empirical coverage",
    )
    p.add_argument("--outdir", help=f"output directory (default ${DEFAULT_OUTDIR_ENV} or cwd)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fisher", help="print calibrated parameters and Fisher information")
    p.add_argument("--family", required=True, choices=noise.FAMILIES)
    p.add_argument("--sigma", type=float, required=True, help="absolute standard deviation")
    p.add_argument("--nu", type=float, help="degrees of freedom (student_t)")
    p.add_argument("--alpha", type=float, help="shape (skew_normal)")
    p.add_argument("--bias", type=float, help="mean shift fraction (biased_gaussian)")
    p.set_defaults(func=cmd_fisher)

    p = sub.add_parser("variants", help="print the 22-variant grid with F*sigma^2")
    p.set_defaults(func=cmd_variants)

    p = sub.add_parser("plan", help="dump the default measurement plan as JSON")
    _add_config_flags(p)
    p.add_argument("--output", help="write to file instead of stdout")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("powerflow", help="solve a single power flow (debugging)")
    _add_config_flags(p)
    p.add_argument("--load-scale", type=float, default=1.0)
    p.set_defaults(func=cmd_powerflow)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
