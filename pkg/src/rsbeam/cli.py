"""Command-line interface: solve one instance, run the Monte-Carlo benchmark,
or cross-check the solver against the independent oracles.

Exit codes: 0 success, 1 argument or input-file error, 2 validation failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bench, oracle
from .exceptions import ChannelFileError, ConfigError
from .fp_core import g_common_all, g_private_all, make_aux
from .model import (
    LN2,
    RATE_UNITS,
    SystemConfig,
    convert_rate,
    evaluate,
    generate_channel,
    load_channel_file,
)
from .solver import allocate_common_rate, solve, solve_sdma


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad arguments; the CLI contract wants 1
    def error(self, message):
        raise _ArgumentError(message)


def _add_instance_flags(p, with_seed_default=False):
    p.add_argument("--users", type=int, help="number of users K")
    p.add_argument("--antennas", type=int, help="number of transmit antennas L")
    power = p.add_mutually_exclusive_group()
    power.add_argument("--power", type=float, default=None, help="power budget in watts")
    power.add_argument(
        "--power-db", type=float, default=None, help="power budget in dBW"
    )
    p.add_argument(
        "--noise", type=float, default=1.0, help="per-user noise variance (scalar)"
    )
    p.add_argument(
        "--weights",
        type=str,
        default=None,
        help="comma-separated per-user rate weights (default: all ones)",
    )
    p.add_argument("--rho", type=float, default=0.5, help="dual update damping")
    p.add_argument(
        "--tol", type=float, default=1e-4, help="stopping tolerance (outer and inner)"
    )
    p.add_argument("--max-outer", type=int, default=500)
    p.add_argument("--max-inner", type=int, default=2000)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rsbeam", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve one instance and print the solution JSON")
    ps.add_argument("--channel-file", type=str, default=None, help="channel JSON file")
    ps.add_argument(
        "--seed", type=int, default=None, help="draw a random channel with this seed"
    )
    _add_instance_flags(ps)
    ps.add_argument("--rate-unit", choices=RATE_UNITS, default="nats")
    ps.add_argument(
        "--sdma", action="store_true", help="drop the common stream (baseline)"
    )

    pm = sub.add_parser("montecarlo", help="run the Monte-Carlo benchmark")
    _add_instance_flags(pm)
    pm.add_argument("--trials", type=int, default=100)
    pm.add_argument("--seed", type=int, default=0, help="master seed")
    pm.add_argument("--out", type=str, required=True, help="CSV output path")
    pm.add_argument("--trace", type=str, default=None, help="JSON-lines trace path")
    pm.add_argument("--parallel", type=int, default=1, help="worker processes")
    pm.add_argument(
        "--compare-sdma",
        action="store_true",
        help="also solve the private-only baseline per trial",
    )
    pm.add_argument(
        "--timing",
        choices=bench.TIMING_MODES,
        default="wall",
        help="wall: measured per-trial seconds; off: deterministic zeros",
    )

    pv = sub.add_parser(
        "validate", help="cross-check the solver against the independent oracles"
    )
    pv.add_argument("--seed", type=int, default=0)
    return p


def _parse_weights(text, K):
    if text is None:
        return 1.0
    try:
        w = np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise _ArgumentError("--weights must be comma-separated numbers") from None
    if w.size != K:
        raise _ArgumentError("--weights needs %d entries, got %d" % (K, w.size))
    return w


def _resolve_power(args):
    if args.power_db is not None:
        return 10.0 ** (args.power_db / 10.0)
    if args.power is not None:
        return args.power
    return 100.0


def _config_from_args(args, L, K, sigma2=None):
    return SystemConfig(
        L=L,
        K=K,
        Pt=_resolve_power(args),
        sigma2=args.noise if sigma2 is None else sigma2,
        delta=_parse_weights(args.weights, K),
        rho=args.rho,
        tol_outer=args.tol,
        tol_inner=args.tol,
        max_outer=args.max_outer,
        max_inner=args.max_inner,
        rate_unit=getattr(args, "rate_unit", "nats"),
    )


def _solution_payload(sol, cfg):
    unit = cfg.rate_unit
    rep = sol.report
    return {
        "wsr_nats": rep.wsr,
        "wsr_bits": rep.wsr / LN2,
        "converged": bool(sol.converged),
        "outer_iterations": sol.outer_iterations,
        "inner_iterations": sol.inner_iterations,
        "wall_time_s": sol.wall_time,
        "rate_unit": unit,
        "report": {
            "r0": np.asarray(convert_rate(rep.r0, unit)).tolist(),
            "rp": np.asarray(convert_rate(rep.rp, unit)).tolist(),
            "c": np.asarray(convert_rate(rep.c, unit)).tolist(),
            "y": convert_rate(rep.y, unit),
            "totals": np.asarray(convert_rate(rep.totals, unit)).tolist(),
            "wsr": convert_rate(rep.wsr, unit),
        },
        "duals": None
        if sol.duals is None
        else {
            "lambda": sol.duals.lam.tolist(),
            "mu": sol.duals.mu,
            "m": sol.duals.m,
            "power_residual": sol.duals.power_residual,
        },
        "power_used": float(np.vdot(sol.W, sol.W).real),
        "W_re": sol.W.real.tolist(),
        "W_im": sol.W.imag.tolist(),
        "wsr_trace": sol.wsr_trace.tolist(),
    }


def _cmd_solve(args):
    if (args.channel_file is None) == (args.seed is None):
        raise _ArgumentError("solve needs exactly one of --channel-file or --seed")
    if args.channel_file is not None:
        H, sigma2 = load_channel_file(args.channel_file)
        L, K = H.shape
        if args.users is not None and args.users != K:
            raise _ArgumentError(
                "--users %d contradicts channel file (K=%d)" % (args.users, K)
            )
        if args.antennas is not None and args.antennas != L:
            raise _ArgumentError(
                "--antennas %d contradicts channel file (L=%d)" % (args.antennas, L)
            )
        cfg = _config_from_args(args, L, K, sigma2=sigma2)
    else:
        if args.users is None or args.antennas is None:
            raise _ArgumentError("--seed requires --users and --antennas")
        cfg = _config_from_args(args, args.antennas, args.users)
        H = generate_channel(cfg, args.seed)
    sol = solve_sdma(H, cfg) if args.sdma else solve(H, cfg)
    json.dump(_solution_payload(sol, cfg), sys.stdout)
    sys.stdout.write("\n")
    return 0


def _cmd_montecarlo(args):
    if args.users is None or args.antennas is None:
        raise _ArgumentError("montecarlo requires --users and --antennas")
    cfg = _config_from_args(args, args.antennas, args.users)
    records, summary, traces = bench.run_montecarlo(
        cfg,
        trials=args.trials,
        master_seed=args.seed,
        parallel=args.parallel,
        compare_sdma=args.compare_sdma,
        collect_trace=args.trace is not None,
    )
    bench.write_csv(records, args.out, timing=args.timing)
    if args.trace is not None:
        bench.write_trace(traces, args.trace)
    json.dump(summary, sys.stdout)
    sys.stdout.write("\n")
    return 0


# ----------------------- validate subcommand -----------------------

def _check_allocation(seed):
    rng = np.random.default_rng(seed)
    for _ in range(300):
        K = int(rng.integers(1, 6))
        delta = rng.uniform(0.0, 2.0, K)
        delta[int(rng.integers(0, K))] += 0.1        # keep max positive
        r0 = rng.uniform(0.0, 3.0, K)
        c = allocate_common_rate(delta, r0)
        c_lp, v_lp = oracle.lp_allocate(delta, r0)
        if not (np.array_equal(c, c_lp) and float(np.dot(delta, c)) == v_lp):
            return False, "vertex mismatch"
    return True, "300 random instances exact"


def _check_tightness(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(200):
        L, K = 4, 4
        H = (rng.standard_normal((L, K)) + 1j * rng.standard_normal((L, K))) / np.sqrt(2)
        W = rng.standard_normal((L, K + 1)) + 1j * rng.standard_normal((L, K + 1))
        sigma2 = np.full(K, 1.0)
        aux = make_aux(W, H, sigma2)
        g0 = g_common_all(W, H, sigma2, aux)
        gp = g_private_all(W, H, sigma2, aux)
        G = H.conj().T @ W
        P = G.real**2 + G.imag**2
        priv = P[:, 1:].sum(axis=1)
        own = P[np.arange(K), 1 + np.arange(K)]
        r0 = np.log1p(P[:, 0] / (priv + sigma2))
        rp = np.log1p(own / (priv - own + sigma2))
        worst = max(worst, float(np.max(np.abs(g0 - r0))), float(np.max(np.abs(gp - rp))))
    return worst < 1e-9, "max |g - rate| = %.2e" % worst


def _check_inner_agreement(seed):
    from .beamstruct import hfpi_solve
    from .fp_core import fp_objective
    from .solver import initialize_beamformers

    worst = 0.0
    for s in range(2):
        cfg = SystemConfig(L=2, K=2, Pt=10.0, tol_inner=1e-7, max_inner=20000)
        H = generate_channel(cfg, seed + 17 * s)
        # freeze the surrogate where a solve would first freeze it
        aux = make_aux(initialize_beamformers(H, cfg), H, cfg.sigma2)
        lam0 = np.full(cfg.K, cfg.delta_max / cfg.K)
        W, _, y = hfpi_solve(H, cfg.sigma2, aux, cfg, lam0, 1.0)
        obj = fp_objective(W, y, aux, H, cfg)
        ref = oracle.reference_inner_solve(H, cfg.sigma2, aux, cfg, max_steps=40000)
        worst = max(worst, abs(obj - ref.objective) / max(1.0, abs(ref.objective)))
    return worst < 1e-3, "max relative gap %.2e" % worst


def _check_single_cell(seed):
    cfg = SystemConfig(L=1, K=1, Pt=100.0)
    H = generate_channel(cfg, seed)
    cap = float(np.log1p(cfg.Pt * np.abs(H[0, 0]) ** 2 / cfg.sigma2[0]))
    sol = solve(H, cfg)
    return abs(sol.report.wsr - cap) < 1e-3, "wsr %.6f vs capacity %.6f" % (
        sol.report.wsr,
        cap,
    )


def _check_dual_invariants(seed):
    cfg = SystemConfig(L=4, K=4, Pt=100.0)
    H = generate_channel(cfg, seed)
    sol = solve(H, cfg)
    d = sol.duals
    ok = (
        sol.converged
        and abs(d.lam.sum() - cfg.delta_max) < 1e-10
        and np.all(d.lam >= 0)
        and d.mu >= 1e-12
        and float(np.vdot(sol.W, sol.W).real) <= cfg.Pt * (1 + 1e-6)
        and float(np.max(np.abs(d.compl_residuals))) < cfg.tol_inner
    )
    return ok, "sum(lam)=%.12f mu=%.3g" % (d.lam.sum(), d.mu)


def _check_restart_gap(seed):
    cfg = SystemConfig(L=2, K=2, Pt=10.0)
    H = generate_channel(cfg, seed)
    res = oracle.global_search(H, cfg, restarts=20, refine_steps=200, seed=seed)
    ok = res.base_wsr >= 0.99 * res.wsr - 1e-9
    return ok, "solver %.6f vs search %.6f" % (res.base_wsr, res.wsr)


def _cmd_validate(args):
    checks = [
        ("common-rate split vs LP vertex enumeration", _check_allocation),
        ("surrogate tightness at refreshed aux", _check_tightness),
        ("inner fixed point vs subgradient reference", _check_inner_agreement),
        ("single-cell closed-form capacity", _check_single_cell),
        ("dual invariants at converged exit", _check_dual_invariants),
        ("restart search gap within 1 percent", _check_restart_gap),
    ]
    failures = 0
    for name, fn in checks:
        ok, detail = fn(args.seed)
        status = "ok  " if ok else "FAIL"
        print("[%s] %-45s %s" % (status, name, detail))
        failures += 0 if ok else 1
    print("%d/%d checks passed" % (len(checks) - failures, len(checks)))
    return 0 if failures == 0 else 2


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _ArgumentError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except SystemExit as exc:          # --help / --version
        return int(exc.code or 0)
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "montecarlo":
            return _cmd_montecarlo(args)
        return _cmd_validate(args)
    except _ArgumentError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except (ChannelFileError, ConfigError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


def main():
    sys.exit(cli_main())
