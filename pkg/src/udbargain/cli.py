"""Command-line front end.

Exit status: 0 success, 1 verification failure or no solution, 2 usage or
input error, 3 internal invariant failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import bp, oracle
from .instance import (
    InstanceError,
    generate_random_bipartite,
    generate_random_graph,
    generate_ring,
    parse_instance,
    parse_matching,
    parse_outcome,
    serialize_instance,
    serialize_outcome,
)
from .rebalance import (
    InvariantError,
    RebalanceError,
    SolveConfig,
    SolveStatus,
    slow_progress_demo,
    solve,
)
from .verify import check_eps_correct_division, violation_report

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _load_instance(path: str):
    return parse_instance(_read(path))


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    cfg = SolveConfig(
        epsilon=args.epsilon,
        kappa=args.kappa,
        termination=args.termination,
        step1_backend=args.backend,
        max_iters=args.max_iters,
    )
    res = solve(inst, cfg)
    lines = [f"# status {res.status.value}"]
    for key in sorted(res.certificates):
        if key != "lp_vertex":
            val = res.certificates[key]
            lines.append(f"# {key} {val if isinstance(val, str) else repr(val)}")
    if res.status is not SolveStatus.SOLVED:
        _write(args.output, "\n".join(lines) + "\n")
        return EXIT_FAIL
    lines.append(f"# iterations_step2 {res.iterations_step2}")
    _write(args.output, "\n".join(lines) + "\n" + serialize_outcome(res.outcome))
    if args.trace:
        rows = ["t,residual"] + [f"{t},{x!r}" for t, x in enumerate(res.trace.tolist())]
        Path(args.trace).write_text("\n".join(rows) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_verify(args) -> int:
    inst = _load_instance(args.instance)
    out = parse_outcome(_read(args.outcome), inst.n)
    out.validate(inst, args.tol)
    rep = violation_report(inst, out, args.tol)
    check_eps_correct_division(inst, out, args.tol)
    sys.stdout.write("\n".join(rep.lines(args.epsilon)) + "\n")
    ok = rep.stable and rep.max_residual <= args.epsilon
    return EXIT_OK if ok else EXIT_FAIL


def cmd_generate(args) -> int:
    if args.kind == "ring":
        ring = generate_ring(args.N, args.r, args.pad)
        head = f"# ring N={args.N} r={args.r!r} eps_prime {ring.eps_prime!r} bad_edge {ring.bad_edge[0]} {ring.bad_edge[1]}\n"
        _write(args.output, head + serialize_instance(ring.instance))
        if args.outcome:
            _write(args.outcome, serialize_outcome(ring.outcome))
        return EXIT_OK
    r_range = (args.r_min, args.r_max)
    if args.kind == "bipartite":
        inst = generate_random_bipartite(args.n_left, args.n_right, args.density, args.max_weight, args.seed, r_range)
    else:
        inst = generate_random_graph(args.n, args.density, args.max_weight, args.seed, r_range)
    _write(args.output, serialize_instance(inst))
    return EXIT_OK


def cmd_bp(args) -> int:
    inst = _load_instance(args.instance)
    if args.init == "matching":
        if not args.matching:
            raise UsageError("--init matching requires --matching FILE")
        matching = parse_matching(_read(args.matching))
        res = bp.run_algorithm_A(inst, matching, args.max_iters, args.delta)
    else:
        res = bp.run_bp_mwm(inst, args.max_iters, args.delta, g=args.gap)
    lines = [
        f"# status {res.status.value}",
        f"# iterations {res.iterations}",
        f"# max_iters {res.max_iters}" + (" heuristic" if res.bound_is_heuristic else ""),
    ]
    fp = res.fixed_point
    for u, v, _, _ in inst.edges:
        lines.append(f"# message {u} {v} {fp.msg(u, v)!r}")
        lines.append(f"# message {v} {u} {fp.msg(v, u)!r}")
    text = "\n".join(lines) + "\n"
    if res.outcome is not None:
        text += serialize_outcome(res.outcome)
    _write(args.output, text)
    return EXIT_OK if res.converged else EXIT_FAIL


def cmd_gap(args) -> int:
    inst = _load_instance(args.instance)
    rep = oracle.lp_gap(inst, args.cap)
    lp_value, _ = oracle.fractional_lp_optimum(inst, args.cap)
    sys.stdout.write(
        f"best {rep.best_matching_weight!r}\n"
        f"second {rep.second_best_corner_weight!r}\n"
        f"g {rep.g!r}\n"
        f"unique {'yes' if rep.unique else 'no'}\n"
        f"lp_value {lp_value!r}\n"
        f"integral {'yes' if rep.best_matching_weight >= lp_value - oracle.TOL_EQ else 'no'}\n"
    )
    return EXIT_OK


def cmd_check(args) -> int:
    inst = _load_instance(args.instance)
    out = parse_outcome(_read(args.outcome), inst.n)
    ok = oracle.exact_ud_check(inst, out, args.tol)
    sys.stdout.write(f"ud {'yes' if ok else 'no'}\n")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_demo_slow(args) -> int:
    sys.stderr.write(
        "WARNING: demo-slow starts rebalancing from an UNSTABLE outcome on purpose.\n"
        "It shows that without stability, progress toward an approximate solution\n"
        "can take exponentially many iterations. Do not use it to solve instances.\n"
    )
    rep = slow_progress_demo(args.N, args.r, args.kappa, args.max_iters)
    first = "none" if rep.first_half_stable is None else str(rep.first_half_stable)
    sys.stdout.write(
        f"N {rep.N}\n"
        f"nodes {8 * rep.N}\n"
        f"r {rep.r!r}\n"
        f"kappa {rep.kappa!r}\n"
        f"weight_bound {rep.weight_bound!r}\n"
        f"eps_prime {rep.eps_prime!r}\n"
        f"initial_residual {rep.initial_residual!r}\n"
        f"bad_edge {rep.bad_edge[0]} {rep.bad_edge[1]}\n"
        f"initial_deficit {rep.initial_deficit!r}\n"
        f"max_step_change {rep.max_step_change!r}\n"
        f"lower_bound {rep.lower_bound}\n"
        f"first_half_stable {first}\n"
        f"iterations {rep.iterations}\n"
    )
    ok = rep.first_half_stable is None or rep.first_half_stable >= rep.lower_bound
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="udbargain", description="Approximate unequal-division solutions for bargaining networks.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="compute an epsilon-UD solution")
    s.add_argument("instance")
    s.add_argument("--epsilon", type=float, default=1e-3)
    s.add_argument("--kappa", type=float, default=0.5)
    s.add_argument("--backend", choices=["oracle", "bp"], default="oracle")
    s.add_argument("--termination", choices=["residual", "fixed"], default="residual")
    s.add_argument("--max-iters", type=int, default=None)
    s.add_argument("--trace", help="write t,residual CSV here")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("verify", help="report stability violations and division residuals")
    s.add_argument("instance")
    s.add_argument("outcome")
    s.add_argument("--epsilon", type=float, default=1e-9)
    s.add_argument("--tol", type=float, default=1e-9)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("generate", help="write a generated instance")
    gen = s.add_subparsers(dest="kind", required=True)
    g = gen.add_parser("ring", help="adversarial ring on 8N nodes")
    g.add_argument("--N", type=int, required=True)
    g.add_argument("--r", type=float, required=True)
    g.add_argument("--pad", type=int, default=0)
    g.add_argument("--outcome", help="write the unstable outcome here")
    g.add_argument("-o", "--output")
    for name in ("bipartite", "graph"):
        g = gen.add_parser(name)
        if name == "bipartite":
            g.add_argument("--n-left", type=int, required=True)
            g.add_argument("--n-right", type=int, required=True)
        else:
            g.add_argument("--n", type=int, required=True)
        g.add_argument("--density", type=float, default=1.0)
        g.add_argument("--max-weight", type=float, default=1.0)
        g.add_argument("--seed", type=int, default=0)
        g.add_argument("--r-min", type=float, default=0.1)
        g.add_argument("--r-max", type=float, default=0.9)
        g.add_argument("-o", "--output")
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("bp", help="run max-product belief propagation")
    s.add_argument("instance")
    s.add_argument("--init", choices=["zero", "matching"], default="zero")
    s.add_argument("--matching")
    s.add_argument("--max-iters", type=int, default=None)
    s.add_argument("--delta", type=float, default=bp.DELTA)
    s.add_argument("--gap", type=float, default=None, help="LP gap; sets the default iteration budget")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_bp)

    s = sub.add_parser("gap", help="LP gap and integrality by enumeration")
    s.add_argument("instance")
    s.add_argument("--cap", type=int, default=oracle.DEFAULT_EDGE_CAP)
    s.set_defaults(func=cmd_gap)

    s = sub.add_parser("check", help="exact UD check by the oracle")
    s.add_argument("instance")
    s.add_argument("outcome")
    s.add_argument("--tol", type=float, default=1e-9)
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("demo-slow", help="slow rebalancing from the ring's unstable outcome")
    s.add_argument("--N", type=int, default=8)
    s.add_argument("--r", type=float, default=1 / 3)
    s.add_argument("--kappa", type=float, default=0.5)
    s.add_argument("--max-iters", type=int, default=None)
    s.set_defaults(func=cmd_demo_slow)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, InstanceError, RebalanceError, oracle.OracleCapError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except InvariantError as exc:
        sys.stderr.write(f"internal error: {exc}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
