"""``shiftforge`` command-line interface.

Subcommands::

    shiftforge solve-for-u    INSTANCE --support FILE [--out RULE]
    shiftforge dual-opt       INSTANCE [--out RULE] [--plot CSV] [--trace CSV]
    shiftforge sparse-optimal INSTANCE [--out RULE]
    shiftforge verify         RULE [INSTANCE] [--circuit JSON]

``INSTANCE`` may be replaced by ``--xi "1;2;3" --alpha 1``. Exit codes:
0 ok, 1 input error, 2 infeasible support, 3 iteration limit, 4 set not
pointy, 5 verification failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import NamedTuple, Sequence, TextIO

import numpy as np

from . import __version__
from .errors import (IterationLimit, NotPointy, ParseError, ShiftForgeError,
                     UnsupportedDimension)
from .formats import (Instance, build_instance, read_circuit, read_instance, read_rule,
                      read_support, write_csv, write_rule)
from .freqset import scale_to_integers
from .optimize import (Certificate, analytic_dual, analytic_value, certify, dual_from_function,
                       recover_from_basis, solve_dual, sparse_recover)
from .pqcsim import CircuitSpec, expectation_trigpoly
from .shiftrule import ShiftRule, apply, cost, residual, solve_fixed_support
from .trigpoly import partial, sample_cell

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_INFEASIBLE = 2
EXIT_ITERATION_LIMIT = 3
EXIT_NOT_POINTY = 4
EXIT_VERIFY = 5

PLOT_POINTS = 1024
FD_STEP = 1e-5
FD_RTOL = 1e-5
FD_SAMPLES = 20

log = logging.getLogger("shiftforge")


def _emit(out: TextIO, key: str, value) -> None:
    if isinstance(value, float):
        value = f"{value:.12g}"
    print(f"{key}: {value}", file=out)


def _format_atoms(rule: ShiftRule) -> str:
    return "; ".join(
        "(" + ", ".join(f"{c:.10g}" for c in p) + f") -> {u:.12g}" for p, u in zip(rule.points, rule.coeffs)
    ) or "(empty)"


class CommandResult(NamedTuple):
    """Exit code of a command plus the certificate it produced, if any."""

    code: int
    certificate: Certificate | None = None


# --- commands -----------------------------------------------------------------

def cmd_solve_for_u(inst: Instance, support, out_path=None, out: TextIO = sys.stdout) -> CommandResult:
    """Best rule on a fixed support; exit 2 when no feasible rule lives there."""
    res = solve_fixed_support(inst.freqs, inst.target, support, feas_tol=inst.config.feas_tol,
                              tol=inst.config.lp_tol)
    _emit(out, "status", "feasible" if res.feasible else "infeasible")
    _emit(out, "cost", cost(res.rule))
    _emit(out, "residual", residual(res.rule, inst.freqs, inst.target))
    _emit(out, "l2_gap", res.l2_gap)
    _emit(out, "rule", _format_atoms(res.rule))
    if out_path:
        write_rule(out_path, res.rule, inst, {"cost": cost(res.rule), "l2_gap": res.l2_gap})
    return CommandResult(EXIT_OK if res.feasible else EXIT_INFEASIBLE)


def _write_plot(path, f_star, freqs) -> None:
    periods = [float(s) for s in scale_to_integers(freqs)[1].factors] if freqs.xi_plus else [1.0] * freqs.dim
    pts, vals = sample_cell(f_star, PLOT_POINTS, periods)
    header = [f"a{j + 1}" for j in range(freqs.dim)] + ["f_star"]
    write_csv(path, header, (list(map(float, p)) + [float(v)] for p, v in zip(pts, vals)))


def cmd_dual_opt(inst: Instance, out_path=None, plot_path=None, trace_path=None,
                 out: TextIO = sys.stdout) -> CommandResult:
    """Cutting-plane dual, rule recovery and certificate."""
    code = EXIT_OK
    try:
        dual = solve_dual(inst.freqs, inst.alpha, inst.config)
    except IterationLimit as exc:
        _emit(out, "error", str(exc))
        if exc.best is None:
            return CommandResult(EXIT_ITERATION_LIMIT)
        dual, code = exc.best, EXIT_ITERATION_LIMIT
    rule = recover_from_basis(inst.freqs, inst.alpha, dual, inst.config)
    cert = certify(rule, inst.freqs, inst.alpha, dual, inst.config)
    _emit(out, "value", dual.value)
    _emit(out, "cost", cert.cost)
    _emit(out, "gap", cert.gap)
    _emit(out, "residual", cert.feasibility_residual)
    _emit(out, "support_size", len(rule))
    _emit(out, "iterations", dual.iterations)
    _emit(out, "rule", _format_atoms(rule))
    _emit(out, "verdict", cert.verdict)
    if out_path:
        write_rule(out_path, rule, inst, {"cost": cert.cost, "value": dual.value,
                                          "residual": cert.feasibility_residual})
    if plot_path:
        _write_plot(plot_path, dual.f_star, inst.freqs)
    if trace_path:
        write_csv(trace_path, ["iteration", "n_points", "lp_value", "max_violation"],
                  ([r.iteration, r.n_points, float(r.lp_value), float(r.max_violation)] for r in dual.trace))
    if code == EXIT_OK and not cert.optimal:
        code = EXIT_VERIFY
    return CommandResult(code, cert)


def cmd_sparse_optimal(inst: Instance, out_path=None, out: TextIO = sys.stdout) -> CommandResult:
    """Closed-form dual optimum followed by one sparse LP."""
    try:
        f_star = analytic_dual(inst.freqs, inst.alpha)
    except NotPointy as exc:
        _emit(out, "error", f"{exc}; run dual-opt instead")
        return CommandResult(EXIT_NOT_POINTY)
    rule = sparse_recover(inst.freqs, inst.alpha, f_star, inst.config)
    dual = dual_from_function(inst.freqs, inst.alpha, f_star)
    cert = certify(rule, inst.freqs, inst.alpha, dual, inst.config)
    _emit(out, "value", dual.value)
    _emit(out, "cost", cert.cost)
    _emit(out, "gap", cert.gap)
    _emit(out, "residual", cert.feasibility_residual)
    _emit(out, "support_size", len(rule))
    if inst.freqs.dim == 1:
        bound = len(inst.freqs) - inst.alpha[0] % 2
        _emit(out, "support_bound", bound)
        _emit(out, "within_bound", len(rule) <= bound)
    _emit(out, "rule", _format_atoms(rule))
    _emit(out, "verdict", cert.verdict)
    if out_path:
        write_rule(out_path, rule, inst, {"cost": cert.cost, "value": dual.value,
                                          "residual": cert.feasibility_residual})
    return CommandResult(EXIT_OK if cert.optimal else EXIT_VERIFY, cert)


def finite_difference_check(rule: ShiftRule, spec: CircuitSpec, alpha, seed: int,
                            samples: int = FD_SAMPLES, step: float = FD_STEP):
    """Compare the rule against a central difference of the simulated expectation.

    The difference is taken along the first axis ``j`` with ``alpha_j >= 1``
    and applied to the exact lower-order derivative ``d^(alpha - e_j) f``.
    Returns ``(worst relative error, points, rule values, difference values)``.
    """
    f = expectation_trigpoly(spec)
    alpha = tuple(alpha)
    j = next(i for i, a in enumerate(alpha) if a >= 1)
    beta = list(alpha)
    beta[j] -= 1
    g = partial(f, beta)
    rng = np.random.default_rng(seed)
    xs = rng.uniform(-0.5, 0.5, size=(samples, f.dim))
    e = np.zeros(f.dim)
    e[j] = step
    got = np.array([apply(rule, f, x) for x in xs])
    fd = np.array([(g(x + e) - g(x - e)) / (2 * step) for x in xs])
    err = np.abs(got - fd) / np.maximum(1.0, np.abs(fd))
    return float(np.max(err)), xs, got, fd


def cmd_verify(rule: ShiftRule, inst: Instance, circuit: CircuitSpec | None = None, seed: int = 42,
               out: TextIO = sys.stdout) -> CommandResult:
    """Residual, weak-duality and optional simulator checks; exit 5 on any failure."""
    ok = True
    if rule.dim != inst.freqs.dim:
        _emit(out, "error", f"rule has dim {rule.dim}, instance has dim {inst.freqs.dim}")
        return CommandResult(EXIT_PARSE)
    c = cost(rule)
    res = residual(rule, inst.freqs, inst.target) if inst.freqs.xi_plus else abs(float(rule.coeffs.sum()))
    feasible = res <= inst.config.feas_tol
    ok &= feasible
    _emit(out, "cost", c)
    _emit(out, "residual", res)
    _emit(out, "check_residual", "pass" if feasible else "FAIL")
    try:
        lower = analytic_value(inst.freqs, inst.alpha)
    except NotPointy:
        lower = None
    if lower is not None:
        weak = lower <= c + inst.config.cert_tol(lower)
        _emit(out, "optimal_value", lower)
        _emit(out, "gap", c - lower)
        _emit(out, "check_weak_duality", "pass" if weak else "FAIL")
        ok &= weak
    else:
        _emit(out, "check_weak_duality", "skipped (no closed-form optimum)")
    if circuit is not None:
        if circuit.dim != inst.freqs.dim:
            _emit(out, "error", "circuit parameter count differs from the instance dimension")
            return CommandResult(EXIT_PARSE)
        spectrum = expectation_trigpoly(circuit).freqs
        inside = set(spectrum.points) <= set(inst.freqs.points)
        _emit(out, "check_circuit_spectrum", "pass" if inside else "FAIL")
        ok &= inside
        worst, *_ = finite_difference_check(rule, circuit, inst.alpha, seed)
        fd_ok = worst <= FD_RTOL
        _emit(out, "fd_max_rel_error", worst)
        _emit(out, "check_finite_difference", "pass" if fd_ok else "FAIL")
        ok &= fd_ok
    _emit(out, "verdict", "PASS" if ok else "FAIL")
    return CommandResult(EXIT_OK if ok else EXIT_VERIFY)


# --- argument handling --------------------------------------------------------

def _instance_from_args(args, path=None, fallback: Instance | None = None) -> Instance:
    overrides = {k: getattr(args, k) for k in ("delta", "epsilon", "seed") if getattr(args, k) is not None}
    if args.xi is not None or args.alpha is not None:
        if args.xi is None or args.alpha is None:
            raise ParseError("--xi and --alpha must be given together")
        values = {"xi_plus": args.xi, "alpha": args.alpha}
        if args.dim is not None:
            values["dim"] = str(args.dim)
        inst = build_instance(values)
    elif path is not None:
        inst = read_instance(path)
    elif fallback is not None:
        inst = fallback
    else:
        raise ParseError("give an instance file or --xi/--alpha")
    if overrides:
        try:
            inst = Instance(inst.freqs, inst.alpha, inst.config.with_(**overrides))
        except ValueError as exc:
            raise ParseError(str(exc)) from exc
    return inst


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--xi", help='positive frequencies, e.g. "1;2;3" or "1,0;0,2"')
    common.add_argument("--alpha", help='derivative multi-index, e.g. "1" or "1,1"')
    common.add_argument("--dim", type=int, help="dimension (needed only when --xi is empty)")
    common.add_argument("--delta", type=float, help="separation tolerance")
    common.add_argument("--epsilon", type=float, help="objective precision")
    common.add_argument("--seed", type=int, help="random seed (default 42)")
    common.add_argument("--out", help="write the resulting rule to this file")

    parser = argparse.ArgumentParser(prog="shiftforge", description="Optimal parameter shift rules.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-for-u", parents=[common], help="best rule on a fixed support")
    p.add_argument("instance", nargs="?")
    p.add_argument("--support", required=True, help="file with one support point per line")

    p = sub.add_parser("dual-opt", parents=[common], help="cutting-plane dual with certificate")
    p.add_argument("instance", nargs="?")
    p.add_argument("--plot", help="CSV of f_star on a 1024-point grid per axis")
    p.add_argument("--trace", help="CSV of the cutting-plane iterations")

    p = sub.add_parser("sparse-optimal", parents=[common], help="sparse rule from the closed-form dual")
    p.add_argument("instance", nargs="?")

    p = sub.add_parser("verify", parents=[common], help="check a rule file")
    p.add_argument("rule")
    p.add_argument("instance", nargs="?")
    p.add_argument("--circuit", help="JSON circuit for a simulator cross-check")
    return parser


def _configure_logging() -> None:
    level = os.environ.get("SHIFTFORGE_LOG")
    if level:
        logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO),
                            format="%(name)s %(levelname)s %(message)s", stream=sys.stderr)


def main(argv: Sequence[str] | None = None, out: TextIO | None = None) -> int:
    out = sys.stdout if out is None else out
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            rule, header_inst = read_rule(args.rule)
            inst = _instance_from_args(args, args.instance, header_inst)
            circuit = read_circuit(args.circuit) if args.circuit else None
            seed = args.seed if args.seed is not None else inst.config.seed
            return cmd_verify(rule, inst, circuit, seed, out).code
        inst = _instance_from_args(args, args.instance)
        if args.command == "solve-for-u":
            return cmd_solve_for_u(inst, read_support(args.support, inst.freqs.dim), args.out, out).code
        if args.command == "dual-opt":
            return cmd_dual_opt(inst, args.out, args.plot, args.trace, out).code
        return cmd_sparse_optimal(inst, args.out, out).code
    except (ParseError, UnsupportedDimension) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ShiftForgeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VERIFY


def main_entry() -> None:
    """Console-script entry point."""
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    main_entry()
