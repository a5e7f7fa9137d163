"""Command-line front end.

Subcommands wrap the library operations and emit CSV.  Exit codes:
0 success, 2 parse or validation failure, 3 numerical failure,
4 violated precondition (e.g. asymptotics of a null-recurrent model).
Phase indices on the command line are 0-based.
"""

import argparse
import csv
import sys

import numpy as np

from . import bench as bench_mod
from . import mapph
from .errors import (ModelError, ModelParseError, NumericalError,
                     PreconditionError, QbdError, StructuralError)
from .gmatrices import gmatrices
from .model import (assemble_generator, classify_drift, load_model,
                    save_model, validate)
from .oracle import (oracle_deviation, oracle_passage, oracle_stationary,
                     oracle_transient_deviation)
from .passage import deviation_matrix_diffeq, passage_column
from .perturbation import deviation_recursive, resolvent_recursive
from .stationary import stationary_rmatrix
from .transform import (InversionConfig, deviation_time, invert_laplace,
                        reward_time, transform_context)

_EXIT_CODES = (
    (ModelParseError, 2), (StructuralError, 2), (ModelError, 2),
    (PreconditionError, 4), (NumericalError, 3), (QbdError, 3),
)


def _open_output(path):
    return open(path, "w", newline="") if path else sys.stdout


def _write_rows(path, header, rows):
    out = _open_output(path)
    try:
        writer = csv.writer(out)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v
                             for v in row])
    finally:
        if out is not sys.stdout:
            out.close()


def _matrix_rows(mat, n):
    """(k, l, i, j, value) rows of a block-structured matrix."""
    size = mat.shape[0]
    for a in range(size):
        for b in range(mat.shape[1]):
            yield (a // n, b // n, a % n, b % n, float(np.real(mat[a, b])))


def _parse_t_grid(spec):
    parts = spec.split(":")
    if len(parts) != 3:
        raise ModelParseError("--t-grid must look like start:stop:step")
    start, stop, step = (float(p) for p in parts)
    if step <= 0 or stop < start or start < 0:
        raise ModelParseError("--t-grid needs 0 <= start <= stop and step > 0")
    return list(np.arange(start, stop + step / 2, step))


def _phase_distribution(spec, blocks):
    if spec == "alpha":
        return classify_drift(blocks).alpha
    if spec == "uniform":
        return np.ones(blocks.n) / blocks.n
    try:
        dist = np.array([float(x) for x in spec.split(",")])
    except ValueError as exc:
        raise ModelParseError(f"bad --phase-dist: {exc}") from exc
    if dist.size != blocks.n or dist.min() < 0 or abs(dist.sum() - 1) > 1e-9:
        raise ModelParseError(
            f"--phase-dist needs {blocks.n} nonnegative entries summing to 1")
    return dist


def _rewards_for(args, blocks, file_rewards):
    if args.theta is not None and args.gamma is not None:
        return mapph.gained_revenue_rewards(blocks, args.theta, args.gamma)
    if args.theta is not None:
        return mapph.lost_revenue_rewards(blocks, args.theta)
    if file_rewards is not None:
        return file_rewards
    raise ModelParseError(
        "no rewards: embed them in the model file or pass --theta/--gamma")


def cmd_validate(args):
    blocks, _ = load_model(args.model)
    report = validate(blocks)
    for violation in report:
        print(violation)
    if report:
        raise StructuralError(f"{len(report)} invariant violation(s)")


def cmd_stationary(args):
    blocks, _ = load_model(args.model)
    if args.method == "oracle":
        pi = oracle_stationary(assemble_generator(blocks))
        rows_by_level = [pi[k * blocks.n:(k + 1) * blocks.n]
                         for k in range(blocks.C + 1)]
    elif args.method == "perturb":
        state = deviation_recursive(blocks)
        rows_by_level = [state.pi[k * blocks.n:(k + 1) * blocks.n]
                         for k in range(blocks.C + 1)]
    else:
        rows_by_level = list(stationary_rmatrix(blocks).pi)
    rows = [(k, i, float(v)) for k, row in enumerate(rows_by_level)
            for i, v in enumerate(row)]
    _write_rows(args.output, ("level", "phase", "probability"), rows)


def cmd_gmatrix(args):
    blocks, _ = load_model(args.model)
    gm = gmatrices(blocks, args.s)
    rows = []
    for name, mat in (("G", gm.G), ("Ghat", gm.Ghat), ("H0", gm.H0)):
        for i in range(blocks.n):
            for j in range(blocks.n):
                rows.append((name, i, j, float(np.real(mat[i, j]))))
    rows.append(("residual_G", 0, 0, gm.residual_G))
    rows.append(("residual_Ghat", 0, 0, gm.residual_Ghat))
    _write_rows(args.output, ("matrix", "i", "j", "value"), rows)


def cmd_reward(args):
    blocks, file_rewards = load_model(args.model)
    rewards = _rewards_for(args, blocks, file_rewards)
    dist = _phase_distribution(args.phase_dist, blocks)
    if args.t_grid:
        t_values = _parse_t_grid(args.t_grid)
    elif args.t is not None:
        t_values = [args.t]
    else:
        raise ModelParseError("pass --t or --t-grid")
    levels = (list(range(blocks.C + 1)) if args.levels is None
              else [int(x) for x in args.levels.split(",")])
    rows = []
    for t in t_values:
        full = reward_time(blocks, rewards, t)
        for k in levels:
            value = float(dist @ full[k * blocks.n:(k + 1) * blocks.n])
            rows.append((float(t), k, value))
    _write_rows(args.output, ("t", "level", "value"), rows)


def cmd_deviation(args):
    blocks, _ = load_model(args.model)
    n = blocks.n
    if args.method == "oracle":
        q = assemble_generator(blocks)
        pi = oracle_stationary(q)
        dev = (oracle_deviation(q, pi) if args.t is None
               else oracle_transient_deviation(q, pi, args.t))
    elif args.method == "perturb":
        if args.t is None:
            dev = deviation_recursive(blocks).dev
        else:
            def evaluator(s):
                return resolvent_recursive(blocks, s)[1]
            dev = invert_laplace(evaluator, args.t, InversionConfig())
    else:
        dev = (deviation_matrix_diffeq(blocks) if args.t is None
               else deviation_time(blocks, args.t))
    rows = _matrix_rows(dev, n)
    if args.block:
        try:
            k, level = (int(x) for x in args.block.split(","))
        except ValueError as exc:
            raise ModelParseError("--block must look like K,L") from exc
        rows = [r for r in rows if r[0] == k and r[1] == level]
    _write_rows(args.output, ("k", "l", "i", "j", "value"), rows)


def cmd_passage(args):
    blocks, _ = load_model(args.model)
    if args.method == "oracle":
        q = assemble_generator(blocks)
        m = oracle_passage(q, args.level * blocks.n + args.phase)
        levels = [m[k * blocks.n:(k + 1) * blocks.n]
                  for k in range(blocks.C + 1)]
    else:
        levels = passage_column(blocks, args.level, args.phase).m
    rows = [(k, i, float(v)) for k, vec in enumerate(levels)
            for i, v in enumerate(vec)]
    _write_rows(args.output, ("level", "phase", "mean_first_passage"), rows)


def cmd_bench(args):
    n_values = _parse_range(args.n_range)
    c_values = _parse_range(args.c_range)
    records = bench_mod.run_bench(n_values, c_values, reps=args.reps,
                                  seed=args.seed)
    rows = [(r.n, r.C, r.method, r.mean_cpu_seconds, r.repetitions, r.seed)
            for r in records]
    _write_rows(args.output, ("n", "C", "method", "mean_cpu_seconds",
                              "reps", "seed"), rows)


def cmd_mapph_build(args):
    map_params, ph_params, C = mapph.load_params(args.params)
    blocks = mapph.build_blocks(map_params, ph_params, C)
    rewards = None
    if args.theta is not None and args.gamma is not None:
        rewards = mapph.gained_revenue_rewards(blocks, args.theta, args.gamma)
    elif args.theta is not None:
        rewards = mapph.lost_revenue_rewards(blocks, args.theta)
    save_model(args.output, blocks, rewards)


def _parse_range(spec):
    parts = [int(x) for x in spec.split(":")]
    if len(parts) == 1:
        return parts
    if len(parts) == 2:
        return list(range(parts[0], parts[1] + 1))
    if len(parts) == 3:
        return list(range(parts[0], parts[1] + 1, parts[2]))
    raise ModelParseError("range must look like a, a:b or a:b:step")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qbdr",
        description="Rewards, deviation matrices and passage times of "
                    "finite QBD processes")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=func)
        return p

    p = add("validate", cmd_validate, help="check model invariants")
    p.add_argument("--model", required=True)

    p = add("stationary", cmd_stationary, help="stationary distribution")
    p.add_argument("--model", required=True)
    p.add_argument("--method", choices=["rmatrix", "oracle", "perturb"],
                   default="rmatrix")
    p.add_argument("--output")

    p = add("gmatrix", cmd_gmatrix, help="G(s), Ghat(s) and H0(s)")
    p.add_argument("--model", required=True)
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--output")

    p = add("reward", cmd_reward, help="expected cumulative reward")
    p.add_argument("--model", required=True)
    p.add_argument("--t", type=float)
    p.add_argument("--t-grid")
    p.add_argument("--levels", help="comma-separated initial levels")
    p.add_argument("--phase-dist", default="alpha",
                   help="alpha, uniform, or comma-separated weights")
    p.add_argument("--theta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--output")

    p = add("deviation", cmd_deviation, help="deviation matrix or blocks")
    p.add_argument("--model", required=True)
    p.add_argument("--method", choices=["diffeq", "perturb", "oracle"],
                   default="diffeq")
    p.add_argument("--t", type=float, help="transient horizon (omit for "
                                           "the asymptotic matrix)")
    p.add_argument("--block", help="restrict output to block K,L")
    p.add_argument("--output")

    p = add("passage", cmd_passage, help="mean first passage times")
    p.add_argument("--model", required=True)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--phase", type=int, required=True,
                   help="target phase, 0-based")
    p.add_argument("--method", choices=["diffeq", "oracle"],
                   default="diffeq")
    p.add_argument("--output")

    p = add("bench", cmd_bench, help="two-method CPU-time benchmark")
    p.add_argument("--n-range", default="2:5")
    p.add_argument("--c-range", default="5:100:5")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")

    p = add("mapph-build", cmd_mapph_build, help="build a MAP/PH/1/C model")
    p.add_argument("--params", required=True)
    p.add_argument("--theta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--output", required=True)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except QbdError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        for cls, code in _EXIT_CODES:
            if isinstance(exc, cls):
                return code
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
