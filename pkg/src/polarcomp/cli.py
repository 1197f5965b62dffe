"""Experiment runner: one subcommand per reproducible artifact.

Numeric series are written as CSV (with seed/config-hash provenance
comments), manifests and configs as JSON; no plotting happens in-process.
Every stochastic command requires a seed, and re-running a command with the
same configuration and seed produces byte-identical data files.

Exit codes: 0 ok, 2 validation error, 3 runtime error (undecodable pattern,
conditioning failure, divergence). Errors are emitted as JSON on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import kernels
from .bench import bench_codes, bench_kernels
from .blockio import (
    config_hash,
    load_block,
    save_block,
    save_grid_manifest,
    write_csv,
)
from .blocks import PartitionedMatrix
from .coding import decode, encode
from .construction import (
    build_construction,
    construction_to_dict,
    load_construction,
    save_construction,
)
from .errors import (
    ConditioningError,
    DivergenceError,
    FetchError,
    UndecodablePatternError,
    ValidationError,
)
from .gradient import LeastSquaresProblem, gd_solve
from .kernel_theory import check_polarizing_by_simulation, encode_cost, is_polarizing
from .matmul2d import compute_product_grid, decode_2d, encode_2d
from .runtime import default_model, load_model, model_to_config, polarize_cdf
from .simulate import BackendConfig, run_coded_matvec, simulate_decodability_time


def _add_common(p: argparse.ArgumentParser, seed: bool = True) -> None:
    if seed:
        p.add_argument("--seed", type=int, default=0, help="RNG seed (stamped into outputs)")
    p.add_argument("--config", type=Path, default=None, help="runtime-model config JSON")
    p.add_argument("--out", type=Path, default=None, help="output path")
    p.add_argument("--threads", type=int, default=4, help="worker threads (live pool mode)")


def _model(args):
    return load_model(args.config) if args.config else default_model()


_NON_CONFIG_ARGS = {"func", "require_out", "out", "timeline", "cells_dir", "out_dir"}


def _provenance(args, extra=None) -> dict:
    # hash the experiment parameters, not the output destinations
    cfg = {k: str(v) for k, v in sorted(vars(args).items()) if k not in _NON_CONFIG_ARGS}
    if extra:
        cfg.update(extra)
    header = {"config": config_hash(cfg)}
    if "seed" in cfg:
        header["seed"] = cfg["seed"]
    return header


def _load_or_build_construction(args):
    if getattr(args, "construction", None):
        return load_construction(args.construction)
    if args.n is None:
        raise ValidationError("pass --construction or --n/--epsilon")
    return build_construction(args.n, args.epsilon, getattr(args, "n_data", None))


# ------------------------------------------------------------ commands ----


def cmd_construct(args) -> int:
    c = build_construction(args.n, args.epsilon, args.n_data)
    print("channel  erasure_prob  role")
    for i, p in enumerate(c.channel_probs):
        role = "frozen" if c.is_frozen(i) else "data"
        print(f"{i:7d}  {p:.6f}      {role}")
    print(f"channel_probs: {list(c.channel_probs)}")
    print(f"frozen_set: {set(c.frozen_set)}")
    print(f"sum(channel_probs) = {sum(c.channel_probs)!r} (N*epsilon = {c.n_workers * c.epsilon!r})")
    if args.out:
        save_construction(args.out, c)
        print(f"wrote {args.out}")
    return 0


def cmd_encode(args) -> int:
    c = _load_or_build_construction(args)
    matrix = load_block(args.matrix)
    part = PartitionedMatrix.partition(matrix, c.n_data)
    coded = encode(c, part)
    out_dir = args.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    for w, block in enumerate(coded):
        save_block(out_dir / f"worker_{w:03d}.block", block)
    meta = {"rows": matrix.shape[0], "cols": matrix.shape[1],
            "construction": construction_to_dict(c)}
    (out_dir / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"wrote {c.n_workers} coded blocks to {out_dir}")
    return 0


def cmd_decode(args) -> int:
    c = _load_or_build_construction(args)
    outputs = []
    for w in range(c.n_workers):
        path = args.blocks_dir / f"worker_{w:03d}.block"
        if path.exists():
            outputs.append((w, load_block(path)))
    result = decode(c, outputs, x_cols=args.x_cols)
    full = result.stack(strip_padding=False)
    meta_path = args.blocks_dir / "meta.json"
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        full = full[: meta["rows"], : meta["cols"]]
    save_block(args.out, full)
    print(f"decoded {len(outputs)} of {c.n_workers} outputs -> {args.out}")
    return 0


def cmd_kernel_check(args) -> int:
    entries = [float(v) for v in args.entries.split(",")]
    if len(entries) != 4:
        raise ValidationError("--entries must be 'K11,K12,K21,K22'")
    k = np.array(entries).reshape(2, 2)
    polarizing = is_polarizing(k)
    doc = {
        "kernel": entries,
        "polarizing": polarizing,
        "cost": list(encode_cost(k)) if polarizing else None,
    }
    if args.trials:
        doc["simulation_polarizing"] = check_polarizing_by_simulation(k, args.trials, args.seed)
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def cmd_bench_codes(args) -> int:
    n_list = [int(v) for v in args.n_list.split(",")]
    columns, rows = bench_codes(
        n_list, rate=args.rate, acols=args.acols, xcols=args.xcols,
        points=args.points, seed=args.seed, min_time=args.min_time,
    )
    out = args.out or Path("bench_codes.csv")
    write_csv(out, _provenance(args), columns, rows)
    print(f"wrote {out}")
    return 0


def cmd_bench_kernels(args) -> int:
    sizes = [int(v) for v in args.sizes.split(",")]
    columns, rows = bench_kernels(sizes=sizes, trials=args.trials, seed=args.seed)
    out = args.out or Path("bench_kernels.csv")
    write_csv(out, _provenance(args), columns, rows)
    for op, backend, n, per, rate in rows:
        print(f"{op:16s} {backend:9s} n={n:<4d} {per * 1e6:10.1f} us/call")
    if not kernels.COMPILED_AVAILABLE:
        print("note: compiled backend unavailable; showing pure Python only")
    print(f"wrote {out}")
    return 0


def cmd_polarize(args) -> int:
    model = _model(args)
    cdfs = polarize_cdf(model.delay, args.n)
    lo, hi = model.delay.support()
    grid = np.linspace(lo, hi, args.points)
    rows = [
        [t] + [float(cdf.evaluate(t)) for cdf in cdfs]
        for t in grid
    ]
    columns = ["t"] + [f"channel_{i}" for i in range(args.n)]
    out = args.out or Path(f"polarize_n{args.n}.csv")
    write_csv(out, _provenance(args, model_to_config(model)), columns, rows)
    print(f"wrote {out}")
    return 0


def cmd_simulate(args) -> int:
    model = _model(args)
    if args.scheme in ("polar2d", "mds2d"):
        if args.n1 is None or args.n2 is None:
            raise ValidationError(f"scheme {args.scheme} requires --n1 and --n2")
        params = {"n1": args.n1, "n2": args.n2,
                  "epsilon1": args.epsilon, "epsilon2": args.epsilon}
    elif args.n is None:
        raise ValidationError(f"scheme {args.scheme} requires --n")
    elif args.scheme == "mds":
        k = args.k if args.k is not None else int(round(args.n * (1 - args.epsilon)))
        params = {"n": args.n, "k": k}
    elif args.scheme == "lt":
        n_input = args.n_data or int(round(args.n * (1 - args.epsilon)))
        params = {"n": args.n, "n_input": n_input, "c": args.lt_c, "delta": args.lt_delta}
    else:
        params = {"n": args.n, "epsilon": args.epsilon, "n_data": args.n_data}
    times = simulate_decodability_time(args.scheme, params, model, args.trials, args.seed)
    out = args.out or Path(f"simulate_{args.scheme}_n{args.n or args.n1}.csv")
    write_csv(out, _provenance(args, model_to_config(model)), ["trial", "time_s"],
              [(t, float(v)) for t, v in enumerate(times)])
    finite = times[np.isfinite(times)]
    mean = float(np.mean(finite)) if finite.size else math.inf
    print(f"{args.scheme}: {finite.size}/{times.size} decodable trials, "
          f"mean decodability time {mean:.4f}s")
    print(f"wrote {out}")
    return 0


def cmd_matvec(args) -> int:
    c = _load_or_build_construction(args)
    a = load_block(args.a)
    x = load_block(args.x)
    backend = BackendConfig(mode=args.mode, threads=args.threads)
    y, timeline = run_coded_matvec(a, x, c, backend=backend, model=_model(args), seed=args.seed)
    out = args.out or Path("matvec_result.block")
    save_block(out, y)
    if args.timeline:
        write_csv(args.timeline, _provenance(args), ["event", "worker", "t"], timeline.rows())
        print(f"wrote timeline {args.timeline}")
    print(f"decodable at {timeline.decodability_time:.4f}s, "
          f"decode done at {timeline.completion_time:.4f}s")
    print(f"wrote {out}")
    return 0


def cmd_matmul2d(args) -> int:
    row_c = build_construction(args.n1, args.epsilon1, args.n_data1)
    col_c = build_construction(args.n2, args.epsilon2, args.n_data2)
    a = load_block(args.a)
    b = load_block(args.b)
    part_a = PartitionedMatrix.partition(a, row_c.n_data)
    part_b = PartitionedMatrix.partition(b, col_c.n_data, axis=1)
    a_coded, b_coded = encode_2d(part_a, part_b, row_c, col_c)
    model = _model(args)
    rng = np.random.default_rng(args.seed)
    n_total = row_c.n_workers * col_c.n_workers
    times = model.sample_finish_times(rng, n_total)
    order = np.argsort(times, kind="stable")
    n_fin = int(np.sum(np.isfinite(times)))
    k = kernels.first_decodable_prefix_2d(
        order, row_c.n_workers, col_c.n_workers,
        row_c.frozen_mask, col_c.frozen_mask, n_fin,
    )
    if k < 0:
        raise UndecodablePatternError("sampled straggler pattern never became decodable")
    cells = [(int(cid) // col_c.n_workers, int(cid) % col_c.n_workers) for cid in order[:k]]
    grid = compute_product_grid(a_coded, b_coded, row_c, col_c, available=cells)
    product = decode_2d(grid)[: a.shape[0], : b.shape[1]]
    out = args.out or Path("matmul2d_result.block")
    save_block(out, product)
    if args.cells_dir:
        args.cells_dir.mkdir(parents=True, exist_ok=True)
        keys = {}
        for i, j in cells:
            key = f"cell_{i:03d}_{j:03d}.block"
            save_block(args.cells_dir / key, grid.cells[i][j])
            keys[(i, j)] = key
        save_grid_manifest(args.cells_dir / "grid_manifest.json", row_c, col_c, keys)
        print(f"wrote {len(keys)} cell payloads + manifest to {args.cells_dir}")
    print(f"decodable with {k}/{n_total} cells at t={float(times[order[k - 1]]):.4f}s")
    print(f"wrote {out}")
    return 0


def cmd_gd(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.a and args.y:
        a = load_block(args.a)
        y = load_block(args.y)
    else:
        a = rng.standard_normal((args.rows, args.cols))
        y = rng.standard_normal((args.rows, args.rhs))
    problem = LeastSquaresProblem(a=a, y=y, mu=args.mu, iterations=args.iters)
    model = _model(args)
    if args.scheme == "coded":
        c = build_construction(args.n, args.epsilon, args.n_data)
        x, trace = gd_solve(problem, "coded", construction=c, model=model, seed=args.seed)
    else:
        workers = args.workers or int(round(args.n * (1 - args.epsilon)))
        x, trace = gd_solve(problem, "uncoded", n_workers=workers, model=model, seed=args.seed)
    out = args.out or Path(f"gd_{args.scheme}.csv")
    columns = ["iter", "virtual_time_s", "iter_seconds", "wait_seconds",
               "decode_seconds", "residual", "worker_seconds", "checksum"]
    rows = [[row[c] for c in columns] for row in trace.iterations]
    write_csv(out, _provenance(args, model_to_config(model)), columns, rows)
    print(f"final residual {trace.residuals()[-1]:.6e} after {args.iters} iterations")
    print(f"wrote {out}")
    return 0


# -------------------------------------------------------------- parser ----


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polarcomp",
        description="Straggler-resilient coded matrix multiplication experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build a code construction")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--n-data", type=int, default=None)
    _add_common(p, seed=False)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("encode", help="encode a matrix into worker blocks")
    p.add_argument("--construction", type=Path)
    p.add_argument("--n", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--n-data", type=int, default=None)
    p.add_argument("--matrix", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    _add_common(p, seed=False)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode available worker blocks")
    p.add_argument("--construction", type=Path)
    p.add_argument("--n", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--n-data", type=int, default=None)
    p.add_argument("--blocks-dir", type=Path, required=True)
    p.add_argument("--x-cols", type=int, default=None)
    _add_common(p, seed=False)
    p.set_defaults(func=cmd_decode)
    # decode --out is required
    p.set_defaults(require_out=True)

    p = sub.add_parser("kernel-check", help="polarizing-kernel check and cost")
    p.add_argument("--entries", required=True, help="K11,K12,K21,K22")
    p.add_argument("--trials", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_kernel_check)

    p = sub.add_parser("bench-codes", help="encode/decode speed, coded codec vs naive RS")
    p.add_argument("--n-list", default="8,16,32,64,128,256,512")
    p.add_argument("--rate", type=float, default=0.5)
    p.add_argument("--acols", type=int, default=128)
    p.add_argument("--xcols", type=int, default=8)
    p.add_argument("--points", default="chebyshev", choices=["chebyshev", "equispaced"])
    p.add_argument("--min-time", type=float, default=0.05)
    _add_common(p)
    p.set_defaults(func=cmd_bench_codes)

    p = sub.add_parser("bench-kernels", help="compiled vs pure decodability kernels")
    p.add_argument("--sizes", default="64,256,512")
    p.add_argument("--trials", type=int, default=200)
    _add_common(p)
    p.set_defaults(func=cmd_bench_kernels)

    p = sub.add_parser("polarize", help="transformed run-time CDFs in channel order")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--points", type=int, default=201)
    _add_common(p, seed=False)
    p.set_defaults(func=cmd_polarize)

    p = sub.add_parser("simulate", help="decodability-time Monte Carlo")
    p.add_argument("--scheme", required=True,
                   choices=["polar", "mds", "lt", "polar2d", "mds2d"])
    p.add_argument("--n", type=int)
    p.add_argument("--n1", type=int)
    p.add_argument("--n2", type=int)
    p.add_argument("--epsilon", type=float, default=0.375)
    p.add_argument("--n-data", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--lt-c", type=float, default=0.03)
    p.add_argument("--lt-delta", type=float, default=0.5)
    p.add_argument("--trials", type=int, default=1000)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("matvec", help="coded matrix-vector multiply with stragglers")
    p.add_argument("--a", type=Path, required=True)
    p.add_argument("--x", type=Path, required=True)
    p.add_argument("--construction", type=Path)
    p.add_argument("--n", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--n-data", type=int, default=None)
    p.add_argument("--mode", default="virtual", choices=["virtual", "live"])
    p.add_argument("--timeline", type=Path, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_matvec)

    p = sub.add_parser("matmul2d", help="two-sided coded matrix multiply")
    p.add_argument("--a", type=Path, required=True)
    p.add_argument("--b", type=Path, required=True)
    p.add_argument("--n1", type=int, required=True)
    p.add_argument("--n2", type=int, required=True)
    p.add_argument("--epsilon1", type=float, default=0.25)
    p.add_argument("--epsilon2", type=float, default=0.25)
    p.add_argument("--n-data1", type=int, default=None)
    p.add_argument("--n-data2", type=int, default=None)
    p.add_argument("--cells-dir", type=Path, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_matmul2d)

    p = sub.add_parser("gd", help="gradient descent with coded or uncoded matmul")
    p.add_argument("--scheme", default="coded", choices=["coded", "uncoded"])
    p.add_argument("--a", type=Path, default=None)
    p.add_argument("--y", type=Path, default=None)
    p.add_argument("--rows", type=int, default=64)
    p.add_argument("--cols", type=int, default=16)
    p.add_argument("--rhs", type=int, default=4)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--n-data", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_gd)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "require_out", False) and args.out is None:
        _emit_error(ValidationError("--out is required for this command"))
        return 2
    try:
        return args.func(args)
    except ValidationError as exc:
        _emit_error(exc)
        return 2
    except (UndecodablePatternError, ConditioningError, DivergenceError, FetchError) as exc:
        _emit_error(exc)
        return 3


def _emit_error(exc: Exception) -> None:
    doc = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(doc), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
