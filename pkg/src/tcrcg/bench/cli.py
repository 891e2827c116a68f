"""``tcrcg`` command line: gen, complete, phase, tsvd, metrics.

Results go to stdout as one JSON object; artifacts go to files. Wall-clock
timings are included only with ``--timing`` so that plain runs are
byte-reproducible.
"""

import argparse
import json
import sys
import time

import numpy as np

from ..sampling import sample_omega
from ..solver import HardThreshold, ResampleTrim, SolverConfig, rcg_complete
from ..tsvd import MultiRank, multi_rank_of, tcsvd, truncate_h_r
from .experiments import (
    DEFAULT_N,
    DEFAULT_RATIOS,
    ExperimentSpec,
    gen_synthetic,
    image_complete,
    phase_csv,
    phase_raster,
    run_phase_diagram,
)
from .io import read_ppm, read_t3b, write_pgm, write_ppm, write_t3b
from .metrics import metrics_psnr, metrics_res


def _floats(text):
    return tuple(float(t) for t in text.split(",") if t)


def _ints(text):
    return tuple(int(t) for t in text.split(",") if t)


def _solver_args(p):
    p.add_argument("--init", choices=("hard", "resample"), default="hard")
    p.add_argument("--k1", type=float, default=0.1)
    p.add_argument("--k2", type=float, default=1.0)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--rel-tol", type=float, default=1e-4)
    p.add_argument("--L", type=int, default=10, help="resampling groups minus one")
    p.add_argument("--mu", type=float, default=None, help="trimming level")
    p.add_argument("--step", choices=("adaptive", "fixed"), default="adaptive")


def _solver(args, rank):
    init = HardThreshold() if args.init == "hard" else ResampleTrim(args.L, args.mu, args.step)
    return SolverConfig(
        target_rank=rank,
        k1=args.k1,
        k2=args.k2,
        max_iters=args.max_iters,
        rel_change_tol=args.rel_tol,
        init=init,
        seed=args.seed,
    )


def build_parser():
    parser = argparse.ArgumentParser(prog="tcrcg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a Gaussian low-tubal-rank tensor")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--rank", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    c = sub.add_parser("complete", help="sample and complete a tensor or image")
    src = c.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="ground-truth tensor (T3B)")
    src.add_argument("--image", help="8-bit binary PPM; the truth is its rank truncation")
    c.add_argument("--rank", required=True, help="tubal rank or comma-separated multi-rank")
    c.add_argument("--sr", type=float, required=True, help="m / (n1 n2 n3)")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", help="recovered tensor (T3B) or image (PPM)")
    c.add_argument("--trace", help="write the iteration trace as JSON lines")
    c.add_argument("--timing", action="store_true")
    _solver_args(c)

    ph = sub.add_parser("phase", help="success-fraction sweep over (n, m)")
    ph.add_argument("--n", type=_ints, default=DEFAULT_N, help="comma-separated sizes")
    ph.add_argument("--rank", type=int, default=2)
    grid = ph.add_mutually_exclusive_group()
    grid.add_argument("--ratios", type=_floats, default=DEFAULT_RATIOS, help="m / n^3 values")
    grid.add_argument("--dim-multiples", type=_floats, help="m / manifold dimension values")
    ph.add_argument("--trials", type=int, default=10)
    ph.add_argument("--seed", type=int, default=0)
    ph.add_argument("--workers", type=int, default=1)
    ph.add_argument("--out", required=True, help="CSV grid")
    ph.add_argument("--pgm", help="grayscale raster of the grid")
    _solver_args(ph)

    t = sub.add_parser("tsvd", help="multi-rank and optional truncation of a tensor")
    t.add_argument("--input", required=True)
    t.add_argument("--rank", help="truncate to this multi-rank")
    t.add_argument("--tol", type=float, default=1e-8)
    t.add_argument("--out")

    mt = sub.add_parser("metrics", help="Res and PSNR of a tensor against a truth")
    mt.add_argument("--x", required=True)
    mt.add_argument("--truth", required=True)
    return parser


def _cmd_gen(args):
    x = gen_synthetic(args.n, args.rank, args.seed)
    write_t3b(args.out, x)
    return {"dims": list(x.shape), "rank": args.rank, "seed": args.seed, "out": args.out,
            "fro_norm": float(np.linalg.norm(x))}


def _report_fields(rep):
    return {
        "iterations": rep.iterations,
        "converged": rep.converged,
        "stop_reason": rep.stop_reason,
        "restarts": rep.restarts,
        "rank_drop": rep.rank_drop,
        "multi_rank": list(rep.multi_rank),
        "alpha_fallbacks": sum(t.alpha_fallback for t in rep.trace),
    }


def _cmd_complete(args):
    if args.image:
        image = read_ppm(args.image)
        rank = MultiRank.parse(args.rank, image.shape[2])
        result = image_complete(image, rank, args.sr, _solver(args, rank), args.seed)
        rep = result.report
        out = {"psnr": result.psnr, "res": result.res, **_report_fields(rep)}
        if args.out:
            write_ppm(args.out, result.recovered)
    else:
        t0 = time.perf_counter()
        truth = read_t3b(args.input)
        rank = MultiRank.parse(args.rank, truth.shape[2])
        m = max(1, int(round(args.sr * truth.size)))
        omega = sample_omega(truth.shape, m, args.seed)
        rep = rcg_complete(truth, omega, _solver(args, rank), truth=truth)
        out = {"m": m, "res": rep.res, "success": rep.success(), **_report_fields(rep)}
        if args.out:
            write_t3b(args.out, rep.final)
        rep.timings["total"] = time.perf_counter() - t0
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write(rep.trace_jsonl())
    if args.timing:
        out["timings"] = rep.timings
    return out


def _cmd_phase(args):
    spec = ExperimentSpec(
        kind="PhaseDiagram",
        n_values=args.n,
        rank=args.rank,
        ratios=args.ratios,
        dim_multiples=args.dim_multiples,
        trials=args.trials,
        seed=args.seed,
        solver=_solver(args, (args.rank,)),
        workers=args.workers,
    )
    rows = run_phase_diagram(spec)
    with open(args.out, "w", newline="") as fh:
        fh.write(phase_csv(rows))
    if args.pgm:
        write_pgm(args.pgm, phase_raster(rows))
    return {"cells": len(rows), "out": args.out,
            "rows": [{"n": n, "m": m, "success_fraction": f} for n, m, f in rows]}


def _cmd_tsvd(args):
    x = read_t3b(args.input)
    fac = tcsvd(x, args.tol)
    out = {"dims": list(x.shape), "multi_rank": list(fac.multi_rank), "tubal_rank": fac.tubal_rank,
           "singular_values": fac.s_hat.tolist()}
    if args.rank:
        r = MultiRank.parse(args.rank, x.shape[2])
        y = truncate_h_r(x, r)
        out["truncated_multi_rank"] = list(multi_rank_of(y, args.tol))
        out["truncation_res"] = metrics_res(y, x) if np.any(x) else 0.0
        if args.out:
            write_t3b(args.out, y)
    return out


def _cmd_metrics(args):
    x, truth = read_t3b(args.x), read_t3b(args.truth)
    return {"res": metrics_res(x, truth), "psnr": metrics_psnr(x, truth)}


COMMANDS = {
    "gen": _cmd_gen,
    "complete": _cmd_complete,
    "phase": _cmd_phase,
    "tsvd": _cmd_tsvd,
    "metrics": _cmd_metrics,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        result = COMMANDS[args.command](args)
    except (OSError, ValueError, TypeError, np.linalg.LinAlgError) as exc:
        print(f"tcrcg {args.command}: error: {exc}", file=sys.stderr)
        return 1
    json.dump(result, sys.stdout, sort_keys=True)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
