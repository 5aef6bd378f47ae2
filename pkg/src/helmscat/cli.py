"""Command-line interface.

Subcommands: gen-dataset, solve, neumann, contraction, invert,
gradcheck, pde-residual, bench.  Exit codes: 0 success, 1 usage error,
2 numerical failure.  Every run writes a ``run.json`` manifest (command,
arguments, config, seed, package versions) sufficient to reproduce it;
commands that take ``--out`` place it next to their outputs.

Problem configs are JSON files::

    {
      "grid": {"nx": 65, "ny": 65},
      "k": 20.0,
      "q": {"kind": "t_shape", "amplitude": 0.1},
      "f": {"kind": "gaussian_r", "R": 30.0}
    }

q kinds: t_shape | circles | smoothed_circles (field: amplitude).
f kinds: gaussian_r (field: R) | grf | waves.
All randomized commands require an explicit ``--seed``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, datasets, fdm, inversion, neumann, scenes
from .fields import ComplexField, Grid2D, RealField, l2_norm, pde_residual, relative_l2_error

USAGE_ERROR = 1
NUMERICAL_FAILURE = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.stderr.write("run with --help for the full option list\n")
        raise SystemExit(USAGE_ERROR)


def _load_config(path: str) -> dict:
    return json.loads(Path(path).read_text())


def _specs_from_config(config: dict):
    qc = dict(config["q"])
    fc = dict(config["f"])
    q_spec = scenes.ScattererSpec(kind=qc["kind"], amplitude=qc.get("amplitude", 0.1))
    f_spec = scenes.SourceSpec(kind=fc["kind"], R=fc.get("R", 30.0))
    return q_spec, f_spec


def _grid_from_config(config: dict) -> Grid2D:
    g = config["grid"]
    return Grid2D(int(g["nx"]), int(g["ny"]))


def _build_problem(config: dict, seed: int):
    grid = _grid_from_config(config)
    k = float(config["k"])
    q_spec, f_spec = _specs_from_config(config)
    q_seed, f_seed = datasets.record_streams(seed, 0)
    q = scenes.sample_q(q_spec, grid, seed=q_seed)
    f = scenes.sample_f(f_spec, grid, seed=f_seed)
    return fdm.HelmholtzProblem(k, q, f)


def _write_run_json(args, outputs: dict) -> None:
    payload = {
        "command": args.command,
        "argv": list(getattr(args, "_argv", [])),
        "options": {
            k: v
            for k, v in vars(args).items()
            if not k.startswith("_") and k not in ("command", "func") and _jsonable(v)
        },
        "config": getattr(args, "_config", None),
        "versions": {
            "helmscat": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "outputs": outputs,
    }
    path = Path(args.run_json) if args.run_json else _default_run_path(args)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True))


def _jsonable(v) -> bool:
    return isinstance(v, (str, int, float, bool, list, dict, type(None)))


def _default_run_path(args) -> Path:
    out = getattr(args, "out", None)
    if out:
        p = Path(out)
        base = p if p.suffix == "" else p.parent
        return base / "run.json"
    return Path("run.json")


# ---------------------------------------------------------------------------
# Subcommand handlers (return exit code, fill outputs dict)
# ---------------------------------------------------------------------------
def _cmd_gen_dataset(args, outputs) -> int:
    config = _load_config(args.config)
    args._config = config
    grid = _grid_from_config(config)
    q_spec, f_spec = _specs_from_config(config)
    manifest = datasets.generate_dataset(
        grid, float(config["k"]), q_spec, f_spec, args.seed, args.count, args.out
    )
    outputs["dataset"] = str(args.out)
    outputs["count"] = manifest.count
    print(f"wrote {manifest.count} records to {args.out}")
    return 0


def _cmd_solve(args, outputs) -> int:
    if args.dataset:
        manifest = datasets.read_manifest(args.dataset)
        rec = datasets.read_record(args.dataset, args.index, manifest)
        p = fdm.HelmholtzProblem(manifest.k, rec.q, rec.f)
    else:
        config = _load_config(args.config)
        args._config = config
        p = _build_problem(config, args.seed)
    u = fdm.solve_direct(p)
    res = pde_residual(u, p.k, p.q, p.f)
    print(f"solved {p.grid.nx}x{p.grid.ny} at k={p.k}: "
          f"interior residual {res:.3e} ({res / l2_norm(p.f):.3e} of ||f||)")
    if args.out:
        record = datasets.DatasetRecord(index=0, q=p.q, f=p.f, u=u)
        Path(args.out).write_bytes(datasets.encode_record(record))
        outputs["record"] = str(args.out)
    outputs["residual"] = res
    return 0


def _cmd_neumann(args, outputs) -> int:
    config = _load_config(args.config)
    args._config = config
    p = _build_problem(config, args.seed)
    fact0 = fdm.factorize(fdm.assemble(p.k, RealField.zeros(p.grid)))
    cfg = neumann.NeumannConfig(
        n_terms=args.terms, tol=args.tol, divergence_factor=args.divergence_factor
    )
    result = neumann.neumann_solve(p, cfg, fact0)
    u_ref = fdm.solve_direct(p)
    err = relative_l2_error(result.partial_sum, u_ref)
    for n, nrm in enumerate(result.term_norms):
        print(f"term {n}: ||v_{n}|| = {nrm:.6e}")
    print(f"status: {result.status}")
    print(f"terms used: {result.terms_used}")
    print(f"relative error vs direct solve: {err:.6e}")
    outputs.update(status=result.status, terms_used=result.terms_used, rel_error=err)
    return 0


def _cmd_contraction(args, outputs) -> int:
    config = _load_config(args.config)
    args._config = config
    p = _build_problem(config, args.seed)
    fact0 = fdm.factorize(fdm.assemble(p.k, RealField.zeros(p.grid)))
    rho = neumann.estimate_contraction(p.k, p.q, fact0, iters=args.iters)
    print(f"contraction estimate rho = {rho:.6f} "
          f"({'convergent' if rho < 1 else 'divergent'} regime)")
    outputs["rho"] = rho
    return 0


def _cmd_invert(args, outputs) -> int:
    config = _load_config(args.config)
    args._config = config
    grid = _grid_from_config(config)
    q_spec, _ = _specs_from_config(config)
    q_seed, _ = datasets.record_streams(args.seed, 0)
    q_true = scenes.sample_q(q_spec, grid, seed=q_seed)
    inc = inversion.IncidentSet(float(args.k or config["k"]), args.directions)
    data = inversion.synthesize_data(
        q_true, inc, factor=args.data_grid_factor,
        noise_std=args.noise_std, seed=args.seed,
    )
    cfg = inversion.InverseConfig(
        grid=grid, max_iters=args.max_iters, memory=args.memory,
        data_grid_factor=args.data_grid_factor, noise_std=args.noise_std,
    )
    report = inversion.lbfgs_invert(cfg, inc, data)
    rel = relative_l2_error(
        ComplexField(grid, report.q_est.values.astype(complex)),
        ComplexField(grid, q_true.values.astype(complex)),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "q_true.hfd").write_bytes(datasets.encode_field(q_true))
    (out / "q_est.hfd").write_bytes(datasets.encode_field(report.q_est))
    report_payload = {
        "status": report.status,
        "iterations_used": report.iterations_used,
        "wall_time": report.wall_time,
        "objective_history": report.objective_history.tolist(),
        "gradient_norm_history": report.gradient_norm_history.tolist(),
        "relative_l2_error_vs_true": rel,
    }
    (out / "report.json").write_text(json.dumps(report_payload, indent=2))
    print(f"inversion {report.status} after {report.iterations_used} iterations "
          f"({report.wall_time:.1f} s)")
    print(f"objective {report.objective_history[0]:.4e} -> {report.objective_history[-1]:.4e}")
    print(f"relative L2 error vs q_true: {rel:.4f}")
    outputs.update(report=str(out / "report.json"), rel_error=rel, status=report.status)
    return 0


def _cmd_gradcheck(args, outputs) -> int:
    grid = Grid2D(args.grid, args.grid)
    inc = inversion.IncidentSet(args.k, args.directions)
    q_data = scenes.disk(grid, (0.45, 0.55), 0.2, 0.08, smoothed=True)
    data = inversion.synthesize_data(q_data, inc, factor=1)
    q0 = scenes.sample_q_circles((args.seed, 0), 0.05, grid, smoothed=True)
    _, grad = inversion.misfit_and_gradient(q0, inc, data)
    rng = scenes.sampler_rng((args.seed, 1))
    worst = 0.0
    for _ in range(args.trials):
        delta = rng.standard_normal(grid.shape)
        qp = RealField(grid, q0.values + args.eps * delta)
        qm = RealField(grid, q0.values - args.eps * delta)
        jp, _ = inversion.misfit_and_gradient(qp, inc, data)
        jm, _ = inversion.misfit_and_gradient(qm, inc, data)
        fd = (jp - jm) / (2.0 * args.eps)
        an = float(np.sum(grad.values * delta))
        worst = max(worst, abs(fd - an) / max(abs(fd), 1e-300))
    print(f"max relative FD mismatch over {args.trials} directions: {worst:.3e}")
    outputs["max_mismatch"] = worst
    if worst >= args.tol:
        print(f"FAIL: mismatch exceeds tolerance {args.tol:.1e}", file=sys.stderr)
        return NUMERICAL_FAILURE
    return 0


def _cmd_pde_residual(args, outputs) -> int:
    manifest = datasets.read_manifest(args.dataset)
    rec = datasets.read_record(args.dataset, args.index, manifest)
    res = pde_residual(rec.u, manifest.k, rec.q, rec.f)
    print(f"{res:.17g}")
    print(f"relative to ||f||: {res / l2_norm(rec.f):.17g}")
    outputs["residual"] = res
    return 0


def _cmd_bench(args, outputs) -> int:
    sizes = [int(s) for s in args.sizes.split(",")]
    print(f"{'n':>6} {'assemble':>10} {'factorize':>10} {'solve':>10}")
    rows = []
    for n in sizes:
        grid = Grid2D(n, n)
        q = RealField.zeros(grid)
        f = ComplexField(grid, np.ones(grid.shape))
        t0 = time.perf_counter()
        A = fdm.assemble(args.k, q)
        t1 = time.perf_counter()
        fact = fdm.factorize(A)
        t2 = time.perf_counter()
        for _ in range(3):
            fdm.solve(fact, f)
        t3 = time.perf_counter()
        row = {"n": n, "assemble": t1 - t0, "factorize": t2 - t1, "solve": (t3 - t2) / 3}
        rows.append(row)
        print(f"{n:>6} {row['assemble']:>10.4f} {row['factorize']:>10.4f} {row['solve']:>10.4f}")
    outputs["timings"] = rows
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------
def _build_parser() -> _Parser:
    parser = _Parser(prog="helmscat", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--run-json", default=None, help="where to write the run manifest")

    p = sub.add_parser("gen-dataset", parents=[common], help="generate a labelled dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_dataset)

    p = sub.add_parser("solve", parents=[common], help="direct solve of one problem")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config")
    src.add_argument("--dataset")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="write the (q, f, u) record here")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("neumann", parents=[common], help="truncated series solve")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--terms", type=int, default=10)
    p.add_argument("--tol", type=float, default=0.0)
    p.add_argument("--divergence-factor", type=float, default=1.05)
    p.set_defaults(func=_cmd_neumann)

    p = sub.add_parser("contraction", parents=[common], help="series contraction estimate")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--iters", type=int, default=20)
    p.set_defaults(func=_cmd_contraction)

    p = sub.add_parser("invert", parents=[common], help="reconstruct q from boundary data")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--directions", type=int, default=16)
    p.add_argument("--k", type=float, default=None, help="override the config wavenumber")
    p.add_argument("--data-grid-factor", type=int, default=2)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--memory", type=int, default=10)
    p.add_argument("--noise-std", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_invert)

    p = sub.add_parser("gradcheck", parents=[common],
                       help="adjoint vs finite-difference gradient check")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--grid", type=int, default=33)
    p.add_argument("--k", type=float, default=10.0)
    p.add_argument("--directions", type=int, default=4)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("pde-residual", parents=[common],
                       help="Helmholtz residual of a stored record's label")
    p.add_argument("--dataset", required=True)
    p.add_argument("--index", type=int, default=0)
    p.set_defaults(func=_cmd_pde_residual)

    p = sub.add_parser("bench", parents=[common], help="assemble/factorize/solve timings")
    p.add_argument("--sizes", default="33,65,129")
    p.add_argument("--k", type=float, default=20.0)
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    if args.command == "solve" and args.config and args.seed is None:
        print("helmscat solve: error: --config requires --seed", file=sys.stderr)
        return USAGE_ERROR
    args._argv = argv
    outputs: dict = {}
    try:
        code = args.func(args, outputs)
    except (fdm.FactorizationError, scenes.DegenerateSampleError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        code = NUMERICAL_FAILURE
        outputs["error"] = str(exc)
    except (FileNotFoundError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = USAGE_ERROR
        outputs["error"] = str(exc)
    outputs["exit_code"] = code
    _write_run_json(args, outputs)
    return code


if __name__ == "__main__":
    sys.exit(main())
