"""Command-line entry point ``stochqm``.

Heavy imports are deferred until after ``--threads`` has been applied to the
BLAS/OpenMP environment variables.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def _set_threads(k: int) -> None:
    for var in THREAD_VARS:
        os.environ[var] = str(k)


def _state_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("grid and state")
    g.add_argument("--dims", type=int, default=1, choices=(1, 2))
    g.add_argument("--n", type=int, default=256, help="points per axis (power of two >= 8)")
    g.add_argument("--extent", type=float, default=20.0, help="cell length L")
    g.add_argument("--hbar", type=float, default=1.0)
    g.add_argument("--mass", type=float, default=1.0)
    g.add_argument("--state", default="coherent",
                   choices=("gaussian", "coherent", "eigenstate", "gausson", "cat", "plane_wave"))
    g.add_argument("--sigma", type=float, default=1.0)
    g.add_argument("--center", type=float, default=1.0)
    g.add_argument("--momentum", type=float, default=0.5)
    g.add_argument("--level", type=int, default=0, help="eigenstate quantum number")
    g.add_argument("--separation", type=float, default=4.0, help="cat-state separation")


def _potential_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--potential", default="harmonic", choices=("free", "harmonic", "quartic"))
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.1, help="quartic coefficient")


def _config(args, **extra):
    from .config import parse_config

    data = {
        "grid": {"n_dims": args.dims, "points": args.n, "extent": args.extent},
        "constants": {"hbar": args.hbar, "mass": args.mass},
        "state": {"kind": args.state, "sigma": args.sigma, "center": args.center, "momentum": args.momentum,
                  "omega": getattr(args, "omega", 1.0), "level": args.level, "separation": args.separation,
                  "b": getattr(args, "b", 0.0) or -1.0},
    }
    if hasattr(args, "potential"):
        data["potential"] = {"kind": args.potential, "omega": args.omega, "gamma": args.gamma}
    data.update(extra)
    return parse_config(data)


def _setup(args, **extra):
    cfg = _config(args, **extra)
    grid = cfg.grid.build()
    c = cfg.constants.build()
    return cfg, grid, c, cfg.state.build(grid, c)


def _emit(payload: dict, out) -> None:
    from .io import to_jsonable

    text = json.dumps(to_jsonable(payload), indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


# -- commands ------------------------------------------------------------------


def cmd_run(args) -> int:
    from .config import RunConfig, load_config, parse_config
    from .suite import run_suite

    cfg = load_config(args.config) if args.config else RunConfig()
    updates = {}
    if args.check:
        updates["checks"] = args.check
    if args.threads:
        updates["threads"] = args.threads
    if updates:
        cfg = parse_config({**cfg.model_dump(), **updates})
    summary = run_suite(cfg, args.out or cfg.output_dir, raise_on_failure=False)
    for check_id, res in summary["checks"].items():
        print(f"{'PASS' if res['passed'] else 'FAIL'}  {check_id}")
    failing = [k for k, r in summary["checks"].items() if not r["passed"]]
    if failing:
        print("failing checks: " + ", ".join(failing), file=sys.stderr)
        return 1
    return 0


def cmd_propagate(args) -> int:
    from . import io
    from .propagators import EvolutionSpec, evolve

    if args.b and args.state == "gausson" and args.b > 0:
        raise SystemExit("the gausson needs b < 0")
    cfg, grid, c, psi = _setup(args)
    U = cfg.potential.build(grid, c)
    spec = EvolutionSpec(args.dt, args.steps, args.b)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def dump(step, state):
        io.save_wavefunction(out / f"psi_{step:06d}.npz", state, {"t": step * args.dt})
        if args.csv:
            io.write_fields_csv(out / f"psi_{step:06d}.csv", grid, {"psi": state.psi, "rho": state.rho})

    dump(0, psi)
    final = evolve(psi, U, spec, callback=dump if args.dump_every else None, every=args.dump_every or 1)
    if not args.dump_every or args.steps % args.dump_every:
        dump(args.steps, final)
    _emit({"steps": args.steps, "t_final": args.dt * args.steps, "norm_error": abs(final.norm() - 1),
           "output": str(out)}, None)
    return 0


def cmd_wigner(args) -> int:
    import numpy as np

    from . import io
    from .phase_space import momentum_density_at, wigner_transform

    cfg, grid, c, psi = _setup(args)
    W = wigner_transform(psi)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    np.savez(out / "wigner.npz", x=grid.axis, p=W.p, W=W.values)
    if grid.n_dims == 1:
        X, P = W.coords
        np.savetxt(out / "wigner.csv", np.column_stack([X.ravel(), P.ravel(), W.values.ravel()]),
                   delimiter=",", header="x,p,W", comments="", fmt="%.17g")
    summary = {
        "position_marginal_error": float(np.abs(W.position_marginal() - psi.rho).max()),
        "momentum_marginal_error": float(np.abs(W.momentum_marginal() - momentum_density_at(psi, W.p)).max()),
        "normalization": W.total(),
        "min_w": float(W.values.min()),
    }
    io.write_json(out / "wigner_summary.json", summary)
    _emit(summary, None)
    return 0


def cmd_bracket(args) -> int:
    from .brackets import PolyObservable, moyal_bracket_poly, poisson_bracket

    n = args.dims
    A = PolyObservable.parse(args.a, n)
    B = PolyObservable.parse(args.b, n)
    result = poisson_bracket(A, B) if args.poisson else moyal_bracket_poly(A, B, args.hbar)
    print(result.format())
    return 0


def cmd_check_madelung(args) -> int:
    import numpy as np

    from . import io
    from .grid import Grid
    from .hydrodynamics import madelung_residuals
    from .propagators import PotentialSpec, snapshots
    from .state import PhysicalConstants, coherent_state

    c = PhysicalConstants(args.hbar, args.mass)
    period = 2 * np.pi / args.omega
    rows = []
    for n in args.points:
        grid = Grid(1, n, args.extent)
        U = PotentialSpec.harmonic(grid, args.omega, c.mass)
        psi = coherent_state(grid, c, args.omega, x0=args.x0, p0=args.p0)
        for frac in args.dt_fd:
            dt = frac * period
            minus, centre, plus = snapshots(psi, U, dt, args.substeps)
            rows.append({"points": n, "dt_fd": dt, **madelung_residuals(centre, plus, minus, U, dt).norms()})
    if args.out:
        io.write_table(args.out, rows)
    else:
        cols = list(rows[0])
        print(",".join(cols))
        for r in rows:
            print(",".join(repr(r[k]) for k in cols))
    return 0


def cmd_check_fluctuations(args) -> int:
    import numpy as np

    from .fluctuations import (FluctuationModel, compatibility_coefficients, correlation_tensor,
                               irrotationality_pde_residual, second_moment_balance_residual)
    from .grid import Grid
    from .state import gaussian

    cfg, grid, c, psi = _setup(args)
    if grid.n_dims != 1:
        raise SystemExit("check-fluctuations takes a 1D state; the 2D PDE check uses its own Gaussian")
    orders = compatibility_coefficients(psi)
    g2 = Grid(2, args.n2, args.extent)
    wf2 = gaussian(g2, c, sigma=(args.sigma2[0], args.sigma2[1]), center=(0.3, -0.2))
    C = correlation_tensor(g2, wf2.rho, FluctuationModel.quantum(c))
    pde = np.abs(irrotationality_pde_residual(C, wf2.rho))[:, :, g2.bulk_mask(wf2.rho)]
    _emit({
        "compatibility": {f"order_{o.order}": o.max_difference for o in orders},
        "compatibility_without_d_order_3": compatibility_coefficients(psi, include_d=False)[3].max_difference,
        "second_moment_balance": second_moment_balance_residual(psi).max_residual(),
        "pde_residual_max": float(pde.max()),
        "pde_residual_rms": float(np.sqrt(np.mean(pde**2))),
    }, args.out)
    return 0


def cmd_report(args) -> int:
    from .observables import uncertainty_report

    cfg, grid, c, psi = _setup(args)
    rep = uncertainty_report(psi, cfg.potential.build(grid, c))
    payload = rep.to_dict()
    payload["satisfies_heisenberg"] = rep.satisfies_heisenberg(c.hbar)
    _emit(payload, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stochqm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--threads", type=int, default=None, help="BLAS/OpenMP threads (default 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the reproduction suite")
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--check", action="append", help="check id to run (repeatable; default: from config)")
    p.add_argument("--out", help="output directory (default: output_dir from config)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("propagate", help="evolve a state and dump snapshots")
    _state_args(p)
    _potential_args(p)
    p.add_argument("--b", type=float, default=0.0, help="logarithmic nonlinearity")
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--dump-every", type=int, default=0, help="write a snapshot every k steps")
    p.add_argument("--csv", action="store_true", help="also write CSV snapshots")
    p.add_argument("--out", default="propagation")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("wigner", help="Wigner function of a state")
    _state_args(p)
    p.add_argument("--out", default="wigner")
    p.set_defaults(func=cmd_wigner)

    p = sub.add_parser("bracket", help="Moyal (or Poisson) bracket of two polynomials")
    p.add_argument("a", help='e.g. "x1^3"')
    p.add_argument("b", help='e.g. "p1^3"')
    p.add_argument("--hbar", type=float, default=1.0)
    p.add_argument("--dims", type=int, default=None)
    p.add_argument("--poisson", action="store_true")
    p.set_defaults(func=cmd_bracket)

    p = sub.add_parser("check-madelung", help="Madelung residual norms versus resolution (CSV)")
    p.add_argument("--points", type=int, nargs="+", default=[128, 256])
    p.add_argument("--dt-fd", type=float, nargs="+", default=[1e-2, 5e-3, 2.5e-3, 1.25e-3],
                   help="finite-difference steps as fractions of the period")
    p.add_argument("--substeps", type=int, default=32)
    p.add_argument("--extent", type=float, default=20.0)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--x0", type=float, default=1.0)
    p.add_argument("--p0", type=float, default=0.5)
    p.add_argument("--hbar", type=float, default=1.0)
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_check_madelung)

    p = sub.add_parser("check-fluctuations", help="compatibility and PDE residual norms (JSON)")
    _state_args(p)
    p.add_argument("--n2", type=int, default=128, help="points per axis of the 2D PDE check")
    p.add_argument("--sigma2", type=float, nargs=2, default=(0.6, 0.9))
    p.add_argument("--out", help="JSON path (default: stdout)")
    p.set_defaults(func=cmd_check_fluctuations, n=512, extent=24.0)

    p = sub.add_parser("report", help="expectation values and uncertainty products (JSON)")
    _state_args(p)
    _potential_args(p)
    p.add_argument("--out", help="JSON path (default: stdout)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _set_threads(args.threads or 1)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    from .errors import CheckFailure, ConfigError, StochQMError

    try:
        return args.func(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except CheckFailure as err:
        print(str(err), file=sys.stderr)
        return 1
    except (StochQMError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
