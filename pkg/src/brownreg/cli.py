"""``brownreg`` command line: fit, gen, validate and propagate.

Configuration is a flat ``key = value`` file (``#`` starts a comment) merged
under command-line flags. Unknown keys are rejected. Exit codes: ``0``
success, ``1`` input or configuration error, ``2`` (fit only) some grid points
did not converge.
"""

from __future__ import annotations

import argparse
import ast
import os
import sys
from typing import Callable, Optional

import numpy as np

from . import __version__
from .core import BasisKind, CoefPath, Family, PenaltySpec, TimeGrid
from .errors import BrownRegError, InvalidInput, InvalidSpec
from .io import fmt, read_panel_csv, write_panel_csv, write_path_csv
from .oracle import validate_family
from .propagator import WaveGrid, propagate
from .sde import DesignSpec, generate_panel
from .solver import SolveOptions, fit_path

EXIT_OK, EXIT_INPUT, EXIT_PARTIAL = 0, 1, 2


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _opt_float(text: str) -> Optional[float]:
    return None if text.strip().lower() in ("", "none") else float(text)


# key -> (parser, default)
FIT_KEYS = {
    "penalty": (str, "ridge"),
    "lambda": (float, 0.0),
    "alpha": (_opt_float, None),
    "p": (_opt_float, None),
    "group_size": (int, 1),
    "basis": (str, "identity"),
    "tol": (float, 1e-10),
    "max_sweeps": (int, 500),
    "init": (str, "auto"),
}
GEN_KEYS = {
    "penalty": (str, "lasso"),
    "lambda": (float, 0.0),
    "alpha": (_opt_float, None),
    "p": (_opt_float, None),
    "group_size": (int, 1),
    "basis": (str, "identity"),
    "seed": (int, 0),
    "n_cases": (int, 20),
    "n_times": (int, 11),
    "t_max": (float, 1.0),
    "beta": (_floats, (1.0, -0.5)),
    "beta_slope": (_floats, ()),
    "design_loc": (float, 0.0),
    "design_scale": (float, 1.0),
    "noise": (float, 0.01),
    "u0": (float, 0.0),
}


def read_config(path: Optional[str], keys: dict) -> dict:
    """Parse a flat ``key = value`` file into typed values; defaults fill the rest."""
    cfg = {k: d for k, (_, d) in keys.items()}
    if not path:
        return cfg
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidSpec(f"line {lineno}", "expected key = value")
            key, val = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key == "lambda_star":
                key = "lambda"
            cfg[key] = _parse_value(key, val, keys)
    return cfg


def _parse_value(key, val, keys):
    if key not in keys:
        raise InvalidSpec(key, "unknown config key")
    try:
        return keys[key][0](val)
    except ValueError:
        raise InvalidSpec(key, f"cannot parse {val!r}") from None


def _overlay(cfg: dict, args: argparse.Namespace, keys: dict) -> dict:
    for key in keys:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    return cfg


def _penalty(cfg) -> PenaltySpec:
    return PenaltySpec(Family.parse(cfg["penalty"]), cfg["lambda"], alpha=cfg["alpha"], p=cfg["p"],
                       group_size=cfg["group_size"])


def _basis(cfg) -> BasisKind:
    return BasisKind.parse(cfg["basis"])


def _out_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


# -- fit ---------------------------------------------------------------------

def cmd_fit(args) -> int:
    cfg = _overlay(read_config(args.config, FIT_KEYS), args, FIT_KEYS)
    spec = _penalty(cfg)
    basis = _basis(cfg)
    opts = SolveOptions(max_sweeps=cfg["max_sweeps"], tol=cfg["tol"], init=cfg["init"])
    with open(args.panel, encoding="utf-8") as fh:
        panel = read_panel_csv(fh)
    if spec.family is Family.GROUPLASSO:
        spec.group_matrices(panel.J)
    path, report = fit_path(panel, spec, basis, opts)
    out = _out_dir(args.out)
    with open(os.path.join(out, "betas.csv"), "w", encoding="utf-8", newline="") as fh:
        write_path_csv(path, fh)
    with open(os.path.join(out, "report.txt"), "w", encoding="utf-8", newline="") as fh:
        fh.write(f"penalty: {spec.family.value}\n")
        fh.write(f"lambda_star: {fmt(spec.lambda_star)}\n")
        fh.write(f"basis: {basis.value}\n")
        fh.write(f"N: {panel.N}\nJ: {panel.J}\ngrid points: {len(panel.grid)}\n")
        fh.write(f"aggregate objective: {fmt(report.aggregate_objective)}\n")
        for t, pr in zip(panel.grid.points, report.points):
            status = "converged" if pr.converged else "NOT converged"
            line = f"t={fmt(t)} {status} sweeps={pr.sweeps} max_foc_residual={fmt(pr.foc_residual_norm)}"
            if pr.message:
                line += f" ({pr.message})"
            fh.write(line + "\n")
        n_ok = sum(p.converged for p in report.points)
        fh.write(f"converged points: {n_ok}/{len(report.points)}\n")
    if report.all_converged:
        return EXIT_OK
    print(f"warning: {len(report.points) - n_ok} grid point(s) did not converge",
          file=sys.stderr)
    return EXIT_PARTIAL


# -- gen ---------------------------------------------------------------------

def cmd_gen(args) -> int:
    cfg = _overlay(read_config(args.config, GEN_KEYS), args, GEN_KEYS)
    if args.paths is not None:
        cfg["n_cases"] = args.paths
    spec = _penalty(cfg)
    basis = _basis(cfg)
    if cfg["n_times"] < 2:
        raise InvalidSpec("n_times", "need at least 2 grid points")
    if cfg["n_cases"] < 1:
        raise InvalidSpec("n_cases", "need at least one case")
    if not cfg["t_max"] > 0:
        raise InvalidSpec("t_max", "must be > 0")
    beta = np.array(cfg["beta"], dtype=float)
    if beta.size < 1:
        raise InvalidSpec("beta", "need at least one coefficient")
    slope = np.array(cfg["beta_slope"], dtype=float) if cfg["beta_slope"] else np.zeros_like(beta)
    if slope.shape != beta.shape:
        raise InvalidSpec("beta_slope", f"need {beta.size} values to match beta")
    grid = TimeGrid.uniform(cfg["t_max"], cfg["n_times"])
    truth = CoefPath(grid, beta[None, :] + grid.points[:, None] * slope[None, :])
    design = DesignSpec(cfg["n_cases"], cfg["design_loc"], cfg["design_scale"])
    panel = generate_panel(truth, design, spec, basis, seed=cfg["seed"], noise=cfg["noise"],
                           u0=cfg["u0"])
    out = _out_dir(args.out)
    comments = [f"N={panel.N}", f"J={panel.J}",
                f"grid=uniform t_max={fmt(cfg['t_max'])} n_times={cfg['n_times']}",
                f"seed={cfg['seed']} noise={fmt(cfg['noise'])} penalty={spec.family.value}"]
    with open(os.path.join(out, "panel.csv"), "w", encoding="utf-8", newline="") as fh:
        write_panel_csv(panel, fh, comments)
    with open(os.path.join(out, "truth.csv"), "w", encoding="utf-8", newline="") as fh:
        write_path_csv(truth, fh, diagnostics=False)
    return EXIT_OK


# -- validate ----------------------------------------------------------------

def cmd_validate(args) -> int:
    try:
        fam = Family.parse(args.family)
    except InvalidSpec as exc:
        raise InvalidSpec("family", exc.detail) from None
    spec = PenaltySpec(fam, 0.0, alpha=args.alpha, p=args.p)
    report = validate_family(spec, args.basis or "identity", args.n, args.seed)
    text = report.format() + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- propagate ---------------------------------------------------------------

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs, "tanh": np.tanh}
_BINOPS = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply,
           ast.Div: np.divide, ast.Pow: np.power}


def parse_potential(text: str) -> Callable[[np.ndarray], np.ndarray]:
    """Compile an arithmetic expression in ``x`` (``x^2``, ``1``, ``sin(x)+2``...)."""
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError:
        raise InvalidSpec("f", f"cannot parse {text!r}") from None

    def ev(node, x):
        if isinstance(node, ast.Expression):
            return ev(node.body, x)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return np.full_like(x, float(node.value))
        if isinstance(node, ast.Name) and node.id == "x":
            return x
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left, x), ev(node.right, x))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand, x)
            return -v if isinstance(node.op, ast.USub) else v
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1):
            return _FUNCS[node.func.id](ev(node.args[0], x))
        raise InvalidSpec("f", f"unsupported expression {text!r}")

    ev(tree, np.zeros(1))  # validate eagerly
    return lambda x: ev(tree, np.asarray(x, dtype=float))


def cmd_propagate(args) -> int:
    f = parse_potential(args.f)
    if not args.epsilon > 0:
        raise InvalidSpec("epsilon", "must be > 0")
    if args.steps < 1:
        raise InvalidSpec("steps", "must be >= 1")
    if not args.x_min < args.x_max:
        raise InvalidSpec("x_min", "must be < x_max")
    w = WaveGrid.uniform(args.x_min, args.x_max, args.nodes)
    _, res = propagate(w, f, args.epsilon, args.steps)
    lines = ["step,s,residual"]
    lines += [f"{i + 1},{fmt((i + 1) * args.epsilon)},{fmt(r)}" for i, r in enumerate(res)]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _penalty_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--penalty", help="penalty family")
    p.add_argument("--lambda", dest="lambda", type=float, help="penalization level lambda*")
    p.add_argument("--alpha", type=float, help="elastic net / fused lasso mixing weight")
    p.add_argument("--p", type=float, help="Lp-norm exponent")
    p.add_argument("--group-size", dest="group_size", type=int)
    p.add_argument("--basis", choices=["identity", "cubic"])


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; exit code 2 is reserved for partial convergence
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="brownreg",
                 description="Time-varying penalized regression toolkit.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit coefficient paths to a panel CSV")
    p.add_argument("panel")
    p.add_argument("--config")
    _penalty_flags(p)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-sweeps", dest="max_sweeps", type=int)
    p.add_argument("--init", choices=["auto", "ols", "zero", "warm"])
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("gen", help="generate a synthetic panel")
    p.add_argument("--config")
    _penalty_flags(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--paths", type=int, help="number of cases (one error path each)")
    p.add_argument("--noise", type=float)
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("validate", help="cross-check closed forms against the oracles")
    p.add_argument("family")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--basis", choices=["identity", "cubic"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("propagate", help="residual table of the transition-function steps")
    p.add_argument("--f", default="x^2", help="potential f(x), e.g. 0, 1, x^2")
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--x-min", dest="x_min", type=float, default=-3.0)
    p.add_argument("--x-max", dest="x_max", type=float, default=3.0)
    p.add_argument("--nodes", type=int, default=2001)
    p.add_argument("--out")
    p.set_defaults(func=cmd_propagate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvalidSpec as exc:
        print(f"error: invalid field '{exc.field}': {exc.detail}", file=sys.stderr)
    except (InvalidInput, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    except BrownRegError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
