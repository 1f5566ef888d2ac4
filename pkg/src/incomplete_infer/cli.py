"""Command-line interface: ``incomplete-infer {test,region,bounds,oracle}``.

Samples are read from CSV (one observation per row), reports are written as
JSON with sorted keys and the fully resolved configuration embedded, so two
runs with the same configuration and seed produce byte-identical output.

Exit status: 0 when the run completes (whatever the test decides), 2 for a
configuration error, 3 for a data error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import __version__
from .capacity import DiscreteMeasure
from .correspondence import FiniteCorrespondence, IntervalCorrespondence, load_correspondence
from .exceptions import ConfigError, DataError, IncompleteInferError, NumericError
from .inference import (
    ParamGrid,
    censored_mean_bounds,
    confidence_region,
    entry_game_model,
    specification_test,
)
from .setclass import SetFamily
from .statistic import EmpiricalMeasure
from .structure import DEFAULT_RESOLUTION, Structure
from .transport import feasible_coupling

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
SEED_ENV = "INCOMPLETE_INFER_SEED"


# ---------------------------------------------------------------------------
# Sample ingestion
# ---------------------------------------------------------------------------


def ingest_sample(path: str, kind: str = "numeric") -> np.ndarray:
    """Read a one-column CSV sample.

    ``kind`` is ``"numeric"`` (floats), ``"binary"`` (0/1 integers) or
    ``"label"`` (raw strings, matched later against a finite carrier).
    Numeric samples come back sorted. Errors name the offending row (1-based).
    """
    if not os.path.exists(path):
        raise ConfigError(f"data file {path!r} does not exist")
    values = []
    with open(path, newline="") as fh:
        for row_no, row in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in row]
            if not cells or all(c == "" for c in cells):
                continue
            if len(cells) != 1:
                raise DataError(f"row {row_no}: expected a single column, found {len(cells)}")
            cell = cells[0]
            if kind == "label":
                values.append(cell)
                continue
            try:
                x = float(cell)
            except ValueError:
                raise DataError(f"row {row_no}, column 1: {cell!r} is not numeric") from None
            if not math.isfinite(x):
                raise DataError(f"row {row_no}, column 1: {cell!r} is not finite")
            if kind == "binary" and x not in (0.0, 1.0):
                raise DataError(f"row {row_no}, column 1: {cell!r} is not 0 or 1")
            values.append(x)
    if not values:
        raise DataError("empty sample")
    if kind == "label":
        return np.array(values, dtype=object)
    arr = np.sort(np.array(values, dtype=float))
    return arr.astype(np.int64) if kind == "binary" else arr


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"{what} must be a comma-separated list of numbers, got {text!r}") from None


# ---------------------------------------------------------------------------
# Model resolution
# ---------------------------------------------------------------------------


def _latent_law(spec: str):
    name, _, arg = spec.partition(":")
    args = _floats(arg, "--latent parameters") if arg else []
    if name == "uniform":
        a, b = (args or [0.0, 1.0]) if len(args) in (0, 2) else (None, None)
        if a is None or not b > a:
            raise ConfigError("--latent uniform takes no parameters or 'uniform:a,b' with a < b")
        return stats.uniform(a, b - a)
    if name == "power":
        if len(args) != 1 or not args[0] > 0:
            raise ConfigError("--latent power needs one positive exponent, e.g. power:2")
        return stats.powerlaw(args[0])
    if name == "normal":
        if len(args) != 2 or not args[1] > 0:
            raise ConfigError("--latent normal needs 'normal:mean,sd' with sd > 0")
        return stats.norm(args[0], args[1])
    raise ConfigError(f"unknown latent law {spec!r}; use uniform, uniform:a,b, power:phi or normal:m,s")


def _load_doc(path: str) -> dict:
    if not os.path.exists(path):
        raise ConfigError(f"model file {path!r} does not exist")
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"model file {path!r} is not valid JSON: {exc}") from None


def _build_model(args) -> tuple[Structure, str, Optional[dict]]:
    """Return ``(structure, sample kind, model document)``."""
    spec = args.model
    if spec == "entry-game":
        if args.lam is None or args.phi is None:
            raise ConfigError("entry-game needs --lambda and --phi")
        return entry_game_model(args.lam, args.phi), "binary", None
    kind, _, path = spec.partition(":")
    if kind not in ("finite", "interval") or not path:
        raise ConfigError(f"unknown model {spec!r}; use entry-game, finite:PATH or interval:PATH")
    doc = _load_doc(path)
    corr = load_correspondence(doc)
    if kind == "finite":
        if not isinstance(corr, FiniteCorrespondence):
            raise ConfigError("finite: models need keys y, u and edges")
        nu = args.nu if args.nu is not None else doc.get("nu")
        if nu is None:
            raise ConfigError("finite models need --nu (or a 'nu' key in the model file)")
        weights = _floats(nu, "--nu") if isinstance(nu, str) else [float(x) for x in nu]
        latent = DiscreteMeasure(weights, tuple(corr.u_labels))
        return Structure(corr, latent, name="finite", params={"file": path}), "label", doc
    if not isinstance(corr, IntervalCorrespondence):
        raise ConfigError("interval: models need keys knots, lower and upper")
    latent = _latent_law(args.latent)
    return Structure(corr, latent, name="interval", params={"file": path, "latent": args.latent}), "numeric", doc


def _family(args, model: Structure) -> SetFamily:
    if args.family is None:
        return SetFamily("powerset") if model.finite_observables else SetFamily("cells")
    return SetFamily.parse(args.family)


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None or env.strip() == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from None


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _quantile_options(args) -> dict:
    return {
        "quantile": args.quantile,
        "reps": args.reps,
        "bandwidth_c": args.bandwidth_c,
        "bandwidth_gamma": args.bandwidth_gamma,
        "subsample_size": args.subsample_size,
        "subsample_count": args.subsample_count,
    }


def _require_data(args) -> str:
    if not args.data:
        raise ConfigError(f"the {args.command} command needs --data")
    return args.data


def cmd_test(args) -> dict:
    model, kind, _ = _build_model(args)
    sample = ingest_sample(_require_data(args), kind)
    fam = _family(args, model)
    report = specification_test(sample, model, fam, args.alpha, seed=args.seed, **_quantile_options(args))
    return report.to_dict()


def cmd_region(args) -> dict:
    if args.model != "entry-game":
        raise ConfigError("region currently supports the entry-game model only")
    if not args.grid:
        raise ConfigError("region needs --grid, e.g. lambda=0.05:1:0.05,phi=0.25:4:0.25")
    grid = ParamGrid.parse(args.grid)
    unknown = set(grid.axes) - {"lambda", "phi"}
    if unknown:
        raise ConfigError(f"unknown grid axes {sorted(unknown)}; entry-game axes are lambda and phi")
    fixed = {"lambda": args.lam, "phi": args.phi}
    for name in ("lambda", "phi"):
        if name not in grid.axes and fixed[name] is None:
            raise ConfigError(f"{name} is neither a grid axis nor fixed by --{name}")

    def factory(**theta):
        full = {**fixed, **theta}
        return entry_game_model(full["lambda"], full["phi"])

    sample = ingest_sample(_require_data(args), "binary")
    fam = SetFamily.parse(args.family) if args.family else SetFamily("powerset")
    region = confidence_region(
        sample, factory, grid, args.alpha, fam, seed=args.seed, n_jobs=args.threads, **_quantile_options(args)
    )
    out = region.to_dict()
    out["grid"] = grid.to_dict()
    return out


def cmd_bounds(args) -> dict:
    if args.delta is None:
        raise ConfigError("bounds needs --delta (bracket width)")
    sample = ingest_sample(_require_data(args), "numeric")
    return censored_mean_bounds(sample, args.delta, args.alpha).to_dict()


def cmd_oracle(args) -> dict:
    model, kind, doc = _build_model(args)
    corr = model.correspondence
    if isinstance(corr, FiniteCorrespondence):
        fc, nu, labels = corr, model.latent, list(corr.y_labels)
        if args.p is not None:
            P = DiscreteMeasure(_floats(args.p, "--p"), tuple(labels))
        elif args.data:
            emp = EmpiricalMeasure(ingest_sample(args.data, kind), model)
            P = DiscreteMeasure.from_counts(emp.weights * emp.n, tuple(labels))
        elif doc is not None and "p" in doc:
            P = DiscreteMeasure([float(x) for x in doc["p"]], tuple(labels))
        else:
            raise ConfigError("oracle needs the observable law: --p, --data, or a 'p' key in the model file")
    else:
        if args.data:
            emp = EmpiricalMeasure(ingest_sample(args.data, kind), model)
            weights = emp.weights
            obs = emp.points.tolist()
        elif args.p is not None and model.finite_observables:
            weights = _floats(args.p, "--p")
            obs = None
        else:
            raise ConfigError("oracle on this model needs --data (or --p for finite observables)")
        fc, nu, labels = model.discretize(args.resolution, None if model.finite_observables else obs)
        P = DiscreteMeasure(np.asarray(weights, dtype=float) / np.sum(weights), tuple(labels))
    result = feasible_coupling(P, nu, fc)
    out = result.to_dict()
    witness = result.dual_witness
    out["T_star"] = result.violation_mass
    out["dual_value"] = float(P.measure(witness) - nu.measure(fc.image(witness)))
    out["dual_witness_labels"] = [_jsonable(labels[i]) for i in witness.indices()]
    out["n_obs"], out["n_latent"] = fc.n_obs, fc.n_latent
    return out


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    return x


COMMANDS = {"test": cmd_test, "region": cmd_region, "bounds": cmd_bounds, "oracle": cmd_oracle}


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="incomplete-infer",
        description="Specification tests and confidence regions for incomplete structural models.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data", help="CSV sample, one observation per row")
    common.add_argument("--alpha", type=float, default=0.95, help="quantile level (default 0.95)")
    common.add_argument("--seed", type=int, default=None, help=f"master seed (falls back to ${SEED_ENV}, then 0)")
    common.add_argument("--output", "-o", help="write the JSON report here instead of stdout")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--model", required=True, help="entry-game | finite:PATH | interval:PATH")
    model.add_argument("--lambda", dest="lam", type=float, help="entry-game lambda in (0, 1]")
    model.add_argument("--phi", type=float, help="entry-game exponent phi > 0")
    model.add_argument("--nu", help="latent weights for finite models, comma-separated")
    model.add_argument("--latent", default="uniform", help="latent law for interval models (default uniform)")
    model.add_argument("--family", help="powerset | cells | rectangles | unions:K")

    quant = argparse.ArgumentParser(add_help=False)
    quant.add_argument("--quantile", choices=["bridge", "subsample"], default="bridge")
    quant.add_argument("--reps", type=int, default=1000, help="bridge replications (default 1000)")
    quant.add_argument("--subsample-size", type=int, default=None, help="b_n (default ceil(n^(2/3)))")
    quant.add_argument("--subsample-count", type=int, default=500, help="B_n (default 500)")
    quant.add_argument("--bandwidth-c", type=float, default=0.5, help="binding-class bandwidth constant c")
    quant.add_argument("--bandwidth-gamma", type=float, default=0.25, help="bandwidth exponent in (0, 1/2)")

    sub.add_parser("test", parents=[common, model, quant], help="specification test at one parameter value")
    p_region = sub.add_parser("region", parents=[common, model, quant], help="confidence region over a grid")
    p_region.add_argument("--grid", help="name=start:stop:step,... (endpoints included)")
    p_region.add_argument("--threads", type=int, default=1, help="worker threads across grid points")
    p_bounds = sub.add_parser("bounds", parents=[common], help="bracketed-mean bounds with confidence interval")
    p_bounds.add_argument("--delta", type=float, help="bracket width")
    p_oracle = sub.add_parser("oracle", parents=[common, model], help="exact transport feasibility check")
    p_oracle.add_argument("--p", help="observable law, comma-separated (alternative to --data)")
    p_oracle.add_argument("--resolution", type=int, default=DEFAULT_RESOLUTION, help="latent cells when discretizing")
    return parser


def _resolved_config(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "output"}
    if "lam" in cfg:
        cfg["lambda"] = cfg.pop("lam")
    return cfg


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    """Parse ``argv``, run the command and emit the JSON report; return the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        args.seed = _resolve_seed(args)
        if getattr(args, "threads", 1) < 1:
            raise ConfigError("--threads must be at least 1")
        report = COMMANDS[args.command](args)
    except DataError as exc:
        print(f"data error: {exc}", file=stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric error: {exc}", file=stderr)
        return EXIT_NUMERIC
    except (IncompleteInferError, ValueError) as exc:
        print(f"config error: {exc}", file=stderr)
        return EXIT_CONFIG
    doc = {
        "command": args.command,
        "config": _resolved_config(args),
        "report": report,
        "version": __version__,
    }
    text = json.dumps(doc, sort_keys=True, indent=2, default=_jsonable) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
