"""Command line interface: ``trustfit fit | generate | benchmark``."""

import argparse
import csv
import json
import math
import os
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import datagen
from .errors import CapacityError, FixedSizeExceededError, NotPositiveDefiniteError
from .model import Dataset, builtin_model, gaussian2d_model
from .solver import FitOptions, Status, fit
from .weights import WeightSpec

REPORT_SCHEMA = "trustfit-report/1"
PHASES = ("residual", "jacobian", "svd", "subproblem")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_MAX_ITER = 2
EXIT_NUMERIC = 3

MEMORY_WARN_LENGTH = 1_000_000


class InputError(Exception):
    """Malformed input file or flag value."""


def exit_code(status):
    if status.converged:
        return EXIT_OK
    if status is Status.MAX_ITERATIONS:
        return EXIT_MAX_ITER
    return EXIT_NUMERIC


def report_schema():
    """The JSON schema fit reports validate against."""
    path = os.path.join(os.path.dirname(__file__), "report_schema.json")
    with open(path) as fh:
        return json.load(fh)


# input parsing --------------------------------------------------------------


def read_csv(path, sigma_col=None):
    """Parse ``y... , z [, sigma]`` columns; returns ``(Dataset, sigma or None)``.

    The header row is required.  All columns except the sigma column are
    independent variables, except the last, which is the observed value.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path}: empty file (a header row is required)") from None
        if sigma_col is not None and sigma_col not in header:
            raise InputError(f"{path}: line 1: no column named {sigma_col!r}")
        if len(header) - (sigma_col is not None) < 2:
            raise InputError(f"{path}: line 1: need at least one y column and a z column")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InputError(
                    f"{path}: line {lineno}: expected {len(header)} columns, got {len(row)}"
                )
            vals = []
            for col, cell in enumerate(row, start=1):
                try:
                    val = float(cell)
                except ValueError:
                    raise InputError(
                        f"{path}: line {lineno}, column {col}: not a number: {cell!r}"
                    ) from None
                if not math.isfinite(val):
                    raise InputError(f"{path}: line {lineno}, column {col}: non-finite value")
                vals.append(val)
            rows.append(vals)
    if not rows:
        raise InputError(f"{path}: no data rows")
    table = np.array(rows)
    sigma = None
    if sigma_col is not None:
        k = header.index(sigma_col)
        sigma = table[:, k]
        if np.any(sigma <= 0):
            line = int(np.flatnonzero(sigma <= 0)[0]) + 2
            raise InputError(f"{path}: line {line}, column {k + 1}: sigma must be positive")
        table = np.delete(table, k, axis=1)
    y = table[:, :-1]
    if y.shape[1] == 1:
        y = y[:, 0]
    return Dataset(y, table[:, -1]), sigma


def read_image_dataset(path):
    try:
        img = datagen.read_image(path)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from None
    return img.dataset(), img


def read_covariance(path):
    """Dense covariance: raw float64 row-major ``.bin`` with a ``.json`` shape sidecar."""
    stem, _ = os.path.splitext(path)
    try:
        with open(stem + ".json") as fh:
            shape = tuple(int(k) for k in json.load(fh)["shape"])
        data = np.fromfile(stem + ".bin", dtype="<f8")
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from None
    if len(shape) != 2 or data.size != shape[0] * shape[1]:
        raise InputError(f"{path}: {data.size} values do not match shape {shape}")
    return data.reshape(shape)


def write_covariance(path, C):
    stem, _ = os.path.splitext(path)
    C = np.asarray(C, dtype="<f8")
    C.tofile(stem + ".bin")
    with open(stem + ".json", "w") as fh:
        json.dump({"shape": list(C.shape), "dtype": "float64", "order": "C"}, fh)


def parse_floats(text, flag):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"{flag}: expected comma-separated numbers, got {text!r}") from None


def parse_lengths(text):
    """``lo..hi:count`` (log spaced) or a comma-separated list."""
    try:
        if ".." in text:
            span, _, count = text.partition(":")
            lo, hi = (float(t) for t in span.split(".."))
            return datagen.log_lengths(lo, hi, int(count) if count else 5)
        return sorted(int(float(t)) for t in text.split(",") if t.strip())
    except ValueError:
        raise InputError(f"--lengths: cannot parse {text!r}") from None


# commands -------------------------------------------------------------------


def build_report(result, model, x0, input_path, v, weights_kind, fixed_size):
    return {
        "schema": REPORT_SCHEMA,
        "model": model.name,
        "param_names": list(model.param_names),
        "input": str(input_path),
        "v": int(v),
        "x0": [float(t) for t in x0],
        "x_opt": [float(t) for t in result.x],
        "cost": float(result.cost) if math.isfinite(result.cost) else None,
        "status": result.status.value,
        "message": result.message,
        "iterations": result.iterations,
        "accepted_steps": result.accepted_steps,
        "n_model_evals": result.n_model_evals,
        "n_jacobian_evals": result.n_jacobian_evals,
        "timings": {k: float(v) for k, v in result.timings.items()},
        "delta_history": [float(d) for d in result.delta_history],
        "alpha_history": [float(a) for a in result.alpha_history],
        "weights": weights_kind,
        "fixed_size": fixed_size,
    }


def cmd_fit(args):
    try:
        model = builtin_model(args.model)
    except ValueError as exc:
        raise InputError(f"--model: {exc}") from None
    x0 = parse_floats(args.x0, "--x0")
    if len(x0) != model.n_params:
        raise InputError(f"--x0: {model.name} takes {model.n_params} values, got {len(x0)}")

    ext = os.path.splitext(args.input)[1].lower()
    sigma = None
    if ext in (".bin", ".json"):
        if args.sigma_col:
            raise InputError("--sigma-col only applies to CSV input")
        data, _ = read_image_dataset(args.input)
    else:
        data, sigma = read_csv(args.input, args.sigma_col)

    if sigma is not None and args.cov:
        raise InputError("use either --sigma-col or --cov, not both")
    if sigma is not None:
        weights = WeightSpec.diagonal(sigma)
    elif args.cov:
        C = read_covariance(args.cov)
        if C.shape != (len(data), len(data)):
            raise InputError(f"--cov: shape {C.shape} does not match {len(data)} data points")
        weights = WeightSpec.covariance(C)
    else:
        weights = WeightSpec.none()

    options = FitOptions(
        ftol=args.ftol,
        xtol=args.xtol,
        gtol=args.gtol,
        max_iterations=args.max_iter,
        fixed_size=args.fixed_size or None,
    )
    try:
        result = fit(model, data, x0, options, weights)
    except (FixedSizeExceededError, CapacityError, NotPositiveDefiniteError) as exc:
        raise InputError(str(exc)) from None
    except ValueError as exc:
        raise InputError(str(exc)) from None

    if args.verbose:
        for k, (d, a, gm) in enumerate(
            zip(result.delta_history, result.alpha_history, result.gamma_history), 1
        ):
            print(f"iter {k:4d}  delta={d:.6g}  alpha={a:.6g}  gain={gm:.6g}", file=sys.stderr)

    report = build_report(
        result, model, x0, args.input, len(data), weights.kind, options.fixed_size
    )
    _emit(json.dumps(report, indent=2), args.out)
    return exit_code(result.status)


def cmd_generate(args):
    lengths = parse_lengths(args.lengths)
    if not lengths:
        raise InputError("--lengths: no lengths given")
    if max(lengths) >= MEMORY_WARN_LENGTH:
        mb = args.per_length * sum(8 * v for v in lengths) / 1e6
        print(
            f"warning: largest image has {max(lengths)} pixels; the dataset needs about "
            f"{mb:.0f} MB on disk and each fit holds several (v x 7) float64 arrays",
            file=sys.stderr,
        )
    try:
        spec = datagen.BenchmarkSpec(
            lengths=tuple(lengths),
            images_per_length=args.per_length,
            noise_sigma=args.noise,
            rng_seed=args.seed,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    try:
        manifest = datagen.write_dataset(datagen.iter_images(spec), args.out, spec)
    except OSError as exc:
        raise InputError(f"--out: cannot write {args.out}: {exc.strerror or exc}") from None
    summary = {
        "out": args.out,
        "images": len(manifest["images"]),
        "lengths": sorted({e["v"] for e in manifest["images"]}),
    }
    print(json.dumps(summary))
    return EXIT_OK


def seed_near_truth(truth, seed, index, spread=0.2):
    """Starting point within ``+-spread`` (relative) of ``truth``."""
    rng = np.random.Generator(np.random.PCG64([int(seed), *index]))
    truth = np.asarray(truth, dtype=float)
    return truth * (1.0 + rng.uniform(-spread, spread, size=truth.size))


BENCH_FIELDS = [
    "v", "n_images", "n_timed", "mean_total_s", "std_total_s",
    *(f"mean_{p}_s" for p in PHASES), "mean_iterations", "converged_fraction",
]


def run_benchmark(dataset_dir, repeats=1, jobs=1, seed=0, spread=0.2):
    """Fit every image of a generated dataset; one summary row per length."""
    manifest = datagen.read_manifest(dataset_dir)
    by_length = {}
    for entry in manifest["images"]:
        by_length.setdefault(int(entry["v"]), []).append(entry["path"])

    def one(task):
        path, k, rep = task
        img = datagen.read_image(os.path.join(dataset_dir, path))
        if img.truth is None:
            raise InputError(f"{path}: sidecar has no truth parameters")
        x0 = seed_near_truth(img.truth.as_array(), seed, (img.v, k))
        return rep, fit(gaussian2d_model, img.dataset(), x0)

    rows = []
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        for v in sorted(by_length):
            paths = by_length[v]
            # untimed warm-up, mirrors discarding the first fit per length
            one((paths[0], 0, -1))
            tasks = [(p, k, rep) for k, p in enumerate(paths) for rep in range(repeats)]
            results = list(pool.map(one, tasks))
            totals = [r.timings["total"] for _, r in results]
            first = [r for rep, r in results if rep == 0]
            row = {
                "v": v,
                "n_images": len(paths),
                "n_timed": len(results),
                "mean_total_s": statistics.fmean(totals),
                "std_total_s": statistics.stdev(totals) if len(totals) > 1 else 0.0,
            }
            for ph in PHASES:
                row[f"mean_{ph}_s"] = statistics.fmean(r.timings[ph] for _, r in results)
            row["mean_iterations"] = statistics.fmean(r.iterations for r in first)
            row["converged_fraction"] = sum(r.success for r in first) / len(first)
            rows.append(row)
    return rows


def cmd_benchmark(args):
    if args.repeats < 1:
        raise InputError("--repeats must be >= 1")
    try:
        rows = run_benchmark(args.dataset, args.repeats, args.jobs, args.seed)
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise InputError(f"--dataset: {exc}") from None
    if args.out:
        with open(args.out, "w", newline="") as fh:
            _write_rows(fh, rows)
    else:
        _write_rows(sys.stdout, rows)
    return EXIT_OK


def _write_rows(fh, rows):
    writer = csv.DictWriter(fh, fieldnames=BENCH_FIELDS)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


# entry point ----------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="trustfit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a built-in model to a data file")
    p.add_argument("--model", required=True,
                   help="gaussian2d | linear | exponential | polynomial:k")
    p.add_argument("--input", required=True, help="CSV file or image .bin with sidecar")
    p.add_argument("--x0", required=True, help="comma-separated starting parameters")
    p.add_argument("--ftol", type=float, default=1e-8)
    p.add_argument("--xtol", type=float, default=1e-8)
    p.add_argument("--gtol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--fixed-size", type=int, default=0, help="pad data to this size (0: off)")
    p.add_argument("--sigma-col", default=None, help="CSV column holding per-point errors")
    p.add_argument("--cov", default=None, help="dense covariance .bin with .json sidecar")
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.add_argument("--verbose", action="store_true", help="log iterations to stderr")
    p.set_defaults(func=cmd_fit)

    g = sub.add_parser("generate", help="generate a 2D Gaussian benchmark dataset")
    g.add_argument("--lengths", default="1e3..1e5:5", help="lo..hi:count or a,b,c")
    g.add_argument("--per-length", type=int, default=10)
    g.add_argument("--noise", type=float, default=0.1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("benchmark", help="time fits over a generated dataset")
    b.add_argument("--dataset", required=True)
    b.add_argument("--repeats", type=int, default=1)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--seed", type=int, default=0, help="seed for starting points")
    b.add_argument("--out", default=None, help="CSV path (stdout if omitted)")
    b.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
