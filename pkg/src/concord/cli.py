"""Command-line experiment harness.

Every subcommand emits one JSON record per line (``--csv`` for a flat
table instead), with stable field ordering so identical invocations are
byte-identical apart from the ``runtime_s`` field. Each record carries the
master seed and its stream index, which together reproduce it exactly.
Errors exit nonzero after printing a single machine-parseable record.
"""

import argparse
import csv as _csv
import io
import json
import sys
import time

import numpy as np
import scipy.stats

from .concordance import concordance_direct, concordance_subset
from .ingest import read_chunks
from .linalg import scatter_from_matrix
from .models import partition_size_heuristic
from .montecarlo import simulate_concordance, simulate_heavy_tail_concordance
from .regression import (
    ConvergenceError,
    coefficient_log_mse,
    communication_cost,
    fit_irls_logistic,
)
from .schema import load_schema, save_schema
from .synthetic import SyntheticSpec, generate, schema_for_synthetic, write_csv

__all__ = ["main"]

TERM_QUANTILE_PROBS = (0.05, 0.25, 0.5, 0.75, 0.95)

MODE_ALIASES = {
    "overlap": "overlapping",
    "overlapping": "overlapping",
    "nonoverlap": "nonoverlapping",
    "nonoverlapping": "nonoverlapping",
}


def _canonical_mode(mode):
    return MODE_ALIASES[mode]


def _parse_sizes(text):
    text = text.strip()
    if not text:
        return []
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _record_stream(seed, k):
    """Independent RNG for grid point k, reproducible from (seed, k)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(k,)))


def _emit(records, out_path, as_csv):
    if as_csv:
        buf = io.StringIO()
        fields = []
        for rec in records:
            for key in rec:
                if key not in fields:
                    fields.append(key)
        writer = _csv.DictWriter(buf, fieldnames=fields, restval="")
        writer.writeheader()
        for rec in records:
            writer.writerow({k: ("" if v is None else v) for k, v in rec.items()})
        text = buf.getvalue()
    else:
        text = "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in records)
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_matrix(data_path, schema, chunk_rows):
    """Materialize the encoded design (and response) of a whole file."""
    designs, responses = [], []
    dropped = 0
    for chunk in read_chunks(data_path, schema, chunk_rows=chunk_rows):
        designs.append(chunk.design)
        if chunk.response is not None:
            responses.append(chunk.response)
        dropped += chunk.dropped_rows
    if not designs:
        raise ValueError(f"{data_path}: no valid rows")
    x = np.vstack(designs)
    if x.shape[0] == 0:
        raise ValueError(f"{data_path}: no valid rows")
    y = np.concatenate(responses) if responses else None
    return x, y, dropped


def _term_quantile_fields(result):
    out = {}
    for p in TERM_QUANTILE_PROBS:
        key = f"term_q{int(round(100 * p)):02d}"
        if result.terms is None:
            out[key] = None
        else:
            out[key] = float(np.quantile(result.terms, p))
    return out


def _concordance_grid(x, sizes, reps, mode, method, sample, seed, experiment):
    """Shared core of the concordance and convergence commands."""
    n = x.shape[0]
    total = scatter_from_matrix(x)
    records = []
    k = 0
    for size in sizes:
        if size > n:
            raise ValueError(f"sample size {size} exceeds {n} valid rows")
        for rep in range(reps):
            rng = _record_stream(seed, k)
            start = time.perf_counter()
            if sample == "head":
                idx = np.arange(size)
            else:
                idx = rng.choice(n, size=size, replace=False)
            rows = x[idx]
            if method == "direct":
                if mode == "overlapping":
                    result = concordance_direct(rows, x)
                else:
                    mask = np.ones(n, dtype=bool)
                    mask[idx] = False
                    result = concordance_direct(rows, x[mask])
                result = result.with_mode(mode)
            else:
                subset = scatter_from_matrix(rows)
                result = concordance_subset(total, subset, mode)
            runtime = time.perf_counter() - start
            rec = {
                "experiment": experiment,
                "i": size,
                "rep": rep,
                "seed": seed,
                "stream": k,
                "mode": mode,
                "method": method,
                "sample": sample,
                "n_total": n,
                "n_reference": result.n_reference,
                "value": result.value,
                "warnings": list(result.warnings),
            }
            rec.update(_term_quantile_fields(result))
            rec["runtime_s"] = runtime
            records.append(rec)
            k += 1
    return records


def cmd_concordance(args):
    schema = load_schema(args.schema)
    x, _, dropped = _load_matrix(args.data, schema, args.chunk_rows)
    sizes = _parse_sizes(args.sizes)
    records = _concordance_grid(
        x,
        sizes,
        args.reps,
        _canonical_mode(args.mode),
        args.method,
        args.sample,
        args.seed,
        experiment="concordance",
    )
    for rec in records:
        rec["dropped_rows"] = dropped
    _emit(records, args.out, args.csv)
    return 0


def cmd_convergence(args):
    with open(args.config, "r", encoding="utf-8") as fh:
        config = json.load(fh)
    schema = load_schema(config["schema"])
    x, _, _ = _load_matrix(config["data"], schema, int(config.get("chunk_rows", 8192)))
    sizes = [int(s) for s in config.get("sizes", [])]
    reps = int(config.get("reps", 1))
    seed = int(config.get("seed", 0))
    sample = config.get("sample", "random")
    records = []
    for mode in config.get("modes", ["overlapping"]):
        for method in config.get("methods", ["trace"]):
            records.extend(
                _concordance_grid(
                    x,
                    sizes,
                    reps,
                    _canonical_mode(mode),
                    method,
                    sample,
                    seed,
                    experiment="convergence",
                )
            )
    _emit(records, args.out, args.csv)
    return 0


def cmd_glm(args):
    schema = load_schema(args.schema)
    if schema.response is None or schema.response.threshold is None:
        raise ValueError("glm requires a schema with a binary response rule")
    x, y, _ = _load_matrix(args.data, schema, args.chunk_rows)
    n = x.shape[0]
    sizes = _parse_sizes(args.sizes)

    if args.reference_size is None or args.reference_size >= n:
        ref_x, ref_y = x, y
        ref_n = n
    else:
        ref_rng = _record_stream(args.seed, 1_000_000)
        ref_idx = ref_rng.choice(n, size=args.reference_size, replace=False)
        ref_x, ref_y = x[ref_idx], y[ref_idx]
        ref_n = args.reference_size
    reference = fit_irls_logistic(ref_x, ref_y, max_iter=args.max_iter, tol=args.tol)

    total = scatter_from_matrix(x)
    records = []
    k = 0
    for size in sizes:
        if size > n:
            raise ValueError(f"sample size {size} exceeds {n} valid rows")
        for rep in range(args.reps):
            rng = _record_stream(args.seed, k)
            start = time.perf_counter()
            idx = np.arange(size) if args.sample == "head" else rng.choice(
                n, size=size, replace=False
            )
            rows, resp = x[idx], y[idx]
            rec = {
                "experiment": "glm",
                "i": size,
                "rep": rep,
                "seed": args.seed,
                "stream": k,
                "n_total": n,
                "n_reference_fit": ref_n,
                "sample": args.sample,
            }
            try:
                fit = fit_irls_logistic(rows, resp, max_iter=args.max_iter, tol=args.tol)
                rec["log_mse"] = coefficient_log_mse(
                    fit.coefficients, reference.coefficients
                )
                rec["iterations"] = fit.diagnostics["iterations"]
                rec["converged"] = True
            except ConvergenceError as exc:
                rec["log_mse"] = None
                rec["iterations"] = None
                rec["converged"] = False
                rec["fit_error"] = str(exc)
            subset = scatter_from_matrix(rows)
            rec["concordance"] = concordance_subset(total, subset, "overlapping").value
            rec["runtime_s"] = time.perf_counter() - start
            records.append(rec)
            k += 1
    _emit(records, args.out, args.csv)
    return 0


def cmd_simulate(args):
    start = time.perf_counter()
    if args.mode == "cauchy":
        report = simulate_heavy_tail_concordance(
            i=args.i, n=args.n, d=args.d, trials=args.trials, seed=args.seed
        )
    else:
        sigma = None
        if args.rho != 0.0:
            sigma = np.full((args.d, args.d), args.rho)
            np.fill_diagonal(sigma, 1.0)
        report = simulate_concordance(
            i=args.i,
            n=args.n,
            d=args.d,
            sigma=sigma,
            trials=args.trials,
            mode=_canonical_mode(args.mode),
            seed=args.seed,
            basis=args.basis,
        )
    rec = {"experiment": "simulate", **report.to_dict()}
    rec["runtime_s"] = time.perf_counter() - start
    _emit([rec], args.out, args.csv)
    return 0


def cmd_partition_size(args):
    start = time.perf_counter()
    mode = _canonical_mode(args.mode)
    chosen = partition_size_heuristic(
        args.n, args.d, args.tolerance, args.confidence, mode=mode
    )
    z = float(scipy.stats.norm.ppf((1.0 + args.confidence) / 2.0))

    def variance(i):
        if mode == "overlapping":
            return 2.0 * (args.n - i) / (args.d * i * (args.n + 2))
        if i >= args.n:
            return float("inf")
        return 2.0 * args.n / (args.d * i * (args.n - i))

    def half_width(i):
        return z * float(np.sqrt(variance(i)))

    rec = {
        "experiment": "partition-size",
        "n": args.n,
        "d": args.d,
        "tolerance": args.tolerance,
        "confidence": args.confidence,
        "mode": mode,
        "block_size": chosen,
        "z": z,
        "half_width_at_i": half_width(chosen),
        "satisfied_at_i": half_width(chosen) <= args.tolerance,
        "half_width_at_i_minus_1": half_width(chosen - 1) if chosen > 1 else None,
        "satisfied_at_i_minus_1": (
            half_width(chosen - 1) <= args.tolerance if chosen > 1 else None
        ),
        "runtime_s": time.perf_counter() - start,
    }
    _emit([rec], args.out, args.csv)
    return 0


def cmd_cost(args):
    start = time.perf_counter()
    dnr, pooled = communication_cost(args.r, args.d, args.bytes_per_value)
    rec = {
        "experiment": "cost",
        "r": args.r,
        "d": args.d,
        "bytes_per_value": args.bytes_per_value,
        "dnr_bytes": dnr,
        "pooled_bytes": pooled,
        "runtime_s": time.perf_counter() - start,
    }
    _emit([rec], args.out, args.csv)
    return 0


def cmd_generate(args):
    start = time.perf_counter()
    beta = None
    if args.beta:
        beta = np.array([float(tok) for tok in args.beta.split(",")])
    spec = SyntheticSpec(
        n=args.n,
        d=args.d,
        rho=args.rho,
        beta=beta,
        noise_sd=args.noise_sd,
        response=args.response,
        drift_column=args.drift_column,
        drift_magnitude=args.drift_magnitude,
    )
    x, y, metadata = generate(spec, seed=args.seed)
    write_csv(args.out_data, x, y)
    if args.schema_out:
        threshold = 0.5 if args.response == "logistic" else None
        schema = schema_for_synthetic(
            args.d,
            response="y" if y is not None else None,
            binary_threshold=threshold,
        )
        save_schema(schema, args.schema_out)
    rec = {
        "experiment": "generate",
        **metadata,
        "data": args.out_data,
        "schema": args.schema_out,
        "runtime_s": time.perf_counter() - start,
    }
    _emit([rec], args.out, args.csv)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="concord",
        description=(
            "Scatter-matrix concordance diagnostics and partitioned "
            "regression experiments"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_output_flags(p):
        p.add_argument("--out", default=None, help="write records to this file")
        p.add_argument("--csv", action="store_true", help="emit a CSV table instead of JSON lines")

    p = sub.add_parser("concordance", help="concordance of sampled subsets of a data file")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--mode", choices=sorted(MODE_ALIASES), default="overlap")
    p.add_argument("--method", choices=["direct", "trace"], default="trace")
    p.add_argument("--sample", choices=["random", "head"], default="random")
    p.add_argument("--sizes", required=True, help="comma-separated subset sizes")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--chunk-rows", type=int, default=8192)
    add_output_flags(p)
    p.set_defaults(func=cmd_concordance)

    p = sub.add_parser("convergence", help="run a concordance grid from a JSON config")
    p.add_argument("--config", required=True)
    add_output_flags(p)
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("glm", help="subset logistic fits vs a reference fit")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--sizes", required=True)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sample", choices=["random", "head"], default="random")
    p.add_argument("--chunk-rows", type=int, default=8192)
    p.add_argument("--max-iter", type=int, default=25)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument(
        "--reference-size",
        type=int,
        default=None,
        help="fit the reference on a random subsample of this size instead of all rows",
    )
    add_output_flags(p)
    p.set_defaults(func=cmd_glm)

    p = sub.add_parser("simulate", help="Monte Carlo validation of the concordance models")
    p.add_argument("--i", type=int, default=50)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--mode", choices=sorted(MODE_ALIASES) + ["cauchy"], default="overlap")
    p.add_argument("--basis", choices=["model", "estimated"], default="model")
    p.add_argument("--rho", type=float, default=0.0, help="equicorrelation of sigma")
    p.add_argument("--seed", type=int, default=0)
    add_output_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("partition-size", help="smallest block size meeting a concordance bound")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--tolerance", type=float, required=True)
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--mode", choices=sorted(MODE_ALIASES), default="overlap")
    add_output_flags(p)
    p.set_defaults(func=cmd_partition_size)

    p = sub.add_parser("cost", help="bytes moved to combine r blocks of a d-column model")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--bytes-per-value", type=int, default=8)
    add_output_flags(p)
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("generate", help="write a synthetic dataset and matching schema")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--beta", default=None, help="comma-separated coefficients")
    p.add_argument("--noise-sd", type=float, default=1.0)
    p.add_argument("--response", choices=["linear", "logistic", "none"], default="linear")
    p.add_argument("--drift-column", type=int, default=None)
    p.add_argument("--drift-magnitude", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-data", required=True, help="destination CSV path")
    p.add_argument("--schema-out", default=None, help="also write the matching schema JSON")
    add_output_flags(p)
    p.set_defaults(func=cmd_generate)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 1
    except Exception as exc:  # single-line machine-parseable error record
        sys.stdout.write(
            json.dumps(
                {"error": type(exc).__name__, "message": str(exc)}, sort_keys=True
            )
            + "\n"
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
