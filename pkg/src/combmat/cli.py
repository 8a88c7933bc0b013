"""Command-line runner for combmat experiments and exact checks.

Each subcommand writes one CSV and one JSON manifest into the output
directory (``--out-dir``, else ``$COMBMAT_OUTPUT_DIR``, else
``./combmat-output``). Exit status is 0 on success, 2 when the inputs fail
a hypothesis of the bound being examined (for example an eigenpair
perturbation or a prime dividing d), and 1 on any other error or on a
failed verification.
"""

from __future__ import annotations

import argparse
import itertools
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

from . import __version__
from .anticoncentration import (
    AtomDistribution,
    appendix_sweep,
    atom_distribution_bruteforce,
    atom_distribution_dp,
    fourier_profile,
    verify_atom_bound,
    verify_cosine_bound,
)
from .errors import CombmatError, HypothesisViolation, NotPrimeError, RangeViolation, UnknownKeyError
from .experiments import (
    RESULTS_SCHEMA,
    ExperimentConfig,
    choose_prime,
    conjecture_scan,
    estimate_perturbed_singularity,
    estimate_singularity,
    kernel_first_moment,
    results_row,
    zero_column_probability,
)
from .fflinalg import (
    IntMatrix,
    PrimeField,
    det_integer_exact,
    det_mod_p,
    format_matrix,
    is_prime,
    kernel_size,
    rank_mod_p,
    read_matrix,
    reduce_mod_p,
    write_matrix,
)
from .persist import finalize_manifest, format_decimal, format_rational, result_paths, start_manifest, write_results
from .sampler import RngStream, coupling_law, sample_matrix

__all__ = ["CONFIG_KEYS", "parse_config", "render_config", "config_dict", "dispatch", "main", "build_parser"]

OUTPUT_ENV = "COMBMAT_OUTPUT_DIR"
CONFIG_KEYS = ("n", "d", "trials", "seed", "p", "A", "matrix")
SUBCOMMANDS = (
    "sample", "det", "atom", "fourier", "verify-appendix", "verify-bounds", "mc-singularity",
    "mc-perturbed", "kernel-moment", "zero-column", "conjecture-scan", "coupling-check",
)

EXIT_OK, EXIT_ERROR, EXIT_HYPOTHESIS = 0, 1, 2


# -- configuration ---------------------------------------------------------


def _read_config_file(path) -> dict:
    values = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise RangeViolation(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return values


def _parse_inline_matrix(text: str) -> IntMatrix:
    return IntMatrix(tuple(tuple(int(x) for x in row.split()) for row in text.split(";") if row.strip()))


def _render_inline_matrix(A: IntMatrix) -> str:
    return "; ".join(" ".join(str(x) for x in row) for row in A.rows)


def _to_int(key: str, value) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise RangeViolation(f"{key} must be an integer, got {value!r}") from None


def parse_config(path=None, flags: Optional[Mapping] = None) -> ExperimentConfig:
    """Build a validated config from an optional key=value file plus flags.

    Flags win over file values; ``None`` flag values are ignored.
    """
    raw: dict = _read_config_file(path) if path is not None else {}
    raw.update({k: v for k, v in (flags or {}).items() if v is not None})
    unknown = sorted(set(raw) - set(CONFIG_KEYS))
    if unknown:
        raise UnknownKeyError(f"unknown configuration keys: {', '.join(unknown)}")

    A = None
    if "A" in raw:
        A = raw["A"] if isinstance(raw["A"], IntMatrix) else _parse_inline_matrix(str(raw["A"]))
    elif "matrix" in raw:
        A = read_matrix(raw["matrix"])

    prime = None
    if str(raw.get("p", "auto")).strip().lower() != "auto":
        prime = _to_int("p", raw["p"])
        if not is_prime(prime):
            raise NotPrimeError(f"p must be prime, got {prime}")

    if "n" not in raw and A is None:
        raise RangeViolation("missing required key n")
    if "d" not in raw:
        raise RangeViolation("missing required key d")
    n = _to_int("n", raw["n"]) if "n" in raw else A.n_rows
    return ExperimentConfig(
        n=n,
        d=_to_int("d", raw["d"]),
        trials=_to_int("trials", raw.get("trials", 1000)),
        master_seed=_to_int("seed", raw.get("seed", 0)),
        prime=prime,
        A=A,
    )


def render_config(cfg: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config` as key=value text."""
    lines = [
        f"n={cfg.n}",
        f"d={cfg.d}",
        f"trials={cfg.trials}",
        f"seed={cfg.master_seed}",
        f"p={'auto' if cfg.prime is None else cfg.prime}",
    ]
    if cfg.A is not None:
        lines.append(f"A={_render_inline_matrix(cfg.A)}")
    return "\n".join(lines) + "\n"


def config_dict(cfg: ExperimentConfig) -> dict:
    return {
        "n": cfg.n,
        "d": cfg.d,
        "trials": cfg.trials,
        "seed": cfg.master_seed,
        "p": "auto" if cfg.prime is None else cfg.prime,
        "A": None if cfg.A is None else [list(r) for r in cfg.A.rows],
    }


# -- jobs ------------------------------------------------------------------


@dataclass
class Outcome:
    rows: list
    schema: Sequence[str]
    lines: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    code: int = EXIT_OK


@dataclass
class Job:
    config: dict
    run: Callable[[], Outcome]
    master_seed: Optional[int] = None
    prime_choice: Optional[dict] = None


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _config_from_args(args) -> ExperimentConfig:
    flags = {
        "n": args.n, "d": args.d, "trials": args.trials, "seed": args.seed,
        "p": args.p, "matrix": getattr(args, "matrix", None),
    }
    return parse_config(args.config, flags)


def _prime_record(cfg: ExperimentConfig) -> dict:
    if cfg.prime is not None:
        return {"rule": "fixed", "p": cfg.prime, "target": None, "degenerate": False}
    c = choose_prime(cfg.n, cfg.d)
    target = None if math.isinf(c.target) else c.target
    return {"rule": "auto", "p": c.p, "target": target, "degenerate": c.degenerate}


def _estimate_lines(est) -> list[str]:
    return [
        f"estimate {format_decimal(est.estimate)} ({est.successes}/{est.trials}), "
        f"95% CI [{format_decimal(est.ci_lo)}, {format_decimal(est.ci_hi)}]"
    ]


def _job_sample(args) -> Job:
    cfg = {"n": args.n, "d": args.d, "seed": args.seed, "stream": args.stream}

    def run():
        Q = sample_matrix(args.n, args.d, RngStream(args.seed, args.stream))
        if args.matrix_out:
            write_matrix(args.matrix_out, Q.to_int_matrix())
        rows = [{"row": i + 1, "support": str(s)} for i, s in enumerate(Q.rows)]
        return Outcome(rows, ("row", "support"), [format_matrix(Q.to_int_matrix()).rstrip("\n")])

    return Job(cfg, run, master_seed=args.seed)


def _job_det(args) -> Job:
    A = read_matrix(args.matrix)
    p = None if args.p is None else PrimeField(args.p).p
    cfg = {"matrix": [list(r) for r in A.rows], "p": p}

    def run():
        det = det_integer_exact(A)
        row = {"det": det, "p": "", "det_mod_p": "", "rank_mod_p": "", "kernel_size": ""}
        lines = [f"det {det}"]
        if p is not None:
            M = reduce_mod_p(A, p)
            row.update(p=p, det_mod_p=det_mod_p(M), rank_mod_p=rank_mod_p(M), kernel_size=kernel_size(M))
            lines.append(f"det mod {p} = {row['det_mod_p']}, rank {row['rank_mod_p']}, kernel size {row['kernel_size']}")
        return Outcome([row], ("det", "p", "det_mod_p", "rank_mod_p", "kernel_size"), lines)

    return Job(cfg, run)


def _job_atom(args) -> Job:
    v = _int_list(args.v)
    cfg = {"v": v, "p": args.p, "d": args.d, "method": args.method}

    def run():
        fn = atom_distribution_bruteforce if args.method == "bruteforce" else atom_distribution_dp
        dist: AtomDistribution = fn(v, args.d, args.p)
        lines = [f"P[b={b}] = {format_rational(x)} ({format_decimal(x)})" for b, x in sorted(dist.probs.items())]
        return Outcome(dist.to_rows(), ("b", "numerator", "denominator"), lines)

    return Job(cfg, run)


def _job_fourier(args) -> Job:
    v = _int_list(args.v)
    cfg = {"v": v, "p": args.p, "d": args.d}

    def run():
        prof = fourier_profile(v, args.d, args.p)
        lines = [f"|coef({xi})| = {format_decimal(m)}" for xi, m in sorted(prof.magnitudes.items())]
        return Outcome(prof.to_rows(), ("xi", "magnitude"), lines)

    return Job(cfg, run)


def _job_verify_appendix(args) -> Job:
    primes = _int_list(args.primes)
    for q in primes:
        PrimeField(q)
    cfg = {"n_max": args.n_max, "primes": primes}

    def run():
        groups: dict = {}
        for cell in appendix_sweep(args.n_max, primes):
            g = groups.setdefault((cell.n, cell.d, cell.p), [0, 0, 0])
            g[0] += 1
            g[1] += not cell.holds
            g[2] += not cell.holds_strong
        rows = [
            {"n": n, "d": d, "p": p, "cells": c, "failures": f, "strong_failures": s}
            for (n, d, p), (c, f, s) in sorted(groups.items())
        ]
        cells = sum(r["cells"] for r in rows)
        failures = sum(r["failures"] for r in rows)
        lines = [f"{cells} cells checked, {failures} violate 2n*a >= d*c"]
        summary = {"cells": cells, "failures": failures, "strong_failures": sum(r["strong_failures"] for r in rows)}
        schema = ("n", "d", "p", "cells", "failures", "strong_failures")
        return Outcome(rows, schema, lines, summary, EXIT_OK if failures == 0 else EXIT_ERROR)

    return Job(cfg, run)


def _job_verify_bounds(args) -> Job:
    primes = _int_list(args.primes)
    for q in primes:
        PrimeField(q)
    cfg = {"n_max": args.n_max, "primes": primes, "p_max": args.p_max}

    def run():
        rows = []
        for n in range(2, args.n_max + 1):
            for p in primes:
                for d in range(1, n // 2 + 1):
                    worst, count, bad = Fraction(0), 0, 0
                    for v in itertools.product(range(p), repeat=n):
                        if len(set(v)) == 1:
                            continue
                        res = verify_atom_bound(v, d, p)
                        count += 1
                        bad += not res.holds
                        worst = max(worst, res.max_atom)
                    rows.append({
                        "check": "atom", "n": n, "d": d, "p": p, "instances": count,
                        "failures": bad, "worst": worst, "bound": 1 - Fraction(d, 2 * n),
                    })
        for p in range(2, args.p_max + 1):
            if is_prime(p):
                ratio, ok = verify_cosine_bound(p)
                rows.append({
                    "check": "cosine", "n": "", "d": "", "p": p, "instances": p - 1,
                    "failures": int(not ok), "worst": ratio, "bound": Fraction(1),
                })
        failures = sum(r["failures"] for r in rows)
        schema = ("check", "n", "d", "p", "instances", "failures", "worst", "worst_decimal", "bound")
        lines = [f"{len(rows)} bound checks, {failures} failures"]
        return Outcome(rows, schema, lines, {"failures": failures}, EXIT_OK if failures == 0 else EXIT_ERROR)

    return Job(cfg, run)


def _job_mc(args, mode: str) -> Job:
    cfg = _config_from_args(args)
    if mode == "perturbed" and cfg.A is None:
        raise RangeViolation("mc-perturbed needs --matrix (or A/matrix in the config file)")

    def run():
        if mode == "perturbed":
            est = estimate_perturbed_singularity(cfg, args.workers)
        else:
            est = estimate_singularity(cfg, args.workers)
        return Outcome([results_row(cfg, est, mode)], RESULTS_SCHEMA, _estimate_lines(est))

    return Job(config_dict(cfg), run, cfg.master_seed, _prime_record(cfg))


def _job_kernel(args) -> Job:
    cfg = _config_from_args(args)

    def run():
        km = kernel_first_moment(cfg, args.workers)
        row = results_row(cfg, km.tail, "kernel")
        row["p"] = km.p
        lines = [
            f"mean kernel size {format_decimal(km.mean)} over {cfg.trials} trials at p={km.p}",
            f"P[K >= p] {format_decimal(km.tail.estimate)} <= E[K]/p + 3 SE = "
            f"{format_decimal(km.markov_bound)}: {'yes' if km.markov_holds else 'NO'}",
        ]
        summary = {
            "p": km.p,
            "mean_kernel_size": format_rational(km.mean),
            "mean_kernel_size_decimal": format_decimal(km.mean),
            "markov_bound": km.markov_bound,
            "markov_holds": km.markov_holds,
            "kernel_size_counts": {str(k): v for k, v in km.counts.items()},
        }
        return Outcome([row], RESULTS_SCHEMA, lines, summary, EXIT_OK if km.markov_holds else EXIT_ERROR)

    return Job(config_dict(cfg), run, cfg.master_seed, _prime_record(cfg))


def _job_zero_column(args) -> Job:
    cfg = {"n": args.n, "d": args.d}

    def run():
        prob = zero_column_probability(args.n, args.d)
        row = {"n": args.n, "d": args.d, "probability": prob}
        lines = [format_rational(prob), format_decimal(prob)]
        return Outcome([row], ("n", "d", "probability", "probability_decimal"), lines)

    return Job(cfg, run)


def _job_conjecture_scan(args) -> Job:
    n_values, c_values = _int_list(args.n_values), _float_list(args.c_values)
    cfg = {"n_values": n_values, "c_values": c_values, "trials": args.trials, "seed": args.seed}

    def run():
        rows = conjecture_scan(n_values, c_values, args.trials, args.seed, args.workers)
        schema = RESULTS_SCHEMA + ("c", "zero_column", "zero_column_decimal")
        lines = [
            f"n={r['n']} c={r['c']} d={r['d']}: singular {format_decimal(r['estimate'])}, "
            f"zero column {format_decimal(r['zero_column'])}"
            for r in rows
        ]
        return Outcome(rows, schema, lines)

    return Job(cfg, run, args.seed)


def _job_coupling_check(args) -> Job:
    cfg = {"n_max": args.n_max}

    def run():
        rows = []
        for n in range(2, args.n_max + 1):
            for d in range(1, n // 2 + 1):
                expected = Fraction(math.factorial(d) * math.factorial(n - d), math.factorial(n))
                for kind in ("bernoulli", "rademacher"):
                    law = coupling_law(n, d, kind)
                    total = sum(law.values())
                    uniform = len(law) == math.comb(n, d) and all(
                        Fraction(c, total) == expected for c in law.values()
                    )
                    rows.append({
                        "n": n, "d": d, "coupling": kind, "supports": len(law),
                        "min_count": min(law.values()), "max_count": max(law.values()),
                        "probability": expected, "uniform": uniform,
                    })
        bad = sum(not r["uniform"] for r in rows)
        schema = ("n", "d", "coupling", "supports", "min_count", "max_count", "probability", "uniform")
        lines = [f"{len(rows)} (n, d, coupling) cases, {bad} non-uniform"]
        return Outcome(rows, schema, lines, {"non_uniform": bad}, EXIT_OK if bad == 0 else EXIT_ERROR)

    return Job(cfg, run)


_JOBS = {
    "sample": _job_sample,
    "det": _job_det,
    "atom": _job_atom,
    "fourier": _job_fourier,
    "verify-appendix": _job_verify_appendix,
    "verify-bounds": _job_verify_bounds,
    "mc-singularity": lambda a: _job_mc(a, "singularity"),
    "mc-perturbed": lambda a: _job_mc(a, "perturbed"),
    "kernel-moment": _job_kernel,
    "zero-column": _job_zero_column,
    "conjecture-scan": _job_conjecture_scan,
    "coupling-check": _job_coupling_check,
}


# -- argument parsing ------------------------------------------------------


def _add_experiment_flags(sp, matrix: bool = False):
    sp.add_argument("--config", help="flat key=value config file; flags override it")
    sp.add_argument("--n", type=int)
    sp.add_argument("--d", type=int)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--p", help="'auto' or a fixed prime")
    if matrix:
        sp.add_argument("--matrix", help="integer matrix file (perturbation A)")
    sp.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="combmat", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", help="draw one Q_{n,d}")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--stream", type=int, default=0)
    sp.add_argument("--matrix-out", help="also write the matrix in text format")

    sp = sub.add_parser("det", help="exact determinant, optionally with mod-p data")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--p", type=int)

    for name, helptext in (("atom", "exact atom law of q.v"), ("fourier", "Fourier magnitudes of q.v")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--v", required=True, help="comma-separated entries")
        sp.add_argument("--p", type=int, required=True)
        sp.add_argument("--d", type=int, required=True)
        if name == "atom":
            sp.add_argument("--method", choices=("dp", "bruteforce"), default="dp")

    sp = sub.add_parser("verify-appendix", help="exhaustive 2n*a >= d*c sweep")
    sp.add_argument("--n-max", type=int, default=40)
    sp.add_argument("--primes", default="2,3,5,7")

    sp = sub.add_parser("verify-bounds", help="exhaustive atom bound and cosine bound")
    sp.add_argument("--n-max", type=int, default=6)
    sp.add_argument("--primes", default="2,3")
    sp.add_argument("--p-max", type=int, default=10_000)

    sp = sub.add_parser("mc-singularity", help="estimate P[det Q = 0]")
    _add_experiment_flags(sp)
    sp = sub.add_parser("mc-perturbed", help="estimate P[det(A + Q) = 0]")
    _add_experiment_flags(sp, matrix=True)
    sp = sub.add_parser("kernel-moment", help="mean kernel size over Z_p and P[K >= p]")
    _add_experiment_flags(sp)

    sp = sub.add_parser("zero-column", help="exact P[some column is zero]")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--d", type=int, required=True)

    sp = sub.add_parser("conjecture-scan", help="singularity near d = c ln n")
    sp.add_argument("--n-values", default="16,32,64")
    sp.add_argument("--c-values", default="0.5,1,2")
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)

    sp = sub.add_parser("coupling-check", help="exact uniformity of both couplings")
    sp.add_argument("--n-max", type=int, default=6)

    for sp in sub.choices.values():
        sp.add_argument("--out-dir", help=f"output directory (default ${OUTPUT_ENV} or ./combmat-output)")
    return parser


def _out_dir(args) -> Path:
    return Path(args.out_dir or os.environ.get(OUTPUT_ENV) or "combmat-output")


def dispatch(command: str, args: argparse.Namespace) -> int:
    """Run one subcommand, writing its CSV and manifest; returns the exit code."""
    if command not in _JOBS:
        raise RangeViolation(f"unknown subcommand {command!r}")
    job = _JOBS[command](args)
    csv_path, manifest_path = result_paths(_out_dir(args), command, job.config)
    manifest = start_manifest(manifest_path, command, job.config, csv_path, job.master_seed, job.prime_choice)
    try:
        outcome = job.run()
    except HypothesisViolation as e:
        finalize_manifest(manifest_path, manifest, "rejected", {"reason": str(e)})
        raise
    except Exception as e:
        finalize_manifest(manifest_path, manifest, "failed", {"reason": str(e)})
        raise
    write_results(outcome.rows, outcome.schema, csv_path)
    status = "complete" if outcome.code == EXIT_OK else "verification-failed"
    finalize_manifest(manifest_path, manifest, status, outcome.summary)
    for line in outcome.lines:
        print(line)
    print(f"results: {csv_path}")
    print(f"manifest: {manifest_path}")
    return outcome.code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return dispatch(args.command, args)
    except HypothesisViolation as e:
        print(f"combmat {args.command}: hypothesis not met: {e}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (CombmatError, OSError) as e:
        print(f"combmat {args.command}: error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
