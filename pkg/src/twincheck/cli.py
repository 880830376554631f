"""Command line driver.  Exit codes: 0 pass, 1 check failure, 2 usage or input error."""

from __future__ import annotations

import argparse
import json
import multiprocessing
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from . import opposition
from .chambers import verify_twin_axioms
from .coxeter import CoxeterSystem, format_word, load_matrix, parse_word
from .errors import TwincheckError
from .geometry import plane_info, projective_plane, symplectic_quadrangle
from .models import get_model
from .reports import CheckReport
from .symmetry import collineation_group, quadrangle_collineations

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

CHECKS = ("main0", "main2", "main3", "axioms", "beukjeeven", "baer")
MODELS = ("pg", "gq", "a3", "thin")
SUPPORTED_Q = {"pg": (2, 3, 4, 5), "gq": (2,), "a3": (2,)}
BAER_Q = (2, 3, 5, 7, 8, 11, 13)


class UsageError(TwincheckError):
    pass


@dataclass(frozen=True)
class RunConfig:
    model: str
    check: str
    q: int = 2
    workers: int = 1
    out: str | None = None
    fmt: str = "json"
    coxeter_type: str = "A2"

    def __post_init__(self):
        if self.workers < 1:
            raise UsageError("--workers must be at least 1")
        if self.fmt not in ("json", "csv"):
            raise UsageError(f"unknown format {self.fmt!r}")
        allowed = SUPPORTED_Q.get(self.model)
        if self.check == "baer":
            allowed = BAER_Q
        if allowed is not None and self.q not in allowed:
            raise UsageError(f"q={self.q} is not supported for {self.model}/{self.check}; choose from {allowed}")


# chunked jobs: a job is a plain tuple so it pickles cheaply

def _job_total(job: tuple) -> int:
    kind = job[0]
    if kind == "scan":
        return collineation_group(job[1]).order
    _, check, model, q, ctype = job
    return get_model(model, q, ctype).n_maps


def _run_chunk(job: tuple, start: int, stop: int) -> CheckReport:
    if job[0] == "scan":
        return opposition.verify_absolute_point_theorem(projective_plane(job[1]), start, stop)
    _, check, model, q, ctype = job
    m = get_model(model, q, ctype)
    fn = {
        "main0": opposition.verify_main0_scan,
        "main2": opposition.verify_main2_scan,
        "main3": opposition.verify_fixed_simplices,
    }[check]
    return fn(m, start, stop)


def _prepare(job: tuple) -> None:
    """Build cached objects before forking so workers share them."""
    if job[0] == "scan":
        projective_plane(job[1])
        collineation_group(job[1])
        return
    m = get_model(job[2], job[3], job[4])
    m.twin
    m.vertex_maps


def run_chunked(job: tuple, workers: int) -> CheckReport:
    _prepare(job)
    total = _job_total(job)
    pieces = max(1, min(workers * 4, total)) if workers > 1 else 1
    bounds = [(total * i // pieces, total * (i + 1) // pieces) for i in range(pieces)]
    if workers == 1:
        parts = [_run_chunk(job, lo, hi) for lo, hi in bounds]
    else:
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            parts = list(pool.map(_run_chunk, [job] * pieces, [b[0] for b in bounds], [b[1] for b in bounds]))
    report = parts[0]
    for part in parts[1:]:
        report.merge(part)
    return report


def _single(config: RunConfig) -> CheckReport:
    if config.check == "axioms":
        m = get_model(config.model, config.q, config.coxeter_type)
        report = verify_twin_axioms(m.twin)
        report.check = "axioms"
        report.model = m.name
        gate = m.building.check_gate_property()
        report.merge(gate)
        return report
    if config.check == "beukjeeven":
        if config.model == "gq":
            return opposition.verify_point_displacement(symplectic_quadrangle(), quadrangle_collineations().elements)
        if config.model == "pg":
            return opposition.verify_point_displacement(projective_plane(config.q), collineation_group(config.q).elements)
        raise UsageError("beukjeeven applies to the rank 2 models pg and gq")
    if config.check == "baer":
        if config.model != "pg":
            raise UsageError("baer applies to the model pg")
        return opposition.baer_polarity_checks(projective_plane(config.q))
    raise UsageError(f"unknown check {config.check!r}")


def run_verify(config: RunConfig) -> CheckReport:
    start = time.perf_counter()
    if config.check in ("main0", "main2", "main3"):
        report = run_chunked(("verify", config.check, config.model, config.q, config.coxeter_type), config.workers)
    else:
        report = _single(config)
    report.elapsed_ms = int(round((time.perf_counter() - start) * 1000))
    return report


def run_scan(q: int, workers: int) -> CheckReport:
    if q not in SUPPORTED_Q["pg"]:
        plane_info(q)  # raises NotPrimePower for bad q
        raise UsageError(f"duality scans support q in {SUPPORTED_Q['pg']}")
    start = time.perf_counter()
    report = run_chunked(("scan", q), workers)
    report.check = "scan-dualities"
    report.elapsed_ms = int(round((time.perf_counter() - start) * 1000))
    return report


# output

def _emit(report: CheckReport, fmt: str, out: str | None) -> int:
    text = report.to_csv() if fmt == "csv" else report.to_json()
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    print(report.summary_line(), file=sys.stderr)
    return EXIT_PASS if report.passed else EXIT_FAIL


def cmd_coxeter(action: str, matrix_path: str, word: str | None, as_json: bool) -> int:
    system = CoxeterSystem(load_matrix(matrix_path))
    letters = parse_word(word or "", system.rank)
    if action == "reduce":
        value: object = format_word(system.reduce(letters).word)
    elif action == "length":
        value = system.length(letters)
    elif action == "descents":
        elt = system.reduce(letters)
        value = {side: format_word(sorted(system.descents(elt, side))) for side in ("left", "right")}
    elif action == "longest":
        J = set(letters) if word else set(range(system.rank))
        value = format_word(system.longest_element(J).word)
    else:
        raise UsageError(f"unknown action {action!r}")
    if as_json:
        print(json.dumps({"action": action, "word": word or "", "result": value}))
    elif isinstance(value, dict):
        print(" ".join(f"{k}={v}" for k, v in value.items()))
    else:
        print(value)
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twincheck", description="Exhaustive checks on small twin buildings.")
    sub = parser.add_subparsers(dest="command", required=True)
    default_workers = os.cpu_count() or 1

    plane = sub.add_parser("plane", help="projective plane data")
    plane.add_argument("action", choices=["info"])
    plane.add_argument("--q", type=int, required=True)

    scan = sub.add_parser("scan", help="exhaustive scans")
    scan.add_argument("target", choices=["dualities"])
    scan.add_argument("--q", type=int, required=True)
    scan.add_argument("--out")
    scan.add_argument("--format", choices=["json", "csv"], default="json")
    scan.add_argument("--workers", type=int, default=default_workers)

    verify = sub.add_parser("verify", help="run a verification on a model")
    verify.add_argument("check", choices=CHECKS)
    verify.add_argument("--model", choices=MODELS, required=True)
    verify.add_argument("--q", type=int, default=2)
    verify.add_argument("--type", dest="coxeter_type", choices=["A2", "B2"], default="A2")
    verify.add_argument("--out")
    verify.add_argument("--format", choices=["json", "csv"], default="json")
    verify.add_argument("--workers", type=int, default=default_workers)

    cox = sub.add_parser("coxeter", help="word computations")
    cox.add_argument("action", choices=["reduce", "length", "descents", "longest"])
    cox.add_argument("--matrix", required=True)
    cox.add_argument("--word", default=None)
    cox.add_argument("--json", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    try:
        if args.command == "plane":
            print(json.dumps(plane_info(args.q), indent=2))
            return EXIT_PASS
        if args.command == "scan":
            RunConfig("pg", "scan", args.q, args.workers, args.out, args.format)
            return _emit(run_scan(args.q, args.workers), args.format, args.out)
        if args.command == "verify":
            config = RunConfig(args.model, args.check, args.q, args.workers, args.out, args.format, args.coxeter_type)
            return _emit(run_verify(config), config.fmt, config.out)
        if args.command == "coxeter":
            return cmd_coxeter(args.action, args.matrix, args.word, args.json)
    except (TwincheckError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
