"""Command-line front end: ``jetcheck analyze | corpus | truncate``.

Exit codes: 0 SUFFICIENT, 1 INSUFFICIENT, 2 INCONCLUSIVE, 64 usage error,
65 input parse error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from .corpus import CORPUS, UnknownCorpusEntry, get_entry
from .lojas import SamplerConfig
from .polycore import ParseError, PolyMap, parse_poly
from .report import AnalysisReport, CrossRecord, EstimateRecord, ProblemRecord, VerdictRecord, samples_csv
from .verdict import E_R, E_R_PLUS_1, JetProblem, ProblemError, analyze_jet, cross_validate

EXIT_USAGE = 64
EXIT_DATAERR = 65

log = logging.getLogger("jetcheck")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_components(spec: str) -> tuple[list[str], bool]:
    """Component texts from a file (one per line) or an inline ``;``/``,`` list."""
    path = Path(spec)
    if path.is_file():
        try:
            text = path.read_text()
        except OSError as e:
            raise UsageError(f"cannot read {spec}: {e}") from e
        lines = []
        for raw in text.splitlines():
            s = raw.split("#", 1)[0]
            lines.append(s)
        return lines, True
    return [s for s in spec.replace(";", ",").split(",")], False


def parse_components(spec: str, n: int) -> list:
    """Parse ``--map``; errors carry the file line (or component number) and column."""
    texts, from_file = _read_components(spec)
    polys = []
    for i, t in enumerate(texts):
        if from_file and not t.strip():
            continue
        polys.append(parse_poly(t, n, line=i + 1))
    if not polys:
        raise ParseError("no polynomial components given", spec, 0)
    return polys


def _config(args) -> SamplerConfig:
    base = SamplerConfig()
    kw = dict(eps0=args.eps0, rho=args.rho, nradii=args.nradii, nstarts=args.starts,
              local_steps=args.local_steps, seed=args.seed, tail=args.tail)
    kw = {k: (getattr(base, k) if v is None else v) for k, v in kw.items()}
    try:
        return SamplerConfig(**kw)
    except ValueError as e:
        raise UsageError(str(e)) from e


def _problem(args) -> tuple[JetProblem, str | None]:
    smoothness = E_R if args.cls == "r" else E_R_PLUS_1
    corpus = None
    if args.corpus:
        entry = get_entry(args.corpus)
        corpus = entry.name
        n = args.n if args.n is not None else entry.n
        r = args.r if args.r is not None else entry.r
        comps = [parse_poly(t, n, line=i + 1) for i, t in enumerate(entry.components)]
    else:
        if args.map is None or args.n is None or args.r is None:
            raise UsageError("analyze needs --map, --n and --r (or --corpus NAME)")
        n, r = args.n, args.r
        if n < 1:
            raise UsageError("--n must be positive")
        comps = parse_components(args.map, n)
    if args.m is not None and args.m != len(comps):
        raise UsageError(f"--m {args.m} but {len(comps)} component(s) were given")
    try:
        f = PolyMap(tuple(comps))
        return JetProblem(f, r, smoothness, args.p, args.kind), corpus
    except ProblemError:
        raise
    except ValueError as e:
        raise ProblemError(str(e)) from e


def cmd_analyze(args) -> int:
    cfg = _config(args)
    problem, corpus = _problem(args)
    timings = {}
    t0 = time.perf_counter()
    verdict = analyze_jet(problem, cfg)
    timings["analyze"] = time.perf_counter() - t0
    cross = None
    if args.cross_validate:
        t0 = time.perf_counter()
        cross = CrossRecord.from_cross(cross_validate(problem.f, problem.r, cfg, problem.p))
        timings["cross_validate"] = time.perf_counter() - t0
    report = AnalysisReport(
        problem=ProblemRecord.from_problem(problem, corpus),
        config=cfg,
        estimate=EstimateRecord.from_estimate(verdict.estimate),
        verdict=VerdictRecord.from_verdict(verdict),
        cross_validation=cross,
        timings=timings if args.timings else None,
    )
    text = report.to_json()
    sys.stdout.write(text)
    if args.json:
        Path(args.json).write_text(text)
    if args.csv:
        Path(args.csv).write_text(samples_csv(report.estimate))
    log.info("%s: kappa_hat=%s threshold=%s", verdict.status, verdict.kappa_hat, verdict.threshold)
    return verdict.exit_code


def cmd_corpus(args) -> int:
    if args.list:
        width = max(len(k) for k in CORPUS)
        for e in CORPUS.values():
            print(f"{e.name:<{width}}  n={e.n} m={e.m} r={e.r}  {e.description}")
        return 0
    e = get_entry(args.corpus)
    print(f"# {e.name}: {e.description}")
    print(f"# n={e.n} m={e.m} r={e.r}")
    for c in e.polymap().to_strings():
        print(c)
    return 0


def cmd_truncate(args) -> int:
    if args.r < 0:
        raise UsageError("--r must be nonnegative")
    if args.n < 1:
        raise UsageError("--n must be positive")
    for p in parse_components(args.map, args.n):
        print(p.truncate(args.r).to_string())
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="jetcheck", description="Numerical sufficiency tests for polynomial jets.")
    ap.add_argument("--version", action="version", version=f"jetcheck {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="decide sufficiency of an r-jet")
    src = a.add_mutually_exclusive_group()
    src.add_argument("--map", help="file with one component per line, or inline list 'f1; f2'")
    src.add_argument("--corpus", help="use a built-in jet (see 'jetcheck corpus --list')")
    a.add_argument("--n", type=int, help="number of variables")
    a.add_argument("--m", type=int, help="number of components (checked against --map)")
    a.add_argument("--r", type=int, help="jet order")
    a.add_argument("--class", dest="cls", choices=("r", "r+1"), default="r",
                   help="smoothness class of the germs compared: E_[r] or E_[r+1]")
    a.add_argument("--p", type=int, default=2, help="exponent of the test quantity (default 2)")
    a.add_argument("--kind", choices=("R", "T"), default="R", help="test quantity (default R)")
    a.add_argument("--eps0", type=float)
    a.add_argument("--rho", type=float)
    a.add_argument("--nradii", type=int)
    a.add_argument("--starts", type=int, help="multistart count per sphere")
    a.add_argument("--local-steps", type=int)
    a.add_argument("--seed", type=int)
    a.add_argument("--tail", type=int, help="number of smallest radii in the fit")
    a.add_argument("--json", metavar="PATH", help="also write the report here")
    a.add_argument("--csv", metavar="PATH", help="write per-radius minima as CSV")
    a.add_argument("--cross-validate", action="store_true",
                   help="also run the R, T, Kuo (and Kuiper-Kuo) checks in class E_r")
    a.add_argument("--timings", action="store_true",
                   help="include wall-clock timings (makes reports non-reproducible)")
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("corpus", help="list or show built-in jets")
    g = c.add_mutually_exclusive_group(required=True)
    g.add_argument("--list", action="store_true")
    g.add_argument("--corpus", metavar="NAME")
    c.set_defaults(func=cmd_corpus)

    t = sub.add_parser("truncate", help="print the r-jet of each component")
    t.add_argument("--map", required=True)
    t.add_argument("--n", type=int, required=True)
    t.add_argument("--r", type=int, required=True)
    t.set_defaults(func=cmd_truncate)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except ParseError as e:
        print(f"jetcheck: parse error: {e}", file=sys.stderr)
        if e.text:
            print(f"  {e.text}\n  {' ' * e.pos}^", file=sys.stderr)
        return EXIT_DATAERR
    except UnknownCorpusEntry as e:
        print(f"jetcheck: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, ProblemError) as e:
        print(f"jetcheck: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
