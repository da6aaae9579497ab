"""Command line: generate, run, verify, sweep.

Every ``--flag`` can also come from the environment as ``CLIQUECOLOR_FLAG``
(dashes become underscores); explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from .core import D1LCInstance, dumps_instance, loads_instance, verify_coloring
from .driver import Config, color
from .errors import ColoringError, ParseError
from .generate import GenSpec, generate

ENV_PREFIX = "CLIQUECOLOR_"
SWEEP_HEADER = ["n", "m", "rounds", "f_edges", "gbad_edges", "depth"]

EXIT_OK, EXIT_FAIL, EXIT_STAGE = 0, 1, 3


def _env(name: str, default=None):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"), default)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=int(_env("seed", 0)))
    p.add_argument("--constant-C", dest="C", type=int, default=int(_env("constant-C", 16)))
    p.add_argument("--collect-kappa", dest="kappa", type=float, default=float(_env("collect-kappa", 4.0)))
    p.add_argument("--c-delta", type=float, default=float(_env("c-delta", 4.0)))
    p.add_argument("--derand", default=_env("derand", "sample:16"), help="exact | sample:N")
    p.add_argument("--k", type=int, default=int(_env("k", 4)), help="independence of the hash family")
    p.add_argument("--range-bits", type=int, default=_env("range-bits"))
    p.add_argument("--iterations", type=int, default=int(_env("iterations", 20)))
    p.add_argument("--budget", type=int, default=_env("budget"))


def _config(args) -> Config:
    return Config(
        C=args.C,
        kappa=args.kappa,
        c_delta=args.c_delta,
        k=args.k,
        derand=args.derand,
        iterations=args.iterations,
        range_bits=int(args.range_bits) if args.range_bits is not None else None,
        rng_seed=args.seed,
        budget=int(args.budget) if args.budget is not None else None,
    )


def _read_instance(path: str) -> D1LCInstance:
    try:
        return loads_instance(Path(path).read_text())
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise ParseError(f"cannot read instance {path}: {e}") from e


def _read_coloring(path: str) -> dict[int, int]:
    try:
        data = json.loads(Path(path).read_text())
        cols = data["coloring"] if isinstance(data, dict) else data
        if isinstance(cols, dict):
            return {int(k): int(v) for k, v in cols.items()}
        return {i: int(c) for i, c in enumerate(cols) if c is not None}
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise ParseError(f"cannot read coloring {path}: {e}") from e


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_generate(args) -> int:
    spec = GenSpec.parse(args.gen, seed=args.seed, palettes=args.palettes)
    _write(dumps_instance(generate(spec)), args.out)
    return EXIT_OK


def cmd_run(args) -> int:
    if bool(args.input) == bool(args.gen):
        raise ParseError("give exactly one of --input or --gen")
    inst = _read_instance(args.input) if args.input else generate(GenSpec.parse(args.gen, args.seed, args.palettes))
    coloring, report = color(inst, _config(args))
    _write(report.to_json(), args.out)
    if args.coloring_out:
        Path(args.coloring_out).write_text(json.dumps({"coloring": [coloring[v] for v in range(inst.n)]}) + "\n")
    for line in report.violations:
        print(line, file=sys.stderr)
    return EXIT_OK if report.verified and report.budget_ok else EXIT_FAIL


def cmd_verify(args) -> int:
    inst = _read_instance(args.input)
    res = verify_coloring(inst, _read_coloring(args.coloring))
    for line in res.describe():
        print(line)
    if res.ok:
        print("ok")
    return EXIT_OK if res.ok else EXIT_FAIL


def sweep_rows(model: str, ns: list[int], args) -> list[dict]:
    rows = []
    for n in ns:
        if model == "gnp":
            gen = f"gnp:n={n},p={min(1.0, args.avg_degree / n)}"
        elif model == "dregular":
            gen = f"dregular:n={n},d={int(args.avg_degree)}"
        else:
            gen = f"powerlaw:n={n},avg={args.avg_degree}"
        inst = generate(GenSpec.parse(gen, seed=args.seed, palettes=args.palettes))
        _, rep = color(inst, _config(args))
        rows.append(
            {"n": n, "m": rep.m, "rounds": rep.total_rounds, "f_edges": rep.f_edges,
             "gbad_edges": rep.gbad_edges, "depth": rep.depth}
        )
    return rows


def cmd_sweep(args) -> int:
    try:
        ns = [int(x) for x in args.ns.split(",") if x.strip()]
    except ValueError as e:
        raise ParseError(f"bad --ns list {args.ns!r}") from e
    rows = sweep_rows(args.model, ns, args)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_HEADER, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    _write(buf.getvalue(), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cliquecolor", description="Deterministic (degree+1)-list coloring")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random instance as JSON")
    g.add_argument("--gen", required=True, help="e.g. gnp:n=64,p=0.1 or dregular:n=10,d=3")
    g.add_argument("--seed", type=int, default=int(_env("seed", 0)))
    g.add_argument("--palettes", default=_env("palettes", "fresh"), help="fresh | shared:S")
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="color an instance and emit the run report")
    r.add_argument("--input", default=_env("input"))
    r.add_argument("--gen")
    r.add_argument("--palettes", default=_env("palettes", "fresh"))
    r.add_argument("--out", help="report JSON path (default stdout)")
    r.add_argument("--coloring-out")
    _add_run_flags(r)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="check a coloring against an instance")
    v.add_argument("--input", required=True)
    v.add_argument("--coloring", required=True)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", help="rounds and sizes over a list of n")
    s.add_argument("--model", choices=["gnp", "dregular", "powerlaw"], default="gnp")
    s.add_argument("--ns", default=_env("ns", "64,128,256,512"))
    s.add_argument("--avg-degree", type=float, default=float(_env("avg-degree", 8.0)))
    s.add_argument("--palettes", default=_env("palettes", "fresh"))
    s.add_argument("--out")
    _add_run_flags(s)
    s.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ColoringError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
