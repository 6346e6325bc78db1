"""Command line interface: ``morseph analyze | generate | compare``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import secrets
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .distance import distance_matrix, write_matrix_csv
from .graph import GraphParseError, read_edge_list, write_edge_list
from .models import UnsupportedParameterError, generate, parse_model_spec
from .morse import write_morse_dump
from .persistence import (
    DiagramFormatError,
    normalize,
    read_diagram,
    write_barcode_csv,
    write_diagram_csv,
    write_diagram_json,
)
from .pipeline import InvariantError, analyze_graph

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INVARIANT = 0, 2, 3, 4
OUTPUTS = ("summary", "diagram", "barcode", "morse-dump")
DEFAULT_OUTPUTS = "summary,diagram,barcode"


class UsageError(Exception):
    pass


def resolve_seed(seed: int | None) -> int:
    """Explicit seed, else ``MORSEPH_SEED``, else a fresh one from OS entropy."""
    if seed is not None:
        return seed
    env = os.environ.get("MORSEPH_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"MORSEPH_SEED must be an integer, got {env!r}") from None
    return secrets.randbits(32)


def _parse_outputs(text: str) -> set[str]:
    outs = {o.strip() for o in text.split(",") if o.strip()}
    bad = outs - set(OUTPUTS)
    if bad:
        raise UsageError(f"unknown outputs {sorted(bad)}; choose from {','.join(OUTPUTS)}")
    return outs


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def cmd_analyze(args) -> int:
    if (args.input is None) == (args.model is None):
        raise UsageError("analyze needs exactly one of --input or --model")
    if args.cap < 0:
        raise UsageError("--cap must be non-negative")
    outputs = _parse_outputs(args.outputs)
    seed = resolve_seed(args.seed)
    if args.input is not None:
        g = read_edge_list(args.input)
        source = {"input": str(args.input)}
    else:
        spec = parse_model_spec(args.model, seed)
        g = generate(spec)
        source = {"model": json.loads(spec.to_json())}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        a = analyze_graph(g, args.cap, seed, args.filtration)
    except InvariantError as exc:
        if exc.analysis is not None and exc.analysis.morse is not None:
            r = exc.analysis
            with open(out / "morse_dump.txt", "w", encoding="utf-8") as fh:
                write_morse_dump(r.complex, r.morse, r.critical, r.filtration, fh)
        raise
    summary = a.summary()
    summary["source"] = source
    if "summary" in outputs:
        _write(out / "summary.json", _dump_json(summary))
    if "diagram" in outputs:
        _write(out / "diagram.csv", write_diagram_csv(a.diagram))
        _write(out / "diagram.json", write_diagram_json(a.diagram))
    if "barcode" in outputs:
        _write(out / "barcode.csv", write_barcode_csv(normalize(a.diagram)))
    if "morse-dump" in outputs and a.morse is not None:
        with open(out / "morse_dump.txt", "w", encoding="utf-8") as fh:
            write_morse_dump(a.complex, a.morse, a.critical, a.filtration, fh)
    print(
        f"n={summary['n_p']} m={summary['m_p']} beta={summary['beta_p']} "
        f"mu={summary['mu']} seed={seed}"
    )
    return EXIT_OK


def _generate_one(job):
    spec, seed, stem = job
    g = generate(spec, seed=seed)
    _write(stem.with_suffix(".edges"), write_edge_list(g))
    _write(stem.with_suffix(".json"), _dump_json(json.loads(spec.with_seed(seed).to_json())))
    return g.edge_count


def cmd_generate(args) -> int:
    if args.count < 1:
        raise UsageError("--count must be positive")
    seed = resolve_seed(args.seed)
    spec = parse_model_spec(args.model, seed)
    base = spec.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    width = len(str(args.count - 1))
    jobs = [(spec, base + i, out / f"{spec.family}_{i:0{width}d}") for i in range(args.count)]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            counts = list(ex.map(_generate_one, jobs))
    else:
        counts = [_generate_one(j) for j in jobs]
    print(f"wrote {len(counts)} graphs to {out} (seeds {base}..{base + args.count - 1}, edges {min(counts)}..{max(counts)})")
    return EXIT_OK


def _collect(arg: str) -> tuple[str, list[Path]]:
    """Resolve ``[NAME=]PATH`` to an ensemble name and its diagram files.

    A directory contributes every ``diagram.json`` below it (a tree of
    ``analyze`` outputs); failing that, its own ``.json`` then ``.csv`` files.
    """
    name, sep, path = arg.partition("=")
    if not sep:
        name, path = "", arg
    p = Path(path)
    if p.is_dir():
        files = sorted(p.rglob("diagram.json"))
        files = files or sorted(f for f in p.glob("*.json") if f.name != "summary.json")
        files = files or sorted(p.glob("*.csv"))
        if not files:
            raise FileNotFoundError(f"no diagram files in {p}")
        return name or p.name, files
    if not p.exists():
        raise FileNotFoundError(str(p))
    return name or p.stem, [p]


def cmd_compare(args) -> int:
    if args.metric == "wasserstein" and not args.q >= 1:
        raise UsageError("--q must be >= 1")
    ensembles = {}
    for arg in args.diagrams:
        name, files = _collect(arg)
        if name in ensembles:
            raise UsageError(f"duplicate ensemble name {name!r}; use NAME=PATH")
        diagrams = [read_diagram(f) for f in files]
        if not args.raw and any(d.w_N is None for d in diagrams):
            raise DiagramFormatError(f"{name}: diagrams without w_N (CSV) need --raw")
        ensembles[name] = diagrams
    matrix = distance_matrix(ensembles, args.metric, args.q, normalized=not args.raw, dim=args.dim, jobs=args.jobs)
    q = args.q if args.metric == "wasserstein" else None
    text = write_matrix_csv(matrix, args.metric, q)
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    if args.pairs:
        lines = ["modelA,modelB,index,value\n"]
        for (a, b), s in sorted(matrix.items()):
            lines.extend(f"{a},{b},{i},{v:.10g}\n" for i, v in enumerate(s.values))
        _write(Path(args.pairs), "".join(lines))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="morseph", description="Persistent homology of networks via discrete Morse filtrations.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress and warnings")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="analyze one graph")
    a.add_argument("--input", help="edge-list file")
    a.add_argument("--model", help="model spec, e.g. 'ws:n=1000,k=4,p=0.5'")
    a.add_argument("--cap", type=int, default=3, help="dimension cap (default 3)")
    a.add_argument("--seed", type=int, help="random seed (default: $MORSEPH_SEED or fresh)")
    a.add_argument("--filtration", choices=("morse", "dimension"), default="morse")
    a.add_argument("--outputs", default=DEFAULT_OUTPUTS, help=f"comma list from {','.join(OUTPUTS)}")
    a.add_argument("--out", required=True, help="output directory")
    a.set_defaults(func=cmd_analyze)

    g = sub.add_parser("generate", help="sample model graphs")
    g.add_argument("--model", required=True)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--seed", type=int, help="base seed; sample i uses seed + i")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--jobs", type=int, default=1)
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("compare", help="distance matrix between diagram ensembles")
    c.add_argument("diagrams", nargs="+", help="diagram file or directory, optionally NAME=PATH")
    c.add_argument("--metric", choices=("bottleneck", "wasserstein"), default="bottleneck")
    c.add_argument("--q", type=float, default=1.0, help="Wasserstein exponent (>= 1)")
    c.add_argument("--dim", type=int, help="compare one dimension instead of total diagrams")
    c.add_argument("--raw", action="store_true", help="unnormalized weights; essential points matched by birth")
    c.add_argument("--out", help="matrix CSV path (default stdout)")
    c.add_argument("--pairs", help="also write per-pair distances here")
    c.add_argument("--jobs", type=int, default=1)
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (GraphParseError, DiagramFormatError, OSError) as exc:
        print(f"morseph: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, UnsupportedParameterError, ValueError) as exc:
        print(f"morseph: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantError as exc:
        print(f"morseph: internal invariant failed: {exc}", file=sys.stderr)
        return EXIT_INVARIANT

if __name__ == "__main__":
    sys.exit(main())
