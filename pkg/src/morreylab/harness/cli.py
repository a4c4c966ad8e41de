"""Command line entry point.

Exit codes: 0 success, 1 config error, 2 numerical abort (non-finite value),
3 selftest failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..grid import NonFiniteError
from .config import ConfigError, read_config
from .experiment import (
    BOUNDEDNESS_HEADER,
    CONDITION_HEADER,
    EVAL_HEADER,
    REFINE_HEADER,
    SHARPNESS_HEADER,
    WEIGHTS_HEADER,
    run_probe,
    spec_from_config,
)
from .report import summary_json, to_csv
from .selftest import run_all

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_SELFTEST = 0, 1, 2, 3

_HEADERS = f"""CSV headers:
  eval       {','.join(EVAL_HEADER)}
  weights    {','.join(WEIGHTS_HEADER)}
  condition  {','.join(CONDITION_HEADER)}
  probe      {','.join(BOUNDEDNESS_HEADER)}  (boundedness)
             {','.join(SHARPNESS_HEADER)}  (sharpness)
  refine     {','.join(REFINE_HEADER)}

Points and centers are written as ';'-joined coordinates. With --out PATH the
CSV goes to PATH and a JSON summary to PATH with a .json suffix; without
--out the CSV goes to stdout and the summary to stderr.
"""

# subcommand -> probe kinds it accepts (first is the default)
_PROBES = {
    "eval": ("eval",),
    "weights": ("weights",),
    "condition": ("condition",),
    "probe": ("boundedness", "sharpness"),
    "refine": ("refinement",),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="morreylab",
        description="Numerical probes for multilinear fractional operators on "
        "generalized weighted Morrey spaces.",
        epilog=_HEADERS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("eval", "weights", "condition", "probe", "refine"):
        p = sub.add_parser(name, epilog=_HEADERS,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        if name == "probe":
            p.add_argument("--kind", choices=("boundedness", "sharpness"))
        if name == "refine":
            p.add_argument("--levels", type=int)
    sub.add_parser("selftest", help="run the closed-form and definitional checks")
    return ap


def _load_spec(args):
    try:
        text = args.config.read_text()
    except OSError as exc:
        raise ConfigError("--config", str(exc)) from None
    spec = spec_from_config(read_config(text))
    allowed = _PROBES[args.command]
    kind = spec.probe if spec.probe in allowed else allowed[0]
    if args.command == "probe" and args.kind:
        kind = args.kind
    kw = {"probe": kind, "threads": args.threads, "seed": args.seed}
    if args.command == "refine" and args.levels:
        kw["levels"] = args.levels
    if args.seed < 0 or args.threads < 1:
        raise ConfigError("--seed/--threads", "seed must be >= 0 and threads >= 1")
    return spec.replace(**kw)


def _emit(result, args) -> None:
    if args.format == "json":
        text = summary_json(result, include_rows=True)
        if args.out:
            args.out.write_text(text)
        else:
            sys.stdout.write(text)
        return
    csv_text = to_csv(result.header, result.rows)
    summary = summary_json(result)
    if args.out:
        args.out.write_text(csv_text)
        args.out.with_suffix(".json").write_text(summary)
    else:
        sys.stdout.write(csv_text)
        sys.stderr.write(summary)


def run_cli(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        results = run_all(sys.stdout)
        failed = [name for name, ok, _ in results if not ok]
        print(f"{len(results) - len(failed)}/{len(results)} checks passed")
        if failed:
            print("failed:", *failed, sep="\n  ", file=sys.stderr)
            return EXIT_SELFTEST
        return EXIT_OK
    try:
        spec = _load_spec(args)
        result = run_probe(spec)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except NonFiniteError as exc:
        print(f"numerical abort: {exc} (witness {exc.witness})", file=sys.stderr)
        return EXIT_NUMERIC
    _emit(result, args)
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli())
