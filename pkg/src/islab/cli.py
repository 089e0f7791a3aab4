"""Command line: ``islab <preset> [--key value]... --out DIR --seed N``.

Also ``islab run <preset> ...``, ``islab validate <preset> ...`` and
``islab report DIR...``.
"""
import argparse
import json
import sys

from .errors import IslabError
from .experiments import PRESETS, ExperimentConfig, report, run, validate
from .io import jsonable

EPILOG = "presets: " + ", ".join(sorted(PRESETS))


def _split_overrides(extra):
    """Pair up ``--key value`` tokens; returns (dict, errors)."""
    out, errs = {}, []
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or len(tok) < 3:
            errs.append(f"unexpected argument {tok!r}")
            i += 1
            continue
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        elif i + 1 < len(extra):
            val = extra[i + 1]
            i += 2
        else:
            errs.append(f"missing value for {tok}")
            i += 1
            continue
        out[key] = val
    return out, errs


def _num(v, spec):
    """Format a check value; non-finite values arrive as strings."""
    return v if isinstance(v, str) else format(v, spec)


def _parser():
    p = argparse.ArgumentParser(prog="islab", description=__doc__.splitlines()[0], epilog=EPILOG)
    p.add_argument("command", help="a preset name, or run / validate / report")
    p.add_argument("rest", nargs="*", help="preset name after run/validate, or report paths")
    p.add_argument("--out", default=None, help="output directory (default ./islab-out/<preset>)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="worker threads for sample ensembles")
    p.add_argument("--dry-run", action="store_true", help="print the effective config and exit")
    return p


def main(argv=None):
    args, extra = _parser().parse_known_args(argv)
    cmd = args.command
    if cmd == "report":
        doc, status = report(args.rest)
        for w in doc["warnings"]:
            print(f"warning: {w}", file=sys.stderr)
        print(json.dumps(jsonable(doc), indent=2))
        return status
    mode = "run"
    if cmd in ("run", "validate"):
        mode = cmd
        if not args.rest:
            print(f"error: {cmd} needs a preset name ({EPILOG})", file=sys.stderr)
            return 2
        preset, positional = args.rest[0], args.rest[1:]
    else:
        preset, positional = cmd, args.rest
    overrides, errs = _split_overrides(extra)
    errs += [f"unexpected argument {t!r}" for t in positional]
    cfg = ExperimentConfig(preset, overrides, args.seed, args.out or f"islab-out/{preset}", args.jobs)
    val = validate(cfg)
    errs += val.errors
    for w in val.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if errs:
        for e in errs:
            print(f"error: {e}", file=sys.stderr)
        return 2
    if mode == "validate" or args.dry_run:
        print(json.dumps(val.effective, indent=2))
        return 0
    try:
        res = run(cfg)
    except IslabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    s = res.summary
    print(f"{s['preset']}: {s['anchor']}")
    for c in s["checks"]:
        mark = "PASS" if c["pass"] else "FAIL"
        print(f"  [{mark}] {c['name']}: value={_num(c['value'], '.6g')} "
              f"bound={_num(c['bound'], '.6g')} margin={_num(c['margin'], '.3g')}")
    print(f"artifacts in {cfg.output_dir}")
    return res.status


if __name__ == "__main__":
    sys.exit(main())
