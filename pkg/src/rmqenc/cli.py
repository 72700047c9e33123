"""Command-line entry point.

Exit codes: 0 ok, 1 verification mismatch, 2 usage or domain error, 3 I/O.
"""

import argparse
import json
import sys

import numpy as np

from . import container, entropy_lab, lower_bound, rmq, rt2q
from .errors import (DomainError, DuplicateValueError, FormatError, RangeError,
                     ResourceError, SolverError)
from .succinct_tree import AlphaParams
from .tree_model import ArrayInput, make_rng, read_array

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _f(x) -> str:
    return f"{x:.6f}"


def _out(line=""):
    sys.stdout.write(line + "\n")


# -- encode ------------------------------------------------------------------

def _build(values, mode, entropy=False, alpha=None, break_ties=False):
    if mode == "rt2q":
        return rt2q.encode(values, break_ties=break_ties)
    if alpha is not None:
        entropy = True
    return rmq.encode(values, mode="entropy" if entropy else "plain",
                      alpha=alpha, break_ties=break_ties)


def _print_sizes(enc):
    rep = enc.size_report()
    n = rep["n"]
    _out(f"n={n}")
    _out(f"mode={'rt2q' if isinstance(enc, rt2q.Rt2qEncoding) else 'rmq'} tree={rep['mode']}")
    _out(f"payload_bits={rep['payload_bits']}")
    _out(f"directory_bits={rep['total_bits'] - rep['payload_bits']}")
    if "merge_payload_bits" in rep:
        _out(f"merge_bits={rep['merge_payload_bits']}")
        _out(f"analytic_measure_bits={_f(rep['analytic_measure_bits'])}")
        _out(f"analytic_measure_per_n={_f(rep['analytic_measure_bits'] / n)}")
    _out(f"total_bits={rep['total_bits']}")
    _out(f"bits_per_n={_f(rep['total_bits'] / n)}")
    _out(f"payload_bits_per_n={_f(rep['payload_bits'] / n)}")


def _read_input(path):
    try:
        return read_array(path)
    except (FormatError, UnicodeDecodeError) as exc:
        raise UsageError(f"cannot parse {path}: {exc}") from None


def cmd_encode(args) -> int:
    values = _read_input(args.input)
    alpha = AlphaParams.parse(args.alpha) if args.alpha else None
    if args.mode == "rt2q" and (args.entropy or alpha is not None):
        raise UsageError("rt2q always uses the capped leaf-fraction parameters")
    enc = _build(values, args.mode, args.entropy, alpha, args.break_ties)
    out = args.output or f"{args.input}.rmqe"
    size = container.save(out, enc, seed=args.seed)
    _print_sizes(enc)
    _out(f"container={out} bytes={size}")
    return EXIT_OK


# -- query -------------------------------------------------------------------

def _answer(enc, i, j) -> str:
    r = enc.query(i, j)
    return f"{r[0]} {r[1]}" if isinstance(r, tuple) else str(r)


def _read_batch(path):
    pairs = []
    with open(path, "r", encoding="ascii") as fh:
        for no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            parts = line.split()
            try:
                if len(parts) != 2:
                    raise ValueError
                pairs.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise UsageError(f"{path}:{no}: expected 'i j', got {line.strip()!r}") from None
    return pairs


def cmd_query(args) -> int:
    if (args.range is None) == (args.batch is None):
        raise UsageError("give exactly one of --range or --batch")
    enc, _ = container.load(args.container)
    pairs = [tuple(args.range)] if args.range else _read_batch(args.batch)
    lines = [_answer(enc, i, j) for i, j in pairs]
    sys.stdout.write("".join(x + "\n" for x in lines))
    return EXIT_OK


# -- verify -------------------------------------------------------------------

def _rmq_row(vals, i):
    """Oracle answers rmq(i, j) for j = i..n by a running scan (1-based)."""
    seg = vals[i - 1:]
    best = np.minimum.accumulate(seg)
    # position of the running minimum: last index where the prefix minimum changed
    changed = np.flatnonzero(seg == best)
    idx = np.searchsorted(changed, np.arange(len(seg)), side="right") - 1
    return changed[idx] + i


def _rt2q_row(vals, i):
    n = len(vals)
    out = []
    m1, m2 = i, None
    for j in range(i + 1, n + 1):
        x = vals[j - 1]
        if x < vals[m1 - 1]:
            m1, m2 = j, m1
        elif m2 is None or x < vals[m2 - 1]:
            m2 = j
        out.append((m1, m2))
    return out


def _exhaustive_pairs(enc, vals, mode):
    n = len(vals)
    for i in range(1, n + 1):
        if mode == "rmq":
            row = _rmq_row(vals, i).tolist()
            for j, exp in zip(range(i, n + 1), row):
                yield i, j, exp
        else:
            for j, exp in zip(range(i + 1, n + 1), _rt2q_row(vals, i)):
                yield i, j, exp


def _sampled_pairs(vals, mode, k, seed):
    n = len(vals)
    rng = make_rng(seed, 1)
    lo = 1 if mode == "rmq" else 2
    if n < lo:
        return
    for _ in range(k):
        a, b = rng.integers(1, n + 1, size=2).tolist()
        i, j = min(a, b), max(a, b)
        if mode == "rt2q" and i == j:
            if j < n:
                j += 1
            else:
                i -= 1
        seg = vals[i - 1:j]
        if mode == "rmq":
            yield i, j, int(np.argmin(seg)) + i
        else:
            order = np.argsort(seg, kind="stable")[:2]
            yield i, j, (int(order[0]) + i, int(order[1]) + i)


def cmd_verify(args) -> int:
    values = _read_input(args.input)
    a = ArrayInput.coerce(values, break_ties=args.break_ties)
    if args.container:
        enc, meta = container.load(args.container)
        mode = meta.get("mode", "rmq")
        if enc.n != a.n:
            _out(f"FAIL: container holds n={enc.n}, array has n={a.n}")
            return EXIT_MISMATCH
    else:
        mode = args.mode
        enc = _build(a, mode, args.entropy)
    vals = a.values
    pairs = (_exhaustive_pairs(enc, vals, mode) if args.exhaustive
             else _sampled_pairs(vals, mode, args.samples, args.seed))
    checks = 0
    for i, j, exp in pairs:
        try:
            got = enc.query(i, j)
        except Exception as exc:  # a corrupt structure may fail instead of answering
            got = f"error: {exc}"
        if got != exp:
            _out(f"FAIL: {mode} ({i},{j}) expected {exp} got {got} after {checks} checks")
            return EXIT_MISMATCH
        checks += 1
    _out(f"PASS: {checks} checks ({mode}, n={a.n})")
    return EXIT_OK


# -- experiments ---------------------------------------------------------------

def cmd_experiment(args) -> int:
    name = args.name
    if name == "ultra-entropy":
        rep = entropy_lab.ultra_entropy_experiment(args.n or 1000, args.trials or 100,
                                                   args.seed, args.threads)
    elif name == "avgcase":
        rep = entropy_lab.avg_case_measure(args.n or 10 ** 6, args.trials or 20,
                                           args.seed, threads=args.threads)
    elif name == "fact24":
        rep = entropy_lab.fact24_experiment(args.n or 10 ** 5, args.trials or 10,
                                            args.seed, args.threads)
    elif name == "census":
        rep = entropy_lab.census_report(args.n or 5, args.family, args.threads)
    else:
        raise UsageError(f"unknown experiment {name!r}")
    if args.json:
        d = rep.to_dict()
        if not args.values:
            d.pop("values")
        _out(json.dumps(d, sort_keys=True))
    else:
        _out(rep.to_text())
    return EXIT_OK


def _levels(text):
    out = []
    for part in text.split(","):
        if "-" in part:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


def cmd_lowerbound(args) -> int:
    try:
        levels = _levels(args.level)
    except ValueError:
        raise UsageError(f"bad --level {args.level!r}") from None
    for lv in levels:
        if lv >= lower_bound.GATED_LEVEL and not args.allow_large:
            est = lower_bound.memory_estimate(lv)
            _out(f"level {lv} needs about {est / 2**20:.1f} MiB of DP tables; "
                 "rerun with --allow-large")
            return EXIT_USAGE
    if args.brute_check and max(levels) > 3:
        raise UsageError("--brute-check supports levels up to 3")
    rows = lower_bound.lower_bound_report(levels, allow_large=args.allow_large,
                                          brute_check=args.brute_check)
    if args.json:
        _out(json.dumps(rows, sort_keys=True))
    else:
        _out(lower_bound.format_table(rows))
        if args.brute_check:
            ok = all(r["brute_force_match"] for r in rows)
            _out("DP = brute force: " + ("OK" if ok else "MISMATCH"))
            if not ok:
                return EXIT_MISMATCH
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rmqenc", description="Succinct RMQ and RT2Q encodings.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("encode", help="build an encoding and write a container")
    e.add_argument("input")
    e.add_argument("--mode", choices=("rmq", "rt2q"), default="rmq")
    e.add_argument("--entropy", action="store_true", help="entropy-coded micro shapes (rmq)")
    e.add_argument("--alpha", help="a0,aL,aR,a2 as fractions or decimals; implies --entropy")
    e.add_argument("--break-ties", action="store_true")
    e.add_argument("--seed", type=int, default=None, help="recorded in the metadata")
    e.add_argument("-o", "--output")
    e.set_defaults(func=cmd_encode)

    q = sub.add_parser("query", help="answer queries from a container")
    q.add_argument("container")
    q.add_argument("--range", nargs=2, type=int, metavar=("I", "J"))
    q.add_argument("--batch", help="file with one 'i j' pair per line")
    q.set_defaults(func=cmd_query)

    v = sub.add_parser("verify", help="compare an encoding against naive oracles")
    v.add_argument("input")
    v.add_argument("--mode", choices=("rmq", "rt2q"), default="rmq")
    v.add_argument("--container")
    v.add_argument("--entropy", action="store_true")
    v.add_argument("--break-ties", action="store_true")
    g = v.add_mutually_exclusive_group()
    g.add_argument("--exhaustive", action="store_true")
    g.add_argument("--samples", type=int, default=10000)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    x = sub.add_parser("experiment", help="random-permutation experiments and censuses")
    x.add_argument("name", choices=("ultra-entropy", "avgcase", "fact24", "census"))
    x.add_argument("--n", type=int)
    x.add_argument("--trials", type=int)
    x.add_argument("--seed", type=int, default=0)
    x.add_argument("--family", choices=("rmq", "rt2q", "r2m"), default="rmq")
    x.add_argument("--threads", type=int, default=1)
    x.add_argument("--json", action="store_true")
    x.add_argument("--values", action="store_true", help="include per-trial values in JSON")
    x.set_defaults(func=cmd_experiment)

    b = sub.add_parser("lowerbound", help="unrolled recurrence and its singularity")
    b.add_argument("--level", required=True, help="level, list (1,2) or range (1-4)")
    b.add_argument("--brute-check", action="store_true")
    b.add_argument("--allow-large", action="store_true", help="permit levels 6 and 7")
    b.add_argument("--json", action="store_true")
    b.set_defaults(func=cmd_lowerbound)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DuplicateValueError, DomainError, RangeError, ResourceError, SolverError,
            UsageError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (OSError, FormatError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IO
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
