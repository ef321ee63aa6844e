"""Command line entry point: ``ampclab <command> [flags]``.

Every command prints (or writes with --out) one JSON report holding the
schema version, the package version, the random generator, the full
config, and the result. Exit codes: 0 ok, 2 model violation, 3 bad
configuration, 4 resource limit.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from fractions import Fraction

import numpy as np

from . import __version__
from .errors import InvalidArgument, ModelViolation, ResourceLimit

SCHEMA = "ampclab.report/1"
EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_LIMIT = 0, 2, 3, 4


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def _fraction(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as err:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from err


def _threads() -> int:
    raw = os.environ.get("AMPCLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"AMPCLAB_THREADS must be an integer, got {raw!r}")


def _capacity(args, n):
    from .algos import capacity_for

    if (args.S is None) == (args.eps is None):
        raise ConfigError("give exactly one of --S and --eps")
    return args.S if args.S is not None else capacity_for(n, args.eps)


def _family(args):
    from .boolfn import enumerate_ockc, octc, promise_majority

    if args.family == "octc":
        return octc(_need(args, "n"))
    if args.family == "ockc":
        return enumerate_ockc(_need(args, "n"), _need(args, "k"))
    if args.family == "pmaj":
        return promise_majority(_need(args, "N"))
    raise ConfigError("--family is required")


def _need(args, name):
    v = getattr(args, name)
    if v is None:
        raise ConfigError(f"--{name} is required for this command")
    return v


def _load_graph(path):
    from .boolfn import GraphInstance

    with open(path) as fh:
        return GraphInstance.from_json(fh.read())


# --- commands -----------------------------------------------------------------------


def cmd_solve(args) -> dict:
    from .algos import solve_ockc
    from .ampc import run
    from .boolfn import cycle_lengths, edges_to_array, enumerate_ockc, random_ockc_edges

    n, k = _need(args, "n"), args.k or 2
    S = _capacity(args, n)
    alg = solve_ockc(n, k, S, seed=args.seed if args.randomized else None, bulk=n > 64)
    out = {"S": S, "R": alg.R, "schedule": {kk: v for kk, v in alg.meta.items() if kk != "layout"}}
    if args.exhaustive:
        f = enumerate_ockc(n, k)
        wrong, rounds, used = 0, 0, 0
        for x in f.domain:
            res = run(alg, x, strict=True, record=False)
            wrong += not (res.outcome == "answer" and res.answer == f.value(x))
            rounds = max(rounds, res.rounds)
            used = max(used, res.max_used)
        out.update(instances=len(f.domain), correct=len(f.domain) - wrong, rounds=rounds, max_used=used)
        return out
    if args.graph:
        g = _load_graph(args.graph)
        if g.n != n:
            raise ConfigError(f"graph has n={g.n} but --n {n}")
        instances = [(None, edges_to_array(g.edges(), n))]
    else:
        rng = np.random.default_rng(args.seed)
        instances = []
        for i in range(args.samples):
            value = i % 2 if args.value is None else args.value
            instances.append((value, edges_to_array(random_ockc_edges(n, k, value, rng), n)))
    results = []
    transcript = []
    for value, x in instances:
        res = run(alg, x, strict=args.strict, record=args.transcript is not None)
        if value is None and n <= 64:
            bits = int.from_bytes(np.packbits(x, bitorder="little").tobytes(), "little")
            lens = cycle_lengths(bits, n)
            value = int(lens == [n]) if sorted(lens) in ([n], [n // k] * k) else None
        results.append({
            "expected": value, "outcome": res.outcome, "answer": res.answer,
            "rounds": res.rounds, "max_used": res.max_used,
        })
        if args.transcript is not None:
            transcript.append(res.transcript_jsonl())
    if args.transcript is not None:
        _atomic_write(args.transcript, "".join(transcript))
    out["runs"] = results
    out["correct"] = sum(r["answer"] == r["expected"] for r in results if r["expected"] is not None)
    out["rounds"] = max(r["rounds"] for r in results)
    out["max_used"] = max(r["max_used"] for r in results)
    out["transcript"] = args.transcript
    if len(results) == 1:
        out["answer"] = results[0]["answer"]
    return out


def cmd_complexity(args) -> dict:
    from . import qc
    from .boolfn import total_function
    from .poly import interpolate

    if args.table is not None:
        bits = [int(c) for c in args.table.strip()]
        n_bits = (len(bits) - 1).bit_length()
        if len(bits) != 1 << n_bits or any(b not in (0, 1) for b in bits):
            raise ConfigError("--table must be a 0/1 string of length 2^N")
        if args.measure == "deg":
            p = interpolate(bits, n_bits)
            return {"measure": "deg", "value": p.degree(), "polynomial": json.loads(p.to_json())}
        f = total_function(bits, n_bits)
    else:
        if args.measure == "deg":
            raise ConfigError("deg is defined for total functions; pass --table")
        f = _family(args)
    if args.measure == "D":
        return qc.det_query_complexity(f).report() if args.table is None else qc.det_query_complexity_total(bits, n_bits).report()
    if args.measure == "C":
        return qc.certificate_complexity(f).report()
    if args.measure == "Cdelta":
        delta = args.delta if args.delta is not None else Fraction(1, 6)
        return qc.approx_certificate_complexity(f, delta).report()
    raise ConfigError(f"unknown measure {args.measure!r}")


def cmd_framework(args) -> dict:
    from . import qc

    f = _family(args)
    delta = args.delta if args.delta is not None else Fraction(1, 6)
    if args.family in ("octc", "ockc"):
        fam = qc.opposite_edge_blocks(f, delta)
    else:
        fam = qc.singleton_blocks(f, delta)
    return qc.check_framework(fam, f).report()


def cmd_extract(args) -> dict:
    from .algos import solve_ockc
    from .boolfn import enumerate_ockc
    from .poly import extract_polynomial

    n, k = _need(args, "n"), args.k or 2
    S = _capacity(args, n)
    alg = solve_ockc(n, k, S, seed=args.seed if args.randomized else None)
    f = enumerate_ockc(n, k)
    ex = extract_polynomial(alg, f, extended=args.extended, audit=args.audit)
    rep = ex.report()
    rep["matches_on_promise"] = all(int(ex.table[x]) == f.value(x) for x in f.domain)
    return rep


def cmd_adversary(args) -> dict:
    from . import adversary as adv

    n, k = _need(args, "n"), args.k or 2
    st = adv.new_adversary(n, k, commit=args.commit)
    if args.strategy == "random":
        strat = adv.query_everything(n, args.seed)
    elif args.strategy == "greedy":
        strat = adv.row_by_row(n, args.seed)
    elif args.strategy == "answer-after":
        strat = adv.answer_after(args.m, n, 1, args.seed)
    else:
        raise ConfigError(f"unknown strategy {args.strategy!r}")
    rep = adv.play(st, strat)
    if args.trace:
        _atomic_write(args.trace, rep.trace_jsonl())
    out = rep.report()
    out["trace"] = args.trace
    return out


def cmd_bounds(args) -> dict:
    from .bounds import det_round_lower_bound, rand_round_lower_bound

    n = _need(args, "n")
    if (args.S is None) == (args.eps is None):
        raise ConfigError("give exactly one of --S and --eps")
    out = {}
    if not args.rand or args.det:
        out["deterministic"] = det_round_lower_bound(n, args.S, args.eps).report()
    if not args.det or args.rand:
        out["randomized"] = rand_round_lower_bound(n, args.S, args.eps).report()
    return out


COMMANDS = {
    "solve": cmd_solve,
    "complexity": cmd_complexity,
    "framework": cmd_framework,
    "extract": cmd_extract,
    "adversary": cmd_adversary,
    "bounds": cmd_bounds,
}


# --- plumbing -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ampclab", description="AMPC round-complexity laboratory")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--n", type=int)
        sp.add_argument("--k", type=int)
        sp.add_argument("--N", type=int)
        sp.add_argument("--S", type=int)
        sp.add_argument("--eps", type=_fraction)
        sp.add_argument("--delta", type=_fraction)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out")
        return sp

    sp = common(sub.add_parser("solve", help="run the cycle solver"))
    sp.add_argument("--samples", type=int, default=1)
    sp.add_argument("--value", type=int, choices=(0, 1))
    sp.add_argument("--graph", help="JSON file {n, edges} to solve instead of random instances")
    sp.add_argument("--exhaustive", action="store_true")
    sp.add_argument("--randomized", action="store_true", help="start the walk at a seeded random vertex")
    sp.add_argument("--strict", action=argparse.BooleanOptionalAction, default=True)
    sp.add_argument("--transcript", help="write JSON-lines transcripts here")

    sp = common(sub.add_parser("complexity", help="exact D, C, C_delta or degree"))
    sp.add_argument("--family", choices=("octc", "ockc", "pmaj"))
    sp.add_argument("--measure", choices=("D", "C", "Cdelta", "deg"), required=True)
    sp.add_argument("--table", help="truth table of a total function, e.g. 0110")

    sp = common(sub.add_parser("framework", help="sensitive-block lower bound check"))
    sp.add_argument("--family", choices=("octc", "ockc", "pmaj"), required=True)

    sp = common(sub.add_parser("extract", help="polynomial extraction from the solver"))
    sp.add_argument("--extended", action="store_true")
    sp.add_argument("--audit", action="store_true")
    sp.add_argument("--randomized", action="store_true")

    sp = common(sub.add_parser("adversary", help="play the adversary game"))
    sp.add_argument("--strategy", choices=("random", "greedy", "answer-after"), default="random")
    sp.add_argument("--m", type=int, default=1)
    sp.add_argument("--commit", choices=("hamiltonian", "k-cycles"), default="hamiltonian")
    sp.add_argument("--trace", help="write the JSON-lines game trace here")

    sp = common(sub.add_parser("bounds", help="round lower bounds"))
    sp.add_argument("--det", action="store_true")
    sp.add_argument("--rand", action="store_true")
    return p


def _config(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        out[k] = str(v) if isinstance(v, Fraction) else v
    return out


def envelope(args, result, status="ok") -> dict:
    return {
        "schema": SCHEMA,
        "version": __version__,
        "generator": f"numpy.PCG64 (numpy {np.__version__})",
        "threads": _threads(),
        "config": _config(args),
        "status": status,
        "result": result,
    }


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".ampclab-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, doc):
    text = json.dumps(doc, indent=2, default=_json_default) + "\n"
    if getattr(args, "out", None):
        _atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (set, frozenset, tuple)):
        return list(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = COMMANDS[args.command](args)
    except (ConfigError, InvalidArgument) as err:
        _emit(args, envelope(args, {"error": str(err)}, "config-error"))
        return EXIT_CONFIG
    except ModelViolation as err:
        _emit(args, envelope(args, {
            "error": str(err), "round": err.round, "machine": err.machine, "constraint": err.constraint,
        }, "model-violation"))
        return EXIT_VIOLATION
    except ResourceLimit as err:
        _emit(args, envelope(args, {"error": str(err), "lower": err.lower, "upper": err.upper}, "resource-limit"))
        return EXIT_LIMIT
    _emit(args, envelope(args, result))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
