"""Round-by-round simulator for adaptive massively parallel computation.

A round reads the frozen store of the previous round and produces a new
store at its barrier. Machines are generator functions::

    def machine():
        vals = yield Query(key("nbr", 3))   # tuple of values, sorted
        return [(key("out", 3), (len(vals),))]

(``yield Finish(writes)`` is equivalent to returning ``writes``.)

Capacity rule, per machine and round: values received over all responses
plus the number of empty responses is at most S, and at most S pairs are
written. Per key and round at most S values may be stored.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .errors import InvalidArgument, MalformedProgram, ModelViolation

WORD_LIMIT = 1 << 64
MAX_ARITY = 4
MAX_COORDS = 4


def key(namespace: str, *coords: int) -> tuple:
    return (namespace, tuple(coords))


ANSWER = key("ans")


def input_key(i: int) -> tuple:
    return ("in", (i,))


class Query(NamedTuple):
    key: tuple


class Finish(NamedTuple):
    writes: list


def _check_key(k):
    if (
        not isinstance(k, tuple)
        or len(k) != 2
        or not isinstance(k[0], str)
        or not isinstance(k[1], tuple)
        or len(k[1]) > MAX_COORDS
    ):
        raise MalformedProgram(f"malformed key {k!r}")


def _check_value(v):
    if not isinstance(v, tuple) or not 1 <= len(v) <= MAX_ARITY:
        raise MalformedProgram(f"values are tuples of 1..{MAX_ARITY} words, got {v!r}")
    for w in v:
        if not isinstance(w, (int, np.integer)) or not 0 <= w < WORD_LIMIT:
            raise MalformedProgram(f"word {w!r} is not an unsigned 64-bit integer")


# --- stores -------------------------------------------------------------------


class DataStore:
    """One round's shared memory: key -> multiset of values, each tagged with its writer."""

    def __init__(self, round_index: int, data: dict | None = None):
        self.round = round_index
        self._data = data if data is not None else {}
        self._cache: dict = {}

    def get(self, k) -> tuple:
        """Values under ``k`` as a sorted tuple (the multiset response)."""
        hit = self._cache.get(k)
        if hit is None:
            entries = self._data.get(k)
            hit = tuple(sorted(v for v, _ in entries)) if entries else ()
            self._cache[k] = hit
        return hit

    def entries(self, k):
        return list(self._data.get(k, ()))

    def keys(self):
        return sorted(self._data, key=_key_order)

    def present(self):
        """(key, values) for every nonempty key, in no particular order."""
        return ((k, self.get(k)) for k in self._data)

    def __len__(self):
        return len(self._data)

    def __contains__(self, k):
        return k in self._data

    def as_dict(self):
        return {k: self.get(k) for k in self.keys()}


def _key_order(k):
    return (k[0], k[1])


class InputStore(DataStore):
    """Round-0 store: key ("in", (i,)) holds the single value (x_i,).

    Backed by a uint8 array so that large inputs are never expanded into a
    dict.
    """

    def __init__(self, bits: np.ndarray):
        super().__init__(0, None)
        self.bits = np.asarray(bits, dtype=np.uint8)
        self.n_bits = int(self.bits.shape[0])

    def get(self, k):
        if k[0] == "in" and len(k[1]) == 1:
            i = k[1][0]
            if 0 <= i < self.n_bits:
                return ((int(self.bits[i]),),)
        return ()

    def entries(self, k):
        return [(v, None) for v in self.get(k)]

    def keys(self):
        return [input_key(i) for i in range(self.n_bits)]

    def __len__(self):
        return self.n_bits

    def __contains__(self, k):
        return bool(self.get(k))


def int_to_bits(x: int, n_bits: int) -> np.ndarray:
    raw = np.frombuffer(x.to_bytes((n_bits + 7) // 8 or 1, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n_bits].copy()


def load_input(x, n_bits: int | None = None) -> InputStore:
    """D_0 for input ``x`` (int bitmask with ``n_bits``, or a 0/1 array)."""
    if isinstance(x, (int, np.integer)):
        if n_bits is None:
            raise InvalidArgument("n_bits is required for integer inputs")
        if int(x) >> n_bits:
            raise InvalidArgument("input wider than n_bits")
        return InputStore(int_to_bits(int(x), n_bits))
    arr = np.asarray(x, dtype=np.uint8)
    if n_bits is not None and arr.shape[0] != n_bits:
        raise InvalidArgument(f"|x| = {arr.shape[0]} but N = {n_bits}")
    return InputStore(arr)


def load_values(values: Sequence[int]) -> DataStore:
    """A round-0 store holding arbitrary words under ("in", (i,))."""
    data = {}
    for i, a in enumerate(values):
        v = (int(a),)
        _check_value(v)
        data[input_key(i)] = [(v, None)]
    return DataStore(0, data)


# --- machines and algorithms ------------------------------------------------------


@dataclass
class Machine:
    id: tuple
    program: Callable  # () -> generator


class BulkRound:
    """A round of many non-adaptive machines executed in one vectorised step.

    Subclasses return the merged writes (sorted by machine id, then write
    order), the number of machines, and the largest budget any machine used.
    They must produce exactly what the equivalent per-machine roster would.
    """

    def execute(self, prev: DataStore, S: int, strict: bool) -> "BulkResult":
        raise NotImplementedError

    def machines(self) -> list[Machine]:
        """The equivalent per-machine roster (for small instances and tests)."""
        raise NotImplementedError


@dataclass
class BulkResult:
    writes: list  # [(key, value, machine_id)]
    n_machines: int
    max_used: int
    stopped: int = 0


@dataclass
class Algorithm:
    """A deterministic AMPC algorithm: one roster (or bulk round) per round."""

    name: str
    n_bits: int
    S: int
    rounds: list  # list[list[Machine] | BulkRound]
    meta: dict = field(default_factory=dict)

    @property
    def R(self) -> int:
        return len(self.rounds)


def nonadaptive(keys: Sequence[tuple], fn: Callable[[list], list]) -> Callable:
    """An MPC-style machine: fixed query list announced up front, then ``fn(responses)``."""
    keys = list(keys)

    def program():
        responses = []
        for k in keys:
            responses.append((yield Query(k)))
        return fn(responses)

    return program


def holder(k) -> Callable:
    """Copies the values under ``k`` forward into the next store."""

    def program():
        vals = yield Query(k)
        return [(k, v) for v in vals]

    return program


# --- execution --------------------------------------------------------------------


@dataclass
class MachineRecord:
    round: int
    machine: tuple
    queries: list  # [(key, values)]
    writes: list  # [(key, value)]
    used: int
    stopped: bool = False

    def to_json(self):
        return {
            "round": self.round,
            "machine": list(self.machine),
            "queries": [
                {"key": [k[0], list(k[1])], "values": [list(v) for v in vals], "empty": not vals}
                for k, vals in self.queries
            ],
            "writes": [[[k[0], list(k[1])], list(v)] for k, v in self.writes],
            "used": self.used,
            "stopped": self.stopped,
        }


@dataclass
class RoundSummary:
    round: int
    machines: int
    max_used: int
    max_writes: int
    stopped: int
    bulk: bool


def _execute_machine(m: Machine, prev: DataStore, S: int, strict: bool, r: int, record: bool):
    gen = m.program()
    used = 0
    queries = []
    stopped = False
    writes = None
    try:
        msg = next(gen)
        while True:
            if isinstance(msg, Query):
                k = msg.key
                _check_key(k)
                vals = prev.get(k)
                used += len(vals) or 1
                if record:
                    queries.append((k, vals))
                if used > S:
                    if strict:
                        raise ModelViolation(
                            f"round {r}: machine {m.id} exceeded query budget ({used} > {S})",
                            r, m.id, "query-budget",
                        )
                    gen.close()
                    stopped, writes = True, []
                    break
                msg = gen.send(vals)
            elif isinstance(msg, Finish):
                writes = list(msg.writes)
                gen.close()
                break
            else:
                raise MalformedProgram(f"machine {m.id} yielded {msg!r}")
    except StopIteration as stop:
        writes = list(stop.value or [])
    if len(writes) > S:
        raise ModelViolation(
            f"round {r}: machine {m.id} wrote {len(writes)} > {S} pairs", r, m.id, "write-count"
        )
    for k, v in writes:
        _check_key(k)
        _check_value(v)
    return used, queries, writes, stopped


def run_round(prev: DataStore, machines, S: int, strict: bool = True, record: bool = True):
    """Run one round against the frozen ``prev``; returns (store, records, summary)."""
    r = prev.round + 1
    data: dict = {}
    records = []
    if isinstance(machines, BulkRound):
        res = machines.execute(prev, S, strict)
        if strict and (res.max_used > S or res.stopped):
            raise ModelViolation(f"round {r}: bulk machine over budget", r, None, "query-budget")
        for k, v, mid in res.writes:
            data.setdefault(k, []).append((v, mid))
        summary = RoundSummary(r, res.n_machines, res.max_used, 0, res.stopped, True)
    else:
        max_used = max_writes = stopped = 0
        for m in sorted(machines, key=lambda m: m.id):
            used, queries, writes, halted = _execute_machine(m, prev, S, strict, r, record)
            max_used = max(max_used, used)
            max_writes = max(max_writes, len(writes))
            stopped += halted
            for k, v in writes:
                data.setdefault(k, []).append((v, m.id))
            if record:
                records.append(MachineRecord(r, m.id, queries, writes, used, halted))
        summary = RoundSummary(r, len(machines), max_used, max_writes, stopped, False)
    for k, entries in data.items():
        if len(entries) > S:
            raise ModelViolation(
                f"round {r}: {len(entries)} > {S} values under key {k}", r, None, "per-key-cap"
            )
    return DataStore(r, data), records, summary


@dataclass
class RunResult:
    outcome: str  # "answer" | "no-answer" | "violation"
    answer: int | None
    answer_multiset: tuple
    rounds: int
    max_used: int
    transcript: list  # MachineRecord
    summaries: list  # RoundSummary
    final_store: DataStore | None = None
    error: Exception | None = None

    def transcript_jsonl(self) -> str:
        lines = [json.dumps(rec.to_json()) for rec in self.transcript]
        for s in self.summaries:
            if s.bulk:
                lines.append(json.dumps({
                    "round": s.round, "machine": "bulk", "machines": s.machines,
                    "max_used": s.max_used, "stopped": s.stopped,
                }))
        return "\n".join(lines) + ("\n" if lines else "")


def run(
    alg: Algorithm,
    x,
    S: int | None = None,
    R_max: int | None = None,
    strict: bool = True,
    record: bool = True,
    report_violation: bool = False,
) -> RunResult:
    """Execute ``alg`` on input ``x`` (bitmask, 0/1 array, or a prepared store)."""
    S = alg.S if S is None else S
    store = x if isinstance(x, DataStore) else load_input(x, alg.n_bits)
    rounds = alg.rounds if R_max is None else alg.rounds[:R_max]
    transcript, summaries = [], []
    try:
        for roster in rounds:
            store, recs, summary = run_round(store, roster, S, strict, record)
            transcript.extend(recs)
            summaries.append(summary)
    except ModelViolation as err:
        if not report_violation:
            raise
        return RunResult("violation", None, (), len(summaries), 0, transcript, summaries, None, err)
    ans = store.get(ANSWER) if store.round > 0 else ()
    max_used = max((s.max_used for s in summaries), default=0)
    if len(ans) == 1 and len(ans[0]) == 1 and ans[0][0] in (0, 1):
        return RunResult("answer", int(ans[0][0]), ans, len(summaries), max_used, transcript, summaries, store)
    return RunResult("no-answer", None, ans, len(summaries), max_used, transcript, summaries, store)


# --- randomized algorithms ----------------------------------------------------------


@dataclass
class RandomizedAlgorithm:
    """A distribution over deterministic algorithms, indexed by seed."""

    family: Callable[[int], Algorithm]
    weights: dict  # seed -> Fraction

    def __post_init__(self):
        self.weights = {s: Fraction(w) for s, w in self.weights.items()}
        if any(w < 0 for w in self.weights.values()):
            raise InvalidArgument("weights must be nonnegative")
        if sum(self.weights.values()) != 1:
            raise InvalidArgument("weights must sum to exactly 1")
        self._cache = {}

    @classmethod
    def uniform(cls, family, seeds: Iterable[int]):
        seeds = list(seeds)
        return cls(family, {s: Fraction(1, len(seeds)) for s in seeds})

    def algorithm(self, seed) -> Algorithm:
        if seed not in self._cache:
            self._cache[seed] = self.family(seed)
        return self._cache[seed]

    @property
    def R(self):
        return max(self.algorithm(s).R for s in self.weights)


@dataclass
class ErrorReport:
    mode: str
    max_error: Fraction | float
    per_instance: dict  # x -> wrong-answer probability (exact mode)
    correct: dict  # (seed, x) -> bool (exact mode)
    samples: int = 0


def estimate_error(A: RandomizedAlgorithm, f, mode: str = "exact", seed: int = 0, samples: int = 1000, strict=False):
    """Worst-case (exact) or average (sampled) probability of a wrong or missing answer."""
    if mode == "exact":
        per, correct = {}, {}
        for x in f.domain:
            g = f.value(x)
            err = Fraction(0)
            for s, w in A.weights.items():
                res = run(A.algorithm(s), x, strict=strict, record=False)
                ok = res.outcome == "answer" and res.answer == g
                correct[(s, x)] = ok
                if not ok:
                    err += w
            per[x] = err
        return ErrorReport("exact", max(per.values()), per, correct)
    if mode == "sampled":
        from .boolfn import CanonicalDistribution, sample_with

        rng = np.random.default_rng(seed)
        seeds = list(A.weights)
        probs = np.array([float(A.weights[s]) for s in seeds])
        d = CanonicalDistribution(f)
        wrong = 0
        for _ in range(samples):
            x = sample_with(d, rng)
            s = seeds[int(rng.choice(len(seeds), p=probs))]
            res = run(A.algorithm(s), x, strict=strict, record=False)
            wrong += not (res.outcome == "answer" and res.answer == f.value(x))
        return ErrorReport("sampled", wrong / samples, {}, {}, samples)
    raise InvalidArgument(f"unknown mode {mode!r}")
