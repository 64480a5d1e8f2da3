"""Lazy enumeration of all program prefixes with exact mass accounting.

The prefix space is a binary tree.  A node's tape is exactly its prefix
(every bit is appended the moment the machine demands it), so each node runs
one machine session; a session that demands another bit makes the node
internal with two children.  Leaves are therefore

* halted    -- the prefix is a complete program,
* diverged  -- a sound non-halting certificate was found,
* frontier  -- still demanding bits at the depth limit, or budget-limited.

Each leaf of depth d carries mass 2**-d, and halted + dead + frontier = 1
exactly at every moment.  Budget-limited leaves stay in frontier mass: they
inflate only the upper bracket of the halting probability, never the lower.

Prefixes are stored packed as integers (see codec.pack_bits); sorted packed
keys are length-lex order.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from multiprocessing import get_context

from .codec import Dyadic, ONE, ZERO, kraft_sum, find_prefix_violation, pack_bits, unpack_bits
from .errors import DomainError, LoadError
from .svm import (
    ISA_VERSION,
    S_BUDGET,
    S_DEMAND,
    S_DIVERGE,
    S_HALT,
    Certificate,
    certificate_doc,
    certificate_from_doc,
    run_session,
)

# common denominator exponent for mass accumulators; depths stay far below this
MASS_EXP = 64

_ROOT_KEY = 1  # packed empty prefix

# split work below this depth when running with several workers
_SPLIT_MIN_ITEMS = 64


@dataclass(frozen=True, slots=True)
class MassLedger:
    """Exact partition of total program-space mass 1."""

    halted: Dyadic
    dead: Dyadic
    frontier: Dyadic

    def __post_init__(self):
        if self.halted + self.dead + self.frontier != ONE:
            raise DomainError(
                f"ledger does not conserve mass: {self.halted} + {self.dead} + {self.frontier}")


def _explore_chunk(args):
    """Classify every prefix below the given demanding nodes, down to target_depth.

    Pure function of its arguments; used by the in-process path and by worker
    processes alike so scheduling can never change results.

    args: (work, target_depth, target_budget) where work is a list of
    (key, ip, r, out, steps) demanding states.
    Returns (halted, diverged, unknown, frontier) item lists keyed by packed prefix.
    """
    work, target_depth, target_budget = args
    halted = []
    diverged = []
    unknown = []
    frontier = []
    stack = []
    for key, ip, r, out, steps in work:
        length = key.bit_length() - 1
        stack.append((key - (1 << length), length, ip, r, out, steps))
        while stack:
            t, L, ip0, r0, out0, steps0 = stack.pop()
            ct = (t << 1) | 1
            cl = L + 1
            for bit in (1, 0):
                if not bit:
                    ct -= 1
                res = run_session(ct, cl, ip0, r0, out0, steps0, target_budget)
                kind = res[0]
                ckey = (1 << cl) | ct
                if kind == S_DEMAND:
                    if cl < target_depth:
                        stack.append((ct, cl, res[1], res[2], res[3], res[4]))
                    else:
                        frontier.append((ckey, res[1], res[2], res[3], res[4]))
                elif kind == S_HALT:
                    halted.append((ckey, res[1], res[2]))
                elif kind == S_DIVERGE:
                    diverged.append((ckey, res[1], res[2]))
                else:
                    unknown.append((ckey, res[4]))
    return halted, diverged, unknown, frontier


class Explorer:
    """Resumable exhaustive exploration of the machine's program space."""

    def __init__(self):
        self._halted: dict[int, tuple[str, int]] = {}
        self._diverged: dict[int, tuple[Certificate, int]] = {}
        self._unknown: dict[int, int] = {}
        self._frontier: set[int] = {_ROOT_KEY}
        # live machine states for frontier leaves; entries may be missing after
        # a snapshot restore and are then rebuilt by deterministic replay
        self._states: dict[int, tuple[int, int, str, int]] = {
            _ROOT_KEY: (0, 0, "", 0)}
        self._depth = 0
        self._budgets: list[int] = []
        self._halted_acc = 0
        self._dead_acc = 0

    # -- observable state ---------------------------------------------------

    @property
    def depth(self) -> int:
        return self._depth

    @property
    def budget(self) -> int:
        return max(self._budgets, default=0)

    @property
    def budgets(self) -> list[int]:
        return list(self._budgets)

    @property
    def ledger(self) -> MassLedger:
        halted = Dyadic(self._halted_acc, MASS_EXP)
        dead = Dyadic(self._dead_acc, MASS_EXP)
        frontier = Dyadic((1 << MASS_EXP) - self._halted_acc - self._dead_acc, MASS_EXP)
        return MassLedger(halted=halted, dead=dead, frontier=frontier)

    def counts(self) -> dict[str, int]:
        return {
            "halted": len(self._halted),
            "diverged": len(self._diverged),
            "frontier": len(self._frontier) + len(self._unknown),
            "budget_limited": len(self._unknown),
        }

    # -- expansion ----------------------------------------------------------

    def expand(self, depth_limit: int, step_budget: int, workers: int = 1) -> MassLedger:
        """Classify every prefix of length <= depth_limit under step_budget.

        Depth and budget never regress: calling with smaller values than an
        earlier call re-applies the stronger ones, so the call is idempotent
        and refinement is monotone.  Results are independent of `workers`.
        """
        if depth_limit < 1:
            raise DomainError(f"depth_limit must be >= 1, got {depth_limit}")
        if step_budget < 1:
            raise DomainError(f"step_budget must be >= 1, got {step_budget}")
        self._budgets.append(step_budget)
        target_d = max(depth_limit, self._depth)
        target_b = self.budget

        work: list[tuple[int, int, int, str, int]] = []

        # push budget-limited leaves further before any deepening
        for key in sorted(self._unknown):
            if self._unknown[key] >= target_b:
                continue
            res = self._replay(key, target_b)
            kind = res[0]
            if kind == S_BUDGET:
                self._unknown[key] = res[4]
                continue
            del self._unknown[key]
            length = key.bit_length() - 1
            unit = 1 << (MASS_EXP - length)
            if kind == S_HALT:
                self._halted[key] = (res[1], res[2])
                self._halted_acc += unit
            elif kind == S_DIVERGE:
                self._diverged[key] = (res[1], res[2])
                self._dead_acc += unit
            else:  # now demanding another bit
                if length < target_d:
                    work.append((key, res[1], res[2], res[3], res[4]))
                else:
                    self._frontier.add(key)
                    self._states[key] = (res[1], res[2], res[3], res[4])

        if target_d > self._depth:
            keep: set[int] = set()
            for key in sorted(self._frontier):
                if key.bit_length() - 1 >= target_d:
                    keep.add(key)
                    continue
                st = self._states.pop(key, None)
                if st is None:
                    res = self._replay(key, target_b)
                    if res[0] != S_DEMAND:
                        raise AssertionError("frontier leaf stopped demanding on replay")
                    st = (res[1], res[2], res[3], res[4])
                work.append((key, *st))
            self._frontier = keep

        if work:
            for result in self._run_chunks(work, target_d, target_b, workers):
                self._merge(result)
        self._depth = target_d
        return self.ledger

    def _run_chunks(self, work, target_d, target_b, workers):
        if workers <= 1 or len(work) < _SPLIT_MIN_ITEMS:
            yield _explore_chunk((work, target_d, target_b))
            return
        step = max(1, (len(work) + workers * 4 - 1) // (workers * 4))
        chunks = [work[i:i + step] for i in range(0, len(work), step)]
        ctx = get_context("fork")
        with ctx.Pool(processes=workers) as pool:
            yield from pool.imap(
                _explore_chunk,
                [(chunk, target_d, target_b) for chunk in chunks])

    def _merge(self, result):
        halted, diverged, unknown, frontier = result
        for key, out, steps in halted:
            self._halted[key] = (out, steps)
            self._halted_acc += 1 << (MASS_EXP - key.bit_length() + 1)
        for key, cert, steps in diverged:
            self._diverged[key] = (cert, steps)
            self._dead_acc += 1 << (MASS_EXP - key.bit_length() + 1)
        for key, steps in unknown:
            self._unknown[key] = steps
        for key, ip, r, out, steps in frontier:
            self._frontier.add(key)
            self._states[key] = (ip, r, out, steps)

    def _replay(self, key: int, budget: int):
        """Deterministically re-run the machine along a stored prefix."""
        bits = unpack_bits(key)
        total = len(bits)
        t = L = ip = r = steps = 0
        out = ""
        while True:
            res = run_session(t, L, ip, r, out, steps, budget)
            if res[0] != S_DEMAND:
                if L != total:
                    raise AssertionError(f"prefix {bits!r} resolved before its end")
                return res
            _, ip, r, out, steps = res
            if L == total:
                return res
            t = (t << 1) | (bits[L] == "1")
            L += 1

    # -- queries ------------------------------------------------------------

    def halted_set(self, max_len: int) -> list[tuple[str, str, int]]:
        """All halted programs with |p| <= max_len as (program, output, steps), length-lex."""
        if max_len > self._depth:
            raise DomainError(
                f"enumeration covers depth {self._depth}, asked for {max_len}")
        bound = 1 << (max_len + 1)
        return [(unpack_bits(key), out, steps)
                for key, (out, steps) in sorted(self._halted.items())
                if key < bound]

    def diverged_set(self, max_len: int) -> list[tuple[str, Certificate, int]]:
        """All certified-divergent prefixes with length <= max_len, length-lex."""
        if max_len > self._depth:
            raise DomainError(
                f"enumeration covers depth {self._depth}, asked for {max_len}")
        bound = 1 << (max_len + 1)
        return [(unpack_bits(key), cert, steps)
                for key, (cert, steps) in sorted(self._diverged.items())
                if key < bound]

    def resolved_below(self, max_len: int) -> bool:
        """True iff every candidate of length <= max_len is decided
        halted / diverged / proper-prefix, with no budget-limited holdout."""
        if max_len > self._depth:
            return False
        if not self._unknown:
            return True
        bound = 1 << (max_len + 1)
        return all(key >= bound for key in self._unknown)

    def classify_candidate(self, bits: str) -> str:
        """Status of an arbitrary string: 'halted', 'diverged', 'extension',
        'prefix', or 'unknown' (undecided at current depth/budget)."""
        key = pack_bits(bits)
        probe = key
        while probe >= 1:
            if probe in self._halted:
                return "halted" if probe == key else "extension"
            if probe in self._diverged:
                # the machine loops before reading any further bit
                return "diverged"
            if probe in self._unknown:
                return "unknown"
            probe >>= 1
        return "prefix" if len(bits) <= self._depth else "unknown"

    def halts(self, bits: str) -> bool:
        return pack_bits(bits) in self._halted

    # -- snapshots ------------------------------------------------------------

    def snapshot(self) -> dict:
        """Self-describing document capturing the observable exploration state."""
        leaves = []
        keys = sorted(self._halted) + sorted(self._diverged) + \
            sorted(self._unknown) + sorted(self._frontier)
        for key in sorted(keys):
            prefix = unpack_bits(key)
            if key in self._halted:
                out, steps = self._halted[key]
                leaves.append({"prefix": prefix, "status": "halted",
                               "output": out, "steps": steps})
            elif key in self._diverged:
                cert, steps = self._diverged[key]
                leaves.append({"prefix": prefix, "status": "diverged",
                               "certificate": certificate_doc(cert), "steps": steps})
            elif key in self._unknown:
                leaves.append({"prefix": prefix, "status": "frontier",
                               "steps": self._unknown[key]})
            else:
                leaves.append({"prefix": prefix, "status": "frontier"})
        ledger = self.ledger
        return {
            "isa_version": ISA_VERSION,
            "depth": self._depth,
            "budgets": list(self._budgets),
            "leaves": leaves,
            "ledger": {"halted": str(ledger.halted), "dead": str(ledger.dead),
                       "frontier": str(ledger.frontier)},
        }

    @classmethod
    def restore(cls, doc: dict) -> "Explorer":
        """Rebuild an explorer from a snapshot document; rejects corrupt or
        version-mismatched snapshots."""
        try:
            if doc["isa_version"] != ISA_VERSION:
                raise LoadError(
                    f"snapshot is for machine {doc['isa_version']!r}, this is {ISA_VERSION!r}")
            depth = doc["depth"]
            budgets = list(doc["budgets"])
            leaves = doc["leaves"]
            if not isinstance(depth, int) or depth < 0:
                raise LoadError(f"bad depth: {depth!r}")
            if not all(isinstance(b, int) and b >= 1 for b in budgets):
                raise LoadError(f"bad budgets: {budgets!r}")
            ex = cls()
            ex._frontier.clear()
            ex._states.clear()
            ex._depth = depth
            ex._budgets = budgets
            seen = []
            for leaf in leaves:
                prefix = leaf["prefix"]
                if set(prefix) - {"0", "1"} or len(prefix) > depth:
                    raise LoadError(f"bad leaf prefix: {prefix!r}")
                seen.append(prefix)
                key = pack_bits(prefix)
                status = leaf["status"]
                if status == "halted":
                    ex._halted[key] = (leaf["output"], leaf["steps"])
                    ex._halted_acc += 1 << (MASS_EXP - len(prefix))
                elif status == "diverged":
                    cert = certificate_from_doc(leaf["certificate"])
                    ex._diverged[key] = (cert, leaf["steps"])
                    ex._dead_acc += 1 << (MASS_EXP - len(prefix))
                elif status == "frontier":
                    if "steps" in leaf:
                        ex._unknown[key] = leaf["steps"]
                    else:
                        ex._frontier.add(key)
                else:
                    raise LoadError(f"unknown leaf status: {status!r}")
        except LoadError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise LoadError(f"malformed snapshot: {exc}") from exc
        if kraft_sum(seen) != ONE or find_prefix_violation(seen) is not None:
            raise LoadError("snapshot leaves do not tile the program space")
        ledger = ex.ledger
        stored = doc["ledger"]
        try:
            ok = (Dyadic.parse(stored["halted"]) == ledger.halted
                  and Dyadic.parse(stored["dead"]) == ledger.dead
                  and Dyadic.parse(stored["frontier"]) == ledger.frontier)
        except (DomainError, KeyError, TypeError) as exc:
            raise LoadError(f"malformed snapshot ledger: {exc}") from exc
        if not ok:
            raise LoadError("snapshot ledger disagrees with its leaves")
        return ex

    def save_snapshot(self, path: str) -> None:
        """Write the snapshot atomically (write-then-rename)."""
        doc = self.snapshot()
        text = json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"
        directory = os.path.dirname(os.path.abspath(path))
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".snapshot-", suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @classmethod
    def load_snapshot(cls, path: str) -> "Explorer":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise LoadError(f"cannot read snapshot {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise LoadError(f"snapshot {path} is not well-formed: {exc}") from exc
        if not isinstance(doc, dict):
            raise LoadError(f"snapshot {path} is not a document")
        return cls.restore(doc)
