"""Oracle-number constructions and the logarithmic halting-count trick.

Candidate programs are indexed 1, 2, 3, ... in length-lex order over ALL bit
strings (index 1 is the empty string).  Strings that are not programs --
proper prefixes and extensions of programs -- score 0, so the numbering never
presupposes the halting knowledge the oracles encode.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

from .codec import encode_gamma, length_lex_key
from .errors import ContradictionError, DomainError, EvaluationError, UnresolvedCandidate
from .explore import Explorer
from .svm import Halted, run


@dataclass(frozen=True, slots=True)
class HaltingClassification:
    """Per-candidate halting verdicts, length-lex ordered, no duplicates."""

    entries: tuple[tuple[str, bool], ...]

    def __post_init__(self):
        names = [c for c, _ in self.entries]
        if names != sorted(set(names), key=length_lex_key):
            raise DomainError("classification entries must be unique and length-lex ordered")

    def halts(self, candidate: str) -> bool:
        for name, verdict in self.entries:
            if name == candidate:
                return verdict
        raise KeyError(candidate)

    def bits(self) -> str:
        return "".join("1" if v else "0" for _, v in self.entries)


@dataclass(frozen=True, slots=True)
class Inconclusive:
    """The dovetail budget ran out before the expected halt count was reached."""

    halted_found: int
    expected: int
    budget: int


def candidate(index: int) -> str:
    """The index-th bit string in length-lex order; candidate(1) == ""."""
    if index < 1:
        raise DomainError(f"candidate index must be >= 1, got {index}")
    length = index.bit_length() - 1
    return format(index - (1 << length), f"0{length}b") if length else ""


def candidates_upto(n: int) -> list[str]:
    return [candidate(i) for i in range(1, n + 1)]


def turing_number(explorer: Explorer, n: int) -> str:
    """First n digits of the halting oracle number: digit i is 1 iff the i-th
    candidate halts; proper prefixes and extensions score 0.

    Every candidate must already be resolved by the enumeration.
    """
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    digits = []
    for i in range(1, n + 1):
        status = explorer.classify_candidate(candidate(i))
        if status == "unknown":
            raise UnresolvedCandidate(index=i, candidate=candidate(i))
        digits.append("1" if status == "halted" else "0")
    return "".join(digits)


def compress_count(bits: str) -> tuple[int, str]:
    """Replace n independent halting answers by their count: returns
    (popcount, gamma code of popcount+1).  The +1 shift makes 0 encodable;
    the code costs at most 2*floor(log2(k+1)) + 1 bits."""
    k = bits.count("1")
    return k, encode_gamma(k + 1)


def expand_count(candidates_list: Sequence[str], k: int, round_budget: int,
                 stats: dict | None = None) -> HaltingClassification | Inconclusive:
    """Recover every halting verdict from the bare count k of halting candidates.

    Runs all candidates with geometrically growing step budgets; once exactly
    k have halted the remaining candidates can never halt (a further halt
    would contradict the count).  More than k halting inside a round means
    the supplied count was too small: ContradictionError.  If the budget cap
    is reached first the verdict is Inconclusive, not a guess.
    """
    if k < 0:
        raise DomainError(f"count must be >= 0, got {k}")
    if round_budget < 1:
        raise DomainError(f"round_budget must be >= 1, got {round_budget}")
    ordered = sorted(set(candidates_list), key=length_lex_key)
    if len(ordered) != len(candidates_list):
        raise DomainError("candidates must be unique")
    total_steps = 0
    budget = 16
    found = 0
    while True:
        budget = min(budget, round_budget)
        halters = set()
        for cand in ordered:
            outcome = _run_cached(cand, budget)
            if isinstance(outcome, Halted):
                halters.add(cand)
                total_steps += outcome.steps
            else:
                total_steps += budget
        found = len(halters)
        if found > k:
            raise ContradictionError(
                f"{found} candidates halted but the count said {k}; the count was wrong")
        if found == k:
            if stats is not None:
                stats["total_steps"] = total_steps
                stats["final_budget"] = budget
            return HaltingClassification(
                entries=tuple((c, c in halters) for c in ordered))
        if budget >= round_budget:
            if stats is not None:
                stats["total_steps"] = total_steps
                stats["final_budget"] = budget
            return Inconclusive(halted_found=found, expected=k, budget=budget)
        budget *= 2


@lru_cache(maxsize=1 << 20)
def _run_cached(program: str, max_steps: int):
    return run(program, max_steps)


def oracle_digits(evaluator: Callable[[int], bool], n: int) -> str:
    """Digit string answering questions 1..n: digit i is evaluator(i).

    Evaluator failures propagate as EvaluationError carrying the index.
    """
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    digits = []
    for i in range(1, n + 1):
        try:
            verdict = bool(evaluator(i))
        except Exception as exc:
            raise EvaluationError(i) from exc
        digits.append("1" if verdict else "0")
    return "".join(digits)


def halting_evaluator(explorer: Explorer) -> Callable[[int], bool]:
    """Question i: does the i-th candidate halt?  Gated on resolved ground
    truth; asking about an undecided candidate raises UnresolvedCandidate."""
    def evaluate(index: int) -> bool:
        cand = candidate(index)
        status = explorer.classify_candidate(cand)
        if status == "unknown":
            raise UnresolvedCandidate(index=index, candidate=cand)
        return status == "halted"
    return evaluate


def parity_evaluator(index: int) -> bool:
    return index % 2 == 1
