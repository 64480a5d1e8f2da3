import json
import random

import pytest

from omegalab.codec import Dyadic, ONE, ZERO, is_prefix_free, kraft_sum
from omegalab.errors import DomainError, LoadError
from omegalab.explore import Explorer, MassLedger
from omegalab.svm import Halted, run


@pytest.fixture(scope="module")
def depth12():
    ex = Explorer()
    ex.expand(12, 2000)
    return ex


class TestLedger:
    def test_fresh_tree_depth_one(self):
        ex = Explorer()
        led = ex.expand(1, 10)
        assert led == MassLedger(halted=ZERO, dead=ZERO, frontier=ONE)

    def test_depth_three(self):
        ex = Explorer()
        led = ex.expand(3, 10)
        assert led.halted == Dyadic(1, 3)
        assert led.dead == ZERO
        assert led.frontier == Dyadic(7, 3)
        assert ex.halted_set(3) == [("000", "", 1)]

    def test_idempotent(self):
        ex = Explorer()
        first = ex.expand(5, 100)
        again = ex.expand(5, 100)
        assert first == again

    def test_conservation_and_monotonicity(self):
        rng = random.Random(2)
        ex = Explorer()
        prev_halted, prev_dead = ZERO, ZERO
        for _ in range(30):
            led = ex.expand(rng.randrange(1, 15), rng.choice([1, 10, 100, 1000]))
            assert led.halted + led.dead + led.frontier == ONE
            assert prev_halted <= led.halted and prev_dead <= led.dead
            prev_halted, prev_dead = led.halted, led.dead

    def test_ledger_type_rejects_leaks(self):
        with pytest.raises(DomainError):
            MassLedger(halted=Dyadic(1, 2), dead=ZERO, frontier=Dyadic(1, 2) - Dyadic(1, 8))

    def test_bad_args(self):
        ex = Explorer()
        with pytest.raises(DomainError):
            ex.expand(0, 10)
        with pytest.raises(DomainError):
            ex.expand(3, 0)


class TestHaltedSet:
    def test_small_sets(self, depth12):
        assert [p for p, _, _ in depth12.halted_set(2)] == []
        assert depth12.halted_set(3) == [("000", "", 1)]
        six = depth12.halted_set(6)
        assert ("100000", "0", 2) in six
        assert ("101000", "1", 2) in six

    def test_length_lex_order_and_validity(self, depth12):
        halted = depth12.halted_set(12)
        keys = [(len(p), p) for p, _, _ in halted]
        assert keys == sorted(keys)
        for p, out, steps in random.Random(3).sample(halted, 40):
            assert run(p, 4000) == Halted(program=p, output=out, steps=steps)

    def test_requires_coverage(self, depth12):
        with pytest.raises(DomainError):
            depth12.halted_set(13)

    def test_kraft_matches_ledger_and_prefix_free(self, depth12):
        halted = [p for p, _, _ in depth12.halted_set(12)]
        assert kraft_sum(halted) == depth12.ledger.halted
        assert is_prefix_free(halted)


class TestResolvedBelow:
    def test_examples(self, depth12):
        fresh = Explorer()
        assert fresh.resolved_below(0)
        assert not fresh.resolved_below(3)
        ex = Explorer()
        ex.expand(3, 10)
        assert ex.resolved_below(3)
        assert depth12.resolved_below(12)

    def test_budget_limited_blocks(self):
        # countdown loop burning ~3*n steps: LDI g(12); DEC; BRNZ g(11)
        ex = Explorer()
        ex.expand(18, 2)
        assert not ex.resolved_below(18)
        assert ex.counts()["budget_limited"] > 0
        led = ex.ledger
        assert led.halted + led.dead + led.frontier == ONE
        ex.expand(18, 10_000)
        assert ex.resolved_below(18)

    def test_classify_candidate(self, depth12):
        assert depth12.classify_candidate("000") == "halted"
        assert depth12.classify_candidate("0001") == "extension"
        assert depth12.classify_candidate("00") == "prefix"
        assert depth12.classify_candidate("1101") == "diverged"
        assert depth12.classify_candidate("11010") == "diverged"
        assert depth12.classify_candidate("0" * 40) == "extension"  # extends "000"
        assert depth12.classify_candidate("001" * 14) == "unknown"  # past explored depth


class TestSnapshots:
    def test_roundtrip_identity(self, depth12):
        doc = depth12.snapshot()
        back = Explorer.restore(doc)
        assert back.ledger == depth12.ledger
        assert back.snapshot() == doc
        assert back.halted_set(12) == depth12.halted_set(12)

    def test_resume_equals_uninterrupted(self, tmp_path):
        a = Explorer()
        a.expand(3, 10)
        path = tmp_path / "snap.json"
        a.save_snapshot(str(path))
        b = Explorer.load_snapshot(str(path))
        b.expand(6, 100)
        c = Explorer()
        c.expand(3, 10)
        c.expand(6, 100)
        assert b.snapshot() == c.snapshot()

    def test_corrupt_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("not json at all {")
        with pytest.raises(LoadError):
            Explorer.load_snapshot(str(path))
        with pytest.raises(LoadError):
            Explorer.restore({"isa_version": "other-machine", "depth": 0,
                              "budgets": [], "leaves": [], "ledger": {}})

    def test_tampered_leaves_rejected(self):
        ex = Explorer()
        ex.expand(4, 50)
        doc = ex.snapshot()
        broken = json.loads(json.dumps(doc))
        del broken["leaves"][0]
        with pytest.raises(LoadError):
            Explorer.restore(broken)
        wrong = json.loads(json.dumps(doc))
        wrong["ledger"]["halted"] = "1/2^1"
        with pytest.raises(LoadError):
            Explorer.restore(wrong)

    def test_missing_file(self, tmp_path):
        with pytest.raises(LoadError):
            Explorer.load_snapshot(str(tmp_path / "nope.json"))


class TestParallelism:
    def test_workers_do_not_change_results(self):
        a = Explorer()
        a.expand(13, 500, workers=1)
        b = Explorer()
        b.expand(13, 500, workers=3)
        assert a.snapshot() == b.snapshot()
