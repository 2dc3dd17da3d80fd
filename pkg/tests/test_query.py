import numpy as np
import pytest
from helpers import drift_sets, random_instance

from driftindex import DriftIndex, QueryError, reference_eval, rq, sq, uq, uq_result
from driftindex.query import RQ, SQ, UQ, refine, synthesize
from driftindex.stream import contains, interval_bounds, window


def pairs_of(pairs):
    return [((s.g, s.i), (m.g, m.i)) for s, m in pairs]


class TestRefinement:
    def test_finest_match_wins(self):
        sets = drift_sets({100: [12], 500: [3], 1000: [1]})
        pairs, unmatched = refine(sets, 1000, 100)
        assert pairs_of(pairs) == [((1000, 1), (100, 12))]
        assert not unmatched
        ref = reference_eval(sets, RQ, 1000, 100)
        assert pairs_of(ref.pairs) == pairs_of(pairs)

    def test_falls_back_to_coarser(self):
        sets = drift_sets({100: [], 500: [3], 1000: [1]})
        pairs, _ = refine(sets, 1000, 100)
        assert pairs_of(pairs) == [((1000, 1), (500, 3))]
        assert contains(window(1000, 1), interval_bounds(500, 3))

    def test_unmatched(self):
        sets = drift_sets({100: [], 500: [], 1000: [1]})
        pairs, unmatched = refine(sets, 1000, 100)
        assert pairs == [] and [(x.g, x.i) for x in unmatched] == [(1000, 1)]

    def test_all_hits_at_chosen_level(self):
        sets = drift_sets({100: [3, 7, 19, 25], 1000: [1]})
        pairs, _ = refine(sets, 1000, 100)
        assert [m.i for _, m in pairs] == [3, 7, 19]

    def test_strict_window_containment(self):
        sets = drift_sets({100: [20], 1000: [1]})
        assert pairs_of(refine(sets, 1000, 100)[0]) == [((1000, 1), (100, 20))]
        assert refine(sets, 1000, 100, strict=True)[0] == []


class TestSynthesis:
    def test_coarsest_match_wins(self):
        sets = drift_sets({100: [12], 1000: [1], 2000: [1]})
        pairs, _ = synthesize(sets, 100, 2000)
        assert pairs_of(pairs) == [((100, 12), (2000, 1))]
        assert contains(window(2000, 1), interval_bounds(100, 12))

    def test_falls_back_to_finer(self):
        sets = drift_sets({100: [12], 1000: [1], 2000: []})
        pairs, _ = synthesize(sets, 100, 2000)
        assert pairs_of(pairs) == [((100, 12), (1000, 1))]

    def test_unmatched(self):
        sets = drift_sets({100: [12], 1000: [5], 2000: []})
        pairs, unmatched = synthesize(sets, 100, 2000)
        assert pairs == [] and len(unmatched) == 1


class TestReferenceEval:
    def test_empty_source(self):
        res = reference_eval(drift_sets({100: [3], 1000: []}), RQ, 1000, 100)
        assert res.pairs == [] and res.unmatched == []
        res = reference_eval(drift_sets({100: [], 1000: [1]}), SQ, 100, 1000)
        assert res.pairs == [] and res.unmatched == []

    def test_direction_errors(self):
        sets = drift_sets({100: [1], 1000: [1]})
        with pytest.raises(QueryError, match="refinement"):
            reference_eval(sets, RQ, 100, 1000)
        with pytest.raises(QueryError, match="synthesis"):
            reference_eval(sets, SQ, 1000, 100)
        with pytest.raises(QueryError, match="refinement"):
            reference_eval(drift_sets({100: [1]}), RQ, 100, 100)

    @pytest.mark.parametrize("seed", range(5))
    @pytest.mark.parametrize("strict", [False, True])
    def test_traversal_matches_reference(self, seed, strict):
        rng = np.random.default_rng(seed)
        for _ in range(60):
            chain, sets = random_instance(rng)
            for a in chain:
                for b in chain:
                    if b < a:
                        got = refine(sets, a, b, strict)
                        ref = reference_eval(sets, RQ, a, b, strict)
                        assert pairs_of(got[0]) == pairs_of(ref.pairs)
                        assert got[1] == ref.unmatched
                    elif a < b:
                        got = synthesize(sets, a, b, strict)
                        ref = reference_eval(sets, SQ, a, b, strict)
                        assert pairs_of(got[0]) == pairs_of(ref.pairs)
                        assert got[1] == ref.unmatched

    def test_minimality_and_maximality(self):
        rng = np.random.default_rng(99)
        for _ in range(100):
            chain, sets = random_instance(rng)
            if len(chain) < 2:
                continue
            g_s, g_t = chain[-1], chain[0]
            for src, match in refine(sets, g_s, g_t)[0]:
                win = window(g_s, src.i)
                for g2 in chain:
                    if g_t <= g2 < match.g:
                        assert not any(contains(win, interval_bounds(g2, x.i)) for x in sets[g2])
            for src, match in synthesize(sets, g_t, g_s)[0]:
                inner = interval_bounds(g_t, src.i)
                for g2 in chain:
                    if match.g < g2 <= g_s:
                        assert not any(contains(window(g2, x.i), inner) for x in sets[g2])


@pytest.fixture(scope="module")
def index(drift_stream):
    X, _ = drift_stream
    idx = DriftIndex((100, 500, 1000), "full", epsilon=1.5)
    idx.ingest_many(X)
    return idx


class TestOnIndex:
    def test_uq_finds_truth(self, index, drift_stream):
        _, truth = drift_stream
        boundaries = set(uq(index, 100).boundaries)
        assert set(truth.drifts) - {1000} <= boundaries

    def test_uq_no_change_stream(self, rng):
        idx = DriftIndex((100, 500, 1000), "full", epsilon=1.5)
        idx.ingest_many(np.zeros((5000, 2)))
        assert all(len(uq(idx, g)) == 0 for g in (100, 500, 1000))

    def test_uq_single_interval(self, rng):
        idx = DriftIndex((100, 1000), "full", epsilon=1.0)
        idx.ingest_many(rng.normal(size=(1500, 2)))
        assert len(uq(idx, 1000)) == 0

    def test_rq_sq_agree_with_reference(self, index):
        sets = {g: uq(index, g) for g in (100, 500, 1000)}
        for kind, fn, a, b in [(RQ, rq, 1000, 100), (RQ, rq, 500, 100), (SQ, sq, 100, 1000)]:
            res = fn(index, a, b)
            ref = reference_eval(sets, kind, a, b)
            assert pairs_of(res.pairs) == pairs_of(ref.pairs)
            assert res.unmatched == ref.unmatched
            assert all(a != m.g for _, m in res.pairs)

    def test_result_json(self, index):
        d = rq(index, 1000, 100).to_dict()
        assert set(d) == {"kind", "g_s", "g_t", "pairs", "unmatched", "metadata"}
        assert d["kind"] == "RQ" and d["g_s"] == 1000 and d["g_t"] == 100
        for p in d["pairs"]:
            assert set(p) == {"source", "match"}
            assert set(p["source"]) == {"g", "i", "boundary_ord", "score", "theta"}
        u = uq_result(index, 500).to_dict()
        assert u["kind"] == UQ and u["metadata"]["levels"]["500"]["warmup_pairs"] == 2

    def test_errors(self, index):
        with pytest.raises(QueryError, match="unknown granularity"):
            uq(index, 300)
        with pytest.raises(QueryError, match="invalid refinement direction"):
            rq(index, 100, 1000)
        with pytest.raises(QueryError, match="invalid synthesis direction"):
            sq(index, 1000, 100)
        single = DriftIndex((100,), "full", epsilon=1.0)
        with pytest.raises(QueryError):
            rq(single, 100, 100)
