import hashlib
import statistics

import numpy as np
import pytest

from driftindex.exceptions import ConfigError, DataError
from driftindex.harness import (
    GroundTruth,
    SyntheticConfig,
    bench,
    generate,
    ingest_csv,
    load_csv,
    parse_columns,
    score_detection,
)


class TestGenerate:
    def test_period_positions(self):
        _, truth = generate(SyntheticConfig(dim=2, n_points=20000, period=1000, magnitude=5))
        assert truth.drifts == tuple(range(1000, 20000, 1000))
        assert len(truth) == 19

    def test_deterministic(self):
        cfg = SyntheticConfig(dim=3, n_points=5000, period=700, magnitude=2, seed=42)
        digest = [hashlib.sha256(generate(cfg)[0].tobytes()).hexdigest() for _ in range(2)]
        assert digest[0] == digest[1]
        other = generate(SyntheticConfig(dim=3, n_points=5000, period=700, magnitude=2, seed=43))[0]
        assert not np.array_equal(generate(cfg)[0], other)

    def test_shift_size(self):
        cfg = SyntheticConfig(dim=4, n_points=40000, drift_at=(20000,), magnitude=5,
                              n_components=1, seed=3)
        X, _ = generate(cfg)
        jump = np.linalg.norm(X[20000:].mean(axis=0) - X[:20000].mean(axis=0))
        assert jump == pytest.approx(5.0, abs=0.1)
        # the point at the drift ordinal still belongs to the old regime
        cfg0 = SyntheticConfig(dim=4, n_points=40000, drift_at=(20000,), magnitude=0,
                               n_components=1, seed=3)
        assert np.allclose(generate(cfg0)[0][:20000], X[:20000])

    def test_zero_magnitude_keeps_truth(self):
        X, truth = generate(SyntheticConfig(dim=2, n_points=3000, period=1000, magnitude=0))
        assert truth.drifts == (1000, 2000)

    def test_schedule(self):
        cfg = SyntheticConfig(dim=1, n_points=3000, schedule=((1000, 500), (3000, 250)))
        assert cfg.positions() == [500, 1000, 1250, 1500, 1750, 2000, 2250, 2500, 2750]

    @pytest.mark.parametrize("kw", [
        dict(drift_at=(1,)), dict(drift_at=(500, 400)), dict(drift_at=(1000,)),
        dict(period=0), dict(magnitude=-1.0), dict(period=10, drift_at=(5,)),
    ])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            SyntheticConfig(dim=2, n_points=1000, **kw)


class TestCsv:
    def test_two_lines(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("1.0\n3.0\n")
        pts = list(ingest_csv(p))
        assert [x.ord for x in pts] == [1, 2]
        assert [x.features[0] for x in pts] == [-1.0, 1.0]
        assert statistics.pstdev([1.0, 3.0]) == 1.0

    def test_constant_column(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("5,1\n5,2\n5,3\n")
        X = load_csv(p)
        assert np.all(X[:, 0] == 0.0)

    def test_header_and_columns(self, tmp_path):
        p = tmp_path / "h.csv"
        p.write_text("a,b,c,d\n1,x,10,7\n2,y,20,7\n3,z,30,7\n")
        pts = list(ingest_csv(p, parse_columns("1,3"), skip_header=True))
        assert pts[0].ord == 1 and len(pts) == 3 and pts[0].dim == 2
        X = load_csv(p, skip_header=True, drop_non_numeric=True)
        assert X.shape == (3, 3)

    def test_non_numeric_reports_location(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("1,2\n3,oops\n")
        with pytest.raises(DataError, match=r"line 2, column 2"):
            load_csv(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(tmp_path / "nope.csv")

    def test_normalisation(self, tmp_path, rng):
        raw = rng.normal(3.0, 7.0, size=(20000, 3)) * [1, 1e3, 1e-3]
        p = tmp_path / "big.csv"
        np.savetxt(p, raw, delimiter=",", fmt="%.17g")
        X = load_csv(p)
        np.testing.assert_allclose(X.mean(axis=0), 0.0, atol=1e-9)
        np.testing.assert_allclose(X.std(axis=0), 1.0, atol=1e-9)

    def test_parse_columns(self):
        assert parse_columns("1,5-9") == [0, 4, 5, 6, 7, 8]
        assert parse_columns(None) is None
        for bad in ("0", "3-1", "a", "1,1"):
            with pytest.raises(ConfigError):
                parse_columns(bad)


class TestScore:
    def test_exact_hit(self):
        r = score_detection([1000], GroundTruth((1000,)), 0)
        assert (r["precision"], r["recall"]) == (1.0, 1.0)

    def test_greedy_order(self):
        r = score_detection([900, 1100], GroundTruth((1000,)), 100)
        assert (r["tp"], r["fp"], r["fn"]) == (1, 1, 0)
        assert (r["precision"], r["recall"]) == (0.5, 1.0)

    def test_nothing_detected(self):
        r = score_detection([], GroundTruth((1000,)), 100)
        assert (r["precision"], r["recall"], r["f1"]) == (1.0, 0.0, 0.0)

    def test_nearest_truth(self):
        r = score_detection([1040], GroundTruth((1000, 1050)), 100)
        assert r["tp"] == 1
        r2 = score_detection([1040, 1060], GroundTruth((1000, 1050)), 100)
        assert r2["tp"] == 2

    def test_counts_balance(self, rng):
        for _ in range(50):
            det = sorted(rng.choice(10000, size=rng.integers(0, 20), replace=False).tolist())
            tru = GroundTruth(tuple(sorted(rng.choice(10000, size=rng.integers(0, 20), replace=False).tolist())))
            r = score_detection(det, tru, int(rng.integers(0, 500)))
            assert r["tp"] + r["fn"] == len(tru)
            assert r["tp"] + r["fp"] == len(det)

    def test_truth_validation(self):
        with pytest.raises(DataError):
            GroundTruth((5, 3))


class TestBench:
    SPEC = {
        "datasets": [{"name": "syn", "dim": 3, "points": 6000, "period": 1000,
                      "magnitude": 6, "seed": 5}],
        "grid": {"granularities": [[100, 500, 1000]], "modes": ["independent"],
                 "policies": ["full", "bottom"], "thetas": ["mean_k_sigma:2"]},
        "queries": [{"kind": "rq", "gs": 1000, "gt": 100}, {"kind": "sq", "gs": 100, "gt": 1000}],
    }

    def test_policies_agree(self):
        cells = bench(self.SPEC)["cells"]
        full, bottom = cells
        for g in ("100", "500", "1000"):
            assert full["levels"][g]["drifts"] == bottom["levels"][g]["drifts"]
            assert full["levels"][g]["score"] == bottom["levels"][g]["score"]
        assert [q["result"] for q in full["queries"]] == [q["result"] for q in bottom["queries"]]
        assert full["storage"]["total_cfs"] > bottom["storage"]["total_cfs"]

    def test_single_cell_is_manual_pipeline(self):
        from driftindex import DriftIndexer

        spec = {**self.SPEC, "grid": {**self.SPEC["grid"], "policies": ["full"]}}
        (cell,) = bench(spec)["cells"]
        X, _ = generate(SyntheticConfig(dim=3, n_points=6000, period=1000, magnitude=6, seed=5))
        est = DriftIndexer((100, 500, 1000)).fit(X)
        assert cell["levels"]["100"]["drifts"] == [x.to_dict() for x in est.uq(100)]

    def test_empty_dataset(self):
        spec = {"datasets": [{"dim": 2, "points": 0}], "grid": {"granularities": [[10, 20]]}}
        (cell,) = bench(spec)["cells"]
        assert cell["storage"]["total_nodes"] == 0
        assert all(lv["drifts"] == [] for lv in cell["levels"].values())

    def test_errors_name_the_cell(self):
        spec = {"datasets": [{"name": "d", "dim": 2, "points": 500, "period": 100}],
                "grid": {"policies": ["partial:500"], "granularities": [[100, 500]]}}
        with pytest.raises(ConfigError, match="cell d/"):
            bench(spec)
        with pytest.raises(ConfigError):
            bench({})
