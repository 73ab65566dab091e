import json

import numpy as np
import pytest

from rafen.aggregation import AggregationSpec
from rafen.embeddings import EmbeddingMatrix
from rafen.errors import ContractViolationError
from rafen.evaluation import (
    EvalReport,
    evaluate_method,
    mean_ranks,
    prev_next_study,
    write_method_by_dataset_csv,
    write_report_json,
    write_study_csv,
    write_summary_csv,
)
from rafen.linkpred import build_dataset
from tests.conftest import make_snapshot


def ring_snapshot(n, t=0, time_range=None):
    edges = [(i, (i + 1) % n, t) for i in range(n)]
    return make_snapshot(edges, time_range=time_range)


def random_embeddings(rng, ids, d=8, count=2):
    return [EmbeddingMatrix(ids, rng.normal(size=(len(ids), d))) for _ in range(count)]


class TestEvaluateMethod:
    def test_fixed_embeddings_have_zero_std(self):
        rng = np.random.default_rng(40)
        ids = list(range(12))
        embs = random_embeddings(rng, ids)
        ds = build_dataset(ring_snapshot(12, t=5, time_range=(5, 6)), ids, seed=1)
        rep = evaluate_method(
            embs, AggregationSpec("mean"), ds, retrains=5, method="m", dataset_name="d"
        )
        assert len(rep.aucs) == 5
        assert rep.std == 0.0
        assert len(set(rep.aucs)) == 1

    def test_single_retrain_reports_zero_std(self):
        rng = np.random.default_rng(41)
        ids = list(range(10))
        ds = build_dataset(ring_snapshot(10), ids, seed=2)
        rep = evaluate_method(random_embeddings(rng, ids), AggregationSpec("last"), ds, retrains=1)
        assert rep.std == 0.0

    def test_provider_callable_varies_aucs(self):
        ids = list(range(14))
        ds = build_dataset(ring_snapshot(14), ids, seed=3)

        def provider(r):
            rng = np.random.default_rng(100 + r)
            return random_embeddings(rng, ids)

        rep = evaluate_method(provider, AggregationSpec("mean"), ds, retrains=4)
        assert len(set(rep.aucs)) > 1

    def test_perfectly_predictive_embeddings_win(self):
        # membership-coded embeddings on a two-block target graph
        ids = list(range(12))
        edges = [(u, v, 0) for u in range(6) for v in range(u + 1, 6)]
        edges += [(u, v, 0) for u in range(6, 12) for v in range(u + 1, 12)]
        target = make_snapshot(edges)
        ds = build_dataset(target, ids, seed=4)
        vecs = np.array([[1.0, 0.1] if i < 6 else [-1.0, 0.1] for i in ids])
        good = [EmbeddingMatrix(ids, vecs)]
        rep = evaluate_method(good, AggregationSpec("last"), ds, retrains=1)
        assert rep.aucs[0] == 1.0

    def test_retrains_validated(self):
        ids = list(range(5))
        ds = build_dataset(ring_snapshot(5), ids, seed=5)
        with pytest.raises(ContractViolationError):
            evaluate_method([EmbeddingMatrix(ids, np.ones((5, 2)))],
                            AggregationSpec("mean"), ds, retrains=0)


class TestMeanRanks:
    def test_frozen_two_method_tie_break(self):
        a = EvalReport("d", "a", "mean", (0.9, 0.6))
        b = EvalReport("d", "b", "mean", (0.8, 0.7))
        ranks = mean_ranks([a, b])
        # each method wins one run: both average (1 + 2) / 2 = 1.5
        assert ranks == {"mean": {"a": 1.5, "b": 1.5}}

    def test_ties_share_average_rank(self):
        a = EvalReport("d", "a", "last", (0.9,))
        b = EvalReport("d", "b", "last", (0.9,))
        c = EvalReport("d", "c", "last", (0.5,))
        ranks = mean_ranks([a, b, c])["last"]
        assert ranks["a"] == 1.5 and ranks["b"] == 1.5 and ranks["c"] == 3.0

    def test_groups_by_aggregation(self):
        reports = [
            EvalReport("d", "a", "mean", (0.9,)),
            EvalReport("d", "b", "mean", (0.8,)),
            EvalReport("d", "a", "last", (0.1,)),
            EvalReport("d", "b", "last", (0.2,)),
        ]
        ranks = mean_ranks(reports)
        assert ranks["mean"]["a"] == 1.0 and ranks["last"]["a"] == 2.0

    def test_unequal_run_counts_rejected(self):
        with pytest.raises(ContractViolationError):
            mean_ranks([
                EvalReport("d", "a", "mean", (0.9, 0.8)),
                EvalReport("d", "b", "mean", (0.7,)),
            ])


class TestReportFiles:
    def reports(self):
        return [
            EvalReport("ds1", "vanilla", "mean", (0.75, 0.85)),
            EvalReport("ds1", "rafen", "mean", (0.9, 0.8)),
        ]

    def test_json_deterministic_and_complete(self, tmp_path):
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        write_report_json(self.reports(), p1)
        write_report_json(self.reports(), p2)
        assert p1.read_bytes() == p2.read_bytes()
        payload = json.loads(p1.read_text())
        assert {r["method"] for r in payload["reports"]} == {"vanilla", "rafen"}
        assert payload["mean_ranks"]["mean"] == {"vanilla": 1.5, "rafen": 1.5}

    def test_summary_csv(self, tmp_path):
        path = tmp_path / "summary.csv"
        write_summary_csv(self.reports(), path)
        lines = path.read_text().splitlines()
        assert lines[0] == "dataset,method,aggregation,auc_mean,auc_std,n_runs"
        fields = lines[1].split(",")
        assert fields[:3] == ["ds1", "vanilla", "mean"]
        assert float(fields[3]) == pytest.approx(0.8)
        assert float(fields[4]) == pytest.approx(0.05)
        assert fields[5] == "2"

    def test_method_by_dataset_pivot(self, tmp_path):
        reports = self.reports() + [EvalReport("ds2", "vanilla", "mean", (0.6,))]
        path = tmp_path / "pivot.csv"
        write_method_by_dataset_csv(reports, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "method,aggregation,ds1,ds2"
        by_method = {ln.split(",")[0]: ln for ln in lines[1:]}
        assert by_method["vanilla"] == "vanilla,mean,80.00+-5.00,60.00+-0.00"
        assert by_method["rafen"] == "rafen,mean,85.00+-5.00,"


class TestPrevNextStudy:
    def snapshots(self, n=16, L=3):
        return [ring_snapshot(n, t=t, time_range=(t, t + 1)) for t in range(L)]

    def methods(self, ids, L=3, seed=50):
        rng = np.random.default_rng(seed)
        return {
            "vanilla": [EmbeddingMatrix(ids, rng.normal(size=(len(ids), 6))) for _ in range(L)],
            "other": [EmbeddingMatrix(ids, rng.normal(size=(len(ids), 6))) for _ in range(L)],
        }

    def test_row_count_and_baseline_ratio(self):
        snaps = self.snapshots()
        ids = list(range(16))
        rows = prev_next_study(self.methods(ids), snaps, seed=7)
        # (L-1) snapshots per scenario x 2 scenarios x 2 methods
        assert len(rows) == (len(snaps) - 1) * 2 * 2
        for row in rows:
            if row.method == "vanilla":
                assert row.ratio == 1.0
        prev_ts = {r.snapshot for r in rows if r.scenario == "prev"}
        next_ts = {r.snapshot for r in rows if r.scenario == "next"}
        assert prev_ts == {1, 2} and next_ts == {0, 1}

    def test_deterministic_in_seed(self):
        snaps = self.snapshots()
        ids = list(range(16))
        r1 = prev_next_study(self.methods(ids), snaps, seed=9)
        r2 = prev_next_study(self.methods(ids), snaps, seed=9)
        assert r1 == r2

    def test_missing_baseline_rejected(self):
        snaps = self.snapshots()
        m = self.methods(list(range(16)))
        del m["vanilla"]
        with pytest.raises(ContractViolationError):
            prev_next_study(m, snaps)

    def test_short_history_rejected(self):
        snaps = self.snapshots(L=1)
        ids = list(range(16))
        rng = np.random.default_rng(51)
        m = {"vanilla": [EmbeddingMatrix(ids, rng.normal(size=(16, 4)))]}
        with pytest.raises(ContractViolationError):
            prev_next_study(m, snaps)

    def test_mismatched_coverage_rejected(self):
        snaps = self.snapshots()
        ids = list(range(16))
        m = self.methods(ids)
        rng = np.random.default_rng(52)
        m["other"][1] = EmbeddingMatrix(ids[:-1], rng.normal(size=(15, 6)))
        with pytest.raises(ContractViolationError):
            prev_next_study(m, snaps)

    def test_csv_format(self, tmp_path):
        snaps = self.snapshots()
        rows = prev_next_study(self.methods(list(range(16))), snaps, seed=11)
        path = tmp_path / "study.csv"
        write_study_csv(rows, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "snapshot,method,scenario,ratio"
        assert len(lines) == 1 + len(rows)
