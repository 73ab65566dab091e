import numpy as np
import pytest

from rafen.aggregation import (
    AggregationSpec,
    aggregate,
    fildne_unrolled_weights,
)
from rafen.embeddings import EmbeddingMatrix
from rafen.errors import ContractViolationError


def mat(rows):
    ids = sorted(rows)
    return EmbeddingMatrix(ids, np.array([rows[i] for i in ids], dtype=float))


class TestMeanLast:
    def test_mean_oracle(self):
        a = mat({0: [0.0, 2.0], 1: [4.0, 4.0]})
        b = mat({0: [2.0, 4.0], 2: [6.0, 0.0]})
        out = aggregate([a, b], AggregationSpec("mean"))
        assert out.ids.tolist() == [0, 1, 2]
        assert out.row(0) == pytest.approx([1.0, 3.0])
        assert out.row(1) == pytest.approx([4.0, 4.0])  # single occurrence
        assert out.row(2) == pytest.approx([6.0, 0.0])

    def test_last_oracle(self):
        a = mat({0: [1.0], 1: [2.0]})
        b = mat({0: [9.0], 2: [3.0]})
        out = aggregate([a, b], AggregationSpec("last"))
        assert out.row(0) == pytest.approx([9.0])
        assert out.row(1) == pytest.approx([2.0])  # survives from the older snapshot
        assert out.row(2) == pytest.approx([3.0])

    def test_union_coverage(self):
        rng = np.random.default_rng(20)
        mats = [
            mat({int(i): rng.normal(size=2) for i in rng.choice(30, size=10, replace=False)})
            for _ in range(4)
        ]
        union = sorted({int(i) for m in mats for i in m.ids})
        for method in ("mean", "last", "fildne"):
            out = aggregate(mats, AggregationSpec(method))
            assert out.ids.tolist() == union


class TestFildne:
    def test_three_snapshot_oracle(self):
        # alpha = 0.5: ((0 * .5 + 4 * .5) * .5 + 8 * .5) = 5
        e = [mat({0: [0.0]}), mat({0: [4.0]}), mat({0: [8.0]})]
        out = aggregate(e, AggregationSpec("fildne", fildne_alpha=0.5))
        assert out.row(0)[0] == pytest.approx(5.0)

    def test_alpha_one_is_last_shared_exact(self):
        rng = np.random.default_rng(21)
        e = [mat({0: rng.normal(size=3), 1: rng.normal(size=3)}) for _ in range(3)]
        out = aggregate(e, AggregationSpec("fildne", fildne_alpha=1.0))
        # 0 * C + 1 * F is exact in floating point
        assert np.array_equal(out.row(0), e[-1].row(0))
        assert np.array_equal(out.row(1), e[-1].row(1))

    def test_alpha_zero_is_first_shared_exact(self):
        rng = np.random.default_rng(22)
        e = [mat({0: rng.normal(size=3)}) for _ in range(3)]
        out = aggregate(e, AggregationSpec("fildne", fildne_alpha=0.0))
        assert np.array_equal(out.row(0), e[0].row(0))

    def test_missing_node_takes_other_operand_verbatim(self):
        e = [mat({0: [1.0], 1: [5.0]}), mat({0: [3.0]}), mat({0: [7.0], 2: [9.0]})]
        out = aggregate(e, AggregationSpec("fildne", fildne_alpha=0.25))
        # node 1 only in snapshot 0: carried through untouched
        assert out.row(1)[0] == 5.0
        # node 2 appears last: adopted verbatim
        assert out.row(2)[0] == 9.0
        # node 0 blends twice: ((1*.75 + 3*.25)*.75 + 7*.25)
        assert out.row(0)[0] == pytest.approx((1 * 0.75 + 3 * 0.25) * 0.75 + 7 * 0.25)

    def test_unrolled_weights_match_recursion(self):
        rng = np.random.default_rng(23)
        alphas = [float(a) for a in rng.random(4)]
        values = rng.normal(size=5)
        w = fildne_unrolled_weights(alphas)
        assert w.sum() == pytest.approx(1.0)
        state = values[0]
        for v, a in zip(values[1:], alphas):
            state = (1 - a) * state + a * v
        assert float(w @ values) == pytest.approx(state)

    def test_unrolled_weights_constant_alpha_oracle(self):
        # alpha = 0.5 over 3 snapshots: weights (1/4, 1/4, 1/2)
        assert fildne_unrolled_weights([0.5, 0.5]) == pytest.approx([0.25, 0.25, 0.5])

    def test_single_matrix_passthrough(self):
        e = [mat({0: [1.0], 1: [2.0]})]
        out = aggregate(e, AggregationSpec("fildne"))
        assert np.array_equal(out.vectors, e[0].vectors)

    def test_permutation_of_ids_consistent(self):
        # same rows delivered under different id orderings agree per node
        rng = np.random.default_rng(24)
        rows0 = {i: rng.normal(size=2) for i in range(6)}
        rows1 = {i: rng.normal(size=2) for i in range(6)}
        out = aggregate([mat(rows0), mat(rows1)], AggregationSpec("fildne", 0.3))
        for i in range(6):
            assert out.row(i) == pytest.approx(0.7 * rows0[i] + 0.3 * rows1[i])


def val_edges_for(ids):
    """Tiny validation set over ``ids``: half positives, half negatives."""
    pairs = np.array([[ids[0], ids[1]], [ids[1], ids[2]], [ids[0], ids[2]], [ids[0], ids[3]]])
    labels = np.array([1, 1, 0, 0])
    return pairs, labels


class TestKfildne:
    def test_constant_embeddings_match_half_blend_bitwise(self):
        # every node shares one row per snapshot, so features are constant,
        # both AUCs are exactly chance, and each rate is eps/(eps+eps) = 0.5
        e = [mat({i: [1.0 + t, 2.0 - t] for i in range(5)}) for t in range(3)]
        pairs, labels = val_edges_for(list(range(5)))
        got = aggregate(e, AggregationSpec("kfildne"), val_edges=(pairs, labels))
        want = aggregate(e, AggregationSpec("fildne", fildne_alpha=0.5))
        assert got.ids.tolist() == want.ids.tolist()
        assert np.array_equal(got.vectors, want.vectors)

    def test_informative_matrix_gets_heavier_weight(self):
        rng = np.random.default_rng(25)
        ids = list(range(20))
        pos = [(i, i + 1) for i in range(0, 18, 2)]
        neg = [(i, 19 - i) for i in range(5)]
        pairs = np.array(pos + neg)
        labels = np.array([1] * len(pos) + [0] * len(neg))
        noise = mat({i: [float(rng.normal())] for i in ids})
        # same-sign halves: every positive pair multiplies to +1, every
        # negative pair straddles the halves and multiplies to -1
        informative = mat({i: [1.0 if i < 10 else -1.0] for i in ids})
        out = aggregate(
            [noise, informative], AggregationSpec("kfildne"), val_edges=(pairs, labels)
        )
        # reconstruct the rate from the output: out = (1-a) noise + a informative
        a = (out.row(0)[0] - noise.row(0)[0]) / (informative.row(0)[0] - noise.row(0)[0])
        assert a > 0.5

    def test_missing_endpoint_pairs_skipped(self):
        e = [mat({0: [1.0], 1: [2.0]}), mat({0: [3.0], 1: [4.0]})]
        pairs = np.array([[0, 1], [0, 99], [1, 99]])  # 99 absent everywhere
        labels = np.array([1, 0, 0])
        out = aggregate(e, AggregationSpec("kfildne"), val_edges=(pairs, labels))
        # only one usable pair -> single class -> chance on both -> rate 0.5
        assert out.row(0)[0] == pytest.approx(2.0)

    def test_requires_val_edges(self):
        e = [mat({0: [1.0]}), mat({0: [2.0]})]
        with pytest.raises(ContractViolationError):
            aggregate(e, AggregationSpec("kfildne"))


class TestValidation:
    def test_empty_list_rejected(self):
        with pytest.raises(ContractViolationError):
            aggregate([], AggregationSpec("mean"))

    def test_mixed_dims_rejected(self):
        a = EmbeddingMatrix([0], np.zeros((1, 2)))
        b = EmbeddingMatrix([0], np.zeros((1, 3)))
        with pytest.raises(ContractViolationError):
            aggregate([a, b], AggregationSpec("mean"))

    def test_bad_method_rejected(self):
        with pytest.raises(ContractViolationError):
            AggregationSpec("median")

    def test_bad_alpha_rejected(self):
        with pytest.raises(ContractViolationError):
            AggregationSpec("fildne", fildne_alpha=1.5)
