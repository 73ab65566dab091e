import numpy as np
import pytest

from rafen.embeddings import EmbeddingMatrix
from rafen.errors import ContractViolationError
from rafen.procrustes import OrthogonalMap, align_posthoc, orthogonal_procrustes


def random_orthogonal(rng, d, reflection=False):
    q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    if reflection != (np.linalg.det(q) < 0):
        q[:, 0] = -q[:, 0]
    return q


class TestProcrustes:
    @pytest.mark.parametrize("reflection", [False, True])
    def test_recovers_planted_rotation(self, reflection):
        rng = np.random.default_rng(7)
        source = rng.normal(size=(20, 6))
        r_true = random_orthogonal(rng, 6, reflection)
        target = source @ r_true
        omap = orthogonal_procrustes(source, target)
        assert np.allclose(omap.matrix, r_true, atol=1e-10)
        assert np.linalg.norm(omap.apply(source) - target) < 1e-10

    def test_one_dim_sign_flip(self):
        omap = orthogonal_procrustes(np.array([[1.0], [2.0]]), np.array([[-1.0], [-2.0]]))
        assert omap.matrix.shape == (1, 1)
        assert omap.matrix[0, 0] == -1.0

    def test_optimal_among_rotations_2d(self):
        # grid-search oracle: no 2-D rotation/reflection beats the SVD solution
        rng = np.random.default_rng(8)
        source = rng.normal(size=(15, 2))
        target = rng.normal(size=(15, 2))
        omap = orthogonal_procrustes(source, target)
        best = float(((source @ omap.matrix - target) ** 2).sum())
        for theta in np.linspace(0.0, 2 * np.pi, 720, endpoint=False):
            c, s = np.cos(theta), np.sin(theta)
            for q in (np.array([[c, -s], [s, c]]), np.array([[c, s], [s, -c]])):
                err = float(((source @ q - target) ** 2).sum())
                assert best <= err + 1e-9

    def test_never_increases_residual(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            source = rng.normal(size=(10, 4))
            target = rng.normal(size=(10, 4))
            omap = orthogonal_procrustes(source, target)
            before = np.linalg.norm(source - target)
            after = np.linalg.norm(omap.apply(source) - target)
            assert after <= before + 1e-12

    def test_identity_when_already_aligned(self):
        rng = np.random.default_rng(11)
        m = rng.normal(size=(8, 4))
        omap = orthogonal_procrustes(m, m)
        assert np.allclose(omap.matrix, np.eye(4), atol=1e-10)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ContractViolationError):
            orthogonal_procrustes(np.zeros((2, 3)), np.zeros((2, 4)))

    def test_nonfinite_rejected(self):
        a = np.array([[1.0, np.nan], [0.0, 1.0]])
        with pytest.raises(ContractViolationError):
            orthogonal_procrustes(a, np.eye(2))

    def test_rank_deficient_still_orthogonal(self):
        source = np.ones((6, 3))
        target = np.ones((6, 3)) * 2.0
        omap = orthogonal_procrustes(source, target)
        assert np.allclose(omap.matrix.T @ omap.matrix, np.eye(3), atol=1e-8)


class TestAlignPosthoc:
    def test_norms_preserved(self):
        rng = np.random.default_rng(12)
        ids = list(range(12))
        cur = EmbeddingMatrix(ids, rng.normal(size=(12, 5)))
        anchor = EmbeddingMatrix(ids, rng.normal(size=(12, 5)))
        aligned, _ = align_posthoc(cur, anchor, ids)
        assert np.allclose(
            np.linalg.norm(aligned.vectors, axis=1),
            np.linalg.norm(cur.vectors, axis=1),
        )

    def test_applies_single_map_to_all_rows(self):
        rng = np.random.default_rng(13)
        ids = list(range(10))
        cur = EmbeddingMatrix(ids, rng.normal(size=(10, 3)))
        anchor = EmbeddingMatrix(ids, rng.normal(size=(10, 3)))
        aligned, omap = align_posthoc(cur, anchor, [0, 1, 2, 3, 4])
        assert aligned.ids.tolist() == ids
        for v in ids:  # rows outside the fit subset get the same rotation
            assert np.allclose(aligned.row(v), cur.row(v) @ omap.matrix)

    def test_recovers_anchor_from_rotated_copy(self):
        rng = np.random.default_rng(14)
        ids = list(range(25))
        anchor = EmbeddingMatrix(ids, rng.normal(size=(25, 6)))
        r = random_orthogonal(rng, 6)
        cur = EmbeddingMatrix(ids, anchor.vectors @ r)
        aligned, _ = align_posthoc(cur, anchor, ids)
        assert np.allclose(aligned.vectors, anchor.vectors, atol=1e-8)

    def test_idempotent(self):
        rng = np.random.default_rng(15)
        ids = list(range(9))
        cur = EmbeddingMatrix(ids, rng.normal(size=(9, 4)))
        anchor = EmbeddingMatrix(ids, rng.normal(size=(9, 4)))
        once, _ = align_posthoc(cur, anchor, ids)
        _, omap2 = align_posthoc(once, anchor, ids)
        assert np.linalg.norm(omap2.matrix - np.eye(4)) < 1e-6

    def test_input_untouched(self):
        rng = np.random.default_rng(16)
        ids = [0, 1, 2]
        vecs = rng.normal(size=(3, 2))
        cur = EmbeddingMatrix(ids, vecs.copy())
        anchor = EmbeddingMatrix(ids, rng.normal(size=(3, 2)))
        align_posthoc(cur, anchor, ids)
        assert np.array_equal(cur.vectors, vecs)

    def test_empty_subset_rejected(self):
        m = EmbeddingMatrix([0], np.ones((1, 2)))
        with pytest.raises(ContractViolationError):
            align_posthoc(m, m, [])

    def test_dim_mismatch_rejected(self):
        a = EmbeddingMatrix([0, 1], np.zeros((2, 3)))
        b = EmbeddingMatrix([0, 1], np.zeros((2, 4)))
        with pytest.raises(ContractViolationError):
            align_posthoc(a, b, [0, 1])


class TestOrthogonalMap:
    def test_validation(self):
        with pytest.raises(ValueError):
            OrthogonalMap(np.array([[1.0, 0.5], [0.0, 1.0]]))  # not orthogonal
        with pytest.raises(ValueError):
            OrthogonalMap(np.ones((2, 3)))  # not square

    def test_csv_round_trip(self, tmp_path):
        rng = np.random.default_rng(17)
        omap = OrthogonalMap(random_orthogonal(rng, 4))
        path = tmp_path / "map.csv"
        omap.to_csv(path)
        back = OrthogonalMap.from_csv(path)
        assert np.array_equal(back.matrix, omap.matrix)
