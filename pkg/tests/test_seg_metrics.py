import numpy as np
import pytest

from vidprompt import (
    BinaryMask,
    ContractViolation,
    NoNegativesError,
    SegEvalResult,
    contour_accuracy_f,
    evaluate_dataset,
    evaluate_sequence,
    region_similarity_j,
    robustness_r,
)


# --- independent oracles (deliberately slow and obvious) ----------------------

def oracle_j(pred: np.ndarray, gt: np.ndarray) -> float:
    inter = union = 0
    for i in range(pred.shape[0]):
        for j in range(pred.shape[1]):
            p, g = bool(pred[i, j]), bool(gt[i, j])
            if p and g:
                inter += 1
            if p or g:
                union += 1
    return 1.0 if union == 0 else inter / union


def oracle_boundary(bits: np.ndarray) -> list[tuple[int, int]]:
    h, w = bits.shape
    out = []
    for i in range(h):
        for j in range(w):
            if not bits[i, j]:
                continue
            if i == 0 or i == h - 1 or j == 0 or j == w - 1:
                out.append((i, j))
                continue
            if not (bits[i - 1, j] and bits[i + 1, j]
                    and bits[i, j - 1] and bits[i, j + 1]):
                out.append((i, j))
    return out


def oracle_f(pred: np.ndarray, gt: np.ndarray, tol: int) -> float:
    pb = oracle_boundary(pred)
    gb = oracle_boundary(gt)
    if not pb and not gb:
        return 1.0
    if not pb or not gb:
        return 0.0

    def matched(src, dst):
        count = 0
        for (i, j) in src:
            best = min((i - a) ** 2 + (j - b) ** 2 for (a, b) in dst)
            if best <= tol * tol:
                count += 1
        return count

    precision = matched(pb, gb) / len(pb)
    recall = matched(gb, pb) / len(gb)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def random_mask_pair(seed: int, size: int = 64):
    rng = np.random.default_rng(seed)
    ys, xs = np.mgrid[0:size, 0:size]

    def blob():
        acc = np.zeros((size, size), dtype=bool)
        for _ in range(rng.integers(1, 4)):
            cx, cy = rng.uniform(8, size - 8, 2)
            r = rng.uniform(4, 14)
            acc |= (xs - cx) ** 2 + (ys - cy) ** 2 <= r * r
        return acc

    return blob(), blob()


class TestRegionSimilarity:
    def test_identical(self):
        bits = np.zeros((8, 8), dtype=bool)
        bits[2:6, 1:5] = True
        m = BinaryMask(bits)
        assert region_similarity_j(m, m) == 1.0

    def test_disjoint(self):
        a = np.zeros((8, 8), dtype=bool)
        b = np.zeros((8, 8), dtype=bool)
        a[:2] = True
        b[6:] = True
        assert region_similarity_j(BinaryMask(a), BinaryMask(b)) == 0.0

    def test_half_overlap_third(self):
        left = np.zeros((4, 4), dtype=bool)
        left[:, :2] = True
        top = np.zeros((4, 4), dtype=bool)
        top[:2, :] = True
        assert region_similarity_j(BinaryMask(left), BinaryMask(top)) == 1 / 3

    def test_both_empty_convention(self):
        e = BinaryMask(np.zeros((4, 4), dtype=bool))
        assert region_similarity_j(e, e) == 1.0

    def test_symmetry_and_oracle(self):
        for seed in range(20):
            p, g = random_mask_pair(seed, size=32)
            mp, mg = BinaryMask(p), BinaryMask(g)
            assert region_similarity_j(mp, mg) == region_similarity_j(mg, mp)
            assert region_similarity_j(mp, mg) == oracle_j(p, g)

    def test_monotone_in_correct_pixels(self):
        p, g = random_mask_pair(3, size=32)
        g |= ~p  # ensure some gt-only pixels exist
        mp = BinaryMask(p)
        j0 = region_similarity_j(mp, BinaryMask(g))
        missing = np.argwhere(g & ~p)
        i, j = missing[0]
        p2 = p.copy()
        p2[i, j] = True
        assert region_similarity_j(BinaryMask(p2), BinaryMask(g)) >= j0

    def test_dim_mismatch(self):
        with pytest.raises(ContractViolation):
            region_similarity_j(BinaryMask(np.zeros((4, 4), dtype=bool)),
                                BinaryMask(np.zeros((4, 5), dtype=bool)))


class TestContourAccuracy:
    def test_identical(self):
        p, _ = random_mask_pair(0)
        m = BinaryMask(p)
        assert contour_accuracy_f(m, m, 2) == 1.0

    def test_far_apart_zero(self):
        a = np.zeros((32, 32), dtype=bool)
        b = np.zeros((32, 32), dtype=bool)
        a[2:5, 2:5] = True
        b[25:30, 25:30] = True
        assert contour_accuracy_f(BinaryMask(a), BinaryMask(b), 2) == 0.0

    def test_shifted_square_vs_oracle(self):
        a = np.zeros((20, 20), dtype=bool)
        b = np.zeros((20, 20), dtype=bool)
        a[5:15, 5:15] = True
        b[6:16, 5:15] = True  # shifted 1 px down
        got = contour_accuracy_f(BinaryMask(a), BinaryMask(b), 2)
        want = oracle_f(a, b, 2)
        assert got == pytest.approx(want, abs=1e-12)

    def test_oracle_equivalence_random(self):
        for seed in range(25):
            p, g = random_mask_pair(seed, size=48)
            for tol in (1, 2, 3):
                got = contour_accuracy_f(BinaryMask(p), BinaryMask(g), tol)
                want = oracle_f(p, g, tol)
                assert got == pytest.approx(want, abs=1e-12), (seed, tol)

    def test_empty_conventions(self):
        e = BinaryMask(np.zeros((8, 8), dtype=bool))
        full = np.zeros((8, 8), dtype=bool)
        full[2:5, 2:5] = True
        f = BinaryMask(full)
        assert contour_accuracy_f(e, e, 2) == 1.0
        assert contour_accuracy_f(f, e, 2) == 0.0
        assert contour_accuracy_f(e, f, 2) == 0.0

    def test_translation_invariance(self):
        p, g = random_mask_pair(7, size=24)
        pad_p = np.zeros((48, 48), dtype=bool)
        pad_g = np.zeros((48, 48), dtype=bool)
        pad_p[4:28, 4:28] = p
        pad_g[4:28, 4:28] = g
        shift_p = np.zeros((48, 48), dtype=bool)
        shift_g = np.zeros((48, 48), dtype=bool)
        shift_p[14:38, 12:36] = p
        shift_g[14:38, 12:36] = g
        t = 2
        assert contour_accuracy_f(BinaryMask(pad_p), BinaryMask(pad_g), t) == \
            pytest.approx(contour_accuracy_f(BinaryMask(shift_p),
                                             BinaryMask(shift_g), t), abs=1e-12)
        assert region_similarity_j(BinaryMask(pad_p), BinaryMask(pad_g)) == \
            region_similarity_j(BinaryMask(shift_p), BinaryMask(shift_g))


class TestSequenceAndDataset:
    def test_perfect_sequence(self):
        p, _ = random_mask_pair(1)
        masks = [BinaryMask(p)] * 4
        j, f = evaluate_sequence(masks, masks, 2)
        assert (j, f) == (1.0, 1.0)

    def test_half_wrong_mean(self):
        good = np.zeros((16, 16), dtype=bool)
        good[4:10, 4:10] = True
        wrong = np.zeros((16, 16), dtype=bool)
        wrong[12:15, 12:15] = True
        gt = BinaryMask(good)
        preds = [BinaryMask(good), BinaryMask(wrong),
                 BinaryMask(good), BinaryMask(wrong)]
        j, _ = evaluate_sequence(preds, [gt] * 4, 2)
        assert j == pytest.approx(0.5)

    def test_empty_sequence_error(self):
        with pytest.raises(ContractViolation):
            evaluate_sequence([], [], 2)
        with pytest.raises(ContractViolation):
            evaluate_sequence([BinaryMask(np.zeros((4, 4), dtype=bool))], [], 2)

    def test_dataset_aggregation_and_jf(self):
        p0, g0 = random_mask_pair(10, 32)
        p1, g1 = random_mask_pair(11, 32)
        result = evaluate_dataset({
            "b": ([BinaryMask(p1)], [BinaryMask(g1)]),
            "a": ([BinaryMask(p0)], [BinaryMask(g0)]),
        }, tolerance=2)
        assert set(result.per_sequence) == {"a", "b"}
        js = [v[0] for v in result.per_sequence.values()]
        fs = [v[1] for v in result.per_sequence.values()]
        assert result.j == pytest.approx(np.mean(js))
        assert result.f == pytest.approx(np.mean(fs))
        assert result.jf == (result.j + result.f) / 2.0

    def test_seg_eval_result_invariant(self):
        r = SegEvalResult.from_per_sequence({"x": (0.25, 0.75)})
        assert r.jf == 0.5
        assert 0.0 <= r.j <= 1.0 and 0.0 <= r.f <= 1.0


class TestRobustness:
    def empty(self, n=2, size=8):
        return [BinaryMask(np.zeros((size, size), dtype=bool))] * n

    def test_silent_on_negatives_is_one(self):
        samples = [(self.empty(), self.empty(), False)] * 3
        assert robustness_r(samples) == 1.0

    def test_full_hallucination_zero(self):
        full = [BinaryMask(np.ones((8, 8), dtype=bool))] * 2
        assert robustness_r([(full, self.empty(), False)]) == 0.0

    def test_quarter_area_penalty(self):
        pred = np.zeros((8, 8), dtype=bool)
        pred[:4, :4] = True  # 25% of pixels
        samples = [([BinaryMask(pred)], self.empty(1), False)]
        assert robustness_r(samples) == 0.75

    def test_positives_ignored(self):
        pos_pred = [BinaryMask(np.ones((8, 8), dtype=bool))]
        pos_gt = [BinaryMask(np.ones((8, 8), dtype=bool))]
        samples = [(pos_pred, pos_gt, True),
                   (self.empty(1), self.empty(1), False)]
        assert robustness_r(samples) == 1.0

    def test_no_negatives_error(self):
        with pytest.raises(NoNegativesError):
            robustness_r([(self.empty(1), self.empty(1), True)])

    def test_nonempty_gt_on_negative_rejected(self):
        bad_gt = [BinaryMask(np.ones((4, 4), dtype=bool))]
        with pytest.raises(ContractViolation):
            robustness_r([(self.empty(1, 4), bad_gt, False)])
