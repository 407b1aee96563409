import math

import numpy as np
import pytest

from obbkit import (ConfigError, Detection, DomainError, GroundTruth,
                    OrientedBoxLE, average_precision, make_pr_curve, map_at,
                    match_detections)

BOX = OrientedBoxLE(50, 50, 10, 20, 0.0)
FAR_BOX = OrientedBoxLE(500, 500, 10, 20, 0.0)
NEAR_BOX = OrientedBoxLE(52, 50, 10, 20, 0.0)      # IoU 0.6 with BOX
NESTED_72 = OrientedBoxLE(50, 50, 8, 18, 0.0)      # IoU 0.72 with BOX


def det(box, score, class_id=0, image_id="img"):
    return Detection(box=box, class_id=class_id, score=score, image_id=image_id)


def gt(box, class_id=0, difficulty=0, image_id="img"):
    return GroundTruth(box=box, class_id=class_id, difficulty=difficulty,
                       image_id=image_id)


class TestRecords:
    def test_score_range(self):
        with pytest.raises(DomainError):
            det(BOX, 1.5)
        with pytest.raises(DomainError):
            det(BOX, math.nan)

    def test_difficulty_values(self):
        with pytest.raises(DomainError):
            gt(BOX, difficulty=2)

    def test_class_id(self):
        with pytest.raises(DomainError):
            det(BOX, 0.5, class_id=-1)


class TestMatchDetections:
    def test_single_tp(self):
        results, n_gt = match_detections([det(BOX, 0.9)], [gt(BOX)], 0.5)
        assert [flag for _, _, flag in results] == [True]
        assert n_gt == 1

    def test_greedy_by_score(self):
        dets = [det(FAR_BOX, 0.9), det(BOX, 0.8)]
        results, n_gt = match_detections(dets, [gt(BOX)], 0.5)
        assert [flag for _, _, flag in results] == [False, True]
        assert n_gt == 1

    def test_ignored_gt_discards_detection(self):
        results, n_gt = match_detections([det(BOX, 0.9)],
                                         [gt(BOX, difficulty=1)], 0.5)
        assert results == []
        assert n_gt == 0

    def test_gt_matched_once(self):
        dets = [det(BOX, 0.9), det(BOX, 0.8)]
        results, _ = match_detections(dets, [gt(BOX)], 0.5)
        assert [flag for _, _, flag in results] == [True, False]

    def test_prefers_higher_overlap_gt(self):
        dets = [det(BOX, 0.9)]
        gts = [gt(NEAR_BOX), gt(BOX)]
        results, _ = match_detections(dets, gts, 0.5)
        assert [flag for _, _, flag in results] == [True]
        # second detection on the lower-overlap gt still matches it
        dets = [det(BOX, 0.9), det(NEAR_BOX, 0.8)]
        results, _ = match_detections(dets, gts, 0.5)
        assert [flag for _, _, flag in results] == [True, True]


class TestAveragePrecision:
    def test_single_perfect(self):
        pr = make_pr_curve([True], 1)
        assert average_precision(pr, "voc07") == 1.0
        assert average_precision(pr, "coco101") == 1.0

    def test_fp_then_tp(self):
        pr = make_pr_curve([False, True], 1)
        assert average_precision(pr, "voc07") == 0.5
        assert average_precision(pr, "coco101") == 0.5

    def test_half_recall(self):
        pr = make_pr_curve([True], 2)
        assert abs(average_precision(pr, "voc07") - 6 / 11) < 1e-12

    def test_no_gt_undefined(self):
        pr = make_pr_curve([False, False], 0)
        assert average_precision(pr, "voc07") is None

    def test_unknown_protocol(self):
        with pytest.raises(ConfigError):
            average_precision(make_pr_curve([True], 1), "voc12")

    def test_appending_weak_fp_never_raises_ap(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            n_gt = int(rng.integers(1, 6))
            flags = list(rng.random(size=rng.integers(1, 10)) < 0.5)
            base = make_pr_curve(flags, n_gt)
            worse = make_pr_curve(flags + [False], n_gt)
            for protocol in ("voc07", "coco101"):
                assert (average_precision(worse, protocol)
                        <= average_precision(base, protocol) + 1e-15)

    def test_appending_weak_tp_never_lowers_ap(self):
        rng = np.random.default_rng(24)
        for _ in range(200):
            flags = list(rng.random(size=rng.integers(1, 10)) < 0.5)
            n_gt = int(sum(flags)) + int(rng.integers(1, 4))
            base = make_pr_curve(flags, n_gt)
            better = make_pr_curve(flags + [True], n_gt)
            for protocol in ("voc07", "coco101"):
                assert (average_precision(better, protocol)
                        >= average_precision(base, protocol) - 1e-15)

    def test_protocols_agree_on_constant_precision_full_recall(self):
        # interpolated precision constant over the whole recall axis
        cases = [([True], 1), ([True, True, True], 3), ([False, True], 1),
                 ([False, False, True], 1)]
        for flags, n_gt in cases:
            pr = make_pr_curve(flags, n_gt)
            v = average_precision(pr, "voc07")
            c = average_precision(pr, "coco101")
            assert v == c


class TestMapAt:
    def test_perfect_single(self):
        report = map_at([det(BOX, 0.9)], [gt(BOX)],
                        [round(0.5 + 0.05 * i, 2) for i in range(10)],
                        protocol="coco101")
        assert report.map50 == 1.0
        assert report.map75 == 1.0
        assert report.map_mean == 1.0

    def test_iou_072_threshold_split(self):
        thresholds = [round(0.5 + 0.05 * i, 2) for i in range(10)]
        report = map_at([det(NESTED_72, 0.9)], [gt(BOX)], thresholds,
                        protocol="coco101")
        assert report.map50 == 1.0
        assert report.map75 == 0.0
        assert report.map_mean == 0.5

    def test_two_classes_mean(self):
        dets = [det(BOX, 0.9, class_id=0), det(FAR_BOX, 0.8, class_id=1)]
        gts = [gt(BOX, class_id=0),
               gt(OrientedBoxLE(50, 50, 8, 18, 0.0), class_id=1, image_id="other")]
        report = map_at(dets, gts, [0.5])
        assert report.map50 == 0.5

    def test_zero_gt_class_excluded(self):
        dets = [det(BOX, 0.9, class_id=0), det(BOX, 0.5, class_id=1)]
        gts = [gt(BOX, class_id=0)]
        report = map_at(dets, gts, [0.5])
        assert report.map50 == 1.0
        assert 1 not in report.per_class

    def test_no_gts_errors(self):
        with pytest.raises(ConfigError):
            map_at([det(BOX, 0.9)], [], [0.5])

    def test_single_threshold_equals_class_mean(self):
        rng = np.random.default_rng(25)
        dets, gts = [], []
        for class_id in range(3):
            for i in range(4):
                cx = 40.0 * i + 20.0
                box = OrientedBoxLE(cx, 30.0 * class_id + 15.0, 8, 16, 0.2)
                gts.append(gt(box, class_id=class_id))
                if rng.random() < 0.7:
                    dets.append(det(box, float(rng.uniform(0.1, 1.0)),
                                    class_id=class_id))
                else:
                    miss = OrientedBoxLE(cx + 500, 800, 8, 16, 0.2)
                    dets.append(det(miss, float(rng.uniform(0.1, 1.0)),
                                    class_id=class_id))
        report = map_at(dets, gts, [0.5])
        aps = [report.per_class[c][0.5] for c in range(3)]
        assert abs(report.map50 - sum(aps) / 3) < 1e-12

    def test_permutation_invariance_distinct_scores(self):
        rng = np.random.default_rng(26)
        boxes = [OrientedBoxLE(40.0 * i + 20.0, 20.0, 8, 16, 0.1) for i in range(5)]
        gts = [gt(b) for b in boxes[:4]]
        dets = [det(b, s) for b, s in zip(boxes, (0.9, 0.7, 0.5, 0.3, 0.2))]
        base = map_at(dets, gts, [0.5]).map50
        for _ in range(5):
            perm = list(rng.permutation(len(dets)))
            shuffled = [dets[i] for i in perm]
            assert map_at(shuffled, gts, [0.5]).map50 == base
