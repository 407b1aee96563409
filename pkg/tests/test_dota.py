import numpy as np
import pytest

from obbkit import (ConfigError, Detection, OrientedBoxLE, ParseError,
                    PatchSpec, axis_origins, merge_detections, multiscale_grid,
                    parse_detection_file, parse_dota_annotations,
                    project_detection, serialize_detections, skew_iou,
                    tile_grid)
from obbkit.dota import (AnnotationFile, parse_annotation_file,
                         serialize_annotations)

from conftest import corner_set_deviation, random_box

SAMPLE = """imagesource:GoogleEarth
gsd:0.146343590398
0 0 10 0 10 4 0 4 plane 0
100 100 120 100 120 110 100 110 ship 1
"""


class TestParseAnnotations:
    def test_example_record(self):
        gts = parse_dota_annotations("0 0 10 0 10 4 0 4 plane 0")
        assert len(gts) == 1
        box = gts[0].box
        assert (box.cx, box.cy) == (5.0, 2.0)
        assert (box.w, box.h) == (4.0, 10.0)
        assert box.theta == 0.0
        assert gts[0].class_id == 0
        assert gts[0].difficulty == 0

    def test_metadata_skipped(self):
        gts = parse_dota_annotations(SAMPLE, image_id="P0001")
        assert len(gts) == 2
        assert all(g.image_id == "P0001" for g in gts)
        assert gts[1].difficulty == 1
        assert gts[1].class_id == 6  # ship

    def test_empty(self):
        assert parse_dota_annotations("") == []

    def test_malformed_token_count(self):
        with pytest.raises(ParseError) as err:
            parse_dota_annotations("1 2 3 plane")
        assert err.value.line == 1

    def test_non_numeric(self):
        with pytest.raises(ParseError):
            parse_dota_annotations("0 0 x 0 10 4 0 4 plane 0")

    def test_bad_difficulty(self):
        with pytest.raises(ParseError):
            parse_dota_annotations("0 0 10 0 10 4 0 4 plane 7")

    def test_unknown_class_strict(self):
        with pytest.raises(ParseError) as err:
            parse_dota_annotations("imagesource:x\n0 0 10 0 10 4 0 4 zeppelin 0")
        assert err.value.line == 2

    def test_unknown_class_lenient(self):
        gts = parse_dota_annotations("0 0 10 0 10 4 0 4 zeppelin 0", strict=False)
        assert gts[0].class_id == -1

    def test_degenerate_quad(self):
        with pytest.raises(ParseError):
            parse_dota_annotations("0 0 1 1 2 2 3 3 plane 0")


class TestSerializeRoundtrip:
    def test_fixed_point(self):
        ann = parse_annotation_file(SAMPLE, image_id="P0001")
        once = serialize_annotations(ann)
        twice = serialize_annotations(parse_annotation_file(once, image_id="P0001"))
        assert once == twice

    def test_random_boxes_fixed_point(self):
        rng = np.random.default_rng(27)
        from obbkit import GroundTruth
        records = []
        for _ in range(30):
            box = random_box(rng, center_range=(0, 800), dim_range=(2, 120))
            records.append(GroundTruth(box=box, class_id=int(rng.integers(0, 15)),
                                       difficulty=int(rng.integers(0, 2))))
        ann = AnnotationFile(("imagesource:test",), tuple(records))
        once = serialize_annotations(ann)
        twice = serialize_annotations(parse_annotation_file(once))
        assert once == twice

    def test_unknown_class_not_serializable(self):
        gts = parse_dota_annotations("0 0 10 0 10 4 0 4 zeppelin 0", strict=False)
        ann = AnnotationFile((), tuple(gts))
        with pytest.raises(ConfigError):
            serialize_annotations(ann)


class TestDetectionFiles:
    def test_roundtrip(self):
        box = OrientedBoxLE(50.5, 60.25, 8, 16, 0.3)
        det = Detection(box=box, class_id=0, score=0.875, image_id="P0007")
        text = serialize_detections([det])["plane"]
        parsed = parse_detection_file(text, class_id=0)
        assert len(parsed) == 1
        assert parsed[0].image_id == "P0007"
        assert parsed[0].score == 0.875
        assert corner_set_deviation(parsed[0].box, box) < 1e-5

    def test_malformed(self):
        with pytest.raises(ParseError):
            parse_detection_file("P0001 0.9 1 2 3", class_id=0)


class TestTileGrid:
    def test_exact_fit(self):
        assert axis_origins(1024, 1024, 200) == [0]

    def test_long_axis(self):
        assert axis_origins(4000, 1024, 200) == [0, 824, 1648, 2472, 2976]

    def test_clamped_final(self):
        assert axis_origins(1200, 1024, 200) == [0, 176]

    def test_smaller_than_patch(self):
        assert axis_origins(500, 1024, 200) == [0]

    def test_bad_overlap(self):
        with pytest.raises(ConfigError):
            axis_origins(4000, 1024, 1024)
        with pytest.raises(ConfigError):
            axis_origins(4000, 1024, -1)

    def test_full_grid(self):
        grid = tile_grid(4000, 1200, 1024, 200)
        assert len(grid) == 5 * 2
        assert all(isinstance(p, PatchSpec) and p.scale == 1.0 for p in grid)

    @pytest.mark.parametrize("dim", [777, 1024, 1200, 2047, 4000])
    def test_pixel_coverage(self, dim):
        origins = axis_origins(dim, 1024, 200)
        covered = np.zeros(dim, dtype=bool)
        for o in origins:
            covered[o:o + 1024] = True
        assert covered.all()

    def test_consecutive_overlap(self):
        for dim in (3000, 4000, 5210):
            origins = axis_origins(dim, 1024, 200)
            for a, b in zip(origins, origins[1:-1]):
                assert a + 1024 - b >= 200


class TestMultiscaleGrid:
    def test_reduces_to_tile_grid(self):
        ms = multiscale_grid(4000, 1200, [1.0], 1024, 824)
        flat = tile_grid(4000, 1200, 1024, 200)
        assert [(p.origin_x, p.origin_y) for p in ms] == \
            [(p.origin_x, p.origin_y) for p in flat]

    def test_half_scale_single_patch(self):
        specs = multiscale_grid(2048, 2048, [0.5], 1024, 512)
        assert len(specs) == 1
        assert (specs[0].origin_x, specs[0].origin_y, specs[0].scale) == (0, 0, 0.5)

    def test_patch_counts_per_scale(self):
        specs = multiscale_grid(2048, 2048, [0.5, 1.0, 1.5], 1024, 512)
        counts = {}
        for s in specs:
            counts[s.scale] = counts.get(s.scale, 0) + 1
        assert counts == {0.5: 1, 1.0: 9, 1.5: 25}

    def test_bad_scale(self):
        with pytest.raises(ConfigError):
            multiscale_grid(2048, 2048, [0.0], 1024, 512)


class TestProjectDetection:
    def test_identity(self):
        det = Detection(box=OrientedBoxLE(100, 50, 10, 20, 0.4), class_id=0,
                        score=0.5, image_id="patch")
        out = project_detection(det, PatchSpec(0, 0, 1024, 1.0))
        assert out.box == det.box

    def test_translation(self):
        det = Detection(box=OrientedBoxLE(100, 50, 10, 20, 0.4), class_id=0,
                        score=0.5, image_id="patch")
        out = project_detection(det, PatchSpec(824, 0, 1024, 1.0), image_id="orig")
        assert (out.box.cx, out.box.cy) == (924, 50)
        assert out.image_id == "orig"

    def test_rescale(self):
        det = Detection(box=OrientedBoxLE(100, 50, 10, 20, 0.4), class_id=0,
                        score=0.5, image_id="patch")
        out = project_detection(det, PatchSpec(0, 0, 1024, 0.5))
        box = out.box
        assert (box.cx, box.cy, box.w, box.h) == (200, 100, 20, 40)
        assert box.theta == 0.4

    def test_preserves_iou(self):
        rng = np.random.default_rng(28)
        spec = PatchSpec(824, 512, 1024, 0.5)
        for _ in range(100):
            a = random_box(rng, center_range=(0, 500), dim_range=(1, 100))
            b = random_box(rng, center_range=(0, 500), dim_range=(1, 100))
            da = Detection(box=a, class_id=0, score=0.5, image_id="p")
            db = Detection(box=b, class_id=0, score=0.5, image_id="p")
            before = skew_iou(a, b)
            after = skew_iou(project_detection(da, spec).box,
                             project_detection(db, spec).box)
            assert abs(before - after) < 1e-9


class TestMergeDetections:
    def _det(self, box, score, image_id="img", class_id=0):
        return Detection(box=box, class_id=class_id, score=score,
                         image_id=image_id)

    def test_single_list(self):
        box = OrientedBoxLE(10, 10, 4, 8, 0.1)
        merged = merge_detections([[self._det(box, 0.9)]])
        assert len(merged) == 1

    def test_cross_patch_duplicate(self):
        box = OrientedBoxLE(900, 100, 10, 30, 0.2)
        merged = merge_detections([[self._det(box, 0.9)],
                                   [self._det(box, 0.85)]], nms_iou_thresh=0.1)
        assert len(merged) == 1
        assert merged[0].score == 0.9

    def test_distinct_objects_survive(self):
        a = OrientedBoxLE(100, 100, 10, 30, 0.2)
        b = OrientedBoxLE(900, 900, 10, 30, -0.7)
        merged = merge_detections([[self._det(a, 0.9)], [self._det(b, 0.8)]],
                                  nms_iou_thresh=0.1)
        assert len(merged) == 2

    def test_images_kept_separate(self):
        box = OrientedBoxLE(100, 100, 10, 30, 0.2)
        merged = merge_detections([[self._det(box, 0.9, image_id="a")],
                                   [self._det(box, 0.8, image_id="b")]])
        assert len(merged) == 2
