"""DOTA-style annotation and submission file handling, patch-grid
arithmetic for tiling large images, and cross-patch detection merging.

Only geometry is handled here: the grid manifest is meant to drive an
external cropper, and detections are projected back by coordinates alone.
"""

import math
from dataclasses import dataclass

from .boxes import OrientedBoxLE, corners_to_le, le_to_corners
from .errors import ConfigError, DomainError, ParseError
from .evaluation import Detection, GroundTruth
from .geometry import rotated_nms

DOTA_CLASSES = (
    "plane", "baseball-diamond", "bridge", "ground-track-field",
    "small-vehicle", "large-vehicle", "ship", "tennis-court",
    "basketball-court", "storage-tank", "soccer-ball-field", "roundabout",
    "harbor", "swimming-pool", "helicopter",
)

# class_id assigned to unknown names in non-strict parse mode
UNKNOWN_CLASS_ID = -1

_METADATA_PREFIXES = ("imagesource:", "gsd:")


@dataclass(frozen=True)
class PatchSpec:
    """One tile of a (possibly rescaled) image."""

    origin_x: int
    origin_y: int
    patch_size: int
    scale: float = 1.0

    def __post_init__(self):
        if self.origin_x < 0 or self.origin_y < 0:
            raise ConfigError("patch origin must be non-negative")
        if self.patch_size <= 0:
            raise ConfigError("patch_size must be positive")
        if not (self.scale > 0.0) or not math.isfinite(self.scale):
            raise ConfigError(f"scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class AnnotationFile:
    """Metadata header lines plus the parsed ground-truth records.

    ``quads`` carries the source corner quadruple per record when the file
    was parsed from text; serialization re-emits those verbatim so a
    parse/serialize cycle is byte-stable (refitting corners from the box
    would shift coordinates across rounding boundaries).
    """

    metadata: tuple
    records: tuple
    quads: tuple | None = None


def _parse_corner_record(tokens, lineno):
    if len(tokens) != 10:
        raise ParseError(f"expected 10 tokens (8 coords, class, difficulty), "
                         f"got {len(tokens)}", line=lineno)
    try:
        coords = [float(t) for t in tokens[:8]]
    except ValueError as exc:
        raise ParseError(f"non-numeric coordinate: {exc}", line=lineno) from None
    if not all(math.isfinite(c) for c in coords):
        raise ParseError("coordinates must be finite", line=lineno)
    try:
        difficulty = int(tokens[9])
    except ValueError:
        raise ParseError(f"bad difficulty {tokens[9]!r}", line=lineno) from None
    if difficulty not in (0, 1):
        raise ParseError(f"difficulty must be 0 or 1, got {difficulty}", line=lineno)
    quad = list(zip(coords[0::2], coords[1::2]))
    return quad, tokens[8], difficulty


def parse_annotation_file(text: str, image_id: str = "", strict: bool = True,
                          class_names=DOTA_CLASSES) -> AnnotationFile:
    """Parse a DOTA annotation file: optional imagesource/gsd header lines,
    then one record per line: "x1 y1 x2 y2 x3 y3 x4 y4 class difficulty".
    """
    name_to_id = {name: i for i, name in enumerate(class_names)}
    metadata = []
    records = []
    quads = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if any(line.lower().startswith(p) for p in _METADATA_PREFIXES):
            metadata.append(line)
            continue
        quad, class_name, difficulty = _parse_corner_record(line.split(), lineno)
        if class_name in name_to_id:
            class_id = name_to_id[class_name]
        elif strict:
            raise ParseError(f"unknown class {class_name!r}", line=lineno)
        else:
            class_id = UNKNOWN_CLASS_ID
        try:
            box = corners_to_le(quad)
        except (DomainError, ValueError) as exc:
            raise ParseError(str(exc), line=lineno) from None
        records.append(GroundTruth(box=box, class_id=class_id,
                                   difficulty=difficulty, image_id=image_id))
        quads.append(tuple(quad))
    return AnnotationFile(tuple(metadata), tuple(records), tuple(quads))


def parse_dota_annotations(text: str, image_id: str = "", strict: bool = True,
                           class_names=DOTA_CLASSES) -> list:
    """Ground-truth records of an annotation file (header lines skipped)."""
    return list(parse_annotation_file(text, image_id, strict, class_names).records)


def _format_corners(box: OrientedBoxLE) -> str:
    corners = le_to_corners(box).vertices
    return " ".join(f"{c:.6f}" for xy in corners for c in xy)


def serialize_annotations(ann: AnnotationFile, class_names=DOTA_CLASSES) -> str:
    """Render an AnnotationFile back to text (6-decimal coordinates);
    records parsed from text keep their source corners verbatim.
    """
    lines = list(ann.metadata)
    for i, gt in enumerate(ann.records):
        if gt.class_id == UNKNOWN_CLASS_ID:
            raise ConfigError("cannot serialize a record with the unknown-class id")
        name = class_names[gt.class_id]
        if ann.quads is not None:
            corners = " ".join(f"{c:.6f}" for xy in ann.quads[i] for c in xy)
        else:
            corners = _format_corners(gt.box)
        lines.append(f"{corners} {name} {gt.difficulty}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_detection_file(text: str, class_id: int) -> list:
    """Parse one per-class submission file: lines of
    "image_id score x1 y1 x2 y2 x3 y3 x4 y4".
    """
    dets = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 10:
            raise ParseError(f"expected 10 tokens (image, score, 8 coords), "
                             f"got {len(tokens)}", line=lineno)
        try:
            score = float(tokens[1])
            coords = [float(t) for t in tokens[2:]]
        except ValueError as exc:
            raise ParseError(f"non-numeric value: {exc}", line=lineno) from None
        quad = list(zip(coords[0::2], coords[1::2]))
        try:
            box = corners_to_le(quad)
            det = Detection(box=box, class_id=class_id, score=score,
                            image_id=tokens[0])
        except (DomainError, ValueError) as exc:
            raise ParseError(str(exc), line=lineno) from None
        dets.append(det)
    return dets


def serialize_detections(dets, class_names=DOTA_CLASSES) -> dict:
    """Group detections into per-class submission texts keyed by class name."""
    by_class = {}
    for det in dets:
        by_class.setdefault(det.class_id, []).append(det)
    out = {}
    for class_id, items in sorted(by_class.items()):
        name = class_names[class_id]
        lines = [f"{d.image_id} {d.score:.6f} {_format_corners(d.box)}"
                 for d in items]
        out[name] = "\n".join(lines) + "\n"
    return out


def axis_origins(dim: int, patch_size: int, overlap: int) -> list:
    """Tile origins along one axis: stride patch_size - overlap, plus a
    final origin clamped to dim - patch_size so edge content is covered.
    """
    if overlap < 0 or overlap >= patch_size:
        raise ConfigError(f"need 0 <= overlap < patch_size, got overlap={overlap}, "
                          f"patch_size={patch_size}")
    if dim <= 0:
        raise ConfigError(f"image dimension must be positive, got {dim}")
    stride = patch_size - overlap
    origins = []
    k = 0
    while k * stride + patch_size < dim:
        origins.append(k * stride)
        k += 1
    last = max(0, dim - patch_size)
    if not origins or origins[-1] != last:
        origins.append(last)
    return origins


def tile_grid(width: int, height: int, patch_size: int, overlap: int) -> list:
    """All patches covering a width x height image at unit scale."""
    xs = axis_origins(width, patch_size, overlap)
    ys = axis_origins(height, patch_size, overlap)
    return [PatchSpec(x, y, patch_size) for y in ys for x in xs]


def multiscale_grid(width: int, height: int, scales, patch_size: int,
                    stride: int) -> list:
    """Patches over each rescaled copy of the image; origins live in the
    rescaled frame and each PatchSpec carries its scale.
    """
    specs = []
    for scale in scales:
        if not (scale > 0.0) or not math.isfinite(scale):
            raise ConfigError(f"scale must be positive, got {scale}")
        sw = int(round(width * scale))
        sh = int(round(height * scale))
        overlap = patch_size - stride
        xs = axis_origins(sw, patch_size, overlap)
        ys = axis_origins(sh, patch_size, overlap)
        specs.extend(PatchSpec(x, y, patch_size, scale) for y in ys for x in xs)
    return specs


def project_detection(det: Detection, spec: PatchSpec,
                      image_id: str | None = None) -> Detection:
    """Map a patch-frame detection back to the original image frame:
    translate by the patch origin, then undo the resize.
    """
    box = det.box
    projected = OrientedBoxLE(
        cx=(box.cx + spec.origin_x) / spec.scale,
        cy=(box.cy + spec.origin_y) / spec.scale,
        w=box.w / spec.scale,
        h=box.h / spec.scale,
        theta=box.theta,
    )
    return Detection(box=projected, class_id=det.class_id, score=det.score,
                     image_id=det.image_id if image_id is None else image_id)


def merge_detections(det_lists, nms_iou_thresh: float = 0.1,
                     class_aware: bool = True) -> list:
    """Concatenate per-patch detections (already in the original frame) and
    suppress cross-patch duplicates per image with rotated NMS.
    """
    pooled = [d for dets in det_lists for d in dets]
    by_image = {}
    for i, det in enumerate(pooled):
        by_image.setdefault(det.image_id, []).append((i, det))
    merged = []
    for image_id in sorted(by_image):
        items = by_image[image_id]
        dets = [d for _, d in items]
        kept = rotated_nms(dets, nms_iou_thresh, class_aware=class_aware)
        merged.extend(dets[k] for k in kept)
    return merged
