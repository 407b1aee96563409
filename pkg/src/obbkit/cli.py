"""Command-line surface for the toolkit.

Subcommands emit deterministic CSV/JSON so runs are scriptable and
byte-reproducible: loss-curve (loss/gradient samples), simulate (one
gradient-descent trajectory), report (grid of trajectories), eval
(detection metrics), tile (patch-grid manifest), merge (cross-patch NMS
into submission files), and batch (JSON request/response wrapper over the
array kernels, the endpoint foreign bindings talk to).

Angles cross this boundary in degrees; everything internal is radians.
A ``--config FILE`` of key=value lines supplies defaults that explicit
flags override.
"""

import argparse
import json
import math
import os
import sys

from . import batch as batch_mod
from . import dota, evaluation, fitting, losses
from .errors import ObbkitError, ParseError

SCHEMA_VERSION = "1"

_PROG = "obbkit"


class UsageError(Exception):
    pass


def _json_dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write_text(path: str, text: str):
    if path == "-":
        sys.stdout.write(text)
    else:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _parse_float_list(text: str) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise UsageError(f"bad numeric list {text!r}") from None


def _parse_thresholds(text: str) -> list:
    """Either a comma list ("0.5,0.75") or a range ("0.5:0.05:0.95")."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"threshold range must be start:step:stop, got {text!r}")
        try:
            start, step, stop = (float(p) for p in parts)
        except ValueError:
            raise UsageError(f"bad threshold range {text!r}") from None
        if step <= 0 or stop < start:
            raise UsageError(f"bad threshold range {text!r}")
        n = int(round((stop - start) / step)) + 1
        return [round(start + i * step, 10) for i in range(n)]
    values = _parse_float_list(text)
    if not values:
        raise UsageError("at least one threshold is required")
    return values


def _loss_cfg_from_args(args) -> losses.ABFLConfig:
    return losses.ABFLConfig(
        kappa=args.kappa,
        gamma_mode=args.gamma_mode,
        ast=getattr(args, "ast", None) or 1.3,
    )


# ---------------------------------------------------------------- loss-curve

def cmd_loss_curve(args) -> int:
    if args.samples <= 0:
        raise UsageError("--samples must be a positive integer")
    kappas = _parse_float_list(args.kappa_list)
    if not kappas:
        raise UsageError("at least one kappa is required")
    cfgs = [losses.ABFLConfig(kappa=k, gamma_mode=args.gamma_mode,
                              ast=args.ast or 1.3) for k in kappas]
    use_ast = args.ast is not None

    header = ["delta_rad"]
    for k in kappas:
        header += [f"loss_k{k:g}", f"grad_k{k:g}"]
    rows = [",".join(header)]
    n = args.samples
    for i in range(n):
        delta = -math.pi + (2.0 * math.pi * i / (n - 1)) if n > 1 else -math.pi
        cells = [f"{delta:.12g}"]
        for cfg in cfgs:
            if use_ast:
                value = losses.abfl_ast(delta, 0.0, args.aspect_ratio, cfg)
                grad = losses.abfl_ast_grad(delta, 0.0, args.aspect_ratio, cfg)
            else:
                value = losses.abfl(delta, 0.0, cfg)
                grad = losses.abfl_grad(delta, 0.0, cfg)
            cells += [f"{value:.17g}", f"{grad:.17g}"]
        rows.append(",".join(cells))
    _write_text(args.out, "\n".join(rows) + "\n")
    return 0


# ------------------------------------------------------------------ simulate

def _trajectory_json(kind, theta_gt_deg, theta_init_deg, traj) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "loss_kind": kind,
        "theta_gt_deg": theta_gt_deg,
        "theta_init_deg": theta_init_deg,
        "converged": traj.converged,
        "diverged": traj.diverged,
        "monotone": traj.monotone,
        "n_steps": traj.n_steps,
        "path_length_deg": math.degrees(traj.path_length),
        "final_theta_deg": math.degrees(traj.final_theta),
        "final_error_deg": math.degrees(traj.final_circular_error),
        "steps": [{"theta_rad": t, "loss": v, "grad": g}
                  for t, v, g in traj.steps],
    }


def cmd_simulate(args) -> int:
    cfg = fitting.FitConfig(
        loss_kind=args.loss,
        step_size=args.step_size,
        max_steps=args.steps,
        tol=math.radians(args.tol_deg),
        seed=args.seed,
        aspect_ratio=args.aspect_ratio,
    )
    traj = fitting.fit_angle(math.radians(args.gt), math.radians(args.init),
                             cfg, _loss_cfg_from_args(args))
    _write_text(args.out, _json_dumps(
        _trajectory_json(args.loss, args.gt, args.init, traj)))
    if args.csv:
        lines = ["step,theta_rad,loss,grad"]
        lines += [f"{i},{t:.17g},{v:.17g},{g:.17g}"
                  for i, (t, v, g) in enumerate(traj.steps)]
        _write_text(args.csv, "\n".join(lines) + "\n")
    return 0


# -------------------------------------------------------------------- report

def _report_chunk(payload):
    kind, pairs, cfg_fields, loss_fields = payload
    cfg = fitting.FitConfig(**cfg_fields)
    loss_cfg = losses.ABFLConfig(**loss_fields)
    report = fitting.boundary_report(pairs, [kind], cfg, loss_cfg)
    return list(report.rows)


def cmd_report(args) -> int:
    if args.grid <= 0:
        raise UsageError("--grid must be a positive integer")
    kinds = [k.strip() for k in args.losses.split(",") if k.strip()]
    for kind in kinds:
        if kind not in fitting.LOSS_KINDS:
            raise UsageError(f"unknown loss kind {kind!r}")
    pairs = fitting.make_angle_grid(args.grid)
    cfg = fitting.FitConfig(
        step_size=args.step_size,
        max_steps=args.steps,
        tol=math.radians(args.tol_deg),
        seed=args.seed,
    )
    loss_cfg = _loss_cfg_from_args(args)

    if args.jobs > 1 and pairs:
        from multiprocessing import Pool
        cfg_fields = {f: getattr(cfg, f) for f in cfg.__dataclass_fields__}
        loss_fields = {"kappa": loss_cfg.kappa, "gamma_mode": loss_cfg.gamma_mode,
                       "ast": loss_cfg.ast}
        chunk = max(1, len(pairs) // (4 * args.jobs))
        payloads = []
        for kind in kinds:
            kf = dict(cfg_fields, loss_kind=kind)
            for i in range(0, len(pairs), chunk):
                payloads.append((kind, pairs[i:i + chunk], kf, loss_fields))
        with Pool(args.jobs) as pool:
            rows = [r for part in pool.map(_report_chunk, payloads) for r in part]
        aggregates = {}
        for kind in kinds:
            kind_rows = [r for r in rows if r.loss_kind == kind]
            n = len(kind_rows)
            aggregates[kind] = {
                "n": n,
                "success_rate": sum(r.converged for r in kind_rows) / n,
                "mean_path_length": sum(r.path_length for r in kind_rows) / n,
                "mean_steps": sum(r.n_steps for r in kind_rows) / n,
            }
        report = fitting.BoundaryReport(rows=tuple(rows), aggregates=aggregates)
    else:
        report = fitting.boundary_report(pairs, kinds, cfg, loss_cfg)

    payload = {
        "schema_version": SCHEMA_VERSION,
        "grid": args.grid,
        "losses": kinds,
        "aggregates": report.aggregates,
        "rows": [{
            "loss_kind": r.loss_kind,
            "theta_gt_deg": math.degrees(r.theta_gt),
            "theta_init_deg": math.degrees(r.theta_init),
            "final_error_deg": math.degrees(r.final_error),
            "path_length_deg": math.degrees(r.path_length),
            "n_steps": r.n_steps,
            "converged": r.converged,
        } for r in report.rows],
    }
    _write_text(args.out, _json_dumps(payload))
    if args.csv:
        lines = ["loss_kind,theta_gt_deg,theta_init_deg,final_error_deg,"
                 "path_length_deg,n_steps,converged"]
        lines += [f"{r.loss_kind},{math.degrees(r.theta_gt):.6f},"
                  f"{math.degrees(r.theta_init):.6f},"
                  f"{math.degrees(r.final_error):.6f},"
                  f"{math.degrees(r.path_length):.6f},{r.n_steps},"
                  f"{int(r.converged)}"
                  for r in report.rows]
        _write_text(args.csv, "\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------------- eval

def _det_class_from_filename(name: str) -> str:
    stem = name[:-4] if name.endswith(".txt") else name
    if stem.startswith("Task1_"):
        stem = stem[len("Task1_"):]
    return stem


def cmd_eval(args) -> int:
    class_names = tuple(args.classes.split(",")) if args.classes else dota.DOTA_CLASSES
    if not os.path.isdir(args.gt_dir):
        raise OSError(f"ground-truth directory not found: {args.gt_dir}")
    if not os.path.isdir(args.det_dir):
        raise OSError(f"detection directory not found: {args.det_dir}")

    gts = []
    for fname in sorted(os.listdir(args.gt_dir)):
        if not fname.endswith(".txt"):
            continue
        image_id = fname[:-4]
        text = _read_text(os.path.join(args.gt_dir, fname))
        gts.extend(dota.parse_dota_annotations(text, image_id=image_id,
                                               class_names=class_names))
    dets = []
    name_to_id = {n: i for i, n in enumerate(class_names)}
    for fname in sorted(os.listdir(args.det_dir)):
        if not fname.endswith(".txt"):
            continue
        cls = _det_class_from_filename(fname)
        if cls not in name_to_id:
            raise ParseError(f"detection file {fname!r} does not match any class")
        text = _read_text(os.path.join(args.det_dir, fname))
        dets.extend(dota.parse_detection_file(text, class_id=name_to_id[cls]))

    thresholds = _parse_thresholds(args.thresholds)
    report = evaluation.map_at(dets, gts, thresholds, protocol=args.protocol)

    per_class = {}
    for class_id, by_thr in report.per_class.items():
        per_class[class_names[class_id]] = {
            f"{t:.2f}": ap for t, ap in by_thr.items()}
    payload = {
        "schema_version": SCHEMA_VERSION,
        "protocol": report.protocol,
        "thresholds": list(report.thresholds),
        "map50": report.map50,
        "map75": report.map75,
        "map": report.map_mean,
        "per_threshold": {f"{t:.2f}": v for t, v in report.per_threshold.items()},
        "per_class": per_class,
    }
    _write_text(args.out, _json_dumps(payload))
    if args.csv:
        lines = ["class,threshold,ap"]
        for name in sorted(per_class):
            for thr in sorted(per_class[name]):
                ap = per_class[name][thr]
                lines.append(f"{name},{thr},{'' if ap is None else f'{ap:.12g}'}")
        _write_text(args.csv, "\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------------- tile

def _patch_id(image_id: str, spec: dota.PatchSpec) -> str:
    return f"{image_id}__s{spec.scale:g}__{spec.origin_x}_{spec.origin_y}"


def cmd_tile(args) -> int:
    if args.width <= 0 or args.height <= 0:
        raise UsageError("--width and --height must be positive")
    if args.scales:
        if args.stride is None:
            raise UsageError("--scales requires --stride")
        scales = _parse_float_list(args.scales)
        specs = dota.multiscale_grid(args.width, args.height, scales,
                                     args.patch, args.stride)
    else:
        specs = dota.tile_grid(args.width, args.height, args.patch, args.overlap)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "image_id": args.image_id,
        "width": args.width,
        "height": args.height,
        "patch_size": args.patch,
        "patches": [{
            "patch_id": _patch_id(args.image_id, s),
            "origin_x": s.origin_x,
            "origin_y": s.origin_y,
            "patch_size": s.patch_size,
            "scale": s.scale,
        } for s in specs],
    }
    _write_text(args.out, _json_dumps(payload))
    return 0


# --------------------------------------------------------------------- merge

def cmd_merge(args) -> int:
    class_names = tuple(args.classes.split(",")) if args.classes else dota.DOTA_CLASSES
    manifest = json.loads(_read_text(args.manifest))
    image_id = manifest["image_id"]
    specs = {}
    for p in manifest["patches"]:
        specs[p["patch_id"]] = dota.PatchSpec(
            origin_x=p["origin_x"], origin_y=p["origin_y"],
            patch_size=p["patch_size"], scale=p["scale"])

    if not os.path.isdir(args.dets):
        raise OSError(f"detection directory not found: {args.dets}")
    name_to_id = {n: i for i, n in enumerate(class_names)}
    projected = []
    for fname in sorted(os.listdir(args.dets)):
        if not fname.endswith(".txt"):
            continue
        cls = _det_class_from_filename(fname)
        if cls not in name_to_id:
            raise ParseError(f"detection file {fname!r} does not match any class")
        for det in dota.parse_detection_file(
                _read_text(os.path.join(args.dets, fname)),
                class_id=name_to_id[cls]):
            if det.image_id not in specs:
                raise ParseError(f"detection references unknown patch "
                                 f"{det.image_id!r}")
            projected.append(dota.project_detection(det, specs[det.image_id],
                                                    image_id=image_id))

    merged = dota.merge_detections([projected], nms_iou_thresh=args.nms_iou,
                                   class_aware=not args.class_agnostic)
    os.makedirs(args.out_dir, exist_ok=True)
    for name, text in dota.serialize_detections(merged, class_names).items():
        _write_text(os.path.join(args.out_dir, f"{name}.txt"), text)
    return 0


# --------------------------------------------------------------------- batch

def _batch_abfl(req) -> dict:
    cfg = losses.ABFLConfig(
        kappa=float(req.get("kappa", 10.0)),
        gamma_mode=req.get("gamma_mode", "exact"),
    )
    loss, grad = batch_mod.batch_abfl(req["theta_pred"], req["theta_gt"], cfg)
    return {"loss": loss.tolist(), "grad": grad.tolist()}


def _batch_skew_iou(req) -> dict:
    iou = batch_mod.batch_skew_iou(req["boxes_a"], req["boxes_b"],
                                   pairwise=bool(req.get("pairwise", False)))
    return {"iou": iou.tolist()}


def _batch_nms(req) -> dict:
    keep = batch_mod.batch_rotated_nms(
        req["boxes"], req["scores"], req.get("class_ids"),
        iou_thresh=float(req.get("iou_thresh", 0.1)),
        class_aware=bool(req.get("class_aware", True)))
    return {"keep": keep}


def _batch_map(req) -> dict:
    dets = [batch_mod.detection_from_dict(d) for d in req["detections"]]
    gts = [batch_mod.ground_truth_from_dict(g) for g in req["ground_truths"]]
    report = evaluation.map_at(dets, gts, req["thresholds"],
                               protocol=req.get("protocol", "voc07"))
    return {
        "map50": report.map50,
        "map75": report.map75,
        "map": report.map_mean,
        "per_threshold": {f"{t:.2f}": v for t, v in report.per_threshold.items()},
        "per_class": {str(c): {f"{t:.2f}": ap for t, ap in by_thr.items()}
                      for c, by_thr in report.per_class.items()},
    }


_BATCH_OPS = {
    "abfl": _batch_abfl,
    "skew_iou": _batch_skew_iou,
    "nms": _batch_nms,
    "map": _batch_map,
}


def _run_batch_request(request) -> dict:
    op = request.get("op")
    if op not in _BATCH_OPS:
        raise UsageError(f"unknown batch op {op!r}; expected one of "
                         f"{sorted(_BATCH_OPS)}")
    try:
        result = _BATCH_OPS[op](request)
    except KeyError as exc:
        raise ParseError(f"batch request missing field {exc}") from None
    payload = {"schema_version": SCHEMA_VERSION, "op": op}
    payload.update(result)
    return payload


def cmd_batch(args) -> int:
    """One JSON request object, or a list of them answered in order."""
    try:
        request = json.loads(_read_text(args.infile))
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad JSON request: {exc}") from None
    if isinstance(request, list):
        payload = [_run_batch_request(r) for r in request]
    else:
        payload = _run_batch_request(request)
    _write_text(args.out, _json_dumps(payload))
    return 0


# ---------------------------------------------------------------------- main

def _add_loss_flags(p, include_ast: bool = True):
    p.add_argument("--kappa", type=float, default=10.0,
                   help="concentration of the angle loss (default 10)")
    p.add_argument("--gamma-mode", choices=losses.GAMMA_MODES, default="exact",
                   help="normalization: exact peak or tabulated pair")
    if include_ast:
        p.add_argument("--ast", type=float, default=None,
                       help="aspect-ratio threshold (switches to the "
                            "square-like loss variant)")
        p.add_argument("--aspect-ratio", type=float, default=1.0,
                       help="box aspect ratio fed to the square-like variant")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=_PROG,
        description="Oriented-box toolkit: circular angle losses, exact "
                    "rotated IoU/NMS, detection metrics, and tiling.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("loss-curve", help="sample loss and gradient over "
                                          "angle differences in [-pi, pi]")
    p.add_argument("--kappa", dest="kappa_list", default="10",
                   help="comma-separated concentration values")
    p.add_argument("--gamma-mode", choices=losses.GAMMA_MODES, default="exact")
    p.add_argument("--ast", type=float, default=None)
    p.add_argument("--aspect-ratio", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=361)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_loss_curve)

    p = sub.add_parser("simulate", help="gradient-descent trajectory for one "
                                        "(gt, init) angle pair")
    p.add_argument("--gt", type=float, required=True, help="target angle, degrees")
    p.add_argument("--init", type=float, required=True, help="start angle, degrees")
    p.add_argument("--loss", choices=fitting.LOSS_KINDS, default="abfl")
    p.add_argument("--steps", type=int, default=5000)
    p.add_argument("--step-size", type=float, default=0.01)
    p.add_argument("--tol-deg", type=float, default=0.006)
    p.add_argument("--seed", type=int, default=0)
    _add_loss_flags(p)
    p.add_argument("--out", default="-")
    p.add_argument("--csv", default=None,
                   help="also write the per-step trajectory as CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="convergence statistics over a grid of "
                                      "(gt, init) pairs per loss kind")
    p.add_argument("--grid", type=int, default=36)
    p.add_argument("--losses", default="abfl,smooth_l1_raw")
    p.add_argument("--steps", type=int, default=5000)
    p.add_argument("--step-size", type=float, default=0.01)
    p.add_argument("--tol-deg", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    _add_loss_flags(p)
    p.add_argument("--out", default="-")
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("eval", help="match detections to ground truth and "
                                    "compute AP/mAP")
    p.add_argument("--gt-dir", required=True)
    p.add_argument("--det-dir", required=True)
    p.add_argument("--protocol", choices=evaluation.PROTOCOLS, default="voc07")
    p.add_argument("--thresholds", default="0.5")
    p.add_argument("--classes", default=None,
                   help="comma-separated class names (default: DOTA 15)")
    p.add_argument("--out", default="-")
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("tile", help="emit a patch-grid manifest")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--patch", type=int, default=1024)
    p.add_argument("--overlap", type=int, default=200)
    p.add_argument("--scales", default=None,
                   help="comma-separated resize factors (multi-scale mode)")
    p.add_argument("--stride", type=int, default=None,
                   help="patch stride in multi-scale mode")
    p.add_argument("--image-id", default="image")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_tile)

    p = sub.add_parser("merge", help="project per-patch detections and apply "
                                     "cross-patch NMS")
    p.add_argument("--dets", required=True, help="directory of per-class "
                                                 "patch-frame detection files")
    p.add_argument("--manifest", required=True)
    p.add_argument("--nms-iou", type=float, default=0.1)
    p.add_argument("--class-agnostic", action="store_true")
    p.add_argument("--classes", default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("batch", help="run one JSON-encoded batch request")
    p.add_argument("--in", dest="infile", default="-")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_batch)

    return parser


def _apply_config_file(argv: list) -> list:
    """Inject key=value pairs from --config as flags ahead of the user's,
    so explicit flags win.
    """
    out = []
    path = None
    it = iter(argv)
    for token in it:
        if token == "--config":
            path = next(it, None)
            if path is None:
                raise UsageError("--config requires a file path")
        elif token.startswith("--config="):
            path = token.split("=", 1)[1]
        else:
            out.append(token)
    if path is None:
        return out
    tokens = []
    for lineno, raw in enumerate(_read_text(path).splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        tokens += [f"--{key.strip().replace('_', '-')}", value.strip()]
    if not out:
        raise UsageError("missing subcommand")
    # After the subcommand name, before user flags.
    return [out[0]] + tokens + out[1:]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _apply_config_file(argv)
        parser = build_parser()
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"{_PROG}: error [E_USAGE]: {exc}", file=sys.stderr)
        return 2
    except ObbkitError as exc:
        print(f"{_PROG}: error [{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{_PROG}: error [E_IO]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
