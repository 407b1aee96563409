/**
 * Typed bindings over the obbkit numeric core.
 *
 * Every function is a pure call into the core's JSON batch endpoint
 * (`obbkit batch`): the request is serialized, executed in a fresh core
 * process, and the response deserialized. No state is held between
 * calls, so the bindings are trivially reentrant. JSON carries float64
 * values via shortest round-trip decimal strings, so numbers survive
 * the boundary bit-exactly.
 */

import { spawnSync } from "node:child_process";

/** Rotated box as (cx, cy, w, h, theta) with theta in radians. */
export type BoxTuple = [number, number, number, number, number];

export interface CoreOptions {
  /** Command used to launch the core CLI; flags are appended after it. */
  command?: readonly string[];
}

export interface AbflOptions extends CoreOptions {
  /** Concentration of the angle loss; defaults to 10. */
  kappa?: number;
  /** "exact" pins the loss minimum at 0; "paper" uses the tabulated pairs. */
  gammaMode?: "exact" | "paper";
}

export interface BatchAbflResult {
  loss: number[];
  grad: number[];
}

export interface SkewIouOptions extends CoreOptions {
  /** When true, returns the full |A| x |B| matrix instead of element-wise. */
  pairwise?: boolean;
}

export interface NmsOptions extends CoreOptions {
  classIds?: readonly number[];
  iouThresh?: number;
  classAware?: boolean;
}

export interface DetectionRecord {
  box: BoxTuple;
  classId: number;
  score: number;
  imageId?: string;
}

export interface GroundTruthRecord {
  box: BoxTuple;
  classId: number;
  difficulty?: 0 | 1;
  imageId?: string;
}

export interface MapOptions extends CoreOptions {
  protocol?: "voc07" | "coco101";
}

export interface MapResult {
  map50: number | null;
  map75: number | null;
  map: number;
  perThreshold: Record<string, number | null>;
  perClass: Record<string, Record<string, number | null>>;
}

const DEFAULT_COMMAND = ["python3", "-m", "obbkit.cli"] as const;

type BatchRequest = Record<string, unknown> & { op: string };

function runCore(command: readonly string[] | undefined, payload: unknown): unknown {
  const argv = [...(command ?? DEFAULT_COMMAND), "batch", "--in", "-", "--out", "-"];
  const proc = spawnSync(argv[0], argv.slice(1), {
    input: JSON.stringify(payload),
    encoding: "utf8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (proc.error) {
    throw new Error(`failed to launch core (${argv[0]}): ${proc.error.message}`);
  }
  if (proc.status !== 0) {
    throw new Error(`core exited with status ${proc.status}: ${proc.stderr.trim()}`);
  }
  return JSON.parse(proc.stdout);
}

/** Execute one batch request against the core. */
export function runBatchRequest(request: BatchRequest, options?: CoreOptions): unknown {
  return runCore(options?.command, request);
}

/** Execute several independent requests in one core invocation. */
export function runBatchRequests(requests: readonly BatchRequest[],
                                 options?: CoreOptions): unknown[] {
  return runCore(options?.command, requests) as unknown[];
}

/**
 * Element-wise angle loss and gradient over two equal-length angle
 * arrays (radians).
 */
export function batchAbfl(thetaPred: readonly number[],
                          thetaGt: readonly number[],
                          options: AbflOptions = {}): BatchAbflResult {
  if (thetaPred.length !== thetaGt.length) {
    throw new Error(
      `shape mismatch: ${thetaPred.length} predictions vs ${thetaGt.length} targets`);
  }
  const res = runCore(options.command, {
    op: "abfl",
    theta_pred: thetaPred,
    theta_gt: thetaGt,
    kappa: options.kappa ?? 10,
    gamma_mode: options.gammaMode ?? "exact",
  }) as { loss: number[]; grad: number[] };
  return { loss: res.loss, grad: res.grad };
}

/**
 * Exact rotated-box IoU: element-wise over equal-length box arrays, or
 * the full pairwise matrix with `pairwise: true`.
 */
export function batchSkewIou(boxesA: readonly BoxTuple[],
                             boxesB: readonly BoxTuple[],
                             options?: SkewIouOptions & { pairwise?: false }): number[];
export function batchSkewIou(boxesA: readonly BoxTuple[],
                             boxesB: readonly BoxTuple[],
                             options: SkewIouOptions & { pairwise: true }): number[][];
export function batchSkewIou(boxesA: readonly BoxTuple[],
                             boxesB: readonly BoxTuple[],
                             options: SkewIouOptions = {}): number[] | number[][] {
  const pairwise = options.pairwise ?? false;
  if (!pairwise && boxesA.length !== boxesB.length) {
    throw new Error(
      `shape mismatch: ${boxesA.length} vs ${boxesB.length} boxes`);
  }
  const res = runCore(options.command, {
    op: "skew_iou",
    boxes_a: boxesA,
    boxes_b: boxesB,
    pairwise,
  }) as { iou: number[] | number[][] };
  return res.iou;
}

/**
 * Greedy rotated NMS; returns kept indices by descending score. Class
 * aware by default when class ids are given.
 */
export function rotatedNms(boxes: readonly BoxTuple[],
                           scores: readonly number[],
                           options: NmsOptions = {}): number[] {
  if (boxes.length !== scores.length) {
    throw new Error(`shape mismatch: ${boxes.length} boxes vs ${scores.length} scores`);
  }
  const res = runCore(options.command, {
    op: "nms",
    boxes,
    scores,
    class_ids: options.classIds ?? null,
    iou_thresh: options.iouThresh ?? 0.1,
    class_aware: options.classAware ?? true,
  }) as { keep: number[] };
  return res.keep;
}

/** Scalar angle loss for one (prediction, target) pair. */
export function abfl(thetaPred: number, thetaGt: number,
                     options: AbflOptions = {}): number {
  return batchAbfl([thetaPred], [thetaGt], options).loss[0];
}

/** Scalar loss gradient d(loss)/d(thetaPred) for one pair. */
export function abflGrad(thetaPred: number, thetaGt: number,
                         options: AbflOptions = {}): number {
  return batchAbfl([thetaPred], [thetaGt], options).grad[0];
}

/** Exact IoU of two rotated boxes. */
export function skewIou(boxA: BoxTuple, boxB: BoxTuple,
                        options: CoreOptions = {}): number {
  return batchSkewIou([boxA], [boxB], options)[0];
}

/** Detection mAP over the given IoU thresholds. */
export function mapAt(detections: readonly DetectionRecord[],
                      groundTruths: readonly GroundTruthRecord[],
                      thresholds: readonly number[],
                      options: MapOptions = {}): MapResult {
  const res = runCore(options.command, {
    op: "map",
    detections: detections.map((d) => ({
      box: d.box,
      class_id: d.classId,
      score: d.score,
      image_id: d.imageId ?? "",
    })),
    ground_truths: groundTruths.map((g) => ({
      box: g.box,
      class_id: g.classId,
      difficulty: g.difficulty ?? 0,
      image_id: g.imageId ?? "",
    })),
    thresholds,
    protocol: options.protocol ?? "voc07",
  }) as {
    map50: number | null;
    map75: number | null;
    map: number;
    per_threshold: Record<string, number | null>;
    per_class: Record<string, Record<string, number | null>>;
  };
  return {
    map50: res.map50,
    map75: res.map75,
    map: res.map,
    perThreshold: res.per_threshold,
    perClass: res.per_class,
  };
}
