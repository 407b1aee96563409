"""Fixed-step gradient-descent harness that isolates the geometry of the
angle losses: it shows the long-way-around trajectories a linear loss
takes across the +-pi/2 boundary and their absence under the circular
losses, for single angles and for whole boxes.
"""

import math
import random
from dataclasses import dataclass, replace

from . import losses
from .boxes import (OrientedBoxLE, box_to_regression, normalize_angle_le,
                    regression_to_box)
from .circular import circular_distance
from .errors import ConfigError, DomainError
from .geometry import skew_iou

HALF_PI = math.pi / 2.0

LOSS_KINDS = ("abfl", "abfl_ast", "smooth_l1_raw", "strategy2")

# smooth_l1_raw trajectories beyond this magnitude count as divergent.
_DIVERGENCE_BOUND = 10.0 * math.pi


@dataclass(frozen=True)
class FitConfig:
    """Gradient-descent settings for the fit harness.

    ``aspect_ratio`` feeds the abfl_ast branch selection; ``init_jitter``
    nudges starts that sit within that distance of the +-pi/2 stationary
    point of the circular losses, using the seeded RNG.
    """

    loss_kind: str = "abfl"
    step_size: float = 0.01
    max_steps: int = 5000
    tol: float = 1e-4
    init_jitter: float = 1e-3
    seed: int = 0
    aspect_ratio: float = 1.0
    smooth_l1_beta: float = 1.0
    dist_tol: float = 0.5

    def __post_init__(self):
        if self.loss_kind not in LOSS_KINDS:
            raise ConfigError(f"loss_kind must be one of {LOSS_KINDS}, "
                              f"got {self.loss_kind!r}")
        if not (self.step_size > 0.0):
            raise ConfigError("step_size must be positive")
        if not (0 < self.max_steps <= 10 ** 6):
            raise ConfigError("max_steps must be in (0, 1e6]")
        if not (self.tol > 0.0):
            raise ConfigError("tol must be positive")
        if self.init_jitter < 0.0:
            raise ConfigError("init_jitter must be non-negative")
        if self.aspect_ratio < 1.0:
            raise ConfigError("aspect_ratio must be >= 1")
        if not (self.smooth_l1_beta > 0.0):
            raise ConfigError("smooth_l1_beta must be positive")


@dataclass(frozen=True)
class Trajectory:
    """Recorded descent: (theta, loss, grad) per step plus summary fields."""

    steps: tuple
    path_length: float
    final_theta: float
    final_circular_error: float
    converged: bool
    diverged: bool
    monotone: bool

    @property
    def n_steps(self) -> int:
        return len(self.steps) - 1


def _loss_cfg_for(kind: str, loss_cfg: losses.ABFLConfig) -> losses.ABFLConfig:
    needed = "strategy2" if kind == "strategy2" else "plain"
    if loss_cfg.strategy != needed:
        return replace(loss_cfg, strategy=needed)
    return loss_cfg


def _angle_loss_and_grad(kind, theta, theta_gt, loss_cfg, fit_cfg):
    if kind == "abfl":
        return (losses.abfl(theta, theta_gt, loss_cfg),
                losses.abfl_grad(theta, theta_gt, loss_cfg))
    if kind == "abfl_ast":
        ratio = fit_cfg.aspect_ratio
        return (losses.abfl_ast(theta, theta_gt, ratio, loss_cfg),
                losses.abfl_ast_grad(theta, theta_gt, ratio, loss_cfg))
    if kind == "strategy2":
        return (losses.abfl_strategy2(theta, theta_gt, loss_cfg),
                losses.abfl_strategy2_grad(theta, theta_gt, loss_cfg))
    beta = fit_cfg.smooth_l1_beta
    return (losses.smooth_l1(theta, theta_gt, beta),
            losses.smooth_l1_grad(theta, theta_gt, beta))


def _maybe_jitter(theta_init, theta_gt, cfg: FitConfig) -> float:
    if cfg.init_jitter <= 0.0:
        return theta_init
    delta_init = theta_init - theta_gt
    if circular_distance(delta_init, HALF_PI, math.pi) < cfg.init_jitter:
        rng = random.Random(cfg.seed)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        return theta_init + sign * cfg.init_jitter * (0.5 + 0.5 * rng.random())
    return theta_init


def fit_angle(theta_gt: float, theta_init: float, cfg: FitConfig,
              loss_cfg: losses.ABFLConfig) -> Trajectory:
    """Descend the selected angle loss from theta_init toward theta_gt.

    Circular losses renormalize the iterate to [-pi/2, pi/2) after every
    step; smooth_l1_raw deliberately treats the angle as an unbounded
    linear coordinate and is reported as diverged past 10 pi.
    """
    if not (math.isfinite(theta_gt) and math.isfinite(theta_init)):
        raise DomainError("angles must be finite")
    kind = cfg.loss_kind
    loss_cfg = _loss_cfg_for(kind, loss_cfg)
    circular = kind != "smooth_l1_raw"

    theta = _maybe_jitter(theta_init, theta_gt, cfg)
    loss, grad = _angle_loss_and_grad(kind, theta, theta_gt, loss_cfg, cfg)
    steps = [(theta, loss, grad)]
    path = 0.0
    monotone = True
    converged = circular_distance(theta, theta_gt, math.pi) < cfg.tol
    diverged = False

    while not converged and not diverged and len(steps) <= cfg.max_steps:
        new_theta = theta - cfg.step_size * grad
        if circular:
            path += circular_distance(theta, new_theta, math.pi)
            new_theta = normalize_angle_le(new_theta)
        else:
            path += abs(new_theta - theta)
            if abs(new_theta) > _DIVERGENCE_BOUND:
                diverged = True
        theta = new_theta
        new_loss, grad = _angle_loss_and_grad(kind, theta, theta_gt, loss_cfg, cfg)
        if new_loss > loss:
            monotone = False
        loss = new_loss
        steps.append((theta, loss, grad))
        converged = circular_distance(theta, theta_gt, math.pi) < cfg.tol

    return Trajectory(
        steps=tuple(steps),
        path_length=path,
        final_theta=theta,
        final_circular_error=circular_distance(theta, theta_gt, math.pi),
        converged=converged,
        diverged=diverged,
        monotone=monotone,
    )


@dataclass(frozen=True)
class BoxFitResult:
    """Joint box fit: the angle trajectory plus overlap bookkeeping."""

    trajectory: Trajectory
    final_box: OrientedBoxLE
    final_iou: float
    iou_series: tuple


def fit_box(gt: OrientedBoxLE, init, cfg: FitConfig,
            loss_cfg: losses.ABFLConfig, w2: float = 1.0,
            w3: float = 0.2) -> BoxFitResult:
    """Jointly descend the four side distances (smooth-L1 toward the
    ground-truth encoding at the same sample point, weight w2) and the
    angle (selected loss, weight w3).
    """
    if w2 < 0.0 or w3 < 0.0:
        raise ConfigError("weights must be non-negative")
    kind = cfg.loss_kind
    loss_cfg = _loss_cfg_for(kind, loss_cfg)
    if kind == "abfl_ast":
        # branch selection follows the target box, as a detector would
        cfg = replace(cfg, aspect_ratio=gt.h / gt.w)
    circular = kind != "smooth_l1_raw"
    target = box_to_regression(gt, init.px, init.py)
    targets = (target.t, target.b, target.l, target.r)

    dists = [init.t, init.b, init.l, init.r]
    theta = _maybe_jitter(init.theta, gt.theta, cfg)
    beta = cfg.smooth_l1_beta

    def current_box():
        rv = replace(init, t=dists[0], b=dists[1], l=dists[2], r=dists[3],
                     theta=theta if not circular else normalize_angle_le(theta))
        return regression_to_box(rv)

    def evaluate():
        angle_loss, angle_grad = _angle_loss_and_grad(kind, theta, gt.theta,
                                                      loss_cfg, cfg)
        reg_loss = sum(losses.smooth_l1(d, t, beta)
                       for d, t in zip(dists, targets))
        total = w2 * reg_loss + w3 * angle_loss
        return total, w3 * angle_grad

    def residual():
        return max(abs(d - t) for d, t in zip(dists, targets))

    def angle_error():
        return circular_distance(theta, gt.theta, math.pi)

    total, grad_theta = evaluate()
    steps = [(theta, total, grad_theta)]
    ious = [skew_iou(current_box(), gt)]
    path = 0.0
    monotone = True
    converged = angle_error() < cfg.tol and residual() < cfg.dist_tol
    diverged = False

    while not converged and not diverged and len(steps) <= cfg.max_steps:
        for i in range(4):
            step = cfg.step_size * w2 * losses.smooth_l1_grad(dists[i], targets[i], beta)
            dists[i] = max(dists[i] - step, 1e-9)
        new_theta = theta - cfg.step_size * grad_theta
        if circular:
            path += circular_distance(theta, new_theta, math.pi)
            new_theta = normalize_angle_le(new_theta)
        else:
            path += abs(new_theta - theta)
            if abs(new_theta) > _DIVERGENCE_BOUND:
                diverged = True
        theta = new_theta
        new_total, grad_theta = evaluate()
        if new_total > total:
            monotone = False
        total = new_total
        steps.append((theta, total, grad_theta))
        ious.append(skew_iou(current_box(), gt))
        converged = angle_error() < cfg.tol and residual() < cfg.dist_tol

    box = current_box()
    trajectory = Trajectory(
        steps=tuple(steps),
        path_length=path,
        final_theta=theta,
        final_circular_error=angle_error(),
        converged=converged,
        diverged=diverged,
        monotone=monotone,
    )
    return BoxFitResult(trajectory=trajectory, final_box=box,
                        final_iou=ious[-1], iou_series=tuple(ious))


def make_angle_grid(n: int) -> list:
    """n x n cell-centered (theta_gt, theta_init) pairs over the angle range."""
    if n <= 0:
        return []
    vals = [-HALF_PI + (i + 0.5) * math.pi / n for i in range(n)]
    return [(gt, init) for gt in vals for init in vals]


@dataclass(frozen=True)
class ReportRow:
    loss_kind: str
    theta_gt: float
    theta_init: float
    final_error: float
    path_length: float
    n_steps: int
    converged: bool


@dataclass(frozen=True)
class BoundaryReport:
    """Per-pair fit outcomes and per-loss aggregates."""

    rows: tuple
    aggregates: dict   # loss_kind -> {success_rate, mean_path_length, ...}


def boundary_report(pairs, kinds, cfg: FitConfig,
                    loss_cfg: losses.ABFLConfig) -> BoundaryReport:
    """Run fit_angle for every (theta_gt, theta_init) pair under each loss
    kind and aggregate convergence statistics.
    """
    rows = []
    for kind in kinds:
        if kind not in LOSS_KINDS:
            raise ConfigError(f"unknown loss kind {kind!r}")
        kind_cfg = replace(cfg, loss_kind=kind)
        for theta_gt, theta_init in pairs:
            traj = fit_angle(theta_gt, theta_init, kind_cfg, loss_cfg)
            rows.append(ReportRow(
                loss_kind=kind,
                theta_gt=theta_gt,
                theta_init=theta_init,
                final_error=traj.final_circular_error,
                path_length=traj.path_length,
                n_steps=traj.n_steps,
                converged=traj.converged,
            ))
    aggregates = {}
    for kind in kinds:
        kind_rows = [r for r in rows if r.loss_kind == kind]
        n = len(kind_rows)
        aggregates[kind] = {
            "n": n,
            "success_rate": (sum(r.converged for r in kind_rows) / n) if n else 0.0,
            "mean_path_length": (sum(r.path_length for r in kind_rows) / n) if n else 0.0,
            "mean_steps": (sum(r.n_steps for r in kind_rows) / n) if n else 0.0,
        }
    return BoundaryReport(rows=tuple(rows), aggregates=aggregates)
