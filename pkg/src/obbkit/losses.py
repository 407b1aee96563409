"""Circular angle-regression losses built on the von Mises density, with
the squashing and out-of-range training strategies, the aspect-ratio
variant for square-like boxes, a smooth-L1 baseline, and the weighted
multi-branch total.

The angle loss is 1 - f(lam * d) / gamma with f the von Mises density
(mu = 0), d = theta_pred - theta_gt, and lam = 2 matching the pi period of
long-edge boxes. With the exact peak normalization the loss is 0 at d = 0
and tops out at 1 - exp(-2*kappa) at d = +-pi/2; the tabulated gamma pairs
leave a small positive residue at 0.
"""

import math
from dataclasses import dataclass, field

from .circular import KAPPA_MAX, bessel_i0, exact_gamma
from .errors import ConfigError, DomainError

HALF_PI = math.pi / 2.0

# Published (kappa, gamma) pairs; gamma is a rounding of the density peak.
KAPPA_GAMMA_TABLE = {
    2: 0.52,
    3: 0.66,
    5: 0.87,
    10: 1.3,
    20: 1.8,
    30: 2.2,
    50: 2.9,
}

GAMMA_MODES = ("exact", "paper")
STRATEGIES = ("plain", "strategy2")


@dataclass(frozen=True)
class ABFLConfig:
    """Angle-loss configuration.

    gamma_mode "exact" computes the normalization from kappa; "paper"
    looks it up in KAPPA_GAMMA_TABLE and therefore only accepts the seven
    tabulated kappa values. ``lam`` rescales the angle difference so the
    2pi-periodic density matches the pi-periodic box angle. ``ast`` is the
    aspect-ratio threshold below which a box counts as square-like.
    """

    kappa: float = 10.0
    gamma_mode: str = "exact"
    lam: float = 2.0
    strategy: str = "plain"
    ast: float | None = 1.3
    loss_weight: float = 0.2
    gamma: float = field(init=False)

    def __post_init__(self):
        if not (0.0 <= self.kappa <= KAPPA_MAX):
            raise ConfigError(f"kappa must be in [0, {KAPPA_MAX:g}], got {self.kappa}")
        if self.gamma_mode not in GAMMA_MODES:
            raise ConfigError(f"gamma_mode must be one of {GAMMA_MODES}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}")
        if self.lam <= 0.0:
            raise ConfigError(f"lam must be positive, got {self.lam}")
        if self.ast is not None and not self.ast > 1.0:
            raise ConfigError(f"ast must exceed 1, got {self.ast}")
        if self.loss_weight < 0.0:
            raise ConfigError(f"loss_weight must be non-negative, got {self.loss_weight}")
        if self.gamma_mode == "paper":
            if self.kappa not in KAPPA_GAMMA_TABLE:
                raise ConfigError(
                    f"paper gamma_mode requires kappa in "
                    f"{sorted(KAPPA_GAMMA_TABLE)}, got {self.kappa}")
            gamma = KAPPA_GAMMA_TABLE[self.kappa]
        else:
            gamma = exact_gamma(self.kappa)
        object.__setattr__(self, "gamma", gamma)


@dataclass(frozen=True)
class LossBreakdown:
    """Per-branch losses, their weights, and the weighted total."""

    cls: float
    reg: float
    angle: float
    aux: float
    w1: float
    w2: float
    w3: float
    w4: float
    total: float


def _check_angles(*angles):
    for a in angles:
        if not math.isfinite(a):
            raise DomainError(f"angle must be finite, got {a}")


def _density_ratio(d: float, cfg: ABFLConfig) -> float:
    """f(lam * d) / gamma for the zero-mean von Mises density f."""
    if cfg.gamma_mode == "exact":
        # exp(k cos(lam d)) / (2pi I0 gamma) with gamma = e^k/(2pi I0):
        # collapses to the overflow-free form below and is exactly 1 at d=0.
        return math.exp(cfg.kappa * (math.cos(cfg.lam * d) - 1.0))
    return math.exp(cfg.kappa * math.cos(cfg.lam * d)) / (
        2.0 * math.pi * bessel_i0(cfg.kappa) * cfg.gamma)


def abfl(theta_pred: float, theta_gt: float, cfg: ABFLConfig) -> float:
    """Boundary-free angle loss 1 - f(lam*(pred-gt))/gamma, clamped at 0."""
    _check_angles(theta_pred, theta_gt)
    if cfg.strategy != "plain":
        raise ConfigError("abfl expects a plain-strategy config")
    return max(0.0, 1.0 - _density_ratio(theta_pred - theta_gt, cfg))


def abfl_grad(theta_pred: float, theta_gt: float, cfg: ABFLConfig) -> float:
    """d(loss)/d(theta_pred) of the unclamped plain loss."""
    _check_angles(theta_pred, theta_gt)
    if cfg.strategy != "plain":
        raise ConfigError("abfl_grad expects a plain-strategy config")
    d = theta_pred - theta_gt
    return cfg.lam * cfg.kappa * math.sin(cfg.lam * d) * _density_ratio(d, cfg)


def abfl_strategy2(theta_pred: float, theta_gt: float, cfg: ABFLConfig) -> float:
    """Angle loss with an out-of-range penalty: predictions beyond +-pi/2
    pay |theta_pred| / (pi/2) instead of the circular loss.
    """
    _check_angles(theta_pred, theta_gt)
    if cfg.strategy != "strategy2":
        raise ConfigError("abfl_strategy2 expects a strategy2 config")
    if abs(theta_pred) <= HALF_PI:
        return max(0.0, 1.0 - _density_ratio(theta_pred - theta_gt, cfg))
    return abs(theta_pred) / HALF_PI


def abfl_strategy2_grad(theta_pred: float, theta_gt: float, cfg: ABFLConfig) -> float:
    """Piecewise gradient of abfl_strategy2 (sign(pred)*2/pi when penalized)."""
    _check_angles(theta_pred, theta_gt)
    if cfg.strategy != "strategy2":
        raise ConfigError("abfl_strategy2_grad expects a strategy2 config")
    if abs(theta_pred) <= HALF_PI:
        d = theta_pred - theta_gt
        return cfg.lam * cfg.kappa * math.sin(cfg.lam * d) * _density_ratio(d, cfg)
    return math.copysign(2.0 / math.pi, theta_pred)


def squash_to_angle(x: float):
    """Map a raw network output to (-pi/2, pi/2) via arctan; returns the
    angle and d(angle)/dx for chain-rule use.
    """
    if not math.isfinite(x):
        raise DomainError(f"input must be finite, got {x}")
    return math.atan(x), 1.0 / (1.0 + x * x)


def _ast_raw(theta_pred: float, theta_gt: float, cfg: ABFLConfig) -> float:
    d = theta_pred - theta_gt
    return 1.0 - _density_ratio(d, cfg) - _density_ratio(d + HALF_PI, cfg)


def abfl_ast(theta_pred: float, theta_gt: float, aspect_ratio: float,
             cfg: ABFLConfig) -> float:
    """Aspect-ratio-aware angle loss: square-like boxes (ratio below
    cfg.ast) also forgive predictions rotated by +-pi/2.
    """
    _check_angles(theta_pred, theta_gt)
    if cfg.ast is None or not cfg.ast > 1.0:
        raise ConfigError("abfl_ast requires cfg.ast > 1")
    if aspect_ratio < 1.0:
        raise DomainError(f"aspect_ratio must be >= 1, got {aspect_ratio}")
    if aspect_ratio >= cfg.ast:
        return max(0.0, 1.0 - _density_ratio(theta_pred - theta_gt, cfg))
    return max(0.0, _ast_raw(theta_pred, theta_gt, cfg))


def abfl_ast_raw(theta_pred: float, theta_gt: float, cfg: ABFLConfig) -> float:
    """Unclamped small-ratio branch of abfl_ast (can dip below zero by
    about exp(-2*kappa) at its minima); exposed for gradient checking.
    """
    _check_angles(theta_pred, theta_gt)
    if cfg.ast is None or not cfg.ast > 1.0:
        raise ConfigError("abfl_ast_raw requires cfg.ast > 1")
    return _ast_raw(theta_pred, theta_gt, cfg)


def abfl_ast_grad(theta_pred: float, theta_gt: float, aspect_ratio: float,
                  cfg: ABFLConfig) -> float:
    """Gradient of the unclamped aspect-ratio-aware loss."""
    _check_angles(theta_pred, theta_gt)
    if cfg.ast is None or not cfg.ast > 1.0:
        raise ConfigError("abfl_ast_grad requires cfg.ast > 1")
    if aspect_ratio < 1.0:
        raise DomainError(f"aspect_ratio must be >= 1, got {aspect_ratio}")
    d = theta_pred - theta_gt
    lk = cfg.lam * cfg.kappa
    g = lk * math.sin(cfg.lam * d) * _density_ratio(d, cfg)
    if aspect_ratio >= cfg.ast:
        return g
    return g + lk * math.sin(cfg.lam * (d + HALF_PI)) * _density_ratio(d + HALF_PI, cfg)


def smooth_l1(pred: float, gt: float, beta: float = 1.0) -> float:
    """Standard smooth-L1: quadratic within beta, linear outside."""
    if beta <= 0.0:
        raise ConfigError(f"beta must be positive, got {beta}")
    diff = abs(pred - gt)
    if diff < beta:
        return 0.5 * diff * diff / beta
    return diff - 0.5 * beta


def smooth_l1_grad(pred: float, gt: float, beta: float = 1.0) -> float:
    """d(smooth_l1)/d(pred)."""
    if beta <= 0.0:
        raise ConfigError(f"beta must be positive, got {beta}")
    diff = pred - gt
    if abs(diff) < beta:
        return diff / beta
    return math.copysign(1.0, diff)


def total_loss(cls: float, reg: float, angle: float, aux: float,
               w1: float = 1.0, w2: float = 1.0, w3: float = 0.2,
               w4: float = 1.0) -> LossBreakdown:
    """Weighted sum of the four branch losses."""
    parts = (cls, reg, angle, aux)
    weights = (w1, w2, w3, w4)
    if not all(math.isfinite(v) for v in parts):
        raise DomainError("branch losses must be finite")
    if any(w < 0.0 or not math.isfinite(w) for w in weights):
        raise ConfigError(f"weights must be non-negative, got {weights}")
    total = w1 * cls + w2 * reg + w3 * angle + w4 * aux
    return LossBreakdown(cls, reg, angle, aux, w1, w2, w3, w4, total)
