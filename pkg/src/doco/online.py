"""Single-learner online gradient descent with full or bandit feedback.

Full information plays ``x_t = proj(x_{t-1} - alpha_t * grad l_{t-1}(x_{t-1}))``.
Bandit feedback keeps an anchor inside the shrunk box, perturbs it along a
random unit direction scaled by ``delta * inradius``, and replaces the
gradient by the one-point estimate ``dim * loss * u / (delta * inradius)``.
Scaling the exploration step by the box inradius keeps every played point
inside the box while preserving the estimator identity.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .problems import ConstraintSet

__all__ = [
    "StepSchedule",
    "Trajectory",
    "ogd_step",
    "sample_unit_sphere",
    "gradient_estimate",
    "BanditState",
    "bandit_round",
    "run_ogd",
    "full_info_schedule",
    "bandit_defaults",
    "learner_rng",
]


@dataclass(frozen=True)
class StepSchedule:
    """Non-increasing step sizes ``scale / t**exponent`` (exponent 0 = constant)."""

    scale: float
    exponent: float = 0.0

    def __post_init__(self):
        if self.scale <= 0.0:
            raise ValueError("scale must be positive")
        if self.exponent < 0.0:
            raise ValueError("exponent must be nonnegative")

    def alpha(self, t: int) -> float:
        if t < 1:
            raise ValueError("rounds are 1-based")
        return self.scale if self.exponent == 0.0 else self.scale / t**self.exponent

    @classmethod
    def constant(cls, scale: float) -> "StepSchedule":
        return cls(scale=scale, exponent=0.0)

    @classmethod
    def inv_sqrt(cls, scale: float) -> "StepSchedule":
        return cls(scale=scale, exponent=0.5)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Played points ``(T, d)`` and experienced losses ``(T,)``."""

    points: np.ndarray
    losses: np.ndarray

    @property
    def horizon(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t"] + [f"x_{k + 1}" for k in range(self.dim)] + ["loss"])
            for t in range(self.horizon):
                row = [t + 1]
                row += [repr(float(v)) for v in self.points[t]]
                row.append(repr(float(self.losses[t])))
                writer.writerow(row)


def ogd_step(
    x_prev: np.ndarray, grad_prev: np.ndarray, alpha_t: float, cset: ConstraintSet
) -> np.ndarray:
    """Projected gradient step ``proj(x - alpha * g)`` onto the box."""
    x_prev = np.asarray(x_prev, dtype=float)
    grad_prev = np.asarray(grad_prev, dtype=float)
    if x_prev.shape != grad_prev.shape:
        raise ValueError("point and gradient dimensions differ")
    return cset.project(x_prev - alpha_t * grad_prev)


def sample_unit_sphere(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the unit sphere via a normalised Gaussian."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    while True:
        g = rng.standard_normal(dim)
        norm = math.sqrt(float(g @ g))
        if norm > 0.0:
            return g / norm


def gradient_estimate(
    loss_value: float, u: np.ndarray, dim: int, radius: float
) -> np.ndarray:
    """One-point gradient estimate ``dim * loss * u / radius``."""
    if radius <= 0.0:
        raise ValueError("exploration radius must be positive")
    return (dim * loss_value / radius) * u


@dataclass
class BanditState:
    """Anchor point in the shrunk box plus the exploration parameters."""

    y: np.ndarray
    delta: float
    eta: float
    rng: np.random.Generator
    update_from_anchor: bool = False


def bandit_round(
    state: BanditState, loss_value, cset: ConstraintSet
) -> tuple[np.ndarray, float, BanditState]:
    """Play one bandit round and advance the anchor.

    ``loss_value`` is called exactly once, at the played point. The anchor
    update starts from the played point by default; ``update_from_anchor``
    switches to stepping from the anchor instead.
    """
    shrunk = cset.shrink(state.delta)
    if not shrunk.contains(state.y, tol=1e-12):
        raise RuntimeError("bandit anchor left the shrunk box")
    dim = state.y.shape[0]
    radius = state.delta * cset.inradius
    u = sample_unit_sphere(dim, state.rng)
    x_t = state.y + radius * u
    loss = float(loss_value(x_t))
    g = gradient_estimate(loss, u, dim, radius)
    start = state.y if state.update_from_anchor else x_t
    state.y = shrunk.project(start - state.eta * g)
    return x_t, loss, state


def full_info_schedule(cset: ConstraintSet, grad_bound: float) -> StepSchedule:
    """Classic tuning ``radius / (grad_bound * sqrt(t))``."""
    if grad_bound <= 0.0:
        raise ValueError("grad_bound must be positive")
    return StepSchedule.inv_sqrt(cset.radius / grad_bound)


def bandit_defaults(horizon: int) -> tuple[float, float]:
    """Horizon-tuned exploration radius and step: ``T**-1/4`` and ``T**-3/4``."""
    delta = min(0.5, float(horizon) ** -0.25)
    eta = float(horizon) ** -0.75
    return delta, eta


def learner_rng(seed, stream: int = 0) -> np.random.Generator:
    """Reproducible generator for stream ``stream`` of a master seed.

    ``seed`` may be an int or a tuple of ints; streams with distinct indices
    are statistically independent.
    """
    parts = (seed,) if isinstance(seed, int) else tuple(seed)
    return np.random.default_rng(np.random.SeedSequence(list(parts) + [stream]))


def run_ogd(
    losses,
    horizon: int,
    cset: ConstraintSet,
    mode: str = "full",
    schedule: StepSchedule | None = None,
    seed=0,
    delta: float | None = None,
    eta: float | None = None,
    update_from_anchor: bool = False,
) -> Trajectory:
    """Run a single learner for ``horizon`` rounds.

    ``losses`` is a sequence of per-round loss objects exposing ``value`` and
    (for full information) ``gradient``. The first decision is the origin;
    in bandit mode only loss values at played points are ever queried.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if len(losses) < horizon:
        raise ValueError("need one loss per round")
    if mode not in ("full", "bandit"):
        raise ValueError(f"unknown feedback mode: {mode!r}")
    dim = cset.dim
    points = np.zeros((horizon, dim))
    values = np.zeros(horizon)

    if mode == "full":
        if schedule is None:
            schedule = full_info_schedule(cset, grad_bound=1.0)
        x = cset.project(np.zeros(dim))
        for t in range(1, horizon + 1):
            points[t - 1] = x
            values[t - 1] = losses[t - 1].value(x)
            if t < horizon:
                grad = losses[t - 1].gradient(x)
                x = ogd_step(x, grad, schedule.alpha(t + 1), cset)
        return Trajectory(points=points, losses=values)

    d0, e0 = bandit_defaults(horizon)
    state = BanditState(
        y=np.zeros(dim),
        delta=d0 if delta is None else delta,
        eta=e0 if eta is None else eta,
        rng=learner_rng(seed, stream=0),
        update_from_anchor=update_from_anchor,
    )
    for t in range(1, horizon + 1):
        loss_t = losses[t - 1]
        x_t, val, state = bandit_round(state, loss_t.value, cset)
        points[t - 1] = x_t
        values[t - 1] = val
    return Trajectory(points=points, losses=values)
