"""Loss families, box constraint sets and the economic dispatch instance."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "QuadraticRegressionLoss",
    "LossSequence",
    "sample_regression_sequence",
    "ConstraintSet",
    "ShrunkSet",
    "DispatchProblem",
    "dispatch_problem",
]


@dataclass(frozen=True, eq=False)
class QuadraticRegressionLoss:
    """Squared-residual loss ``(a'x - b)^2 / 2``."""

    a: np.ndarray
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))
        object.__setattr__(self, "b", float(self.b))

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    def value(self, x: np.ndarray) -> float:
        r = self.a @ x - self.b
        return 0.5 * r * r

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self.a * (self.a @ x - self.b)


@dataclass(frozen=True, eq=False)
class LossSequence:
    """Per-agent, per-round regression losses.

    ``a`` has shape ``(n_agents, horizon, dim)`` and ``b`` has shape
    ``(n_agents, horizon)``. Agents and rounds are 0-based in memory and
    1-based in the CSV interchange format.
    """

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.ndim != 3 or b.ndim != 2 or a.shape[:2] != b.shape:
            raise ValueError("expected a of shape (N, T, d) and b of shape (N, T)")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n_agents(self) -> int:
        return self.a.shape[0]

    @property
    def horizon(self) -> int:
        return self.a.shape[1]

    @property
    def dim(self) -> int:
        return self.a.shape[2]

    def loss(self, agent: int, t: int) -> QuadraticRegressionLoss:
        return QuadraticRegressionLoss(a=self.a[agent, t], b=self.b[agent, t])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["agent", "t"] + [f"a_{k + 1}" for k in range(self.dim)] + ["b"]
            )
            for i in range(self.n_agents):
                for t in range(self.horizon):
                    row = [i + 1, t + 1]
                    row += [repr(float(v)) for v in self.a[i, t]]
                    row.append(repr(float(self.b[i, t])))
                    writer.writerow(row)

    @classmethod
    def from_csv(cls, path) -> "LossSequence":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            dim = len(header) - 3
            rows = [r for r in reader if r]
        n = max(int(r[0]) for r in rows)
        horizon = max(int(r[1]) for r in rows)
        a = np.full((n, horizon, dim), np.nan)
        b = np.full((n, horizon), np.nan)
        for r in rows:
            i, t = int(r[0]) - 1, int(r[1]) - 1
            a[i, t] = [float(v) for v in r[2 : 2 + dim]]
            b[i, t] = float(r[2 + dim])
        if np.any(np.isnan(a)) or np.any(np.isnan(b)):
            raise ValueError(f"incomplete loss sequence in {Path(path)}")
        return cls(a=a, b=b)


def sample_regression_sequence(
    n_agents: int, dim: int, horizon: int, seed
) -> LossSequence:
    """Draw regressors uniformly on [-1, 1] and targets uniformly on [0, 1].

    Entries are independent across agents, rounds and coordinates, and the
    sequence is deterministic given ``seed``.
    """
    if n_agents < 1 or dim < 1 or horizon < 1:
        raise ValueError("n_agents, dim and horizon must all be >= 1")
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1.0, 1.0, size=(n_agents, horizon, dim))
    b = rng.uniform(0.0, 1.0, size=(n_agents, horizon))
    return LossSequence(a=a, b=b)


@dataclass(frozen=True)
class ConstraintSet:
    """Box ``[lower, upper]^dim`` described by ``2*dim`` inequalities.

    The inequality order is fixed: all lower bounds ``lower - x_m <= 0``
    first, then all upper bounds ``x_m - upper <= 0``.
    """

    dim: int
    lower: float
    upper: float

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not self.lower < self.upper:
            raise ValueError("lower bound must be strictly below upper bound")

    @property
    def n_constraints(self) -> int:
        return 2 * self.dim

    @property
    def radius(self) -> float:
        """Radius of the smallest origin-centred ball containing the box."""
        return float(np.sqrt(self.dim) * max(abs(self.lower), abs(self.upper)))

    @property
    def inradius(self) -> float:
        """Largest r with ``ball(0, r)`` inside the box; needs 0 in the box."""
        if not (self.lower <= 0.0 <= self.upper):
            raise ValueError("inradius is defined for boxes containing the origin")
        return float(min(-self.lower, self.upper))

    def project(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(
            np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol)
        )

    def constraint_values(self, x: np.ndarray) -> np.ndarray:
        """Vector ``(lower - x_1, ..., lower - x_d, x_1 - upper, ..., x_d - upper)``."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a vector of dimension {self.dim}")
        c = np.empty(2 * self.dim)
        c[: self.dim] = self.lower - x
        c[self.dim:] = x - self.upper
        return c

    def shrink(self, delta: float) -> "ShrunkSet":
        """Scale the box towards the origin by ``1 - delta``."""
        if not (self.lower <= 0.0 <= self.upper):
            raise ValueError("shrinking requires a box containing the origin")
        if not (0.0 <= delta < 1.0):
            raise ValueError("delta must lie in [0, 1)")
        return ShrunkSet(base=self, delta=delta)


@dataclass(frozen=True)
class ShrunkSet:
    """The box scaled by ``1 - delta``: x belongs iff x/(1-delta) is in the base box."""

    base: ConstraintSet
    delta: float

    @property
    def lower(self) -> float:
        return (1.0 - self.delta) * self.base.lower

    @property
    def upper(self) -> float:
        return (1.0 - self.delta) * self.base.upper

    def project(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))


@dataclass(frozen=True, eq=False)
class DispatchProblem:
    """Economic dispatch with quadratic generator costs.

    Generator ``i`` producing ``x_i`` costs ``quad_i x_i^2 + lin_i x_i +
    const_i`` subject to ``x_min_i <= x_i <= x_max_i`` (bounds may be
    infinite) and the demand coupling ``sum_i x_i = demand``.
    """

    quad: np.ndarray
    lin: np.ndarray
    const: np.ndarray
    x_min: np.ndarray
    x_max: np.ndarray
    demand: float

    def __post_init__(self):
        for name in ("quad", "lin", "const", "x_min", "x_max"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        n = self.quad.shape[0]
        if any(getattr(self, f).shape != (n,) for f in ("lin", "const", "x_min", "x_max")):
            raise ValueError("coefficient arrays must share one length")
        if np.any(self.quad <= 0.0):
            raise ValueError("quadratic cost coefficients must be strictly positive")
        if np.any(self.x_min > self.x_max):
            raise ValueError("x_min must not exceed x_max")
        if not (self.x_min.sum() <= self.demand <= self.x_max.sum()):
            raise ValueError(
                f"demand {self.demand} outside the feasible range "
                f"[{self.x_min.sum()}, {self.x_max.sum()}]"
            )

    @property
    def n_gens(self) -> int:
        return self.quad.shape[0]

    def cost(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.sum(self.quad * x * x + self.lin * x + self.const))

    def per_gen_cost(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.quad * x * x + self.lin * x + self.const


def dispatch_problem(
    quad, demand: float, lin=None, const=None, x_min=None, x_max=None
) -> DispatchProblem:
    """Convenience constructor; omitted bounds default to unbounded."""
    quad = np.asarray(quad, dtype=float)
    n = quad.shape[0]
    return DispatchProblem(
        quad=quad,
        lin=np.zeros(n) if lin is None else np.asarray(lin, dtype=float),
        const=np.zeros(n) if const is None else np.asarray(const, dtype=float),
        x_min=np.full(n, -np.inf) if x_min is None else np.asarray(x_min, dtype=float),
        x_max=np.full(n, np.inf) if x_max is None else np.asarray(x_max, dtype=float),
        demand=float(demand),
    )
