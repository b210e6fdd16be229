"""Two-block ADMM with closed-form subproblems, and its dispatch specialisation.

The generic solver handles problems of the form

    min  f(x) + g(z)   s.t.  A x + B z = c

where ``f`` and ``g`` are convex quadratics (optionally box-constrained with
a separable subproblem) or, for ``g``, the indicator of ``sum(z) = target``.
Both block updates are exact argmins of the augmented Lagrangian

    L(x, z, y) = f(x) + g(z) + y'(Ax + Bz - c) + (alpha/2) ||Ax + Bz - c||^2.

The dual step defaults to ascent, ``y <- y + alpha (Ax + Bz - c)``, which is
consistent with the ``+y'(...)`` Lagrangian above; the descent sign is kept
behind ``literal_dual_update`` for side-by-side comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .problems import DispatchProblem

__all__ = [
    "Quadratic",
    "SumConstraint",
    "AdmmProblem",
    "AdmmState",
    "augmented_lagrangian",
    "admm_solve",
    "dispatch_admm",
    "dispatch_kkt",
]

_DIAG_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Quadratic:
    """Convex quadratic ``(1/2) x'Px + q'x + const`` with an optional box."""

    P: np.ndarray
    q: np.ndarray
    const: float = 0.0
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.P, dtype=float))
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        if P.shape != (q.shape[0], q.shape[0]):
            raise ValueError("P must be square and match the dimension of q")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "q", q)
        for name in ("lower", "upper"):
            bound = getattr(self, name)
            if bound is not None:
                object.__setattr__(self, name, np.broadcast_to(
                    np.asarray(bound, dtype=float), q.shape).copy())

    @property
    def dim(self) -> int:
        return self.q.shape[0]

    def value(self, x: np.ndarray) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.lower is not None and np.any(x < self.lower - _DIAG_TOL):
            return math.inf
        if self.upper is not None and np.any(x > self.upper + _DIAG_TOL):
            return math.inf
        return float(0.5 * x @ self.P @ x + self.q @ x + self.const)


@dataclass(frozen=True)
class SumConstraint:
    """Indicator of the affine set ``sum(z) = target`` (0 on it, +inf off it)."""

    target: float
    tol: float = 1e-9

    def value(self, z: np.ndarray) -> float:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        scale = max(1.0, abs(self.target))
        return 0.0 if abs(z.sum() - self.target) <= self.tol * scale else math.inf


@dataclass(frozen=True, eq=False)
class AdmmProblem:
    """Two-block equality-coupled problem ``min f(x)+g(z) s.t. Ax+Bz=c``."""

    f: Quadratic
    g: Quadratic | SumConstraint
    A: np.ndarray
    B: np.ndarray
    c: np.ndarray
    alpha: float

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        if A.shape[0] != B.shape[0] or A.shape[0] != c.shape[0]:
            raise ValueError("A, B and c disagree on the number of coupling rows")
        if A.shape[1] != self.f.dim:
            raise ValueError("A must match the dimension of f")
        if self.alpha <= 0.0:
            raise ValueError("penalty alpha must be positive")
        if isinstance(self.g, SumConstraint):
            m = B.shape[1]
            if B.shape[0] != m or not np.allclose(B, B[0, 0] * np.eye(m)) or B[0, 0] == 0.0:
                raise ValueError("sum-constrained z-block needs B = beta * I")
        elif B.shape[1] != self.g.dim:
            raise ValueError("B must match the dimension of g")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "c", c)

    @property
    def dim_x(self) -> int:
        return self.A.shape[1]

    @property
    def dim_z(self) -> int:
        return self.B.shape[1]


@dataclass
class AdmmState:
    """Iterates plus residual history; ``converged`` is set by the solver."""

    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    iterate: int = 0
    primal_residuals: list[float] = field(default_factory=list)
    dual_residuals: list[float] = field(default_factory=list)
    converged: bool = False

    def residuals_to_csv(self, path) -> None:
        """Rows ``(iter, primal_residual, dual_residual)``, 1-based iterations."""
        with open(path, "w", newline="") as fh:
            fh.write("iter,primal_residual,dual_residual\n")
            for k, (p, d) in enumerate(zip(self.primal_residuals,
                                           self.dual_residuals)):
                fh.write(f"{k + 1},{p!r},{d!r}\n")


def augmented_lagrangian(problem: AdmmProblem, x, z, y) -> float:
    """Evaluate ``f(x) + g(z) + y'r + (alpha/2)||r||^2`` with ``r = Ax+Bz-c``.

    Returns ``inf`` when an indicator block is violated.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    r = problem.A @ x + problem.B @ z - problem.c
    base = problem.f.value(x) + problem.g.value(z)
    if math.isinf(base):
        return math.inf
    return base + float(y @ r) + 0.5 * problem.alpha * float(r @ r)


def _solve_block(H: np.ndarray, lin: np.ndarray, lower, upper) -> np.ndarray:
    """Exact argmin of ``(1/2) v'Hv + lin'v`` over an optional box.

    A box is only supported when H is diagonal, which keeps the clamped
    coordinatewise solution an exact minimiser.
    """
    if lower is None and upper is None:
        return np.linalg.solve(H, -lin)
    off = H - np.diag(np.diag(H))
    if np.max(np.abs(off)) > _DIAG_TOL * max(1.0, np.max(np.abs(H))):
        raise ValueError("box-constrained block requires a separable subproblem")
    v = -lin / np.diag(H)
    if lower is not None:
        v = np.maximum(v, lower)
    if upper is not None:
        v = np.minimum(v, upper)
    return v


def _x_update(problem: AdmmProblem, z, y) -> np.ndarray:
    a, f = problem.alpha, problem.f
    H = f.P + a * problem.A.T @ problem.A
    lin = f.q + problem.A.T @ y + a * problem.A.T @ (problem.B @ z - problem.c)
    return _solve_block(H, lin, f.lower, f.upper)


def _z_update(problem: AdmmProblem, x, y) -> np.ndarray:
    a = problem.alpha
    if isinstance(problem.g, SumConstraint):
        beta = problem.B[0, 0]
        # Projection of the unconstrained minimiser onto sum(z) = target.
        w = ((problem.c - problem.A @ x) - y / a) / beta
        return w + (problem.g.target - w.sum()) / w.shape[0]
    g = problem.g
    H = g.P + a * problem.B.T @ problem.B
    lin = g.q + problem.B.T @ y + a * problem.B.T @ (problem.A @ x - problem.c)
    return _solve_block(H, lin, g.lower, g.upper)


def admm_solve(
    problem: AdmmProblem,
    init: AdmmState | None = None,
    max_iters: int = 5_000,
    tol: float = 1e-8,
    literal_dual_update: bool = False,
) -> AdmmState:
    """Run sequential x, z and dual updates until both residuals drop below tol.

    Non-convergence within ``max_iters`` is reported through the returned
    state's ``converged`` flag rather than an exception. The dual residual is
    ``alpha * ||B (z_new - z_old)||``.
    """
    if init is None:
        state = AdmmState(
            x=np.zeros(problem.dim_x),
            z=np.zeros(problem.dim_z),
            y=np.zeros(problem.c.shape[0]),
        )
    else:
        state = AdmmState(
            x=np.array(init.x, dtype=float),
            z=np.array(init.z, dtype=float),
            y=np.array(init.y, dtype=float),
        )
    sign = -1.0 if literal_dual_update else 1.0
    for _ in range(max_iters):
        state.x = _x_update(problem, state.z, state.y)
        z_old = state.z
        state.z = _z_update(problem, state.x, state.y)
        r = problem.A @ state.x + problem.B @ state.z - problem.c
        state.y = state.y + sign * problem.alpha * r
        primal = float(np.linalg.norm(r))
        dual = problem.alpha * float(np.linalg.norm(problem.B @ (state.z - z_old)))
        state.iterate += 1
        state.primal_residuals.append(primal)
        state.dual_residuals.append(dual)
        if primal < tol and dual < tol:
            state.converged = True
            break
    return state


def dispatch_admm(
    problem: DispatchProblem,
    alpha: float = 1.0,
    max_iters: int = 20_000,
    tol: float = 1e-8,
) -> tuple[np.ndarray, AdmmState]:
    """Solve economic dispatch by consensus between generators and demand copies.

    The problem is split as ``x_i - z_i = 0`` with the demand constraint
    ``sum(z) = demand`` carried by the z-block. Each x-update is an
    independent clamped scalar prox of the generator cost; the z-update is
    the closed-form shift projecting onto the demand hyperplane; dual
    updates are per-generator ascent steps.
    """
    if alpha <= 0.0:
        raise ValueError("penalty alpha must be positive")
    n = problem.n_gens
    q2 = 2.0 * problem.quad
    x = np.zeros(n)
    z = np.full(n, problem.demand / n)
    y = np.zeros(n)
    state = AdmmState(x=x, z=z, y=y)
    for _ in range(max_iters):
        # argmin_i q_i x^2 + r_i x + y_i x + (alpha/2)(x - z_i)^2, clamped
        x = (alpha * z - problem.lin - y) / (q2 + alpha)
        x = np.clip(x, problem.x_min, problem.x_max)
        z_old = z
        w = x + y / alpha
        z = w + (problem.demand - w.sum()) / n
        r = x - z
        y = y + alpha * r
        state.iterate += 1
        primal = float(np.linalg.norm(r))
        dual = alpha * float(np.linalg.norm(z - z_old))
        state.primal_residuals.append(primal)
        state.dual_residuals.append(dual)
        if primal < tol and dual < tol and abs(x.sum() - problem.demand) <= tol:
            state.converged = True
            break
    state.x, state.z, state.y = x, z, y
    return x, state


def dispatch_kkt(problem: DispatchProblem, tol: float = 1e-12) -> np.ndarray:
    """Closed-form dispatch by bisection on the marginal price.

    At price ``nu`` each generator produces ``clip((nu - lin_i)/(2 quad_i),
    x_min_i, x_max_i)``; total output is continuous and non-decreasing in
    ``nu``, so the demand-matching price is found by bisection. Serves as an
    oracle independent of the ADMM iteration.
    """

    def supply(nu: float) -> np.ndarray:
        return np.clip((nu - problem.lin) / (2.0 * problem.quad),
                       problem.x_min, problem.x_max)

    lo, hi = float(problem.lin.min()) - 1.0, float(problem.lin.max()) + 1.0
    while supply(lo).sum() > problem.demand and lo > -1e18:
        lo = 2.0 * lo - abs(hi)
    while supply(hi).sum() < problem.demand and hi < 1e18:
        hi = 2.0 * hi + abs(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if supply(mid).sum() < problem.demand:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, abs(hi)):
            break
    return supply(0.5 * (lo + hi))
