"""Regret and constraint-violation metrics plus the offline comparator solvers."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .distributed import NetworkRun
from .problems import ConstraintSet, LossSequence

__all__ = [
    "MetricsTrace",
    "offline_oracle",
    "per_round_oracle",
    "per_round_oracle_series",
    "system_regret",
    "cacv",
    "stationarity_stats",
    "metrics_trace",
]


def _power_iteration(H: np.ndarray, iters: int = 200, tol: float = 1e-12) -> float:
    """Largest eigenvalue of a symmetric PSD matrix, deterministic start."""
    d = H.shape[0]
    v = np.ones(d) / np.sqrt(d)
    lam = 0.0
    for _ in range(iters):
        w = H @ v
        nrm = float(np.linalg.norm(w))
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        lam_new = float(v @ H @ v)
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new
        lam = lam_new
    return lam


def _solve_box_quadratic(
    H: np.ndarray,
    c: np.ndarray,
    cset: ConstraintSet,
    tol: float,
    max_iters: int = 20_000,
) -> np.ndarray:
    """Minimise ``(1/2) x'Hx - c'x`` over the box by accelerated projected gradient.

    Stops when the gradient-mapping norm drops below ``tol``; raises if the
    iteration budget runs out first.
    """
    lip = _power_iteration(H)
    if lip <= 0.0:
        return cset.project(np.zeros(cset.dim))
    step = 1.0 / lip
    x = cset.project(np.zeros(cset.dim))
    v = x.copy()
    t_acc = 1.0
    for _ in range(max_iters):
        grad = H @ v - c
        x_new = cset.project(v - step * grad)
        # Gradient-based adaptive restart keeps the momentum from cycling.
        if float(grad @ (x_new - x)) > 0.0:
            t_acc = 1.0
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_acc * t_acc))
        v = x_new + ((t_acc - 1.0) / t_new) * (x_new - x)
        x, t_acc = x_new, t_new
        gmap = float(np.linalg.norm((x - cset.project(x - step * (H @ x - c))) / step))
        if gmap <= tol:
            return x
    raise RuntimeError(
        f"offline comparator did not reach gradient-mapping tolerance {tol} "
        f"within {max_iters} iterations"
    )


def offline_oracle(
    losses: LossSequence, cset: ConstraintSet, tol: float = 1e-9,
    max_iters: int = 20_000,
) -> np.ndarray:
    """Best fixed decision in hindsight for the whole-horizon system objective.

    Minimises ``sum_{i,t} (a_it' x - b_it)^2 / 2`` over the box; for the
    regression family this is a box-constrained least-squares problem with
    Hessian ``sum a a'``.
    """
    H = np.einsum("itd,ite->de", losses.a, losses.a)
    c = np.einsum("itd,it->d", losses.a, losses.b)
    return _solve_box_quadratic(H, c, cset, tol, max_iters)


def per_round_oracle(
    losses: LossSequence, t: int, cset: ConstraintSet, tol: float = 1e-9,
    max_iters: int = 20_000,
) -> np.ndarray:
    """Minimiser of the round-``t`` system objective (0-based round index)."""
    a_t = losses.a[:, t, :]
    H = a_t.T @ a_t
    c = a_t.T @ losses.b[:, t]
    return _solve_box_quadratic(H, c, cset, tol, max_iters)


def per_round_oracle_series(
    losses: LossSequence, cset: ConstraintSet, tol: float = 1e-9
) -> np.ndarray:
    """Stack of per-round minimisers, shape ``(horizon, dim)``."""
    out = np.zeros((losses.horizon, losses.dim))
    for t in range(losses.horizon):
        out[t] = per_round_oracle(losses, t, cset, tol)
    return out


def system_regret(run: NetworkRun, x_star: np.ndarray) -> np.ndarray:
    """Worst-agent cumulative system loss gap against the fixed comparator.

    Entry ``t`` is ``max_i sum_{s<=t} sum_j [ l_js(x_i(s)) - l_js(x_star) ]``,
    evaluated for every prefix with the full-horizon comparator.
    """
    seq = run.sequence
    T, n = run.horizon, run.n_agents
    x_star = np.asarray(x_star, dtype=float)
    out = np.zeros(T)
    cum = np.zeros(n)
    for t in range(T):
        a_t = seq.a[:, t, :]  # (N_losses, d)
        b_t = seq.b[:, t]
        resid = a_t @ run.points[t].T - b_t[:, None]  # (loss j, agent i)
        inst = 0.5 * np.sum(resid * resid, axis=0)
        base = a_t @ x_star - b_t
        cum += inst - 0.5 * float(base @ base)
        out[t] = cum.max()
    return out


def cacv(run: NetworkRun, cset: ConstraintSet | None = None) -> np.ndarray:
    """Cumulative sum over rounds, agents and constraints of positive parts."""
    cset = run.cset if cset is None else cset
    lo = np.clip(cset.lower - run.points, 0.0, None)
    hi = np.clip(run.points - cset.upper, 0.0, None)
    per_round = lo.sum(axis=(1, 2)) + hi.sum(axis=(1, 2))
    return np.cumsum(per_round)


def stationarity_stats(series: np.ndarray, window: float = 0.5) -> np.ndarray:
    """Per-coordinate population standard deviation over the trailing window."""
    if not (0.0 < window <= 1.0):
        raise ValueError("window must lie in (0, 1]")
    series = np.asarray(series, dtype=float)
    if series.ndim == 1:
        series = series[:, None]
    T = series.shape[0]
    if T < 1:
        raise ValueError("series must be non-empty")
    tail = int(np.ceil(window * T))
    return series[T - tail:].std(axis=0)


@dataclass(frozen=True, eq=False)
class MetricsTrace:
    """Prefix regret/violation curves and the comparators that produced them."""

    sreg: np.ndarray
    cacv: np.ndarray
    x_star: np.ndarray
    x_star_t: np.ndarray | None = None

    @property
    def horizon(self) -> int:
        return self.sreg.shape[0]

    @property
    def asr(self) -> np.ndarray:
        return self.sreg / np.arange(1, self.horizon + 1)

    @property
    def acv(self) -> np.ndarray:
        return self.cacv / np.arange(1, self.horizon + 1)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["T", "sreg", "cacv", "asr", "acv"])
            asr, acv = self.asr, self.acv
            for t in range(self.horizon):
                writer.writerow([
                    t + 1,
                    repr(float(self.sreg[t])),
                    repr(float(self.cacv[t])),
                    repr(float(asr[t])),
                    repr(float(acv[t])),
                ])


def metrics_trace(
    run: NetworkRun,
    tol: float = 1e-9,
    with_per_round: bool = False,
) -> MetricsTrace:
    """Compute the full metrics trace of a completed run."""
    x_star = offline_oracle(run.sequence, run.cset, tol=tol)
    x_star_t = (
        per_round_oracle_series(run.sequence, run.cset, tol=tol)
        if with_per_round
        else None
    )
    return MetricsTrace(
        sreg=system_regret(run, x_star),
        cacv=cacv(run),
        x_star=x_star,
        x_star_t=x_star_t,
    )
