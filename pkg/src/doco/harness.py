"""Experiment orchestration: seeded multi-run experiments and file artifacts.

Every experiment writes delimited outputs plus a metadata JSON that records
all parameters, derived seeds and algorithm-variant flags, so a run can be
regenerated byte-identically from the metadata alone. Figures are rendered
alongside the CSVs unless plotting is disabled.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import plotting
from .admm import dispatch_admm, dispatch_kkt
from .distributed import NetworkRun, run_distributed
from .graphs import (
    Graph,
    WeightMatrix,
    generate_random_connected_graph,
    max_degree_weights,
    write_edge_list,
    write_weights_csv,
)
from .metrics import metrics_trace, per_round_oracle_series, stationarity_stats
from .online import run_ogd, full_info_schedule
from .problems import ConstraintSet, dispatch_problem, sample_regression_sequence

__all__ = [
    "ExperimentConfig",
    "DispatchConfig",
    "RunArtifacts",
    "run_example3",
    "compare_dro_do",
    "run_dispatch_demo",
    "run_single_learner",
]

# Stream labels keeping the per-purpose RNG substreams of a master seed apart.
_GRAPH_STREAM = 11
_LOSS_STREAM = 13
_AGENT_STREAM = 17


@dataclass
class ExperimentConfig:
    """Parameters of the networked regression experiments.

    Defaults reproduce the reference setup: 20 agents, dimension 2, the box
    [-1/2, 1/2]^2 with enclosing-ball radius ``upper * sqrt(dim)``, maximum-
    degree mixing weights and averaging over 10 runs.
    """

    n_agents: int = 20
    dim: int = 2
    lower: float = -0.5
    upper: float = 0.5
    horizon: int = 4096
    runs: int = 10
    feedback: str = "full"
    seed: int = 1
    edge_prob: float = 0.15
    constraint_mode: str = "long-term"
    theta: float = 1.0
    bandit_delta: float | None = None
    bandit_eta: float | None = None
    resample_graph: bool = False
    independent_horizons: list[int] = field(default_factory=list)
    output_dir: str = "doco-out"
    write_traces: bool = True
    plots: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.n_agents < 1:
            raise ValueError("n_agents must be >= 1")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not self.lower < self.upper:
            raise ValueError("lower must be strictly below upper")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if not (0.0 < self.edge_prob <= 1.0):
            raise ValueError("edge_prob must lie in (0, 1]")
        if self.feedback not in ("full", "bandit"):
            raise ValueError(f"unknown feedback mode: {self.feedback!r}")
        if self.constraint_mode not in ("long-term", "project"):
            raise ValueError(f"unknown constraint mode: {self.constraint_mode!r}")

    @property
    def cset(self) -> ConstraintSet:
        return ConstraintSet(dim=self.dim, lower=self.lower, upper=self.upper)

    @property
    def set_radius(self) -> float:
        return self.cset.radius

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class DispatchConfig:
    """Generator fleet, demand and solver settings for the dispatch demo."""

    quad: list = field(default_factory=lambda: [1.0, 2.0, 4.0])
    lin: list | None = None
    const: list | None = None
    x_min: list | None = None
    x_max: list | None = None
    demand: float = 10.0
    alpha: float = 1.0
    tol: float = 1e-8
    max_iters: int = 20_000
    output_dir: str = "doco-out"
    plots: bool = True

    @classmethod
    def from_dict(cls, data: dict) -> "DispatchConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "DispatchConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def problem(self):
        return dispatch_problem(
            quad=self.quad, demand=self.demand, lin=self.lin, const=self.const,
            x_min=self.x_min, x_max=self.x_max,
        )


@dataclass
class RunArtifacts:
    """Paths of everything an experiment wrote plus in-memory results."""

    output_dir: Path
    files: list[str]
    metadata: dict
    data: dict


def _write_metadata(directory: Path, metadata: dict) -> str:
    path = directory / "metadata.json"
    path.write_text(json.dumps(metadata, indent=2, sort_keys=True) + "\n")
    return path.name


def _write_avg_metrics(directory: Path, sreg, cacv) -> str:
    t_axis = np.arange(1, sreg.shape[0] + 1)
    path = directory / "metrics_avg.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["T", "sreg", "cacv", "asr", "acv"])
        for t in range(sreg.shape[0]):
            writer.writerow([
                int(t_axis[t]),
                repr(float(sreg[t])),
                repr(float(cacv[t])),
                repr(float(sreg[t] / t_axis[t])),
                repr(float(cacv[t] / t_axis[t])),
            ])
    return path.name


def _build_network(config: ExperimentConfig, run_index: int = 0) -> tuple[Graph, object]:
    entropy = [config.seed, _GRAPH_STREAM]
    if config.resample_graph:
        entropy.append(run_index)
    graph = generate_random_connected_graph(
        config.n_agents, config.edge_prob, seed=entropy
    )
    return graph, max_degree_weights(graph)


def _run_once(config: ExperimentConfig, graph, weights, run_index: int):
    losses = sample_regression_sequence(
        config.n_agents, config.dim, config.horizon,
        seed=[config.seed, _LOSS_STREAM, run_index],
    )
    run = run_distributed(
        graph, weights, losses, config.cset,
        mode=config.feedback,
        seed=(config.seed, _AGENT_STREAM, run_index),
        theta=config.theta,
        constraint_mode=config.constraint_mode,
        delta=config.bandit_delta,
        eta=config.bandit_eta,
    )
    return losses, run


def run_example3(config: ExperimentConfig) -> RunArtifacts:
    """Networked regression experiment averaged over seeded runs."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: list[str] = []

    graph, weights = _build_network(config)
    sregs, cacvs = [], []
    runs_meta = []
    for r in range(config.runs):
        if config.resample_graph and r > 0:
            graph, weights = _build_network(config, run_index=r)
        losses, run = _run_once(config, graph, weights, r)
        trace = metrics_trace(run)
        sregs.append(trace.sreg)
        cacvs.append(trace.cacv)
        runs_meta.append({
            "run": r,
            "loss_seed": [config.seed, _LOSS_STREAM, r],
            "agent_seed": [config.seed, _AGENT_STREAM, r],
            "x_star": [float(v) for v in trace.x_star],
        })
        if config.write_traces:
            name = f"run_{r:02d}_trace.csv"
            run.to_csv(out / name)
            files.append(name)
        algo_params = run.params

    sreg_avg = np.mean(np.stack(sregs), axis=0)
    cacv_avg = np.mean(np.stack(cacvs), axis=0)
    asr_avg = sreg_avg / np.arange(1, config.horizon + 1)
    acv_avg = cacv_avg / np.arange(1, config.horizon + 1)

    files.append(_write_avg_metrics(out, sreg_avg, cacv_avg))
    write_edge_list(graph, out / "graph.edges")
    write_weights_csv(weights, out / "weights.csv")
    files += ["graph.edges", "weights.csv"]

    independent = {}
    for hz in config.independent_horizons:
        sub = ExperimentConfig.from_dict({
            **_config_dict(config), "horizon": hz,
            "independent_horizons": [], "write_traces": False, "plots": False,
        })
        g2, w2 = _build_network(sub)
        vals_a, vals_c = [], []
        for r in range(sub.runs):
            _, run = _run_once(sub, g2, w2, r)
            trace = metrics_trace(run)
            vals_a.append(trace.asr[-1])
            vals_c.append(trace.acv[-1])
        independent[str(hz)] = {
            "asr": float(np.mean(vals_a)), "acv": float(np.mean(vals_c)),
        }

    metadata = {
        "command": "example3",
        "config": _config_dict(config),
        "set_radius": config.set_radius,
        "algorithm": algo_params,
        "runs": runs_meta,
        "independent_horizons": independent,
        "rng": "numpy.random.Generator(PCG64)",
        "numpy_version": np.__version__,
    }
    files.append(_write_metadata(out, metadata))

    if config.plots:
        files.append(plotting.plot_metric_curves(
            np.arange(1, config.horizon + 1), asr_avg, acv_avg,
            out / "example3_asr_acv.png",
            title=f"{config.feedback} feedback, {config.runs}-run average",
        ))

    data = {
        "asr": asr_avg, "acv": acv_avg,
        "sreg": sreg_avg, "cacv": cacv_avg,
        "per_run_sreg": sregs, "per_run_cacv": cacvs,
        "per_run_asr": [s / np.arange(1, config.horizon + 1) for s in sregs],
        "per_run_acv": [c / np.arange(1, config.horizon + 1) for c in cacvs],
        "graph": graph, "weights": weights,
    }
    return RunArtifacts(output_dir=out, files=files, metadata=metadata, data=data)


def compare_dro_do(config: ExperimentConfig) -> RunArtifacts:
    """Repeated per-round offline optimisation against the online network.

    On a shared loss sequence the per-round system minimisers are computed
    for every round and compared, in their first coordinate, against the
    online decisions of agents 1 and 2. Trailing-window standard deviations
    of the three series are averaged over the configured number of runs.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: list[str] = []

    graph, weights = _build_network(config)
    stds_offline, stds_a1, stds_a2 = [], [], []
    first_series = None
    for r in range(config.runs):
        losses, run = _run_once(config, graph, weights, r)
        offline = per_round_oracle_series(losses, config.cset)
        a1 = run.points[:, 0, 0]
        a2 = run.points[:, min(1, config.n_agents - 1), 0]
        stds_offline.append(stationarity_stats(offline[:, 0])[0])
        stds_a1.append(stationarity_stats(a1)[0])
        stds_a2.append(stationarity_stats(a2)[0])
        if r == 0:
            first_series = (offline[:, 0].copy(), a1.copy(), a2.copy())
            algo_params = run.params
            if config.write_traces:
                run.to_csv(out / "run_00_trace.csv")
                files.append("run_00_trace.csv")

    offline0, a1_0, a2_0 = first_series
    with open(out / "comparison.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "offline_x1", "agent1_x1", "agent2_x1"])
        for t in range(config.horizon):
            writer.writerow([
                t + 1, repr(float(offline0[t])),
                repr(float(a1_0[t])), repr(float(a2_0[t])),
            ])
    files.append("comparison.csv")

    avg = {
        "offline": float(np.mean(stds_offline)),
        "agent1": float(np.mean(stds_a1)),
        "agent2": float(np.mean(stds_a2)),
    }
    with open(out / "stationarity.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series_name", "coord", "std"])
        for name, val in avg.items():
            writer.writerow([name, 1, repr(val)])
    files.append("stationarity.csv")

    metadata = {
        "command": "compare",
        "config": _config_dict(config),
        "algorithm": algo_params,
        "stationarity_window": 0.5,
        "trailing_std_avg": avg,
        "rng": "numpy.random.Generator(PCG64)",
        "numpy_version": np.__version__,
    }
    files.append(_write_metadata(out, metadata))

    if config.plots:
        files.append(plotting.plot_comparison(
            np.arange(1, config.horizon + 1), offline0, a1_0, a2_0,
            out / "compare.png",
        ))

    data = {"trailing_std": avg, "series": first_series,
            "std_lists": (stds_offline, stds_a1, stds_a2)}
    return RunArtifacts(output_dir=out, files=files, metadata=metadata, data=data)


def run_dispatch_demo(config: DispatchConfig) -> RunArtifacts:
    """Solve a dispatch instance and report the gap to the price oracle."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: list[str] = []

    problem = config.problem()
    allocations, state = dispatch_admm(
        problem, alpha=config.alpha, max_iters=config.max_iters, tol=config.tol
    )
    reference = dispatch_kkt(problem)
    gap = float(np.max(np.abs(allocations - reference)))

    with open(out / "allocations.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["generator", "allocation", "cost"])
        costs = problem.per_gen_cost(allocations)
        for i in range(problem.n_gens):
            writer.writerow([i + 1, repr(float(allocations[i])), repr(float(costs[i]))])
    files.append("allocations.csv")

    state.residuals_to_csv(out / "residuals.csv")
    files.append("residuals.csv")

    metadata = {
        "command": "dispatch",
        "config": asdict(config),
        "converged": state.converged,
        "iterations": state.iterate,
        "allocations": [float(v) for v in allocations],
        "kkt_allocations": [float(v) for v in reference],
        "max_abs_gap_to_kkt": gap,
        "total_cost": problem.cost(allocations),
    }
    files.append(_write_metadata(out, metadata))

    if config.plots:
        files.append(plotting.plot_dispatch_residuals(
            state.primal_residuals, state.dual_residuals, out / "dispatch.png"
        ))

    data = {"allocations": allocations, "kkt": reference, "gap": gap, "state": state}
    return RunArtifacts(output_dir=out, files=files, metadata=metadata, data=data)


def run_single_learner(config: ExperimentConfig) -> RunArtifacts:
    """Single-learner online descent on the regression losses (n_agents is ignored)."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: list[str] = []
    cset = config.cset

    grad_bound = np.sqrt(config.dim) * (np.sqrt(config.dim) * cset.radius + 1.0)
    schedule = full_info_schedule(cset, grad_bound=grad_bound)
    regrets = []
    first_traj = None
    for r in range(config.runs):
        losses = sample_regression_sequence(
            1, config.dim, config.horizon, seed=[config.seed, _LOSS_STREAM, r]
        )
        per_round = [losses.loss(0, t) for t in range(config.horizon)]
        traj = run_ogd(
            per_round, config.horizon, cset,
            mode=config.feedback, schedule=schedule,
            seed=(config.seed, _AGENT_STREAM, r),
            delta=config.bandit_delta, eta=config.bandit_eta,
        )
        run = NetworkRun(
            points=traj.points[:, None, :], losses=traj.losses[:, None],
            sequence=losses, cset=cset,
            weights=WeightMatrix(entries=np.ones((1, 1))),
            feedback=config.feedback, params={"mode": config.feedback},
        )
        trace = metrics_trace(run)
        regrets.append(trace.sreg)
        if r == 0:
            first_traj = traj
            if config.write_traces:
                traj.to_csv(out / "trace.csv")
                files.append("trace.csv")

    sreg_avg = np.mean(np.stack(regrets), axis=0)
    files.append(_write_avg_metrics(out, sreg_avg, np.zeros_like(sreg_avg)))

    metadata = {
        "command": "ogd",
        "config": _config_dict(config),
        "schedule": {"scale": schedule.scale, "exponent": schedule.exponent},
        "rng": "numpy.random.Generator(PCG64)",
        "numpy_version": np.__version__,
    }
    files.append(_write_metadata(out, metadata))

    if config.plots:
        t_axis = np.arange(1, config.horizon + 1)
        files.append(plotting.plot_regret(
            t_axis, sreg_avg / t_axis, out / "ogd_regret.png"
        ))

    data = {"avg_regret": sreg_avg, "trajectory": first_traj}
    return RunArtifacts(output_dir=out, files=files, metadata=metadata, data=data)


def _config_dict(config: ExperimentConfig) -> dict:
    return asdict(config)
