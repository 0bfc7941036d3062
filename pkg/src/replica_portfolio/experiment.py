"""Monte Carlo sweeps over the scenario ratio, paired with closed-form predictions."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .analytic import DomainError, Prediction, predict
from .market import ReturnDistribution, generate, rescale
from .solvers import BPParams, SolverError, SolverParams, SteepestDescentParams, parse_method, solve
from .core import SolverId
from .variance_model import (
    InverseMoments,
    VarianceSpec,
    analytic_moments,
    preset,
    spec_from_dict,
    spec_to_dict,
)

log = logging.getLogger(__name__)

CSV_HEADER = (
    "alpha",
    "p",
    "eps_mean",
    "eps_stderr",
    "qw_mean",
    "qw_stderr",
    "eps_quenched",
    "qw_quenched",
    "eps_annealed",
    "qw_annealed",
)


class ResultFormatError(ValueError):
    """A persisted sweep result could not be parsed."""


class SweepFailed(RuntimeError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    n_assets: int
    alpha_grid: tuple[float, ...]
    samples: int
    spec: VarianceSpec
    dist: ReturnDistribution = ReturnDistribution.GAUSSIAN
    method: SolverId = SolverId.EXACT
    base_seed: int = 0
    gamma: float = 1.0
    solver_params: SolverParams = None
    preset_name: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha_grid", tuple(float(a) for a in self.alpha_grid))
        object.__setattr__(self, "dist", ReturnDistribution.parse(self.dist))
        object.__setattr__(self, "method", parse_method(self.method))
        if self.n_assets < 1:
            raise ValueError("n_assets must be >= 1")
        if self.samples < 2:
            raise ValueError("samples must be >= 2 for a standard error")
        if not self.alpha_grid:
            raise ValueError("alpha grid is empty")
        if any(not a > 1 for a in self.alpha_grid):
            raise DomainError(f"every alpha must exceed 1, got {self.alpha_grid}")
        if list(self.alpha_grid) != sorted(self.alpha_grid):
            raise ValueError("alpha grid must be ascending")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    @classmethod
    def from_preset(cls, name: str, **kwargs: Any) -> "SweepConfig":
        return cls(spec=preset(name), preset_name=name, **kwargs)

    def scenarios(self, alpha: float) -> int:
        return max(1, int(round(alpha * self.n_assets)))

    def to_dict(self) -> dict[str, Any]:
        params = None
        if self.solver_params is not None:
            params = asdict(self.solver_params)
            if isinstance(self.solver_params, BPParams) and math.isinf(params["beta"]):
                params["beta"] = "inf"
        return {
            "n_assets": self.n_assets,
            "alpha_grid": list(self.alpha_grid),
            "samples": self.samples,
            "spec": spec_to_dict(self.spec),
            "preset": self.preset_name,
            "dist": self.dist.value,
            "method": self.method.value,
            "base_seed": self.base_seed,
            "gamma": self.gamma,
            "solver_params": params,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SweepConfig":
        method = parse_method(d["method"])
        raw = d.get("solver_params")
        params: SolverParams = None
        if raw is not None:
            if method is SolverId.STEEPEST_DESCENT:
                params = SteepestDescentParams(**raw)
            elif method is SolverId.BELIEF_PROPAGATION:
                raw = dict(raw)
                if raw.get("beta") == "inf":
                    raw["beta"] = math.inf
                params = BPParams(**raw)
        return cls(
            n_assets=d["n_assets"],
            alpha_grid=tuple(d["alpha_grid"]),
            samples=d["samples"],
            spec=spec_from_dict(d["spec"]),
            preset_name=d.get("preset"),
            dist=d["dist"],
            method=method,
            base_seed=d["base_seed"],
            gamma=d["gamma"],
            solver_params=params,
        )


@dataclass(frozen=True)
class AlphaRecord:
    alpha: float
    alpha_target: float
    p: int
    eps_mean: float
    eps_stderr: float
    qw_mean: float
    qw_stderr: float
    n_converged: int
    prediction: Prediction

    def row(self) -> dict[str, float]:
        return {
            "alpha": self.alpha,
            "p": self.p,
            "eps_mean": self.eps_mean,
            "eps_stderr": self.eps_stderr,
            "qw_mean": self.qw_mean,
            "qw_stderr": self.qw_stderr,
            "eps_quenched": self.prediction.epsilon_quenched,
            "qw_quenched": self.prediction.qw_quenched,
            "eps_annealed": self.prediction.epsilon_annealed,
            "qw_annealed": self.prediction.qw_annealed,
        }


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    records: tuple[AlphaRecord, ...]
    metadata: dict[str, Any] = field(default_factory=dict)


def instance_seed(base_seed: int, alpha_index: int, sample: int) -> int:
    """64-bit seed for one (alpha, sample) cell, independent of execution order."""
    ss = np.random.SeedSequence([base_seed, alpha_index, sample])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _run_instance(cfg: SweepConfig, alpha_index: int, sample: int, p: int) -> tuple[float, float] | str:
    seed = instance_seed(cfg.base_seed, alpha_index, sample)
    X = generate(cfg.n_assets, p, cfg.spec, cfg.dist, seed)
    X = rescale(X, cfg.gamma)
    try:
        report = solve(X, cfg.method, cfg.solver_params)
    except SolverError as exc:
        return f"{type(exc).__name__}: {exc}"
    if not report.converged:
        return f"no convergence after {report.iterations} iterations (residual {report.residual:.3g})"
    return report.epsilon, report.q_w


def _mean_stderr(values: np.ndarray) -> tuple[float, float]:
    if values.size < 2:
        return float(values.mean()), math.nan
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size))


def run_sweep(cfg: SweepConfig, workers: int = 1) -> SweepResult:
    """Generate, solve and aggregate ``cfg.samples`` instances per grid point.

    Each (alpha, sample) cell derives its own seed, and aggregation runs in
    sample order, so the result does not depend on ``workers``.
    """
    started = time.perf_counter()
    moments: InverseMoments = analytic_moments(cfg.spec)
    cells = []
    for a_idx, alpha in enumerate(cfg.alpha_grid):
        p = cfg.scenarios(alpha)
        if p <= cfg.n_assets:
            raise DomainError(
                f"alpha={alpha} gives p={p} <= N={cfg.n_assets}; increase alpha or N"
            )
        cells.extend((a_idx, r, p) for r in range(cfg.samples))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda c: _run_instance(cfg, *c), cells))
    else:
        outcomes = [_run_instance(cfg, *c) for c in cells]

    records = []
    for a_idx, alpha in enumerate(cfg.alpha_grid):
        block = outcomes[a_idx * cfg.samples : (a_idx + 1) * cfg.samples]
        good = [o for o in block if not isinstance(o, str)]
        failures = [o for o in block if isinstance(o, str)]
        if not good:
            raise SweepFailed(
                f"all {cfg.samples} samples failed at alpha={alpha} with solver "
                f"{cfg.method.value}; first failure: {failures[0]}"
            )
        if failures:
            log.warning("alpha=%g: %d/%d samples dropped (%s)", alpha, len(failures), cfg.samples, failures[0])
        eps = np.array([g[0] for g in good])
        qw = np.array([g[1] for g in good])
        p = cfg.scenarios(alpha)
        realized = p / cfg.n_assets
        eps_mean, eps_se = _mean_stderr(eps)
        qw_mean, qw_se = _mean_stderr(qw)
        records.append(
            AlphaRecord(
                alpha=realized,
                alpha_target=alpha,
                p=p,
                eps_mean=eps_mean,
                eps_stderr=eps_se,
                qw_mean=qw_mean,
                qw_stderr=qw_se,
                n_converged=len(good),
                prediction=predict(realized, moments, cfg.gamma),
            )
        )
    metadata = {
        "version": __version__,
        "wall_time_s": time.perf_counter() - started,
    }
    return SweepResult(cfg, tuple(records), metadata)


# -- comparison -------------------------------------------------------------


def _z(observed: float, predicted: float, stderr: float) -> float:
    diff = observed - predicted
    if stderr > 0:
        return diff / stderr
    return 0.0 if diff == 0 else math.copysign(math.inf, diff)


@dataclass(frozen=True)
class ComparisonRow:
    alpha: float
    eps_z_quenched: float
    qw_z_quenched: float
    eps_z_annealed: float
    qw_z_annealed: float

    @property
    def flagged(self) -> bool:
        """Simulation deviates from the quenched prediction by more than 3 standard errors."""
        return abs(self.eps_z_quenched) > 3 or abs(self.qw_z_quenched) > 3

    def as_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["flagged"] = self.flagged
        return d


def compare(result: SweepResult) -> list[ComparisonRow]:
    """z-scores of the ensemble means against quenched and annealed predictions."""
    rows = []
    for rec in result.records:
        pred = rec.prediction
        rows.append(
            ComparisonRow(
                alpha=rec.alpha,
                eps_z_quenched=_z(rec.eps_mean, pred.epsilon_quenched, rec.eps_stderr),
                qw_z_quenched=_z(rec.qw_mean, pred.qw_quenched, rec.qw_stderr),
                eps_z_annealed=_z(rec.eps_mean, pred.epsilon_annealed, rec.eps_stderr),
                qw_z_annealed=_z(rec.qw_mean, pred.qw_annealed, rec.qw_stderr),
            )
        )
    return rows


def fraction_consistent(rows: Sequence[ComparisonRow], threshold: float = 3.0) -> float:
    ok = sum(abs(r.eps_z_quenched) <= threshold and abs(r.qw_z_quenched) <= threshold for r in rows)
    return ok / len(rows)


# -- persistence ------------------------------------------------------------


def result_to_dict(result: SweepResult, include_timing: bool = True) -> dict[str, Any]:
    metadata = dict(result.metadata)
    if not include_timing:
        metadata.pop("wall_time_s", None)
    records = []
    for rec in result.records:
        d = {k: v for k, v in asdict(rec).items() if k != "prediction"}
        d["prediction"] = rec.prediction.as_row()
        d["prediction"]["gamma"] = rec.prediction.gamma
        d["prediction"]["m1"] = rec.prediction.moments.m1
        d["prediction"]["m2"] = rec.prediction.moments.m2
        records.append(d)
    return {"config": result.config.to_dict(), "records": records, "metadata": metadata}


def dumps(result: SweepResult, include_timing: bool = True) -> str:
    return json.dumps(result_to_dict(result, include_timing), indent=2) + "\n"


def save(result: SweepResult, path: str | Path, include_timing: bool = True) -> None:
    Path(path).write_text(dumps(result, include_timing))


def _record_from_dict(d: dict[str, Any]) -> AlphaRecord:
    pred = d["prediction"]
    return AlphaRecord(
        alpha=d["alpha"],
        alpha_target=d["alpha_target"],
        p=d["p"],
        eps_mean=d["eps_mean"],
        eps_stderr=d["eps_stderr"],
        qw_mean=d["qw_mean"],
        qw_stderr=d["qw_stderr"],
        n_converged=d["n_converged"],
        prediction=Prediction(
            alpha=pred["alpha"],
            epsilon_quenched=pred["eps_quenched"],
            qw_quenched=pred["qw_quenched"],
            epsilon_annealed=pred["eps_annealed"],
            qw_annealed=pred["qw_annealed"],
            moments=InverseMoments(pred["m1"], pred["m2"]),
            gamma=pred["gamma"],
        ),
    )


def loads(text: str, source: str = "<string>") -> SweepResult:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        context = lines[exc.lineno - 1] if 0 < exc.lineno <= len(lines) else ""
        raise ResultFormatError(
            f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {context}"
        ) from exc
    try:
        config = SweepConfig.from_dict(raw["config"])
        records = tuple(_record_from_dict(r) for r in raw["records"])
        metadata = raw["metadata"]
    except KeyError as exc:
        raise ResultFormatError(f"{source}: missing field {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise ResultFormatError(f"{source}: {exc}") from exc
    return SweepResult(config, records, metadata)


def load(path: str | Path) -> SweepResult:
    path = Path(path)
    return loads(path.read_text(), source=str(path))


def to_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_HEADER, lineterminator="\n")
    writer.writeheader()
    for rec in result.records:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in rec.row().items()})
    return buf.getvalue()


def write_csv(result: SweepResult, path: str | Path) -> None:
    Path(path).write_text(to_csv(result))
