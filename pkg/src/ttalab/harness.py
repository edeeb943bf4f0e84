"""Config-driven runs and step-size search.

run_experiment parses a flat JSON config, dispatches on run.mode, and writes
the trajectory CSV next to a JSON manifest recording config, code version,
seed and output paths.  Rerunning the same config produces byte-identical
CSV output (the manifest differs only in its wall-clock stamp).

grid_search runs one configuration per step size, each on its own derived
seed stream, and picks the step size with the smallest final expected 0-1
loss.  Runs that overflowed rank last; ties break toward the smaller step.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .dynamics import ExperimentConfig, Mode, TrajectoryPoint, run_population, run_stochastic
from .model import derive_stream_seed
from .serialize import RunManifest, config_flat, parse_config_file, write_manifest, write_trajectory_csv

__all__ = ["GridPoint", "run_config", "run_experiment", "grid_search"]


@dataclass(frozen=True)
class GridPoint:
    """Summary of one step-size trial."""

    eta: float
    seed: int
    final_loss01: float
    overflow: bool


def run_config(config: ExperimentConfig) -> list[TrajectoryPoint]:
    """Dispatch a config to its runner."""
    if config.mode is Mode.STOCHASTIC:
        return run_stochastic(config)
    return run_population(config)


def run_experiment(config_path: str | Path, out_dir: str | Path = ".") -> RunManifest:
    """Run the experiment described by a config file; write CSV + manifest."""
    config_path = Path(config_path)
    config = parse_config_file(config_path)
    points = run_config(config)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = config_path.stem
    csv_path = out / f"{stem}.trajectory.csv"
    manifest_path = out / f"{stem}.manifest.json"
    write_trajectory_csv(csv_path, points, config_flat(config))
    return write_manifest(manifest_path, config, outputs=[csv_path],
                          notes={"points": len(points),
                                 "overflow": points[-1].overflow})


def grid_search(base_config: ExperimentConfig,
                eta_grid: list[float]) -> tuple[float, list[GridPoint]]:
    """Run base_config once per step size and select the best one.

    Step sizes are processed in sorted order and each gets its own seed
    stream derived from the base seed, so the outcome does not depend on the
    order the grid was supplied in.
    """
    etas = sorted(set(float(e) for e in eta_grid))
    if not etas:
        raise ValueError("eta grid must be non-empty")
    rows: list[GridPoint] = []
    for index, eta in enumerate(etas):
        seed = derive_stream_seed(base_config.seed, index)
        config = ExperimentConfig(
            model=base_config.model, loss=base_config.loss, eta=eta,
            mode=base_config.mode, horizon=base_config.horizon, seed=seed,
            w_init=base_config.w_init, batch_size=base_config.batch_size)
        points = run_config(config)
        rows.append(GridPoint(eta=eta, seed=seed,
                              final_loss01=points[-1].loss01,
                              overflow=points[-1].overflow))
    best = min(rows, key=lambda p: (p.overflow, p.final_loss01, p.eta))
    return best.eta, rows
