"""JSON config files for evolution runs and batches.

An evolution config looks like::

    {
      "initial": {"random": {"n": 50, "m": 300, "k": 3, "seed": 7}},
      "solver": {"heuristic": "static", "first_phase": true, "decision_limit": 1000000},
      "stages": [{"operator": "remove", "score_rule": "any",
                  "status_constraint": "unsat", "metric": "decisions",
                  "duration_per_clause": 10}, ...],
      "seed": 7, "break_window": null, "break_size": 3,
      "record_every": 1, "archive_best": true,
      "weights": {"increment": 1.0, "decay": 0.95, "floor": 1.0}
    }

``initial`` may instead be ``{"dimacs": "path.cnf"}``; relative paths are
resolved against the config file's directory.  A run manifest carries its
config under the ``"config"`` key and is accepted wherever a config is.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Mapping, Optional, Union

from .cnf import CnfFormula, RandomFormulaSpec, read_dimacs_file
from .evolution import (
    ConfigError,
    EvolutionConfig,
    StagePlan,
    WeightParams,
    with_seed,
)
from .solver import SolverConfig


def config_to_dict(config: EvolutionConfig, initial_path: Optional[str] = None) -> dict:
    if isinstance(config.initial, RandomFormulaSpec):
        s = config.initial
        initial: dict[str, Any] = {
            "random": {"n": s.num_variables, "m": s.num_clauses, "k": s.clause_width, "seed": s.seed}
        }
    else:
        if initial_path is None:
            raise ConfigError("a formula-valued initial needs a DIMACS path to be serialized")
        initial = {"dimacs": str(initial_path)}
    return {
        "initial": initial,
        "solver": config.solver_config.to_dict(),
        "stages": [stage.to_dict() for stage in config.stages],
        "seed": config.seed,
        "break_window": config.break_window,
        "break_size": config.break_size,
        "record_every": config.record_every,
        "archive_best": config.archive_best,
        "weights": asdict(config.weight_params),
        "clause_width": config.clause_width,
    }


def config_from_dict(data: Mapping, base_dir: Union[str, Path, None] = None) -> EvolutionConfig:
    if "config" in data:
        data = data["config"]
    try:
        init = data["initial"]
        if "random" in init:
            r = init["random"]
            initial: Union[CnfFormula, RandomFormulaSpec] = RandomFormulaSpec(
                int(r["n"]), int(r["m"]), int(r.get("k", 3)), int(r.get("seed", data.get("seed", 0)))
            )
            initial.validate()
        elif "dimacs" in init:
            path = Path(init["dimacs"])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            initial = read_dimacs_file(path)
        else:
            raise ConfigError("initial must hold 'random' or 'dimacs'")
        return EvolutionConfig(
            initial=initial,
            stages=[StagePlan.from_dict(s) for s in data["stages"]],
            solver_config=SolverConfig.from_dict(data.get("solver", {})),
            seed=int(data.get("seed", 0)),
            break_window=data.get("break_window"),
            break_size=int(data.get("break_size", 3)),
            record_every=int(data.get("record_every", 1)),
            archive_best=bool(data.get("archive_best", True)),
            weight_params=WeightParams(**data.get("weights", {})),
            clause_width=data.get("clause_width"),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, OSError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def load_config(path: Union[str, Path]) -> EvolutionConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(data, base_dir=path.parent)


@dataclass(frozen=True)
class BatchSpec:
    base: EvolutionConfig
    num_runs: int
    base_seed: int = 0
    seed_increment: int = 1

    def __post_init__(self):
        if self.num_runs < 1:
            raise ConfigError("num_runs must be at least 1")
        if self.seed_increment == 0 and self.num_runs > 1:
            raise ConfigError("seed_increment 0 would repeat seeds")

    def seeds(self) -> list[int]:
        return [(self.base_seed + i * self.seed_increment) % 2**64 for i in range(self.num_runs)]

    def configs(self) -> list[EvolutionConfig]:
        return [with_seed(self.base, s) for s in self.seeds()]


def load_batch_spec(path: Union[str, Path]) -> BatchSpec:
    """``{"base": <config>, "num_runs": 20, "base_seed": 1, "seed_increment": 1}``"""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
        return BatchSpec(
            base=config_from_dict(data["base"], base_dir=path.parent),
            num_runs=int(data["num_runs"]),
            base_seed=int(data.get("base_seed", 0)),
            seed_increment=int(data.get("seed_increment", 1)),
        )
    except ConfigError:
        raise
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid batch spec {path}: {exc}") from exc
