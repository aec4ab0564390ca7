"""Run configuration: strict JSON schema, no unknown keys, stable hashing."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..rl.sac import MODALITIES, TrainerConfig

OUT_DIR_ENV = "VOXPICK_OUT_DIR"


@dataclass
class RunConfig:
    modality: str = "proprio"
    scenario_file: str = ""
    seed: int = 0
    out_dir: str | None = None
    symmetry: bool = False
    ensembling: bool = False
    proprio_ablation: bool = False
    trainer: dict = field(default_factory=dict)
    eval: dict = field(default_factory=dict)
    demos: dict = field(default_factory=dict)

    _KNOWN = {
        "modality", "scenario_file", "seed", "out_dir", "symmetry",
        "ensembling", "proprio_ablation", "trainer", "eval", "demos",
    }
    _EVAL_KNOWN = {"n_trials", "base_seed", "scenario_set", "log_trajectories"}
    _DEMO_KNOWN = {"n", "noise_sigma", "seed", "file"}

    @staticmethod
    def from_dict(doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ValueError("run config must be a JSON object")
        unknown = set(doc) - RunConfig._KNOWN
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = RunConfig(**doc)
        cfg.validate()
        return cfg

    @staticmethod
    def load(path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        return RunConfig.from_dict(json.loads(path.read_text()))

    def validate(self):
        if self.modality not in MODALITIES:
            raise ValueError(f"modality must be one of {MODALITIES}")
        if not isinstance(self.seed, int):
            raise ValueError("seed must be an integer")
        for name, known in (("eval", self._EVAL_KNOWN), ("demos", self._DEMO_KNOWN)):
            extra = set(getattr(self, name)) - known
            if extra:
                raise ValueError(f"unknown {name} keys: {sorted(extra)}")
        trainer_known = set(TrainerConfig.__dataclass_fields__) - {"modality", "symmetry"}
        extra = set(self.trainer) - trainer_known
        if extra:
            raise ValueError(f"unknown trainer keys: {sorted(extra)}")
        if self.proprio_ablation and self.modality not in ("voxel", "voxel_only"):
            raise ValueError("proprio_ablation requires the voxel modality")

    def to_dict(self) -> dict:
        return {
            "modality": self.modality,
            "scenario_file": self.scenario_file,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "symmetry": self.symmetry,
            "ensembling": self.ensembling,
            "proprio_ablation": self.proprio_ablation,
            "trainer": self.trainer,
            "eval": self.eval,
            "demos": self.demos,
        }

    def hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()
        ).hexdigest()[:16]

    def trainer_config(self) -> TrainerConfig:
        modality = self.modality
        if self.proprio_ablation and modality == "voxel":
            modality = "voxel_only"
        return TrainerConfig(modality=modality, symmetry=self.symmetry, **self.trainer)

    def resolve_out_dir(self, override=None) -> Path:
        out = override or self.out_dir or os.environ.get(OUT_DIR_ENV, "runs")
        return Path(out)
