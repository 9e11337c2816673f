import json
from src._compat import StrEnum
from pathlib import Path
from typing import Any, Literal, Optional

import yaml
from pydantic import BaseModel, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict
from result import Err, Ok, Result

from src.utils import derive_seed


class GcnInitMode(StrEnum):
    random = "random"  # trainable input table
    semantic = "semantic"  # frozen semantic rows as input


class EvalSetting(StrEnum):
    filtered = "filtered"
    raw = "raw"


class TiePolicy(StrEnum):
    average = "average"
    optimistic = "optimistic"
    pessimistic = "pessimistic"


class MaskScheduleKind(StrEnum):
    linear = "linear"
    step = "step"


class PathsConfig(BaseModel):
    train: Optional[str] = None
    valid: Optional[str] = None
    test: Optional[str] = None
    artifact_dir: str = "artifacts"


class KgConfig(BaseModel):
    case_fold: bool = True
    add_inverse: bool = True
    densify_top_k: int = Field(default=0, ge=0)
    densify_min_sim: float = Field(default=0.9, ge=-1.0, le=1.0)


class EncoderConfig(BaseModel):
    d_sem: int = Field(default=200, ge=1)
    precomputed_path: Optional[str] = None
    use_projection_head: bool = False


class PretrainConfig(BaseModel):
    batch_size: int = Field(default=128, ge=2)
    epochs: int = Field(default=3, ge=0)
    lr_encoder: float = Field(default=1e-4, gt=0)
    lr_head: float = Field(default=5e-5, gt=0)
    seed: Optional[int] = None
    max_rejection_attempts: int = Field(default=100, ge=1)
    temperature: float = Field(default=1.0, gt=0)
    resample_negatives_each_epoch: bool = False


class ClusteringConfig(BaseModel):
    k: Optional[int] = Field(default=None, ge=1)
    max_iter: int = Field(default=100, ge=1)
    tol: float = Field(default=1e-4, ge=0)
    n_init: int = Field(default=3, ge=1)
    seed: Optional[int] = None
    normalize_before_clustering: bool = False


class GcnConfig(BaseModel):
    init_mode: GcnInitMode = GcnInitMode.semantic
    num_layers: int = Field(default=2, ge=1)
    d_input: int = Field(default=200, ge=1)
    d_graph: int = Field(default=200, ge=1)
    dropout: float = Field(default=0.2, ge=0, lt=1)


class TrainConfig(BaseModel):
    epochs: int = Field(default=200, ge=1, description="minimum training epochs")
    max_epochs: int = Field(default=1000, ge=1)
    eval_every: int = Field(default=10, ge=1)
    patience: int = Field(default=5, ge=1)
    lr: float = Field(default=1e-4, gt=0)
    batch_size: int = Field(default=128, ge=1)
    mask_epochs: int = Field(default=100, ge=0)
    mask_schedule_kind: MaskScheduleKind = MaskScheduleKind.linear
    mask_steps: int = Field(default=4, ge=1)
    label_smoothing: float = Field(default=0.1, ge=0, lt=1)
    seed: Optional[int] = None
    use_cp: bool = True
    use_nc: bool = True
    d_model: int = Field(default=200, ge=1)
    conv_channels: int = Field(default=32, ge=1)
    kernel_width: int = Field(default=5, ge=1)
    decoder_dropout: float = Field(default=0.0, ge=0, lt=1)

    @field_validator("kernel_width")
    @classmethod
    def kernel_width_is_odd(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError("kernel_width must be odd for same-padding")
        return value

    @model_validator(mode="after")
    def schedule_is_consistent(self) -> "TrainConfig":
        if self.epochs % self.eval_every != 0:
            raise ValueError("eval_every must divide the minimum epoch count")
        if self.max_epochs < self.epochs:
            raise ValueError("max_epochs must be >= epochs")
        return self


class EvalConfig(BaseModel):
    setting: EvalSetting = EvalSetting.filtered
    tie_policy: TiePolicy = TiePolicy.average
    hits_at: tuple[int, ...] = (1, 3, 10)
    dump_ranks: bool = True
    top_n_export: int = Field(default=10, ge=0)


class SweepConfig(BaseModel):
    ks: list[int] = Field(default_factory=lambda: [10, 50, 100])
    fractions: list[float] = Field(default_factory=lambda: [0.0, 0.25, 0.5])

    @field_validator("fractions")
    @classmethod
    def fractions_in_range(cls, values: list[float]) -> list[float]:
        for value in values:
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"fraction {value} outside [0, 1]")
        return values


# never echoed into artifacts
RUNTIME_FIELDS = {"threads", "log_level", "log_path"}


class ExperimentConfig(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="CPNC_", env_nested_delimiter="__", extra="forbid"
    )

    seed: int = 0
    threads: int = Field(default=1, ge=1)
    dtype: Literal["float32", "float64"] = "float64"
    log_level: str = "INFO"
    log_path: Optional[str] = None

    paths: PathsConfig = Field(default_factory=PathsConfig)
    kg: KgConfig = Field(default_factory=KgConfig)
    encoder: EncoderConfig = Field(default_factory=EncoderConfig)
    pretrain: PretrainConfig = Field(default_factory=PretrainConfig)
    clustering: ClusteringConfig = Field(default_factory=ClusteringConfig)
    gcn: GcnConfig = Field(default_factory=GcnConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)

    @model_validator(mode="after")
    def propagate_seed(self) -> "ExperimentConfig":
        if self.pretrain.seed is None:
            self.pretrain.seed = derive_seed(self.seed, "pretrain")
        if self.clustering.seed is None:
            self.clustering.seed = derive_seed(self.seed, "clustering")
        if self.train.seed is None:
            self.train.seed = derive_seed(self.seed, "train")
        return self

    def validate_paths(self, *required: str) -> Result[None, list[str]]:
        missing = []
        for name in required:
            value = getattr(self.paths, name)
            if value is None:
                missing.append(f"paths.{name} is not set")
            elif not Path(value).exists():
                missing.append(f"paths.{name} does not exist: {value}")

        if self.encoder.precomputed_path and not Path(
            self.encoder.precomputed_path
        ).exists():
            missing.append(
                f"encoder.precomputed_path does not exist: {self.encoder.precomputed_path}"
            )

        return Err(missing) if missing else Ok(None)

    def echo(self) -> dict[str, Any]:
        """Config as written into artifacts, without the run-environment fields."""
        return self.model_dump(mode="json", exclude=RUNTIME_FIELDS)


def read_config_file(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix in {".yaml", ".yml"}:
        return yaml.safe_load(text) or {}
    return json.loads(text)


def deep_merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(
    path: Optional[str | Path] = None, overrides: Optional[dict[str, Any]] = None
) -> ExperimentConfig:
    data = read_config_file(path) if path is not None else {}
    return ExperimentConfig(**deep_merge(data, overrides or {}))
