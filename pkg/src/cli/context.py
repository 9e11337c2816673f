import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from loguru import logger

from src.clustering import read_assignment
from src.encoders import load_precomputed
from src.errors import ConfigurationError, FormatError
from src.kg import Graph, load_snapshot
from src.models import (
    LAYOUT_VERSION,
    ClusterAssignment,
    EmbeddingMatrix,
    Manifest,
    StageName,
    StageRecord,
)
from src.settings import ExperimentConfig

MANIFEST_FILE = "manifest.json"
SEMANTIC_FILE = "semantic.txt"
MODEL_FILE = "model.ckpt"


@dataclass
class RunContext:
    """Resolved config plus the versioned artifact directory it writes into."""

    config: ExperimentConfig
    out_dir: Path
    manifest: Manifest = field(default_factory=Manifest)

    @classmethod
    def open(cls, config: ExperimentConfig, out_dir: Optional[str | Path] = None) -> "RunContext":
        out_dir = Path(out_dir or config.paths.artifact_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        manifest_path = out_dir / MANIFEST_FILE
        manifest = Manifest()
        if manifest_path.exists():
            manifest = Manifest.model_validate_json(manifest_path.read_text(encoding="utf-8"))
            if manifest.layout_version != LAYOUT_VERSION:
                raise FormatError(
                    f"{manifest_path} has layout version {manifest.layout_version}, "
                    f"expected {LAYOUT_VERSION}"
                )
        return cls(config=config, out_dir=out_dir, manifest=manifest)

    def stage_dir(self, stage: StageName | str) -> Path:
        path = self.out_dir / str(stage)
        path.mkdir(parents=True, exist_ok=True)
        return path

    def record(
        self, stage: StageName, files: dict[str, str], graph_source: bool = False
    ) -> StageRecord:
        record = StageRecord(
            stage=stage,
            files=files,
            finished_at=datetime.now(timezone.utc).isoformat(),
            config=self.config.echo(),
        )
        self.manifest.stages[stage] = record
        if graph_source:
            self.manifest.graph_stage = stage
        self.save_manifest()
        logger.success(f"Stage {stage} finished, artifacts in {self.stage_dir(stage)}")
        return record

    def save_manifest(self) -> None:
        (self.out_dir / MANIFEST_FILE).write_text(
            self.manifest.model_dump_json(indent=2), encoding="utf-8"
        )

    def require(self, stage: StageName) -> StageRecord:
        record = self.manifest.stages.get(stage)
        if record is None:
            raise ConfigurationError(
                f"no {stage} artifacts in {self.out_dir}; run `{stage}` first"
            )
        return record

    def graph(self) -> Graph:
        stage = self.manifest.graph_stage or StageName.ingest
        self.require(stage)
        return load_snapshot(self.stage_dir(stage))

    def semantic(self, graph: Graph) -> EmbeddingMatrix:
        record = self.require(StageName.pretrain)
        # snapshot texts are already normalized
        return load_precomputed(record.files["semantic"], graph.nodes, case_fold=False)

    def assignment(self, graph: Graph) -> ClusterAssignment:
        self.require(StageName.cluster)
        return read_assignment(self.stage_dir(StageName.cluster), graph.nodes)

    def write_json(self, stage: StageName, name: str, payload: dict) -> str:
        path = self.stage_dir(stage) / name
        path.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
        return str(path)
