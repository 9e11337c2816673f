import numpy as np
import pytest
import torch
from loguru import logger

from src.kg import Graph
from src.models import EmbeddingMatrix, EmbeddingRole
from src.settings import GcnConfig, TrainConfig
from src.testing import TOY_LINES, TOY_TEST, TOY_VALID, toy_graph, write_lines
from src.utils import configure_logging


@pytest.fixture(scope="function")
def quiet_logs():
    configure_logging("WARNING")
    yield
    logger.remove()


@pytest.fixture(scope="function")
def toy() -> Graph:
    return toy_graph()


@pytest.fixture(scope="function")
def toy_files(tmp_path) -> dict[str, str]:
    return {
        "train": str(write_lines(tmp_path / "train.tsv", TOY_LINES)),
        "valid": str(write_lines(tmp_path / "valid.tsv", TOY_VALID)),
        "test": str(write_lines(tmp_path / "test.tsv", TOY_TEST)),
    }


def random_semantic(graph: Graph, dim: int = 4, seed: int = 0) -> EmbeddingMatrix:
    rng = np.random.default_rng(seed)
    return EmbeddingMatrix(
        values=rng.normal(size=(graph.num_nodes, dim)), role=EmbeddingRole.semantic
    )


def small_train_config(**overrides) -> TrainConfig:
    values = dict(
        epochs=10,
        max_epochs=10,
        eval_every=5,
        patience=1,
        lr=1e-2,
        batch_size=8,
        mask_epochs=4,
        d_model=4,
        conv_channels=2,
        kernel_width=3,
        seed=0,
    )
    values.update(overrides)
    return TrainConfig(**values)


def small_gcn_config(**overrides) -> GcnConfig:
    values = dict(d_input=4, d_graph=3, num_layers=2, dropout=0.0)
    values.update(overrides)
    return GcnConfig(**values)


def small_experiment(files: dict[str, str], out_dir: str, **sections) -> dict:
    """Config dict for CLI runs on the toy graph, cheap enough for unit tests."""
    config = {
        "seed": 3,
        "log_level": "WARNING",
        "paths": {**files, "artifact_dir": out_dir},
        "encoder": {"d_sem": 4},
        "pretrain": {"epochs": 2, "batch_size": 4},
        "clustering": {"k": 2, "n_init": 1},
        "gcn": {"d_input": 4, "d_graph": 3, "dropout": 0.0},
        "train": small_train_config().model_dump(mode="json", exclude={"seed"}),
        "eval": {"top_n_export": 3},
    }
    for name, values in sections.items():
        config[name] = {**config.get(name, {}), **values}
    return config


def as_tensor(values) -> torch.Tensor:
    return torch.as_tensor(np.asarray(values, dtype=np.float64))
