from pathlib import Path
from typing import Sequence

import numpy as np
from loguru import logger

from src.errors import CoverageError, FormatError
from src.models import EmbeddingMatrix, EmbeddingRole, Node
from src.search import closest_texts


def _normalize(text: str, case_fold: bool) -> str:
    text = " ".join(text.split())
    return text.lower() if case_fold else text


def read_embedding_file(
    path: str | Path, case_fold: bool = True
) -> tuple[dict[str, np.ndarray], int]:
    """
    Read `<count> <dim>` followed by `<text><TAB><v1> ... <vdim>` lines.
    Returns the text -> vector map and the dimension from the header.
    """
    vectors: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise FormatError(f"{path}: header must be '<count> <dim>'")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError as exc:
            raise FormatError(f"{path}: non-integer header {header}") from exc

        for line_number, line in enumerate(f, start=2):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            text, sep, numbers = line.rpartition("\t")
            if not sep:
                raise FormatError(f"{path}:{line_number}: missing TAB separator")
            try:
                vector = np.array(numbers.split(), dtype=np.float64)
            except ValueError as exc:
                raise FormatError(f"{path}:{line_number}: {exc}") from exc
            if vector.shape[0] != dim:
                raise FormatError(
                    f"{path}:{line_number}: expected {dim} values, got {vector.shape[0]}"
                )
            vectors[_normalize(text, case_fold)] = vector

    if len(vectors) != count:
        logger.warning(f"{path}: header announces {count} rows, found {len(vectors)}")
    return vectors, dim


def load_precomputed(
    path: str | Path, nodes: Sequence[Node], case_fold: bool = True
) -> EmbeddingMatrix:
    """Align an embedding text file to node ids; every node must be covered."""
    vectors, dim = read_embedding_file(path, case_fold=case_fold)

    missing = [
        node.text for node in nodes if _normalize(node.text, case_fold) not in vectors
    ]
    if missing:
        raise CoverageError(
            missing, suggestions=closest_texts(missing[:10], vectors.keys())
        )

    values = np.zeros((len(nodes), dim), dtype=np.float64)
    for node in nodes:
        values[node.id] = vectors[_normalize(node.text, case_fold)]
    logger.info(f"Loaded {len(nodes)} precomputed {dim}-d embeddings from {path}")
    return EmbeddingMatrix(values=values, role=EmbeddingRole.semantic)


def write_embeddings(
    matrix: EmbeddingMatrix | np.ndarray, texts: Sequence[str], path: str | Path
) -> None:
    values = matrix.values if isinstance(matrix, EmbeddingMatrix) else matrix
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{values.shape[0]} {values.shape[1]}\n")
        for text, row in zip(texts, values):
            f.write(f"{text}\t{' '.join(repr(float(v)) for v in row)}\n")


class PrecomputedEncoder:
    """Semantic encoder backed by an external embedding file."""

    def __init__(self, path: str | Path, case_fold: bool = True):
        self.path = Path(path)
        self.case_fold = case_fold

    def encode_all(self, nodes: Sequence[Node]) -> EmbeddingMatrix:
        return load_precomputed(self.path, nodes, case_fold=self.case_fold)
