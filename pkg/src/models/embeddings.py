from src._compat import StrEnum

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict, field_validator


class EmbeddingRole(StrEnum):
    semantic = "semantic"
    structural = "structural"
    fused = "fused"


class EmbeddingMatrix(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    role: EmbeddingRole

    @field_validator("values", mode="before")
    @classmethod
    def to_float_matrix(cls, value) -> np.ndarray:
        if isinstance(value, torch.Tensor):
            value = value.detach().cpu().numpy()
        array = np.asarray(value, dtype=np.float64)
        if array.ndim != 2:
            raise ValueError(f"embedding matrix must be 2-D, got shape {array.shape}")
        if not np.all(np.isfinite(array)):
            raise ValueError("embedding matrix contains non-finite entries")
        return array

    @property
    def num_rows(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def row(self, index: int) -> np.ndarray:
        return self.values[index]

    def as_tensor(self, dtype: torch.dtype = torch.float64) -> torch.Tensor:
        return torch.as_tensor(self.values, dtype=dtype)
