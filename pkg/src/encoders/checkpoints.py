import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict

from src.errors import FormatError

MAGIC = b"CPNCCKPT"
FORMAT_VERSION = 1
PAYLOAD_DTYPE = np.dtype("<f4")


class Checkpoint(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: str
    meta: dict[str, Any]
    tensors: dict[str, np.ndarray]

    def tensor(self, name: str, dtype: torch.dtype = torch.float64) -> torch.Tensor:
        return torch.as_tensor(self.tensors[name], dtype=dtype)

    def state_dict(self, dtype: torch.dtype = torch.float64) -> dict[str, torch.Tensor]:
        return {name: self.tensor(name, dtype) for name in self.tensors}


def save_checkpoint(
    path: str | Path,
    kind: str,
    tensors: Mapping[str, torch.Tensor | np.ndarray],
    meta: Mapping[str, Any] | None = None,
) -> None:
    """
    Binary container: magic, 8-byte little-endian header length, JSON header
    (kind, meta, tensor table), then row-major little-endian float32 payload.
    """
    entries = []
    chunks = []
    offset = 0
    for name, tensor in tensors.items():
        if isinstance(tensor, torch.Tensor):
            tensor = tensor.detach().cpu().numpy()
        array = np.ascontiguousarray(tensor, dtype=PAYLOAD_DTYPE)
        entries.append(
            {"name": name, "shape": list(array.shape), "offset": offset, "count": array.size}
        )
        chunks.append(array.tobytes(order="C"))
        offset += array.size

    header = json.dumps(
        {
            "format_version": FORMAT_VERSION,
            "kind": kind,
            "meta": dict(meta or {}),
            "tensors": entries,
        },
        sort_keys=True,
    ).encode("utf-8")

    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(len(header).to_bytes(8, "little"))
        f.write(header)
        for chunk in chunks:
            f.write(chunk)


def load_checkpoint(path: str | Path) -> Checkpoint:
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise FormatError(f"{path} is not a checkpoint container")

    start = len(MAGIC)
    header_length = int.from_bytes(data[start : start + 8], "little")
    header_end = start + 8 + header_length
    header = json.loads(data[start + 8 : header_end].decode("utf-8"))
    if header.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"unsupported checkpoint version {header.get('format_version')}")

    payload = np.frombuffer(data[header_end:], dtype=PAYLOAD_DTYPE)
    tensors = {}
    for entry in header["tensors"]:
        flat = payload[entry["offset"] : entry["offset"] + entry["count"]]
        if flat.size != entry["count"]:
            raise FormatError(f"{path}: truncated payload for {entry['name']}")
        tensors[entry["name"]] = flat.reshape(entry["shape"]).astype(np.float64)

    return Checkpoint(kind=header["kind"], meta=header["meta"], tensors=tensors)
