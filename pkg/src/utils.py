import random
import sys
import time
from src._compat import StrEnum
from functools import wraps
from typing import Callable, Optional, ParamSpec, TypeVar

import numpy as np
import torch
from loguru import logger
from pydantic import BaseModel
from result import Err

P = ParamSpec("P")
R = TypeVar("R")


class LogLevel(StrEnum):
    info = "INFO"
    debug = "DEBUG"
    warning = "WARNING"
    error = "ERROR"


LOG_FUNC = {
    LogLevel.info: logger.info,
    LogLevel.debug: logger.debug,
    LogLevel.warning: logger.warning,
    LogLevel.error: logger.error,
}


class FailureKind(StrEnum):
    config = "config"
    runtime = "runtime"


class StageFailure(BaseModel):
    kind: FailureKind
    message: str

    def __str__(self) -> str:
        return f"{self.kind} error: {self.message}"


def return_error_and_log(
    message: str,
    level: LogLevel = LogLevel.error,
    kind: FailureKind = FailureKind.runtime,
) -> Err:
    LOG_FUNC[level](message)
    return Err(StageFailure(kind=kind, message=message))


def configure_logging(level: str = "INFO", log_path: Optional[str] = None) -> None:
    logger.remove()
    logger.add(sys.stderr, level=level)
    if log_path is not None:
        logger.add(log_path, level=level)


def timed_stage(fn: Callable[P, R]) -> Callable[P, R]:
    @wraps(fn)
    def wrapper(*args: P.args, **kwargs: P.kwargs) -> R:
        start = time.perf_counter()
        result = fn(*args, **kwargs)
        elapsed_ms = (time.perf_counter() - start) * 1000

        args_rendered = [type(arg).__name__ for arg in args]
        logger.info(f"{fn.__qualname__}(args={args_rendered}) took {elapsed_ms:.2f}ms")
        return result

    return wrapper


def seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)


def configure_torch(threads: int = 1) -> None:
    """Bound intra-op parallelism and forbid nondeterministic kernels."""
    torch.set_num_threads(max(1, threads))
    torch.use_deterministic_algorithms(True)


def torch_dtype(name: str) -> torch.dtype:
    return {"float32": torch.float32, "float64": torch.float64}[name]


def derive_seed(seed: int, *streams: int | str) -> int:
    """Stable child seed for an independent random stream."""
    sequence = np.random.SeedSequence(
        [seed % 2**32] + [_stream_key(stream) for stream in streams]
    )
    return int(sequence.generate_state(1)[0])


def _stream_key(stream: int | str) -> int:
    if isinstance(stream, int):
        return stream % 2**32
    return sum((i + 1) * ord(c) for i, c in enumerate(stream)) % 2**32
