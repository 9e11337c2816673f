from src._compat import StrEnum
from typing import Callable, Iterable, Optional

import numpy as np
import torch
import torch.nn.functional as F
from loguru import logger
from pydantic import BaseModel

from .completion import (
    CompletionModel,
    decode_query,
    fuse,
    score_candidates,
    smoothed_targets,
    training_queries,
)
from .contrastive import mnr_loss
from .graph_encoder import adjacency_from_pairs, gcn_forward
from .models import ClusterAssignment, EmbeddingMatrix, EmbeddingRole
from .settings import GcnConfig, TrainConfig
from .testing import toy_graph
from .utils import derive_seed

FD_STEP = 1e-5
RELATIVE_FLOOR = 1e-4
COMPONENT_THRESHOLD = 1e-4
COMPOSED_THRESHOLD = 1e-3

Tensors = dict[str, torch.Tensor]
Objective = Callable[[Tensors], torch.Tensor]
GradientFn = Callable[[Objective, Tensors], Tensors]


class Component(StrEnum):
    mnr_loss = "mnr_loss"
    gcn_forward = "gcn_forward"
    fuse = "fuse"
    decode_query = "decode_query"
    score_candidates = "score_candidates"
    full_model = "full_model"


class TensorCheck(BaseModel):
    name: str
    max_rel_error: float
    passed: bool


class ComponentReport(BaseModel):
    component: str
    threshold: float
    tensors: list[TensorCheck] = []
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(check.passed for check in self.tensors)

    @property
    def max_rel_error(self) -> float:
        return max((check.max_rel_error for check in self.tensors), default=0.0)


class GradCheckReport(BaseModel):
    seed: int
    components: list[ComponentReport] = []

    @property
    def passed(self) -> bool:
        return all(component.passed for component in self.components)


def autograd_gradients(objective: Objective, inputs: Tensors) -> Tensors:
    leaves = {name: t.detach().clone().requires_grad_(True) for name, t in inputs.items()}
    value = objective(leaves)
    grads = torch.autograd.grad(value, list(leaves.values()), allow_unused=True)
    return {
        name: torch.zeros_like(leaf) if grad is None else grad.detach()
        for (name, leaf), grad in zip(leaves.items(), grads)
    }


def numeric_gradients(
    objective: Objective, inputs: Tensors, step: float = FD_STEP
) -> Tensors:
    """Central differences, one element at a time."""
    base = {name: t.detach().clone() for name, t in inputs.items()}
    grads = {}
    with torch.no_grad():
        for name, tensor in base.items():
            grad = torch.zeros_like(tensor)
            flat, out = tensor.view(-1), grad.view(-1)
            for i in range(flat.numel()):
                original = flat[i].item()
                flat[i] = original + step
                plus = float(objective(base))
                flat[i] = original - step
                minus = float(objective(base))
                flat[i] = original
                out[i] = (plus - minus) / (2 * step)
            grads[name] = grad
    return grads


def relative_error(analytic: torch.Tensor, numeric: torch.Tensor) -> float:
    a = analytic.detach().cpu().numpy().astype(np.float64)
    n = numeric.detach().cpu().numpy().astype(np.float64)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(n))):
        return float("inf")
    if a.size == 0:
        return 0.0
    scale = np.maximum(np.maximum(np.abs(a), np.abs(n)), RELATIVE_FLOOR)
    return float(np.max(np.abs(a - n) / scale))


def check_objective(
    component: str,
    objective: Objective,
    inputs: Tensors,
    threshold: float,
    gradient_fn: GradientFn = autograd_gradients,
    step: float = FD_STEP,
) -> ComponentReport:
    """Compare `gradient_fn` against central differences; failures are reported, not raised."""
    report = ComponentReport(component=component, threshold=threshold)
    try:
        analytic = gradient_fn(objective, inputs)
        numeric = numeric_gradients(objective, inputs, step)
    except Exception as exc:
        report.error = f"{type(exc).__name__}: {exc}"
        return report

    for name in inputs:
        error = relative_error(analytic[name], numeric[name])
        report.tensors.append(
            TensorCheck(name=name, max_rel_error=error, passed=error <= threshold)
        )
    return report


def _randn(generator: torch.Generator, *shape: int) -> torch.Tensor:
    return torch.randn(*shape, generator=generator, dtype=torch.float64)


def _mnr_instance(generator: torch.Generator) -> tuple[Objective, Tensors]:
    inputs = {
        "anchors": _randn(generator, 4, 3),
        "positives": _randn(generator, 4, 3),
        "negatives": _randn(generator, 4, 3),
    }
    return lambda t: mnr_loss(t["anchors"], t["positives"], t["negatives"]), inputs


def _gcn_instance(generator: torch.Generator) -> tuple[Objective, Tensors]:
    adj = adjacency_from_pairs(6, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (1, 4)])
    readout = _randn(generator, 6, 2)
    inputs = {
        "w0": _randn(generator, 4, 3),
        "w1": _randn(generator, 3, 2),
        "x0": _randn(generator, 6, 4),
    }

    def objective(t: Tensors) -> torch.Tensor:
        return (gcn_forward([t["w0"], t["w1"]], adj, t["x0"]) * readout).sum()

    return objective, inputs


def _fuse_instance(generator: torch.Generator) -> tuple[Objective, Tensors]:
    e_sem, e_graph, e_lc = _randn(generator, 6, 3), _randn(generator, 6, 2), _randn(generator, 6, 3)
    readout = _randn(generator, 6, 4)
    inputs = {"w_embedding": _randn(generator, 8, 4), "e_graph": e_graph}

    def objective(t: Tensors) -> torch.Tensor:
        return (fuse(e_sem, t["e_graph"], e_lc, 0.7, t["w_embedding"]) * readout).sum()

    return objective, inputs


def _decode_instance(generator: torch.Generator) -> tuple[Objective, Tensors]:
    readout = _randn(generator, 3, 4)
    inputs = {
        "e_h": _randn(generator, 3, 4),
        "e_rel": _randn(generator, 3, 4),
        "kernels": _randn(generator, 2, 2, 3),
        "projection": _randn(generator, 8, 4),
    }

    def objective(t: Tensors) -> torch.Tensor:
        q = decode_query(t["e_h"], t["e_rel"], t["kernels"], t["projection"])
        return (q * readout).sum()

    return objective, inputs


def _score_instance(generator: torch.Generator) -> tuple[Objective, Tensors]:
    readout = _randn(generator, 3, 6)
    inputs = {
        "q": _randn(generator, 3, 4),
        "e_n": _randn(generator, 6, 4),
        "w_conv": _randn(generator, 4, 4),
    }

    def objective(t: Tensors) -> torch.Tensor:
        return (score_candidates(t["q"], t["e_n"], t["w_conv"]) * readout).sum()

    return objective, inputs


def _full_model_instance(seed: int) -> tuple[Objective, Tensors]:
    graph = toy_graph()
    rng = np.random.default_rng(derive_seed(seed, "gradcheck-sem"))
    e_sem = EmbeddingMatrix(values=rng.normal(size=(graph.num_nodes, 4)), role=EmbeddingRole.semantic)
    assignment = ClusterAssignment(
        assignment=np.array([0, 0, 0, 1, 1, 1][: graph.num_nodes]),
        centroids=rng.normal(size=(2, 4)),
        inertia=0.0,
    )
    cfg = TrainConfig(
        epochs=10, eval_every=10, d_model=4, conv_channels=2, kernel_width=3, seed=seed
    )
    gcn_cfg = GcnConfig(d_graph=3, num_layers=2, dropout=0.0)
    model = CompletionModel(graph, e_sem, assignment, cfg, gcn_cfg, seed=seed)
    model.set_mask_factor(0.5)
    model.eval()

    queries, golds = training_queries(graph)
    targets = smoothed_targets(golds, graph.num_nodes, cfg.label_smoothing, torch.float64)
    inputs = {name: p.detach().clone() for name, p in model.named_parameters()}

    def objective(t: Tensors) -> torch.Tensor:
        logits = torch.func.functional_call(model, t, (queries[:, 0], queries[:, 1]))
        return F.binary_cross_entropy_with_logits(logits, targets)

    return objective, inputs


def run_gradcheck(
    components: Iterable[Component | str], seed: int = 0
) -> GradCheckReport:
    """Check every requested component on a seeded 64-bit instance."""
    report = GradCheckReport(seed=seed)
    for name in components:
        component = Component(name)
        generator = torch.Generator().manual_seed(derive_seed(seed, str(component)))
        try:
            if component == Component.full_model:
                objective, inputs = _full_model_instance(seed)
            else:
                objective, inputs = {
                    Component.mnr_loss: _mnr_instance,
                    Component.gcn_forward: _gcn_instance,
                    Component.fuse: _fuse_instance,
                    Component.decode_query: _decode_instance,
                    Component.score_candidates: _score_instance,
                }[component](generator)
        except Exception as exc:
            report.components.append(
                ComponentReport(
                    component=str(component),
                    threshold=COMPONENT_THRESHOLD,
                    error=f"{type(exc).__name__}: {exc}",
                )
            )
            continue

        threshold = (
            COMPOSED_THRESHOLD if component == Component.full_model else COMPONENT_THRESHOLD
        )
        result = check_objective(str(component), objective, inputs, threshold)
        level = "SUCCESS" if result.passed else "ERROR"
        logger.log(
            level, f"gradcheck {component}: max rel. error {result.max_rel_error:.3e}"
        )
        report.components.append(result)
    return report
