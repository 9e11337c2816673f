import json

import numpy as np
import pytest
import torch

from src.clustering import kmeans
from src.completion import (
    decode_query,
    fuse,
    load_completion_model,
    mask_schedule,
    save_completion_model,
    score_candidates,
    smoothed_targets,
    train_completion,
    training_queries,
)
from src.encoders import random_semantic_matrix
from src.errors import ArgumentError, ConfigurationError
from src.evaluation import evaluate
from src.kg import build_graph, parse_tuples
from src.models import ClusterAssignment, Split
from src.settings import EvalSetting, MaskScheduleKind
from src.testing import TOY_LINES, TOY_VALID
from src.utils import derive_seed
from tests.utils import as_tensor, random_semantic, small_gcn_config, small_train_config, toy

# in here for ruff
toy


@pytest.mark.parametrize("epoch,expected", [(0, 0.0), (50, 0.5), (100, 1.0), (250, 1.0)])
def test_linear_mask_schedule(epoch: int, expected: float):
    assert mask_schedule(epoch, 100) == pytest.approx(expected)


def test_step_mask_schedule():
    values = [mask_schedule(e, 100, MaskScheduleKind.step, steps=4) for e in (0, 24, 25, 74, 99, 100)]
    assert values == [0.0, 0.0, 0.25, 0.5, 0.75, 1.0]


def test_mask_schedule_edges():
    assert mask_schedule(0, 0) == 1.0
    with pytest.raises(ArgumentError):
        mask_schedule(-1, 10)


def test_fuse_ignores_latent_rows_when_masked():
    rng = np.random.default_rng(0)
    e_sem, e_graph, w = as_tensor(rng.normal(size=2)), as_tensor(rng.normal(size=3)), as_tensor(rng.normal(size=(7, 4)))
    first = fuse(e_sem, e_graph, as_tensor([1.0, 2.0]), 0.0, w)
    second = fuse(e_sem, e_graph, as_tensor([-9.0, 4.0]), 0.0, w)
    assert torch.equal(first, second)


def test_fuse_with_stacked_identities_sums_blocks():
    e_sem, e_graph, e_lc = as_tensor([1.0, 2.0]), as_tensor([0.5, -1.0]), as_tensor([4.0, 4.0])
    w = torch.cat([torch.eye(2, dtype=torch.float64)] * 3)
    assert fuse(e_sem, e_graph, e_lc, 0.5, w).tolist() == pytest.approx([3.5, 3.0])


def test_fuse_errors():
    row = as_tensor([1.0, 2.0])
    with pytest.raises(ArgumentError):
        fuse(row, row, row, 0.5, torch.eye(5, dtype=torch.float64))
    with pytest.raises(ArgumentError):
        fuse(row, row, row, 1.5, torch.ones(6, 2, dtype=torch.float64))


def test_center_tap_kernel_passes_the_head_through():
    e_h, e_rel = as_tensor([1.0, -2.0, 3.0]), as_tensor([5.0, 5.0, 5.0])
    kernels = torch.zeros(1, 2, 3, dtype=torch.float64)
    kernels[0, 0, 1] = 1.0

    q = decode_query(e_h, e_rel, kernels, torch.eye(3, dtype=torch.float64))
    assert q.tolist() == [1.0, 0.0, 3.0]


def test_zero_kernels_give_zero_query_and_half_scores():
    e_h = as_tensor(np.ones((2, 4)))
    q = decode_query(e_h, e_h, torch.zeros(2, 2, 3, dtype=torch.float64), torch.ones(8, 4, dtype=torch.float64))
    assert torch.all(q == 0)

    scores = score_candidates(q, as_tensor(np.ones((5, 4))), torch.eye(4, dtype=torch.float64))
    assert torch.all(scores == 0.5)


def test_decode_query_rejects_even_kernels_and_shape_mismatch():
    with pytest.raises(ArgumentError):
        decode_query(as_tensor([1.0, 2.0]), as_tensor([1.0, 2.0]), torch.zeros(1, 2, 2, dtype=torch.float64), torch.eye(2, dtype=torch.float64))
    with pytest.raises(ArgumentError):
        decode_query(as_tensor([1.0, 2.0]), as_tensor([1.0]), torch.zeros(1, 2, 3, dtype=torch.float64), torch.eye(2, dtype=torch.float64))


def test_scores_match_a_per_candidate_loop():
    rng = np.random.default_rng(1)
    q, e_n, w = as_tensor(rng.normal(size=4)), as_tensor(rng.normal(size=(6, 4))), as_tensor(rng.normal(size=(4, 4)))
    scores = score_candidates(q, e_n, w)
    for j in range(6):
        expected = torch.sigmoid(q @ w @ e_n[j])
        assert abs(float(scores[j]) - float(expected)) <= 1e-12


def test_training_queries_cover_train_edges(toy):
    queries, golds = training_queries(toy)
    assert queries.shape == (len(golds), 2)
    assert sum(len(tails) for tails in golds) == len(toy.edges(Split.train))


def test_smoothed_targets():
    targets = smoothed_targets([[1]], 4, 0.1, torch.float64)
    assert targets[0].tolist() == pytest.approx([0.025, 0.925, 0.025, 0.025])


def test_smoothed_targets_stay_within_unit_range(toy):
    _, golds = training_queries(toy)
    targets = smoothed_targets(golds, toy.num_nodes, 0.1, torch.float64)
    assert float(targets.min()) >= 0.0
    assert float(targets.max()) <= 1.0


def _assignment(graph, seed: int = 0) -> ClusterAssignment:
    return kmeans(random_semantic(graph), k=2, seed=seed)


def test_training_reduces_loss_and_writes_a_log(tmp_path, toy):
    log_path = tmp_path / "train_log.jsonl"
    model, report = train_completion(
        toy, random_semantic(toy), _assignment(toy), small_train_config(),
        small_gcn_config(), log_path=log_path,
    )

    assert report.epochs_run == 10
    assert report.epoch_losses[-1] < report.epoch_losses[0]
    lines = [json.loads(line) for line in log_path.read_text().splitlines()]
    assert [line["epoch"] for line in lines] == list(range(10))
    assert lines[-1]["mask_factor"] == 1.0
    assert [epoch for epoch, _ in report.dev_mrr_trace] == [9]
    assert not model.training


def test_best_checkpoint_is_restored(toy):
    cfg = small_train_config(epochs=4, max_epochs=12, eval_every=2, patience=5)
    model, report = train_completion(
        toy, random_semantic(toy), _assignment(toy), cfg, small_gcn_config(),
    )
    dev = toy.edges(Split.valid, include_inverse=False)
    assert [epoch for epoch, _ in report.dev_mrr_trace][0] == cfg.epochs - 1
    assert report.best_dev_mrr == max(mrr for _, mrr in report.dev_mrr_trace)
    assert evaluate(model, dev, toy, setting=EvalSetting.filtered).mrr == pytest.approx(report.best_dev_mrr)


@pytest.mark.parametrize("seed", range(6))
def test_best_checkpoint_comes_after_the_minimum_epochs(toy, seed: int):
    cfg = small_train_config(epochs=8, max_epochs=20, eval_every=2, patience=3, mask_epochs=4, seed=seed)
    model, report = train_completion(
        toy, random_semantic(toy, seed=seed), _assignment(toy, seed), cfg, small_gcn_config(),
    )
    assert report.best_epoch >= cfg.epochs - 1
    assert all(epoch >= cfg.epochs - 1 for epoch, _ in report.dev_mrr_trace)
    assert float(model.mask_factor) == 1.0


def test_stops_after_minimum_epochs_without_a_valid_split():
    tuples, vocab = parse_tuples(TOY_LINES)
    graph = build_graph(tuples, vocab)
    _, report = train_completion(
        graph, random_semantic(graph), None, small_train_config(epochs=3, max_epochs=10, eval_every=3, use_nc=False),
        small_gcn_config(),
    )
    assert report.epochs_run == 3
    assert report.stopped_early
    assert report.best_epoch is None


def test_latent_concepts_are_ignored_without_nc(toy):
    cfg = small_train_config(use_nc=False)
    e_sem = random_semantic(toy)
    first = _assignment(toy)
    moved = first.model_copy(update={"centroids": first.centroids + 7.0})

    model_a, _ = train_completion(toy, e_sem, first, cfg, small_gcn_config())
    model_b, _ = train_completion(toy, e_sem, moved, cfg, small_gcn_config())
    heads = torch.arange(toy.num_nodes)
    rels = torch.zeros(toy.num_nodes, dtype=torch.long)
    assert torch.equal(model_a.score(heads, rels), model_b.score(heads, rels))


def test_training_is_deterministic(toy):
    runs = [
        train_completion(toy, random_semantic(toy), _assignment(toy), small_train_config(), small_gcn_config())
        for _ in range(2)
    ]
    assert runs[0][1].epoch_losses == runs[1][1].epoch_losses
    for a, b in zip(runs[0][0].parameters(), runs[1][0].parameters()):
        assert torch.equal(a, b)


def test_missing_inputs_are_configuration_errors(toy):
    with pytest.raises(ConfigurationError):
        train_completion(toy, random_semantic(toy), None, small_train_config(), small_gcn_config())
    with pytest.raises(ConfigurationError):
        train_completion(toy, None, _assignment(toy), small_train_config(), small_gcn_config())

    valid, vocab = parse_tuples(TOY_VALID)
    empty = build_graph([], vocab, valid=valid)
    with pytest.raises(ConfigurationError):
        train_completion(
            empty, random_semantic(empty), None, small_train_config(use_nc=False), small_gcn_config()
        )


def test_random_semantics_without_cp(toy):
    cfg = small_train_config(use_cp=False, use_nc=False, max_epochs=1, epochs=1, eval_every=1)
    model, _ = train_completion(toy, None, None, cfg, small_gcn_config(), d_sem=4)

    expected = random_semantic_matrix(toy.num_nodes, 4, derive_seed(0, "no-cp"))
    assert np.array_equal(model.e_sem.numpy(), expected.values)


def test_model_checkpoint_reload(tmp_path, toy):
    cfg = small_train_config(max_epochs=2, epochs=2, eval_every=2)
    model, _ = train_completion(toy, random_semantic(toy), _assignment(toy), cfg, small_gcn_config())
    save_completion_model(model, tmp_path / "model.ckpt")

    loaded = load_completion_model(tmp_path / "model.ckpt", toy)
    heads = torch.arange(toy.num_nodes)
    rels = torch.ones(toy.num_nodes, dtype=torch.long)
    assert torch.allclose(loaded.score(heads, rels), model.score(heads, rels), atol=1e-5)
    assert torch.equal(loaded.latent, model.latent.float().double())
