import json

import numpy as np
import pytest
import torch

from src.errors import ArgumentError
from src.evaluation import (
    evaluate,
    evaluate_with_ranks,
    known_tails,
    rank,
    summarize,
    write_metrics,
    write_rank_dump,
    write_top_candidates,
)
from src.kg import build_graph, parse_tuples
from src.models import QueryDirection, Split
from src.settings import EvalSetting, TiePolicy
from src.testing import synthetic_cskg


class TableScorer:
    """Scores looked up per (head, rel) query; unlisted candidates score 0."""

    def __init__(self, num_nodes: int, table: dict[tuple[int, int], dict[int, float]]):
        self.num_nodes = num_nodes
        self.table = table

    def score(self, heads: torch.Tensor, rels: torch.Tensor) -> torch.Tensor:
        scores = torch.zeros(len(heads), self.num_nodes, dtype=torch.float64)
        for row, (head, rel) in enumerate(zip(heads.tolist(), rels.tolist())):
            for node, value in self.table.get((head, rel), {}).items():
                scores[row, node] = value
        return scores


class RandomScorer:
    def __init__(self, num_nodes: int, seed: int = 0, transform=None):
        self.num_nodes = num_nodes
        self.seed = seed
        self.transform = transform or (lambda x: x)

    def score(self, heads: torch.Tensor, rels: torch.Tensor) -> torch.Tensor:
        rows = []
        for head, rel in zip(heads.tolist(), rels.tolist()):
            rng = np.random.default_rng([self.seed, head, rel])
            rows.append(self.transform(rng.normal(size=self.num_nodes)))
        return torch.as_tensor(np.stack(rows))


def test_unique_maximum_ranks_first():
    assert rank([0.1, 0.9, 0.3], gold=1) == 1.0


def test_tie_policies():
    scores = [0.5, 0.5, 0.1]
    assert rank(scores, 0) == 1.5
    assert rank(scores, 0, tie_policy=TiePolicy.optimistic) == 1.0
    assert rank(scores, 0, tie_policy=TiePolicy.pessimistic) == 2.0


def test_filter_removes_competitors():
    assert rank([0.9, 0.5, 0.1], 1) == 2.0
    assert rank([0.9, 0.5, 0.1], 1, filter=[0]) == 1.0


def test_rank_errors():
    with pytest.raises(ArgumentError):
        rank([0.1, 0.2], 2)
    with pytest.raises(ArgumentError):
        rank([0.1, 0.2], 0, filter=[0])


def test_average_rank_matches_sorting():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        scores = rng.integers(0, 5, size=int(rng.integers(1, 30))).astype(float)
        gold = int(rng.integers(0, len(scores)))

        ordered = np.sort(scores)[::-1]
        positions = np.flatnonzero(ordered == scores[gold]) + 1
        assert rank(scores, gold) == pytest.approx(positions.mean())


def test_summarize():
    summary = summarize([1.0, 2.0, 4.0, 20.0])
    assert summary.mrr == pytest.approx((1 + 0.5 + 0.25 + 0.05) / 4)
    assert summary.hits == {1: 0.25, 3: 0.5, 10: 0.75}
    assert summarize([]).count == 0


def _single_test_tuple_graph():
    train, vocab = parse_tuples(["R\tc\td"])
    test, vocab = parse_tuples(["R\ta\tb"], vocab=vocab)
    return build_graph(train, vocab, test=test)


def test_gold_second_in_both_directions():
    graph = _single_test_tuple_graph()
    a, b, c, d = (graph.node_id(text) for text in "abcd")
    rel = graph.relation_id("R")
    inverse = graph.inverse_relation(rel)
    scorer = TableScorer(
        graph.num_nodes,
        {(a, rel): {b: 0.5, c: 0.9}, (b, inverse): {a: 0.5, d: 0.9}},
    )

    metrics = evaluate(scorer, graph.edges(Split.test, include_inverse=False), graph)
    assert metrics.count == 2
    assert metrics.mrr == pytest.approx(0.5)
    assert metrics.hits_at(1) == 0.0
    assert metrics.hits_at(3) == 1.0
    assert list(metrics.per_relation) == ["R"]


def test_perfect_scorer_has_unit_mrr():
    graph = synthetic_cskg(num_nodes=30, num_relations=3, num_edges=80, seed=1)
    table = {
        query: {tail: 1.0 for tail in tails} for query, tails in known_tails(graph).items()
    }
    tuples = graph.edges(Split.train, include_inverse=False)

    metrics = evaluate(TableScorer(graph.num_nodes, table), tuples, graph)
    assert metrics.mrr == 1.0
    assert metrics.hits_at(1) == 1.0


def test_filtered_ranks_never_exceed_raw_ranks():
    graph = synthetic_cskg(num_nodes=30, num_relations=3, num_edges=80, seed=2)
    tuples = graph.edges(Split.train, include_inverse=False)
    scorer = RandomScorer(graph.num_nodes, seed=3)

    filtered, filtered_ranks = evaluate_with_ranks(scorer, tuples, graph)
    raw, raw_ranks = evaluate_with_ranks(scorer, tuples, graph, setting=EvalSetting.raw)
    for f, r in zip(filtered_ranks, raw_ranks):
        assert f.rank <= r.rank
    assert filtered.mrr >= raw.mrr


def test_directions_are_averaged():
    graph = synthetic_cskg(num_nodes=30, num_relations=3, num_edges=80, seed=4)
    tuples = graph.edges(Split.train, include_inverse=False)
    metrics, results = evaluate_with_ranks(RandomScorer(graph.num_nodes), tuples, graph)

    assert metrics.forward.count == metrics.inverse.count == len(tuples)
    assert metrics.mrr == pytest.approx((metrics.forward.mrr + metrics.inverse.mrr) / 2)
    assert {r.direction for r in results} == set(QueryDirection)


def test_monotone_transform_keeps_metrics():
    graph = synthetic_cskg(num_nodes=30, num_relations=3, num_edges=80, seed=5)
    tuples = graph.edges(Split.train, include_inverse=False)
    plain = evaluate(RandomScorer(graph.num_nodes), tuples, graph)
    squashed = evaluate(
        RandomScorer(graph.num_nodes, transform=lambda x: 1 / (1 + np.exp(-3 * x))), tuples, graph
    )
    assert plain == squashed


def test_relations_without_inverse_rank_forward_only():
    train, vocab = parse_tuples(["R\tc\td"])
    test, vocab = parse_tuples(["R\ta\tb"], vocab=vocab)
    graph = build_graph(train, vocab, add_inverse=False, test=test)

    metrics = evaluate(RandomScorer(graph.num_nodes), graph.edges(Split.test), graph)
    assert metrics.count == 1
    assert metrics.inverse.count == 0


def test_exports(tmp_path):
    graph = _single_test_tuple_graph()
    tuples = graph.edges(Split.test, include_inverse=False)
    scorer = RandomScorer(graph.num_nodes, seed=6)
    metrics, results = evaluate_with_ranks(scorer, tuples, graph)

    write_metrics(metrics, tmp_path / "m.json", "filtered", "average", config={"seed": 1})
    payload = json.loads((tmp_path / "m.json").read_text())
    assert payload["metrics"]["mrr"] == metrics.mrr
    assert set(payload) == {"checkpoint", "config", "metrics", "setting", "tie_policy", "timestamps"}

    write_rank_dump(results, graph, tmp_path / "ranks.tsv")
    lines = (tmp_path / "ranks.tsv").read_text().splitlines()
    assert lines[0] == "query\tgold\trank"
    assert lines[1].startswith("a R\tb\t")
    assert len(lines) == 3

    write_top_candidates(scorer, tuples, graph, tmp_path / "top.tsv", top_n=2)
    rows = (tmp_path / "top.tsv").read_text().splitlines()[1:]
    assert [row.split("\t")[2] for row in rows] == ["1", "2"]
