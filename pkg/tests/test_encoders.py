import numpy as np
import pytest
import torch

from src.encoders import (
    PAD,
    UNK,
    PrecomputedEncoder,
    TextEncoder,
    TokenVocab,
    load_checkpoint,
    load_precomputed,
    load_text_encoder,
    random_semantic_matrix,
    save_checkpoint,
    save_text_encoder,
    tokenize,
    write_embeddings,
)
from src.errors import CoverageError, FormatError
from src.models import Node
from src.testing import write_lines


def _vocab() -> TokenVocab:
    return TokenVocab.build(["eat breakfast", "take breakfast", "read book"])


def test_tokenize_two_tokens():
    vocab = _vocab()
    assert tokenize("eat breakfast", vocab) == [vocab.id("eat"), vocab.id("breakfast")]


def test_tokenize_fallback_and_case():
    vocab = _vocab()
    assert tokenize("???", vocab) == [UNK]
    assert tokenize("Take breakfast", vocab) == tokenize("take breakfast", vocab)
    assert tokenize("cook breakfast", vocab)[0] == UNK


def test_underscores_split_tokens():
    vocab = _vocab()
    assert tokenize("eat_breakfast", vocab) == tokenize("eat breakfast", vocab)
    assert {"eat", "breakfast"} <= set(TokenVocab.build(["eat_breakfast"]).tokens)


def test_encode_node_is_token_mean():
    vocab = _vocab()
    encoder = TextEncoder(vocab, d_sem=6, seed=1)
    rows = encoder.embedding.weight.detach()

    single = encoder.encode_node("book")
    assert torch.equal(single, rows[vocab.id("book")])

    pair = encoder.encode_node("eat breakfast")
    expected = (rows[vocab.id("eat")] + rows[vocab.id("breakfast")]) / 2
    assert torch.allclose(pair, expected, atol=1e-15)

    assert torch.allclose(encoder.encode_node("breakfast eat"), pair, atol=1e-15)


def test_encode_node_gradient_matches_finite_differences():
    vocab = _vocab()
    encoder = TextEncoder(vocab, d_sem=3, seed=2)
    readout = torch.tensor([0.3, -1.2, 0.7], dtype=torch.float64)

    def loss() -> torch.Tensor:
        return (encoder.encode_node("eat breakfast") * readout).sum() ** 2

    encoder.zero_grad()
    loss().backward()
    analytic = encoder.embedding.weight.grad.clone()

    step = 1e-5
    weight = encoder.embedding.weight
    for token in ("eat", "breakfast", "book"):
        row = vocab.id(token)
        for col in range(3):
            with torch.no_grad():
                original = weight[row, col].item()
                weight[row, col] = original + step
                plus = float(loss())
                weight[row, col] = original - step
                minus = float(loss())
                weight[row, col] = original
            numeric = (plus - minus) / (2 * step)
            scale = max(abs(numeric), abs(analytic[row, col].item()), 1e-4)
            assert abs(numeric - analytic[row, col].item()) / scale <= 1e-4


def test_encode_all_shapes_and_purity():
    encoder = TextEncoder(_vocab(), d_sem=5, seed=0)
    nodes = [Node(id=0, text="eat breakfast"), Node(id=1, text="read book"), Node(id=2, text="eat breakfast")]

    first = encoder.encode_all(nodes)
    second = encoder.encode_all(nodes)
    assert first.values.shape == (3, 5)
    assert np.array_equal(first.values[0], first.values[2])
    assert first.values.tobytes() == second.values.tobytes()


def test_init_scale_and_pad_row():
    encoder = TextEncoder(_vocab(), d_sem=200, seed=0)
    weight = encoder.embedding.weight.detach()
    assert torch.all(weight[PAD] == 0)
    assert float(weight.abs().max()) <= 0.5 / 200


def test_random_semantic_matrix_is_seeded():
    a = random_semantic_matrix(4, 3, seed=5)
    b = random_semantic_matrix(4, 3, seed=5)
    assert np.array_equal(a.values, b.values)


def test_load_precomputed(tmp_path):
    path = write_lines(
        tmp_path / "emb.txt",
        ["2 4", "eat breakfast\t0.5 -1 2 0", "Read  Book\t1 1 1 1"],
    )
    nodes = [Node(id=0, text="read book"), Node(id=1, text="eat breakfast")]

    matrix = load_precomputed(path, nodes)
    assert matrix.values.shape == (2, 4)
    assert np.array_equal(matrix.row(1), [0.5, -1.0, 2.0, 0.0])
    assert np.array_equal(PrecomputedEncoder(path).encode_all(nodes).values, matrix.values)


def test_load_precomputed_reports_missing_nodes(tmp_path):
    path = write_lines(tmp_path / "emb.txt", ["1 2", "eat breakfast\t1 0"])
    nodes = [Node(id=0, text="eat breakfast"), Node(id=1, text="eat breakfasts")]

    with pytest.raises(CoverageError) as exc:
        load_precomputed(path, nodes)
    assert exc.value.missing == ["eat breakfasts"]
    assert exc.value.suggestions.get("eat breakfasts") == "eat breakfast"


@pytest.mark.parametrize(
    "lines", [["2"], ["1 3", "eat\t1 2"], ["1 2", "eat 1 2"], ["1 2", "eat\t1 x"]]
)
def test_embedding_file_format_errors(tmp_path, lines: list[str]):
    path = write_lines(tmp_path / "emb.txt", lines)
    with pytest.raises(FormatError):
        load_precomputed(path, [Node(id=0, text="eat")])


def test_write_embeddings_reloads(tmp_path):
    values = np.array([[0.25, -1.5], [3.0, 0.125]])
    write_embeddings(values, ["a b", "c"], tmp_path / "out.txt")
    matrix = load_precomputed(tmp_path / "out.txt", [Node(id=0, text="a b"), Node(id=1, text="c")])
    assert np.array_equal(matrix.values, values)


def test_checkpoint_container(tmp_path):
    tensors = {"w": torch.arange(6, dtype=torch.float64).reshape(2, 3), "b": torch.ones(3)}
    save_checkpoint(tmp_path / "x.ckpt", "demo", tensors, {"note": "hi"})
    loaded = load_checkpoint(tmp_path / "x.ckpt")

    assert loaded.kind == "demo"
    assert loaded.meta == {"note": "hi"}
    assert torch.equal(loaded.tensor("w"), tensors["w"])
    assert (tmp_path / "x.ckpt").read_bytes().startswith(b"CPNCCKPT")


def test_checkpoint_rejects_other_files(tmp_path):
    (tmp_path / "bad.ckpt").write_bytes(b"not a checkpoint")
    with pytest.raises(FormatError):
        load_checkpoint(tmp_path / "bad.ckpt")


def test_text_encoder_checkpoint(tmp_path):
    encoder = TextEncoder(_vocab(), d_sem=4, use_projection_head=True, seed=3)
    save_text_encoder(encoder, tmp_path / "enc.ckpt")
    loaded = load_text_encoder(tmp_path / "enc.ckpt")

    assert loaded.vocab.tokens == encoder.vocab.tokens
    expected = encoder.encode_node("eat breakfast").detach().to(torch.float32)
    assert torch.allclose(loaded.encode_node("eat breakfast").float(), expected, atol=1e-6)
