from pathlib import Path
from typing import Iterable, Iterator, Optional

from loguru import logger

from src.errors import ParseError
from src.models import KGTuple

from .vocab import Vocabulary


def parse_tuples(
    lines: Iterable[str],
    vocab: Optional[Vocabulary] = None,
    case_fold: bool = True,
) -> tuple[list[KGTuple], Vocabulary]:
    """
    Parse `relation<TAB>head<TAB>tail[<TAB>weight]` lines.

    Node texts are trimmed (and lowercased when `case_fold` is set) so that
    identical texts share one id. Pass an existing vocabulary to keep ids
    stable across the train/valid/test files. Duplicate tuples are dropped,
    the weight column is ignored and tuples come back in file order.
    """
    vocab = vocab if vocab is not None else Vocabulary(case_fold=case_fold)
    tuples: list[KGTuple] = []
    seen: set[KGTuple] = set()
    duplicates = 0

    for line_number, line in enumerate(lines, start=1):
        line = line.rstrip("\r\n")
        if not line.strip():
            continue

        columns = line.split("\t")
        if len(columns) not in (3, 4):
            raise ParseError(
                f"expected 3 or 4 tab-separated columns, got {len(columns)}",
                line_number=line_number,
            )

        relation, head, tail = columns[:3]
        rel_id = vocab.add_relation(relation, line_number=line_number)
        head_id = vocab.add_node(head, line_number=line_number)
        tail_id = vocab.add_node(tail, line_number=line_number)

        triple = KGTuple(head_id, rel_id, tail_id)
        if triple in seen:
            duplicates += 1
            continue
        seen.add(triple)
        tuples.append(triple)

    if duplicates:
        logger.debug(f"Dropped {duplicates} duplicate tuples")
    return tuples, vocab


def parse_file(
    path: str | Path, vocab: Optional[Vocabulary] = None, case_fold: bool = True
) -> tuple[list[KGTuple], Vocabulary]:
    with open(path, "r", encoding="utf-8") as f:
        return parse_tuples(f, vocab=vocab, case_fold=case_fold)


def serialize_tuples(tuples: Iterable[KGTuple], vocab: Vocabulary) -> Iterator[str]:
    for head, rel, tail in tuples:
        yield (
            f"{vocab.relation_name(rel)}\t{vocab.node_text(head)}\t{vocab.node_text(tail)}"
        )
