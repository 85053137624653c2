"""Dataset loading for HotpotQA / 2WikiMultiHopQA style JSON files.

Both datasets ship as a JSON array of records with `_id`, `question`,
`answer`, `supporting_facts` ([title, sent_idx] pairs) and `context`
([title, [sentences]] pairs); 2Wiki adds an `evidences` field which is
ingested but unused downstream.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)

FORMATS = ("hotpotqa", "2wiki")

DEFAULT_DEV_SIZE = 100
DEFAULT_TEST_SIZE = 500


class DatasetParseError(ValueError):
    """The dataset file is not valid JSON or not a JSON array."""


class DatasetSchemaError(ValueError):
    """A record is missing or mistypes a required field."""

    def __init__(self, index: int | None, field_name: str, detail: str = ""):
        self.index = index
        self.field_name = field_name
        where = "top-level" if index is None else f"record {index}"
        msg = f"{where}: bad field '{field_name}'"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class SplitSizeError(ValueError):
    """Requested split sizes exceed the number of available records."""


@dataclass(frozen=True)
class Paragraph:
    """A titled context paragraph; `text` is the in-order sentence concatenation."""

    title: str
    sentences: tuple[str, ...]

    def __post_init__(self):
        if not self.title:
            raise ValueError("paragraph title must be nonempty")

    @property
    def text(self) -> str:
        return "".join(self.sentences)


@dataclass(frozen=True)
class QuestionRecord:
    """One QA instance with its candidate paragraphs and supporting-fact titles."""

    id: str
    question: str
    gold_answer: str
    context: tuple[Paragraph, ...]
    supporting_titles: frozenset[str]
    # 2Wiki-only raw evidences, kept for round-tripping; never consumed.
    evidences: tuple = field(default=(), compare=False)


@dataclass(frozen=True)
class Split:
    dev: tuple[QuestionRecord, ...]
    test: tuple[QuestionRecord, ...]
    seed: int


def _require(raw: dict, index: int, field_name: str):
    if field_name not in raw:
        raise DatasetSchemaError(index, field_name, "missing")
    return raw[field_name]


def _parse_context(raw_context, index: int) -> tuple[Paragraph, ...]:
    if not isinstance(raw_context, list):
        raise DatasetSchemaError(index, "context", "expected a list")
    paragraphs = []
    for pos, item in enumerate(raw_context):
        if (
            not isinstance(item, (list, tuple))
            or len(item) != 2
            or not isinstance(item[0], str)
            or not isinstance(item[1], list)
        ):
            raise DatasetSchemaError(
                index, "context", f"entry {pos} is not a [title, [sentences]] pair"
            )
        title, sentences = item
        if not all(isinstance(s, str) for s in sentences):
            raise DatasetSchemaError(index, "context", f"entry {pos} has non-string sentences")
        try:
            paragraphs.append(Paragraph(title=title, sentences=tuple(sentences)))
        except ValueError as exc:
            raise DatasetSchemaError(index, "context", f"entry {pos}: {exc}") from exc
    return tuple(paragraphs)


def _parse_supporting_titles(raw_facts, index: int) -> frozenset[str]:
    if not isinstance(raw_facts, list):
        raise DatasetSchemaError(index, "supporting_facts", "expected a list")
    titles = []
    for pos, item in enumerate(raw_facts):
        if not isinstance(item, (list, tuple)) or len(item) < 1 or not isinstance(item[0], str):
            raise DatasetSchemaError(
                index, "supporting_facts", f"entry {pos} is not a [title, sent_idx] pair"
            )
        titles.append(item[0])
    return frozenset(titles)


def load_dataset(path, format: str = "hotpotqa") -> list[QuestionRecord]:
    """Load a dataset file into typed records.

    Raises DatasetParseError on malformed JSON (with byte offset) and
    DatasetSchemaError naming the record index and field on schema problems.
    """
    if format not in FORMATS:
        raise ValueError(f"unknown dataset format {format!r}; expected one of {FORMATS}")
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DatasetParseError(
                f"{path}: malformed JSON at byte offset {exc.pos}: {exc.msg}"
            ) from exc
    if not isinstance(data, list):
        raise DatasetParseError(f"{path}: expected a top-level JSON array of records")

    records = []
    for index, raw in enumerate(data):
        if not isinstance(raw, dict):
            raise DatasetSchemaError(index, "<record>", "not a JSON object")
        record_id = _require(raw, index, "_id")
        question = _require(raw, index, "question")
        answer = _require(raw, index, "answer")
        context = _parse_context(_require(raw, index, "context"), index)
        titles = _parse_supporting_titles(_require(raw, index, "supporting_facts"), index)
        if not isinstance(question, str) or not question:
            raise DatasetSchemaError(index, "question", "must be a nonempty string")
        if not isinstance(answer, str) or not answer:
            raise DatasetSchemaError(index, "answer", "must be a nonempty string")
        evidences = ()
        if format == "2wiki":
            evidences = tuple(tuple(e) for e in raw.get("evidences", []))
        records.append(
            QuestionRecord(
                id=str(record_id),
                question=question,
                gold_answer=answer,
                context=context,
                supporting_titles=titles,
                evidences=evidences,
            )
        )
    return records


def record_to_dict(record: QuestionRecord) -> dict:
    """Re-serialize a record into the published schema (supporting sent indices
    are not retained by the typed model and are emitted as 0)."""
    out = {
        "_id": record.id,
        "question": record.question,
        "answer": record.gold_answer,
        "supporting_facts": [[t, 0] for t in sorted(record.supporting_titles)],
        "context": [[p.title, list(p.sentences)] for p in record.context],
    }
    if record.evidences:
        out["evidences"] = [list(e) for e in record.evidences]
    return out


def gold_paragraphs(record: QuestionRecord) -> list[Paragraph]:
    """Context paragraphs whose title is a supporting-fact title, in context order.

    Supporting titles absent from the context are skipped with a warning;
    duplicate titles in the context yield every matching paragraph.
    """
    found_titles = {p.title for p in record.context}
    for title in sorted(record.supporting_titles - found_titles):
        logger.warning("question %s: supporting title %r not in context; skipped", record.id, title)
    return [p for p in record.context if p.title in record.supporting_titles]


def _deterministic_shuffle(items: list, seed: int) -> list:
    """Fisher-Yates shuffle driven by random.Random(seed).random().

    random() is the one primitive the random module guarantees stable across
    Python versions for a given seed, so splits reproduce everywhere.
    """
    rng = random.Random(seed)
    items = list(items)
    for i in range(len(items) - 1, 0, -1):
        j = int(rng.random() * (i + 1))
        items[i], items[j] = items[j], items[i]
    return items


def sample_splits(
    records: list[QuestionRecord],
    seed: int,
    dev_n: int = DEFAULT_DEV_SIZE,
    test_n: int = DEFAULT_TEST_SIZE,
) -> Split:
    """Deterministically sample disjoint dev/test subsets.

    Records are sorted by id before shuffling, so the result is a pure
    function of (record ids, seed, dev_n, test_n).
    """
    if dev_n < 0 or test_n < 0:
        raise SplitSizeError("split sizes must be non-negative")
    if dev_n + test_n > len(records):
        raise SplitSizeError(
            f"requested {dev_n}+{test_n} records but only {len(records)} available"
        )
    shuffled = _deterministic_shuffle(sorted(records, key=lambda r: r.id), seed)
    return Split(
        dev=tuple(shuffled[:dev_n]),
        test=tuple(shuffled[dev_n : dev_n + test_n]),
        seed=seed,
    )
