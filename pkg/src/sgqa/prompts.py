"""Prompt construction for the five prompt families.

Extraction prompts (entity / relation / joint) end at "Entities:" or
"Graph:"; QA prompts end at "A:". All rendering is deterministic: identical
inputs give byte-identical text, hashed into `prompt_hash`.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources

from .corpus import Paragraph
from .graph import GraphVariant, SemanticGraph, serialize_graph

logger = logging.getLogger(__name__)

# Instruction placed ahead of the question in the CoT setting; the few-shot
# setting omits it.
QUESTION_PREFIX = "Answer the following question by reasoning step-by-step."

# Blocks (demonstrations, the live document block) are separated by exactly
# one blank line.
BLOCK_SEPARATOR = "\n\n"

# Rendered prompts longer than this trigger a warning; they are returned
# unmodified so the text stays deterministic and ends at its cue.
MAX_PROMPT_CHARS = 200_000

DEMO_KINDS = ("entity", "relation", "joint", "qa_cot", "qa_fewshot")

DEFAULT_EXTRACTION_DEMOS = 4
DEFAULT_QA_DEMOS = 2


class Setting(str, Enum):
    COT = "cot"
    FEWSHOT = "fewshot"


class PromptVariant(str, Enum):
    BASE = "base"
    G_FULL = "g-full"
    SG_MULTI = "sg-multi"
    SG_ONE = "sg-one"


# Prompt variants that carry a graph, and the graph variant each expects.
GRAPH_FOR_VARIANT = {
    PromptVariant.G_FULL: GraphVariant.G_FULL,
    PromptVariant.SG_MULTI: GraphVariant.SG_MULTI,
    PromptVariant.SG_ONE: GraphVariant.SG_ONE,
}


class ConfigurationError(ValueError):
    """A demonstration of the wrong kind (or count) was supplied."""


class AssemblyError(ValueError):
    """Prompt parts do not fit together (graph/paragraph mismatch)."""


@dataclass(frozen=True)
class PromptConfig:
    """Rendering knobs; the defaults reproduce the shipped templates."""

    question_prefix: str = QUESTION_PREFIX
    block_separator: str = BLOCK_SEPARATOR
    max_chars: int = MAX_PROMPT_CHARS


_DEFAULT_CONFIG = PromptConfig()


@dataclass(frozen=True)
class Demonstration:
    """One in-context example; input_text is the block body below its section
    marker, output_text the expected completion."""

    kind: str
    input_text: str
    output_text: str
    id: str

    def __post_init__(self):
        if self.kind not in DEMO_KINDS:
            raise ValueError(f"unknown demonstration kind {self.kind!r}")


@dataclass(frozen=True)
class PromptBundle:
    text: str
    kind: str  # entity | relation | joint | qa
    variant: PromptVariant | None
    setting: Setting | None
    demo_ids: tuple[str, ...]
    prompt_hash: str = field(default="")

    def __post_init__(self):
        object.__setattr__(self, "prompt_hash", hash_prompt(self.text))


def hash_prompt(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def clean_text(text: str) -> str:
    """Collapse runs of whitespace to single spaces for prompting.

    Grounding works on raw paragraph text; this never feeds offset math.
    """
    return " ".join(text.split())


def _check_demo_kinds(demos: list[Demonstration], kind: str):
    for demo in demos:
        if demo.kind != kind:
            raise ConfigurationError(
                f"expected demonstrations of kind {kind!r}, got {demo.kind!r} (id {demo.id})"
            )


def _finish(text: str, kind: str, variant, setting, demos: list[Demonstration],
            config: PromptConfig) -> PromptBundle:
    if len(text) > config.max_chars:
        logger.warning("prompt exceeds %d chars (%d); sending unmodified",
                       config.max_chars, len(text))
    return PromptBundle(
        text=text,
        kind=kind,
        variant=variant,
        setting=setting,
        demo_ids=tuple(d.id for d in demos),
    )


def _document_body(paragraph: Paragraph) -> str:
    return f"Wikipedia Title: {paragraph.title}\n{clean_text(paragraph.text)}"


def entity_prompt(
    paragraph: Paragraph,
    demos: list[Demonstration],
    config: PromptConfig = _DEFAULT_CONFIG,
) -> PromptBundle:
    """Entity-extraction prompt: demonstration Document/Entities blocks, then
    the target document, ending at "Entities:"."""
    _check_demo_kinds(demos, "entity")
    blocks = [f"Document:\n{d.input_text}\nEntities:\n{d.output_text}" for d in demos]
    blocks.append(f"Document:\n{_document_body(paragraph)}\nEntities:")
    return _finish(config.block_separator.join(blocks), "entity", None, None, demos, config)


def relation_prompt(
    paragraph: Paragraph,
    entities: list,
    demos: list[Demonstration],
    config: PromptConfig = _DEFAULT_CONFIG,
) -> PromptBundle:
    """Relation-extraction prompt: the document, the extracted entities one
    per line, then "Graph:"."""
    _check_demo_kinds(demos, "relation")
    if not entities:
        raise ValueError("relation_prompt requires a nonempty entity list")
    blocks = [f"Document:\n{d.input_text}\nGraph:\n{d.output_text}" for d in demos]
    entity_lines = "\n".join(e.text for e in entities)
    blocks.append(f"Document:\n{_document_body(paragraph)}\n{entity_lines}\nGraph:")
    return _finish(config.block_separator.join(blocks), "relation", None, None, demos, config)


def joint_graph_prompt(
    paragraph: Paragraph,
    demos: list[Demonstration],
    config: PromptConfig = _DEFAULT_CONFIG,
) -> PromptBundle:
    """Joint-extraction prompt: "Graph:" directly after the document."""
    _check_demo_kinds(demos, "joint")
    if not paragraph.text.strip():
        raise ValueError("joint_graph_prompt requires nonempty paragraph text")
    blocks = [f"Document:\n{d.input_text}\nGraph:\n{d.output_text}" for d in demos]
    blocks.append(f"Document:\n{_document_body(paragraph)}\nGraph:")
    return _finish(config.block_separator.join(blocks), "joint", None, None, demos, config)


def qa_prompt(
    paragraphs: list[Paragraph],
    graphs: list[SemanticGraph],
    question: str,
    setting: Setting,
    variant: PromptVariant,
    demos: list[Demonstration],
    config: PromptConfig = _DEFAULT_CONFIG,
) -> PromptBundle:
    """QA prompt: a Documents block (each document followed by its graph for
    graph variants), a blank line, the question line, and the "A:" cue."""
    setting = Setting(setting)
    variant = PromptVariant(variant)
    _check_demo_kinds(demos, "qa_cot" if setting is Setting.COT else "qa_fewshot")
    if variant is PromptVariant.BASE:
        if graphs:
            raise AssemblyError("base variant takes no graphs")
        graphs = [None] * len(paragraphs)  # type: ignore[list-item]
    else:
        if len(graphs) != len(paragraphs):
            raise AssemblyError(
                f"need one graph per paragraph: {len(graphs)} graphs, {len(paragraphs)} paragraphs"
            )
        expected = GRAPH_FOR_VARIANT[variant]
        for paragraph, graph in zip(paragraphs, graphs):
            if graph.source_title != paragraph.title:
                raise AssemblyError(
                    f"graph for {graph.source_title!r} paired with paragraph {paragraph.title!r}"
                )
            if graph.variant is not expected:
                raise AssemblyError(
                    f"variant {variant.value} expects {expected.value} graphs, got {graph.variant.value}"
                )

    sections = []
    for paragraph, graph in zip(paragraphs, graphs):
        section = _document_body(paragraph)
        if graph is not None:
            serialized = serialize_graph(graph).rstrip("\n")
            if serialized:
                section += "\n" + serialized
        sections.append(section)
    documents = "\n".join(sections)

    if setting is Setting.COT:
        question_line = f"Q: {config.question_prefix} {question}"
    else:
        question_line = f"Q: {question}"

    blocks = [f"Documents:\n{d.input_text}\nA: {d.output_text}" for d in demos]
    blocks.append(f"Documents:\n{documents}\n\n{question_line}\nA:")
    return _finish(config.block_separator.join(blocks), "qa", variant, setting, demos, config)


def load_demonstrations(path) -> list[Demonstration]:
    """Load demonstrations from a JSONL file of {kind, input_text, output_text, id}."""
    demos = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            raw = json.loads(line)
            try:
                demos.append(
                    Demonstration(
                        kind=raw["kind"],
                        input_text=raw["input_text"],
                        output_text=raw["output_text"],
                        id=raw["id"],
                    )
                )
            except (KeyError, ValueError) as exc:
                raise ConfigurationError(f"{path}:{line_no}: bad demonstration: {exc}") from exc
    return demos


def select_demos(demos: list[Demonstration], kind: str, count: int) -> list[Demonstration]:
    """First `count` demonstrations of `kind`, erroring when too few exist."""
    matching = [d for d in demos if d.kind == kind]
    if len(matching) < count:
        raise ConfigurationError(
            f"need {count} demonstrations of kind {kind!r}, found {len(matching)}"
        )
    return matching[:count]


def default_demo_file(kind: str):
    """Path to the packaged demonstration fixture for `kind`."""
    if kind not in DEMO_KINDS:
        raise ValueError(f"unknown demonstration kind {kind!r}")
    return resources.files("sgqa").joinpath(f"fixtures/demos/{kind}.jsonl")
