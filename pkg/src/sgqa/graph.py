"""Semantic-graph model plus parsing/serialization of LLM extraction output.

Graph variants:
  * entities-only  — a bare entity list
  * g-full         — every unordered pair of distinct entities, no relations
  * sg-multi       — (subject, relation, object) triples from two-step prompting
  * sg-one         — triples from single-prompt joint extraction
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum

# Lines opening one of these sections end an extraction completion; models
# sometimes keep generating the next prompt block.
SECTION_MARKERS = (
    "Document:",
    "Documents:",
    "Entities:",
    "Graph:",
    "Wikipedia Title:",
    "Q:",
    "A:",
)


class GraphVariant(str, Enum):
    ENTITIES_ONLY = "entities"
    G_FULL = "g-full"
    SG_MULTI = "sg-multi"
    SG_ONE = "sg-one"


@dataclass(frozen=True)
class Entity:
    """A short text span naming an object/event/truth; trimmed, single-line."""

    text: str

    def __post_init__(self):
        if not self.text:
            raise ValueError("entity text must be nonempty")
        if self.text != self.text.strip():
            raise ValueError(f"entity text must be trimmed: {self.text!r}")
        if "\n" in self.text:
            raise ValueError(f"entity text must not contain newlines: {self.text!r}")


@dataclass(frozen=True)
class Triple:
    subject: Entity
    relation: str
    object: Entity

    def __post_init__(self):
        if not self.relation or self.relation != self.relation.strip():
            raise ValueError(f"relation must be nonempty and trimmed: {self.relation!r}")
        if "\n" in self.relation:
            raise ValueError("relation must not contain newlines")


@dataclass(frozen=True)
class EntityPair:
    left: Entity
    right: Entity

    def __post_init__(self):
        if self.left.text == self.right.text:
            raise ValueError(f"pair endpoints must differ: {self.left.text!r}")


@dataclass(frozen=True)
class ParseReport:
    """Accounting for one parse: accepted + rejected lines cover every nonblank
    candidate line; notes carry informational observations only."""

    accepted: int
    rejected_lines: tuple[tuple[int, str, str], ...] = ()
    notes: tuple[str, ...] = ()

    @property
    def candidate_lines(self) -> int:
        return self.accepted + len(self.rejected_lines)


@dataclass(frozen=True)
class SemanticGraph:
    variant: GraphVariant
    entities: tuple[Entity, ...]
    pairs: tuple[EntityPair, ...] = ()
    triples: tuple[Triple, ...] = ()
    source_title: str = ""

    def __post_init__(self):
        if self.variant is GraphVariant.G_FULL:
            if self.triples:
                raise ValueError("g-full graphs carry pairs, not triples")
            k = len({e.text for e in self.entities})
            if len(self.pairs) != k * (k - 1) // 2:
                raise ValueError(
                    f"g-full graph with {k} distinct entities needs {k * (k - 1) // 2} pairs, "
                    f"got {len(self.pairs)}"
                )
        elif self.variant in (GraphVariant.SG_MULTI, GraphVariant.SG_ONE):
            if self.pairs:
                raise ValueError(f"{self.variant.value} graphs carry triples, not pairs")
        else:
            if self.pairs or self.triples:
                raise ValueError("entities-only graphs carry neither pairs nor triples")
        known = {e.text for e in self.entities}
        for pair in self.pairs:
            if pair.left.text not in known or pair.right.text not in known:
                raise ValueError(f"pair endpoint missing from entity list: {pair}")
        for triple in self.triples:
            if triple.subject.text not in known or triple.object.text not in known:
                raise ValueError(f"triple endpoint missing from entity list: {triple}")


def _is_section_marker(line: str) -> bool:
    return any(line.startswith(marker) for marker in SECTION_MARKERS)


def _candidate_lines(raw: str):
    """Yield (line_number, stripped_text) for nonblank lines, stopping at the
    first line that opens a new prompt section (over-generation guard)."""
    for number, line in enumerate(raw.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if _is_section_marker(stripped):
            return
        yield number, stripped


def parse_entities(raw: str) -> tuple[list[Entity], ParseReport]:
    """Parse a line-per-entity completion; duplicates keep the first occurrence."""
    entities: list[Entity] = []
    seen: set[str] = set()
    rejected: list[tuple[int, str, str]] = []
    for number, text in _candidate_lines(raw):
        if text in seen:
            rejected.append((number, text, "duplicate"))
            continue
        seen.add(text)
        entities.append(Entity(text))
    report = ParseReport(accepted=len(entities), rejected_lines=tuple(rejected))
    return entities, report


def _split_fields(line: str) -> list[str] | None:
    """Strip one layer of parentheses and split on ', '. None when the line is
    not a '(...)' form; inner parentheses stay part of their field."""
    if not (line.startswith("(") and line.endswith(")")):
        return None
    return line[1:-1].split(", ")


def _resolve_arity(fields: list[str], known: set[str]) -> tuple[str, str, str]:
    """Pick subject/object boundaries for a >3-field line.

    With known entities: longest field-prefix and longest field-suffix that
    exactly match a known entity fix the boundaries; the middle becomes the
    relation. Without: first field / last field. Joining with ', ' restores
    the original comma-bearing substrings exactly.
    """
    n = len(fields)
    subject_end = 1
    for i in range(n - 2, 0, -1):
        if ", ".join(fields[:i]) in known:
            subject_end = i
            break
    object_start = n - 1
    for j in range(subject_end + 1, n):
        if ", ".join(fields[j:]) in known:
            object_start = j
            break
    subject = ", ".join(fields[:subject_end])
    relation = ", ".join(fields[subject_end:object_start])
    obj = ", ".join(fields[object_start:])
    return subject, relation, obj


def parse_triples(
    raw: str, known_entities: list[Entity] | None = None
) -> tuple[list[Triple], ParseReport]:
    """Parse '(subject, relation, object)' lines into triples.

    Fields beyond three are resolved against `known_entities` when given
    (two-step extraction) or by a first/last fallback (joint extraction).
    Unparseable lines are rejected, never fatal.
    """
    known = {e.text for e in known_entities} if known_entities else set()
    triples: list[Triple] = []
    rejected: list[tuple[int, str, str]] = []
    notes: list[str] = []
    for number, text in _candidate_lines(raw):
        fields = _split_fields(text)
        if fields is None:
            rejected.append((number, text, "parens"))
            continue
        if len(fields) < 3:
            rejected.append((number, text, "arity"))
            continue
        if len(fields) == 3:
            subject, relation, obj = fields
        else:
            subject, relation, obj = _resolve_arity(fields, known)
        subject, relation, obj = subject.strip(), relation.strip(), obj.strip()
        if not subject or not relation or not obj:
            rejected.append((number, text, "empty field"))
            continue
        for endpoint in (subject, obj):
            if known and endpoint not in known:
                notes.append(f"unanchored endpoint: {endpoint!r} (line {number})")
        triples.append(Triple(Entity(subject), relation, Entity(obj)))
    report = ParseReport(
        accepted=len(triples), rejected_lines=tuple(rejected), notes=tuple(notes)
    )
    return triples, report


def _dedupe(entities: list[Entity] | tuple[Entity, ...]) -> list[Entity]:
    seen: set[str] = set()
    out = []
    for entity in entities:
        if entity.text not in seen:
            seen.add(entity.text)
            out.append(entity)
    return out


def _endpoint_closure(entities: list[Entity], triples: list[Triple]) -> tuple[Entity, ...]:
    """Entity list extended with triple endpoints, in first-appearance order."""
    merged = list(entities)
    for triple in triples:
        merged.append(triple.subject)
        merged.append(triple.object)
    return tuple(_dedupe(merged))


def entities_graph(source_title: str, entities: list[Entity]) -> SemanticGraph:
    return SemanticGraph(
        variant=GraphVariant.ENTITIES_ONLY,
        entities=tuple(_dedupe(entities)),
        source_title=source_title,
    )


def build_full_graph(entities: list[Entity], source_title: str = "") -> SemanticGraph:
    """Fully connected graph: all unordered pairs of distinct entities in
    listing order, k·(k−1)/2 of them."""
    distinct = _dedupe(entities)
    pairs = tuple(EntityPair(a, b) for a, b in itertools.combinations(distinct, 2))
    return SemanticGraph(
        variant=GraphVariant.G_FULL,
        entities=tuple(distinct),
        pairs=pairs,
        source_title=source_title,
    )


def multi_step_graph(
    source_title: str, entities: list[Entity], triples: list[Triple]
) -> SemanticGraph:
    """SG-Multi graph; endpoints missing from the extracted entity list are
    appended so the graph stays self-contained."""
    return SemanticGraph(
        variant=GraphVariant.SG_MULTI,
        entities=_endpoint_closure(_dedupe(entities), triples),
        triples=tuple(triples),
        source_title=source_title,
    )


def joint_graph(source_title: str, triples: list[Triple]) -> SemanticGraph:
    """SG-One graph; entities are the triple endpoints in appearance order."""
    return SemanticGraph(
        variant=GraphVariant.SG_ONE,
        entities=_endpoint_closure([], triples),
        triples=tuple(triples),
        source_title=source_title,
    )


def serialize_graph(graph: SemanticGraph) -> str:
    """Render a graph as prompt text, one element per line, in stored order."""
    if graph.variant in (GraphVariant.SG_MULTI, GraphVariant.SG_ONE):
        lines = [f"({t.subject.text}, {t.relation}, {t.object.text})" for t in graph.triples]
    elif graph.variant is GraphVariant.G_FULL:
        lines = [f"({p.left.text}, {p.right.text})" for p in graph.pairs]
    else:
        lines = [e.text for e in graph.entities]
    if not lines:
        return ""
    return "\n".join(lines) + "\n"


def parse_pairs(raw: str) -> tuple[list[EntityPair], ParseReport]:
    """Parse '(left, right)' lines; used for g-full round-trips and persistence."""
    pairs: list[EntityPair] = []
    rejected: list[tuple[int, str, str]] = []
    for number, text in _candidate_lines(raw):
        fields = _split_fields(text)
        if fields is None:
            rejected.append((number, text, "parens"))
            continue
        if len(fields) != 2:
            rejected.append((number, text, "arity"))
            continue
        left, right = fields[0].strip(), fields[1].strip()
        if not left or not right:
            rejected.append((number, text, "empty field"))
            continue
        if left == right:
            rejected.append((number, text, "self-pair"))
            continue
        pairs.append(EntityPair(Entity(left), Entity(right)))
    return pairs, ParseReport(accepted=len(pairs), rejected_lines=tuple(rejected))


def parse_graph(
    raw: str,
    variant: GraphVariant,
    source_title: str = "",
    known_entities: list[Entity] | None = None,
) -> tuple[SemanticGraph, ParseReport]:
    """Parse serialized graph text back into a SemanticGraph of `variant`."""
    if variant is GraphVariant.ENTITIES_ONLY:
        entities, report = parse_entities(raw)
        return entities_graph(source_title, entities), report
    if variant is GraphVariant.G_FULL:
        pairs, report = parse_pairs(raw)
        endpoints: list[Entity] = []
        for pair in pairs:
            endpoints.append(pair.left)
            endpoints.append(pair.right)
        graph = SemanticGraph(
            variant=GraphVariant.G_FULL,
            entities=tuple(_dedupe(endpoints)),
            pairs=tuple(pairs),
            source_title=source_title,
        )
        return graph, report
    triples, report = parse_triples(raw, known_entities)
    if variant is GraphVariant.SG_MULTI:
        graph = multi_step_graph(source_title, known_entities or [], triples)
    else:
        graph = joint_graph(source_title, triples)
    return graph, report


def graph_to_dict(graph: SemanticGraph) -> dict:
    """JSON object form: {source_title, variant, entities, pairs, triples}."""
    return {
        "source_title": graph.source_title,
        "variant": graph.variant.value,
        "entities": [e.text for e in graph.entities],
        "pairs": [[p.left.text, p.right.text] for p in graph.pairs],
        "triples": [[t.subject.text, t.relation, t.object.text] for t in graph.triples],
    }


def graph_from_dict(data: dict) -> SemanticGraph:
    return SemanticGraph(
        variant=GraphVariant(data["variant"]),
        entities=tuple(Entity(t) for t in data["entities"]),
        pairs=tuple(EntityPair(Entity(l), Entity(r)) for l, r in data.get("pairs", [])),
        triples=tuple(
            Triple(Entity(s), rel, Entity(o)) for s, rel, o in data.get("triples", [])
        ),
        source_title=data["source_title"],
    )
