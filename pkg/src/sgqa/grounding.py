"""Verbatim grounding of graph elements against their source paragraph.

Matching is casefolded and whitespace-collapsed but nothing fuzzier, since
the claim being measured is verbatim traceability. Span offsets always refer
to the raw paragraph text. Relations get a separate sub-rate because
relational phrases are often inflected away from the source wording.
"""

from __future__ import annotations

import html
import json
import logging
from dataclasses import dataclass

from .corpus import Paragraph
from .graph import SemanticGraph

logger = logging.getLogger(__name__)

ELEMENT_KINDS = ("entity", "subject", "relation", "object")

HTML_CLASS = {"entity": "entity", "subject": "entity", "object": "entity",
              "relation": "relation"}


@dataclass(frozen=True)
class GroundingSpan:
    element_kind: str
    char_start: int
    char_end: int
    matched_text: str

    def __post_init__(self):
        if self.element_kind not in ELEMENT_KINDS:
            raise ValueError(f"unknown element kind {self.element_kind!r}")
        if not 0 <= self.char_start < self.char_end:
            raise ValueError(f"bad span offsets [{self.char_start}, {self.char_end})")


@dataclass(frozen=True)
class ElementGrounding:
    element_kind: str
    element_text: str
    grounded: bool
    spans: tuple[GroundingSpan, ...]


@dataclass(frozen=True)
class GroundingReport:
    source_title: str
    per_element: tuple[ElementGrounding, ...]
    grounding_rate: float
    entity_rate: float
    relation_rate: float | None  # None when the graph has no relations


def _normalize_with_offsets(text: str) -> tuple[str, list[int], list[int]]:
    """Casefold and collapse whitespace, tracking each normalized character's
    raw [start, end) range so matches map back to raw offsets."""
    chars: list[str] = []
    starts: list[int] = []
    ends: list[int] = []
    for idx, ch in enumerate(text):
        if ch.isspace():
            if chars and chars[-1] == " ":
                ends[-1] = idx + 1
            elif chars:
                chars.append(" ")
                starts.append(idx)
                ends.append(idx + 1)
            # leading whitespace produces nothing
        else:
            for folded in ch.casefold():
                chars.append(folded)
                starts.append(idx)
                ends.append(idx + 1)
    return "".join(chars), starts, ends


def _normalize_element(element: str) -> str:
    return " ".join(element.casefold().split())


def ground_element(
    element: str, paragraph: Paragraph, kind: str = "entity"
) -> tuple[bool, list[GroundingSpan]]:
    """All non-overlapping occurrences of `element` in the paragraph under
    casefold + whitespace-collapse matching; offsets index the raw text."""
    needle = _normalize_element(element)
    if not needle:
        return False, []
    haystack, starts, ends = _normalize_with_offsets(paragraph.text)
    spans: list[GroundingSpan] = []
    pos = haystack.find(needle)
    while pos != -1:
        last = pos + len(needle) - 1
        # Skip matches whose edges fall inside a single raw character's
        # casefold expansion (e.g. the two 's' of a folded sharp s).
        start_aligned = pos == 0 or starts[pos] != starts[pos - 1]
        end_aligned = last + 1 == len(haystack) or starts[last + 1] != starts[last]
        if start_aligned and end_aligned:
            char_start, char_end = starts[pos], ends[last]
            spans.append(
                GroundingSpan(
                    element_kind=kind,
                    char_start=char_start,
                    char_end=char_end,
                    matched_text=paragraph.text[char_start:char_end],
                )
            )
            pos = haystack.find(needle, pos + len(needle))
        else:
            pos = haystack.find(needle, pos + 1)
    return bool(spans), spans


def _graph_elements(graph: SemanticGraph) -> list[tuple[str, str]]:
    """(kind, text) pairs to check: every entity, then every triple field."""
    elements = [("entity", e.text) for e in graph.entities]
    for triple in graph.triples:
        elements.append(("subject", triple.subject.text))
        elements.append(("relation", triple.relation))
        elements.append(("object", triple.object.text))
    return elements


def _rate(entries: list[ElementGrounding]) -> float:
    if not entries:
        return 1.0  # vacuous: zero elements count as fully grounded
    return sum(1 for e in entries if e.grounded) / len(entries)


def grounding_report(graph: SemanticGraph, paragraph: Paragraph) -> GroundingReport:
    """Check every graph element against the paragraph and compute rates."""
    if graph.source_title != paragraph.title:
        raise ValueError(
            f"graph is for {graph.source_title!r}, paragraph is {paragraph.title!r}"
        )
    per_element = []
    for kind, text in _graph_elements(graph):
        grounded, spans = ground_element(text, paragraph, kind=kind)
        per_element.append(
            ElementGrounding(
                element_kind=kind, element_text=text, grounded=grounded, spans=tuple(spans)
            )
        )
    relations = [e for e in per_element if e.element_kind == "relation"]
    others = [e for e in per_element if e.element_kind != "relation"]
    return GroundingReport(
        source_title=graph.source_title,
        per_element=tuple(per_element),
        grounding_rate=_rate(per_element),
        entity_rate=_rate(others),
        relation_rate=_rate(relations) if relations else None,
    )


def report_to_dict(report: GroundingReport) -> dict:
    return {
        "source_title": report.source_title,
        "grounding_rate": report.grounding_rate,
        "entity_rate": report.entity_rate,
        "relation_rate": report.relation_rate,
        "elements": [
            {
                "kind": e.element_kind,
                "text": e.element_text,
                "grounded": e.grounded,
                "spans": [
                    {
                        "element_kind": s.element_kind,
                        "char_start": s.char_start,
                        "char_end": s.char_end,
                        "matched_text": s.matched_text,
                    }
                    for s in e.spans
                ],
            }
            for e in report.per_element
        ],
    }


def spans_from_json(text: str) -> list[GroundingSpan]:
    """Parse render_highlights(json) output back into spans (round-trip aid)."""
    data = json.loads(text)
    spans = []
    for element in data["elements"]:
        for s in element["spans"]:
            spans.append(
                GroundingSpan(
                    element_kind=s["element_kind"],
                    char_start=s["char_start"],
                    char_end=s["char_end"],
                    matched_text=s["matched_text"],
                )
            )
    return spans


def _select_nonoverlapping(spans: list[GroundingSpan]) -> tuple[list[GroundingSpan], int]:
    """Keep outermost spans: sorted by start then longest-first, a span is
    dropped when it overlaps one already kept."""
    ordered = sorted(spans, key=lambda s: (s.char_start, -(s.char_end - s.char_start)))
    kept: list[GroundingSpan] = []
    dropped = 0
    for span in ordered:
        if kept and span.char_start < kept[-1].char_end:
            dropped += 1
            continue
        kept.append(span)
    return kept, dropped


def render_highlights(paragraph: Paragraph, report: GroundingReport, format: str = "json") -> str:
    """Render the report as JSON (all spans, lossless) or as a static HTML
    page with entity and relation spans marked distinguishably."""
    if format == "json":
        payload = {"title": paragraph.title, "text": paragraph.text}
        payload.update(report_to_dict(report))
        return json.dumps(payload, ensure_ascii=False, indent=2)
    if format != "html":
        raise ValueError(f"unknown format {format!r}")

    all_spans = [s for e in report.per_element for s in e.spans]
    kept, dropped = _select_nonoverlapping(all_spans)
    if dropped:
        logger.warning("dropped %d overlapping span(s) for %r", dropped, paragraph.title)
    pieces = []
    cursor = 0
    for span in kept:
        pieces.append(html.escape(paragraph.text[cursor : span.char_start]))
        css = HTML_CLASS[span.element_kind]
        pieces.append(
            f'<mark class="{css}">{html.escape(paragraph.text[span.char_start : span.char_end])}</mark>'
        )
        cursor = span.char_end
    pieces.append(html.escape(paragraph.text[cursor:]))
    body = "".join(pieces)
    note = f"<!-- {dropped} overlapping span(s) dropped -->\n" if dropped else ""
    rate = f"{report.grounding_rate:.3f}"
    return (
        "<!DOCTYPE html>\n"
        '<html><head><meta charset="utf-8">\n'
        "<style>\n"
        "mark.entity { background: #ffd2d2; }\n"
        "mark.relation { background: #d2f0d2; }\n"
        "</style></head>\n"
        f"<body>\n{note}<h2>{html.escape(paragraph.title)}</h2>\n"
        f"<p>{body}</p>\n"
        f"<p class=\"rate\">grounding rate: {rate}</p>\n"
        "</body></html>\n"
    )
