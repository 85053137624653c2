"""Run orchestration: extract graphs, answer questions, evaluate outputs.

Stages are idempotent: completions are cached on disk, so re-running (or
resuming after a kill) recomputes outputs byte-identically without repeat
backend calls. The experiment matrix (4 prompt variants x 2 settings) is
purely configuration.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import os
import tempfile
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import chain as chain_mod
from . import corpus, graph as graph_mod, grounding, metrics, prompts
from .llm import (
    CompletionCache,
    HTTPBackend,
    ReplayBackend,
    cached_generate,
    extraction_request,
    qa_request,
)
from .prompts import PromptVariant, Setting

logger = logging.getLogger(__name__)

ANSWER_COLUMNS = ("em", "f1", "precision", "recall")
ROUGE_COLUMNS = ("rouge1", "rouge2", "rougeL")


class UsageError(ValueError):
    """The requested run is not a valid configuration."""


@dataclass
class RunConfig:
    dataset_path: str
    dataset_format: str = "hotpotqa"
    split: str = "all"  # dev | test | all
    seed: int = 0
    dev_n: int = corpus.DEFAULT_DEV_SIZE
    test_n: int = corpus.DEFAULT_TEST_SIZE
    variant: PromptVariant = PromptVariant.BASE
    setting: Setting = Setting.COT
    backend: str = "replay"  # replay | live
    model_id: str = "gpt-3.5-turbo-instruct"
    endpoint: str = ""
    replay_file: str = ""
    cache_dir: str = ".sgqa-cache"
    demo_dir: str = ""  # empty: packaged demos
    extraction_demo_count: int = prompts.DEFAULT_EXTRACTION_DEMOS
    qa_demo_count: int = prompts.DEFAULT_QA_DEMOS
    question_prefix: str = prompts.QUESTION_PREFIX
    block_separator: str = prompts.BLOCK_SEPARATOR
    max_prompt_chars: int = prompts.MAX_PROMPT_CHARS
    output_dir: str = "runs/run"
    workers: int = 1
    allow_partial: bool = False

    def __post_init__(self):
        self.variant = PromptVariant(self.variant)
        self.setting = Setting(self.setting)
        if self.split not in ("dev", "test", "all"):
            raise UsageError(f"unknown split {self.split!r}")
        if self.backend not in ("replay", "live"):
            raise UsageError(f"unknown backend {self.backend!r}")

    def prompt_config(self) -> prompts.PromptConfig:
        return prompts.PromptConfig(
            question_prefix=self.question_prefix,
            block_separator=self.block_separator,
            max_chars=self.max_prompt_chars,
        )

    def snapshot(self) -> dict:
        data = dataclasses.asdict(self)
        data["variant"] = self.variant.value
        data["setting"] = self.setting.value
        return data


_STATUS_RANK = {"pending": 0, "extracted": 1, "answered": 2, "scored": 3}


class RunManifest:
    """Per-question status ledger persisted as JSON; transitions only move
    forward (a failed question may be retried on a later run)."""

    def __init__(self, path, config: RunConfig | None = None):
        self.path = Path(path)
        self._lock = threading.Lock()
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                self._data = json.load(fh)
            if config is not None:
                self._data["config"] = config.snapshot()
        else:
            self._data = {
                "config": config.snapshot() if config else {},
                "questions": {},
            }

    def ensure(self, question_ids: list[str]):
        with self._lock:
            for qid in question_ids:
                self._data["questions"].setdefault(qid, {"status": "pending", "reason": None})
            self._save()

    def mark(self, question_id: str, status: str, reason: str | None = None):
        with self._lock:
            entry = self._data["questions"].setdefault(
                question_id, {"status": "pending", "reason": None}
            )
            current = entry["status"]
            if status == "failed":
                entry.update(status="failed", reason=reason)
            elif current == "failed" or _STATUS_RANK[status] >= _STATUS_RANK.get(current, 0):
                entry.update(status=status, reason=None)
            self._save()

    def status(self, question_id: str) -> str:
        return self._data["questions"].get(question_id, {}).get("status", "pending")

    def pending(self, target: str) -> list[str]:
        """Question ids not yet at `target` status (failed ones included)."""
        rank = _STATUS_RANK[target]
        out = []
        for qid, entry in self._data["questions"].items():
            if entry["status"] == "failed" or _STATUS_RANK.get(entry["status"], 0) < rank:
                out.append(qid)
        return out

    def totals(self) -> dict:
        counts: dict[str, int] = {}
        for entry in self._data["questions"].values():
            counts[entry["status"]] = counts.get(entry["status"], 0) + 1
        return counts

    def failed(self) -> list[tuple[str, str]]:
        return [
            (qid, entry.get("reason") or "")
            for qid, entry in self._data["questions"].items()
            if entry["status"] == "failed"
        ]

    def _save(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(self._data, fh, indent=2, sort_keys=True)
        os.replace(tmp, self.path)


def load_records(config: RunConfig) -> list[corpus.QuestionRecord]:
    records = corpus.load_dataset(config.dataset_path, config.dataset_format)
    if config.split == "all":
        return records
    split = corpus.sample_splits(records, config.seed, config.dev_n, config.test_n)
    return list(split.dev if config.split == "dev" else split.test)


def make_backend(config: RunConfig):
    if config.backend == "replay":
        if not config.replay_file:
            raise UsageError("replay backend needs --replay-file")
        return ReplayBackend.from_file(config.replay_file)
    if not config.endpoint:
        raise UsageError("live backend needs --endpoint")
    return HTTPBackend(config.endpoint)


def _demo_set(config: RunConfig, kind: str) -> list[prompts.Demonstration]:
    if config.demo_dir:
        path = Path(config.demo_dir) / f"{kind}.jsonl"
    else:
        path = prompts.default_demo_file(kind)
    count = (
        config.qa_demo_count if kind.startswith("qa") else config.extraction_demo_count
    )
    return prompts.select_demos(prompts.load_demonstrations(path), kind, count)


def extract_paragraph_graph(
    paragraph: corpus.Paragraph,
    variant: PromptVariant,
    demos: dict[str, list[prompts.Demonstration]],
    backend,
    cache: CompletionCache,
    model_id: str,
    prompt_config: prompts.PromptConfig | None = None,
) -> graph_mod.SemanticGraph:
    """Build one paragraph's graph via the variant's prompting recipe."""
    pconf = prompt_config or prompts.PromptConfig()
    if variant is PromptVariant.SG_ONE:
        bundle = prompts.joint_graph_prompt(paragraph, demos["joint"], pconf)
        completion = cached_generate(extraction_request(bundle.text, model_id), backend, cache)
        triples, _ = graph_mod.parse_triples(completion.text)
        return graph_mod.joint_graph(paragraph.title, triples)

    bundle = prompts.entity_prompt(paragraph, demos["entity"], pconf)
    completion = cached_generate(extraction_request(bundle.text, model_id), backend, cache)
    entities, _ = graph_mod.parse_entities(completion.text)

    if variant is PromptVariant.G_FULL:
        return graph_mod.build_full_graph(entities, source_title=paragraph.title)

    # SG-Multi: relations over the extracted entities. No entities means
    # nothing to relate; emit an empty graph rather than aborting the question.
    if not entities:
        logger.warning("no entities extracted for %r; emitting empty graph", paragraph.title)
        return graph_mod.multi_step_graph(paragraph.title, [], [])
    bundle = prompts.relation_prompt(paragraph, entities, demos["relation"], pconf)
    completion = cached_generate(extraction_request(bundle.text, model_id), backend, cache)
    triples, _ = graph_mod.parse_triples(completion.text, known_entities=entities)
    return graph_mod.multi_step_graph(paragraph.title, entities, triples)


def _map_records(config: RunConfig, records, worker):
    """Run `worker` over records, preserving input order in the results."""
    if config.workers <= 1:
        return [worker(r) for r in records]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(worker, records))


def run_extract(config: RunConfig) -> Path:
    """Extract a semantic graph per gold paragraph; writes graphs.jsonl."""
    if config.variant is PromptVariant.BASE:
        raise UsageError("the base variant has no extraction stage")
    records = load_records(config)
    backend = make_backend(config)
    cache = CompletionCache(config.cache_dir)
    demos = {
        kind: _demo_set(config, kind)
        for kind in ("entity", "relation", "joint")
    }
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(out_dir / "manifest.json", config)
    manifest.ensure([r.id for r in records])

    prompt_config = config.prompt_config()

    def worker(record: corpus.QuestionRecord):
        rows = []
        try:
            for index, paragraph in enumerate(corpus.gold_paragraphs(record)):
                g = extract_paragraph_graph(
                    paragraph, config.variant, demos, backend, cache,
                    config.model_id, prompt_config,
                )
                rows.append(
                    {
                        "question_id": record.id,
                        "paragraph_index": index,
                        "graph": graph_mod.graph_to_dict(g),
                    }
                )
        except Exception as exc:
            logger.exception("extraction failed for %s", record.id)
            manifest.mark(record.id, "failed", reason=f"extract: {exc}")
            return None
        manifest.mark(record.id, "extracted")
        return rows

    results = _map_records(config, records, worker)
    graphs_path = out_dir / "graphs.jsonl"
    with open(graphs_path, "w", encoding="utf-8") as fh:
        for rows in results:
            for row in rows or ():
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    return graphs_path


def load_graphs(path) -> dict[str, dict[int, graph_mod.SemanticGraph]]:
    graphs: dict[str, dict[int, graph_mod.SemanticGraph]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            graphs.setdefault(row["question_id"], {})[row["paragraph_index"]] = (
                graph_mod.graph_from_dict(row["graph"])
            )
    return graphs


def run_answer(config: RunConfig, graphs_path=None) -> Path:
    """Answer every question; writes predictions.jsonl."""
    records = load_records(config)
    backend = make_backend(config)
    cache = CompletionCache(config.cache_dir)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(out_dir / "manifest.json", config)
    manifest.ensure([r.id for r in records])

    needs_graphs = config.variant is not PromptVariant.BASE
    if needs_graphs:
        graphs_path = graphs_path or out_dir / "graphs.jsonl"
        if not Path(graphs_path).exists():
            raise UsageError(f"variant {config.variant.value} needs graphs: {graphs_path} missing")
        graphs_by_qid = load_graphs(graphs_path)
    elif graphs_path is not None:
        raise UsageError("the base variant takes no graphs")

    kind = "qa_cot" if config.setting is Setting.COT else "qa_fewshot"
    demos = _demo_set(config, kind)
    prompt_config = config.prompt_config()

    def worker(record: corpus.QuestionRecord):
        try:
            paragraphs = corpus.gold_paragraphs(record)
            if needs_graphs:
                by_index = graphs_by_qid.get(record.id)
                if by_index is None or len(by_index) != len(paragraphs):
                    manifest.mark(record.id, "failed", reason="missing graph")
                    return None
                graphs = [by_index[i] for i in range(len(paragraphs))]
            else:
                graphs = []
            bundle = prompts.qa_prompt(
                paragraphs, graphs, record.question, config.setting, config.variant,
                demos, prompt_config,
            )
            completion = cached_generate(
                qa_request(bundle.text, config.model_id), backend, cache
            )
            flags: list[str] = []
            if config.setting is Setting.COT:
                parsed = chain_mod.parse_chain(completion.text)
                sentences = list(parsed.sentences)
                answer = parsed.extracted_answer
                if parsed.used_fallback:
                    flags.append("no-answer-pattern")
            else:
                sentences = []
                answer = completion.text.strip()
            row = {
                "question_id": record.id,
                "variant": config.variant.value,
                "setting": config.setting.value,
                "prompt_hash": bundle.prompt_hash,
                "completion": completion.text,
                "chain_sentences": sentences,
                "answer": answer,
                "backend_id": completion.backend_id,
                "flags": flags,
            }
        except Exception as exc:
            logger.exception("answering failed for %s", record.id)
            manifest.mark(record.id, "failed", reason=f"answer: {exc}")
            return None
        manifest.mark(record.id, "answered")
        return row

    results = _map_records(config, records, worker)
    predictions_path = out_dir / "predictions.jsonl"
    with open(predictions_path, "w", encoding="utf-8") as fh:
        for row in results:
            if row is not None:
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    return predictions_path


def read_predictions(paths) -> list[dict]:
    rows = []
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    rows.append(json.loads(line))
    return rows


def _read_keyed_jsonl(path, value_field: str) -> dict[str, object]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                row = json.loads(line)
                out[row["question_id"]] = row[value_field]
    return out


def _write_csv(path, header: list[str], rows: list[list]):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    Path(path).write_text(buffer.getvalue(), encoding="utf-8")


def _markdown_table(header: list[str], rows: list[list]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for row in rows:
        lines.append("| " + " | ".join(str(c) for c in row) + " |")
    return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    return "" if value is None else f"{value:.4f}"


def run_evaluate(
    predictions: list[dict],
    records: list[corpus.QuestionRecord],
    output_dir,
    human_labels: dict[str, int] | None = None,
    reference_chains: dict[str, str] | None = None,
) -> dict:
    """Score predictions and write per-question and aggregate metric files.

    Returns the full report dict (also written as metrics.json). Predictions
    whose question id is not in the dataset are excluded with a warning.
    """
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    gold = {r.id: r.gold_answer for r in records}

    known, skipped = [], []
    for row in predictions:
        (known if row["question_id"] in gold else skipped).append(row)
    for row in skipped:
        logger.warning("prediction for unknown question id %r excluded", row["question_id"])

    # Answer scores, grouped by (variant, setting).
    per_question_rows = []
    groups: dict[str, list[metrics.AnswerScore]] = {}
    scored_rows: list[tuple[dict, metrics.AnswerScore]] = []
    for row in known:
        score = metrics.answer_score(row["answer"], gold[row["question_id"]])
        scored_rows.append((row, score))
        group = f"{row['variant']}/{row['setting']}"
        groups.setdefault(group, []).append(score)
        per_question_rows.append(
            [row["question_id"], row["variant"], row["setting"],
             _fmt(score.em), _fmt(score.f1), _fmt(score.precision), _fmt(score.recall)]
        )
    _write_csv(
        out_dir / "answer_scores.csv",
        ["question_id", "variant", "setting", *ANSWER_COLUMNS],
        per_question_rows,
    )

    aggregates = {}
    aggregate_rows = []
    for group in sorted(groups):
        agg = metrics.aggregate_scores(groups[group])
        aggregates[group] = {
            "em": agg.em, "f1": agg.f1, "precision": agg.precision, "recall": agg.recall,
            "n": len(groups[group]),
        }
        aggregate_rows.append(
            [group, _fmt(agg.em), _fmt(agg.f1), _fmt(agg.precision), _fmt(agg.recall)]
        )
    header = ["method", "EM", "F1", "Precision", "Recall"]
    _write_csv(out_dir / "answer_aggregate.csv", header, aggregate_rows)
    (out_dir / "answer_aggregate.md").write_text(
        _markdown_table(header, aggregate_rows), encoding="utf-8"
    )

    report: dict = {"answer": {"aggregates": aggregates}}

    # Chain ROUGE against reference chains (CoT completions are the chains).
    if reference_chains is not None:
        chain_rows = []
        chain_groups: dict[str, list[metrics.RougeScore]] = {}
        for row in known:
            if row["setting"] != Setting.COT.value:
                continue
            reference = reference_chains.get(row["question_id"])
            if reference is None:
                continue
            rouge = metrics.rouge_scores(row["completion"].strip(), reference)
            chain_groups.setdefault(f"{row['variant']}/{row['setting']}", []).append(rouge)
            chain_rows.append(
                [row["question_id"], row["variant"],
                 _fmt(rouge.rouge1), _fmt(rouge.rouge2), _fmt(rouge.rougeL)]
            )
        _write_csv(
            out_dir / "chain_scores.csv",
            ["question_id", "variant", *ROUGE_COLUMNS],
            chain_rows,
        )
        chain_aggregates = {}
        chain_agg_rows = []
        for group in sorted(chain_groups):
            scores = chain_groups[group]
            n = len(scores)
            chain_aggregates[group] = {
                "rouge1": sum(s.rouge1 for s in scores) / n,
                "rouge2": sum(s.rouge2 for s in scores) / n,
                "rougeL": sum(s.rougeL for s in scores) / n,
                "bertscore": None,  # reserved for an embedding-based metric
                "n": n,
            }
            agg = chain_aggregates[group]
            chain_agg_rows.append(
                [group, _fmt(agg["rouge1"]), _fmt(agg["rouge2"]), _fmt(agg["rougeL"])]
            )
        chain_header = ["method", "ROUGE-1", "ROUGE-2", "ROUGE-L"]
        _write_csv(out_dir / "chain_aggregate.csv", chain_header, chain_agg_rows)
        (out_dir / "chain_aggregate.md").write_text(
            _markdown_table(chain_header, chain_agg_rows), encoding="utf-8"
        )
        report["chain"] = {"aggregates": chain_aggregates}

    # Correlations of each answer metric with human 0/1 labels.
    if human_labels is not None:
        labelled = [
            (row, score, human_labels[row["question_id"]])
            for row, score in scored_rows
            if row["question_id"] in human_labels
        ]
        correlation_report = {}
        correlation_rows = []
        for column in ANSWER_COLUMNS:
            values = [getattr(score, column) for _, score, _ in labelled]
            labels = [float(label) for _, _, label in labelled]
            try:
                result = metrics.correlations(values, labels)
                correlation_report[column] = {"rho": result.rho, "tau": result.tau, "n": result.n}
                correlation_rows.append([column, _fmt(result.rho), _fmt(result.tau), result.n])
            except ValueError as exc:
                logger.warning("correlation undefined for %s: %s", column, exc)
                correlation_report[column] = {"rho": None, "tau": None, "n": len(labelled)}
                correlation_rows.append([column, "undefined", "undefined", len(labelled)])
        corr_header = ["metric", "spearman_rho", "kendall_tau", "n"]
        _write_csv(out_dir / "correlations.csv", corr_header, correlation_rows)
        (out_dir / "correlations.md").write_text(
            _markdown_table(corr_header, correlation_rows), encoding="utf-8"
        )
        report["correlations"] = correlation_report

    with open(out_dir / "metrics.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")
    return report


def run_ground(graphs_path, records: list[corpus.QuestionRecord], output_path,
               html_dir=None) -> int:
    """Ground every stored graph against its source paragraph; returns the
    number of reports written."""
    by_id = {r.id: r for r in records}
    html_root = Path(html_dir) if html_dir else None
    if html_root:
        html_root.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(graphs_path, encoding="utf-8") as fh, open(
        output_path, "w", encoding="utf-8"
    ) as out:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            record = by_id.get(row["question_id"])
            if record is None:
                logger.warning("graph for unknown question id %r skipped", row["question_id"])
                continue
            paragraphs = corpus.gold_paragraphs(record)
            index = row["paragraph_index"]
            if index >= len(paragraphs):
                logger.warning("graph index %d out of range for %s", index, record.id)
                continue
            paragraph = paragraphs[index]
            g = graph_mod.graph_from_dict(row["graph"])
            report = grounding.grounding_report(g, paragraph)
            payload = {
                "question_id": record.id,
                "paragraph_index": index,
                **grounding.report_to_dict(report),
            }
            out.write(json.dumps(payload, ensure_ascii=False) + "\n")
            if html_root:
                page = grounding.render_highlights(paragraph, report, format="html")
                (html_root / f"{record.id}_{index}.html").write_text(page, encoding="utf-8")
            count += 1
    return count


def read_labels(path) -> dict[str, int]:
    """JSONL of {question_id, label} with 0/1 human correctness labels."""
    return {qid: int(v) for qid, v in _read_keyed_jsonl(path, "label").items()}


def read_reference_chains(path) -> dict[str, str]:
    """JSONL of {question_id, chain} reference reasoning chains."""
    return {qid: str(v) for qid, v in _read_keyed_jsonl(path, "chain").items()}
