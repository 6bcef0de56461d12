"""End-to-end flow: classify structure, enumerate, filter, rank, execute."""

from __future__ import annotations

from dataclasses import dataclass, field

from .annotation import (
    UNSUPPORTED,
    ExtractionError,
    LabeledQuestion,
    SparqlError,
    extract_query_graph,
    label_question,
    parse_sparql,
)
from .candidates import EnumConfig, enumerate_candidates
from .classifier import ClassifierModel
from .kg import KnowledgeGraph, LookupError_
from .querygraph import CLS, SEP, QueryGraph, canonicalize, execute, split_symbol
from .ranker import rank_candidates
from .structures import SemanticStructure, Taxonomy, abstract

MODES = ("predicted", "oracle", "off")


class PipelineError(Exception):
    pass


def tokenize_question(text: str) -> list[str]:
    """Question word sequence wrapped in the boundary tokens."""
    return [CLS] + split_symbol(text) + [SEP]


def gold_graph_of(q: LabeledQuestion) -> QueryGraph | None:
    if q.gold_graph is not None:
        return q.gold_graph
    if q.sparql is None:
        return None
    try:
        return extract_query_graph(parse_sparql(q.sparql))
    except (SparqlError, ExtractionError):
        return None


@dataclass
class PipelineConfig:
    kg: KnowledgeGraph
    taxonomy: Taxonomy
    ranker: object  # anything with score_all(question_tokens, graphs)
    classifier: ClassifierModel | None = None
    enum: EnumConfig = field(default_factory=EnumConfig)
    mode: str = "predicted"
    fallback_on_empty_filter: bool = True

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise PipelineError(f"unknown filtering mode: {self.mode}")
        if self.mode == "predicted" and self.classifier is None:
            raise PipelineError("predicted mode requires a classifier")


@dataclass
class AnswerResult:
    graph: QueryGraph | None
    answers: set[str]
    predicted_structure: str | None
    status: str  # "ok" | "no_candidates" | "unsupported"


@dataclass
class QuestionRecord:
    id: str
    status: str
    predicted_structure: str | None
    gold_structure: str | None
    structure_correct: bool | None
    top1: str | None  # canonical form of the ranked top-1 graph
    top1_in_filtered: bool | None
    answers: list[str]
    correct: bool


@dataclass
class EvalReport:
    hits_at_1: float
    total: int
    correct: int
    unsupported: int
    no_candidates: int
    records: list[QuestionRecord]


def _derived_enum(base: EnumConfig, ss: SemanticStructure | None) -> EnumConfig:
    """Restrict enumeration to the structure's hop count and constraint need."""
    if ss is None:
        return base
    return EnumConfig(
        max_hops=min(base.max_hops, max(ss.hop_count(), 1)),
        attach_constraints=ss.has_constraints(),
        constraint_relations=base.constraint_relations,
        max_candidates=base.max_candidates,
    )


def answer_question(
    cfg: PipelineConfig, q: LabeledQuestion
) -> tuple[AnswerResult, QuestionRecord]:
    kg = cfg.kg
    if q.topic_entity not in kg.entities:
        raise PipelineError(f"question {q.id}: topic entity not in KG: {q.topic_entity!r}")
    topic_id = kg.entities.id_of(q.topic_entity)
    tokens = tokenize_question(q.question)
    gold_label = label_question(q, cfg.taxonomy)

    predicted = None
    structure: SemanticStructure | None = None
    if cfg.mode == "predicted":
        predicted = cfg.classifier.predict(tokens, topic_id)
        structure = cfg.taxonomy.get(predicted)
    elif cfg.mode == "oracle":
        if gold_label == UNSUPPORTED:
            result = AnswerResult(None, set(), None, "unsupported")
            return result, _record(q, result, gold_label, None, None)
        structure = cfg.taxonomy.get(gold_label)

    cands = enumerate_candidates(kg, q.topic_entity, _derived_enum(cfg.enum, structure)).graphs
    filtered = cands
    if structure is not None:
        key = structure.canonical()
        filtered = [g for g in cands if abstract(g).canonical() == key]
        if not filtered and cfg.fallback_on_empty_filter:
            if not cands:
                cands = enumerate_candidates(kg, q.topic_entity, cfg.enum).graphs
            filtered = cands
    if not filtered:
        result = AnswerResult(None, set(), predicted, "no_candidates")
        return result, _record(q, result, gold_label, None, None)

    ranked = rank_candidates(cfg.ranker, tokens, filtered)
    best = ranked[0]
    try:
        answer_ids = execute(best, kg)
    except LookupError_:
        answer_ids = set()
    answers = {kg.entities.symbol_of(a) for a in answer_ids}
    result = AnswerResult(best, answers, predicted, "ok")
    return result, _record(q, result, gold_label, canonicalize(best), filtered)


def _record(q, result, gold_label, top1_key, filtered) -> QuestionRecord:
    gold = gold_label if gold_label != UNSUPPORTED else None
    return QuestionRecord(
        id=q.id,
        status=result.status,
        predicted_structure=result.predicted_structure,
        gold_structure=gold,
        structure_correct=(
            None
            if result.predicted_structure is None or gold is None
            else result.predicted_structure == gold
        ),
        top1=top1_key,
        top1_in_filtered=(
            None if top1_key is None else any(canonicalize(g) == top1_key for g in filtered)
        ),
        answers=sorted(result.answers),
        correct=bool(result.answers & set(q.answers)),
    )


def evaluate(cfg: PipelineConfig, dataset: list[LabeledQuestion]) -> EvalReport:
    """Hits@1 over the dataset; a question is correct iff its executed answer
    set intersects the gold answers."""
    if not dataset:
        raise PipelineError("dataset must be non-empty")
    records = []
    for q in dataset:
        _, rec = answer_question(cfg, q)
        records.append(rec)
    correct = sum(1 for r in records if r.correct)
    return EvalReport(
        hits_at_1=100.0 * correct / len(records),
        total=len(records),
        correct=correct,
        unsupported=sum(1 for r in records if r.status == "unsupported"),
        no_candidates=sum(1 for r in records if r.status == "no_candidates"),
        records=records,
    )
