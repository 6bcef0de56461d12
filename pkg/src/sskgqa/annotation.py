"""SPARQL-subset parsing, query-graph extraction and structure annotation."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .querygraph import (
    EXISTENTIAL,
    GROUNDED,
    LAMBDA,
    QgEdge,
    QgNode,
    QueryGraph,
    QueryGraphError,
    decode_iri,
)
from .structures import Taxonomy, abstract

UNSUPPORTED = "Unsupported"

_UNSUPPORTED_OPS = ("<=", ">=", "!=", "||", "&&", "<", ">", "=")
_UNSUPPORTED_KEYWORDS = {"FILTER", "OPTIONAL", "UNION", "MINUS", "OR", "EXISTS"}


class SparqlError(Exception):
    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} (at token {position})")
        self.position = position


class ExtractionError(Exception):
    pass


class LabelingError(Exception):
    pass


@dataclass(frozen=True)
class Iri:
    name: str


@dataclass(frozen=True)
class Var:
    name: str


Term = Iri | Var


@dataclass
class SparqlAst:
    select_var: str
    patterns: list[tuple[Term, Term, Term]]
    unsupported_features: list[str] = field(default_factory=list)


@dataclass
class LabeledQuestion:
    id: str
    question: str
    topic_entity: str
    answers: list[str]
    hops: int | None = None
    sparql: str | None = None
    structure_label: str | None = None
    gold_graph: QueryGraph | None = None


_TOKEN_RE = re.compile(r"<=|>=|!=|\|\||&&|[{}().<>=]|[^\s{}().<>=]+")


def _tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text)


def parse_sparql(text: str) -> SparqlAst:
    """Parse the supported subset; FILTER-style clauses are recorded in
    unsupported_features instead of being parsed."""
    toks = _tokenize(text)
    pos = 0
    unsupported: list[str] = []

    def peek() -> str | None:
        return toks[pos] if pos < len(toks) else None

    def take(expected: str | None = None) -> str:
        nonlocal pos
        if pos >= len(toks):
            raise SparqlError(f"unexpected end of input (wanted {expected})", pos)
        tok = toks[pos]
        if expected is not None and tok.upper() != expected.upper():
            raise SparqlError(f"expected {expected!r}, got {tok!r}", pos)
        pos += 1
        return tok

    while peek() is not None and peek().upper() == "PREFIX":
        take("PREFIX")
        take()  # namespace declaration such as "ns:"
        take("<")
        while peek() is not None and peek() != ">":
            take()
        take(">")
    take("SELECT")
    if peek() is not None and peek().upper() == "DISTINCT":
        take("DISTINCT")
    var_tok = take()
    if not var_tok.startswith("?"):
        raise SparqlError(f"expected a ?variable, got {var_tok!r}", pos - 1)
    select_var = var_tok[1:]
    take("WHERE")
    take("{")

    def term(tok: str, at: int) -> Term:
        if tok.startswith("?"):
            if len(tok) < 2:
                raise SparqlError("empty variable name", at)
            return Var(tok[1:])
        name = tok.split(":", 1)[1] if ":" in tok else tok
        if not name:
            raise SparqlError(f"empty iri name in {tok!r}", at)
        return Iri(decode_iri(name))

    patterns: list[tuple[Term, Term, Term]] = []
    while True:
        tok = peek()
        if tok is None:
            raise SparqlError("unterminated WHERE block", pos)
        if tok == "}":
            take("}")
            break
        if tok.upper() in _UNSUPPORTED_KEYWORDS or tok in _UNSUPPORTED_OPS:
            _skip_unsupported(toks, unsupported, take, peek)
            continue
        s = term(take(), pos - 1)
        p = term(take(), pos - 1)
        o = term(take(), pos - 1)
        take(".")
        patterns.append((s, p, o))
    if not patterns and not unsupported:
        raise SparqlError("empty WHERE block", pos)
    if not unsupported:
        terms = [t for pat in patterns for t in pat]
        if Var(select_var) not in terms:
            raise SparqlError(
                f"selected variable ?{select_var} not used in any pattern", pos
            )
    return SparqlAst(select_var, patterns, unsupported)


def _skip_unsupported(toks, unsupported, take, peek) -> None:
    """Consume one FILTER-like clause, recording the operator tokens inside."""
    keyword = take()
    found: list[str] = []
    depth = 0
    while True:
        tok = peek()
        if tok is None:
            break
        if tok == "(":
            take()
            depth += 1
            continue
        if tok == ")":
            take()
            depth -= 1
            if depth <= 0:
                break
            continue
        if depth == 0 and tok in ("}", "."):
            break
        tok = take()
        if tok in _UNSUPPORTED_OPS or tok.upper() in _UNSUPPORTED_KEYWORDS:
            found.append(tok)
    if peek() == ".":
        take(".")
    unsupported.extend(found if found else [keyword])


def extract_query_graph(ast: SparqlAst) -> QueryGraph:
    """Map a parsed SPARQL command to its query graph.

    Iri terms become grounded nodes, variables existential nodes, the selected
    variable the lambda node. The topic is the grounded node farthest from the
    lambda; among ties, one that is the subject of some pattern wins.
    """
    if ast.unsupported_features:
        raise ExtractionError(
            "unsupported features: " + ", ".join(ast.unsupported_features)
        )
    index: dict[Term, int] = {}
    nodes: list[QgNode] = []
    for pat in ast.patterns:
        for t in (pat[0], pat[2]):
            if t in index:
                continue
            index[t] = len(nodes)
            if isinstance(t, Var):
                kind = LAMBDA if t.name == ast.select_var else EXISTENTIAL
                nodes.append(QgNode(kind, "x" if kind == LAMBDA else t.name))
            else:
                nodes.append(QgNode(GROUNDED, t.name))
    edges = []
    for s, p, o in ast.patterns:
        if isinstance(p, Var):
            raise ExtractionError("variable predicates are not supported")
        edges.append(QgEdge(index[s], p.name, index[o], False))

    grounded = [i for i, n in enumerate(nodes) if n.kind == GROUNDED]
    if not grounded:
        raise ExtractionError("no grounded entity in query")
    lam = next(i for i, n in enumerate(nodes) if n.kind == LAMBDA)
    adj: dict[int, set[int]] = {i: set() for i in range(len(nodes))}
    for e in edges:
        adj[e.src].add(e.dst)
        adj[e.dst].add(e.src)
    dist = {lam: 0}
    frontier = [lam]
    while frontier:
        nxt = []
        for node in frontier:
            for nb in adj[node]:
                if nb not in dist:
                    dist[nb] = dist[node] + 1
                    nxt.append(nb)
        frontier = nxt
    if any(i not in dist for i in range(len(nodes))):
        raise ExtractionError("pattern graph is disconnected")
    subjects = {e.src for e in edges}
    topic = max(
        grounded, key=lambda i: (dist[i], i in subjects, -i)
    )
    try:
        return QueryGraph(nodes=nodes, edges=edges, topic=topic)
    except QueryGraphError as exc:
        raise ExtractionError(str(exc)) from exc


def label_metaqa(q: LabeledQuestion) -> str:
    """Hop-count labeling: 1 -> SS1, 2 -> SS2, 3 -> SS3."""
    if q.hops not in (1, 2, 3):
        raise LabelingError(f"question {q.id}: hop count must be 1, 2 or 3")
    return f"SS{q.hops}"


def label_wsp(q: LabeledQuestion, taxonomy: Taxonomy) -> str:
    """Structure label via parse -> extract -> abstract -> match; UNSUPPORTED
    when parsing/extraction fails or no taxonomy structure matches."""
    if q.sparql is None:
        raise LabelingError(f"question {q.id}: no sparql command")
    try:
        ast = parse_sparql(q.sparql)
        g = extract_query_graph(ast)
    except (SparqlError, ExtractionError):
        return UNSUPPORTED
    label = taxonomy.find_match(g)
    return label if label is not None else UNSUPPORTED


def label_question(q: LabeledQuestion, taxonomy: Taxonomy) -> str:
    """Hop-based labeling when hops are present, else SPARQL-based."""
    if q.hops is not None:
        try:
            return label_metaqa(q)
        except LabelingError:
            return UNSUPPORTED
    if q.sparql is not None:
        return label_wsp(q, taxonomy)
    return UNSUPPORTED


def coverage_report(
    splits: dict[str, list[LabeledQuestion]], taxonomy: Taxonomy
) -> dict[str, float | None]:
    """Percentage of labelable questions per split; empty splits report None."""
    report: dict[str, float | None] = {}
    for name, questions in splits.items():
        if not questions:
            report[name] = None
            continue
        labeled = sum(
            1 for q in questions if label_question(q, taxonomy) != UNSUPPORTED
        )
        report[name] = 100.0 * labeled / len(questions)
    return report


def load_dataset(path: str) -> list[LabeledQuestion]:
    """JSON Lines dataset: id, question, topic_entity, answers[], hops?, sparql?."""
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LabelingError(f"{path}:{lineno}: bad JSON: {exc}") from exc
            out.append(
                LabeledQuestion(
                    id=str(rec["id"]),
                    question=rec["question"],
                    topic_entity=rec["topic_entity"],
                    answers=list(rec["answers"]),
                    hops=rec.get("hops"),
                    sparql=rec.get("sparql"),
                )
            )
    return out


def save_dataset(questions: list[LabeledQuestion], path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for q in questions:
            rec = {
                "id": q.id,
                "question": q.question,
                "topic_entity": q.topic_entity,
                "answers": q.answers,
            }
            if q.hops is not None:
                rec["hops"] = q.hops
            if q.sparql is not None:
                rec["sparql"] = q.sparql
            f.write(json.dumps(rec) + "\n")
