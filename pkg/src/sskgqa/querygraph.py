"""Query graph data model: chains with constraints, canonical forms, execution."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field

from .kg import KnowledgeGraph, Triple

GROUNDED = "grounded"
EXISTENTIAL = "existential"
LAMBDA = "lambda"

# Intermediate variable names for chains, in hop order (lambda is always "x").
CHAIN_VAR_NAMES = ("y", "z", "w", "u")

_SPLIT_RE = re.compile(r"[\s._\-]+")

CLS = "[CLS]"
SEP = "[SEP]"


class QueryGraphError(Exception):
    pass


@dataclass(frozen=True)
class QgNode:
    kind: str  # GROUNDED | EXISTENTIAL | LAMBDA
    label: str  # entity symbol for grounded, variable name otherwise

    def is_var(self) -> bool:
        return self.kind != GROUNDED


@dataclass(frozen=True)
class QgEdge:
    src: int
    relation: str
    dst: int
    reversed: bool = False


@dataclass
class QueryGraph:
    nodes: list[QgNode]
    edges: list[QgEdge]
    topic: int  # node index, must be grounded

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not self.nodes:
            raise QueryGraphError("empty graph")
        kinds = [n.kind for n in self.nodes]
        if kinds.count(LAMBDA) != 1:
            raise QueryGraphError("exactly one lambda node required")
        if GROUNDED not in kinds:
            raise QueryGraphError("at least one grounded node required")
        if self.nodes[self.topic].kind != GROUNDED:
            raise QueryGraphError("topic must be a grounded node")
        names = [n.label for n in self.nodes if n.kind == EXISTENTIAL]
        if len(names) != len(set(names)):
            raise QueryGraphError("existential names must be unique")
        for e in self.edges:
            if not (0 <= e.src < len(self.nodes) and 0 <= e.dst < len(self.nodes)):
                raise QueryGraphError("edge endpoint out of range")
        if not self._connected():
            raise QueryGraphError("graph must be connected")

    def _connected(self) -> bool:
        adj: dict[int, set[int]] = {i: set() for i in range(len(self.nodes))}
        for e in self.edges:
            adj[e.src].add(e.dst)
            adj[e.dst].add(e.src)
        seen = {self.topic}
        stack = [self.topic]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return len(seen) == len(self.nodes)

    @property
    def lambda_index(self) -> int:
        return next(i for i, n in enumerate(self.nodes) if n.kind == LAMBDA)

    def constraint_edges(self) -> list[QgEdge]:
        """Edges incident to a grounded node other than the topic."""
        out = []
        for e in self.edges:
            for idx in (e.src, e.dst):
                if idx != self.topic and self.nodes[idx].kind == GROUNDED:
                    out.append(e)
                    break
        return out

    def chain_edges(self) -> list[QgEdge]:
        cons = set(id(e) for e in self.constraint_edges())
        return [e for e in self.edges if id(e) not in cons]


def build_chain(
    topic: str,
    hops: list[tuple[str, bool]],
    constraints: list[tuple[int, str, str]] = (),
) -> QueryGraph:
    """Chain query graph: topic -> hop edges -> lambda, plus constraint edges.

    Each hop is (relation symbol, reversed); each constraint is
    (hop index, relation symbol, value symbol) with hop index 0 = topic node,
    i = i-th intermediate, len(hops) = lambda.
    """
    if not hops:
        raise QueryGraphError("hops must be non-empty")
    if len(hops) - 1 > len(CHAIN_VAR_NAMES):
        raise QueryGraphError("too many hops")
    nodes = [QgNode(GROUNDED, topic)]
    for i in range(len(hops) - 1):
        nodes.append(QgNode(EXISTENTIAL, CHAIN_VAR_NAMES[i]))
    nodes.append(QgNode(LAMBDA, "x"))
    edges = [QgEdge(i, rel, i + 1, rev) for i, (rel, rev) in enumerate(hops)]
    for hop_idx, rel, value in constraints:
        if not 0 <= hop_idx <= len(hops):
            raise QueryGraphError(f"constraint hop index out of range: {hop_idx}")
        nodes.append(QgNode(GROUNDED, value))
        edges.append(QgEdge(hop_idx, rel, len(nodes) - 1, False))
    return QueryGraph(nodes=nodes, edges=edges, topic=0)


def _normalized_edges(g: QueryGraph) -> list[tuple[int, str, int]]:
    """Edges in KG orientation: reversed edges flipped, flag dropped."""
    out = []
    for e in g.edges:
        if e.reversed:
            out.append((e.dst, e.relation, e.src))
        else:
            out.append((e.src, e.relation, e.dst))
    return out


def _node_tag(n: QgNode, is_topic: bool) -> str:
    if n.kind == GROUNDED:
        return ("T:" if is_topic else "G:") + n.label
    return "A" if n.kind == LAMBDA else "V"


def canonicalize(g: QueryGraph) -> str:
    """Canonical string: equal iff graphs are isomorphic up to existential
    renaming and up to the two storage orientations of a reversed edge."""
    n = len(g.nodes)
    tags = [_node_tag(g.nodes[i], i == g.topic) for i in range(n)]
    edges = _normalized_edges(g)
    best = None
    for perm in itertools.permutations(range(n)):
        # perm[i] = new index of node i; require sorted-tag consistency cheaply
        node_part = [None] * n
        for i in range(n):
            node_part[perm[i]] = tags[i]
        edge_part = sorted((perm[s], r, perm[d]) for s, r, d in edges)
        cand = (
            "|".join(node_part)
            + "#"
            + ";".join(f"{s}-{r}->{d}" for s, r, d in edge_part)
        )
        if best is None or cand < best:
            best = cand
    return best


def split_symbol(symbol: str) -> list[str]:
    """Fragment a symbol on whitespace, '.', '_' and '-'."""
    return [t for t in _SPLIT_RE.split(symbol) if t]


def _chain_walk(g: QueryGraph) -> list[tuple[int, QgEdge, bool]]:
    """Path from topic to lambda over chain edges as (next node, edge, backwards)."""
    chain = g.chain_edges()
    adj: dict[int, list[tuple[int, QgEdge, bool]]] = {}
    for e in chain:
        adj.setdefault(e.src, []).append((e.dst, e, False))
        adj.setdefault(e.dst, []).append((e.src, e, True))
    target = g.lambda_index
    path: list[tuple[int, QgEdge, bool]] = []

    def dfs(node: int, used: set[int]) -> bool:
        if node == target:
            return True
        for nxt, e, back in adj.get(node, []):
            if id(e) in used:
                continue
            used.add(id(e))
            path.append((nxt, e, back))
            if dfs(nxt, used):
                return True
            path.pop()
            used.remove(id(e))
        return False

    if not dfs(g.topic, set()):
        raise QueryGraphError("no chain path from topic to lambda")
    return path


def serialize_tokens(g: QueryGraph) -> list[str]:
    """Linear walk topic -> hops -> constraints, split into fragments and
    wrapped in [CLS]/[SEP]. Traversal against KG direction adds 'reverse'."""
    tokens = [CLS]
    tokens.extend(split_symbol(g.nodes[g.topic].label))
    walk = _chain_walk(g)
    order = [g.topic] + [node for node, _, _ in walk]
    for node, edge, back in walk:
        tokens.extend(split_symbol(edge.relation))
        if edge.reversed != back:  # traversal goes against the KG edge
            tokens.append("reverse")
        tokens.append(g.nodes[node].label)
    cons = g.constraint_edges()
    for at in order:
        for e in cons:
            src, dst, back = e.src, e.dst, False
            if dst == at and g.nodes[src].kind == GROUNDED and src != g.topic:
                src, dst, back = dst, src, True
            if src != at:
                continue
            tokens.append(g.nodes[src].label if g.nodes[src].is_var() else "c")
            tokens.extend(split_symbol(e.relation))
            if e.reversed != back:
                tokens.append("reverse")
            tokens.extend(split_symbol(g.nodes[dst].label))
    tokens.append(SEP)
    return tokens


def execute(g: QueryGraph, kg: KnowledgeGraph) -> set[int]:
    """Answer set of the lambda variable via backtracking join from the topic."""
    ground: dict[int, int] = {}
    for i, node in enumerate(g.nodes):
        if node.kind == GROUNDED:
            ground[i] = kg.entities.id_of(node.label)
    edges = [
        (e, kg.relations.id_of(e.relation)) for e in g.edges
    ]  # raises on unknown relation

    # Order edges so each has a bound endpoint when processed (insertion-order
    # preference among eligible edges).
    ordered: list[tuple[QgEdge, int]] = []
    bound = set(ground)
    remaining = list(edges)
    while remaining:
        for k, (e, rid) in enumerate(remaining):
            if e.src in bound or e.dst in bound:
                ordered.append((e, rid))
                bound.update((e.src, e.dst))
                del remaining[k]
                break
        else:  # disconnected; validate() prevents this
            raise QueryGraphError("edge set not connected to topic")

    answers: set[int] = set()
    lam = g.lambda_index
    binding = dict(ground)

    def satisfy(k: int) -> None:
        if k == len(ordered):
            answers.add(binding[lam])
            return
        e, rid = ordered[k]
        # KG-direction endpoints: triple (head, rid, tail) must exist
        head, tail = (e.dst, e.src) if e.reversed else (e.src, e.dst)
        hb, tb = binding.get(head), binding.get(tail)
        if hb is not None and tb is not None:
            if Triple(hb, rid, tb) in kg.triples:
                satisfy(k + 1)
        elif hb is not None:
            for r, t in kg.out_edges(hb):
                if r == rid:
                    binding[tail] = t
                    satisfy(k + 1)
                    del binding[tail]
        else:
            for r, h in kg.in_edges(tb):
                if r == rid:
                    binding[head] = h
                    satisfy(k + 1)
                    del binding[head]

    satisfy(0)
    return answers


def _encode_iri(symbol: str) -> str:
    out = []
    for ch in symbol:
        if ch.isspace() or ch in "%.:?{}()<>":
            out.append(f"%{ord(ch):02x}")
        else:
            out.append(ch)
    return "".join(out)


def decode_iri(name: str) -> str:
    return re.sub(r"%([0-9a-fA-F]{2})", lambda m: chr(int(m.group(1), 16)), name)


def to_sparql(g: QueryGraph) -> str:
    """Emit the SELECT DISTINCT ?x form of the graph in the supported subset."""

    def term(idx: int) -> str:
        n = g.nodes[idx]
        if n.kind == GROUNDED:
            return ":" + _encode_iri(n.label)
        return "?x" if n.kind == LAMBDA else "?" + n.label

    patterns = []
    for e in g.edges:
        s, o = (e.dst, e.src) if e.reversed else (e.src, e.dst)
        patterns.append(f"{term(s)} :{_encode_iri(e.relation)} {term(o)} .")
    return "SELECT DISTINCT ?x WHERE { " + " ".join(patterns) + " }"
