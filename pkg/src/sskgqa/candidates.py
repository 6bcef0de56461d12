"""Candidate query graph enumeration: satisfiable chains within n hops."""

from __future__ import annotations

from dataclasses import dataclass, field

from .kg import KnowledgeGraph
from .querygraph import QueryGraph, build_chain, canonicalize


@dataclass
class EnumConfig:
    max_hops: int = 3
    attach_constraints: bool = False
    constraint_relations: list[str] | None = None  # allowlist of relation symbols
    max_candidates: int = 10000

    def __post_init__(self) -> None:
        if not 1 <= self.max_hops <= 3:
            raise ValueError("max_hops must be in 1..3")
        if self.max_candidates <= 0:
            raise ValueError("max_candidates must be positive")


@dataclass
class EnumResult:
    graphs: list[QueryGraph] = field(default_factory=list)
    truncated: bool = False


def _step(kg: KnowledgeGraph, frontier: set[int], rid: int, rev: bool) -> set[int]:
    out: set[int] = set()
    for e in frontier:
        for r, other in kg.in_edges(e) if rev else kg.out_edges(e):
            if r == rid:
                out.add(other)
    return out


def enumerate_candidates(
    kg: KnowledgeGraph, topic: str, cfg: EnumConfig
) -> EnumResult:
    """All satisfiable chain candidates from `topic` within cfg.max_hops, each
    optionally extended by one satisfiable constraint edge.

    Chains are distinct relation-direction sequences whose execution is
    non-empty; constraint values come from actual KG out-edges at the
    constrained node. Deterministic order, deduplicated by canonical form,
    truncated at cfg.max_candidates.
    """
    topic_id = kg.entities.id_of(topic)
    allow = (
        None
        if cfg.constraint_relations is None
        else {kg.relations.id_of(r) for r in cfg.constraint_relations}
    )
    result = EnumResult()
    seen: set[str] = set()

    def emit(g: QueryGraph) -> bool:
        key = canonicalize(g)
        if key in seen:
            return True
        if len(result.graphs) >= cfg.max_candidates:
            result.truncated = True
            return False
        seen.add(key)
        result.graphs.append(g)
        return True

    rel_ids = range(kg.num_relations)

    def constraint_variants(hops, frontiers):
        """One constraint per variable node of the chain (hop index >= 1)."""
        for hop_idx in range(1, len(hops) + 1):
            # entities at hop_idx that extend to a full binding
            feas = _feasible_at(kg, frontiers, hops, hop_idx)
            pairs = set()
            for e in feas:
                for r, val in kg.out_edges(e):
                    if allow is not None and r not in allow:
                        continue
                    pairs.add((r, val))
            for r, val in sorted(pairs):
                g = build_chain(
                    topic,
                    hops_syms(hops),
                    [(hop_idx, kg.relations.symbol_of(r), kg.entities.symbol_of(val))],
                )
                # constrained chain is satisfiable by construction (value taken
                # from an edge of a feasible binding)
                if not emit(g):
                    return False
        return True

    def hops_syms(hops):
        return [(kg.relations.symbol_of(r), rev) for r, rev in hops]

    def recurse(hops, frontiers) -> bool:
        frontier = frontiers[-1]
        for rid in rel_ids:
            for rev in (False, True):
                nxt = _step(kg, frontier, rid, rev)
                if not nxt:
                    continue
                new_hops = hops + [(rid, rev)]
                new_frontiers = frontiers + [nxt]
                if not emit(build_chain(topic, hops_syms(new_hops))):
                    return False
                if cfg.attach_constraints:
                    if not constraint_variants(new_hops, new_frontiers):
                        return False
                if len(new_hops) < cfg.max_hops:
                    if not recurse(new_hops, new_frontiers):
                        return False
        return True

    recurse([], [{topic_id}])
    return result


def _feasible_at(kg, frontiers, hops, hop_idx) -> set[int]:
    """Entities at position hop_idx of the chain that admit a full binding."""
    feas = set(frontiers[-1])
    # walk the chain suffix backwards: p at position k is feasible when some
    # step from p lands in the feasible set at k+1
    for k in range(len(hops) - 1, hop_idx - 1, -1):
        rid, rev = hops[k]
        feas = {p for p in frontiers[k] if _step(kg, {p}, rid, rev) & feas}
    return feas
