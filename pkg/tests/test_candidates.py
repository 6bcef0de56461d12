import pytest

from sskgqa.candidates import EnumConfig, enumerate_candidates
from sskgqa.kg import build_kg
from sskgqa.querygraph import execute
from sskgqa.structures import abstract


KG = build_kg(
    [
        ("a", "r", "b"),
        ("b", "r", "c"),
        ("b", "s", "d"),
        ("d", "t", "a"),
    ]
)


def test_enum_config_validation():
    with pytest.raises(ValueError):
        EnumConfig(max_hops=0)
    with pytest.raises(ValueError):
        EnumConfig(max_hops=4)
    with pytest.raises(ValueError):
        EnumConfig(max_candidates=0)


def test_one_hop_candidates():
    res = enumerate_candidates(KG, "b", EnumConfig(max_hops=1))
    assert not res.truncated
    # forward r (c), forward s (d), reverse r (a)
    assert len(res.graphs) == 3
    for g in res.graphs:
        assert execute(g, KG)  # every candidate is satisfiable


def test_all_candidates_satisfiable_multi_hop():
    res = enumerate_candidates(KG, "a", EnumConfig(max_hops=3))
    assert res.graphs
    for g in res.graphs:
        assert execute(g, KG)


def test_candidates_deduplicated():
    res = enumerate_candidates(KG, "a", EnumConfig(max_hops=2))
    from sskgqa.querygraph import canonicalize

    keys = [canonicalize(g) for g in res.graphs]
    assert len(keys) == len(set(keys))


def test_truncation_flag():
    res = enumerate_candidates(KG, "a", EnumConfig(max_hops=3, max_candidates=2))
    assert res.truncated
    assert len(res.graphs) == 2


def test_constraint_attachment():
    kg = build_kg(
        [
            ("d1", "made", "f1"),
            ("d1", "made", "f2"),
            ("f1", "year", "1990"),
            ("f2", "year", "2000"),
        ]
    )
    res = enumerate_candidates(
        kg, "d1", EnumConfig(max_hops=1, attach_constraints=True)
    )
    constrained = [g for g in res.graphs if g.constraint_edges()]
    assert constrained
    values = set()
    for g in constrained:
        assert execute(g, kg)  # constrained candidates stay satisfiable
        for e in g.constraint_edges():
            values.add(g.nodes[e.dst].label)
    assert {"1990", "2000"} <= values


def test_constraint_relation_allowlist():
    kg = build_kg(
        [
            ("d1", "made", "f1"),
            ("f1", "year", "1990"),
            ("f1", "lang", "ru"),
        ]
    )
    res = enumerate_candidates(
        kg,
        "d1",
        EnumConfig(max_hops=1, attach_constraints=True, constraint_relations=["year"]),
    )
    for g in res.graphs:
        for e in g.constraint_edges():
            assert e.relation == "year"


def test_constraint_abstracts_to_constrained_structure():
    from sskgqa.structures import builtin_taxonomy

    kg = build_kg([("d1", "made", "f1"), ("f1", "year", "1990")])
    res = enumerate_candidates(
        kg, "d1", EnumConfig(max_hops=1, attach_constraints=True)
    )
    labels = {builtin_taxonomy().find_match(g) for g in res.graphs}
    assert "SS4" in labels


def test_deterministic_order():
    a = enumerate_candidates(KG, "a", EnumConfig(max_hops=3))
    b = enumerate_candidates(KG, "a", EnumConfig(max_hops=3))
    from sskgqa.querygraph import canonicalize

    assert [canonicalize(g) for g in a.graphs] == [canonicalize(g) for g in b.graphs]
