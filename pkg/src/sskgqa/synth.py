"""Bundled synthetic fixtures: toy KGs, benchmarks and trainable datasets."""

from __future__ import annotations

import numpy as np

from .annotation import LabeledQuestion
from .embeddings import EmbeddingTable, init_table
from .kg import KnowledgeGraph, build_kg
from .querygraph import QueryGraph, build_chain, execute, to_sparql

STEP_RELATIONS = ("alpha", "beta", "gamma", "delta", "epsilon", "zeta")


def norshteyn_kg() -> KnowledgeGraph:
    """Tiny movie-domain KG around Yuriy Norshteyn."""
    return build_kg(
        [
            ("Hedgehog in the Fog", "directed_by", "Yuriy Norshteyn"),
            ("Hedgehog in the Fog", "written_by", "Sergei Kozlov"),
            ("Tale of Tales", "directed_by", "Yuriy Norshteyn"),
            ("Tale of Tales", "written_by", "Sergei Kozlov"),
            ("Cheburashka", "directed_by", "Roman Kachanov"),
            ("Cheburashka", "written_by", "Eduard Uspensky"),
            ("Winnie the Pooh", "directed_by", "Fyodor Khitruk"),
            ("Winnie the Pooh", "written_by", "Boris Zakhoder"),
        ]
    )


def _sparql_one_hop_reversed(rel: str, topic: str) -> str:
    return f"SELECT DISTINCT ?x WHERE {{ ?x :{rel} :{topic.replace(' ', '%20')} . }}"


def _sparql_two_hop(topic: str, r1: str, r2: str) -> str:
    enc = topic.replace(" ", "%20")
    return f"SELECT DISTINCT ?x WHERE {{ ?y :{r1} :{enc} . ?y :{r2} ?x . }}"


def norshteyn_questions() -> list[LabeledQuestion]:
    """Trainable questions over the Norshteyn toy KG (SS1 and SS2 phrasings)."""
    qs = []
    directors = {
        "Yuriy Norshteyn": ["Hedgehog in the Fog", "Tale of Tales"],
        "Roman Kachanov": ["Cheburashka"],
        "Fyodor Khitruk": ["Winnie the Pooh"],
    }
    writers = {
        "Yuriy Norshteyn": ["Sergei Kozlov"],
        "Roman Kachanov": ["Eduard Uspensky"],
        "Fyodor Khitruk": ["Boris Zakhoder"],
    }
    i = 0
    for director, films in directors.items():
        qs.append(
            LabeledQuestion(
                id=f"toy{i}",
                question=f"what movies did {director} direct",
                topic_entity=director,
                answers=films,
                sparql=_sparql_one_hop_reversed("directed_by", director),
            )
        )
        i += 1
        qs.append(
            LabeledQuestion(
                id=f"toy{i}",
                question=f"who wrote the films directed by {director}",
                topic_entity=director,
                answers=writers[director],
                sparql=_sparql_two_hop(director, "directed_by", "written_by"),
            )
        )
        i += 1
    return qs


def norshteyn_test_question() -> LabeledQuestion:
    return LabeledQuestion(
        id="norshteyn",
        question="who wrote the films directed by Yuriy Norshteyn",
        topic_entity="Yuriy Norshteyn",
        answers=["Sergei Kozlov"],
        sparql=_sparql_two_hop("Yuriy Norshteyn", "directed_by", "written_by"),
    )


def cher_kg() -> KnowledgeGraph:
    return build_kg(
        [
            ("Chaz", "is_child_of", "Cher"),
            ("Chaz", "gender", "Male"),
            ("Chastity", "is_child_of", "Cher"),
            ("Chastity", "gender", "Female"),
        ]
    )


def three_hop_benchmark(
    n_questions: int = 200, seed: int = 0
) -> tuple[KnowledgeGraph, list[LabeledQuestion]]:
    """3-hop questions whose candidate sets contain a high-overlap 1-hop
    shortcut distractor; structure filtering removes the shortcut."""
    rng = np.random.default_rng(seed)
    triples: list[tuple[str, str, str]] = []
    questions: list[LabeledQuestion] = []
    for i in range(n_questions):
        ra, rb, rc = rng.choice(STEP_RELATIONS, size=3, replace=False)
        topic, m1, m2, ans, decoy = (
            f"t{i}",
            f"m{i}a",
            f"m{i}b",
            f"ans{i}",
            f"decoy{i}",
        )
        triples.extend(
            [
                (topic, ra, m1),
                (m1, rb, m2),
                (m2, rc, ans),
                (topic, f"{ra}_{rb}_{rc}", decoy),
            ]
        )
        gold = build_chain(topic, [(ra, False), (rb, False), (rc, False)])
        questions.append(
            LabeledQuestion(
                id=f"q{i}",
                question=f"{topic} {ra} {rb} {rc}",
                topic_entity=topic,
                answers=[ans],
                hops=3,
                sparql=to_sparql(gold),
                gold_graph=gold,
            )
        )
    return build_kg(triples), questions


def separable_classifier_dataset(
    taxonomy_labels: list[str], per_class: int = 8, n_entities: int = 12, d: int = 16, seed: int = 0
) -> tuple[list[tuple[list[str], int, str]], EmbeddingTable]:
    """Linearly separable structure-classification fixture: every question of
    class k carries a class marker token."""
    rng = np.random.default_rng(seed)
    filler = ["what", "is", "the", "of", "who", "which", "that"]
    table = init_table("transe", n_entities, 4, d, seed)
    dataset = []
    for k, label in enumerate(taxonomy_labels):
        for j in range(per_class):
            words = ["[CLS]", f"marker{k}"]
            words += [filler[int(rng.integers(0, len(filler)))] for _ in range(3)]
            words.append("[SEP]")
            dataset.append((words, int((k + j) % n_entities), label))
    return dataset, table


def ranker_fixture(seed: int = 0) -> tuple[KnowledgeGraph, list[LabeledQuestion]]:
    """5 one-hop questions on a 20-entity KG, mutually distinguishable by the
    relation token each question mentions."""
    rels = ("color", "shape", "size", "taste", "sound")
    triples = []
    questions = []
    for i in range(5):
        topic = f"thing{i}"
        for j, rel in enumerate(rels):
            triples.append((topic, rel, f"val{i}_{j % 3}"))
        gold_rel = rels[i]
        gold = build_chain(topic, [(gold_rel, False)])
        questions.append(
            LabeledQuestion(
                id=f"rq{i}",
                question=f"what {gold_rel} is thing{i}",
                topic_entity=topic,
                answers=[f"val{i}_{i % 3}"],
                hops=1,
                sparql=to_sparql(gold),
                gold_graph=gold,
            )
        )
    return build_kg(triples), questions


def random_fixture(
    rng: np.random.Generator, n_entities: int = 15, n_relations: int = 4, n_questions: int = 6
) -> tuple[KnowledgeGraph, list[LabeledQuestion]]:
    """Random KG plus questions whose gold graphs follow actual KG paths."""
    ents = [f"e{i}" for i in range(n_entities)]
    rels = [f"r{i}" for i in range(n_relations)]
    n_triples = int(rng.integers(n_entities, 3 * n_entities))
    triples = {
        (
            ents[int(rng.integers(n_entities))],
            rels[int(rng.integers(n_relations))],
            ents[int(rng.integers(n_entities))],
        )
        for _ in range(n_triples)
    }
    kg = build_kg(sorted(triples))
    questions = []
    attempts = 0
    while len(questions) < n_questions and attempts < 200:
        attempts += 1
        hops = int(rng.integers(1, 4))
        node = int(rng.integers(kg.num_entities))
        topic = kg.entities.symbol_of(node)
        path = []
        ok = True
        for _ in range(hops):
            edges = kg.out_edges(node)
            if not edges:
                ok = False
                break
            rid, node = edges[int(rng.integers(len(edges)))]
            path.append((kg.relations.symbol_of(rid), False))
        if not ok:
            continue
        gold = build_chain(topic, path)
        answers = sorted(kg.entities.symbol_of(a) for a in execute(gold, kg))
        rel_words = " ".join(r for r, _ in path)
        questions.append(
            LabeledQuestion(
                id=f"rand{len(questions)}",
                question=f"{topic} {rel_words}",
                topic_entity=topic,
                answers=answers,
                hops=hops,
                gold_graph=gold,
            )
        )
    return kg, questions
