"""Command-line surface: ingest, annotate, training, answering, evaluation
and the ablation grids. All reports are emitted as JSON Lines on stdout."""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import annotation as ann
from . import classifier as clf
from . import embeddings as emb
from . import kg as kgmod
from . import pipeline as pl
from . import ranker as rk
from . import structures as st
from . import synth
from .candidates import EnumConfig
from .querygraph import build_chain


def _seed(args) -> int:
    env = os.environ.get("SSKGQA_SEED")
    return int(env) if env else args.seed


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _load_kg(path: str) -> kgmod.KnowledgeGraph:
    if path.endswith(".json"):
        return kgmod.load_kg(path)
    return kgmod.load_kg_file(path)


def _taxonomy(args) -> st.Taxonomy:
    if getattr(args, "taxonomy", None):
        return st.load_taxonomy(args.taxonomy)
    return st.builtin_taxonomy()


def cmd_ingest(args) -> int:
    kg = kgmod.load_kg_file(args.kg)
    if args.out:
        kgmod.save_kg(kg, args.out)
    _emit(
        {
            "entities": kg.num_entities,
            "relations": kg.num_relations,
            "triples": kg.num_triples,
        }
    )
    return 0


def cmd_annotate(args) -> int:
    tax = _taxonomy(args)
    questions = ann.load_dataset(args.dataset)
    for q in questions:
        _emit({"id": q.id, "label": ann.label_question(q, tax)})
    report = ann.coverage_report({"all": questions}, tax)
    _emit({"split": "all", "coverage": report["all"]})
    return 0


def cmd_train_embeddings(args) -> int:
    kg = _load_kg(args.kg)
    cfg = emb.EmbedTrainConfig(
        d=args.dim,
        epochs=args.epochs,
        lr=args.lr,
        negatives=args.negatives,
        margin=args.margin,
        seed=_seed(args),
    )
    table, history = emb.train(kg, cfg, kind=args.kind)
    emb.save_table(table, args.out)
    _emit(
        {
            "kind": args.kind,
            "entities": kg.num_entities,
            "dim": args.dim,
            "final_loss": history[-1] if history else None,
            "out": args.out,
        }
    )
    return 0


def _classifier_dataset(kg, questions, tax):
    dataset = []
    for q in questions:
        label = ann.label_question(q, tax)
        if label == ann.UNSUPPORTED or q.topic_entity not in kg.entities:
            continue
        dataset.append(
            (pl.tokenize_question(q.question), kg.entities.id_of(q.topic_entity), label)
        )
    return dataset


def cmd_train_classifier(args) -> int:
    kg = _load_kg(args.kg)
    tax = _taxonomy(args)
    table = emb.load_table(args.embeddings)
    questions = ann.load_dataset(args.dataset)
    dataset = _classifier_dataset(kg, questions, tax)
    cfg = clf.ClassifierTrainConfig(
        lr=args.lr, epochs=args.epochs, seed=_seed(args), d_model=args.d_model
    )
    model = clf.train_classifier(dataset, table, tax, cfg)
    clf.save_classifier(model, args.out)
    _emit({"trained_on": len(dataset), "train_accuracy": model.accuracy(dataset), "out": args.out})
    return 0


def _ranker_dataset(questions):
    dataset = []
    for q in questions:
        gold = pl.gold_graph_of(q)
        if gold is not None:
            dataset.append((pl.tokenize_question(q.question), gold))
    return dataset


def _rank_cfg(args, **overrides) -> rk.RankTrainConfig:
    base = dict(
        margin=args.margin,
        negatives=args.negatives,
        lr=args.lr,
        heads=args.heads,
        dropout=args.dropout,
        epochs=args.epochs,
        seed=_seed(args),
    )
    base.update(overrides)
    return rk.RankTrainConfig(**base)


def cmd_train_ranker(args) -> int:
    kg = _load_kg(args.kg)
    tax = _taxonomy(args)
    questions = ann.load_dataset(args.dataset)
    dataset = _ranker_dataset(questions)
    model = rk.train_ranker(dataset, kg, tax, _rank_cfg(args))
    rk.save_ranker(model, args.out)
    _emit({"trained_on": len(dataset), "out": args.out})
    return 0


def _pipeline_config(args, kg, tax) -> pl.PipelineConfig:
    ranker = rk.load_ranker(args.ranker)
    classifier = None
    if args.mode == "predicted":
        if not (args.classifier and args.embeddings):
            raise SystemExit("predicted mode needs --classifier and --embeddings")
        table = emb.load_table(args.embeddings)
        classifier = clf.load_classifier(args.classifier, table, tax)
    return pl.PipelineConfig(
        kg=kg,
        taxonomy=tax,
        ranker=ranker,
        classifier=classifier,
        enum=EnumConfig(max_hops=args.max_hops, attach_constraints=args.constraints),
        mode=args.mode,
    )


def cmd_answer(args) -> int:
    kg = _load_kg(args.kg)
    tax = _taxonomy(args)
    cfg = _pipeline_config(args, kg, tax)
    q = ann.LabeledQuestion(
        id="cli", question=args.question, topic_entity=args.topic, answers=[]
    )
    result, record = pl.answer_question(cfg, q)
    _emit(
        {
            "question": args.question,
            "topic": args.topic,
            "predicted_structure": result.predicted_structure,
            "status": result.status,
            "top1": record.top1,
            "answers": sorted(result.answers),
        }
    )
    return 0


def cmd_evaluate(args) -> int:
    kg = _load_kg(args.kg)
    tax = _taxonomy(args)
    cfg = _pipeline_config(args, kg, tax)
    questions = ann.load_dataset(args.dataset)
    report = pl.evaluate(cfg, questions)
    for rec in report.records:
        _emit(dataclasses.asdict(rec))
    _emit(
        {
            "hits_at_1": report.hits_at_1,
            "total": report.total,
            "correct": report.correct,
            "unsupported": report.unsupported,
            "no_candidates": report.no_candidates,
            "mode": args.mode,
        }
    )
    return 0


NEGATIVE_GRID = (1, 5, 10, 50, 100, 200, 300, 500)
HEAD_GRID = (1, 3, 6)


def cmd_ablate(args) -> int:
    kg = _load_kg(args.kg)
    tax = _taxonomy(args)
    questions = ann.load_dataset(args.dataset)
    dataset = _ranker_dataset(questions)
    if args.grid == "negatives":
        settings = [("negatives", n) for n in NEGATIVE_GRID]
    else:
        settings = [("heads", h) for h in HEAD_GRID]
    base = dict(
        margin=args.margin,
        lr=args.lr,
        dropout=args.dropout,
        epochs=args.epochs,
        seed=_seed(args),
    )
    for name, value in settings:
        model = rk.train_ranker(dataset, kg, tax, rk.RankTrainConfig(**base, **{name: value}))
        cfg = pl.PipelineConfig(
            kg=kg,
            taxonomy=tax,
            ranker=model,
            mode="oracle",
            enum=EnumConfig(max_hops=args.max_hops),
        )
        report = pl.evaluate(cfg, questions)
        _emit({name: value, "hits_at_1": report.hits_at_1})
    return 0


def cmd_make_toy(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    if args.benchmark == "ranker":
        kg, questions = synth.ranker_fixture()
    elif args.benchmark == "three-hop":
        kg, questions = synth.three_hop_benchmark(args.questions, seed=_seed(args))
    else:
        kg = synth.norshteyn_kg()
        questions = synth.norshteyn_questions() + [synth.norshteyn_test_question()]
    kg_path = os.path.join(args.out, "kg.tsv")
    with open(kg_path, "w", encoding="utf-8") as f:
        f.write("# toy knowledge graph\n")
        for t in sorted(
            (kg.entities.symbol_of(t.head), kg.relations.symbol_of(t.relation), kg.entities.symbol_of(t.tail))
            for t in kg.triples
        ):
            f.write("\t".join(t) + "\n")
    data_path = os.path.join(args.out, "questions.jsonl")
    ann.save_dataset(questions, data_path)
    _emit({"kg": kg_path, "dataset": data_path, "questions": len(questions)})
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sskgqa", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common_seed(sp):
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("ingest", help="load and intern a TSV knowledge graph")
    sp.add_argument("--kg", required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("annotate", help="label questions with semantic structures")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--taxonomy")
    sp.set_defaults(func=cmd_annotate)

    sp = sub.add_parser("train-embeddings", help="train entity/relation embeddings")
    sp.add_argument("--kg", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--kind", choices=emb.KINDS, default="transe")
    sp.add_argument("--dim", type=int, default=64)
    sp.add_argument("--epochs", type=int, default=100)
    sp.add_argument("--lr", type=float, default=0.05)
    sp.add_argument("--negatives", type=int, default=8)
    sp.add_argument("--margin", type=float, default=6.0)
    common_seed(sp)
    sp.set_defaults(func=cmd_train_embeddings)

    sp = sub.add_parser("train-classifier", help="train the structure classifier")
    sp.add_argument("--kg", required=True)
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--embeddings", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--taxonomy")
    sp.add_argument("--epochs", type=int, default=50)
    sp.add_argument("--lr", type=float, default=1e-2)
    sp.add_argument("--d-model", type=int, default=24)
    common_seed(sp)
    sp.set_defaults(func=cmd_train_classifier)

    def ranker_args(sp):
        sp.add_argument("--margin", type=float, default=1.0)
        sp.add_argument("--negatives", type=int, default=100)
        sp.add_argument("--lr", type=float, default=1e-2)
        sp.add_argument("--heads", type=int, default=3)
        sp.add_argument("--dropout", type=float, default=0.0)
        sp.add_argument("--epochs", type=int, default=20)
        common_seed(sp)

    sp = sub.add_parser("train-ranker", help="train the query graph ranker")
    sp.add_argument("--kg", required=True)
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--taxonomy")
    ranker_args(sp)
    sp.set_defaults(func=cmd_train_ranker)

    def eval_args(sp):
        sp.add_argument("--kg", required=True)
        sp.add_argument("--ranker", required=True)
        sp.add_argument("--classifier")
        sp.add_argument("--embeddings")
        sp.add_argument("--taxonomy")
        sp.add_argument("--mode", choices=pl.MODES, default="predicted")
        sp.add_argument("--max-hops", type=int, default=3)
        sp.add_argument("--constraints", action="store_true")

    sp = sub.add_parser("answer", help="answer a single question")
    sp.add_argument("--question", required=True)
    sp.add_argument("--topic", required=True)
    eval_args(sp)
    sp.set_defaults(func=cmd_answer)

    sp = sub.add_parser("evaluate", help="hits@1 evaluation over a dataset")
    sp.add_argument("--dataset", required=True)
    eval_args(sp)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("ablate", help="negatives/heads ablation grids")
    sp.add_argument("--kg", required=True)
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--taxonomy")
    sp.add_argument("--max-hops", type=int, default=3)
    grid = sp.add_mutually_exclusive_group(required=True)
    grid.add_argument("--negatives", dest="grid", action="store_const", const="negatives")
    grid.add_argument("--heads", dest="grid", action="store_const", const="heads")
    sp.add_argument("--margin", type=float, default=1.0)
    sp.add_argument("--lr", type=float, default=1e-2)
    sp.add_argument("--dropout", type=float, default=0.0)
    sp.add_argument("--epochs", type=int, default=10)
    common_seed(sp)
    sp.set_defaults(func=cmd_ablate)

    sp = sub.add_parser("make-toy", help="materialize a bundled toy benchmark")
    sp.add_argument("--out", required=True)
    sp.add_argument(
        "--benchmark", choices=("norshteyn", "ranker", "three-hop"), default="norshteyn"
    )
    sp.add_argument("--questions", type=int, default=200)
    common_seed(sp)
    sp.set_defaults(func=cmd_make_toy)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (
        kgmod.KgError,
        ann.SparqlError,
        ann.LabelingError,
        st.StructureError,
        emb.EmbeddingError,
        clf.ClassifierError,
        rk.RankerError,
        pl.PipelineError,
        OSError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
