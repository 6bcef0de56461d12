import numpy as np
import pytest

from sskgqa.kg import build_kg
from sskgqa.pipeline import tokenize_question
from sskgqa.querygraph import build_chain, canonicalize, execute
from sskgqa.ranker import (
    RankerError,
    RankTrainConfig,
    TokenOverlapRanker,
    build_training_triplets,
    load_ranker,
    rank_candidates,
    save_ranker,
    top1,
    train_ranker,
    triplet_loss,
)
from sskgqa.structures import builtin_taxonomy
from sskgqa.synth import ranker_fixture


def test_triplet_loss_hand_values():
    q = np.array([0.0, 0.0])
    p = np.array([3.0, 4.0])  # dist 5
    n = np.array([6.0, 8.0])  # dist 10
    assert triplet_loss(q, p, n, alpha=1.0) == pytest.approx(0.0)  # 5 - 10 + 1 < 0
    assert triplet_loss(q, p, n, alpha=6.0) == pytest.approx(1.0)
    assert triplet_loss(q, n, p, alpha=1.0) == pytest.approx(6.0)  # 10 - 5 + 1
    assert triplet_loss(q, p, p, alpha=2.5) == pytest.approx(2.5)


def test_triplet_loss_dim_mismatch():
    with pytest.raises(RankerError):
        triplet_loss(np.zeros(2), np.zeros(3), np.zeros(2))


def test_config_validation():
    with pytest.raises(ValueError):
        RankTrainConfig(margin=0.0)
    with pytest.raises(ValueError):
        RankTrainConfig(negatives=0)


def test_token_overlap_ranker_jaccard():
    r = TokenOverlapRanker()
    g = build_chain("paris", [("located_in", False)])
    toks = ["[CLS]", "paris", "located", "in", "what", "[SEP]"]
    score = r.score_candidate(toks, g)
    # graph tokens: [CLS] paris located in x [SEP]; overlap 5, union 7
    assert score == pytest.approx(5.0 / 7.0)


def test_rank_candidates_order_and_tiebreak():
    r = TokenOverlapRanker()
    g1 = build_chain("a", [("match_me", False)])
    g2 = build_chain("a", [("other", False)])
    toks = ["a", "match", "me"]
    ranked = rank_candidates(r, toks, [g2, g1])
    assert canonicalize(ranked[0]) == canonicalize(g1)
    assert canonicalize(top1(r, toks, [g2, g1])) == canonicalize(g1)
    # equal scores fall back to ascending canonical string
    ga = build_chain("a", [("r1", False)])
    gb = build_chain("a", [("r2", False)])
    ranked = rank_candidates(r, ["unrelated"], [gb, ga])
    keys = [canonicalize(g) for g in ranked]
    assert keys == sorted(keys)


def test_rank_candidates_empty():
    with pytest.raises(RankerError):
        rank_candidates(TokenOverlapRanker(), ["q"], [])


def test_build_training_triplets():
    kg, questions = ranker_fixture()
    dataset = [(tokenize_question(q.question), q.gold_graph) for q in questions]
    cfg = RankTrainConfig(negatives=3)
    triplets = build_training_triplets(dataset, kg, cfg, np.random.default_rng(0))
    assert len(triplets) == len(questions)
    for q_toks, pos_toks, neg_lists in triplets:
        assert 1 <= len(neg_lists) <= 3
        assert pos_toks not in neg_lists  # gold never sampled as negative


def test_build_training_triplets_skips_singletons():
    kg = build_kg([("a", "r", "b")])
    gold = build_chain("a", [("r", False)])
    cfg = RankTrainConfig()
    triplets = build_training_triplets(
        [(["q"], gold)], kg, cfg, np.random.default_rng(0)
    )
    assert triplets == []  # only candidate is the gold graph


def train_fixture_model(epochs=25):
    kg, questions = ranker_fixture()
    dataset = [(tokenize_question(q.question), q.gold_graph) for q in questions]
    cfg = RankTrainConfig(
        epochs=epochs, lr=1e-2, dropout=0.0, out_dim=16, ff_width=48, seed=0
    )
    return kg, questions, train_ranker(dataset, kg, builtin_taxonomy(), cfg)


def test_train_ranker_ranks_gold_first():
    kg, questions, model = train_fixture_model()
    from sskgqa.candidates import EnumConfig, enumerate_candidates

    hits = 0
    for q in questions:
        cands = enumerate_candidates(kg, q.topic_entity, EnumConfig(max_hops=1)).graphs
        best = top1(model, tokenize_question(q.question), cands)
        answers = {kg.entities.symbol_of(a) for a in execute(best, kg)}
        hits += bool(answers & set(q.answers))
    assert hits == len(questions)


def test_score_all_single_pass_encoding():
    kg, questions, model = train_fixture_model(epochs=1)
    from sskgqa.candidates import EnumConfig, enumerate_candidates

    cands = enumerate_candidates(kg, "thing0", EnumConfig(max_hops=1)).graphs
    model.encoder.encode_calls = 0
    model.score_all(["what", "color"], cands)
    assert model.encoder.encode_calls == 1 + len(cands)


def test_checkpoint_round_trip(tmp_path):
    kg, questions, model = train_fixture_model(epochs=2)
    path = str(tmp_path / "rank.ckpt")
    save_ranker(model, path)
    back = load_ranker(path)
    g = questions[0].gold_graph
    toks = tokenize_question(questions[0].question)
    assert back.score_candidate(toks, g) == pytest.approx(
        model.score_candidate(toks, g), abs=1e-5
    )
