import numpy as np
import pytest

from sskgqa import autodiff as ad
from sskgqa.embeddings import (
    EmbeddingError,
    EmbeddingTable,
    EmbedTrainConfig,
    filtered_mrr,
    init_table,
    load_table,
    save_table,
    score_nodes,
    train,
)
from sskgqa.kg import build_kg


def cycle_kg(n=12):
    ents = [f"e{i}" for i in range(n)]
    triples = [(ents[i], "next", ents[(i + 1) % n]) for i in range(n)]
    triples += [(ents[i], "skip", ents[(i + 2) % n]) for i in range(n)]
    return build_kg(triples)


def test_config_validation():
    with pytest.raises(ValueError):
        EmbedTrainConfig(d=0)
    with pytest.raises(ValueError):
        EmbedTrainConfig(negatives=0)


def test_table_validation():
    with pytest.raises(EmbeddingError):
        EmbeddingTable("bogus", np.zeros((2, 4)), np.zeros((1, 4)))
    with pytest.raises(EmbeddingError):
        EmbeddingTable("rotate", np.zeros((2, 5)), np.zeros((1, 5)))
    with pytest.raises(EmbeddingError):
        init_table("transe", 3, 1, 4, 0).lookup_entity(5)


def test_transe_score_translation_exact():
    # h + r == t gives score 0, the maximum
    ent = np.array([[1.0, 2.0], [3.0, 5.0], [0.0, 0.0]])
    rel = np.array([[2.0, 3.0]])
    table = EmbeddingTable("transe", ent, rel)
    assert table.score(0, 0, 1) == pytest.approx(0.0)
    assert table.score(0, 0, 2) < 0.0


def test_rotate_zero_phase_is_identity():
    # zero rotation leaves h unchanged, so score is -||h - t||
    rng = np.random.default_rng(3)
    ent = rng.normal(size=(4, 8))
    rel = np.zeros((1, 8))
    table = EmbeddingTable("rotate", ent, rel)
    expected = -np.linalg.norm(ent[0] - ent[2])
    assert table.score(0, 0, 2) == pytest.approx(expected, abs=1e-9)


def test_complex_score_matches_complex_arithmetic():
    rng = np.random.default_rng(4)
    ent = rng.normal(size=(3, 6))
    rel = rng.normal(size=(2, 6))
    table = EmbeddingTable("complex", ent, rel)
    z = lambda v: v[:3] + 1j * v[3:]
    # packed layout contracts h*r against the tail components directly
    hr = z(ent[0]) * z(rel[1])
    expected = float(np.sum(hr.real * ent[2][:3] + hr.imag * ent[2][3:]))
    assert table.score(0, 1, 2) == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("kind", ["transe", "complex", "rotate"])
def test_score_nodes_matches_table(kind):
    kg = cycle_kg(6)
    table = init_table(kind, kg.num_entities, kg.num_relations, 8, seed=1)
    h = np.array([0, 2, 5])
    r = np.array([0, 1, 0])
    t = np.array([1, 4, 0])
    node = score_nodes(
        ad.parameter(table.ent), ad.parameter(table.rel), kind, h, r, t
    )
    for i in range(3):
        assert node.value[i, 0] == pytest.approx(
            table.score(int(h[i]), int(r[i]), int(t[i])), abs=1e-9
        )


@pytest.mark.parametrize("kind", ["transe", "complex", "rotate"])
def test_score_nodes_gradients_finite_diff(kind):
    kg = cycle_kg(5)
    table = init_table(kind, kg.num_entities, kg.num_relations, 6, seed=2)
    h = np.array([0, 1])
    r = np.array([0, 1])
    t = np.array([2, 3])

    def loss_of(ent_val):
        node = score_nodes(
            ad.parameter(ent_val), ad.parameter(table.rel), kind, h, r, t
        )
        return float(ad.sum_all(node).value[0, 0])

    ent = ad.parameter(table.ent)
    loss = ad.sum_all(score_nodes(ent, ad.parameter(table.rel), kind, h, r, t))
    ad.backward(loss)
    eps = 1e-6
    for idx in [(0, 0), (1, 3), (2, 5), (3, 1)]:
        plus = table.ent.copy()
        plus[idx] += eps
        minus = table.ent.copy()
        minus[idx] -= eps
        num = (loss_of(plus) - loss_of(minus)) / (2 * eps)
        assert ent.grad[idx] == pytest.approx(num, abs=1e-5)


def test_train_loss_decreases_and_norms_clamped():
    kg = cycle_kg(8)
    table, history = train(kg, EmbedTrainConfig(d=8, epochs=40, seed=0), "transe")
    assert history[-1] < history[0]
    assert np.linalg.norm(table.ent, axis=1).max() <= 10.0 + 1e-9


def test_train_rotate_phases_wrapped():
    kg = cycle_kg(6)
    table, _ = train(kg, EmbedTrainConfig(d=8, epochs=10, seed=0), "rotate")
    half = table.d // 2
    assert (table.rel[:, :half] >= -np.pi).all()
    assert (table.rel[:, :half] < np.pi).all()
    assert np.allclose(table.rel[:, half:], 0.0)


def test_filtered_mrr_perfect_table():
    # hand-built table where the true tail always wins
    kg = build_kg([("a", "r", "b"), ("b", "r", "c"), ("c", "r", "a")])
    ent = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    # place each tail exactly at head + r
    rel = np.array([[1.0, 0.0]])
    kg2 = build_kg([("a", "r", "b")])
    table = EmbeddingTable("transe", ent[:2], rel)
    assert filtered_mrr(table, kg2) == pytest.approx(1.0)


def test_filtered_mrr_filters_known_tails():
    # two true tails for the same (h, r); filtering must ignore the other one
    kg = build_kg([("a", "r", "b"), ("a", "r", "c")])
    ent = np.array([[0.0, 0.0], [1.0, 0.0], [1.1, 0.0]])
    rel = np.array([[1.05, 0.0]])
    table = EmbeddingTable("transe", ent, rel)
    assert filtered_mrr(table, kg) == pytest.approx(1.0)


def test_checkpoint_round_trip(tmp_path):
    table = init_table("rotate", 5, 2, 8, seed=9)
    path = str(tmp_path / "emb.ckpt")
    save_table(table, path)
    back = load_table(path)
    assert back.kind == "rotate"
    assert back.ent.shape == table.ent.shape
    assert np.allclose(back.ent, table.ent, atol=1e-6)
    assert np.allclose(back.rel, table.rel, atol=1e-6)


def test_checkpoint_bad_header(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"not a checkpoint\n")
    with pytest.raises(EmbeddingError):
        load_table(str(path))
