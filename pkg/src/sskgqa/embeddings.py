"""Entity/relation embeddings trained with TransE, ComplEx or RotatE scoring."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import kernels
from .kg import KnowledgeGraph
from .optim import AdamW, clip_global_norm

KINDS = ("transe", "complex", "rotate")
MAX_ENTITY_NORM = 10.0  # drift clamp after each update

MAGIC = "ssk-emb v1"


class EmbeddingError(Exception):
    pass


@dataclass
class EmbedTrainConfig:
    d: int = 64
    epochs: int = 100
    lr: float = 0.05
    negatives: int = 8
    margin: float = 6.0
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.d, self.epochs + 1, self.negatives) <= 0 or self.lr <= 0:
            raise ValueError("config values must be positive")


@dataclass
class EmbeddingTable:
    kind: str
    ent: np.ndarray  # (N, d)
    rel: np.ndarray  # (R, d); for rotate: phases in the first d/2 columns
    @property
    def d(self) -> int:
        return self.ent.shape[1]

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise EmbeddingError(f"unknown model kind: {self.kind}")
        if self.kind in ("complex", "rotate") and self.ent.shape[1] % 2 != 0:
            raise EmbeddingError(f"{self.kind} requires an even dimension")

    def lookup_entity(self, e: int) -> np.ndarray:
        if not 0 <= e < self.ent.shape[0]:
            raise EmbeddingError(f"entity id out of range: {e}")
        return self.ent[e].copy()

    def score(self, h: int, r: int, t: int) -> float:
        return float(self.score_tails(h, r, np.array([t]))[0])

    def score_tails(self, h: int, r: int, tails: np.ndarray) -> np.ndarray:
        """Scores of (h, r, t') for a vector of candidate tails."""
        eh = self.ent[h : h + 1]
        et = self.ent[tails]
        if self.kind == "transe":
            return -np.linalg.norm(eh + self.rel[r : r + 1] - et, axis=1)
        if self.kind == "complex":
            hr = kernels.complex_mul_packed(eh, self.rel[r : r + 1])
            return (hr * et).sum(axis=1)
        half = self.d // 2
        theta = self.rel[r, :half]
        unit = np.concatenate([np.cos(theta), np.sin(theta)]).reshape(1, -1)
        rotated = kernels.complex_mul_packed(eh, unit)
        return -np.linalg.norm(rotated - et, axis=1)


def init_table(kind: str, n_entities: int, n_relations: int, d: int, seed: int) -> EmbeddingTable:
    rng = np.random.default_rng(seed)
    ent = rng.normal(0.0, 0.5, size=(n_entities, d))
    if kind == "rotate":
        rel = np.zeros((n_relations, d))
        rel[:, : d // 2] = rng.uniform(-np.pi, np.pi, size=(n_relations, d // 2))
    else:
        rel = rng.normal(0.0, 0.5, size=(n_relations, d))
    return EmbeddingTable(kind, ent, rel)


def score_nodes(
    ent: ad.Node, rel: ad.Node, kind: str, h: np.ndarray, r: np.ndarray, t: np.ndarray
) -> ad.Node:
    """Batched differentiable scores, one row per triple."""
    eh = ad.rows(ent, h)
    et = ad.rows(ent, t)
    er = ad.rows(rel, r)
    if kind == "transe":
        return ad.scale(ad.rownorm(ad.sub(ad.add(eh, er), et)), -1.0)
    if kind == "complex":
        return ad.rowsum(ad.mul(ad.complex_mul(eh, er), et))
    theta, _pad = ad.split_halves(er)
    unit = ad.concat_halves(ad.cos(theta), ad.sin(theta))
    return ad.scale(ad.rownorm(ad.sub(ad.complex_mul(eh, unit), et)), -1.0)


def train(kg: KnowledgeGraph, cfg: EmbedTrainConfig, kind: str = "transe") -> tuple[EmbeddingTable, list[float]]:
    """Train a table on the KG triples with uniform corruption negatives.

    Loss per positive: -log sigmoid(margin + score) plus the mean of
    -log sigmoid(-margin - score) over its corruptions. Returns the table and
    the per-epoch loss history.
    """
    if kg.num_triples == 0:
        raise EmbeddingError("knowledge graph has no triples")
    table = init_table(kind, kg.num_entities, kg.num_relations, cfg.d, cfg.seed)
    triples = sorted((t.head, t.relation, t.tail) for t in kg.triples)
    heads = np.array([t[0] for t in triples])
    rels = np.array([t[1] for t in triples])
    tails = np.array([t[2] for t in triples])
    rng = np.random.default_rng(cfg.seed + 1)
    opt = AdamW(lr=cfg.lr)
    history: list[float] = []
    for _epoch in range(cfg.epochs):
        ent = ad.parameter(table.ent)
        rel = ad.parameter(table.rel)
        s_pos = score_nodes(ent, rel, kind, heads, rels, tails)
        # uniform corruptions: replace head or tail
        k = cfg.negatives
        nh = np.repeat(heads, k)
        nr = np.repeat(rels, k)
        nt = np.repeat(tails, k)
        corrupt_head = rng.random(nh.size) < 0.5
        repl = rng.integers(0, kg.num_entities, size=nh.size)
        nh = np.where(corrupt_head, repl, nh)
        nt = np.where(corrupt_head, nt, repl)
        s_neg = score_nodes(ent, rel, kind, nh, nr, nt)
        gamma = cfg.margin
        pos_term = ad.scale(ad.sum_all(ad.logsigmoid(ad.add(s_pos, ad.constant(np.full(s_pos.shape, gamma))))), -1.0 / len(triples))
        neg_term = ad.scale(ad.sum_all(ad.logsigmoid(ad.scale(ad.add(s_neg, ad.constant(np.full(s_neg.shape, gamma))), -1.0))), -1.0 / s_neg.shape[0])
        loss = ad.add(pos_term, neg_term)
        ad.backward(loss)
        history.append(float(loss.value[0, 0]))
        grads = [ent.grad, rel.grad]
        clip_global_norm(grads, 1.0)
        opt.step([table.ent, table.rel], grads)
        _clamp(table)
    return table, history


def _clamp(table: EmbeddingTable) -> None:
    norms = np.linalg.norm(table.ent, axis=1, keepdims=True)
    over = norms > MAX_ENTITY_NORM
    if over.any():
        table.ent[...] = np.where(over, table.ent * (MAX_ENTITY_NORM / norms), table.ent)
    if table.kind == "rotate":
        half = table.d // 2
        table.rel[:, :half] = np.mod(table.rel[:, :half] + np.pi, 2 * np.pi) - np.pi
        table.rel[:, half:] = 0.0


def filtered_mrr(table: EmbeddingTable, kg: KnowledgeGraph) -> float:
    """Mean reciprocal rank of true tails, filtering other true triples."""
    true_tails: dict[tuple[int, int], set[int]] = {}
    for t in kg.triples:
        true_tails.setdefault((t.head, t.relation), set()).add(t.tail)
    ranks = []
    all_tails = np.arange(kg.num_entities)
    for t in sorted(kg.triples, key=lambda x: (x.head, x.relation, x.tail)):
        scores = table.score_tails(t.head, t.relation, all_tails)
        target = scores[t.tail]
        others = true_tails[(t.head, t.relation)] - {t.tail}
        mask = np.ones(kg.num_entities, dtype=bool)
        mask[list(others)] = False
        rank = 1 + int((scores[mask] > target).sum())
        ranks.append(1.0 / rank)
    return float(np.mean(ranks))


def save_table(table: EmbeddingTable, path: str) -> None:
    """Checkpoint: `ssk-emb v1 <kind> <N> <R> <d>` header + float32 LE payload,
    entity rows then relation rows."""
    n, d = table.ent.shape
    r = table.rel.shape[0]
    with open(path, "wb") as f:
        f.write(f"{MAGIC} {table.kind} {n} {r} {d}\n".encode())
        payload = np.concatenate([table.ent.ravel(), table.rel.ravel()]).astype("<f4")
        f.write(payload.tobytes())


def load_table(path: str) -> EmbeddingTable:
    with open(path, "rb") as f:
        header = f.readline().decode().strip().split()
        if header[:2] != MAGIC.split() or len(header) != 6:
            raise EmbeddingError(f"bad embedding checkpoint header in {path}")
        kind, n, r, d = header[2], int(header[3]), int(header[4]), int(header[5])
        flat = np.frombuffer(f.read(), dtype="<f4").astype(np.float64)
    if flat.size != (n + r) * d:
        raise EmbeddingError("embedding payload size mismatch")
    ent = flat[: n * d].reshape(n, d).copy()
    rel = flat[n * d :].reshape(r, d).copy()
    return EmbeddingTable(kind, ent, rel)
