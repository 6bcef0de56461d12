"""Query-graph ranking: one shared sequence encoder, triplet-loss training,
top-1 selection by Euclidean proximity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .candidates import EnumConfig, enumerate_candidates
from .encoder import EncoderConfig, SequenceEncoder, Vocab
from .kg import KnowledgeGraph
from .optim import AdamW, clip_global_norm
from .querygraph import QueryGraph, canonicalize, serialize_tokens
from .structures import Taxonomy, abstract, filter_candidates

MAGIC = "ssk-rank v1"


class RankerError(Exception):
    pass


@dataclass
class RankTrainConfig:
    margin: float = 1.0
    negatives: int = 100
    lr: float = 1e-3 
    dropout: float = 0.5
    heads: int = 3
    ff_width: int = 128 
    d_model: int = 24
    out_dim: int = 24
    clip_norm: float = 1.0
    epochs: int = 10
    seed: int = 0
    max_hops: int = 3
    use_attention: bool = True

    def __post_init__(self) -> None:
        if self.margin <= 0 or self.negatives < 1:
            raise ValueError("margin must be positive and negatives >= 1")


def triplet_loss(f_q: np.ndarray, f_p: np.ndarray, f_n: np.ndarray, alpha: float = 1.0) -> float:
    """max(||f_q - f_p|| - ||f_q - f_n|| + alpha, 0) with Euclidean norms."""
    f_q, f_p, f_n = (np.asarray(v, dtype=np.float64).ravel() for v in (f_q, f_p, f_n))
    if not f_q.shape == f_p.shape == f_n.shape:
        raise RankerError("triplet vectors must have equal dimensions")
    return max(
        float(np.linalg.norm(f_q - f_p) - np.linalg.norm(f_q - f_n) + alpha), 0.0
    )


def _triplet_loss_node(f_q: ad.Node, f_p: ad.Node, f_n: ad.Node, alpha: float) -> ad.Node:
    raw = ad.add(
        ad.sub(ad.euclid(f_q, f_p), ad.euclid(f_q, f_n)),
        ad.constant([[alpha]]),
    )
    return ad.relu(raw)


class RankerModel:
    """Metric ranker: score(q, g) = -||f(q) - f(tokens(g))||."""

    def __init__(self, encoder: SequenceEncoder):
        self.encoder = encoder

    def encode_sequence(self, tokens: list[str]) -> np.ndarray:
        return self.encoder.encode(tokens)

    def score_candidate(self, question_tokens: list[str], g: QueryGraph) -> float:
        f_q = self.encode_sequence(question_tokens)
        f_g = self.encode_sequence(serialize_tokens(g))
        return -float(np.linalg.norm(f_q - f_g))

    def score_all(self, question_tokens: list[str], cands: list[QueryGraph]) -> list[float]:
        """Scores for one evaluation pass: each sequence encoded exactly once."""
        f_q = self.encode_sequence(question_tokens)
        return [
            -float(np.linalg.norm(f_q - self.encode_sequence(serialize_tokens(g))))
            for g in cands
        ]


class TokenOverlapRanker:
    """Deterministic baseline: Jaccard overlap of question and graph tokens.

    Stands in for a weak learned ranker in filtering experiments.
    """

    def score_all(self, question_tokens: list[str], cands: list[QueryGraph]) -> list[float]:
        q = set(question_tokens)
        scores = []
        for g in cands:
            toks = set(serialize_tokens(g))
            scores.append(len(q & toks) / len(q | toks) if q | toks else 0.0)
        return scores

    def score_candidate(self, question_tokens: list[str], g: QueryGraph) -> float:
        return self.score_all(question_tokens, [g])[0]


def rank_candidates(ranker, question_tokens: list[str], cands: list[QueryGraph]) -> list[QueryGraph]:
    """Descending score; ties broken by ascending canonical string."""
    if not cands:
        raise RankerError("no candidates to rank")
    scores = ranker.score_all(question_tokens, cands)
    keyed = sorted(zip(scores, (canonicalize(g) for g in cands), cands), key=lambda x: (-x[0], x[1]))
    return [g for _, _, g in keyed]


def top1(ranker, question_tokens: list[str], cands: list[QueryGraph]) -> QueryGraph:
    return rank_candidates(ranker, question_tokens, cands)[0]


def build_training_triplets(
    dataset: list[tuple[list[str], QueryGraph]],
    kg: KnowledgeGraph,
    cfg: RankTrainConfig,
    rng: np.random.Generator,
) -> list[tuple[list[str], list[str], list[list[str]]]]:
    """(question tokens, positive tokens, negative token lists) per question.

    Negatives are sampled uniformly without replacement from the candidates
    matching the gold structure, excluding graphs canonically equal to gold.
    Questions with no negatives are skipped.
    """
    out = []
    for q_tokens, gold in dataset:
        gold_key = canonicalize(gold)
        ss = abstract(gold)
        enum_cfg = EnumConfig(
            max_hops=min(cfg.max_hops, max(ss.hop_count(), 1)),
            attach_constraints=ss.has_constraints(),
        )
        topic = gold.nodes[gold.topic].label
        cands = enumerate_candidates(kg, topic, enum_cfg).graphs
        cs = filter_candidates(cands, ss)
        negs = [g for g in cs if canonicalize(g) != gold_key]
        if not negs:
            continue
        n = min(cfg.negatives, len(negs))
        picked = rng.choice(len(negs), size=n, replace=False)
        out.append(
            (q_tokens, serialize_tokens(gold), [serialize_tokens(negs[i]) for i in picked])
        )
    return out


def train_ranker(
    dataset: list[tuple[list[str], QueryGraph]],
    kg: KnowledgeGraph,
    taxonomy: Taxonomy,
    cfg: RankTrainConfig,
) -> RankerModel:
    """Minimize the mean triplet loss over sampled (q, gold, negative) triplets."""
    rng = np.random.default_rng(cfg.seed)
    triplets = build_training_triplets(dataset, kg, cfg, rng)
    if not triplets:
        raise RankerError("no trainable questions (every candidate set is only the gold)")
    sequences = [t[0] for t in triplets] + [t[1] for t in triplets]
    for _, _, negs in triplets:
        sequences.extend(negs)
    vocab = Vocab.from_sequences(sequences)
    enc_cfg = EncoderConfig(
        out_dim=cfg.out_dim,
        d_model=cfg.d_model,
        heads=cfg.heads,
        ff_width=cfg.ff_width,
        use_attention=cfg.use_attention,
        dropout=cfg.dropout,
    )
    model = RankerModel(SequenceEncoder(vocab, enc_cfg, rng))
    params = model.encoder.parameters()
    opt = AdamW(lr=cfg.lr)
    order = np.arange(len(triplets))
    for _epoch in range(cfg.epochs):
        rng.shuffle(order)
        for i in order:
            q_toks, pos_toks, neg_toks = triplets[i]
            for p in params:
                p.zero_grad()
            f_q = model.encoder.forward(q_toks, training=True, rng=rng)
            f_p = model.encoder.forward(pos_toks, training=True, rng=rng)
            terms = [
                _triplet_loss_node(
                    f_q, f_p, model.encoder.forward(toks, training=True, rng=rng), cfg.margin
                )
                for toks in neg_toks
            ]
            total = terms[0]
            for term in terms[1:]:
                total = ad.add(total, term)
            ad.backward(ad.scale(total, 1.0 / len(terms)))
            grads = [p.grad if p.grad is not None else np.zeros_like(p.value) for p in params]
            clip_global_norm(grads, cfg.clip_norm)
            opt.step([p.value for p in params], grads)
    return model


def save_ranker(model: RankerModel, path: str) -> None:
    """`ssk-rank v1` header (config, vocab) + float32 LE payload."""
    enc = model.encoder
    cfg = enc.cfg
    with open(path, "wb") as f:
        f.write(f"{MAGIC}\n".encode())
        f.write(
            f"dims {cfg.out_dim} {cfg.d_model} {cfg.heads} {cfg.ff_width} "
            f"{int(cfg.use_attention)} {cfg.dropout}\n".encode()
        )
        f.write(f"vocab {len(enc.vocab)}\n".encode())
        for tok in enc.vocab.tokens:
            f.write((tok + "\n").encode())
        payload = enc.payload()
        f.write(f"floats {payload.size}\n".encode())
        f.write(payload.astype("<f4").tobytes())


def load_ranker(path: str) -> RankerModel:
    with open(path, "rb") as f:
        if f.readline().decode().strip() != MAGIC:
            raise RankerError(f"bad ranker checkpoint: {path}")
        dims = f.readline().decode().split()
        out_dim, d_model, heads, ff = map(int, dims[1:5])
        use_att, dropout = bool(int(dims[5])), float(dims[6])
        nvocab = int(f.readline().decode().split()[1])
        tokens = [f.readline().decode().rstrip("\n") for _ in range(nvocab)]
        count = int(f.readline().decode().split()[1])
        flat = np.frombuffer(f.read(), dtype="<f4").astype(np.float64)
    if flat.size != count:
        raise RankerError("ranker payload size mismatch")
    cfg = EncoderConfig(out_dim, d_model, heads, ff, use_att, dropout)
    model = RankerModel(SequenceEncoder(Vocab(tokens[1:]), cfg, np.random.default_rng(0)))
    model.encoder.load_payload(flat)
    return model
