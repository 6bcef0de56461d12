"""Shared trainable sequence encoder: token embeddings, one optional
multi-head self-attention block with a feed-forward layer, mean pooling and a
linear projection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad

OOV = "[OOV]"


@dataclass
class EncoderConfig:
    out_dim: int
    d_model: int = 24
    heads: int = 3
    ff_width: int = 48
    use_attention: bool = True
    dropout: float = 0.0

    def __post_init__(self) -> None:
        if self.use_attention and self.d_model % self.heads != 0:
            raise ValueError("heads must divide d_model")


class Vocab:
    """Token -> index with an OOV bucket at index 0."""

    def __init__(self, tokens: list[str]) -> None:
        self.tokens = [OOV] + sorted(set(tokens) - {OOV})
        self._index = {t: i for i, t in enumerate(self.tokens)}

    @classmethod
    def from_sequences(cls, sequences) -> "Vocab":
        return cls([t for seq in sequences for t in seq])

    def __len__(self) -> int:
        return len(self.tokens)

    def encode(self, tokens: list[str]) -> list[int]:
        return [self._index.get(t, 0) for t in tokens]


class SequenceEncoder:
    """f(.) applied to both questions and serialized query graphs."""

    def __init__(self, vocab: Vocab, cfg: EncoderConfig, rng: np.random.Generator):
        self.vocab = vocab
        self.cfg = cfg
        self.encode_calls = 0  # efficiency contract instrumentation
        d, f = cfg.d_model, cfg.ff_width
        dh = d // cfg.heads if cfg.use_attention else 0

        def init(*shape):
            return ad.parameter(rng.normal(0.0, 0.1, size=shape))

        self.params: dict[str, ad.Node] = {"tok_emb": init(len(vocab), d)}
        if cfg.use_attention:
            for h in range(cfg.heads):
                self.params[f"wq{h}"] = init(d, dh)
                self.params[f"wk{h}"] = init(d, dh)
                self.params[f"wv{h}"] = init(d, dh)
            self.params["wo"] = init(d, d)
            self.params["ff_w1"] = init(d, f)
            self.params["ff_b1"] = ad.parameter(np.zeros((1, f)))
            self.params["ff_w2"] = init(f, d)
            self.params["ff_b2"] = ad.parameter(np.zeros((1, d)))
        self.params["proj"] = init(d, cfg.out_dim)

    def parameters(self) -> list[ad.Node]:
        return list(self.params.values())

    def forward(
        self,
        tokens: list[str],
        training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> ad.Node:
        if not tokens:
            raise ValueError("token sequence must be non-empty")
        self.encode_calls += 1
        cfg = self.cfg
        x = ad.rows(self.params["tok_emb"], self.vocab.encode(tokens))
        if cfg.use_attention:
            dh = cfg.d_model // cfg.heads
            heads = []
            for h in range(cfg.heads):
                q = ad.matmul(x, self.params[f"wq{h}"])
                k = ad.matmul(x, self.params[f"wk{h}"])
                v = ad.matmul(x, self.params[f"wv{h}"])
                att = ad.softmax(ad.scale(ad.matmul(q, ad.transpose(k)), 1.0 / math.sqrt(dh)))
                heads.append(ad.matmul(att, v))
            merged = heads[0]
            for h in heads[1:]:
                merged = ad.concat_cols(merged, h)
            x = ad.add(x, ad.matmul(merged, self.params["wo"]))
            hidden = ad.relu(ad.add(ad.matmul(x, self.params["ff_w1"]), self.params["ff_b1"]))
            x = ad.add(x, ad.add(ad.matmul(hidden, self.params["ff_w2"]), self.params["ff_b2"]))
        pooled = ad.mean_rows(x)
        pooled = ad.dropout(pooled, cfg.dropout, rng, training)
        return ad.matmul(pooled, self.params["proj"])

    def encode(self, tokens: list[str]) -> np.ndarray:
        """Inference-mode vector (dropout off)."""
        return self.forward(tokens).value.copy()

    # -- checkpoint payload helpers (header written by the owning model) --

    def param_names(self) -> list[str]:
        return list(self.params)

    def payload(self) -> np.ndarray:
        return np.concatenate(
            [self.params[n].value.astype(np.float32).ravel() for n in self.param_names()]
        )

    def load_payload(self, flat: np.ndarray) -> int:
        off = 0
        for n in self.param_names():
            p = self.params[n]
            size = p.value.size
            p.value[...] = flat[off : off + size].reshape(p.value.shape)
            off += size
        return off
