"""Tokenizer + model training on a list of corpus records."""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import List, Optional, Sequence

import numpy as np

from .corpus import split_corpus
from .mlm import ModelConfig, TrainConfig, TransformerParams, init_params, train
from .tokenizer import Vocab, tokenize, train_wordpiece

# Small enough for the few-shot sweep to run in minutes on one core.
NIM_MODEL = dict(layers=2, heads=4, hidden=64, ffn=256, max_seq=32, dropout=0.0)
NIM_TRAIN = dict(batch_size=64, steps=8000, lr=2e-3)
CHESS_MODEL = dict(layers=2, heads=4, hidden=128, ffn=512, max_seq=128, dropout=0.0)
CHESS_TRAIN = dict(batch_size=32, steps=3000, lr=1e-3)
NIM_VOCAB = 200
CHESS_VOCAB = 4000


@dataclass
class TrainedModel:
    params: TransformerParams
    vocab: Vocab
    train_records: List[str]
    test_records: List[str]
    losses: List[float]


def _known(cls, overrides: dict) -> dict:
    names = {f.name for f in fields(cls)}
    bad = set(overrides) - names
    if bad:
        raise ValueError(f"unknown {cls.__name__} fields: {sorted(bad)}")
    return overrides


def nim_train_config(n_records: int = 0, seed: int = 0, **overrides) -> TrainConfig:
    return TrainConfig(**{**NIM_TRAIN, "seed": seed, **_known(TrainConfig, overrides)})


def train_on_records(records: Sequence[str], model_config: Optional[dict] = None,
                     train_config: Optional[TrainConfig] = None, seed: int = 0,
                     test_fraction: float = 0.2, max_vocab: int = NIM_VOCAB,
                     min_frequency: int = 2) -> TrainedModel:
    """Fit the tokenizer on all records, hold out ``test_fraction`` of them,
    and train a fresh model on the rest."""
    vocab = train_wordpiece(records, max_vocab, min_frequency)
    train_r, test_r = split_corpus(records, test_fraction, np.random.default_rng([seed, 7]))
    seqs = [tokenize(vocab, r) for r in train_r]
    mc = {**NIM_MODEL, **_known(ModelConfig, dict(model_config or {}))}
    mc.setdefault("max_seq", 32)
    longest = max(len(s) for s in seqs)
    if mc["max_seq"] < longest:
        mc["max_seq"] = longest
    cfg = ModelConfig(vocab_size=len(vocab), **mc)
    params = init_params(cfg, np.random.default_rng([seed, 11]))
    tc = train_config or nim_train_config(len(train_r), seed=seed)
    params, losses = train(params, seqs, vocab, tc)
    return TrainedModel(params, vocab, train_r, test_r, losses)
