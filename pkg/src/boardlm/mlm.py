"""A small BERT-style encoder trained with masked language modelling.

Pure numpy with hand-written backpropagation. The architecture follows the
original post-LayerNorm encoder: token + learned position embeddings, a
stack of self-attention / GELU feed-forward blocks, and an MLM head
(dense, GELU, LayerNorm) whose decoder is tied to the token embeddings.
"""
from __future__ import annotations

import json
import math
import struct
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .tokenizer import MASK, SPECIALS, Vocab, tokenize

LN_EPS = 1e-12
NEG_INF = -1e9
IGNORE = -1
CKPT_MAGIC = b"BLMCKPT1"


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class ModelConfig:
    vocab_size: int
    layers: int = 4
    heads: int = 4
    hidden: int = 128
    ffn: int = 512
    max_seq: int = 32
    dropout: float = 0.1

    def __post_init__(self):
        if self.hidden % self.heads:
            raise ValueError("hidden width must be divisible by the number of heads")
        if self.vocab_size <= len(SPECIALS):
            raise ValueError("vocab must contain more than the special tokens")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")


@dataclass
class TrainConfig:
    mask_p: float = 0.15
    batch_size: int = 32
    steps: int = 2000
    lr: float = 5e-4
    warmup: float = 0.1
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    clip_norm: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.mask_p <= 1.0:
            raise ValueError("mask probability must lie in [0, 1]")


@dataclass
class TransformerParams:
    config: ModelConfig
    tensors: Dict[str, np.ndarray]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    @property
    def dtype(self):
        return self.tensors["tok_emb"].dtype

    def astype(self, dtype) -> "TransformerParams":
        return TransformerParams(self.config, {k: v.astype(dtype) for k, v in self.tensors.items()})

    def num_parameters(self) -> int:
        return sum(v.size for v in self.tensors.values())


def param_shapes(cfg: ModelConfig) -> Dict[str, Tuple[int, ...]]:
    H, F, V = cfg.hidden, cfg.ffn, cfg.vocab_size
    shapes = {
        "tok_emb": (V, H),
        "pos_emb": (cfg.max_seq, H),
        "emb_ln.g": (H,),
        "emb_ln.b": (H,),
    }
    for i in range(cfg.layers):
        p = f"layer{i}."
        shapes.update({
            p + "wqkv": (H, 3 * H), p + "bqkv": (3 * H,),
            p + "wo": (H, H), p + "bo": (H,),
            p + "ln1.g": (H,), p + "ln1.b": (H,),
            p + "w1": (H, F), p + "b1": (F,),
            p + "w2": (F, H), p + "b2": (H,),
            p + "ln2.g": (H,), p + "ln2.b": (H,),
        })
    shapes.update({
        "head.w": (H, H), "head.b": (H,),
        "head_ln.g": (H,), "head_ln.b": (H,),
        "out.b": (V,),
    })
    return shapes


def init_params(config: ModelConfig, rng: np.random.Generator, std: float = 0.02,
                dtype=np.float32) -> TransformerParams:
    """Normal(0, std) weights and embeddings; zero biases; unit LayerNorm gains."""
    tensors = {}
    for name, shape in param_shapes(config).items():
        leaf = name.rsplit(".", 1)[-1]
        if leaf == "g":
            t = np.ones(shape)
        elif leaf.startswith("b") and len(shape) == 1:
            t = np.zeros(shape)
        else:
            t = rng.normal(0.0, std, size=shape)
        tensors[name] = t.astype(dtype)
    return TransformerParams(config, tensors)


# ---------------------------------------------------------------------------
# Building blocks (forward returns a cache consumed by the matching backward)

def _layer_norm(x, g, b):
    mu = x.mean(-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = xc * inv
    return xhat * g + b, (xhat, inv, g)


def _layer_norm_back(dy, cache):
    xhat, inv, g = cache
    H = xhat.shape[-1]
    dg = (dy * xhat).reshape(-1, H).sum(0)
    db = dy.reshape(-1, H).sum(0)
    dxhat = dy * g
    dx = inv * (dxhat - dxhat.mean(-1, keepdims=True) - xhat * (dxhat * xhat).mean(-1, keepdims=True))
    return dx, dg, db


_GELU_C = math.sqrt(2.0 / math.pi)


def _gelu(x):
    u = _GELU_C * (x + 0.044715 * (x * x * x))
    t = np.tanh(u)
    return 0.5 * x * (1.0 + t), (x, t)


def _gelu_back(dy, cache):
    x, t = cache
    du = _GELU_C * (1.0 + 3 * 0.044715 * x * x)
    return dy * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du)


def softmax(x, axis=-1):
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def _dropout(x, p, rng):
    if p <= 0.0 or rng is None:
        return x, None
    keep = (rng.random(x.shape) >= p).astype(x.dtype) / (1.0 - p)
    return x * keep, keep


def _encoder_forward(params: TransformerParams, ids, mask, rng=None):
    """Hidden states (B, T, H) and a cache for :func:`_encoder_backward`."""
    cfg = params.config
    P = params.tensors
    B, T = ids.shape
    if T > cfg.max_seq:
        raise ValueError(f"sequence length {T} exceeds max_seq={cfg.max_seq}")
    if ids.min() < 0 or ids.max() >= cfg.vocab_size:
        raise ValueError("token id outside the vocabulary")
    p_drop = cfg.dropout if rng is not None else 0.0
    nh, H = cfg.heads, cfg.hidden
    dh = H // nh
    scale = 1.0 / math.sqrt(dh)
    dtype = P["tok_emb"].dtype
    bias = np.where(mask, 0.0, NEG_INF).astype(dtype)[:, None, None, :]

    e = P["tok_emb"][ids] + P["pos_emb"][:T]
    x, ln_c = _layer_norm(e, P["emb_ln.g"], P["emb_ln.b"])
    x, drop = _dropout(x, p_drop, rng)
    cache = {"ids": ids, "emb": (ln_c, drop), "layers": []}

    for i in range(cfg.layers):
        p = f"layer{i}."
        qkv = x @ P[p + "wqkv"] + P[p + "bqkv"]
        q, k, v = (qkv[..., j * H:(j + 1) * H].reshape(B, T, nh, dh).transpose(0, 2, 1, 3)
                   for j in range(3))
        att = softmax(q @ k.transpose(0, 1, 3, 2) * scale + bias)
        ctx = (att @ v).transpose(0, 2, 1, 3).reshape(B, T, H)
        o = ctx @ P[p + "wo"] + P[p + "bo"]
        o, d1 = _dropout(o, p_drop, rng)
        h, ln1 = _layer_norm(x + o, P[p + "ln1.g"], P[p + "ln1.b"])
        z = h @ P[p + "w1"] + P[p + "b1"]
        a, gc = _gelu(z)
        f = a @ P[p + "w2"] + P[p + "b2"]
        f, d2 = _dropout(f, p_drop, rng)
        y, ln2 = _layer_norm(h + f, P[p + "ln2.g"], P[p + "ln2.b"])
        cache["layers"].append((x, q, k, v, att, ctx, d1, ln1, h, gc, a, d2, ln2))
        x = y
    return x, cache


def _encoder_backward(params: TransformerParams, dx, cache, grads):
    cfg = params.config
    P = params.tensors
    nh, H = cfg.heads, cfg.hidden
    dh = H // nh
    scale = 1.0 / math.sqrt(dh)
    B, T, _ = dx.shape

    for i in reversed(range(cfg.layers)):
        p = f"layer{i}."
        x, q, k, v, att, ctx, d1, ln1, h, gc, a, d2, ln2 = cache["layers"][i]
        dres2, grads[p + "ln2.g"], grads[p + "ln2.b"] = _layer_norm_back(dx, ln2)
        df = dres2 if d2 is None else dres2 * d2
        grads[p + "w2"] = a.reshape(-1, a.shape[-1]).T @ df.reshape(-1, H)
        grads[p + "b2"] = df.reshape(-1, H).sum(0)
        da = df @ P[p + "w2"].T
        dz = _gelu_back(da, gc)
        grads[p + "w1"] = h.reshape(-1, H).T @ dz.reshape(-1, dz.shape[-1])
        grads[p + "b1"] = dz.reshape(-1, dz.shape[-1]).sum(0)
        dh_ = dres2 + dz @ P[p + "w1"].T
        dres1, grads[p + "ln1.g"], grads[p + "ln1.b"] = _layer_norm_back(dh_, ln1)
        do = dres1 if d1 is None else dres1 * d1
        grads[p + "wo"] = ctx.reshape(-1, H).T @ do.reshape(-1, H)
        grads[p + "bo"] = do.reshape(-1, H).sum(0)
        dctx = (do @ P[p + "wo"].T).reshape(B, T, nh, dh).transpose(0, 2, 1, 3)
        datt = dctx @ v.transpose(0, 1, 3, 2)
        dv = att.transpose(0, 1, 3, 2) @ dctx
        ds = att * (datt - (datt * att).sum(-1, keepdims=True)) * scale
        dq = ds @ k
        dk = ds.transpose(0, 1, 3, 2) @ q
        dqkv = np.concatenate(
            [t.transpose(0, 2, 1, 3).reshape(B, T, H) for t in (dq, dk, dv)], axis=-1)
        grads[p + "wqkv"] = x.reshape(-1, H).T @ dqkv.reshape(-1, 3 * H)
        grads[p + "bqkv"] = dqkv.reshape(-1, 3 * H).sum(0)
        dx = dres1 + dqkv @ P[p + "wqkv"].T

    ln_c, drop = cache["emb"]
    if drop is not None:
        dx = dx * drop
    de, grads["emb_ln.g"], grads["emb_ln.b"] = _layer_norm_back(dx, ln_c)
    dtok = np.zeros_like(P["tok_emb"])
    np.add.at(dtok, cache["ids"].reshape(-1), de.reshape(-1, H))
    grads["tok_emb"] = grads.get("tok_emb", 0) + dtok
    dpos = np.zeros_like(P["pos_emb"])
    dpos[:T] = de.sum(0)
    grads["pos_emb"] = dpos
    return grads


def _head_forward(params: TransformerParams, x):
    P = params.tensors
    z = x @ P["head.w"] + P["head.b"]
    g, gc = _gelu(z)
    t, lnc = _layer_norm(g, P["head_ln.g"], P["head_ln.b"])
    logits = t @ P["tok_emb"].T + P["out.b"]
    return logits, (x, gc, lnc, t)


def _head_backward(params: TransformerParams, dlogits, cache, grads):
    P = params.tensors
    x, gc, lnc, t = cache
    H = x.shape[-1]
    grads["out.b"] = dlogits.reshape(-1, dlogits.shape[-1]).sum(0)
    grads["tok_emb"] = dlogits.reshape(-1, dlogits.shape[-1]).T @ t.reshape(-1, H)
    dt = dlogits @ P["tok_emb"]
    dg, grads["head_ln.g"], grads["head_ln.b"] = _layer_norm_back(dt, lnc)
    dz = _gelu_back(dg, gc)
    grads["head.w"] = x.reshape(-1, H).T @ dz.reshape(-1, H)
    grads["head.b"] = dz.reshape(-1, H).sum(0)
    return dz @ P["head.w"].T


# ---------------------------------------------------------------------------
# Public model operations

def forward(params: TransformerParams, ids, mask=None) -> np.ndarray:
    """Vocabulary logits of shape (batch, length, vocab).

    ``mask`` is True at real tokens; padded keys receive no attention.
    """
    ids = np.asarray(ids)
    if ids.ndim == 1:
        ids = ids[None, :]
    if mask is None:
        mask = np.ones(ids.shape, dtype=bool)
    x, _ = _encoder_forward(params, ids, np.asarray(mask, dtype=bool))
    logits, _ = _head_forward(params, x)
    return logits


def mlm_loss_and_grads(params: TransformerParams, ids, mask, labels,
                       rng: Optional[np.random.Generator] = None):
    """Mean cross-entropy over positions where ``labels != IGNORE``, with gradients.

    Only the selected positions go through the output head.
    """
    x, cache = _encoder_forward(params, ids, mask, rng)
    sel = labels != IGNORE
    n = int(sel.sum())
    if n == 0:
        raise ValueError("no label positions in batch")
    xs = x[sel]
    logits, hcache = _head_forward(params, xs)
    targets = labels[sel]
    z = logits - logits.max(-1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(-1, keepdims=True))
    loss = -logp[np.arange(n), targets].mean()
    dlogits = np.exp(logp)
    dlogits[np.arange(n), targets] -= 1.0
    dlogits /= n
    grads: Dict[str, np.ndarray] = {}
    dxs = _head_backward(params, dlogits, hcache, grads)
    dx = np.zeros_like(x)
    dx[sel] = dxs
    _encoder_backward(params, dx, cache, grads)
    return float(loss), grads


def mlm_corrupt(ids, special, mask_p: float, rng: np.random.Generator, vocab_size: int,
                mask_id: int = 4):
    """BERT corruption: select each non-special position with ``mask_p``;
    of those 80% become [MASK], 10% a random non-special token, 10% stay.

    Returns ``(corrupted, labels)`` with ``labels == IGNORE`` off the
    selected positions.
    """
    ids = np.asarray(ids)
    special = np.asarray(special, dtype=bool)
    selected = (rng.random(ids.shape) < mask_p) & ~special
    roll = rng.random(ids.shape)
    randoms = rng.integers(len(SPECIALS), vocab_size, size=ids.shape)
    out = ids.copy()
    out[selected & (roll < 0.8)] = mask_id
    swap = selected & (roll >= 0.8) & (roll < 0.9)
    out[swap] = randoms[swap]
    labels = np.where(selected, ids, IGNORE)
    return out, labels


def pad_batch(seqs: Sequence[Sequence[int]], pad_id: int = 0):
    T = max(len(s) for s in seqs)
    ids = np.full((len(seqs), T), pad_id, dtype=np.int64)
    mask = np.zeros((len(seqs), T), dtype=bool)
    for i, s in enumerate(seqs):
        ids[i, :len(s)] = s
        mask[i, :len(s)] = True
    return ids, mask


def _lr_at(step: int, total: int, tc: TrainConfig) -> float:
    warm = int(total * tc.warmup)
    if warm and step < warm:
        return tc.lr * (step + 1) / warm
    return tc.lr * max(0.0, (total - step) / max(1, total - warm))


def train(params: TransformerParams, sequences: Sequence[Sequence[int]], vocab: Vocab,
          tc: TrainConfig, log_every: int = 0) -> Tuple[TransformerParams, List[float]]:
    """Adam on the MLM objective; returns updated params and per-step losses.

    ``sequences`` are token-id lists already wrapped in [CLS] ... [SEP].
    Batches are drawn epoch by epoch from a seeded permutation.
    """
    if not sequences:
        raise ValueError("cannot train on an empty corpus")
    longest = max(len(s) for s in sequences)
    if longest > params.config.max_seq:
        raise ValueError(f"longest sequence ({longest}) exceeds max_seq={params.config.max_seq}")
    rng = np.random.default_rng(tc.seed)
    P = {k: v.copy() for k, v in params.tensors.items()}
    params = TransformerParams(params.config, P)
    m = {k: np.zeros_like(v) for k, v in P.items()}
    s = {k: np.zeros_like(v) for k, v in P.items()}
    b1, b2 = tc.betas
    losses: List[float] = []
    order = rng.permutation(len(sequences))
    cursor = 0
    for step in range(tc.steps):
        if cursor + tc.batch_size > len(order):
            order = rng.permutation(len(sequences))
            cursor = 0
        idx = order[cursor:cursor + tc.batch_size]
        cursor += tc.batch_size
        ids, mask = pad_batch([sequences[i] for i in idx], vocab.pad_id)
        special = ids < len(SPECIALS)
        for _ in range(100):
            corrupted, labels = mlm_corrupt(ids, special, tc.mask_p, rng, len(vocab), vocab.mask_id)
            if (labels != IGNORE).any():
                break
        else:
            losses.append(float("nan"))
            continue
        loss, grads = mlm_loss_and_grads(params, corrupted, mask, labels, rng)
        if not math.isfinite(loss):
            norms = {k: float(np.linalg.norm(g)) for k, g in grads.items()}
            worst = max(norms, key=lambda k: norms[k] if math.isfinite(norms[k]) else math.inf)
            raise TrainingDivergedError(
                f"non-finite loss at step {step} (lr={_lr_at(step, tc.steps, tc):.3g}); "
                f"largest gradient norm in {worst!r}"
            )
        losses.append(loss)
        gnorm = math.sqrt(sum(float((g.astype(np.float64) ** 2).sum()) for g in grads.values()))
        clip = min(1.0, tc.clip_norm / (gnorm + 1e-6)) if tc.clip_norm else 1.0
        lr = _lr_at(step, tc.steps, tc)
        t = step + 1
        corr1 = 1.0 - b1 ** t
        corr2 = 1.0 - b2 ** t
        for k, g in grads.items():
            g = g * clip
            m[k] = b1 * m[k] + (1 - b1) * g
            s[k] = b2 * s[k] + (1 - b2) * g * g
            P[k] -= (lr * (m[k] / corr1) / (np.sqrt(s[k] / corr2) + tc.eps)).astype(P[k].dtype)
        if log_every and step % log_every == 0:
            print(f"step {step:6d}  loss {loss:.4f}  lr {lr:.2e}")
    return params, losses


def evaluate_loss(params: TransformerParams, sequences, vocab: Vocab, mask_p: float = 0.15,
                  seed: int = 0, batch_size: int = 256) -> float:
    """Mean MLM cross-entropy on held-out sequences under a fixed corruption."""
    rng = np.random.default_rng(seed)
    total, count = 0.0, 0
    for lo in range(0, len(sequences), batch_size):
        ids, mask = pad_batch(sequences[lo:lo + batch_size], vocab.pad_id)
        corrupted, labels = mlm_corrupt(ids, ids < len(SPECIALS), mask_p, rng, len(vocab), vocab.mask_id)
        sel = labels != IGNORE
        if not sel.any():
            continue
        logits = forward(params, corrupted, mask)[sel]
        logp = logits - logits.max(-1, keepdims=True)
        logp -= np.log(np.exp(logp).sum(-1, keepdims=True))
        total += -logp[np.arange(sel.sum()), labels[sel]].sum()
        count += int(sel.sum())
    return total / max(count, 1)


def fill_mask(params: TransformerParams, vocab: Vocab, text: str) -> List[Tuple[str, float]]:
    """Rank every vocabulary token by probability at the single [MASK] slot."""
    ids = tokenize(vocab, text)
    where = [i for i, t in enumerate(ids) if t == vocab.mask_id]
    if len(where) != 1:
        raise ValueError(f"expected exactly one {MASK} in the query, found {len(where)}")
    probs = mask_distribution(params, ids, where[0])
    order = np.argsort(-probs, kind="stable")
    return [(vocab.tokens[i], float(probs[i])) for i in order]


def fill_mask_batch(params: TransformerParams, vocab: Vocab, texts: Sequence[str],
                    top: Optional[int] = None) -> List[List[Tuple[str, float]]]:
    """:func:`fill_mask` over many queries with one padded forward pass."""
    seqs = [tokenize(vocab, t) for t in texts]
    where = []
    for t, s in zip(texts, seqs):
        pos = [i for i, x in enumerate(s) if x == vocab.mask_id]
        if len(pos) != 1:
            raise ValueError(f"expected exactly one {MASK} in {t!r}, found {len(pos)}")
        where.append(pos[0])
    if not seqs:
        return []
    ids, mask = pad_batch(seqs, vocab.pad_id)
    x, _ = _encoder_forward(params, ids, mask)
    logits, _ = _head_forward(params, x[np.arange(len(seqs)), where])
    probs = softmax(logits.astype(np.float64))
    out = []
    for row in probs:
        order = np.argsort(-row, kind="stable")[:top]
        out.append([(vocab.tokens[i], float(row[i])) for i in order])
    return out


def mask_distribution(params: TransformerParams, ids: Sequence[int], position: int) -> np.ndarray:
    x, _ = _encoder_forward(params, np.asarray(ids)[None, :], np.ones((1, len(ids)), dtype=bool))
    logits, _ = _head_forward(params, x[0, position])
    return softmax(logits.astype(np.float64))


# ---------------------------------------------------------------------------
# Gradient verification

def numeric_grads(params: TransformerParams, ids, mask, labels, eps: float = 1e-6) -> Dict[str, np.ndarray]:
    """Central finite differences of the MLM loss for every parameter entry."""
    out = {}
    for name, t in params.tensors.items():
        g = np.zeros_like(t)
        flat = t.reshape(-1)
        gflat = g.reshape(-1)
        for j in range(flat.size):
            old = flat[j]
            flat[j] = old + eps
            lp, _ = mlm_loss_and_grads(params, ids, mask, labels)
            flat[j] = old - eps
            lm, _ = mlm_loss_and_grads(params, ids, mask, labels)
            flat[j] = old
            gflat[j] = (lp - lm) / (2 * eps)
        out[name] = g
    return out


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / denom)


def gradient_check_report(config: ModelConfig, rng: np.random.Generator) -> Dict[str, float]:
    """Per-tensor relative error between analytic and finite-difference gradients.

    Runs in float64 on a two-sequence batch with a padded tail, so the
    attention mask is exercised. Dropout is disabled.
    """
    cfg = ModelConfig(**{**asdict(config), "dropout": 0.0})
    params = init_params(cfg, rng, std=0.3, dtype=np.float64)
    T = min(cfg.max_seq, 7)
    ids = rng.integers(len(SPECIALS), cfg.vocab_size, size=(2, T))
    ids[:, 0] = 2
    mask = np.ones((2, T), dtype=bool)
    mask[1, T - 2:] = False
    ids[1, T - 2:] = 0
    labels = np.full((2, T), IGNORE)
    labels[0, 1] = rng.integers(cfg.vocab_size)
    labels[0, T - 1] = rng.integers(cfg.vocab_size)
    labels[1, 2] = rng.integers(cfg.vocab_size)
    _, analytic = mlm_loss_and_grads(params, ids, mask, labels)
    numeric = numeric_grads(params, ids, mask, labels)
    return {k: relative_error(analytic[k], numeric[k]) for k in params.tensors}


def gradient_check(config: ModelConfig, rng: np.random.Generator) -> float:
    return max(gradient_check_report(config, rng).values())


# ---------------------------------------------------------------------------
# Checkpoints: magic, u64 manifest length, JSON manifest, little-endian f32 payload

def save_checkpoint(path, params: TransformerParams, extra: Optional[dict] = None) -> None:
    tensors = []
    offset = 0
    blobs = []
    for name, t in params.tensors.items():
        blob = np.ascontiguousarray(t, dtype="<f4").tobytes()
        tensors.append({"name": name, "shape": list(t.shape), "offset": offset, "nbytes": len(blob)})
        blobs.append(blob)
        offset += len(blob)
    manifest = {"config": asdict(params.config), "dtype": "float32-le", "tensors": tensors}
    if extra:
        manifest["extra"] = extra
    head = json.dumps(manifest).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CKPT_MAGIC)
        fh.write(struct.pack("<Q", len(head)))
        fh.write(head)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path) -> TransformerParams:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != CKPT_MAGIC:
        raise ValueError(f"{path} is not a model checkpoint")
    (n,) = struct.unpack("<Q", data[8:16])
    manifest = json.loads(data[16:16 + n].decode("utf-8"))
    base = 16 + n
    cfg = ModelConfig(**manifest["config"])
    tensors = {}
    for entry in manifest["tensors"]:
        start = base + entry["offset"]
        arr = np.frombuffer(data, dtype="<f4", count=entry["nbytes"] // 4, offset=start)
        tensors[entry["name"]] = arr.reshape(entry["shape"]).astype(np.float32)
    return TransformerParams(cfg, tensors)
