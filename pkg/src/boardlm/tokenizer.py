"""Case-sensitive WordPiece tokenizer.

Text is pre-tokenized on whitespace, and each whitespace word is further
cut at the separator characters in ``SPLIT_CHARS`` (the "/" between Nim piles
and FEN ranks), which become words of their own. Detokenization glues those
separators back onto their neighbours, so corpus lines round-trip exactly.
"""
from __future__ import annotations

import heapq
import json
import os
from collections import Counter, defaultdict
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

PAD, UNK, CLS, SEP, MASK = "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"
SPECIALS = (PAD, UNK, CLS, SEP, MASK)
PREFIX = "##"
SPLIT_CHARS = "/"
MAX_WORD_CHARS = 100


class VocabError(ValueError):
    pass


class Vocab:
    def __init__(self, tokens: Sequence[str]):
        if tuple(tokens[: len(SPECIALS)]) != SPECIALS:
            raise VocabError(f"vocab must start with {SPECIALS}")
        if len(set(tokens)) != len(tokens):
            raise VocabError("duplicate tokens in vocab")
        self.tokens: List[str] = list(tokens)
        self.ids: Dict[str, int] = {t: i for i, t in enumerate(self.tokens)}

    pad_id, unk_id, cls_id, sep_id, mask_id = range(5)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.ids

    def id(self, token: str) -> int:
        return self.ids[token]

    def is_special(self, idx: int) -> bool:
        return idx < len(SPECIALS)

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.ids, fh, ensure_ascii=False, indent=1)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "Vocab":
        with open(path, encoding="utf-8") as fh:
            mapping = json.load(fh)
        if sorted(mapping.values()) != list(range(len(mapping))):
            raise VocabError("token ids must be dense and unique")
        tokens = [None] * len(mapping)
        for tok, i in mapping.items():
            tokens[i] = tok
        for i, sp in enumerate(SPECIALS):
            if tokens[i] != sp:
                raise VocabError(f"special token {sp} must have id {i}")
        return cls(tokens)


def pre_tokenize(text: str) -> List[str]:
    words = []
    for chunk in text.split():
        if chunk in SPECIALS:
            words.append(chunk)
            continue
        cur = ""
        for c in chunk:
            if c in SPLIT_CHARS:
                if cur:
                    words.append(cur)
                words.append(c)
                cur = ""
            else:
                cur += c
        if cur:
            words.append(cur)
    return words


# ---------------------------------------------------------------------------
# Training

def _piece_list(word: str) -> List[str]:
    return [word[0]] + [PREFIX + c for c in word[1:]]


def _merge_token(a: str, b: str) -> str:
    return a + b[len(PREFIX):]


def train_wordpiece(lines: Iterable[str], max_vocab: int = 200, min_frequency: int = 2) -> Vocab:
    """Learn a WordPiece vocabulary from raw text lines.

    The alphabet holds every observed character as a word-initial piece plus
    a ``##`` piece for each character seen inside a word. Pairs are merged
    greedily by ``freq(ab) / (freq(a) * freq(b))`` until ``max_vocab`` tokens
    exist or no pair occurs ``min_frequency`` times. Score ties go to the
    lexicographically smallest pair.
    """
    counts: Counter = Counter()
    for line in lines:
        for w in pre_tokenize(line):
            if w not in SPECIALS:
                counts[w] += 1
    if not counts:
        raise VocabError("cannot train a tokenizer on an empty corpus")

    initial = sorted({w[0] for w in counts} | {c for w in counts for c in w[1:]})
    inner = sorted({PREFIX + c for w in counts for c in w[1:]})
    tokens = list(SPECIALS) + initial + inner
    if max_vocab <= len(tokens):
        raise VocabError(f"max_vocab={max_vocab} leaves no room beyond the {len(tokens)}-token alphabet")
    known = set(tokens)

    words = [_piece_list(w) for w in counts]
    freq = [counts[w] for w in counts]
    piece_freq: Counter = Counter()
    pair_freq: Counter = Counter()
    where: Dict[Tuple[str, str], set] = defaultdict(set)
    by_piece: Dict[str, set] = defaultdict(set)

    def account(i: int, sign: int) -> None:
        pieces, f = words[i], freq[i]
        for p in pieces:
            piece_freq[p] += sign * f
        for pair in zip(pieces, pieces[1:]):
            pair_freq[pair] += sign * f
            if sign > 0:
                where[pair].add(i)
                by_piece[pair[0]].add(pair)
                by_piece[pair[1]].add(pair)

    for i in range(len(words)):
        account(i, +1)

    def score(pair) -> float:
        return pair_freq[pair] / (piece_freq[pair[0]] * piece_freq[pair[1]])

    heap = [(-score(p), p) for p, f in pair_freq.items() if f >= min_frequency]
    heapq.heapify(heap)

    while len(tokens) < max_vocab and heap:
        neg, pair = heapq.heappop(heap)
        if pair_freq[pair] < min_frequency or -neg != score(pair):
            continue  # stale entry; a fresh one was pushed when it changed
        a, b = pair
        new = _merge_token(a, b)
        affected = list(where.pop(pair, ()))
        for i in affected:
            account(i, -1)
            pieces = words[i]
            out = []
            j = 0
            while j < len(pieces):
                if j + 1 < len(pieces) and pieces[j] == a and pieces[j + 1] == b:
                    out.append(new)
                    j += 2
                else:
                    out.append(pieces[j])
                    j += 1
            words[i] = out
            account(i, +1)
        if new not in known:
            tokens.append(new)
            known.add(new)
        touched = set()
        for p in (a, b, new):
            touched |= by_piece[p]
        for i in affected:
            touched.update(zip(words[i], words[i][1:]))
        for p in touched:
            if pair_freq[p] >= min_frequency:
                heapq.heappush(heap, (-score(p), p))
    return Vocab(tokens)


# ---------------------------------------------------------------------------
# Encoding

def _segment(vocab: Vocab, word: str) -> Optional[List[int]]:
    if len(word) > MAX_WORD_CHARS:
        return None
    out = []
    start = 0
    while start < len(word):
        end = len(word)
        found = None
        while end > start:
            piece = word[start:end] if start == 0 else PREFIX + word[start:end]
            idx = vocab.ids.get(piece)
            if idx is not None:
                found = idx
                break
            end -= 1
        if found is None:
            return None
        out.append(found)
        start = end
    return out


def tokenize(vocab: Vocab, text: str, wrap: bool = True) -> List[int]:
    """Greedy longest-match-first WordPiece ids, wrapped in [CLS] ... [SEP]."""
    ids = [vocab.cls_id] if wrap else []
    for word in pre_tokenize(text):
        if word in SPECIALS:
            ids.append(vocab.ids[word])
            continue
        pieces = _segment(vocab, word)
        ids.extend(pieces if pieces is not None else [vocab.unk_id])
    if wrap:
        ids.append(vocab.sep_id)
    return ids


def detokenize(vocab: Vocab, ids: Sequence[int]) -> str:
    """Inverse of :func:`tokenize` for fully segmentable text.

    [PAD], [CLS] and [SEP] are dropped; [UNK] and [MASK] stay as literal
    words, which marks a lossy round trip.
    """
    words: List[str] = []
    for i in ids:
        i = int(i)
        if not 0 <= i < len(vocab):
            raise VocabError(f"unknown token id {i}")
        tok = vocab.tokens[i]
        if tok in (PAD, CLS, SEP):
            continue
        if tok.startswith(PREFIX) and words:
            words[-1] += tok[len(PREFIX):]
        else:
            words.append(tok)
    text = ""
    for k, w in enumerate(words):
        if k and w not in SPLIT_CHARS and words[k - 1] not in SPLIT_CHARS:
            text += " "
        text += w
    return text
