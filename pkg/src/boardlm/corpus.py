"""Text corpora of game records.

Nim lines look like ``a10/b3/c7 G - a4`` (state, tag, hyphen, move) and
chess lines like ``<FEN> [MOVESEP] e2e4``. Games are separated by a blank
line. Every generator derives one random stream per game from the master
seed, so output files are byte-identical for a given configuration.
"""
from __future__ import annotations

import json
import logging
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import chess as ch
from . import nim
from .uci import EngineError, EngineSession

log = logging.getLogger(__name__)

MOVESEP = "[MOVESEP]"
PLAYER_ID = "player-id"
WIN_STATE = "win-state"
PLAYER_TAGS = "GQR"
WIN_TAGS = "WX"
DEFAULT_PAIRINGS = (("G", "R"), ("G", "Q"), ("Q", "R"))

PathLike = Union[str, os.PathLike]


class CorpusFormatError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Nim records

@dataclass(frozen=True)
class NimRecord:
    state: nim.NimState
    tag: str
    move: nim.NimMove
    order: Tuple[int, int, int] = (0, 1, 2)


def nim_state_text(state: nim.NimState, order: Sequence[int] = (0, 1, 2)) -> str:
    return "/".join(f"{nim.PILE_LABELS[i]}{state.piles[i]}" for i in order)


def encode_nim_record(state: nim.NimState, tag: str, move: nim.NimMove,
                      order: Sequence[int] = (0, 1, 2)) -> str:
    """``order`` lists pile indices in the order they are written."""
    if sorted(order) != [0, 1, 2]:
        raise ValueError(f"order must be a permutation of (0, 1, 2), got {order}")
    if len(tag) != 1 or not tag.isalpha():
        raise ValueError(f"tag must be a single letter, got {tag!r}")
    return f"{nim_state_text(state, order)} {tag} - {move}"


_NIM_LINE = re.compile(
    r"^([abc])(\d{1,2})/([abc])(\d{1,2})/([abc])(\d{1,2}) ([A-Za-z]) - ([abc])(\d{1,2})$"
)


def decode_nim_record(line: str, max_pile: int = nim.MAX_PILE,
                      tags: Optional[str] = None) -> NimRecord:
    m = _NIM_LINE.match(line)
    if not m:
        raise CorpusFormatError(f"not a Nim record: {line!r}")
    labels = m.group(1, 3, 5)
    if sorted(labels) != ["a", "b", "c"]:
        raise CorpusFormatError(f"pile labels must be a, b, c once each: {line!r}")
    counts = [0, 0, 0]
    for lab, n in zip(labels, m.group(2, 4, 6)):
        counts[nim.PILE_LABELS.index(lab)] = int(n)
    tag = m.group(7)
    if tags is not None and tag not in tags:
        raise CorpusFormatError(f"tag {tag!r} not in {tags!r}")
    try:
        state = nim.NimState(tuple(counts), max_pile)
        move = nim.NimMove(nim.PILE_LABELS.index(m.group(8)), int(m.group(9)))
        nim.apply_nim_move(state, move)
    except ValueError as exc:
        raise CorpusFormatError(f"{exc}: {line!r}") from None
    # str(int) rejects zero-padded counts such as "a05"
    if encode_nim_record(state, tag, move, tuple(nim.PILE_LABELS.index(x) for x in labels)) != line:
        raise CorpusFormatError(f"non-canonical Nim record: {line!r}")
    order = tuple(nim.PILE_LABELS.index(x) for x in labels)
    return NimRecord(state, tag, move, order)


# ---------------------------------------------------------------------------
# Chess records

def encode_chess_record(position: ch.ChessPosition, move: ch.ChessMove) -> str:
    return f"{ch.format_fen(position)} {MOVESEP} {ch.format_move(move)}"


def decode_chess_record(line: str) -> Tuple[ch.ChessPosition, ch.ChessMove]:
    sep = f" {MOVESEP} "
    if line.count(sep) != 1:
        raise CorpusFormatError(f"chess record needs exactly one {sep.strip()}: {line!r}")
    fen, move = line.split(sep)
    try:
        return ch.parse_fen(fen), ch.parse_move(move)
    except ValueError as exc:
        raise CorpusFormatError(f"{exc}: {line!r}") from None


# ---------------------------------------------------------------------------
# Configuration and stats

@dataclass
class GenConfig:
    games: int = 30_000
    pairings: Sequence[Tuple[str, str]] = DEFAULT_PAIRINGS
    variant: str = PLAYER_ID
    noise: float = 0.0
    plies: int = 6
    seed: int = 0
    random_start: bool = True
    shuffle_piles: bool = True
    max_pile: int = nim.MAX_PILE
    q_episodes: int = 300_000
    depth: int = 1
    jobs: int = 1

    def __post_init__(self):
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError("noise level must lie in [0, 1]")
        if self.plies < 1:
            raise ValueError("plies cap must be >= 1")
        if self.variant not in (PLAYER_ID, WIN_STATE):
            raise ValueError(f"unknown Nim tag variant {self.variant!r}")
        if self.games < 0:
            raise ValueError("game count must be >= 0")
        self.pairings = tuple(tuple(p) for p in self.pairings)


@dataclass
class CorpusStats:
    number_of_games: int = 0
    total_unique_game_states: int = 0
    total_unique_moves: int = 0
    dataset_length: int = 0
    average_sequence_length: float = 0.0
    dataset_size: int = 0
    malformed_lines: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def game_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def read_games(path: PathLike) -> List[List[str]]:
    """Split a corpus file into games (lists of record lines)."""
    games: List[List[str]] = []
    current: List[str] = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if line.strip():
                current.append(line)
            elif current:
                games.append(current)
                current = []
    if current:
        games.append(current)
    return games


def read_records(path: PathLike) -> List[str]:
    return [line for game in read_games(path) for line in game]


def write_games(path: PathLike, games: Iterable[Sequence[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        first = True
        for lines in games:
            if not lines:
                continue
            if not first:
                fh.write("\n")
            fh.write("\n".join(lines) + "\n")
            first = False


def write_records(path: PathLike, lines: Iterable[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def _split_record(line: str) -> Tuple[str, str]:
    """(state text, move text) for either grammar; raises on malformed lines."""
    if MOVESEP in line:
        decode_chess_record(line)
        fen, move = line.split(f" {MOVESEP} ")
        return fen, move
    decode_nim_record(line)
    state, rest = line.split(" ", 1)
    return state, rest.rsplit(" ", 1)[1]


def dataset_stats(path: PathLike) -> CorpusStats:
    games = read_games(path)
    states, moves = set(), set()
    lengths = []
    bad = 0
    for game in games:
        for line in game:
            try:
                s, m = _split_record(line)
            except CorpusFormatError:
                bad += 1
                continue
            states.add(s)
            moves.add(m)
            lengths.append(len(line))
    return CorpusStats(
        number_of_games=len(games),
        total_unique_game_states=len(states),
        total_unique_moves=len(moves),
        dataset_length=len(lengths),
        average_sequence_length=float(np.mean(lengths)) if lengths else 0.0,
        dataset_size=os.path.getsize(path),
        malformed_lines=bad,
    )


def split_corpus(records: Sequence[str], test_fraction: float = 0.2,
                 rng: Optional[np.random.Generator] = None) -> Tuple[List[str], List[str]]:
    """Shuffle records and cut off ``round(n * test_fraction)`` as the test set."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie strictly between 0 and 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    idx = rng.permutation(len(records))
    n_test = int(round(len(records) * test_fraction))
    test = [records[i] for i in idx[:n_test]]
    train = [records[i] for i in idx[n_test:]]
    return train, test


# ---------------------------------------------------------------------------
# Nim generation

def make_nim_agent(tag: str, qtable: Optional[nim.QTable] = None) -> nim.NimAgent:
    if tag == "G":
        return nim.GuruAgent()
    if tag == "R":
        return nim.RandomAgent()
    if tag == "Q":
        if qtable is None:
            raise ValueError("a trained QTable is required for the Q agent")
        return nim.QAgent(qtable)
    raise ValueError(f"unknown agent tag {tag!r}")


def nim_game_lines(record: nim.NimGameRecord, variant: str,
                   rng: Optional[np.random.Generator] = None) -> List[str]:
    """Encode a played game. ``rng`` enables per-record shuffling of the pile order."""
    lines = []
    for step in record.steps:
        if variant == WIN_STATE:
            tag = "W" if step.seat == record.winner else "X"
        else:
            tag = step.tag
        order = tuple(int(i) for i in rng.permutation(3)) if rng is not None else (0, 1, 2)
        lines.append(encode_nim_record(step.state, tag, step.move, order))
    return lines


def _nim_game(config: GenConfig, qtable: Optional[nim.QTable], index: int) -> List[str]:
    rng = game_rng(config.seed, index)
    pair = config.pairings[(index // 2) % len(config.pairings)]
    first, second = pair if index % 2 == 0 else pair[::-1]
    a = make_nim_agent(first, qtable)
    b = make_nim_agent(second, qtable)
    if config.random_start:
        start = nim.random_start(rng, config.max_pile)
    else:
        start = nim.NimState((config.max_pile,) * 3, config.max_pile)
    record = nim.play_nim_game(a, b, start, config.noise, rng)
    return nim_game_lines(record, config.variant, rng if config.shuffle_piles else None)


def _nim_chunk(args) -> List[List[str]]:
    config, qtable, lo, hi = args
    return [_nim_game(config, qtable, i) for i in range(lo, hi)]


def needs_qtable(config: GenConfig) -> bool:
    return any("Q" in p for p in config.pairings)


def train_default_qtable(config: GenConfig) -> nim.QTable:
    return nim.q_train(config.q_episodes, nim.RandomAgent(),
                       np.random.default_rng([config.seed, 2**31]), max_pile=config.max_pile)


def generate_nim_games(config: GenConfig, qtable: Optional[nim.QTable] = None) -> List[List[str]]:
    """Play ``config.games`` games; pairings rotate every two games with swapped seats."""
    if needs_qtable(config) and qtable is None:
        qtable = train_default_qtable(config)
    if config.jobs <= 1 or config.games < 2 * config.jobs:
        return _nim_chunk((config, qtable, 0, config.games))
    bounds = np.linspace(0, config.games, config.jobs + 1).astype(int)
    chunks = [(config, qtable, int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:])]
    with ProcessPoolExecutor(config.jobs) as pool:
        return [g for part in pool.map(_nim_chunk, chunks) for g in part]


def gen_nim_corpus(config: GenConfig, out_path: PathLike,
                   qtable: Optional[nim.QTable] = None) -> CorpusStats:
    write_games(out_path, generate_nim_games(config, qtable))
    return dataset_stats(out_path)


# ---------------------------------------------------------------------------
# Chess generation

def chess_game_lines(session: EngineSession, config: GenConfig,
                     rng: np.random.Generator, ply_limit: int = ch.DEFAULT_PLY_LIMIT) -> List[str]:
    """Engine self-play from the initial position, one record per ply.

    With probability ``config.noise`` a ply is played by a uniformly random
    legal move instead of the engine's choice.
    """
    session.new_game()
    position = ch.initial_position()
    lines = []
    for ply in range(min(config.plies, ply_limit)):
        if ch.game_status(position, ply, ply_limit) is not ch.GameStatus.ONGOING:
            break
        if config.noise > 0.0 and rng.random() < config.noise:
            moves = ch.legal_moves(position)
            move = moves[int(rng.integers(len(moves)))]
        else:
            move = session.best_move(position, config.depth)
        lines.append(encode_chess_record(position, move))
        position = ch.apply_chess_move(position, move, check=False)
    return lines


def generate_chess_games(config: GenConfig,
                         engine_factory: Callable[[], EngineSession]) -> List[List[str]]:
    games: List[List[str]] = []
    if config.games == 0:
        return games
    session = engine_factory()
    try:
        for i in range(config.games):
            try:
                games.append(chess_game_lines(session, config, game_rng(config.seed, i)))
            except EngineError as exc:
                log.error("game %d aborted: %s", i, exc)
                session.close()
                session = engine_factory()
    finally:
        session.close()
    return games


def gen_chess_corpus(config: GenConfig, engine_factory: Callable[[], EngineSession],
                     out_path: PathLike) -> CorpusStats:
    write_games(out_path, generate_chess_games(config, engine_factory))
    return dataset_stats(out_path)
