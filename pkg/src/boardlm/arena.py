"""Matches, tournaments and evaluation runs for Nim and chess agents."""
from __future__ import annotations

import csv
import itertools
import logging
import os
import re
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import chess as ch
from . import nim
from .corpus import (MOVESEP, PLAYER_ID, GenConfig, decode_chess_record, generate_nim_games,
                     nim_state_text)
from .mlm import (ModelConfig, TrainConfig, TransformerParams, fill_mask_batch)
from .tokenizer import UNK, Vocab, tokenize
from .uci import EngineError, EngineSession, TerminalPositionError

log = logging.getLogger(__name__)

_NIM_MOVE = re.compile(r"^([abc])(\d{1,2})$")


class ArenaError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Reports

@dataclass
class MatchReport:
    """Outcome of one pairing.

    ``wins[(agent, seat)]`` counts wins by ``agent`` ("a" or "b") from
    ``seat`` (0 = moved first). ``games_by_seat[s]`` counts games in which
    agent A held seat ``s``.
    """
    agent_a: str
    agent_b: str
    noise: float = 0.0
    games: int = 0
    wins: Dict[Tuple[str, int], int] = field(default_factory=dict)
    games_by_seat: List[int] = field(default_factory=lambda: [0, 0])
    invalid_preds: Dict[str, int] = field(default_factory=lambda: {"a": 0, "b": 0})
    fallbacks: Dict[str, int] = field(default_factory=lambda: {"a": 0, "b": 0})
    model_moves: Dict[str, int] = field(default_factory=lambda: {"a": 0, "b": 0})
    # chess only
    validity: Dict[int, List[int]] = field(default_factory=dict)
    game_lengths: List[int] = field(default_factory=list)
    outcomes: List[str] = field(default_factory=list)

    def total_wins(self, who: str) -> int:
        return sum(v for (k, _), v in self.wins.items() if k == who)

    def win_rate(self, who: str = "a") -> float:
        return self.total_wins(who) / self.games if self.games else 0.0

    def invalid_rate(self, who: str = "a") -> float:
        n = self.model_moves[who]
        return self.invalid_preds[who] / n if n else 0.0


# ---------------------------------------------------------------------------
# Model-backed Nim agent

def _token_to_nim_move(token: str) -> Optional[nim.NimMove]:
    m = _NIM_MOVE.match(token)
    if not m:
        return None
    return nim.NimMove(nim.PILE_LABELS.index(m.group(1)), int(m.group(2)))


class ModelNimAgent:
    """Plays the move the MLM fills in for ``<state> <tag> - [MASK]``.

    If the top-ranked token is not a legal move the event is counted as an
    invalid prediction and the highest-ranked legal token is played. When
    no token at all decodes to a legal move, a random legal move is played
    and counted as a fallback.
    """

    def __init__(self, params: TransformerParams, vocab: Vocab, tag: str, label: Optional[str] = None):
        if tag not in vocab:
            raise ArenaError(f"tag {tag!r} is not in the model vocabulary")
        self.params = params
        self.vocab = vocab
        self.tag = label or f"M{tag}"
        self.query_tag = tag
        self.moves = 0
        self.invalid = 0
        self.fallbacks = 0
        self._cache: Dict[Tuple[int, ...], Tuple[Optional[nim.NimMove], bool]] = {}

    def query(self, state: nim.NimState) -> str:
        return f"{nim_state_text(state)} {self.query_tag} - [MASK]"

    def _choose(self, state: nim.NimState, ranked) -> Tuple[Optional[nim.NimMove], bool]:
        legal = set(nim.legal_moves(state))
        top_ok = False
        for k, (tok, _) in enumerate(ranked):
            mv = _token_to_nim_move(tok)
            if mv is not None and mv in legal:
                return mv, k == 0
        return None, top_ok

    def prepare(self, states: Sequence[nim.NimState], batch: int = 512) -> None:
        """Fill the prediction cache for many states with batched forward passes."""
        todo = [s for s in states if s.piles not in self._cache and not s.is_terminal]
        for lo in range(0, len(todo), batch):
            chunk = todo[lo:lo + batch]
            ranked = fill_mask_batch(self.params, self.vocab, [self.query(s) for s in chunk])
            for s, r in zip(chunk, ranked):
                self._cache[s.piles] = self._choose(s, r)

    def move(self, state: nim.NimState, rng: np.random.Generator) -> nim.NimMove:
        if state.piles not in self._cache:
            self.prepare([state])
        mv, top_ok = self._cache[state.piles]
        self.moves += 1
        if not top_ok:
            self.invalid += 1
        if mv is None:
            self.fallbacks += 1
            return nim.random_move(state, rng)
        return mv

    def counters(self) -> Tuple[int, int, int]:
        return self.moves, self.invalid, self.fallbacks


# ---------------------------------------------------------------------------
# Nim matches

def play_nim_match(agent_a, agent_b, games: int, rng: np.random.Generator,
                   noise: float = 0.0, max_pile: int = nim.MAX_PILE) -> MatchReport:
    """Play ``games`` games, each start once with A first and once with B first.

    ``noise`` only labels the report; matches themselves are noiseless.
    """
    if games < 0 or games % 2:
        raise ValueError("games must be a non-negative even number")
    report = MatchReport(getattr(agent_a, "tag", "A"), getattr(agent_b, "tag", "B"), noise, games)
    before = {k: ag.counters() for k, ag in (("a", agent_a), ("b", agent_b)) if hasattr(ag, "counters")}
    seeds = rng.integers(0, 2**63 - 1, size=games // 2)
    for k in range(games // 2):
        g_rng = np.random.default_rng(int(seeds[k]))
        start = nim.random_start(g_rng, max_pile)
        for a_seat in (0, 1):
            first, second = (agent_a, agent_b) if a_seat == 0 else (agent_b, agent_a)
            rec = nim.play_nim_game(first, second, start, 0.0, g_rng)
            winner = "a" if rec.winner == a_seat else "b"
            seat = rec.winner
            report.wins[(winner, seat)] = report.wins.get((winner, seat), 0) + 1
            report.games_by_seat[a_seat] += 1
    for who, ag in (("a", agent_a), ("b", agent_b)):
        if who in before:
            m0, i0, f0 = before[who]
            m1, i1, f1 = ag.counters()
            report.model_moves[who] = m1 - m0
            report.invalid_preds[who] = i1 - i0
            report.fallbacks[who] = f1 - f0
    return report


def _match_job(args) -> MatchReport:
    a, b, games, seed, noise = args
    return play_nim_match(a, b, games, np.random.default_rng(seed), noise)


def roster_tournament(base_agents: Sequence, models: Mapping[float, Sequence],
                      noise_levels: Sequence[float], games_per_pairing: int, seed: int = 0,
                      jobs: int = 1) -> List[MatchReport]:
    """Round-robin at each noise level among the base agents plus that level's models.

    Every unordered pairing, self-pairings included, is played with both
    seatings, so R-vs-R supplies the random baseline.
    """
    jobs_list = []
    for li, p in enumerate(noise_levels):
        if p not in models:
            raise ArenaError(f"no trained model for noise level {p}")
        roster = list(base_agents) + list(models[p])
        for i, j in itertools.combinations_with_replacement(range(len(roster)), 2):
            match_seed = [seed, li, i, j]
            jobs_list.append((roster[i], roster[j], games_per_pairing,
                              np.random.SeedSequence(match_seed).generate_state(1)[0], p))
    if jobs <= 1:
        return [_match_job(j) for j in jobs_list]
    with ProcessPoolExecutor(jobs) as pool:
        return list(pool.map(_match_job, jobs_list))


def find_report(reports: Sequence[MatchReport], a: str, b: str, noise: Optional[float] = None) -> MatchReport:
    for r in reports:
        if noise is not None and r.noise != noise:
            continue
        if (r.agent_a, r.agent_b) == (a, b):
            return r
    raise KeyError((a, b, noise))


def pairwise_win_rate(reports: Sequence[MatchReport], a: str, b: str, noise: Optional[float] = None) -> float:
    """Win rate of agent ``a`` against ``b`` in either report orientation."""
    try:
        return find_report(reports, a, b, noise).win_rate("a")
    except KeyError:
        return find_report(reports, b, a, noise).win_rate("b")


# ---------------------------------------------------------------------------
# Few-shot sweep

@dataclass
class SweepPoint:
    match_size: int
    win_rate: float
    games: int
    seed: int
    records: int
    unique_states: int
    invalid_rate: float
    final_loss: float


def match_size_sweep(match_sizes: Sequence[int], games_eval: int, seed: int = 0,
                     model_config: Optional[dict] = None, train_config: Optional[dict] = None,
                     shuffle_piles: bool = True, progress=None) -> List[SweepPoint]:
    """For each size m, train a fresh tokenizer and model on 2m Guru-vs-random
    games and score the G-tagged model against the random agent."""
    from .pipeline import nim_train_config, train_on_records

    points = []
    for m in match_sizes:
        if m < 1:
            raise ValueError("match sizes must be >= 1")
        cfg = GenConfig(games=2 * m, pairings=(("G", "R"),), variant=PLAYER_ID, noise=0.0,
                        seed=seed * 100_003 + m, shuffle_piles=shuffle_piles)
        records = [line for g in generate_nim_games(cfg) for line in g]
        tc = nim_train_config(len(records), seed=seed, **(train_config or {}))
        trained = train_on_records(records, model_config=model_config, train_config=tc, seed=seed)
        agent = ModelNimAgent(trained.params, trained.vocab, "G")
        agent.prepare(list(nim.all_states()))
        rep = play_nim_match(agent, nim.RandomAgent(), games_eval, np.random.default_rng([seed, m, 1]))
        states = {line.split(" ", 1)[0] for line in records}
        point = SweepPoint(m, rep.win_rate("a"), games_eval, seed, len(records), len(states),
                           rep.invalid_rate("a"), float(np.mean(trained.losses[-50:])))
        points.append(point)
        if progress:
            progress(point)
    return points


def noise_experiment(noise_levels: Sequence[float], corpus_games: int, games_eval: int,
                     seed: int = 0, pairings=None, qtable: Optional[nim.QTable] = None,
                     model_config: Optional[dict] = None, train_config: Optional[dict] = None,
                     progress=None) -> List[MatchReport]:
    """Train one model per (noise level, tag variant) and play each against the random agent.

    The player-id model is queried with tag G, the win-state model with W.
    Each level's roster is {R, MG@p, MW@p}, so R-vs-R gives the baseline.
    """
    from .corpus import DEFAULT_PAIRINGS, WIN_STATE, needs_qtable, train_default_qtable
    from .pipeline import nim_train_config, train_on_records

    pairings = pairings or DEFAULT_PAIRINGS
    models: Dict[float, list] = {}
    for p in noise_levels:
        for variant, tag in ((PLAYER_ID, "G"), (WIN_STATE, "W")):
            cfg = GenConfig(games=corpus_games, pairings=pairings, variant=variant, noise=p,
                            seed=seed * 1009 + int(round(p * 100)))
            if qtable is None and needs_qtable(cfg):
                qtable = train_default_qtable(cfg)
            records = [line for g in generate_nim_games(cfg, qtable) for line in g]
            tc = nim_train_config(len(records), seed=seed, **(train_config or {}))
            trained = train_on_records(records, model_config=model_config, train_config=tc, seed=seed)
            agent = ModelNimAgent(trained.params, trained.vocab, tag, f"M{tag}@{p:g}")
            agent.prepare(list(nim.all_states()))
            models.setdefault(p, []).append(agent)
            if progress:
                progress(p, variant)
    return roster_tournament([nim.RandomAgent()], models, noise_levels, games_eval, seed)


def guru_agreement(agent: ModelNimAgent, states: Optional[Sequence[nim.NimState]] = None) -> float:
    """Fraction of winning states where the agent plays a nim-sum-zeroing move."""
    states = [s for s in (states if states is not None else nim.all_states())
              if nim.nim_sum(s) != 0]
    agent.prepare(states)
    rng = np.random.default_rng(0)
    hits = 0
    for s in states:
        mv = agent.move(s, rng)
        hits += nim.nim_sum(nim.apply_nim_move(s, mv)) == 0
    return hits / len(states) if states else 0.0


# ---------------------------------------------------------------------------
# Chess

def chess_query(position: ch.ChessPosition) -> str:
    return f"{ch.format_fen(position)} {MOVESEP} [MASK]"


def predict_chess_move(params: TransformerParams, vocab: Vocab,
                       position: ch.ChessPosition) -> Tuple[str, Optional[ch.ChessMove]]:
    """Top-1 token for the move slot and the move it denotes, if valid here."""
    token = _top_tokens(params, vocab, [position])[0]
    return token, validate_chess_token(token, position)


def _top_tokens(params: TransformerParams, vocab: Vocab, positions) -> List[str]:
    """Top-1 move-slot token per position; queries longer than the model's
    context come back as [UNK], which never validates."""
    queries = [chess_query(p) for p in positions]
    fits = [len(tokenize(vocab, q)) <= params.config.max_seq for q in queries]
    ranked = fill_mask_batch(params, vocab, [q for q, ok in zip(queries, fits) if ok], top=1)
    it = iter(ranked)
    return [next(it)[0][0] if ok else UNK for ok in fits]


def validate_chess_token(token: str, position: ch.ChessPosition) -> Optional[ch.ChessMove]:
    try:
        mv = ch.parse_move(token)
    except ch.MoveParseError:
        return None
    return mv if mv in ch.legal_moves(position) else None


def ply_index(position: ch.ChessPosition) -> int:
    """1-based ply number implied by the fullmove counter and side to move."""
    return 2 * (position.fullmove - 1) + (1 if position.turn == "w" else 2)


def play_chess_vs_engine(params: TransformerParams, vocab: Vocab, engine: EngineSession,
                         games: int, rng: Optional[np.random.Generator] = None,
                         ply_limit: int = ch.DEFAULT_PLY_LIMIT, model_color: str = "w",
                         engine_factory=None) -> MatchReport:
    """Model against engine from the initial position.

    Each model turn records whether its top-1 token was a legal move at that
    ply; an invalid prediction is replaced by the engine's move for the
    model's side and the game continues.
    """
    if model_color not in ("w", "b"):
        raise ValueError("model_color must be 'w' or 'b'")
    a, b = ("model", "engine") if model_color == "w" else ("engine", "model")
    report = MatchReport(a, b, 0.0, 0)
    for g in range(games):
        try:
            engine.new_game()
            status, plies = _chess_game(params, vocab, engine, report, ply_limit, model_color)
        except EngineError as exc:
            log.warning("game %d aborted by engine failure: %s", g, exc)
            report.outcomes.append("engine-failure")
            if engine_factory is not None:
                try:
                    engine.close()
                except EngineError:
                    pass
                engine = engine_factory()
            continue
        report.games += 1
        report.game_lengths.append(plies)
        report.outcomes.append(status.value)
    return report


def _chess_game(params, vocab, engine, report: MatchReport, ply_limit: int, model_color: str):
    pos = ch.parse_fen(ch.START_FEN)
    plies = 0
    while True:
        status = ch.game_status(pos, plies, ply_limit)
        if status is not ch.GameStatus.ONGOING:
            break
        if pos.turn == model_color:
            _, mv = predict_chess_move(params, vocab, pos)
            slot = report.validity.setdefault(plies + 1, [0, 0])
            slot[1] += 1
            report.model_moves["a" if model_color == "w" else "b"] += 1
            if mv is None:
                report.invalid_preds["a" if model_color == "w" else "b"] += 1
                mv = engine.best_move(pos)
            else:
                slot[0] += 1
        else:
            mv = engine.best_move(pos)
        pos = ch.apply_chess_move(pos, mv)
        plies += 1
    return status, plies


def chess_validity(params: TransformerParams, vocab: Vocab, records: Sequence[str],
                   max_ply: Optional[int] = None, batch: int = 256) -> Dict[int, List[int]]:
    """Per-ply ``[valid, total]`` counts of the top-1 prediction on held-out records."""
    positions = [decode_chess_record(line)[0] for line in records]
    if max_ply is not None:
        positions = [p for p in positions if ply_index(p) <= max_ply]
    hist: Dict[int, List[int]] = {}
    for lo in range(0, len(positions), batch):
        chunk = positions[lo:lo + batch]
        for p, tok in zip(chunk, _top_tokens(params, vocab, chunk)):
            slot = hist.setdefault(ply_index(p), [0, 0])
            slot[1] += 1
            slot[0] += validate_chess_token(tok, p) is not None
    return dict(sorted(hist.items()))


def overall_validity(hist: Mapping[int, Sequence[int]]) -> float:
    valid = sum(v[0] for v in hist.values())
    total = sum(v[1] for v in hist.values())
    return valid / total if total else 0.0


# ---------------------------------------------------------------------------
# Reports on disk

ROSTER_COLUMNS = ("noise", "agent_a", "agent_b", "seat", "wins", "games", "invalid_preds")
SWEEP_COLUMNS = ("match_size", "win_rate", "games", "seed")
VALIDITY_COLUMNS = ("ply", "valid", "total")
LENGTH_COLUMNS = ("game", "plies", "outcome")


def roster_rows(reports: Sequence[MatchReport]) -> List[dict]:
    """Two rows per match, one per seat of agent A; B's wins are games - wins."""
    rows = []
    for r in reports:
        for seat in (0, 1):
            rows.append({
                "noise": r.noise, "agent_a": r.agent_a, "agent_b": r.agent_b, "seat": seat,
                "wins": r.wins.get(("a", seat), 0), "games": r.games_by_seat[seat],
                "invalid_preds": r.invalid_preds["a"],
            })
    return rows


def _write_csv(path, columns, rows) -> str:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: row[k] for k in columns})
    return str(path)


def _figure():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "boardlm"
    plt.rcParams["svg.fonttype"] = "none"
    return plt


def _save_svg(plt, fig, path) -> str:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return str(path)


def report(out_dir, roster: Sequence[MatchReport] = (), sweep: Sequence[SweepPoint] = (),
           chess: Optional[MatchReport] = None,
           heldout_validity: Optional[Mapping[int, Sequence[int]]] = None) -> List[str]:
    """Write CSV tables and SVG charts; returns the written paths."""
    if not roster and not sweep and chess is None and not heldout_validity:
        raise ValueError("nothing to report")
    os.makedirs(out_dir, exist_ok=True)
    plt = _figure()
    out: List[str] = []
    join = lambda name: os.path.join(out_dir, name)  # noqa: E731

    if roster:
        out.append(_write_csv(join("roster.csv"), ROSTER_COLUMNS, roster_rows(roster)))
        out.extend(_plot_roster(plt, roster, join))
    if sweep:
        rows = [{"match_size": p.match_size, "win_rate": p.win_rate, "games": p.games, "seed": p.seed}
                for p in sweep]
        out.append(_write_csv(join("sweep.csv"), SWEEP_COLUMNS, rows))
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot([p.match_size for p in sweep], [p.win_rate for p in sweep], marker="o")
        ax.set_xlabel("match size (games per seat order)")
        ax.set_ylabel("win rate vs random")
        ax.set_ylim(0, 1)
        out.append(_save_svg(plt, fig, join("sweep.svg")))
    if chess is not None:
        out.extend(_write_validity(plt, chess.validity, join, "validity"))
        rows = [{"game": i, "plies": n, "outcome": o}
                for i, (n, o) in enumerate(zip(chess.game_lengths,
                                              [o for o in chess.outcomes if o != "engine-failure"]))]
        out.append(_write_csv(join("game_lengths.csv"), LENGTH_COLUMNS, rows))
        fig, ax = plt.subplots(figsize=(5, 3.5))
        if chess.game_lengths:
            ax.hist(chess.game_lengths, bins=min(20, max(1, len(set(chess.game_lengths)))))
        ax.set_xlabel("game length (plies)")
        ax.set_ylabel("games")
        out.append(_save_svg(plt, fig, join("game_lengths.svg")))
    if heldout_validity:
        out.extend(_write_validity(plt, heldout_validity, join, "heldout_validity"))
    return out


def _write_validity(plt, hist, join, stem) -> List[str]:
    rows = [{"ply": k, "valid": v[0], "total": v[1]} for k, v in sorted(hist.items())]
    paths = [_write_csv(join(f"{stem}.csv"), VALIDITY_COLUMNS, rows)]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    xs = [r["ply"] for r in rows]
    ax.plot(xs, [r["valid"] / r["total"] if r["total"] else 0.0 for r in rows], marker=".")
    ax.set_xlabel("ply")
    ax.set_ylabel("valid top-1 prediction rate")
    ax.set_ylim(0, 1.02)
    paths.append(_save_svg(plt, fig, join(f"{stem}.svg")))
    return paths


def _plot_roster(plt, reports: Sequence[MatchReport], join) -> List[str]:
    paths = []
    for noise in sorted({r.noise for r in reports}):
        sub = [r for r in reports if r.noise == noise and r.agent_a != r.agent_b]
        if not sub:
            continue
        totals: Counter = Counter()
        played: Counter = Counter()
        for r in sub:
            totals[r.agent_a] += r.total_wins("a")
            totals[r.agent_b] += r.total_wins("b")
            played[r.agent_a] += r.games
            played[r.agent_b] += r.games
        names = sorted(totals)
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.bar(names, [totals[n] / played[n] for n in names])
        ax.set_ylim(0, 1)
        ax.set_ylabel("win rate (all pairings)")
        ax.set_title(f"noise {noise:g}")
        paths.append(_save_svg(plt, fig, join(f"roster_noise_{noise:g}.svg")))
    return paths


# ---------------------------------------------------------------------------
# JSON round trip, used by the CLI to hand results to ``report``

def match_to_dict(r: MatchReport) -> dict:
    d = dict(r.__dict__)
    d["wins"] = {f"{k}:{s}": v for (k, s), v in r.wins.items()}
    d["validity"] = {str(k): v for k, v in r.validity.items()}
    return d


def match_from_dict(d: dict) -> MatchReport:
    d = dict(d)
    d["wins"] = {(k.split(":")[0], int(k.split(":")[1])): v for k, v in d["wins"].items()}
    d["validity"] = {int(k): list(v) for k, v in d.get("validity", {}).items()}
    return MatchReport(**d)


def results_to_json(roster=(), sweep=(), chess=None, heldout_validity=None) -> dict:
    return {
        "roster": [match_to_dict(r) for r in roster],
        "sweep": [dict(p.__dict__) for p in sweep],
        "chess": match_to_dict(chess) if chess is not None else None,
        "heldout_validity": {str(k): v for k, v in (heldout_validity or {}).items()},
    }


def results_from_json(d: dict) -> dict:
    return {
        "roster": [match_from_dict(r) for r in d.get("roster", [])],
        "sweep": [SweepPoint(**p) for p in d.get("sweep", [])],
        "chess": match_from_dict(d["chess"]) if d.get("chess") else None,
        "heldout_validity": {int(k): list(v) for k, v in d.get("heldout_validity", {}).items()},
    }
