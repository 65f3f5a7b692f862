"""Three-pile Nim: rules, the nim-sum Guru, a random player and a tabular Q-learner.

Normal play is used throughout: the player who takes the last item wins.
Every source of randomness is an explicit :class:`numpy.random.Generator`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Protocol, Sequence, Tuple

import numpy as np

MAX_PILE = 10
PILE_LABELS = "abc"


class IllegalMoveError(ValueError):
    """Raised when a move cannot be applied, or no move exists."""


@dataclass(frozen=True)
class NimState:
    piles: Tuple[int, int, int]
    max_pile: int = MAX_PILE

    def __post_init__(self):
        piles = tuple(int(p) for p in self.piles)
        if len(piles) != 3:
            raise ValueError(f"Nim needs exactly 3 piles, got {len(piles)}")
        for p in piles:
            if p < 0 or p > self.max_pile:
                raise ValueError(f"pile count {p} outside [0, {self.max_pile}]")
        object.__setattr__(self, "piles", piles)

    @property
    def is_terminal(self) -> bool:
        return not any(self.piles)

    def __iter__(self) -> Iterator[int]:
        return iter(self.piles)

    def __getitem__(self, i: int) -> int:
        return self.piles[i]


@dataclass(frozen=True)
class NimMove:
    pile: int
    take: int

    @property
    def label(self) -> str:
        return PILE_LABELS[self.pile]

    def __str__(self) -> str:
        return f"{self.label}{self.take}"


def nim_sum(state: NimState | Sequence[int]) -> int:
    a, b, c = state
    return a ^ b ^ c


def legal_moves(state: NimState) -> List[NimMove]:
    """All legal moves, ordered by pile index then take size."""
    return [NimMove(i, t) for i, p in enumerate(state.piles) for t in range(1, p + 1)]


def apply_nim_move(state: NimState, move: NimMove) -> NimState:
    if move.pile not in (0, 1, 2):
        raise IllegalMoveError(f"bad pile index {move.pile}")
    if move.take < 1 or move.take > state.piles[move.pile]:
        raise IllegalMoveError(
            f"cannot take {move.take} from pile {move.label} holding {state.piles[move.pile]}"
        )
    piles = list(state.piles)
    piles[move.pile] -= move.take
    return NimState(tuple(piles), state.max_pile)


def _require_moves(state: NimState) -> None:
    if state.is_terminal:
        raise IllegalMoveError("terminal state has no legal move")


def guru_move(state: NimState) -> NimMove:
    """Move to a zero nim-sum position when one exists.

    In a losing position (nim-sum already zero) the Guru removes a single
    item from the lowest-index non-empty pile.
    """
    _require_moves(state)
    s = nim_sum(state)
    if s:
        for i, p in enumerate(state.piles):
            target = p ^ s
            if target < p:
                return NimMove(i, p - target)
    for i, p in enumerate(state.piles):
        if p:
            return NimMove(i, 1)
    raise AssertionError("unreachable")


def random_move(state: NimState, rng: np.random.Generator) -> NimMove:
    """Uniform non-empty pile, then a uniform take from that pile."""
    _require_moves(state)
    nonempty = [i for i, p in enumerate(state.piles) if p]
    pile = nonempty[int(rng.integers(len(nonempty)))]
    take = int(rng.integers(1, state.piles[pile] + 1))
    return NimMove(pile, take)


def random_start(rng: np.random.Generator, max_pile: int = MAX_PILE) -> NimState:
    """Each pile independently uniform in [1, max_pile]."""
    piles = rng.integers(1, max_pile + 1, size=3)
    return NimState(tuple(int(p) for p in piles), max_pile)


# ---------------------------------------------------------------------------
# Agents


class NimAgent(Protocol):
    tag: str

    def move(self, state: NimState, rng: np.random.Generator) -> NimMove: ...


class GuruAgent:
    tag = "G"

    def move(self, state: NimState, rng: np.random.Generator) -> NimMove:
        return guru_move(state)


class RandomAgent:
    tag = "R"

    def move(self, state: NimState, rng: np.random.Generator) -> NimMove:
        return random_move(state, rng)


# ---------------------------------------------------------------------------
# Q-learning


@dataclass
class QTable:
    """Action values indexed ``values[a, b, c, pile, take - 1]``.

    Illegal (state, move) cells hold NaN so that only legal pairs carry values.
    """

    max_pile: int = MAX_PILE
    alpha: float = 0.1
    gamma: float = 1.0
    epsilon: float = 0.1
    values: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.values is None:
            self.values = np.where(_legal_mask(self.max_pile), 0.0, np.nan)

    def value(self, state: NimState, move: NimMove) -> float:
        return float(self.values[state.piles + (move.pile, move.take - 1)])


def _legal_mask(max_pile: int) -> np.ndarray:
    n = max_pile + 1
    piles = np.arange(n)
    takes = np.arange(1, max_pile + 1)
    mask = np.zeros((n, n, n, 3, max_pile), dtype=bool)
    mask[..., 0, :] = takes[None, None, None, :] <= piles[:, None, None, None]
    mask[..., 1, :] = takes[None, None, None, :] <= piles[None, :, None, None]
    mask[..., 2, :] = takes[None, None, None, :] <= piles[None, None, :, None]
    return mask


def _greedy_index(row: np.ndarray) -> int:
    # row is the flattened (pile, take) slice; NaN marks illegal cells.
    # np.argmax returns the first maximum, i.e. lowest pile then smallest take.
    return int(np.argmax(np.where(np.isnan(row), -np.inf, row)))


def q_move(qtable: QTable, state: NimState) -> NimMove:
    """Greedy move; ties go to the lowest pile index, then the smallest take."""
    _require_moves(state)
    idx = _greedy_index(qtable.values[state.piles].reshape(-1))
    pile, t = divmod(idx, qtable.max_pile)
    return NimMove(pile, t + 1)


class QAgent:
    tag = "Q"

    def __init__(self, qtable: QTable):
        self.qtable = qtable

    def move(self, state: NimState, rng: np.random.Generator) -> NimMove:
        return q_move(self.qtable, state)


def q_train(
    episodes: int,
    opponent: NimAgent,
    rng: np.random.Generator,
    max_pile: int = MAX_PILE,
    alpha: float = 0.1,
    gamma: float = 1.0,
    epsilon: float = 0.1,
    qtable: Optional[QTable] = None,
) -> QTable:
    """Train a tabular Q-learner against ``opponent`` with epsilon-greedy play.

    Each episode starts from random piles in ``[1, max_pile]``; the learner
    takes the first seat on even episodes and the second on odd ones. Rewards
    are +1 for taking the last item, -1 when the opponent does, 0 otherwise.
    The learner's successor state is the state it next has to move from, so
    the opponent is part of the environment.
    """
    q = qtable if qtable is not None else QTable(max_pile, alpha, gamma, epsilon)
    values = q.values
    flat = values.reshape(values.shape[:3] + (-1,))
    legal = [
        [[np.flatnonzero(~np.isnan(flat[a, b, c])) for c in range(max_pile + 1)]
         for b in range(max_pile + 1)]
        for a in range(max_pile + 1)
    ]
    M = max_pile

    for ep in range(episodes):
        piles = [int(p) for p in rng.integers(1, M + 1, size=3)]
        learner_turn = ep % 2 == 0
        prev: Optional[Tuple[int, int, int, int]] = None
        while True:
            if learner_turn:
                s = (piles[0], piles[1], piles[2])
                row = flat[s]
                if prev is not None:
                    best = np.nanmax(row)
                    flat[prev] += q.alpha * (q.gamma * best - flat[prev])
                choices = legal[s[0]][s[1]][s[2]]
                if rng.random() < q.epsilon:
                    a = int(choices[rng.integers(len(choices))])
                else:
                    a = _greedy_index(row)
                pile, t = divmod(a, M)
                piles[pile] -= t + 1
                prev = s + (a,)
                if not any(piles):
                    flat[prev] += q.alpha * (1.0 - flat[prev])
                    break
            else:
                mv = opponent.move(NimState(tuple(piles), M), rng)
                piles[mv.pile] -= mv.take
                if not any(piles):
                    if prev is not None:
                        flat[prev] += q.alpha * (-1.0 - flat[prev])
                    break
            learner_turn = not learner_turn
    return q


# ---------------------------------------------------------------------------
# Games


@dataclass(frozen=True)
class NimStep:
    state: NimState
    tag: str
    move: NimMove
    noise: bool
    seat: int


@dataclass
class NimGameRecord:
    steps: List[NimStep]
    winner: int  # seat index: 0 = first player, 1 = second

    @property
    def start(self) -> NimState:
        return self.steps[0].state

    def replay(self) -> Tuple[List[NimState], int]:
        """Re-apply the moves from the start state; returns visited states and winner."""
        state = self.start
        states = [state]
        seat = 0
        for step in self.steps:
            state = apply_nim_move(state, step.move)
            states.append(state)
            seat = step.seat
        return states, seat


def play_nim_game(
    first: NimAgent,
    second: NimAgent,
    start: NimState,
    noise_p: float,
    rng: np.random.Generator,
) -> NimGameRecord:
    """Play one game; each scheduled move is swapped for a uniform random
    legal move with probability ``noise_p`` (the record keeps the scheduled
    agent's tag and flags the substitution)."""
    if start.is_terminal:
        raise IllegalMoveError("game cannot start from a terminal state")
    if not 0.0 <= noise_p <= 1.0:
        raise ValueError(f"noise_p must lie in [0, 1], got {noise_p}")
    agents = (first, second)
    state = start
    seat = 0
    steps: List[NimStep] = []
    while True:
        agent = agents[seat]
        noisy = noise_p > 0.0 and rng.random() < noise_p
        move = random_move(state, rng) if noisy else agent.move(state, rng)
        steps.append(NimStep(state, agent.tag, move, noisy, seat))
        state = apply_nim_move(state, move)
        if state.is_terminal:
            return NimGameRecord(steps, seat)
        seat = 1 - seat


def all_states(max_pile: int = MAX_PILE) -> Iterator[NimState]:
    n = max_pile + 1
    for a in range(n):
        for b in range(n):
            for c in range(n):
                yield NimState((a, b, c), max_pile)
