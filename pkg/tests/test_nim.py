from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boardlm import nim
from boardlm.nim import NimMove, NimState

piles = st.tuples(*[st.integers(0, 10)] * 3)


@lru_cache(maxsize=None)
def mover_wins(p):
    # brute-force minimax, independent of the nim-sum rule
    for i in range(3):
        for k in range(1, p[i] + 1):
            q = list(p)
            q[i] -= k
            if not mover_wins(tuple(q)):
                return True
    return False


def test_state_validation():
    with pytest.raises(ValueError):
        NimState((11, 0, 0))
    with pytest.raises(ValueError):
        NimState((-1, 0, 0))
    with pytest.raises(ValueError):
        NimState((1, 2))


def test_move_label():
    assert str(NimMove(0, 10)) == "a10"
    assert str(NimMove(2, 1)) == "c1"


def test_nim_sum_examples():
    assert nim.nim_sum(NimState((1, 2, 3))) == 0
    assert nim.nim_sum(NimState((10, 10, 10))) == 10


def test_apply_rejects_illegal():
    s = NimState((1, 0, 3))
    with pytest.raises(nim.IllegalMoveError):
        nim.apply_nim_move(s, NimMove(1, 1))
    with pytest.raises(nim.IllegalMoveError):
        nim.apply_nim_move(s, NimMove(0, 2))
    assert nim.apply_nim_move(s, NimMove(2, 3)).piles == (1, 0, 0)


def test_terminal_has_no_moves():
    s = NimState((0, 0, 0))
    assert s.is_terminal
    assert nim.legal_moves(s) == []
    with pytest.raises(nim.IllegalMoveError):
        nim.guru_move(s)


def test_guru_examples():
    assert nim.guru_move(NimState((10, 10, 10))) == NimMove(0, 10)
    assert nim.guru_move(NimState((3, 4, 5))) == NimMove(0, 2)
    # losing position: take one from the first non-empty pile
    assert nim.guru_move(NimState((0, 2, 2))) == NimMove(1, 1)


def test_legal_move_count():
    assert len(nim.legal_moves(NimState((10, 10, 10)))) == 30
    assert len(nim.legal_moves(NimState((1, 0, 2)))) == 3


@given(piles)
def test_guru_zeroes_nim_sum_when_possible(p):
    s = NimState(p)
    if s.is_terminal:
        return
    after = nim.apply_nim_move(s, nim.guru_move(s))
    if nim.nim_sum(s):
        assert nim.nim_sum(after) == 0


@given(piles)
@settings(max_examples=200)
def test_winning_iff_nonzero_nim_sum(p):
    assert mover_wins(p) == (nim.nim_sum(p) != 0)


@given(piles, st.integers(0, 2**32 - 1))
def test_random_move_is_legal(p, seed):
    s = NimState(p)
    if s.is_terminal:
        return
    mv = nim.random_move(s, np.random.default_rng(seed))
    assert mv in nim.legal_moves(s)


@given(st.integers(0, 2**32 - 1), st.floats(0, 1))
@settings(max_examples=50)
def test_games_terminate_and_alternate(seed, noise):
    rng = np.random.default_rng(seed)
    start = nim.random_start(rng)
    rec = nim.play_nim_game(nim.GuruAgent(), nim.RandomAgent(), start, noise, rng)
    total = sum(start.piles)
    assert 1 <= len(rec.steps) <= total
    assert [s.seat for s in rec.steps] == [i % 2 for i in range(len(rec.steps))]
    assert rec.winner == rec.steps[-1].seat
    states, winner = rec.replay()
    assert states[-1].is_terminal and winner == rec.winner


def test_random_start_is_uniform_on_one_to_ten():
    rng = np.random.default_rng(0)
    draws = np.array([nim.random_start(rng).piles for _ in range(3000)])
    assert draws.min() == 1 and draws.max() == 10
    assert abs(draws.mean() - 5.5) < 0.15


def test_noise_flag_rate():
    rng = np.random.default_rng(1)
    flags = []
    while len(flags) < 10_000:
        rec = nim.play_nim_game(nim.GuruAgent(), nim.RandomAgent(), nim.random_start(rng), 0.3, rng)
        flags += [s.noise for s in rec.steps]
    assert abs(np.mean(flags) - 0.3) < 0.02


def test_noise_keeps_scheduled_tag():
    rng = np.random.default_rng(2)
    rec = nim.play_nim_game(nim.GuruAgent(), nim.RandomAgent(), NimState((10, 10, 10)), 1.0, rng)
    assert [s.tag for s in rec.steps] == ["GR"[i % 2] for i in range(len(rec.steps))]
    assert all(s.noise for s in rec.steps)


def test_qtable_masks_illegal_cells():
    q = nim.QTable(max_pile=3)
    assert q.values.shape == (4, 4, 4, 3, 3)
    assert np.isnan(q.values[0, 0, 0]).all()
    assert np.isnan(q.values[1, 0, 0, 0, 1])
    assert q.values[1, 0, 0, 0, 0] == 0.0


def test_q_train_is_seeded():
    a = nim.q_train(2000, nim.RandomAgent(), np.random.default_rng(5), max_pile=3)
    b = nim.q_train(2000, nim.RandomAgent(), np.random.default_rng(5), max_pile=3)
    np.testing.assert_array_equal(a.values, b.values)


def test_q_learner_finds_forced_win():
    q = nim.q_train(20_000, nim.RandomAgent(), np.random.default_rng(0), max_pile=3, epsilon=0.3)
    assert nim.q_move(q, NimState((0, 0, 3), 3)) == NimMove(2, 3)
    assert nim.q_move(q, NimState((1, 1, 1), 3)) in nim.legal_moves(NimState((1, 1, 1), 3))


def test_all_states_count():
    assert sum(1 for _ in nim.all_states()) == 1331
