"""Nim agents head to head: the nim-sum player, a random player and a Q-learner."""
import numpy as np

from boardlm import nim
from boardlm.arena import play_nim_match

rng = np.random.default_rng(0)

# Positions with a nonzero nim-sum are first-player wins.
starts = [(a, b, c) for a in range(1, 11) for b in range(1, 11) for c in range(1, 11)]
winning = np.mean([nim.nim_sum(s) != 0 for s in starts])
print(f"random starts that favour the first player: {winning:.2%}")

s = nim.NimState((3, 4, 5))
mv = nim.guru_move(s)
print(s.piles, "->", mv, "->", nim.apply_nim_move(s, mv).piles)

guru, rand = nim.GuruAgent(), nim.RandomAgent()
print("guru vs random  ", play_nim_match(guru, rand, 1000, rng).win_rate())
print("random vs random", play_nim_match(rand, rand, 1000, rng).win_rate())

# The Q-learner sees only win/loss at the end of each episode.
for episodes in (10_000, 100_000):
    q = nim.q_train(episodes, rand, np.random.default_rng(1))
    rate = play_nim_match(nim.QAgent(q), rand, 1000, np.random.default_rng(2)).win_rate()
    print(f"Q after {episodes:>7} episodes vs random: {rate:.3f}")
