"""How many Guru games does the masked LM need before it plays well?

Each point trains a tokenizer and a fresh model from scratch, so the full
sweep takes a while on one core. Pass smaller sizes to try it quickly.
"""
import sys

from boardlm.arena import match_size_sweep, report

sizes = [int(x) for x in sys.argv[1:]] or [10, 50, 100, 300]
points = match_size_sweep(sizes, games_eval=1000, seed=0,
                          progress=lambda p: print(f"m={p.match_size:4d}  records={p.records:5d}  "
                                                   f"win rate {p.win_rate:.3f}  invalid {p.invalid_rate:.3f}"))
print(report("sweep_out", sweep=points))
