"""Label noise: do the tagged models still beat the random player?

For each noise level, one corpus is tagged by player identity (G/Q/R) and one
by outcome (W/X). A model is trained on each and played against R.
"""
from boardlm.arena import noise_experiment, pairwise_win_rate, report

levels = [0.0, 0.3, 0.9]
reports = noise_experiment(levels, corpus_games=3000, games_eval=1000, seed=0,
                           progress=lambda p, v: print("trained", v, "model at noise", p))
for p in levels:
    base = pairwise_win_rate(reports, "R", "R", p)
    g = pairwise_win_rate(reports, f"MG@{p:g}", "R", p)
    w = pairwise_win_rate(reports, f"MW@{p:g}", "R", p)
    print(f"noise {p:.1f}: R vs R {base:.3f}   G-model vs R {g:.3f}   W-model vs R {w:.3f}")
print(report("noise_out", roster=reports))
