"""Chess move generation, FEN, and a short engine self-play corpus.

Needs a UCI engine: set BOARDLM_ENGINE or put `stockfish` on PATH.
"""
import time

from boardlm import chess as ch
from boardlm.corpus import GenConfig, gen_chess_corpus, read_games
from boardlm.uci import EngineConfig, engine_connect

pos = ch.initial_position()
for depth in range(1, 4):
    t = time.perf_counter()
    print(f"perft({depth}) = {ch.perft(pos, depth):>6}  {time.perf_counter() - t:.2f} s")

kiwipete = ch.parse_fen("r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1")
print(len(ch.legal_moves(kiwipete)), "moves in kiwipete")

with engine_connect(EngineConfig(target_elo=1500)) as eng:
    print(eng.name, "plays", eng.best_move(pos).uci(), "from the initial position")

stats = gen_chess_corpus(GenConfig(games=20, plies=6, noise=0.3, seed=0),
                         lambda: engine_connect(EngineConfig(depth=1)), "chess20.txt")
print(stats.to_json())
for line in read_games("chess20.txt")[0]:
    print(line)
