import re
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boardlm import chess as ch
from boardlm import nim
from boardlm.corpus import (WIN_STATE, CorpusFormatError, GenConfig, dataset_stats,
                            decode_chess_record, decode_nim_record, encode_chess_record,
                            encode_nim_record, gen_chess_corpus, gen_nim_corpus, read_games,
                            split_corpus)
from boardlm.uci import EngineConfig, engine_connect

from test_uci import FAKE

NIM_LINE = re.compile(r"^[abc]\d{1,2}/[abc]\d{1,2}/[abc]\d{1,2} [GQRWX] - [abc]\d{1,2}$")


def test_nim_record_examples():
    s = nim.NimState((10, 10, 10))
    assert encode_nim_record(s, "G", nim.NimMove(0, 10)) == "a10/b10/c10 G - a10"
    assert encode_nim_record(nim.NimState((10, 0, 0)), "W", nim.NimMove(0, 10)) == "a10/b0/c0 W - a10"
    for bad in ("a10/b10", "a10/b10/c10 G - a11", "a10/b10/c10 G – a1", "a10/b10/c10  G - a1",
                "a05/b1/c1 G - a1", "a1/a1/c1 G - a1", "a1/b0/c0 G - b1"):
        with pytest.raises(CorpusFormatError):
            decode_nim_record(bad)


@given(st.tuples(*[st.integers(0, 10)] * 3), st.sampled_from("GQRWX"), st.permutations([0, 1, 2]))
def test_nim_record_roundtrip(p, tag, order):
    s = nim.NimState(p)
    if s.is_terminal:
        return
    mv = nim.legal_moves(s)[0]
    line = encode_nim_record(s, tag, mv, tuple(order))
    rec = decode_nim_record(line)
    assert (rec.state, rec.tag, rec.move, rec.order) == (s, tag, mv, tuple(order))


def test_shuffled_order_names_same_pile():
    line = encode_nim_record(nim.NimState((3, 0, 7)), "G", nim.NimMove(2, 7), (2, 0, 1))
    assert line == "c7/a3/b0 G - c7"


def test_chess_record_example():
    line = encode_chess_record(ch.initial_position(), ch.parse_move("f2f4"))
    assert line == "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1 [MOVESEP] f2f4"
    assert decode_chess_record(line) == (ch.initial_position(), ch.parse_move("f2f4"))
    with pytest.raises(CorpusFormatError):
        decode_chess_record(ch.START_FEN + " f2f4")
    with pytest.raises(CorpusFormatError):
        decode_chess_record(ch.START_FEN + " [MOVESEP] f2f9")


def test_two_game_nim_corpus_format(tmp_path):
    out = tmp_path / "nim.txt"
    gen_nim_corpus(GenConfig(games=2, pairings=(("G", "R"),), seed=1), out)
    text = out.read_text()
    blocks = text.strip("\n").split("\n\n")
    assert len(blocks) == 2
    for block in blocks:
        for line in block.split("\n"):
            assert NIM_LINE.match(line)
            decode_nim_record(line)


def test_nim_generation_is_deterministic(tmp_path):
    cfg = GenConfig(games=40, pairings=(("G", "R"),), seed=9, noise=0.2)
    gen_nim_corpus(cfg, tmp_path / "a.txt")
    gen_nim_corpus(cfg, tmp_path / "b.txt")
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()


def test_parallel_generation_matches_serial(tmp_path):
    base = dict(games=20, pairings=(("G", "R"),), seed=3)
    gen_nim_corpus(GenConfig(**base), tmp_path / "a.txt")
    gen_nim_corpus(GenConfig(**base, jobs=2), tmp_path / "b.txt")
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()


def test_seats_alternate_and_starts_are_random(tmp_path):
    out = tmp_path / "nim.txt"
    gen_nim_corpus(GenConfig(games=200, pairings=(("G", "R"),), seed=2, shuffle_piles=False), out)
    games = read_games(out)
    firsts = [decode_nim_record(g[0]).tag for g in games]
    assert firsts.count("G") == firsts.count("R") == 100
    starts = {decode_nim_record(g[0]).state.piles for g in games}
    assert len(starts) > 150


def test_win_state_tags(tmp_path):
    out = tmp_path / "ws.txt"
    gen_nim_corpus(GenConfig(games=50, pairings=(("G", "R"),), variant=WIN_STATE, noise=0.5, seed=4), out)
    for game in read_games(out):
        tags = [decode_nim_record(line).tag for line in game]
        assert set(tags) <= {"W", "X"}
        # the winner makes the last move; seats alternate
        assert tags[-1] == "W"
        assert tags == [("W" if (len(tags) - 1 - i) % 2 == 0 else "X") for i in range(len(tags))]


def test_dataset_stats(tmp_path):
    one = tmp_path / "one.txt"
    one.write_text("a1/b0/c0 G - a1\n")
    s = dataset_stats(one)
    assert (s.number_of_games, s.total_unique_game_states, s.total_unique_moves, s.dataset_length) == (1, 1, 1, 1)
    assert s.average_sequence_length == len("a1/b0/c0 G - a1")
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    s = dataset_stats(empty)
    assert (s.number_of_games, s.dataset_length, s.average_sequence_length) == (0, 0, 0.0)
    bad = tmp_path / "bad.txt"
    bad.write_text("a1/b0/c0 G - a1\nnot a record\n")
    assert dataset_stats(bad).malformed_lines == 1


def test_split_corpus():
    recs = [f"r{i}" for i in range(100)]
    tr, te = split_corpus(recs, 0.2, np.random.default_rng(0))
    assert (len(tr), len(te)) == (80, 20)
    assert sorted(tr + te) == sorted(recs)
    assert split_corpus(recs, 0.2, np.random.default_rng(0)) == (tr, te)
    with pytest.raises(ValueError):
        split_corpus(recs, 1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        GenConfig(noise=1.5)
    with pytest.raises(ValueError):
        GenConfig(plies=0)
    with pytest.raises(ValueError):
        GenConfig(variant="colour")


def _fake_factory():
    return engine_connect(EngineConfig(path=[sys.executable, FAKE]))


def test_chess_corpus_with_fake_engine(tmp_path):
    out = tmp_path / "chess.txt"
    stats = gen_chess_corpus(GenConfig(games=3, plies=6, noise=0.5, seed=1), _fake_factory, out)
    games = read_games(out)
    assert stats.number_of_games == 3 and len(games) == 3
    for game in games:
        assert len(game) == 6
        assert game[0].startswith(ch.START_FEN + " [MOVESEP] ")
        pos = ch.initial_position()
        for line in game:
            p, mv = decode_chess_record(line)
            assert p == pos
            assert mv in ch.legal_moves(p)
            pos = ch.apply_chess_move(p, mv)


def test_zero_chess_games(tmp_path):
    out = tmp_path / "chess.txt"
    stats = gen_chess_corpus(GenConfig(games=0), _fake_factory, out)
    assert out.read_text() == ""
    assert stats.number_of_games == 0 and stats.dataset_length == 0


def test_chess_engine_failure_skips_game(tmp_path):
    calls = {"n": 0}

    def flaky():
        calls["n"] += 1
        mode = "crash-on-go" if calls["n"] == 1 else "normal"
        return engine_connect(EngineConfig(path=[sys.executable, FAKE, mode]))

    out = tmp_path / "chess.txt"
    gen_chess_corpus(GenConfig(games=3, plies=4), flaky, out)
    assert len(read_games(out)) == 2
