import chess as pychess
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boardlm import chess as ch

KIWIPETE = "r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1"
POS3 = "8/2p5/3p4/KP5r/1R3p1k/8/4P1P1/8 w - - 0 1"
POS4 = "r3k2r/Pppp1ppp/1b3nbN/nP6/BBP1P3/q4N2/Pp1P2PP/R2Q1RK1 w kq - 0 1"
POS5 = "rnbq1k1r/pp1Pbppp/2p5/8/2B5/8/PPP1NnPP/RNBQK2R w KQ - 1 8"


@pytest.mark.parametrize("fen,counts", [
    (ch.START_FEN, [20, 400, 8902]),
    (KIWIPETE, [48, 2039]),
    (POS3, [14, 191, 2812]),
    (POS4, [6, 264]),
    (POS5, [44, 1486]),
])
def test_perft_published(fen, counts):
    pos = ch.parse_fen(fen)
    for depth, n in enumerate(counts, 1):
        assert ch.perft(pos, depth) == n


def test_initial_fen_roundtrip():
    assert ch.format_fen(ch.parse_fen(ch.START_FEN)) == ch.START_FEN
    assert ch.format_fen(ch.initial_position()) == ch.START_FEN


@pytest.mark.parametrize("bad,why", [
    ("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP w KQkq - 0 1", "ranks"),
    ("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq -", "fields"),
    ("rnbqkbnr/pppppppp/9/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1", "rank width"),
    ("rnbqkbnr/pppppppp/44/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1", "adjacent digits"),
    ("rnbqxbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1", "piece letter"),
    ("rnbq1bnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1", "missing kings"),
    ("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR x KQkq - 0 1", "side"),
    ("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq e4 0 1", "ep rank"),
    ("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - -1 1", "halfmove"),
    ("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 0", "fullmove"),
    ("Pnbqkbnr/pppppppp/8/8/8/8/1PPPPPPP/RNBQKBNR w KQkq - 0 1", "back-rank pawn"),
    ("4k3/8/8/8/8/8/8/4K2r b - - 0 1", "side not to move in check"),
])
def test_bad_fens_rejected(bad, why):
    with pytest.raises(ch.FenError):
        ch.parse_fen(bad)


def test_missing_king_message():
    with pytest.raises(ch.FenError, match="missing kings"):
        ch.parse_fen("8/8/8/8/8/8/8/4K3 w - - 0 1")


def test_move_codec():
    assert ch.parse_move("e7e8q") == ch.ChessMove(ch.parse_square("e7"), ch.parse_square("e8"), "q")
    assert ch.format_move(ch.parse_move("g1f3")) == "g1f3"
    for bad in ("e2e9", "e7e8Q", "e2", "e2e4x", "i2i4", "e2e2"):
        with pytest.raises(ch.MoveParseError):
            ch.parse_move(bad)


def test_illegal_move_rejected():
    pos = ch.initial_position()
    with pytest.raises(ch.IllegalChessMoveError):
        ch.apply_chess_move(pos, ch.parse_move("e2e5"))


def test_status_rules():
    mate = ch.parse_fen("rnb1kbnr/pppp1ppp/8/4p3/6Pq/5P2/PPPPP2P/RNBQKBNR w KQkq - 1 3")
    assert ch.game_status(mate) is ch.GameStatus.CHECKMATE
    stale = ch.parse_fen("7k/5Q2/6K1/8/8/8/8/8 b - - 0 1")
    assert ch.game_status(stale) is ch.GameStatus.STALEMATE
    fifty = ch.parse_fen("4k3/8/8/8/8/8/8/R3K3 w - - 100 80")
    assert ch.game_status(fifty) is ch.GameStatus.FIFTY_MOVE
    bare = ch.parse_fen("4k3/8/8/8/8/8/8/4KN2 w - - 0 1")
    assert ch.game_status(bare) is ch.GameStatus.INSUFFICIENT_MATERIAL
    assert ch.game_status(ch.initial_position(), 200) is ch.GameStatus.PLY_LIMIT
    assert ch.game_status(ch.initial_position(), 199) is ch.GameStatus.ONGOING


def _random_walk(seed, plies):
    rng = np.random.default_rng(seed)
    pos = ch.initial_position()
    board = pychess.Board()
    out = [(pos, board.copy())]
    for _ in range(plies):
        moves = ch.legal_moves(pos)
        if not moves:
            break
        mv = moves[int(rng.integers(len(moves)))]
        pos = ch.apply_chess_move(pos, mv)
        board.push_uci(mv.uci())
        out.append((pos, board.copy()))
    return out


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_matches_python_chess_on_random_games(seed):
    # python-chess is an independent reference implementation
    for pos, board in _random_walk(seed, 60):
        assert ch.format_fen(pos) == board.fen(en_passant="fen")
        assert {m.uci() for m in ch.legal_moves(pos)} == {m.uci() for m in board.legal_moves}
        assert pos.in_check() == board.is_check()
        assert ch.insufficient_material(pos) == board.is_insufficient_material()
        assert ch.parse_fen(ch.format_fen(pos)) == pos


@pytest.mark.parametrize("fen", [KIWIPETE, POS3, POS4, POS5])
def test_move_sets_match_python_chess_two_plies(fen):
    pos = ch.parse_fen(fen)
    board = pychess.Board(fen)
    for mv in ch.legal_moves(pos):
        nxt = ch.apply_chess_move(pos, mv)
        board.push_uci(mv.uci())
        assert {m.uci() for m in ch.legal_moves(nxt)} == {m.uci() for m in board.legal_moves}
        board.pop()
