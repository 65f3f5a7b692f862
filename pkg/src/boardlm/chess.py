"""Chess rules: FEN codec, coordinate-algebraic moves, legal move generation.

The board is a 64-tuple of FEN piece letters ("." for empty) indexed
``rank * 8 + file`` so that a1 = 0, h1 = 7 and h8 = 63. Positions are
immutable; :func:`apply_chess_move` returns a new one.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

FILES = "abcdefgh"
RANKS = "12345678"
EMPTY = "."
START_FEN = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1"
PROMOTIONS = "qrbn"
DEFAULT_PLY_LIMIT = 200


class FenError(ValueError):
    pass


class MoveParseError(ValueError):
    pass


class IllegalChessMoveError(ValueError):
    pass


def square_name(sq: int) -> str:
    return FILES[sq % 8] + RANKS[sq // 8]


def parse_square(text: str) -> int:
    if len(text) != 2 or text[0] not in FILES or text[1] not in RANKS:
        raise MoveParseError(f"malformed square {text!r}")
    return RANKS.index(text[1]) * 8 + FILES.index(text[0])


def _color(piece: str) -> str:
    return "w" if piece.isupper() else "b"


# ---------------------------------------------------------------------------
# Precomputed geometry

def _offsets_table(deltas):
    table = []
    for sq in range(64):
        f, r = sq % 8, sq // 8
        out = []
        for df, dr in deltas:
            nf, nr = f + df, r + dr
            if 0 <= nf < 8 and 0 <= nr < 8:
                out.append(nr * 8 + nf)
        table.append(tuple(out))
    return tuple(table)


def _rays_table(deltas):
    table = []
    for sq in range(64):
        rays = []
        for df, dr in deltas:
            f, r = sq % 8 + df, sq // 8 + dr
            ray = []
            while 0 <= f < 8 and 0 <= r < 8:
                ray.append(r * 8 + f)
                f += df
                r += dr
            rays.append(tuple(ray))
        table.append(tuple(rays))
    return tuple(table)


KNIGHT = _offsets_table([(1, 2), (2, 1), (2, -1), (1, -2), (-1, -2), (-2, -1), (-2, 1), (-1, 2)])
KING = _offsets_table([(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)])
ORTHO = _rays_table([(1, 0), (-1, 0), (0, 1), (0, -1)])
DIAG = _rays_table([(1, 1), (1, -1), (-1, 1), (-1, -1)])


# ---------------------------------------------------------------------------
# Types

@dataclass(frozen=True)
class ChessMove:
    from_sq: int
    to_sq: int
    promotion: Optional[str] = None

    def __post_init__(self):
        if not (0 <= self.from_sq < 64 and 0 <= self.to_sq < 64):
            raise MoveParseError("square off the board")
        if self.from_sq == self.to_sq:
            raise MoveParseError("origin and destination coincide")
        if self.promotion is not None and self.promotion not in PROMOTIONS:
            raise MoveParseError(f"invalid promotion piece {self.promotion!r}")

    def uci(self) -> str:
        return square_name(self.from_sq) + square_name(self.to_sq) + (self.promotion or "")

    __str__ = uci


class GameStatus(enum.Enum):
    ONGOING = "ongoing"
    CHECKMATE = "checkmate"
    STALEMATE = "stalemate"
    FIFTY_MOVE = "draw-by-fifty-move"
    INSUFFICIENT_MATERIAL = "draw-by-insufficient-material"
    PLY_LIMIT = "aborted-by-ply-limit"


@dataclass(frozen=True)
class ChessPosition:
    board: Tuple[str, ...]
    turn: str = "w"
    castling: str = "KQkq"
    ep_square: Optional[int] = None
    halfmove: int = 0
    fullmove: int = 1

    def piece_at(self, sq: int | str) -> Optional[str]:
        if isinstance(sq, str):
            sq = parse_square(sq)
        p = self.board[sq]
        return None if p == EMPTY else p

    def king_square(self, color: str) -> int:
        return self.board.index("K" if color == "w" else "k")

    def in_check(self) -> bool:
        return is_attacked(self.board, self.king_square(self.turn), _other(self.turn))

    def __str__(self) -> str:
        return format_fen(self)


def _other(color: str) -> str:
    return "b" if color == "w" else "w"


def initial_position() -> ChessPosition:
    return parse_fen(START_FEN)


# ---------------------------------------------------------------------------
# FEN

_PIECES = set("pnbrqkPNBRQK")


def parse_fen(text: str) -> ChessPosition:
    """Parse a six-field FEN string, validating syntax and basic semantics."""
    fields = text.split()
    if len(fields) != 6:
        raise FenError(f"expected 6 FEN fields, got {len(fields)}")
    placement, turn, castling, ep, half, full = fields

    ranks = placement.split("/")
    if len(ranks) != 8:
        raise FenError(f"expected 8 ranks in piece placement, got {len(ranks)}")
    board = [EMPTY] * 64
    for i, rank_text in enumerate(ranks):
        r = 7 - i
        f = 0
        prev_digit = False
        for ch in rank_text:
            if ch in "12345678":
                if prev_digit:
                    raise FenError(f"consecutive digits in rank {rank_text!r}")
                f += int(ch)
                prev_digit = True
            elif ch in _PIECES:
                if f >= 8:
                    raise FenError(f"rank {rank_text!r} is longer than 8 squares")
                board[r * 8 + f] = ch
                f += 1
                prev_digit = False
            else:
                raise FenError(f"invalid character {ch!r} in piece placement")
        if f != 8:
            raise FenError(f"rank {rank_text!r} covers {f} squares, expected 8")

    for king in "Kk":
        n = board.count(king)
        if n != 1:
            side = "white" if king == "K" else "black"
            raise FenError(f"{side} must have exactly one king, found {n}" if n else "missing kings")
    for sq in list(range(8)) + list(range(56, 64)):
        if board[sq] in ("P", "p"):
            raise FenError(f"pawn on back rank at {square_name(sq)}")

    if turn not in ("w", "b"):
        raise FenError(f"active color must be 'w' or 'b', got {turn!r}")

    if castling == "-":
        rights = ""
    else:
        if any(c not in "KQkq" for c in castling) or len(set(castling)) != len(castling):
            raise FenError(f"invalid castling field {castling!r}")
        rights = "".join(c for c in "KQkq" if c in castling)

    ep_sq = None
    if ep != "-":
        try:
            ep_sq = parse_square(ep)
        except MoveParseError:
            raise FenError(f"invalid en-passant square {ep!r}") from None
        expected_rank = "6" if turn == "w" else "3"
        if ep[1] != expected_rank:
            raise FenError(f"en-passant square {ep} must lie on rank {expected_rank}")

    try:
        halfmove, fullmove = int(half), int(full)
    except ValueError:
        raise FenError("move counters must be integers") from None
    if halfmove < 0:
        raise FenError("half-move clock must be >= 0")
    if fullmove < 1:
        raise FenError("full-move number must be >= 1")

    board_t = tuple(board)
    if is_attacked(board_t, board_t.index("k" if turn == "w" else "K"), turn):
        raise FenError("side not to move is in check")
    return ChessPosition(board_t, turn, rights, ep_sq, halfmove, fullmove)


def format_fen(position: ChessPosition) -> str:
    rows = []
    for r in range(7, -1, -1):
        row = ""
        gap = 0
        for f in range(8):
            p = position.board[r * 8 + f]
            if p == EMPTY:
                gap += 1
            else:
                if gap:
                    row += str(gap)
                    gap = 0
                row += p
        if gap:
            row += str(gap)
        rows.append(row)
    ep = square_name(position.ep_square) if position.ep_square is not None else "-"
    return " ".join([
        "/".join(rows),
        position.turn,
        position.castling or "-",
        ep,
        str(position.halfmove),
        str(position.fullmove),
    ])


# ---------------------------------------------------------------------------
# Move codec

def parse_move(text: str) -> ChessMove:
    if len(text) not in (4, 5):
        raise MoveParseError(f"move {text!r} must have 4 or 5 characters")
    promo = text[4] if len(text) == 5 else None
    if promo is not None and promo not in PROMOTIONS:
        raise MoveParseError(f"invalid promotion letter {promo!r}")
    return ChessMove(parse_square(text[:2]), parse_square(text[2:4]), promo)


def format_move(move: ChessMove) -> str:
    return move.uci()


# ---------------------------------------------------------------------------
# Attacks and move generation

def is_attacked(board, sq: int, by: str) -> bool:
    """True when any piece of color ``by`` attacks square ``sq``."""
    if by == "w":
        pawn, knight, bishop, rook, queen, king = "PNBRQK"
        f = sq % 8
        # a white pawn attacks sq from one rank below
        if sq >= 8:
            if f > 0 and board[sq - 9] == pawn:
                return True
            if f < 7 and board[sq - 7] == pawn:
                return True
    else:
        pawn, knight, bishop, rook, queen, king = "pnbrqk"
        f = sq % 8
        if sq < 56:
            if f > 0 and board[sq + 7] == pawn:
                return True
            if f < 7 and board[sq + 9] == pawn:
                return True
    for t in KNIGHT[sq]:
        if board[t] == knight:
            return True
    for t in KING[sq]:
        if board[t] == king:
            return True
    for ray in ORTHO[sq]:
        for t in ray:
            p = board[t]
            if p != EMPTY:
                if p == rook or p == queen:
                    return True
                break
    for ray in DIAG[sq]:
        for t in ray:
            p = board[t]
            if p != EMPTY:
                if p == bishop or p == queen:
                    return True
                break
    return False


def _pseudo_moves(pos: ChessPosition) -> List[ChessMove]:
    board = pos.board
    white = pos.turn == "w"
    own = str.isupper if white else str.islower
    moves: List[ChessMove] = []
    add = moves.append
    for sq in range(64):
        p = board[sq]
        if p == EMPTY or not own(p):
            continue
        kind = p.lower()
        if kind == "p":
            step = 8 if white else -8
            start_rank = 1 if white else 6
            last_rank = 7 if white else 0
            f = sq % 8
            to = sq + step
            if board[to] == EMPTY:
                if to // 8 == last_rank:
                    for pr in PROMOTIONS:
                        add(ChessMove(sq, to, pr))
                else:
                    add(ChessMove(sq, to))
                    if sq // 8 == start_rank and board[to + step] == EMPTY:
                        add(ChessMove(sq, to + step))
            for df in (-1, 1):
                if not 0 <= f + df < 8:
                    continue
                t = to + df
                target = board[t]
                if (target != EMPTY and not own(target)) or t == pos.ep_square:
                    if t // 8 == last_rank:
                        for pr in PROMOTIONS:
                            add(ChessMove(sq, t, pr))
                    else:
                        add(ChessMove(sq, t))
        elif kind == "n" or kind == "k":
            for t in (KNIGHT if kind == "n" else KING)[sq]:
                target = board[t]
                if target == EMPTY or not own(target):
                    add(ChessMove(sq, t))
        else:
            rays = ()
            if kind in "rq":
                rays += ORTHO[sq]
            if kind in "bq":
                rays += DIAG[sq]
            for ray in rays:
                for t in ray:
                    target = board[t]
                    if target == EMPTY:
                        add(ChessMove(sq, t))
                    else:
                        if not own(target):
                            add(ChessMove(sq, t))
                        break
    moves.extend(_castling_moves(pos))
    return moves


_CASTLES = {
    # right: (king from, king to, rook from, squares that must be empty, squares not attacked)
    "K": (4, 6, 7, (5, 6), (4, 5, 6)),
    "Q": (4, 2, 0, (1, 2, 3), (4, 3, 2)),
    "k": (60, 62, 63, (61, 62), (60, 61, 62)),
    "q": (60, 58, 56, (57, 58, 59), (60, 59, 58)),
}


def _castling_moves(pos: ChessPosition) -> List[ChessMove]:
    out = []
    board = pos.board
    enemy = _other(pos.turn)
    for right in (("K", "Q") if pos.turn == "w" else ("k", "q")):
        if right not in pos.castling:
            continue
        k_from, k_to, r_from, empty, safe = _CASTLES[right]
        king, rook = ("K", "R") if pos.turn == "w" else ("k", "r")
        if board[k_from] != king or board[r_from] != rook:
            continue
        if any(board[s] != EMPTY for s in empty):
            continue
        if any(is_attacked(board, s, enemy) for s in safe):
            continue
        out.append(ChessMove(k_from, k_to))
    return out


def _move_board(board, move: ChessMove, ep_square: Optional[int]) -> List[str]:
    """Piece placement after ``move`` (no legality check)."""
    b = list(board)
    piece = b[move.from_sq]
    b[move.from_sq] = EMPTY
    if piece in "Pp" and move.to_sq == ep_square and board[move.to_sq] == EMPTY:
        # en-passant capture removes the pawn behind the target square
        b[move.to_sq + (-8 if piece == "P" else 8)] = EMPTY
    if piece in "Kk" and abs(move.to_sq - move.from_sq) == 2:
        if move.to_sq > move.from_sq:
            b[move.from_sq + 1] = b[move.from_sq + 3]
            b[move.from_sq + 3] = EMPTY
        else:
            b[move.from_sq - 1] = b[move.from_sq - 4]
            b[move.from_sq - 4] = EMPTY
    if move.promotion:
        piece = move.promotion.upper() if piece == "P" else move.promotion
    b[move.to_sq] = piece
    return b


def legal_moves(position: ChessPosition) -> List[ChessMove]:
    """Every legal move in ``position``; empty for checkmate and stalemate."""
    king = "K" if position.turn == "w" else "k"
    enemy = _other(position.turn)
    out = []
    for mv in _pseudo_moves(position):
        b = _move_board(position.board, mv, position.ep_square)
        ksq = mv.to_sq if position.board[mv.from_sq] == king else position.board.index(king)
        if not is_attacked(b, ksq, enemy):
            out.append(mv)
    return out


_ROOK_HOMES: Dict[int, str] = {0: "Q", 7: "K", 56: "q", 63: "k"}


def apply_chess_move(position: ChessPosition, move: ChessMove, check: bool = True) -> ChessPosition:
    """Play ``move``; raises :class:`IllegalChessMoveError` unless it is legal.

    ``check=False`` skips the legality test for callers that already hold a
    move drawn from :func:`legal_moves`.
    """
    if check and move not in legal_moves(position):
        raise IllegalChessMoveError(f"{move.uci()} is not legal in {format_fen(position)}")
    board = position.board
    piece = board[move.from_sq]
    captured = board[move.to_sq] != EMPTY
    is_pawn = piece in "Pp"
    if is_pawn and move.to_sq == position.ep_square:
        captured = True
    new_board = tuple(_move_board(board, move, position.ep_square))

    rights = position.castling
    if piece == "K":
        rights = rights.replace("K", "").replace("Q", "")
    elif piece == "k":
        rights = rights.replace("k", "").replace("q", "")
    for sq in (move.from_sq, move.to_sq):
        r = _ROOK_HOMES.get(sq)
        if r:
            rights = rights.replace(r, "")

    ep = None
    if is_pawn and abs(move.to_sq - move.from_sq) == 16:
        ep = (move.from_sq + move.to_sq) // 2

    halfmove = 0 if (is_pawn or captured) else position.halfmove + 1
    fullmove = position.fullmove + (1 if position.turn == "b" else 0)
    return ChessPosition(new_board, _other(position.turn), rights, ep, halfmove, fullmove)


# ---------------------------------------------------------------------------
# Status

def insufficient_material(position: ChessPosition) -> bool:
    """Dead positions: K v K, K+minor v K, and bishops all on one square color."""
    minors = []
    for sq, p in enumerate(position.board):
        if p == EMPTY or p in "Kk":
            continue
        if p in "PpRrQq":
            return False
        minors.append((p, sq))
    if len(minors) <= 1:
        return True
    if all(p in "Bb" for p, _ in minors):
        shades = {(sq % 8 + sq // 8) % 2 for _, sq in minors}
        return len(shades) == 1
    return False


def game_status(position: ChessPosition, ply_count: int = 0,
                ply_limit: int = DEFAULT_PLY_LIMIT) -> GameStatus:
    if not legal_moves(position):
        return GameStatus.CHECKMATE if position.in_check() else GameStatus.STALEMATE
    if position.halfmove >= 100:
        return GameStatus.FIFTY_MOVE
    if insufficient_material(position):
        return GameStatus.INSUFFICIENT_MATERIAL
    if ply_count >= ply_limit:
        return GameStatus.PLY_LIMIT
    return GameStatus.ONGOING


def perft(position: ChessPosition, depth: int) -> int:
    """Leaf count of the legal move tree ``depth`` plies deep."""
    if depth == 0:
        return 1
    moves = legal_moves(position)
    if depth == 1:
        return len(moves)
    return sum(perft(apply_chess_move(position, m, check=False), depth - 1) for m in moves)
