"""Minimal UCI client for driving an external engine over stdin/stdout."""
from __future__ import annotations

import logging
import os
import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

from .chess import ChessMove, ChessPosition, MoveParseError, format_fen, legal_moves, parse_move

log = logging.getLogger(__name__)

ENGINE_ENV = "BOARDLM_ENGINE"


class EngineError(RuntimeError):
    pass


class EngineSpawnError(EngineError):
    pass


class EngineProtocolError(EngineError):
    pass


class EngineTimeoutError(EngineProtocolError):
    pass


class TerminalPositionError(EngineError):
    """The engine reported ``bestmove (none)``."""


@dataclass
class EngineConfig:
    path: Union[str, Sequence[str], None] = None
    threads: int = 1
    multipv: int = 1
    depth: Optional[int] = 1
    target_elo: Optional[int] = None
    movetime_ms: Optional[int] = None
    handshake_timeout: float = 10.0
    response_timeout: float = 60.0

    def __post_init__(self):
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.multipv < 1:
            raise ValueError("multipv must be >= 1")
        if self.depth is not None and not 1 <= self.depth <= 20:
            raise ValueError("depth must lie in [1, 20]")

    def command(self) -> List[str]:
        path = self.path if self.path is not None else os.environ.get(ENGINE_ENV, "stockfish")
        if isinstance(path, str):
            return shlex.split(path) if " " in path and not os.path.exists(path) else [path]
        return list(path)


@dataclass
class EngineOption:
    name: str
    type: str
    default: Optional[str] = None
    min: Optional[int] = None
    max: Optional[int] = None


def parse_option_line(line: str) -> EngineOption:
    """Parse ``option name <N...> type <T> [default D] [min a] [max b] ...``."""
    tokens = line.split()
    keywords = {"name", "type", "default", "min", "max", "var"}
    parts: Dict[str, List[str]] = {}
    key = None
    for tok in tokens[1:]:
        if tok in keywords and not (key == "name" and tok not in ("type",)):
            key = tok
            parts.setdefault(key, [])
        elif key is not None:
            parts[key].append(tok)
    to_int = lambda k: int(parts[k][0]) if parts.get(k) else None  # noqa: E731
    default = " ".join(parts["default"]) if "default" in parts else None
    return EngineOption(
        name=" ".join(parts.get("name", [])),
        type=" ".join(parts.get("type", [])),
        default=default,
        min=to_int("min"),
        max=to_int("max"),
    )


class EngineSession:
    """One live engine process. Not safe for concurrent use."""

    def __init__(self, config: EngineConfig):
        self.config = config
        self.options: Dict[str, EngineOption] = {}
        self.warnings: List[str] = []
        self.name: Optional[str] = None
        self.effective_elo: Optional[int] = None
        self.handshake_complete = False
        self._lines: "queue.Queue[Optional[str]]" = queue.Queue()
        self._closed = False
        cmd = config.command()
        try:
            self._proc = subprocess.Popen(
                cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise EngineSpawnError(f"cannot start engine {cmd!r}: {exc}") from exc
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    # -- plumbing -----------------------------------------------------------

    def _pump(self) -> None:
        for line in self._proc.stdout:
            self._lines.put(line.rstrip("\r\n"))
        self._lines.put(None)

    def send(self, line: str) -> None:
        if self._closed:
            raise EngineProtocolError("session is closed")
        log.debug(">> %s", line)
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise EngineProtocolError(f"engine pipe closed: {exc}") from exc

    def _readline(self, timeout: float) -> str:
        try:
            line = self._lines.get(timeout=timeout)
        except queue.Empty:
            raise EngineTimeoutError(f"no reply from engine within {timeout:g} s") from None
        if line is None:
            raise EngineProtocolError("engine process terminated")
        log.debug("<< %s", line)
        return line

    def _read_until(self, token: str, timeout: float) -> List[str]:
        seen = []
        while True:
            line = self._readline(timeout)
            if line.split(" ", 1)[0] == token:
                return seen + [line]
            seen.append(line)
            self._note_engine_message(line)

    def _note_engine_message(self, line: str) -> None:
        low = line.lower()
        if low.startswith("no such option") or (low.startswith("info string") and "error" in low):
            self._warn(f"engine: {line}")

    def _warn(self, msg: str) -> None:
        log.warning(msg)
        self.warnings.append(msg)

    # -- protocol -----------------------------------------------------------

    def handshake(self) -> None:
        timeout = self.config.handshake_timeout
        self.send("uci")
        for line in self._read_until("uciok", timeout):
            if line.startswith("option "):
                opt = parse_option_line(line)
                self.options[opt.name] = opt
            elif line.startswith("id name "):
                self.name = line[len("id name "):]
        self.set_option("Threads", self.config.threads)
        self.set_option("MultiPV", self.config.multipv)
        if self.config.target_elo is not None:
            self._apply_rating(self.config.target_elo)
        self.send("isready")
        self._read_until("readyok", timeout)
        self.handshake_complete = True

    def set_option(self, name: str, value) -> None:
        if name not in self.options:
            self._warn(f"engine does not advertise option {name!r}; not set")
            return
        if isinstance(value, bool):
            value = "true" if value else "false"
        self.send(f"setoption name {name} value {value}")

    def _apply_rating(self, elo: int) -> None:
        opt = self.options.get("UCI_Elo")
        if opt is None:
            self._warn(f"engine has no UCI_Elo option; requested rating {elo} ignored")
            return
        if opt.max is not None and elo > opt.max:
            self._warn(
                f"requested rating {elo} exceeds engine maximum {opt.max}; "
                "running at full strength instead"
            )
            self.set_option("UCI_LimitStrength", False)
            return
        if opt.min is not None and elo < opt.min:
            self._warn(f"requested rating {elo} below engine minimum {opt.min}; clamped")
            elo = opt.min
        self.set_option("UCI_LimitStrength", True)
        self.set_option("UCI_Elo", elo)
        self.effective_elo = elo

    def new_game(self) -> None:
        self.send("ucinewgame")
        self.send("isready")
        self._read_until("readyok", self.config.handshake_timeout)

    def best_move(self, position: ChessPosition, depth: Optional[int] = None) -> ChessMove:
        if not self.handshake_complete:
            raise EngineProtocolError("handshake not complete")
        self.send(f"position fen {format_fen(position)}")
        if self.config.movetime_ms is not None and depth is None:
            self.send(f"go movetime {self.config.movetime_ms}")
        else:
            self.send(f"go depth {depth or self.config.depth or 1}")
        reply = self._read_until("bestmove", self.config.response_timeout)[-1]
        parts = reply.split()
        if len(parts) < 2:
            raise EngineProtocolError(f"malformed reply {reply!r}")
        if parts[1] in ("(none)", "0000"):
            raise TerminalPositionError(f"no move available in {format_fen(position)}")
        try:
            move = parse_move(parts[1])
        except MoveParseError as exc:
            raise EngineProtocolError(f"unparseable bestmove {parts[1]!r}") from exc
        if move not in legal_moves(position):
            raise EngineProtocolError(f"engine returned illegal move {parts[1]}")
        return move

    def close(self, timeout: float = 5.0) -> None:
        """Send ``quit`` and reap the process, killing it after ``timeout``."""
        if self._closed:
            return
        try:
            self.send("quit")
        except EngineProtocolError:
            pass
        self._closed = True
        try:
            self._proc.wait(timeout=timeout)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()
        for stream in (self._proc.stdin, self._proc.stdout):
            try:
                stream.close()
            except OSError:
                pass

    @property
    def alive(self) -> bool:
        return self._proc.poll() is None

    def __enter__(self) -> "EngineSession":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def engine_connect(config: EngineConfig) -> EngineSession:
    session = EngineSession(config)
    try:
        session.handshake()
    except EngineError:
        session.close(timeout=1.0)
        raise
    return session


def engine_best_move(session: EngineSession, position: ChessPosition,
                     depth: Optional[int] = None) -> ChessMove:
    return session.best_move(position, depth)


def engine_close(session: EngineSession) -> None:
    session.close()
