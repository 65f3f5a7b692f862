"""Command-line entry point: ``boardlm <subcommand> [flags]``.

Every subcommand writes its outputs plus one ``*.manifest.json`` recording
the resolved configuration and SHA-256 digests of inputs and outputs.
Exit status: 0 success, 1 usage error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from . import nim
from .corpus import (DEFAULT_PAIRINGS, MOVESEP, PLAYER_ID, WIN_STATE, GenConfig, dataset_stats,
                     gen_chess_corpus, gen_nim_corpus, read_records, split_corpus, write_records)
from .mlm import ModelConfig, TrainConfig, init_params, load_checkpoint, save_checkpoint, train
from .tokenizer import Vocab, tokenize, train_wordpiece
from .uci import ENGINE_ENV, EngineConfig, engine_connect

log = logging.getLogger("boardlm")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2
CHESS_MAX_SEQ = 128


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


# ---------------------------------------------------------------------------
# helpers

def sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path: str, args: argparse.Namespace, inputs: Sequence[str],
                   outputs: Sequence[str]) -> str:
    config = {k: v for k, v in vars(args).items() if k not in ("func",)}
    manifest = {
        "subcommand": args.command,
        "config": config,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "inputs": {p: sha256(p) for p in inputs if p and os.path.isfile(p)},
        "outputs": {p: sha256(p) for p in outputs if p and os.path.isfile(p)},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return path


def _pairings(text: str):
    out = []
    for part in text.split(","):
        a, sep, b = part.strip().partition("-")
        if not sep or a not in "GQR" or b not in "GQR" or len(a) != 1 or len(b) != 1:
            raise argparse.ArgumentTypeError(f"bad pairing {part!r}; use e.g. G-R,G-Q")
        out.append((a, b))
    return tuple(out)


def _floats(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _probability(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError("must lie in [0, 1]")
    return v


def _engine_factory(args):
    cfg = EngineConfig(path=args.engine, depth=args.depth,
                       target_elo=getattr(args, "elo", None))
    return lambda: engine_connect(cfg)


def read_config_file(path: str) -> Dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment. Keys use flag spelling."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{n}: expected key = value")
            values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


# ---------------------------------------------------------------------------
# subcommands

def cmd_nim_gen(args) -> List[str]:
    cfg = GenConfig(games=args.games, pairings=args.pairings, variant=args.variant, noise=args.noise,
                    seed=args.seed, random_start=not args.fixed_start, shuffle_piles=not args.no_shuffle,
                    q_episodes=args.q_episodes, jobs=args.jobs)
    stats = gen_nim_corpus(cfg, args.out)
    stats_path = args.out + ".stats.json"
    with open(stats_path, "w", encoding="utf-8") as fh:
        fh.write(stats.to_json() + "\n")
    return [args.out, stats_path]


def cmd_chess_gen(args) -> List[str]:
    cfg = GenConfig(games=args.games, plies=args.plies, noise=args.noise, seed=args.seed, depth=args.depth)
    stats = gen_chess_corpus(cfg, _engine_factory(args), args.out)
    stats_path = args.out + ".stats.json"
    with open(stats_path, "w", encoding="utf-8") as fh:
        fh.write(stats.to_json() + "\n")
    return [args.out, stats_path]


def cmd_tok_train(args) -> List[str]:
    vocab = train_wordpiece(read_records(args.corpus), args.max_vocab, args.min_frequency)
    vocab.save(args.out)
    log.info("vocabulary of %d tokens written to %s", len(vocab), args.out)
    return [args.out]


def cmd_mlm_train(args) -> List[str]:
    vocab = Vocab.load(args.vocab)
    records = read_records(args.corpus)
    if not records:
        raise ValueError(f"{args.corpus} holds no records")
    train_r, test_r = split_corpus(records, args.test_fraction, np.random.default_rng([args.seed, 7]))
    seqs = [tokenize(vocab, r) for r in train_r]
    longest = max(len(s) for s in seqs)
    # chess games run far past the 6-ply training records, so leave headroom
    default_seq = CHESS_MAX_SEQ if MOVESEP in records[0] else 32
    max_seq = args.max_seq or max(default_seq, longest)
    mc = ModelConfig(vocab_size=len(vocab), layers=args.layers, heads=args.heads, hidden=args.hidden,
                     ffn=args.ffn, max_seq=max_seq, dropout=args.dropout)
    tc = TrainConfig(mask_p=args.mask_p, batch_size=args.batch_size, steps=args.steps, lr=args.lr,
                     seed=args.seed)
    params = init_params(mc, np.random.default_rng([args.seed, 11]))
    params, losses = train(params, seqs, vocab, tc, log_every=args.log_every)
    save_checkpoint(args.out, params, extra={"vocab": os.path.abspath(args.vocab), "seed": args.seed})
    loss_path = args.out + ".loss.csv"
    with open(loss_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "loss"])
        w.writerows((i, repr(l)) for i, l in enumerate(losses))
    held = args.out + ".heldout.txt"
    write_records(held, test_r)
    return [args.out, loss_path, held]


def _parse_model_spec(text: str):
    """``NOISE:CKPT:VOCAB:TAG``"""
    parts = text.split(":")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(f"model spec must be NOISE:CKPT:VOCAB:TAG, got {text!r}")
    try:
        noise = float(parts[0])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad noise level in {text!r}") from None
    return noise, parts[1], parts[2], parts[3]


def cmd_nim_arena(args) -> List[str]:
    from .arena import ModelNimAgent, report, results_to_json, roster_tournament
    from .corpus import make_nim_agent

    qtable = None
    if "Q" in args.agents:
        qtable = nim.q_train(args.q_episodes, nim.RandomAgent(), np.random.default_rng([args.seed, 2**31]))
    base = [make_nim_agent(t, qtable) for t in args.agents]
    models: Dict[float, list] = {}
    for noise, ckpt, vocab_path, tag in args.model:
        vocab = Vocab.load(vocab_path)
        label = f"M{tag}@{noise:g}"
        models.setdefault(noise, []).append(ModelNimAgent(load_checkpoint(ckpt), vocab, tag, label))
    levels = sorted(models) if models else [0.0]
    if not models:
        models = {0.0: []}
    reports = roster_tournament(base, models, levels, args.games, args.seed, args.jobs)
    os.makedirs(args.out_dir, exist_ok=True)
    res = os.path.join(args.out_dir, "results.json")
    with open(res, "w", encoding="utf-8") as fh:
        json.dump(results_to_json(roster=reports), fh, indent=1)
    return [res] + report(args.out_dir, roster=reports)


def cmd_nim_sweep(args) -> List[str]:
    from .arena import match_size_sweep, report, results_to_json

    mc = {"steps": args.steps} if args.steps else {}
    points = match_size_sweep(args.sizes, args.games_eval, args.seed, train_config=mc or None,
                              shuffle_piles=not args.no_shuffle,
                              progress=lambda p: log.info("m=%d win rate %.3f", p.match_size, p.win_rate))
    os.makedirs(args.out_dir, exist_ok=True)
    res = os.path.join(args.out_dir, "results.json")
    with open(res, "w", encoding="utf-8") as fh:
        json.dump(results_to_json(sweep=points), fh, indent=1)
    return [res] + report(args.out_dir, sweep=points)


def cmd_chess_eval(args) -> List[str]:
    from .arena import chess_validity, play_chess_vs_engine, report, results_to_json

    params = load_checkpoint(args.model)
    vocab = Vocab.load(args.vocab)
    held = None
    if args.heldout:
        held = chess_validity(params, vocab, read_records(args.heldout), max_ply=args.heldout_plies)
    factory = _engine_factory(args)
    engine = factory()
    try:
        rep = play_chess_vs_engine(params, vocab, engine, args.games, np.random.default_rng(args.seed),
                                   ply_limit=args.ply_limit, model_color=args.color, engine_factory=factory)
    finally:
        engine.close()
    os.makedirs(args.out_dir, exist_ok=True)
    res = os.path.join(args.out_dir, "results.json")
    with open(res, "w", encoding="utf-8") as fh:
        json.dump(results_to_json(chess=rep, heldout_validity=held), fh, indent=1)
    return [res] + report(args.out_dir, chess=rep, heldout_validity=held)


def cmd_stats(args) -> List[str]:
    stats = dataset_stats(args.corpus)
    text = stats.to_json()
    print(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        return [args.out]
    return []


def cmd_report(args) -> List[str]:
    from .arena import report, results_from_json

    merged = {"roster": [], "sweep": [], "chess": None, "heldout_validity": {}}
    for path in args.results:
        with open(path, encoding="utf-8") as fh:
            part = results_from_json(json.load(fh))
        merged["roster"] += part["roster"]
        merged["sweep"] += part["sweep"]
        merged["chess"] = part["chess"] or merged["chess"]
        merged["heldout_validity"].update(part["heldout_validity"])
    return report(args.out_dir, **merged)


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="boardlm", description="Board-game corpora, tokenizer, masked LM and arenas.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--config", help="key = value file; command-line flags take precedence")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    def command(name, func, help_text, outputs_flag=True):
        sp = sub.add_parser(name, help=help_text, description=help_text)
        sp.set_defaults(func=func)
        sp.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
        sp.add_argument("--manifest", help="manifest path (default: derived from the output path)")
        return sp

    def engine_flags(sp):
        sp.add_argument("--engine", default=os.environ.get(ENGINE_ENV),
                        help=f"UCI engine command (default ${ENGINE_ENV}, else 'stockfish')")
        sp.add_argument("--depth", type=int, default=1, help="search depth (default 1)")
        sp.add_argument("--elo", type=int, default=None, help="limit engine strength to this rating")

    sp = command("nim-gen", cmd_nim_gen, "Generate a Nim corpus.")
    sp.add_argument("--games", type=int, default=30_000)
    sp.add_argument("--variant", choices=(PLAYER_ID, WIN_STATE), default=PLAYER_ID)
    sp.add_argument("--noise", type=_probability, default=0.0)
    sp.add_argument("--pairings", type=_pairings, default=DEFAULT_PAIRINGS, help="e.g. G-R,G-Q,Q-R")
    sp.add_argument("--no-shuffle", action="store_true", help="always write piles as a/b/c")
    sp.add_argument("--fixed-start", action="store_true", help="start every game from full piles")
    sp.add_argument("--q-episodes", type=int, default=300_000)
    sp.add_argument("--out", required=True)

    sp = command("chess-gen", cmd_chess_gen, "Generate a chess corpus by engine self-play.")
    engine_flags(sp)
    sp.add_argument("--games", type=int, default=30_000)
    sp.add_argument("--plies", type=int, default=6)
    sp.add_argument("--noise", type=_probability, default=0.0,
                    help="probability that a ply is a random legal move")
    sp.add_argument("--out", required=True)

    sp = command("tok-train", cmd_tok_train, "Train a WordPiece vocabulary on a corpus.")
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--max-vocab", type=int, default=200)
    sp.add_argument("--min-frequency", type=int, default=2)
    sp.add_argument("--out", required=True)

    sp = command("mlm-train", cmd_mlm_train, "Train the masked LM on a corpus.")
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--vocab", required=True)
    sp.add_argument("--mask-p", type=_probability, default=0.15)
    sp.add_argument("--test-fraction", type=float, default=0.2)
    sp.add_argument("--steps", type=int, default=8000)
    sp.add_argument("--batch-size", type=int, default=64)
    sp.add_argument("--lr", type=float, default=2e-3)
    sp.add_argument("--layers", type=int, default=2)
    sp.add_argument("--heads", type=int, default=4)
    sp.add_argument("--hidden", type=int, default=64)
    sp.add_argument("--ffn", type=int, default=256)
    sp.add_argument("--max-seq", type=int, default=0, help="0 = 128 for chess corpora, else 32 (raised to fit the corpus)")
    sp.add_argument("--dropout", type=float, default=0.0)
    sp.add_argument("--log-every", type=int, default=0)
    sp.add_argument("--out", required=True)

    sp = command("nim-arena", cmd_nim_arena, "Round-robin Nim tournament per noise level.")
    sp.add_argument("--agents", default="GQR", help="base agent tags (default GQR)")
    sp.add_argument("--model", action="append", type=_parse_model_spec, default=[],
                    metavar="NOISE:CKPT:VOCAB:TAG")
    sp.add_argument("--games", type=int, default=1000, help="games per pairing (default 1000)")
    sp.add_argument("--q-episodes", type=int, default=300_000)
    sp.add_argument("--out-dir", required=True)

    sp = command("nim-sweep", cmd_nim_sweep, "Few-shot match-size sweep against the random agent.")
    sp.add_argument("--sizes", type=_ints, default=[10, 50, 100, 300])
    sp.add_argument("--games-eval", type=int, default=1000)
    sp.add_argument("--steps", type=int, default=0, help="training steps per model (0 = default)")
    sp.add_argument("--no-shuffle", action="store_true")
    sp.add_argument("--out-dir", required=True)

    sp = command("chess-eval", cmd_chess_eval, "Model-vs-engine games and held-out move validity.")
    engine_flags(sp)
    sp.add_argument("--model", required=True)
    sp.add_argument("--vocab", required=True)
    sp.add_argument("--games", type=int, default=20)
    sp.add_argument("--ply-limit", type=int, default=200)
    sp.add_argument("--color", choices=("w", "b"), default="w")
    sp.add_argument("--heldout", help="held-out records for top-1 validity")
    sp.add_argument("--heldout-plies", type=int, default=6)
    sp.add_argument("--out-dir", required=True)

    sp = command("stats", cmd_stats, "Print corpus statistics as JSON.")
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--out")

    sp = command("report", cmd_report, "Regenerate CSV and SVG files from results JSON.")
    sp.add_argument("--results", nargs="+", required=True)
    sp.add_argument("--out-dir", required=True)
    return p


_INPUT_KEYS = ("corpus", "vocab", "model", "heldout", "results")


def _inputs(args) -> List[str]:
    out = []
    for k in _INPUT_KEYS:
        v = getattr(args, k, None)
        if isinstance(v, str):
            out.append(v)
        elif isinstance(v, list):
            for item in v:
                if isinstance(item, str):
                    out.append(item)
                elif isinstance(item, tuple):
                    out.extend(item[1:3])
    return out


def _manifest_path(args) -> str:
    if args.manifest:
        return args.manifest
    if getattr(args, "out", None):
        return args.out + ".manifest.json"
    if getattr(args, "out_dir", None):
        return os.path.join(args.out_dir, "manifest.json")
    return f"{args.command}.manifest.json"


def _apply_config_file(parser, argv: Sequence[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return
    values = read_config_file(known.config)
    cmd = next((a for a in rest if not a.startswith("-")), None)
    sub = None
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction) and cmd in action.choices:
            sub = action.choices[cmd]
    if sub is None:
        return
    by_dest = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        action = by_dest.get(key)
        if action is None:
            raise UsageError(f"{known.config}: unknown key {key!r} for {cmd}")
        if action.const is True and action.nargs == 0:
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        else:
            try:
                defaults[key] = action.type(raw) if action.type else raw
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"{known.config}: bad value for {key}: {exc}") from None
        action.required = False
    sub.set_defaults(**defaults)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage() + "boardlm: error: a subcommand is required\n")
    except UsageError as exc:
        sys.stderr.write(str(exc) if str(exc).endswith("\n") else str(exc) + "\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"boardlm: {exc}\n")
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        outputs = args.func(args)
        write_manifest(_manifest_path(args), args, _inputs(args), outputs)
    except KeyboardInterrupt:
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - reported, not swallowed
        log.debug("failure", exc_info=True)
        sys.stderr.write(f"boardlm {args.command}: {type(exc).__name__}: {exc}\n")
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
