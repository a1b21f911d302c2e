"""Command-line surface: init-tiny, finetune, score."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import data, model


def cmd_init_tiny(args) -> int:
    examples = data.read_corpus(args.corpus)
    if not examples:
        print("corpus contains no usable rows", file=sys.stderr)
        return 3
    model.init_tiny_pretrained(
        args.out,
        [e.text for e in examples],
        vocab_size=args.vocab_size,
        hidden_size=args.hidden_size,
        layers=args.layers,
        seed=args.seed,
    )
    print(f"tiny pretrained written to {args.out}")
    return 0


def cmd_finetune(args) -> int:
    examples = data.read_corpus(args.corpus)
    config = model.ScorerConfig(
        pretrained=args.pretrained,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        seed=args.seed,
        max_length=args.max_length,
    )
    try:
        result = model.finetune(examples, config, args.out)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(
        f"held-out accuracy={result.accuracy:.4f} f1={result.f1:.4f} (n={result.n})"
    )
    return 0


def cmd_score(args) -> int:
    user_texts = data.read_user_texts(args.tweets)
    probabilities = model.emit_scores(
        args.checkpoint, user_texts, max_length=args.max_length
    )
    data.write_scores(args.out, probabilities)
    print(f"scored {len(probabilities)} users")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xlm-scorer",
        description="Fine-tune a multilingual encoder and emit bot-probability score files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init-tiny", help="create a small offline pretrained checkpoint")
    p.add_argument("--corpus", required=True, help="label,language,text CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--vocab-size", type=int, default=2000)
    p.add_argument("--hidden-size", type=int, default=64)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_init_tiny)

    p = sub.add_parser("finetune", help="train a sequence-classification checkpoint")
    p.add_argument("--corpus", required=True, help="label,language,text CSV")
    p.add_argument("--pretrained", default=model.DEFAULT_PRETRAINED,
                   help="model id or local checkpoint directory")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=4)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--learning-rate", type=float, default=5e-4)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--max-length", type=int, default=64)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("score", help="emit a user_id,bot_probability score file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--tweets", required=True, help="tweets NDJSON with user_id and text")
    p.add_argument("--out", required=True)
    p.add_argument("--max-length", type=int, default=64)
    p.set_defaults(func=cmd_score)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
