"""Wire-format readers shared with the main pipeline.

These deliberately re-implement the exchange formats (labeled corpus CSV,
tweets NDJSON, score CSV) rather than importing the pipeline package: the
two components integrate only through files.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

SCORE_HEADER = ["user_id", "bot_probability"]
CORPUS_HEADER = ["label", "language", "text"]


@dataclass(frozen=True)
class Example:
    text: str
    is_bot: bool
    language: str = "und"


def read_corpus(path: str) -> list[Example]:
    """Labeled corpus: label,language,text with label in {bot, human}."""
    examples = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CORPUS_HEADER:
            raise ValueError(f"corpus {path} must have header {','.join(CORPUS_HEADER)}")
        for row in reader:
            label = (row.get("label") or "").strip().casefold()
            text = row.get("text") or ""
            if label not in ("bot", "human") or not text:
                continue
            examples.append(
                Example(text, label == "bot", (row.get("language") or "und").casefold())
            )
    return examples


def read_user_texts(path: str) -> dict[str, list[str]]:
    """Tweets NDJSON ({tweet_id, user_id, text, ...}); texts grouped per user."""
    texts: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                user_id = str(obj["user_id"])
                text = str(obj.get("text") or "")
            except (json.JSONDecodeError, KeyError, TypeError):
                continue
            if user_id and text:
                texts.setdefault(user_id, []).append(text)
    return texts


def write_scores(path: str, probabilities: dict[str, float]) -> None:
    """Score file in the pipeline's import format, sorted by user_id."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SCORE_HEADER)
        for user_id in sorted(probabilities):
            writer.writerow([user_id, repr(float(probabilities[user_id]))])
