"""Bot scoring: a multilingual TF-IDF + random-forest baseline plus the
split/cross-validation/F1 evaluation harness and the score-file bridge.

The forest itself is scikit-learn (seeded, single-threaded); probabilities
are the fraction of trees voting Bot, averaged over a user's texts.
Tokenization, TF-IDF weighting, stratified splitting, cross-validation and
F1 are implemented here so their exact semantics (and their determinism
under a fixed seed) stay pinned.
"""

from __future__ import annotations

import csv
import logging
import math
import pickle
import random
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse
from sklearn.ensemble import RandomForestClassifier

from .errors import IngestError
from .records import DEFAULT_BOT_THRESHOLD, BotLabel, Label
from .util import derive_seed

log = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1
SCORE_CSV_HEADER = ["user_id", "bot_probability"]

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")
_WORD_RE = re.compile(r"\w+")

_URL_SENTINEL = ""
_USER_SENTINEL = ""

# scripts written without word separators: character n-grams instead of words
_NO_SPACE_RANGES = (
    (0x0E00, 0x0E7F),  # Thai
    (0x1100, 0x11FF),  # Hangul jamo
    (0x3040, 0x309F),  # Hiragana
    (0x30A0, 0x30FF),  # Katakana
    (0x3400, 0x4DBF),  # CJK extension A
    (0x4E00, 0x9FFF),  # CJK unified
    (0xAC00, 0xD7AF),  # Hangul syllables
    (0xF900, 0xFAFF),  # CJK compatibility
    (0x20000, 0x2FA1F),  # CJK extensions B+
)


def _is_no_space_script(ch: str) -> bool:
    cp = ord(ch)
    for lo, hi in _NO_SPACE_RANGES:
        if lo <= cp <= hi:
            return True
    return False


@dataclass(frozen=True)
class LabeledExample:
    text: str
    label: Label
    language: str = "und"

    def __post_init__(self):
        if not self.text:
            raise ValueError("text must be non-empty")


@dataclass
class BaselineModel:
    vocabulary: dict[str, int]
    idf: np.ndarray
    forest: RandomForestClassifier
    seed: int
    config: dict


def tokenize_multilingual(text: str) -> list[str]:
    """Lowercased word tokens; char 1-3-grams for no-space scripts;
    URLs and user mentions collapse to "<url>" / "<user>"."""
    text = _URL_RE.sub(f" {_URL_SENTINEL} ", text)
    text = _MENTION_RE.sub(f" {_USER_SENTINEL} ", text)
    text = text.casefold()
    tokens: list[str] = []
    word: list[str] = []
    run: list[str] = []

    def flush_word():
        if word:
            tokens.append("".join(word))
            word.clear()

    def flush_run():
        if run:
            s = "".join(run)
            for n in (1, 2, 3):
                for i in range(len(s) - n + 1):
                    tokens.append(s[i : i + n])
            run.clear()

    for ch in text:
        if ch == _URL_SENTINEL:
            flush_word(), flush_run()
            tokens.append("<url>")
        elif ch == _USER_SENTINEL:
            flush_word(), flush_run()
            tokens.append("<user>")
        elif _is_no_space_script(ch):
            flush_word()
            run.append(ch)
        elif _WORD_RE.fullmatch(ch):
            flush_run()
            word.append(ch)
        else:
            flush_word(), flush_run()
    flush_word(), flush_run()
    return tokens


def fit_tfidf(corpus: Sequence[str]) -> tuple[dict[str, int], np.ndarray]:
    """Vocabulary (sorted terms) and idf(t) = ln((1+N)/(1+df(t))) + 1."""
    if not corpus:
        raise ValueError("empty corpus")
    n_docs = len(corpus)
    df: dict[str, int] = {}
    for text in corpus:
        for term in set(tokenize_multilingual(text)):
            df[term] = df.get(term, 0) + 1
    if not df:
        raise ValueError("corpus yields no tokens")
    vocabulary = {term: i for i, term in enumerate(sorted(df))}
    idf = np.empty(len(vocabulary))
    for term, i in vocabulary.items():
        idf[i] = math.log((1 + n_docs) / (1 + df[term])) + 1.0
    return vocabulary, idf


def vectorize(
    texts: Sequence[str], vocabulary: dict[str, int], idf: np.ndarray
) -> sparse.csr_matrix:
    """L2-normalized tf-idf rows; out-of-vocabulary terms contribute nothing."""
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for text in texts:
        counts: dict[int, int] = {}
        for term in tokenize_multilingual(text):
            col = vocabulary.get(term)
            if col is not None:
                counts[col] = counts.get(col, 0) + 1
        row = sorted(counts)
        weights = np.array([counts[c] * idf[c] for c in row])
        norm = np.sqrt(np.sum(weights * weights))
        if norm > 0:
            weights /= norm
        indices.extend(row)
        data.extend(weights)
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.array(data), np.array(indices, dtype=np.int32), np.array(indptr, dtype=np.int32)),
        shape=(len(texts), len(vocabulary)),
    )


def train_baseline(
    data: Sequence[LabeledExample],
    seed: int,
    n_trees: int = 100,
    max_depth: int = 32,
) -> BaselineModel:
    """Seeded TF-IDF + random forest; identical (data, seed) gives identical bytes."""
    labels = {ex.label for ex in data}
    if labels != {Label.BOT, Label.HUMAN}:
        raise ValueError("training data must contain both classes")
    vocabulary, idf = fit_tfidf([ex.text for ex in data])
    x = vectorize([ex.text for ex in data], vocabulary, idf)
    y = np.array([1 if ex.label is Label.BOT else 0 for ex in data])
    forest = RandomForestClassifier(
        n_estimators=n_trees,
        max_depth=max_depth,
        max_features="sqrt",
        bootstrap=True,
        random_state=seed % (2**32),
        n_jobs=1,
    )
    forest.fit(x, y)
    return BaselineModel(
        vocabulary=vocabulary,
        idf=idf,
        forest=forest,
        seed=seed,
        config={"n_trees": n_trees, "max_depth": max_depth, "features_per_split": "sqrt"},
    )


def _vote_fractions(model: BaselineModel, x: sparse.csr_matrix) -> np.ndarray:
    """Per-row fraction of trees predicting Bot (class 1)."""
    votes = np.zeros(x.shape[0])
    classes = model.forest.classes_
    for tree in model.forest.estimators_:
        votes += classes[tree.predict(x).astype(np.intp)] == 1
    return votes / len(model.forest.estimators_)


def predict_probability(model: BaselineModel, user_texts: Sequence[str]) -> float:
    """Mean over the user's texts of the forest's Bot vote fraction."""
    if not user_texts:
        raise ValueError("no evidence: user has no texts")
    x = vectorize(user_texts, model.vocabulary, model.idf)
    return float(np.mean(_vote_fractions(model, x)))


def classify(probability: float, threshold: float = DEFAULT_BOT_THRESHOLD) -> Label:
    """Bot at or above the threshold (boundary inclusive)."""
    if not 0.0 <= probability <= 1.0:
        raise ValueError(f"probability out of [0,1]: {probability}")
    return Label.BOT if probability >= threshold else Label.HUMAN


def stratified_split(
    data: Sequence[LabeledExample], train_fraction: float = 0.8, seed: int = 0
) -> tuple[list[LabeledExample], list[LabeledExample]]:
    """Deterministic split keeping per-class proportions within one example."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    by_class: dict[Label, list[int]] = {Label.BOT: [], Label.HUMAN: []}
    for i, ex in enumerate(data):
        by_class[ex.label].append(i)
    rng = random.Random(derive_seed(seed, "stratified-split"))
    train_idx: list[int] = []
    test_idx: list[int] = []
    for label in (Label.BOT, Label.HUMAN):
        idx = by_class[label]
        if not idx:
            continue
        if len(idx) < 2:
            raise ValueError(f"class {label.value} has fewer than 2 examples")
        idx = idx[:]
        rng.shuffle(idx)
        n_train = int(train_fraction * len(idx) + 0.5)  # half rounds up
        n_train = min(max(n_train, 1), len(idx) - 1)
        train_idx.extend(idx[:n_train])
        test_idx.extend(idx[n_train:])
    train_idx.sort()
    test_idx.sort()
    return [data[i] for i in train_idx], [data[i] for i in test_idx]


def f1_score(truth: Sequence[Label], predicted: Sequence[Label]) -> float:
    """F1 with Bot as the positive class; 0 when precision + recall is 0."""
    if len(truth) != len(predicted):
        raise ValueError("truth and predicted must have equal length")
    if not truth:
        raise ValueError("empty label vectors")
    tp = fp = fn = 0
    for t, p in zip(truth, predicted):
        if p is Label.BOT and t is Label.BOT:
            tp += 1
        elif p is Label.BOT:
            fp += 1
        elif t is Label.BOT:
            fn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def cross_validate(
    data: Sequence[LabeledExample],
    k: int = 5,
    seed: int = 0,
    threshold: float = DEFAULT_BOT_THRESHOLD,
    n_trees: int = 100,
    max_depth: int = 32,
) -> tuple[float, float, list[float]]:
    """Stratified k-fold CV of the baseline; returns (mean F1, std F1, per-fold F1)."""
    if k < 2:
        raise ValueError("k must be at least 2")
    by_class: dict[Label, list[int]] = {Label.BOT: [], Label.HUMAN: []}
    for i, ex in enumerate(data):
        by_class[ex.label].append(i)
    for label, idx in by_class.items():
        if len(idx) < k:
            raise ValueError(f"class {label.value} has fewer than k={k} examples")
    rng = random.Random(derive_seed(seed, "cv-folds"))
    folds: list[list[int]] = [[] for _ in range(k)]
    for label in (Label.BOT, Label.HUMAN):
        idx = by_class[label][:]
        rng.shuffle(idx)
        for j, i in enumerate(idx):
            folds[j % k].append(i)
    scores: list[float] = []
    for fold_no, fold in enumerate(folds):
        test_set = set(fold)
        train = [data[i] for i in range(len(data)) if i not in test_set]
        test = [data[i] for i in sorted(test_set)]
        model = train_baseline(
            train, derive_seed(seed, "cv-fold", str(fold_no)), n_trees, max_depth
        )
        predicted = [
            classify(predict_probability(model, [ex.text]), threshold) for ex in test
        ]
        scores.append(f1_score([ex.label for ex in test], predicted))
    mean = sum(scores) / len(scores)
    std = math.sqrt(sum((s - mean) ** 2 for s in scores) / len(scores))
    return mean, std, scores


@dataclass
class ScoreImportResult:
    labels: list[BotLabel]
    rejected: int
    duplicates: int


def import_scores(path: str, threshold: float = DEFAULT_BOT_THRESHOLD) -> ScoreImportResult:
    """Read a user_id,bot_probability file; rows outside [0,1] are rejected."""
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise IngestError(f"cannot read score file {path}: {exc}") from exc
    by_user: dict[str, float] = {}
    rejected = duplicates = 0
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is not None and reader.fieldnames != SCORE_CSV_HEADER:
            raise IngestError(f"unexpected score header in {path}: {reader.fieldnames}")
        for row in reader:
            user_id = (row.get("user_id") or "").strip()
            try:
                probability = float(row.get("bot_probability") or "")
            except ValueError:
                rejected += 1
                continue
            if not user_id or not 0.0 <= probability <= 1.0 or math.isnan(probability):
                rejected += 1
                continue
            if user_id in by_user:
                duplicates += 1
                log.warning("duplicate score for %s: last row wins", user_id)
            by_user[user_id] = probability
    if not by_user:
        log.warning("score file %s contains no usable rows", path)
    labels = [
        BotLabel.from_probability(uid, prob, threshold) for uid, prob in by_user.items()
    ]
    return ScoreImportResult(labels, rejected, duplicates)


def write_scores(path: str, probabilities: dict[str, float]) -> None:
    """Write a score file sorted by user_id."""
    from .util import atomic_write

    with atomic_write(path, newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SCORE_CSV_HEADER)
        for user_id in sorted(probabilities):
            writer.writerow([user_id, repr(probabilities[user_id])])


def save_model(model: BaselineModel, path: str) -> None:
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "vocabulary": model.vocabulary,
        "idf": model.idf,
        "forest": model.forest,
        "seed": model.seed,
        "config": model.config,
    }
    from .util import atomic_write

    with atomic_write(path, "wb") as fh:
        fh.write(pickle.dumps(payload, protocol=4))


def load_model(path: str) -> BaselineModel:
    try:
        with open(path, "rb") as fh:
            payload = pickle.loads(fh.read())
    except OSError as exc:
        raise IngestError(f"cannot read model {path}: {exc}") from exc
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise IngestError(f"unsupported model format version: {version!r}")
    return BaselineModel(
        vocabulary=payload["vocabulary"],
        idf=payload["idf"],
        forest=payload["forest"],
        seed=payload["seed"],
        config=payload["config"],
    )
