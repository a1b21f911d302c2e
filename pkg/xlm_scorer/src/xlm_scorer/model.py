"""Fine-tuning and scoring around a sequence-classification encoder.

The pretrained identifier may be a HuggingFace model id (the default is the
multilingual BERT the full-scale runs use) or a local directory.  For fully
offline work, init_tiny_pretrained() materializes a small randomly-initialized
encoder with a WordPiece tokenizer trained on the target corpus; fine-tuning
then proceeds identically from that directory.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np
import torch

from .data import Example

try:  # keep batch runs quiet; progress bars are noise in pipelines
    from transformers.utils import logging as hf_logging

    hf_logging.set_verbosity_error()
    hf_logging.disable_progress_bar()
except ImportError:  # pragma: no cover
    pass

DEFAULT_PRETRAINED = "google-bert/bert-base-multilingual-uncased"


@dataclass
class ScorerConfig:
    pretrained: str = DEFAULT_PRETRAINED
    epochs: int = 4
    batch_size: int = 16
    learning_rate: float = 5e-4
    seed: int = 42
    max_length: int = 64


def _seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)


def init_tiny_pretrained(
    out_dir: str,
    texts: list[str],
    vocab_size: int = 2000,
    hidden_size: int = 64,
    layers: int = 2,
    seed: int = 42,
) -> str:
    """Create a small random-init BERT with a corpus-trained WordPiece tokenizer."""
    from tokenizers import Tokenizer, models, normalizers, pre_tokenizers, processors, trainers
    from transformers import BertConfig, BertForSequenceClassification, PreTrainedTokenizerFast

    _seed_everything(seed)
    tokenizer = Tokenizer(models.WordPiece(unk_token="[UNK]"))
    tokenizer.normalizer = normalizers.Sequence(
        [normalizers.NFKD(), normalizers.StripAccents(), normalizers.Lowercase()]
    )
    tokenizer.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    trainer = trainers.WordPieceTrainer(
        vocab_size=vocab_size,
        special_tokens=["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"],
    )
    tokenizer.train_from_iterator(texts, trainer)
    cls_id = tokenizer.token_to_id("[CLS]")
    sep_id = tokenizer.token_to_id("[SEP]")
    tokenizer.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", cls_id), ("[SEP]", sep_id)],
    )
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tokenizer,
        unk_token="[UNK]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
    )
    config = BertConfig(
        vocab_size=fast.vocab_size,
        hidden_size=hidden_size,
        num_hidden_layers=layers,
        num_attention_heads=max(2, hidden_size // 32),
        intermediate_size=hidden_size * 2,
        max_position_embeddings=512,
        num_labels=2,
        pad_token_id=fast.pad_token_id,
    )
    model = BertForSequenceClassification(config)
    model.save_pretrained(out_dir)
    fast.save_pretrained(out_dir)
    return out_dir


def _load(pretrained: str):
    from transformers import AutoModelForSequenceClassification, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(pretrained)
    model = AutoModelForSequenceClassification.from_pretrained(pretrained, num_labels=2)
    return tokenizer, model


def _stratified_split(examples: list[Example], fraction: float, rng: random.Random):
    bots = [e for e in examples if e.is_bot]
    humans = [e for e in examples if not e.is_bot]
    rng.shuffle(bots)
    rng.shuffle(humans)
    n_bot = min(max(int(fraction * len(bots) + 0.5), 1), len(bots) - 1)
    n_human = min(max(int(fraction * len(humans) + 0.5), 1), len(humans) - 1)
    train = bots[:n_bot] + humans[:n_human]
    test = bots[n_bot:] + humans[n_human:]
    rng.shuffle(train)
    return train, test


def _batches(examples, tokenizer, batch_size, max_length):
    for start in range(0, len(examples), batch_size):
        chunk = examples[start : start + batch_size]
        encoded = tokenizer(
            [e.text for e in chunk],
            truncation=True,
            max_length=max_length,
            padding=True,
            return_tensors="pt",
        )
        labels = torch.tensor([1 if e.is_bot else 0 for e in chunk])
        yield encoded, labels


@dataclass
class EvalResult:
    accuracy: float
    f1: float
    n: int


def _evaluate(model, tokenizer, examples, config) -> EvalResult:
    model.eval()
    tp = fp = fn = correct = 0
    with torch.no_grad():
        for encoded, labels in _batches(examples, tokenizer, config.batch_size, config.max_length):
            logits = model(**encoded).logits
            predicted = logits.argmax(dim=-1)
            correct += int((predicted == labels).sum())
            tp += int(((predicted == 1) & (labels == 1)).sum())
            fp += int(((predicted == 1) & (labels == 0)).sum())
            fn += int(((predicted == 0) & (labels == 1)).sum())
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvalResult(correct / len(examples), f1, len(examples))


def finetune(examples: list[Example], config: ScorerConfig, out_dir: str) -> EvalResult:
    """Train the classification head (and encoder) on the labeled corpus.

    Holds out a stratified 20% for the printed evaluation; saves the
    checkpoint (model + tokenizer) to out_dir.
    """
    if not any(e.is_bot for e in examples) or all(e.is_bot for e in examples):
        raise ValueError("corpus must contain both bot and human examples")
    _seed_everything(config.seed)
    tokenizer, model = _load(config.pretrained)
    rng = random.Random(config.seed)
    train, test = _stratified_split(list(examples), 0.8, rng)
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate)
    loss_fn = torch.nn.CrossEntropyLoss()
    model.train()
    for epoch in range(config.epochs):
        rng.shuffle(train)
        for encoded, labels in _batches(train, tokenizer, config.batch_size, config.max_length):
            optimizer.zero_grad()
            logits = model(**encoded).logits
            loss = loss_fn(logits, labels)
            loss.backward()
            optimizer.step()
    result = _evaluate(model, tokenizer, test, config)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    return result


def score_texts(
    checkpoint: str, texts: list[str], batch_size: int = 32, max_length: int = 64
) -> list[float]:
    """Positive-class softmax probability per text."""
    tokenizer, model = _load(checkpoint)
    model.eval()
    out: list[float] = []
    with torch.no_grad():
        for start in range(0, len(texts), batch_size):
            chunk = texts[start : start + batch_size]
            encoded = tokenizer(
                chunk,
                truncation=True,
                max_length=max_length,
                padding=True,
                return_tensors="pt",
            )
            probs = torch.softmax(model(**encoded).logits, dim=-1)[:, 1]
            out.extend(float(p) for p in probs)
    return out


def emit_scores(
    checkpoint: str,
    user_texts: dict[str, list[str]],
    batch_size: int = 32,
    max_length: int = 64,
) -> dict[str, float]:
    """Per-user bot probability: positive-class softmax averaged over texts."""
    flat: list[str] = []
    owners: list[str] = []
    for user_id in sorted(user_texts):
        for text in user_texts[user_id]:
            flat.append(text)
            owners.append(user_id)
    if not flat:
        return {}
    probs = score_texts(checkpoint, flat, batch_size, max_length)
    totals: dict[str, list[float]] = {}
    for user_id, p in zip(owners, probs):
        totals.setdefault(user_id, []).append(p)
    return {uid: math.fsum(ps) / len(ps) for uid, ps in totals.items()}
