"""Word-level SELFIES tokenizer and the masking transform for denoising."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyCorpus, IdOutOfRange, NothingToMask
from .selfies import split_selfies

PAD, BOS, EOS, MASK, UNK = 0, 1, 2, 3, 4
SPECIALS = ("<pad>", "<bos>", "<eos>", "<mask>", "<unk>")
SPECIAL_IDS = frozenset(range(len(SPECIALS)))


class Vocabulary:
    """Bijective token <-> id map with the five special tokens at 0..4."""

    def __init__(self, tokens: Sequence[str]):
        tokens = list(tokens)
        if tuple(tokens[: len(SPECIALS)]) != SPECIALS:
            raise ValueError("vocabulary must start with the special tokens")
        if len(set(tokens)) != len(tokens):
            raise ValueError("duplicate tokens in vocabulary")
        self.tokens = tuple(tokens)
        self.id_of = {tok: i for i, tok in enumerate(tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def __repr__(self) -> str:
        return f"Vocabulary(size={len(self)})"

    def save(self, path: str | Path) -> None:
        """One token per line; line number is the id."""
        Path(path).write_text("".join(t + "\n" for t in self.tokens), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        text = Path(path).read_text(encoding="utf-8")
        return cls(text.split("\n")[:-1] if text.endswith("\n") else text.split("\n"))


def _as_tokens(s: str | Sequence[str]) -> list[str]:
    return split_selfies(s) if isinstance(s, str) else list(s)


def build_vocab(corpus: Iterable[str | Sequence[str]]) -> Vocabulary:
    """Specials first, then every distinct corpus token in lexicographic order."""
    seen: set[str] = set()
    n = 0
    for s in corpus:
        n += 1
        seen.update(_as_tokens(s))
    if n == 0:
        raise EmptyCorpus("cannot build a vocabulary from an empty corpus")
    seen.difference_update(SPECIALS)
    return Vocabulary(SPECIALS + tuple(sorted(seen)))


def tokenize(s: str | Sequence[str], vocab: Vocabulary) -> list[int]:
    ids = [vocab.id_of.get(tok, UNK) for tok in _as_tokens(s)]
    return [BOS, *ids, EOS]


def detokenize(ids: Sequence[int], vocab: Vocabulary) -> list[str]:
    out = []
    for i in ids:
        i = int(i)
        if not 0 <= i < len(vocab):
            raise IdOutOfRange(f"id {i} outside vocabulary of size {len(vocab)}")
        if i not in SPECIAL_IDS:
            out.append(vocab.tokens[i])
    return out


def mask_count(maskable: int, ratio: float) -> int:
    """``max(1, round(ratio * maskable))`` with half-up rounding.

    The ratio is taken at its shortest decimal repr so 0.15 * 30 rounds to 5.
    """
    exact = Fraction(repr(float(ratio))) * maskable
    return max(1, math.floor(exact + Fraction(1, 2)))


@dataclass(frozen=True)
class MaskedBatch:
    source: tuple[int, ...]
    target: tuple[int, ...]
    mask_positions: tuple[int, ...]


def apply_masking(ids: Sequence[int], ratio: float, rng: np.random.Generator) -> MaskedBatch:
    """Replace a random subset of non-special positions with MASK.

    PAD/BOS/EOS are never chosen; UNK and ordinary tokens are.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"mask ratio must be in (0, 1), got {ratio}")
    ids = tuple(int(i) for i in ids)
    maskable = [p for p, t in enumerate(ids) if t not in (PAD, BOS, EOS)]
    if not maskable:
        raise NothingToMask("sequence has no maskable tokens")
    k = mask_count(len(maskable), ratio)
    chosen = rng.choice(len(maskable), size=k, replace=False)
    positions = tuple(sorted(maskable[c] for c in chosen))
    source = list(ids)
    for p in positions:
        source[p] = MASK
    return MaskedBatch(tuple(source), ids, positions)
