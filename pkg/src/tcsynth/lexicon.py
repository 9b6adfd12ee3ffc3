"""Word lists: loading, deduplication, uniform sampling and subsampling."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ResourceError

logger = logging.getLogger(__name__)


class LexiconError(ResourceError):
    pass


@dataclass(frozen=True)
class Lexicon:
    words: tuple[str, ...]
    charset: frozenset[str]
    source_tags: tuple[str, ...] = ()
    # counts of lines dropped while loading, by reason
    dropped: dict[str, int] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if not self.words:
            raise LexiconError("lexicon is empty")
        if self.source_tags and len(self.source_tags) != len(self.words):
            raise LexiconError("source_tags must align with words")

    @classmethod
    def from_words(cls, words: Iterable[str], source_tags: Sequence[str] | None = None) -> "Lexicon":
        words = tuple(words)
        seen: set[str] = set()
        for w in words:
            if not w:
                raise LexiconError("empty word")
            if any(ch.isspace() for ch in w):
                raise LexiconError(f"word contains whitespace: {w!r}")
            if w in seen:
                raise LexiconError(f"duplicate word: {w!r}")
            seen.add(w)
        return cls(words, frozenset("".join(words)), tuple(source_tags or ()))

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: object) -> bool:
        return word in self._index

    @property
    def _index(self) -> frozenset[str]:
        # cached lazily; the dataclass is frozen so bypass __setattr__
        idx = self.__dict__.get("_word_set")
        if idx is None:
            idx = frozenset(self.words)
            object.__setattr__(self, "_word_set", idx)
        return idx

    def stats(self) -> dict[str, int]:
        return {"words": len(self.words), "characters": len(self.charset)}


def load_lexicon(paths: Sequence[str | Path]) -> Lexicon:
    """Read newline-delimited UTF-8 word files.

    Words are deduplicated keeping first-seen order across all files. Blank
    lines are skipped; lines with interior whitespace are skipped and counted
    under ``dropped["whitespace"]``. Each word is tagged with its file stem.
    """
    words: dict[str, str] = {}
    dropped = {"blank": 0, "duplicate": 0, "whitespace": 0}
    for p in paths:
        p = Path(p)
        try:
            raw = p.read_bytes()
        except OSError as e:
            raise LexiconError(f"cannot read word file {p}: {e}") from e
        if raw.startswith(b"\xef\xbb\xbf"):
            raw = raw[3:]
        for lineno, line in enumerate(raw.split(b"\n"), start=1):
            try:
                text = line.decode("utf-8")
            except UnicodeDecodeError as e:
                raise LexiconError(f"{p}:{lineno}: invalid UTF-8 ({e.reason})") from e
            w = text.strip()
            if not w:
                dropped["blank"] += 1
            elif any(ch.isspace() for ch in w):
                dropped["whitespace"] += 1
            elif w in words:
                dropped["duplicate"] += 1
            else:
                words[w] = p.stem
    if not words:
        raise LexiconError(f"no words loaded from {', '.join(map(str, paths))}")
    if dropped["whitespace"]:
        logger.warning("skipped %d lines containing interior whitespace", dropped["whitespace"])
    lex = Lexicon.from_words(words.keys(), list(words.values()))
    lex.dropped.update(dropped)
    return lex


def dump_lexicon(lexicon: Lexicon, path: str | Path) -> None:
    """Write the canonical word list; ``load_lexicon`` reads it back unchanged."""
    Path(path).write_text("".join(w + "\n" for w in lexicon.words), encoding="utf-8")


def sample_word(lexicon: Lexicon, rng: np.random.Generator) -> str:
    return lexicon.words[int(rng.integers(len(lexicon.words)))]


def subsample_words(lexicon: Lexicon, keep_fraction: float, rng: np.random.Generator) -> Lexicon:
    """Keep ``round(keep_fraction * len)`` words, chosen without replacement.

    Survivors stay in their original order.
    """
    if not 0 < keep_fraction <= 1:
        raise ValueError(f"keep_fraction must be in (0, 1], got {keep_fraction}")
    n = len(lexicon.words)
    if keep_fraction == 1:
        return lexicon
    k = math.floor(keep_fraction * n + 0.5)
    if k == 0:
        raise LexiconError(f"keeping {keep_fraction} of {n} words leaves none")
    keep = np.sort(rng.choice(n, size=k, replace=False))
    tags = [lexicon.source_tags[i] for i in keep] if lexicon.source_tags else None
    return Lexicon.from_words([lexicon.words[i] for i in keep], tags)
