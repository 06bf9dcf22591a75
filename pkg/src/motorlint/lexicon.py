"""Closure lexicon and whole-token text matching."""
from __future__ import annotations

import os
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable

_TOKEN_SPLIT = re.compile(r"[\W_]+", re.UNICODE)

INITIAL_WORDS = ("close", "cancel", "dismiss", "done", "ok", "finish", "return")
EXPANDED_WORDS = ("deny", "allow", "exit", "end", "terminate", "quit", "back", "stop", "ignore",
                  "proceed", "save", "apply", "submit", "confirm", "abort", "decline", "reject")


def normalize_tokens(text: str | None) -> list[str]:
    """Lowercase and split on anything that is not a letter or digit."""
    if not text:
        return []
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


def _read_words(lines: Iterable[str]) -> list[str]:
    words = []
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if line:
            words.extend(normalize_tokens(line))
    return words


@dataclass(frozen=True)
class ClosureLexicon:
    words: frozenset[str]

    def __contains__(self, word: str) -> bool:
        return word in self.words

    def __len__(self) -> int:
        return len(self.words)

    def extended(self, extra: Iterable[str]) -> ClosureLexicon:
        """A new lexicon with ``extra`` (raw strings, normalized here) merged in."""
        return ClosureLexicon(self.words | frozenset(_read_words(extra)))

    def extended_from_file(self, path: str | os.PathLike) -> ClosureLexicon:
        """Merge a one-word-per-line file; ``#`` starts a comment."""
        return self.extended(Path(path).read_text(encoding="utf-8").splitlines())


def default_lexicon() -> ClosureLexicon:
    text = resources.files("motorlint").joinpath("data/closure_words.txt").read_text(encoding="utf-8")
    return ClosureLexicon(frozenset(_read_words(text.splitlines())))


def match_closure(tokens: Iterable[str], lex: ClosureLexicon) -> str | None:
    """First token that is a lexicon word, or None."""
    for t in tokens:
        if t in lex.words:
            return t
    return None


__all__ = ["ClosureLexicon", "EXPANDED_WORDS", "INITIAL_WORDS", "default_lexicon",
           "match_closure", "normalize_tokens"]
