"""Text normalization shared by the interpreter, catalog aliases, and embedder."""

from __future__ import annotations

import re

# Possessive suffixes are dropped before punctuation stripping so that
# "Richardson's" becomes "richardson" rather than "richardson s".
_POSSESSIVE = re.compile(r"'s\b")
# Tokens keep digits and internal hyphens ("7-5", "ob-lb", "man-to-man").
_TOKEN = re.compile(r"[a-z0-9]+(?:-[a-z0-9]+)*")

_ARTICLES = {"a", "an", "the"}


def tokenize(text: str) -> list[str]:
    """Lowercase tokens with punctuation stripped; empty input yields []."""
    lowered = text.lower().replace("’", "'")
    lowered = _POSSESSIVE.sub("", lowered)
    return _TOKEN.findall(lowered)


def normalize(text: str) -> str:
    """Canonical single-spaced form used for alias and pattern matching."""
    return " ".join(tokenize(text))


def strip_articles(text: str) -> str:
    tokens = [t for t in tokenize(text) if t not in _ARTICLES]
    return " ".join(tokens)
