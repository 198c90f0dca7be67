"""Access to the bundled wordlists (see data/README.md for provenance)."""

from __future__ import annotations

import functools
from importlib import resources


def load_wordlist(path) -> frozenset[str]:
    """Load a one-word-per-line file into a lowercase lookup set."""
    with open(path, "r", encoding="utf-8") as fh:
        return frozenset(w.strip().lower() for w in fh if w.strip())


def _bundled(name: str) -> frozenset[str]:
    text = resources.files("propdetect.data").joinpath(name).read_text("utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


@functools.lru_cache(maxsize=None)
def english_words() -> frozenset[str]:
    return _bundled("english_words.txt")


@functools.lru_cache(maxsize=None)
def russian_words() -> frozenset[str]:
    return _bundled("russian_words.txt")


@functools.lru_cache(maxsize=None)
def western_names() -> frozenset[str]:
    return _bundled("western_names.txt")
