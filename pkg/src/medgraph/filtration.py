"""Duplicate, redundancy, and language filtering for concept lists and
enrichment payloads."""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Protocol

from .ingest import Concept, ConceptSource, normalize


class Translator(Protocol):
    def translate(self, text: str) -> str | None: ...


class RejectionLog:
    """Collects rejected strings with reasons; serializes as JSON Lines."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.entries: list[dict[str, str]] = []

    def record(self, text: str, reason: str) -> None:
        with self._lock:
            self.entries.append({"text": text, "reason": reason})

    def write_jsonl(self, path: str | Path) -> None:
        lines = [json.dumps(entry, ensure_ascii=False) for entry in self.entries]
        Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


@dataclass
class FilterConfig:
    """Knobs for the filtration passes.

    include_list / exclude_list are normalized on construction and must be
    disjoint. A custom english_detector replaces the ASCII-letter-ratio
    heuristic when set.
    """

    fuzzy_threshold: float = 0.90
    include_list: tuple[str, ...] = ()
    exclude_list: tuple[str, ...] = ()
    english_letter_ratio: float = 0.70
    translator: Translator | None = None
    english_detector: Callable[[str], bool] | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.fuzzy_threshold <= 1.0:
            raise ValueError(f"fuzzy_threshold must be in [0, 1], got {self.fuzzy_threshold}")
        if not 0.0 <= self.english_letter_ratio <= 1.0:
            raise ValueError(
                f"english_letter_ratio must be in [0, 1], got {self.english_letter_ratio}"
            )
        self.include_list = _normalize_unique(self.include_list)
        self.exclude_list = _normalize_unique(self.exclude_list)
        overlap = set(self.include_list) & set(self.exclude_list)
        if overlap:
            raise ValueError(f"include_list and exclude_list overlap: {sorted(overlap)}")


def _normalize_unique(items: Iterable[str]) -> tuple[str, ...]:
    out: list[str] = []
    seen: set[str] = set()
    for item in items:
        norm = normalize(item)
        if norm and norm not in seen:
            seen.add(norm)
            out.append(norm)
    return tuple(out)


def dedup_exact(items: Iterable[str]) -> list[str]:
    """Drop case-insensitive duplicates, keeping the first occurrence."""
    seen: set[str] = set()
    out: list[str] = []
    for item in items:
        key = item.lower()
        if key not in seen:
            seen.add(key)
            out.append(item)
    return out


def levenshtein(a: str, b: str) -> int:
    """Classic edit distance (insert/delete/substitute all cost 1)."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ch_a in enumerate(a, 1):
        current = [i]
        append = current.append
        for j, ch_b in enumerate(b, 1):
            cost = 0 if ch_a == ch_b else 1
            append(min(previous[j] + 1, current[-1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[-1]


def similarity(a: str, b: str) -> float:
    """Normalized Levenshtein similarity on lowercased strings, in [0, 1]."""
    low_a, low_b = a.lower(), b.lower()
    longest = max(len(low_a), len(low_b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(low_a, low_b) / longest


def fuzzy_dedup(
    items: Iterable[str], threshold: float, log: RejectionLog | None = None
) -> list[str]:
    """Greedy left-to-right near-duplicate removal.

    An item is dropped when its similarity to ANY earlier input item reaches
    the threshold; comparing against all earlier items (kept or dropped) makes
    the kept set monotone in the threshold, which comparing against survivors
    only does not guarantee.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    entries = list(items)
    out: list[str] = []
    for idx, item in enumerate(entries):
        duplicate_of: str | None = None
        for prior in entries[:idx]:
            longest = max(len(item), len(prior))
            # levenshtein >= length difference, so this bound is safe to skip on
            if longest and 1.0 - abs(len(item) - len(prior)) / longest < threshold:
                continue
            if similarity(item, prior) >= threshold:
                duplicate_of = prior
                break
        if duplicate_of is None:
            out.append(item)
        elif log is not None:
            log.record(item, f"fuzzy_duplicate_of:{duplicate_of}")
    return out


def apply_lists(
    items: list[Concept], cfg: FilterConfig, log: RejectionLog | None = None
) -> list[Concept]:
    """Drop excluded concepts and append missing included ones (as user-given)."""
    excluded = set(cfg.exclude_list)
    out: list[Concept] = []
    for concept in items:
        if concept.normalized_text in excluded:
            if log is not None:
                log.record(concept.raw_text, "excluded")
        else:
            out.append(concept)
    present = {concept.normalized_text for concept in out}
    for include in cfg.include_list:
        if include not in present:
            present.add(include)
            out.append(Concept(include, ConceptSource.USER))
    return out


def _ascii_letter_ratio_ok(text: str, min_ratio: float) -> bool:
    letters = [ch for ch in text if ch.isalpha()]
    if not letters:
        # numerals/symbols pass here; empty ids are culled later by sanitization
        return True
    ascii_count = sum(1 for ch in letters if ch.isascii())
    return ascii_count / len(letters) >= min_ratio


_ENGLISH_STOPWORDS = frozenset(
    """a an and are as at be but by for from has have in is it its of on or
    that the this to was were will with""".split()
)


class EnglishStopwordDetector:
    """Stricter English check than the letter-ratio heuristic: text containing
    non-ASCII letters must also carry at least one English function word.

    Catches Latin-script Romance-language phrases the ratio heuristic passes.
    """

    def __init__(self, stopwords: frozenset[str] | None = None):
        self.stopwords = stopwords if stopwords is not None else _ENGLISH_STOPWORDS

    def __call__(self, text: str) -> bool:
        if all(ch.isascii() for ch in text if ch.isalpha()):
            return True
        tokens = re.findall(r"[^\W\d_]+", text.lower())
        return any(token in self.stopwords for token in tokens)


def filter_non_english(
    items: Iterable[str], cfg: FilterConfig, log: RejectionLog | None = None
) -> list[str]:
    """Keep English-looking strings; translate the rest when a translator is
    configured, otherwise drop them.

    Translator failures degrade to a drop, never an abort.
    """
    out: list[str] = []
    for item in items:
        if cfg.english_detector is not None:
            passes = cfg.english_detector(item)
        else:
            passes = _ascii_letter_ratio_ok(item, cfg.english_letter_ratio)
        if passes:
            out.append(item)
            continue
        if cfg.translator is not None:
            try:
                translated = cfg.translator.translate(item)
            except Exception:
                translated = None
            if translated:
                out.append(translated)
                continue
        if log is not None:
            log.record(item, "non_english")
    return out


def filter_concepts(
    concepts: list[Concept], cfg: FilterConfig, log: RejectionLog | None = None
) -> list[Concept]:
    """Concept-level filtration: exact dedup, fuzzy dedup, then
    include/exclude lists, keyed on normalized text throughout."""
    seen: set[str] = set()
    deduped: list[Concept] = []
    for concept in concepts:
        if concept.normalized_text not in seen:
            seen.add(concept.normalized_text)
            deduped.append(concept)
    survivors = set(
        fuzzy_dedup([c.normalized_text for c in deduped], cfg.fuzzy_threshold, log)
    )
    kept = [c for c in deduped if c.normalized_text in survivors]
    return apply_lists(kept, cfg, log)
