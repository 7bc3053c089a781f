"""Text preprocessing: language detection, normalization, sentence breaking,
tokenization and greedy dictionary mention extraction.

Every stage is a pure function of its inputs, so whole documents can be
processed in parallel without shared state.
"""

from __future__ import annotations

import html.entities
import json
import math
import re
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .kb import WORD_RE, EntityId, surface_key

MAX_MENTION_TOKENS = 6

#: Sentence terminators; the CJK and Arabic forms are harmless for languages
#: that never use them, so one shared set covers all supported languages.
_TERMINATORS = frozenset(".!?。！？؟")
#: Closing quotes and brackets pulled into the sentence after its terminator.
_TRAILERS = frozenset("'\")]}’”»")

_ENTITY_RE = re.compile(r"&(#x?[0-9a-fA-F]+|[a-zA-Z][a-zA-Z0-9]*);")


# ---------------------------------------------------------------------------
# Language detection: character trigram naive Bayes
# ---------------------------------------------------------------------------

PROFILE_FORMAT_VERSION = 1
_NGRAM_ORDER = 3
_WS_RE = re.compile(r"\s+")


def _gram_text(text: str) -> str:
    return " " + _WS_RE.sub(" ", text.casefold().strip()) + " "


def _count_grams(text: str) -> dict[str, int]:
    prepared = _gram_text(text)
    grams: dict[str, int] = {}
    for i in range(max(1, len(prepared) - _NGRAM_ORDER + 1)):
        gram = prepared[i : i + _NGRAM_ORDER]
        grams[gram] = grams.get(gram, 0) + 1
    return grams


@dataclass
class LanguageProfile:
    language: str
    grams: dict[str, int]
    total: int

    @classmethod
    def train(cls, language: str, sample: str) -> "LanguageProfile":
        if not sample.strip():
            raise ValueError(f"empty training sample for language {language!r}")
        grams = _count_grams(sample)
        return cls(language=language, grams=grams, total=sum(grams.values()))

    def save(self, path: str | Path) -> None:
        lines = [
            f"# language profile v{PROFILE_FORMAT_VERSION}",
            f"language\t{self.language}",
            f"total\t{self.total}",
        ]
        for gram in sorted(self.grams):
            lines.append(f"{json.dumps(gram)}\t{self.grams[gram]}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "LanguageProfile":
        path = Path(path)
        language = ""
        total = 0
        grams: dict[str, int] = {}
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            field, value = line.split("\t", 1)
            if field == "language":
                language = value
            elif field == "total":
                total = int(value)
            else:
                grams[json.loads(field)] = int(value)
        if not language or not grams:
            raise ValueError(f"{path}: not a language profile")
        return cls(language=language, grams=grams, total=total)


class LanguageDetector:
    """Naive Bayes over character trigrams with add-one smoothing."""

    def __init__(self, profiles: Iterable[LanguageProfile]):
        self._profiles = {p.language: p for p in profiles}
        if not self._profiles:
            raise ValueError("no language profiles loaded")
        # Add-one smoothing over the union vocabulary keeps unseen-gram mass
        # comparable across languages of different sample sizes.
        vocabulary = set()
        for profile in self._profiles.values():
            vocabulary.update(profile.grams)
        self._log_tables: dict[str, tuple[dict[str, float], float]] = {}
        for lang, profile in self._profiles.items():
            denom = profile.total + len(vocabulary) + 1
            table = {
                gram: math.log((count + 1) / denom)
                for gram, count in profile.grams.items()
            }
            self._log_tables[lang] = (table, math.log(1 / denom))

    @classmethod
    def train(cls, samples: Mapping[str, str]) -> "LanguageDetector":
        return cls(LanguageProfile.train(lang, text) for lang, text in samples.items())

    @classmethod
    def from_profile_dir(cls, directory: str | Path) -> "LanguageDetector":
        paths = sorted(Path(directory).glob("*.profile"))
        if not paths:
            raise ValueError(f"no .profile files in {directory}")
        return cls(LanguageProfile.load(p) for p in paths)

    def save_profiles(self, directory: str | Path) -> list[Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        for lang in sorted(self._profiles):
            path = directory / f"{lang}.profile"
            self._profiles[lang].save(path)
            written.append(path)
        return written

    @property
    def languages(self) -> tuple[str, ...]:
        return tuple(sorted(self._profiles))

    def detect(self, text: str) -> tuple[str, float]:
        """Most likely language and its normalized posterior probability."""
        if not text.strip():
            raise ValueError("cannot detect the language of empty text")
        grams = _count_grams(text)
        scores: dict[str, float] = {}
        for lang, (table, unseen) in self._log_tables.items():
            score = 0.0
            for gram, count in grams.items():
                score += count * table.get(gram, unseen)
            scores[lang] = score
        best = max(scores, key=lambda lang: (scores[lang], lang))
        peak = scores[best]
        denom = sum(math.exp(score - peak) for score in scores.values())
        return best, 1.0 / denom


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

@dataclass
class Normalized:
    """Normalized text plus per-character spans back into the original."""

    text: str
    src_start: list[int]
    src_end: list[int]

    def original_span(self, start: int, end: int) -> tuple[int, int]:
        if start >= end:
            pos = self.src_start[start] if start < len(self.src_start) else 0
            return pos, pos
        return self.src_start[start], self.src_end[end - 1]


def _decode_entity(match: re.Match) -> str | None:
    body = match.group(1)
    try:
        if body.startswith("#x") or body.startswith("#X"):
            return chr(int(body[2:], 16))
        if body.startswith("#"):
            return chr(int(body[1:]))
    except (ValueError, OverflowError):
        return None
    return html.entities.html5.get(body + ";")


def _strip_accents(ch: str) -> str:
    decomposed = unicodedata.normalize("NFD", ch)
    base = "".join(c for c in decomposed if not unicodedata.combining(c))
    return base if base else ch


def normalize(text: str, language: str) -> Normalized:
    """Resolve character entities; for English also replace non-ASCII
    punctuation with spaces and strip accents from letters.

    The returned offset arrays map every output character back to the span
    of original characters it came from, so downstream mention offsets can
    be reported against the raw input.
    """
    out: list[str] = []
    starts: list[int] = []
    ends: list[int] = []

    def emit(chars: str, start: int, end: int) -> None:
        for c in chars:
            out.append(c)
            starts.append(start)
            ends.append(end)

    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "&":
            match = _ENTITY_RE.match(text, i)
            if match:
                decoded = _decode_entity(match)
                if decoded is not None:
                    emit(decoded, i, match.end())
                    i = match.end()
                    continue
        if language == "en" and ord(ch) > 127:
            if unicodedata.category(ch).startswith("P"):
                emit(" ", i, i + 1)
                i += 1
                continue
            stripped = _strip_accents(ch)
            if stripped != ch:
                emit(stripped, i, i + 1)
                i += 1
                continue
        emit(ch, i, i + 1)
        i += 1
    return Normalized(text="".join(out), src_start=starts, src_end=ends)


# ---------------------------------------------------------------------------
# Sentence breaking
# ---------------------------------------------------------------------------

def load_abbreviations(path: str | Path) -> frozenset[str]:
    """One abbreviation per line (with its trailing period); # comments."""
    entries = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        entries.add(line.casefold())
    return frozenset(entries)


def default_abbreviations(language: str) -> frozenset[str]:
    """Abbreviation list shipped with the package; empty set when absent."""
    path = Path(__file__).parent / "data" / "abbrev" / f"{language}.txt"
    if not path.exists():
        return frozenset()
    return load_abbreviations(path)


def _is_number_period(text: str, i: int) -> bool:
    return (
        0 < i < len(text) - 1
        and text[i - 1].isdigit()
        and text[i + 1].isdigit()
    )


def _word_before_period(text: str, i: int) -> str:
    j = i
    while j > 0 and not text[j - 1].isspace():
        j -= 1
    word = text[j : i + 1]
    return word.lstrip("([{'\"‘“«")


def _ends_abbreviation(text: str, i: int, abbreviations: frozenset[str]) -> bool:
    word = _word_before_period(text, i)
    if word.casefold() in abbreviations:
        return True
    # Initials such as "J." in "J. Smith" do not end a sentence.
    return len(word) == 2 and word[0].isalpha() and word[0].isupper()


def break_sentences(
    text: str,
    language: str = "en",
    abbreviations: frozenset[str] | None = None,
) -> list[tuple[int, int]]:
    """Split normalized text into sentence spans (start, end).

    Terminators are . ! ? and their CJK/Arabic equivalents.  Periods inside
    numbers, after listed abbreviations and after single-letter initials do
    not break.  Spans exclude surrounding whitespace and jointly cover every
    non-whitespace character.
    """
    if abbreviations is None:
        abbreviations = default_abbreviations(language)
    n = len(text)
    spans: list[tuple[int, int]] = []

    def skip_ws(pos: int) -> int:
        while pos < n and text[pos].isspace():
            pos += 1
        return pos

    start = skip_ws(0)
    i = start
    while i < n:
        ch = text[i]
        if ch in _TERMINATORS:
            if ch == "." and (
                _is_number_period(text, i)
                or _ends_abbreviation(text, i, abbreviations)
            ):
                i += 1
                continue
            end = i + 1
            while end < n and text[end] in _TERMINATORS:
                end += 1
            while end < n and text[end] in _TRAILERS:
                end += 1
            if start < end:
                spans.append((start, end))
            start = skip_ws(end)
            i = max(end, start)
        else:
            i += 1
    if start < n:
        end = n
        while end > start and text[end - 1].isspace():
            end -= 1
        if start < end:
            spans.append((start, end))
    return spans


# ---------------------------------------------------------------------------
# Tokenization
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Token:
    """A maximal run of letters/digits with offsets into the normalized text."""

    text: str
    start: int
    end: int
    sentence: int


def tokenize(
    text: str, span: tuple[int, int] | None = None, sentence: int = 0
) -> list[Token]:
    """Tokens within one sentence span; punctuation is dropped but offsets
    stay faithful to the normalized text."""
    start, end = span if span is not None else (0, len(text))
    return [
        Token(text=m.group(), start=m.start(), end=m.end(), sentence=sentence)
        for m in WORD_RE.finditer(text, start, end)
    ]


# ---------------------------------------------------------------------------
# Mention extraction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Mention:
    """A dictionary-matched span of 1..6 tokens with its candidate entities."""

    surface: str
    token_start: int
    token_len: int
    sentence: int
    char_start: int
    char_end: int
    candidates: tuple[tuple[EntityId, float], ...]

    def prior_of(self, entity: EntityId) -> float:
        for candidate, prior in self.candidates:
            if candidate == entity:
                return prior
        raise ValueError(f"{entity} is not a candidate of mention {self.surface!r}")


def extract_mentions(
    tokens: list[Token],
    priors: Mapping[str, Mapping[str, tuple[tuple[EntityId, float], ...]]],
    language: str,
    token_offset: int = 0,
) -> list[Mention]:
    """Greedy left-to-right longest-match extraction over one sentence.

    At each position the longest n-gram (n from 6 down to 1) whose normalized
    surface is in the dictionary becomes a mention and its tokens are
    consumed, so mention spans never overlap.
    """
    table = priors.get(language)
    if not table or not tokens:
        return []
    mentions: list[Mention] = []
    keys = [surface_key(t.text) for t in tokens]
    i = 0
    n = len(tokens)
    while i < n:
        matched = False
        for length in range(min(MAX_MENTION_TOKENS, n - i), 0, -1):
            key = " ".join(k for k in keys[i : i + length] if k)
            candidates = table.get(key) if key else None
            if candidates:
                first, last = tokens[i], tokens[i + length - 1]
                mentions.append(
                    Mention(
                        surface=" ".join(t.text for t in tokens[i : i + length]),
                        token_start=token_offset + i,
                        token_len=length,
                        sentence=first.sentence,
                        char_start=first.start,
                        char_end=last.end,
                        candidates=candidates,
                    )
                )
                i += length
                matched = True
                break
        if not matched:
            i += 1
    return mentions
