"""Sentence segmentation and key-structure matching.

Matching works on the whitespace-normalized sentence. Keywords match
case-insensitively at token boundaries (preceded by start or a space, followed
by end or a space). Every slot captures at least one non-space character, and
among all placements the leftmost one wins: the first keyword as early as
possible, then the second, and so on. Patterns anchor the whole sentence; a
trailing keyword that itself ends in the terminator (``etc.``) consumes it.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

from .elements import KnowledgeElement, Source
from .keystructure import KeyStructure, Keyword, SentencePattern, Slot

TERMINATORS = ".?!"
_BOUNDARY = re.compile(r"[.?!](?=\s|$)|\n[ \t\r\f\v]*\n")


@dataclass(frozen=True)
class Sentence:
    text: str
    start: int  # char offsets into the segmented text
    end: int


def segment(text: str) -> list[Sentence]:
    out = []
    pos = 0
    for m in _BOUNDARY.finditer(text):
        cut = m.end() if m.group().strip() else m.start()
        _emit(text, pos, cut, out)
        pos = m.end()
    _emit(text, pos, len(text), out)
    return out


def _emit(text: str, a: int, b: int, out: list) -> None:
    chunk = text[a:b]
    stripped = chunk.strip()
    if not stripped:
        return
    lead = len(chunk) - len(chunk.lstrip())
    start = a + lead
    out.append(Sentence(stripped, start, start + len(stripped)))


def normalize_with_map(text: str) -> tuple[str, list[int]]:
    """Collapse whitespace runs to one space and strip; return index map norm -> original."""
    chars: list[str] = []
    index: list[int] = []
    pending_space = False
    for i, ch in enumerate(text):
        if ch.isspace():
            pending_space = bool(chars)
            continue
        if pending_space:
            chars.append(" ")
            index.append(i - 1)
            pending_space = False
        chars.append(ch)
        index.append(i)
    return "".join(chars), index


@dataclass(frozen=True)
class Match:
    pattern: SentencePattern
    sentence: str  # normalized
    captures: tuple[tuple[str, str], ...]  # role -> span, slot order
    capture_spans: tuple[tuple[int, int], ...]
    keyword_spans: tuple[tuple[int, int], ...]  # into the normalized sentence
    terminator: str  # text after the match (" ." etc.); "" when absent or consumed

    def reconstruct(self) -> str:
        parts = []
        caps = iter(self.captures)
        kws = iter(self.keyword_spans)
        for tok in self.pattern.tokens:
            if isinstance(tok, Slot):
                parts.append(next(caps)[1])
            else:
                a, b = next(kws)
                parts.append(self.sentence[a:b])
        return " ".join(parts) + self.terminator


def _ends_with_terminator_keyword(p: SentencePattern) -> bool:
    last = p.tokens[-1]
    return isinstance(last, Keyword) and last.text[-1] in TERMINATORS


@lru_cache(maxsize=4096)
def _compile(p: SentencePattern) -> re.Pattern:
    parts = []
    for tok in p.tokens:
        if isinstance(tok, Slot):
            parts.append("(.+?)")
        else:
            parts.append("(" + re.escape(tok.text) + ")")
    return re.compile("^" + " ".join(parts) + "$", re.IGNORECASE | re.DOTALL)


def match_pattern(p: SentencePattern, sentence: str) -> Match | None:
    norm, _ = normalize_with_map(sentence)
    return _match_norm(p, norm)


def _match_norm(p: SentencePattern, norm: str) -> Match | None:
    terminator = norm[-1] if norm and norm[-1] in TERMINATORS else ""
    if terminator and _ends_with_terminator_keyword(p):
        target = norm
    else:
        target = norm[: len(norm) - len(terminator)].rstrip()
    terminator = norm[len(target):]
    m = _compile(p).match(target)
    if m is None:
        return None
    captures, cap_spans, kw_spans = [], [], []
    for i, tok in enumerate(p.tokens, 1):
        span = m.span(i)
        if isinstance(tok, Slot):
            captures.append((p.role_of(tok.ordinal), m.group(i)))
            cap_spans.append(span)
        else:
            kw_spans.append(span)
    return Match(p, norm, tuple(captures), tuple(cap_spans), tuple(kw_spans), terminator)


def best_match(ks: KeyStructure, sentence: str) -> Match | None:
    """Heaviest matching pattern by keyword characters; declaration order breaks ties."""
    norm, _ = normalize_with_map(sentence)
    best = None
    for p in ks.patterns:
        if best is not None and p.keyword_weight <= best.pattern.keyword_weight:
            continue
        m = _match_norm(p, norm)
        if m is not None:
            best = m
    return best


def element_from_match(
    m: Match,
    id: str,
    sources: Sequence[Source] = (),
    timestamp: int = 0,
    reliability: int = 0,
) -> KnowledgeElement:
    return KnowledgeElement(
        id=id,
        pragmatics=m.pattern.construct,
        bindings=m.captures,
        pattern_id=m.pattern.id,
        sources=tuple(sources),
        timestamp=timestamp,
        reliability=reliability,
    )


def match_sentence(ks: KeyStructure, sentence: str, id: str = "s0", **kw) -> KnowledgeElement | None:
    m = best_match(ks, sentence)
    return None if m is None else element_from_match(m, id, **kw)


@dataclass(frozen=True)
class SemanticHierarchy:
    groups: tuple[tuple[str, tuple[KnowledgeElement, ...]], ...] = ()

    def __len__(self) -> int:
        return len(self.groups)

    def tags(self) -> list[str]:
        return [t for t, _ in self.groups]

    def group(self, tag: str) -> tuple[KnowledgeElement, ...]:
        return dict(self.groups).get(tag, ())

    def render(self) -> str:
        return "".join(
            f"{tag}: {' '.join(e.id for e in elems)}\n" for tag, elems in self.groups
        )


def build_hierarchy(elements: Iterable[KnowledgeElement]) -> SemanticHierarchy:
    groups: dict[str, list[KnowledgeElement]] = {}
    for e in elements:
        groups.setdefault(e.pragmatics, []).append(e)
    return SemanticHierarchy(tuple((t, tuple(es)) for t, es in groups.items()))


@dataclass
class Extraction:
    """Per-sentence detail kept for the pump (marking and discard accounting)."""

    sentences: list[Sentence] = field(default_factory=list)
    matches: list[Match | None] = field(default_factory=list)
    elements: list[KnowledgeElement] = field(default_factory=list)


def extract_detailed(
    ks: KeyStructure,
    text: str,
    doc_id: str,
    *,
    region: int | None = None,
    byte_offset: int = 0,
    timestamp: int = 0,
    reliability: int = 0,
) -> Extraction:
    out = Extraction()
    out.sentences = segment(text)
    for i, s in enumerate(out.sentences):
        m = best_match(ks, s.text)
        out.matches.append(m)
        if m is None:
            continue
        eid = f"{doc_id}#{i}" if region is None else f"{doc_id}#{region}#{i}"
        b0 = byte_offset + len(text[: s.start].encode("utf-8"))
        src = Source(doc_id, i, b0, b0 + len(s.text.encode("utf-8")))
        out.elements.append(element_from_match(m, eid, (src,), timestamp, reliability))
    return out


def extract(
    ks: KeyStructure, text: str, doc_id: str, **kw
) -> tuple[list[KnowledgeElement], SemanticHierarchy]:
    elements = extract_detailed(ks, text, doc_id, **kw).elements
    return elements, build_hierarchy(elements)
