"""Knowledge pump: locate ``<TAG>...</TAG>`` regions and run a key structure over them.

Kept sentences come back with every keyword run wrapped in ``**``; sentences
that match no pattern are discarded and reported as byte ranges.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .elements import KnowledgeElement, dumps_elements
from .errors import NestedSameTag, UnbalancedTag
from .keystructure import KeyStructure
from .pnlu import SemanticHierarchy, build_hierarchy, extract_detailed, normalize_with_map

MARK = "**"
_TAGNAME = re.compile(r"^[A-Z][A-Z0-9_-]*$")


@dataclass(frozen=True)
class PumpSpec:
    tag: str
    ks: KeyStructure

    def __post_init__(self):
        tag = self.tag.strip().upper()
        if not _TAGNAME.match(tag):
            raise ValueError(f"bad tag name {self.tag!r}")
        object.__setattr__(self, "tag", tag)


@dataclass(frozen=True)
class Region:
    start: int  # char offsets of the content between the tags
    end: int


@dataclass
class PumpResult:
    marked_text: str = ""
    elements: list[KnowledgeElement] = field(default_factory=list)
    hierarchy: SemanticHierarchy = field(default_factory=SemanticHierarchy)
    discarded_spans: list[tuple[int, int]] = field(default_factory=list)

    def bold_runs(self) -> list[str]:
        return re.findall(r"\*\*(.+?)\*\*", self.marked_text, re.DOTALL)


def scan_tags(doc: str, tag: str) -> list[Region]:
    tag = tag.strip().upper()
    regions = []
    open_at: int | None = None
    for m in re.finditer(rf"<(/?){re.escape(tag)}>", doc):
        if m.group(1):
            if open_at is None:
                raise UnbalancedTag(f"</{tag}> at {m.start()} without opening tag")
            regions.append(Region(open_at, m.start()))
            open_at = None
        else:
            if open_at is not None:
                raise NestedSameTag(f"<{tag}> at {m.start()} nested inside another <{tag}>")
            open_at = m.end()
    if open_at is not None:
        raise UnbalancedTag(f"<{tag}> opened but never closed")
    return regions


def mark_sentence(sentence: str, keyword_spans) -> str:
    _, index = normalize_with_map(sentence)
    out = []
    pos = 0
    for a, b in keyword_spans:
        oa, ob = index[a], index[b - 1] + 1
        out.append(sentence[pos:oa])
        out.append(MARK + sentence[oa:ob] + MARK)
        pos = ob
    out.append(sentence[pos:])
    return "".join(out)


def strip_marks(text: str) -> str:
    return text.replace(MARK, "")


def _byte_len(s: str) -> int:
    return len(s.encode("utf-8"))


def pump(doc: str, spec: PumpSpec, doc_id: str, *, timestamp: int = 0, reliability: int = 0) -> PumpResult:
    result = PumpResult()
    region_texts = []
    for r_no, region in enumerate(scan_tags(doc, spec.tag)):
        text = doc[region.start:region.end]
        base = _byte_len(doc[: region.start])
        ex = extract_detailed(
            spec.ks, text, doc_id,
            region=r_no, byte_offset=base, timestamp=timestamp, reliability=reliability,
        )
        result.elements.extend(ex.elements)
        kept = []
        cursor = base
        for s, m in zip(ex.sentences, ex.matches):
            if m is None:
                continue
            s0 = base + _byte_len(text[: s.start])
            if s0 > cursor:
                result.discarded_spans.append((cursor, s0))
            cursor = s0 + _byte_len(s.text)
            kept.append(mark_sentence(s.text, m.keyword_spans))
        end = base + _byte_len(text)
        if end > cursor:
            result.discarded_spans.append((cursor, end))
        if kept:
            region_texts.append(" ".join(kept))
    result.marked_text = "\n".join(region_texts)
    result.hierarchy = build_hierarchy(result.elements)
    return result


def write_outputs(result: PumpResult, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "marked.txt").write_text(result.marked_text + "\n", encoding="utf-8")
    (out / "elements.kel").write_text(dumps_elements(result.elements), encoding="utf-8")
    (out / "hierarchy.txt").write_text(result.hierarchy.render(), encoding="utf-8")
