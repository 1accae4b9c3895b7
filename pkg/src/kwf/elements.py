"""Knowledge elements and their line serialization (``kel-1``).

One element per line::

    elem <id> <pragmatics> <pattern_id> <src>[,<src>...] t=<timestamp> r=<reliability> | role=«span» | ...

where ``<src>`` is ``<doc>:<sentence#>/<start>-<end>`` (UTF-8 byte range in the
source document). Inside a span ``\\``, ``«``, ``»`` and newline are escaped as
``\\\\``, ``\\«``, ``\\»`` and ``\\n``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .errors import FormatError

FORMAT_ID = "kel-1"
_BAD_ID = re.compile(r"[\s,|«»]")


@dataclass(frozen=True, order=True)
class Source:
    doc: str
    sentence: int
    start: int
    end: int

    def render(self) -> str:
        return f"{self.doc}:{self.sentence}/{self.start}-{self.end}"

    @classmethod
    def parse(cls, text: str) -> "Source":
        try:
            head, rng = text.rsplit("/", 1)
            doc, sent = head.rsplit(":", 1)
            start, end = rng.split("-")
            return cls(doc, int(sent), int(start), int(end))
        except ValueError as exc:
            raise FormatError(f"bad source {text!r}") from exc


@dataclass(frozen=True)
class KnowledgeElement:
    id: str
    pragmatics: str
    bindings: tuple[tuple[str, str], ...]
    pattern_id: str
    sources: tuple[Source, ...] = ()
    timestamp: int = 0
    reliability: int = 0

    def __post_init__(self):
        for name in (self.id, self.pragmatics, self.pattern_id):
            if not name or _BAD_ID.search(name):
                raise ValueError(f"bad identifier {name!r}")

    @property
    def roles(self) -> tuple[str, ...]:
        return tuple(r for r, _ in self.bindings)

    def get(self, role: str, default: str | None = None) -> str | None:
        for r, v in self.bindings:
            if r == role:
                return v
        return default

    @property
    def key_role(self) -> str | None:
        return key_role_for(self.roles)

    @property
    def key(self) -> str | None:
        """Normalized key-role value (casefolded, whitespace collapsed)."""
        role = self.key_role
        return None if role is None else norm_key(self.get(role))

    def content(self) -> tuple:
        """Identity modulo provenance: what dedup and round trips compare."""
        return (self.pragmatics, tuple(sorted(self.bindings)))

    @property
    def source(self) -> Source | None:
        return self.sources[0] if self.sources else None

    def with_bindings(self, bindings: Iterable[tuple[str, str]]) -> "KnowledgeElement":
        return replace(self, bindings=tuple(bindings))


def key_role_for(roles: Sequence[str]) -> str | None:
    if "concept" in roles:
        return "concept"
    if "subject" in roles:
        return "subject"
    return roles[0] if roles else None


def norm_key(text: str) -> str:
    return " ".join(text.split()).casefold()


def _escape(span: str) -> str:
    return (
        span.replace("\\", "\\\\")
        .replace("«", "\\«")
        .replace("»", "\\»")
        .replace("\n", "\\n")
    )


def _unescape(span: str) -> str:
    out = []
    it = iter(span)
    for ch in it:
        if ch == "\\":
            nxt = next(it, "")
            out.append("\n" if nxt == "n" else nxt)
        else:
            out.append(ch)
    return "".join(out)


def dumps_element(e: KnowledgeElement) -> str:
    srcs = ",".join(s.render() for s in e.sources) or "-"
    head = f"elem {e.id} {e.pragmatics} {e.pattern_id} {srcs} t={e.timestamp} r={e.reliability}"
    parts = [head] + [f"{r}=«{_escape(v)}»" for r, v in e.bindings]
    return " | ".join(parts)


_BINDING = re.compile(r" \| ([A-Za-z_][A-Za-z0-9_]*)=«((?:[^\\»]|\\.)*)»")


def loads_element(line: str) -> KnowledgeElement:
    line = line.rstrip("\n")
    head, sep, _ = line.partition(" | ")
    words = head.split(" ")
    if len(words) != 7 or words[0] != "elem":
        raise FormatError(f"bad element header {head!r}")
    _, eid, prag, pid, srcs, ts, rel = words
    if not (ts.startswith("t=") and rel.startswith("r=")):
        raise FormatError(f"bad element header {head!r}")
    rest = line[len(head):]
    bindings = []
    pos = 0
    while pos < len(rest):
        m = _BINDING.match(rest, pos)
        if not m:
            raise FormatError(f"bad binding near {rest[pos:pos + 30]!r}")
        bindings.append((m.group(1), _unescape(m.group(2))))
        pos = m.end()
    sources = () if srcs == "-" else tuple(Source.parse(s) for s in srcs.split(","))
    try:
        return KnowledgeElement(
            id=eid,
            pragmatics=prag,
            bindings=tuple(bindings),
            pattern_id=pid,
            sources=sources,
            timestamp=int(ts[2:]),
            reliability=int(rel[2:]),
        )
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def dumps_elements(elements: Iterable[KnowledgeElement]) -> str:
    return "".join(dumps_element(e) + "\n" for e in elements)


def loads_elements(text: str) -> list[KnowledgeElement]:
    return [loads_element(l) for l in text.splitlines() if l.strip() and not l.startswith("#")]
