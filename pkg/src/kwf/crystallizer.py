"""Magma (element store), requirement-driven crystals, renewal, and the two query forms."""
from __future__ import annotations

import threading
import time
from dataclasses import dataclass, replace
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence
from urllib.parse import quote, unquote

from .elements import KnowledgeElement, dumps_element, loads_element, norm_key
from .errors import DuplicateId, EmptyCrystal, FormatError, RequirementViolation


class Magma:
    """Append-log of elements with a key index.

    Elements with identical content (pragmatics + bindings) collapse into the
    first one, which accumulates the later sources. When ``path`` is set every
    ingested element is appended there as a ``kel-1`` line, so loading is replay.
    """

    def __init__(self, path: str | Path | None = None):
        self.elements: list[KnowledgeElement] = []
        self.index: dict[str, list[str]] = {}
        self._pos: dict[str, int] = {}
        self._by_content: dict[tuple, int] = {}
        self._seen_ids: set[str] = set()
        self._lock = threading.Lock()
        self.path = Path(path) if path is not None else None

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(list(self.elements))

    def get(self, element_id: str) -> KnowledgeElement:
        return self.elements[self._pos[element_id]]

    def ingest(self, elements: Iterable[KnowledgeElement]) -> "Magma":
        elements = list(elements)
        with self._lock:
            batch = set()
            for e in elements:
                if e.id in self._seen_ids or e.id in batch:
                    raise DuplicateId(f"element id {e.id!r} already in magma")
                batch.add(e.id)
            lines = []
            for e in elements:
                self._seen_ids.add(e.id)
                lines.append(dumps_element(e) + "\n")
                content = e.content()
                if content in self._by_content:
                    i = self._by_content[content]
                    old = self.elements[i]
                    merged = old.sources + tuple(s for s in e.sources if s not in old.sources)
                    self.elements[i] = replace(old, sources=merged)
                    continue
                self._by_content[content] = len(self.elements)
                self._pos[e.id] = len(self.elements)
                self.elements.append(e)
                if e.key is not None:
                    self.index.setdefault(e.key, []).append(e.id)
            if self.path is not None and lines:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.writelines(lines)
        return self

    def lookup(self, key: str) -> list[KnowledgeElement]:
        return [self.get(i) for i in self.index.get(norm_key(key), [])]

    def dumps_index(self) -> str:
        return "".join(f"{k}\t{' '.join(ids)}\n" for k, ids in sorted(self.index.items()))

    def save_index(self) -> Path:
        assert self.path is not None
        idx = self.path.with_suffix(".idx")
        idx.write_text(self.dumps_index(), encoding="utf-8")
        return idx

    @classmethod
    def load(cls, path: str | Path) -> "Magma":
        path = Path(path)
        raw = path.read_text(encoding="utf-8") if path.exists() else ""
        m = cls()
        m.ingest(loads_element(l) for l in raw.splitlines() if l.strip())
        m.path = path
        return m


def ingest(magma: Magma, elements: Iterable[KnowledgeElement]) -> Magma:
    return magma.ingest(elements)


# -- conflicts ----------------------------------------------------------------

def _rest(e: KnowledgeElement) -> tuple:
    role = e.key_role
    return tuple(sorted((r, v) for r, v in e.bindings if r != role))


def conflicting(a: KnowledgeElement, b: KnowledgeElement) -> bool:
    return (
        a.key is not None
        and a.pragmatics == b.pragmatics
        and a.key_role == b.key_role
        and a.key == b.key
        and _rest(a) != _rest(b)
    )


def detect_conflicts(source: Magma | Iterable[KnowledgeElement]) -> list[tuple[KnowledgeElement, KnowledgeElement]]:
    groups: dict[tuple, list[KnowledgeElement]] = {}
    for e in source:
        if e.key is not None:
            groups.setdefault((e.pragmatics, e.key_role, e.key), []).append(e)
    out = []
    for members in groups.values():
        for a, b in combinations(members, 2):
            if _rest(a) != _rest(b):
                out.append((a, b))
    return out


def resolve(elements: Sequence[KnowledgeElement]) -> list[KnowledgeElement]:
    """Keep the most dependable element per (pragmatics, key); input order is preserved.

    Dependability is (reliability, timestamp); a later position wins exact ties.
    Elements without a key role are never in conflict and always kept.
    """
    winners: dict[tuple, tuple] = {}
    for pos, e in enumerate(elements):
        if e.key is None:
            continue
        g = (e.pragmatics, e.key_role, e.key)
        rank = (e.reliability, e.timestamp, pos)
        if g not in winners or rank > winners[g]:
            winners[g] = rank
    keep = {rank[2] for rank in winners.values()}
    return [e for pos, e in enumerate(elements) if e.key is None or pos in keep]


# -- requirements and crystals --------------------------------------------------

@dataclass(frozen=True)
class SubjectFilter:
    value: str
    prefix: bool = False

    def admits(self, key: str | None) -> bool:
        if key is None:
            return False
        v = norm_key(self.value)
        return key.startswith(v) if self.prefix else key == v

    def render(self) -> str:
        return ("prefix:" if self.prefix else "exact:") + quote(self.value, safe="")

    @classmethod
    def parse(cls, text: str) -> "SubjectFilter":
        kind, _, value = text.partition(":")
        if kind not in ("exact", "prefix"):
            raise FormatError(f"bad subject filter {text!r}")
        return cls(unquote(value), kind == "prefix")


@dataclass(frozen=True)
class Requirement:
    pragmatics: frozenset[str] | None = None
    subjects: tuple[SubjectFilter, ...] = ()
    sources: frozenset[str] | None = None

    def __post_init__(self):
        if self.pragmatics is None and not self.subjects and self.sources is None:
            raise ValueError("a requirement needs at least one criterion")
        if self.pragmatics is not None:
            object.__setattr__(self, "pragmatics", frozenset(self.pragmatics))
        if self.sources is not None:
            object.__setattr__(self, "sources", frozenset(self.sources))

    def admits(self, e: KnowledgeElement) -> bool:
        if self.pragmatics is not None and e.pragmatics not in self.pragmatics:
            return False
        if self.subjects and not any(f.admits(e.key) for f in self.subjects):
            return False
        if self.sources is not None and not any(s.doc in self.sources for s in e.sources):
            return False
        return True

    def render(self) -> str:
        parts = ["require"]
        if self.pragmatics is not None:
            parts.append("pragmatics=" + ",".join(sorted(self.pragmatics)))
        if self.subjects:
            parts.append("subject=" + "|".join(f.render() for f in self.subjects))
        if self.sources is not None:
            parts.append("source=" + ",".join(sorted(self.sources)))
        return " ".join(parts)

    @classmethod
    def parse(cls, line: str) -> "Requirement":
        words = line.split()
        if not words or words[0] != "require":
            raise FormatError(f"bad requirement line {line!r}")
        kw: dict = {}
        for w in words[1:]:
            key, _, value = w.partition("=")
            items = [v for v in value.split(",") if v]
            if key == "pragmatics":
                kw["pragmatics"] = frozenset(items)
            elif key == "source":
                kw["sources"] = frozenset(items)
            elif key == "subject":
                kw["subjects"] = tuple(SubjectFilter.parse(v) for v in value.split("|"))
            else:
                raise FormatError(f"unknown requirement field {key!r}")
        try:
            return cls(**kw)
        except ValueError as exc:
            raise FormatError(str(exc)) from exc


@dataclass(frozen=True)
class Crystal:
    domain: str
    elements: tuple[KnowledgeElement, ...]
    requirement: Requirement
    formed_at: int = 0
    version: int = 1

    def __len__(self) -> int:
        return len(self.elements)


def crystallize(magma: Magma | Iterable[KnowledgeElement], req: Requirement, domain: str,
                formed_at: int | None = None) -> Crystal:
    chosen = resolve([e for e in magma if req.admits(e)])
    if not chosen:
        raise EmptyCrystal(f"no element satisfies the requirement for domain {domain!r}")
    when = int(time.time()) if formed_at is None else formed_at
    return Crystal(domain, tuple(chosen), req, when, 1)


def renew(crystal: Crystal, new: Iterable[KnowledgeElement], now: int | None = None) -> Crystal:
    """Fold new elements in; superseded ones drop out. Version bumps only on change."""
    new = list(new)
    for e in new:
        if not crystal.requirement.admits(e):
            raise RequirementViolation(f"element {e.id!r} is outside the crystal requirement")
    have = {e.content() for e in crystal.elements}
    fresh = []
    for e in new:
        if e.content() not in have:
            have.add(e.content())
            fresh.append(e)
    if not fresh:
        return crystal
    updated = resolve(list(crystal.elements) + fresh)
    if {e.content() for e in updated} == {e.content() for e in crystal.elements}:
        return crystal
    when = int(time.time()) if now is None else now
    return replace(crystal, elements=tuple(updated), version=crystal.version + 1, formed_at=when)


def query_define(crystal: Crystal, concept: str) -> list[KnowledgeElement]:
    want = norm_key(concept)
    out = []
    for e in crystal.elements:
        value = e.get("concept")
        if value is None:
            value = e.get("subject")
        if value is not None and norm_key(value) == want:
            out.append(e)
    return out


def query_name(crystal: Crystal, condition: str, father: str) -> list[str]:
    cond, fath = norm_key(condition), norm_key(father)
    out = []
    for e in crystal.elements:
        if e.pragmatics != "concept-definition":
            continue
        c, f, name = e.get("condition"), e.get("father_concept"), e.get("concept")
        if c is None or f is None or name is None:
            continue
        if norm_key(c) == cond and norm_key(f) == fath:
            out.append(name)
    return out


# -- .kcr serialization ---------------------------------------------------------

def dumps_crystal(c: Crystal) -> str:
    lines = [f"crystal {c.domain} {c.version} {c.formed_at}", c.requirement.render()]
    lines += [dumps_element(e) for e in c.elements]
    return "\n".join(lines) + "\n"


def loads_crystal(text: str) -> Crystal:
    lines = text.splitlines()
    if len(lines) < 2:
        raise FormatError("crystal text needs a header and a requirement line")
    head = lines[0].split(" ")
    if len(head) != 4 or head[0] != "crystal":
        raise FormatError(f"bad crystal header {lines[0]!r}")
    try:
        version, formed_at = int(head[2]), int(head[3])
    except ValueError as exc:
        raise FormatError(f"bad crystal header {lines[0]!r}") from exc
    req = Requirement.parse(lines[1])
    elements = tuple(loads_element(l) for l in lines[2:] if l.strip())
    return Crystal(head[1], elements, req, formed_at, version)
