"""Sentence patterns and key structures: the grammar of a pseudo-natural language.

A pattern is written in star notation, e.g. ``if * then * is called *``.
Keywords are the maximal star-free runs; each star is a slot bound to a role.

Pragmatics tags are unique per key structure. A tag may carry a variant
suffix after ``~`` (``extensional-definition~etc``) when two surface forms
realize the same semantic construct; elements and hierarchies use the
construct (the part before ``~``).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

from .errors import (
    AdjacentSlots,
    DuplicateId,
    DuplicatePragmatics,
    FormatError,
    GrammarError,
    NoKeyword,
    PatternError,
    RoleCountMismatch,
    UnknownTag,
)

LAYER_KINDS = ("core", "domain", "jargon")
VARIANT_SEP = "~"
_WS = re.compile(r"\s+")
_ROLE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_TAG = re.compile(r"^[^\s|:#,;]+$")


@dataclass(frozen=True)
class Keyword:
    text: str


@dataclass(frozen=True)
class Slot:
    ordinal: int


Token = Union[Keyword, Slot]


def normalize_ws(text: str) -> str:
    return _WS.sub(" ", text).strip()


def construct_of(pragmatics: str) -> str:
    """Semantic construct of a pragmatics tag (variant suffix dropped)."""
    return pragmatics.split(VARIANT_SEP, 1)[0]


def check_layer(layer: str) -> str:
    kind, _, name = layer.partition(":")
    if kind not in LAYER_KINDS:
        raise PatternError(f"unknown layer {layer!r}")
    if kind == "core" and name:
        raise PatternError("core layer takes no name")
    if kind != "core" and not name:
        raise PatternError(f"{kind} layer needs a name, e.g. {kind}:medicine")
    return layer


@dataclass(frozen=True)
class SentencePattern:
    id: str
    tokens: tuple[Token, ...]
    roles: tuple[str, ...]  # roles[i] names slot ordinal i + 1
    pragmatics: str
    layer: str = "core"

    def __post_init__(self):
        keywords = [t for t in self.tokens if isinstance(t, Keyword)]
        if not keywords:
            raise NoKeyword(f"pattern {self.id!r} has no keyword")
        ordinals = [t.ordinal for t in self.tokens if isinstance(t, Slot)]
        if ordinals != list(range(1, len(ordinals) + 1)):
            raise PatternError(f"slot ordinals of {self.id!r} are not 1..k in order")
        for a, b in zip(self.tokens, self.tokens[1:]):
            if isinstance(a, Slot) and isinstance(b, Slot):
                raise AdjacentSlots(f"pattern {self.id!r} has adjacent slots")
            if isinstance(a, Keyword) and isinstance(b, Keyword):
                raise PatternError(f"pattern {self.id!r} has adjacent keywords")
        if len(self.roles) != len(ordinals):
            raise RoleCountMismatch(
                f"pattern {self.id!r}: {len(ordinals)} slots but {len(self.roles)} roles"
            )
        if len(set(self.roles)) != len(self.roles):
            raise PatternError(f"pattern {self.id!r} repeats a role name")
        for r in self.roles:
            if not _ROLE.match(r):
                raise PatternError(f"bad role name {r!r}")
        if not _TAG.match(self.pragmatics):
            raise PatternError(f"bad pragmatics tag {self.pragmatics!r}")
        check_layer(self.layer)

    @property
    def keywords(self) -> list[str]:
        return [t.text for t in self.tokens if isinstance(t, Keyword)]

    @property
    def slot_count(self) -> int:
        return len(self.roles)

    @property
    def keyword_weight(self) -> int:
        """Total keyword character count; the tie-break score between patterns."""
        return sum(len(k) for k in self.keywords)

    @property
    def construct(self) -> str:
        return construct_of(self.pragmatics)

    def role_of(self, ordinal: int) -> str:
        return self.roles[ordinal - 1]

    def render(self) -> str:
        return render_pattern(self)


def tokenize_spec(spec: str) -> tuple[Token, ...]:
    if not spec.strip():
        raise PatternError("empty pattern spec")
    pieces = spec.split("*")
    tokens: list[Token] = []
    ordinal = 0
    for i, piece in enumerate(pieces):
        if i > 0:
            if tokens and isinstance(tokens[-1], Slot):
                raise AdjacentSlots(f"two stars with no keyword between in {spec!r}")
            ordinal += 1
            tokens.append(Slot(ordinal))
        text = normalize_ws(piece)
        if text:
            tokens.append(Keyword(text))
        elif 0 < i < len(pieces) - 1:
            raise AdjacentSlots(f"two stars with no keyword between in {spec!r}")
    if not any(isinstance(t, Keyword) for t in tokens):
        raise NoKeyword(f"pattern {spec!r} has no keyword")
    return tuple(tokens)


def parse_pattern(
    spec: str,
    roles: Sequence[str],
    pragmatics: str,
    layer: str = "core",
    id: str | None = None,
) -> SentencePattern:
    tokens = tokenize_spec(spec)
    stars = sum(isinstance(t, Slot) for t in tokens)
    if stars != len(roles):
        raise RoleCountMismatch(f"{spec!r} has {stars} stars but {len(roles)} roles given")
    return SentencePattern(
        id=id or pragmatics,
        tokens=tokens,
        roles=tuple(roles),
        pragmatics=pragmatics,
        layer=layer,
    )


def render_pattern(p: SentencePattern) -> str:
    return " ".join("*" if isinstance(t, Slot) else t.text for t in p.tokens)


# -- combination grammar ------------------------------------------------------

@dataclass(frozen=True)
class Constraint:
    """``a precedes b``: no a after any b.  ``a next b``: every a is directly followed by b."""

    kind: str
    a: str
    b: str

    def render(self) -> str:
        return f"{self.a} {self.kind} {self.b}"


@dataclass(frozen=True)
class Grammar:
    constraints: tuple[Constraint, ...]

    @classmethod
    def parse(cls, text: str) -> "Grammar":
        out = []
        for clause in text.split(";"):
            words = clause.split()
            if not words:
                continue
            if len(words) != 3 or words[1] not in ("precedes", "next"):
                raise GrammarError(f"bad combination clause {clause.strip()!r}")
            out.append(Constraint(words[1], words[0], words[2]))
        return cls(tuple(out))

    def render(self) -> str:
        return "; ".join(c.render() for c in self.constraints)

    def tags(self) -> set[str]:
        return {t for c in self.constraints for t in (c.a, c.b)}

    def first_violation(self, tags: Sequence[str]) -> int | None:
        worst: int | None = None
        for c in self.constraints:
            pos = None
            if c.kind == "precedes":
                seen_b = False
                for i, t in enumerate(tags):
                    if t == c.a and seen_b:
                        pos = i
                        break
                    if t == c.b:
                        seen_b = True
            else:
                for i, t in enumerate(tags):
                    if t == c.a and (i + 1 >= len(tags) or tags[i + 1] != c.b):
                        pos = i + 1
                        break
            if pos is not None and (worst is None or pos < worst):
                worst = pos
        return worst


@dataclass(frozen=True)
class KeyStructure:
    name: str
    patterns: tuple[SentencePattern, ...]
    combination: Grammar | None = None

    def __post_init__(self):
        ids = [p.id for p in self.patterns]
        if len(set(ids)) != len(ids):
            raise DuplicateId(f"duplicate pattern id in key structure {self.name!r}")
        tags = [p.pragmatics for p in self.patterns]
        if len(set(tags)) != len(tags):
            dup = next(t for t in tags if tags.count(t) > 1)
            raise DuplicatePragmatics(f"pragmatics {dup!r} has more than one pattern")

    @property
    def layers(self) -> set[str]:
        return {p.layer.split(":")[0] for p in self.patterns}

    def pattern(self, pattern_id: str) -> SentencePattern:
        for p in self.patterns:
            if p.id == pattern_id:
                return p
        raise KeyError(pattern_id)

    def prefix(self, n: int) -> "KeyStructure":
        return KeyStructure(f"{self.name}[:{n}]", self.patterns[:n])

    def key_roles(self) -> dict[str, str]:
        """construct -> key role, per the element identity rule."""
        from .elements import key_role_for

        return {p.construct: key_role_for(p.roles) for p in self.patterns}


def compile_key_structure(
    name: str, patterns: Iterable[SentencePattern], combination: Grammar | str | None = None
) -> KeyStructure:
    patterns = tuple(patterns)
    if not patterns:
        raise PatternError("a key structure needs at least one pattern")
    if isinstance(combination, str):
        combination = Grammar.parse(combination)
    ks = KeyStructure(name, patterns, combination)
    if combination is not None:
        unknown = combination.tags() - {p.pragmatics for p in patterns}
        if unknown:
            raise UnknownTag(f"combination mentions unknown tags {sorted(unknown)}")
    return ks


def check_sequence(ks: KeyStructure, tags: Sequence[str]) -> int | None:
    """Return None if the pragmatics sequence is legal, else the first offending index."""
    known = {p.pragmatics for p in ks.patterns}
    for t in tags:
        if t not in known:
            raise UnknownTag(t)
    if ks.combination is None:
        return None
    return ks.combination.first_violation(list(tags))


def spectrum_compare(a: KeyStructure, b: KeyStructure) -> int | None:
    """Partial order by pattern inclusion: -1 a finer-grained below b, 0 equal, 1 above, None incomparable.

    Patterns are compared by (rendered form, roles) ignoring ids and tags.
    """
    sa = {(render_pattern(p).lower(), p.roles) for p in a.patterns}
    sb = {(render_pattern(p).lower(), p.roles) for p in b.patterns}
    if sa == sb:
        return 0
    if sa < sb:
        return -1
    if sa > sb:
        return 1
    return None


# -- .ksl file format -----------------------------------------------------------

def loads_key_structure(text: str, name: str = "ks") -> KeyStructure:
    patterns = []
    combination = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [s.strip() for s in line.split("::")]
        head = parts[0].split()
        try:
            if head == ["name"] and len(parts) == 2:
                name = parts[1]
            elif head == ["combination"] and len(parts) == 2:
                combination = Grammar.parse(parts[1])
            elif head and head[0] == "pattern" and len(head) == 4 and len(parts) == 3:
                _, pid, layer, prag = head
                roles = [r.strip() for r in parts[2].split(",") if r.strip()]
                patterns.append(parse_pattern(parts[1], roles, prag, layer, id=pid))
            else:
                raise FormatError("unrecognized directive")
        except (PatternError, GrammarError, FormatError) as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
    return compile_key_structure(name, patterns, combination)


def dumps_key_structure(ks: KeyStructure) -> str:
    lines = [f"name :: {ks.name}"]
    for p in ks.patterns:
        lines.append(
            f"pattern {p.id} {p.layer} {p.pragmatics} :: {render_pattern(p)} :: {','.join(p.roles)}"
        )
    if ks.combination is not None:
        lines.append(f"combination :: {ks.combination.render()}")
    return "\n".join(lines) + "\n"


def load_key_structure(path: str | Path) -> KeyStructure:
    path = Path(path)
    return loads_key_structure(path.read_text(encoding="utf-8"), name=path.stem)
