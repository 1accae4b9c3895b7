"""Knowledge middleware: views, frame <-> triple transformation, content summaries.

Middleware only reads knowware. Every operation here takes a crystal or a
package and returns new values.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable, Mapping

from .crystallizer import Crystal, SubjectFilter
from .elements import KnowledgeElement
from .errors import FormatError, MixedPragmatics, MixedSubjects, NoKeyRole, VerifyFailed
from .knowware import KnowwarePackage, verify

# Executable middleware classes; the rest are catalog-only on the server.
CATEGORIES = (
    "extraction", "transformation", "crystallization", "production",
    "operating", "combination", "service",
)
EXECUTABLE = ("transformation", "operating", "view-generation")


@dataclass(frozen=True)
class ViewSpec:
    pragmatics: frozenset[str] | None = None
    roles: frozenset[str] | None = None
    subjects: tuple[SubjectFilter, ...] = ()  # all must hold

    def __post_init__(self):
        if self.pragmatics is None and self.roles is None and not self.subjects:
            raise ValueError("a view needs at least one criterion")
        for name in ("pragmatics", "roles"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, frozenset(value))

    def __and__(self, other: "ViewSpec") -> "ViewSpec":
        def meet(a, b):
            if a is None:
                return b
            return a if b is None else a & b

        return ViewSpec(
            meet(self.pragmatics, other.pragmatics),
            meet(self.roles, other.roles),
            self.subjects + other.subjects,
        )

    def project(self, e: KnowledgeElement) -> KnowledgeElement | None:
        if self.pragmatics is not None and e.pragmatics not in self.pragmatics:
            return None
        if not all(f.admits(e.key) for f in self.subjects):
            return None
        if self.roles is None:
            return e
        if e.key_role is not None and e.key_role not in self.roles:
            return None
        return e.with_bindings((r, v) for r, v in e.bindings if r in self.roles)


def _as_crystal(source: Crystal | KnowwarePackage) -> Crystal:
    if isinstance(source, KnowwarePackage):
        verdict = verify(source)
        if not verdict:
            raise VerifyFailed(f"package failed verification: {verdict.reason}")
        return source.crystal()
    return source


def apply_view(source: Crystal | KnowwarePackage, view: ViewSpec) -> Crystal:
    crystal = _as_crystal(source)
    kept = []
    for e in crystal.elements:
        p = view.project(e)
        if p is not None:
            kept.append(p)
    return replace(crystal, elements=tuple(kept))


def loads_view(text: str) -> ViewSpec:
    kw: dict = {}
    subjects = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        words = line.split()
        if len(words) != 3 or words[0] != "view":
            raise FormatError(f"line {lineno}: expected 'view <field> <value>'")
        _, key, value = words
        if key in ("pragmatics", "roles"):
            items = frozenset(v for v in value.split(",") if v)
            kw[key] = items if key not in kw else kw[key] & items
        elif key == "subject":
            subjects.append(SubjectFilter.parse(value))
        else:
            raise FormatError(f"line {lineno}: unknown view field {key!r}")
    try:
        return ViewSpec(subjects=tuple(subjects), **kw)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def dumps_view(view: ViewSpec) -> str:
    lines = []
    if view.pragmatics is not None:
        lines.append("view pragmatics " + ",".join(sorted(view.pragmatics)))
    if view.roles is not None:
        lines.append("view roles " + ",".join(sorted(view.roles)))
    lines += [f"view subject {f.render()}" for f in view.subjects]
    return "\n".join(lines) + "\n"


# -- transformation -------------------------------------------------------------

@dataclass(frozen=True)
class Triple:
    subject: str
    relation: str
    object: str

    def __post_init__(self):
        if not (self.subject and self.relation and self.object):
            raise ValueError("triple parts must be nonempty")


def to_triples(e: KnowledgeElement) -> list[Triple]:
    role = e.key_role
    if role is None:
        raise NoKeyRole(f"element {e.id!r} has no key role")
    subject = e.get(role)
    return [Triple(subject, f"{e.pragmatics}/{r}", v) for r, v in e.bindings if r != role]


def from_triples(
    triples: Iterable[Triple],
    key_role: str | Mapping[str, str] = "subject",
    id: str = "triples",
    pattern_id: str = "triples",
) -> KnowledgeElement:
    """Rebuild an element; ``key_role`` names the role the shared subject binds
    (or maps construct -> key role, e.g. ``KeyStructure.key_roles()``)."""
    triples = list(triples)
    subjects = {t.subject for t in triples}
    if len(subjects) != 1:
        raise MixedSubjects(f"expected one subject, got {len(subjects)}")
    split = [t.relation.rpartition("/") for t in triples]
    prags = {p for p, _, _ in split}
    if len(prags) != 1 or "" in prags:
        raise MixedPragmatics(f"expected one pragmatics prefix, got {sorted(prags)}")
    pragmatics = prags.pop()
    role = key_role.get(pragmatics, "subject") if isinstance(key_role, Mapping) else key_role
    bindings = [(role, subjects.pop())] + [(r, t.object) for (_, _, r), t in zip(split, triples)]
    return KnowledgeElement(id=id, pragmatics=pragmatics, bindings=tuple(bindings), pattern_id=pattern_id)


def dumps_triples(triples: Iterable[Triple]) -> str:
    def clean(s: str) -> str:
        return s.replace("\t", " ").replace("\n", " ")

    return "".join(f"{clean(t.subject)}\t{clean(t.relation)}\t{clean(t.object)}\n" for t in triples)


def loads_triples(text: str) -> list[Triple]:
    out = []
    for line in text.splitlines():
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise FormatError(f"bad triple line {line!r}")
        out.append(Triple(*parts))
    return out


# -- operating ------------------------------------------------------------------

def summarize(crystal: Crystal) -> dict:
    counts = Counter(e.pragmatics for e in crystal.elements)
    subjects = {e.key for e in crystal.elements if e.key is not None}
    return {
        "domain": crystal.domain,
        "elements": len(crystal.elements),
        "groups": len(counts),
        "subjects": len(subjects),
        "counts": dict(sorted(counts.items())),
        "version": crystal.version,
        "formed_at": crystal.formed_at,
    }


def render_summary(summary: dict) -> str:
    lines = [f"{k} {summary[k]}" for k in ("domain", "elements", "groups", "subjects", "version", "formed_at")]
    lines += [f"count {tag} {n}" for tag, n in summary["counts"].items()]
    return "\n".join(lines) + "\n"
