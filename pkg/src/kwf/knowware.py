"""Read-only knowware packages: a manifest (the knowledge interface) plus a crystal payload.

Container layout (``.kw``), all sizes in bytes::

    KWF-CONTAINER 1\\n
    MANIFEST <n>\\n <n bytes of manifest> \\n
    PAYLOAD <m>\\n  <m bytes of payload>  \\n

The manifest is UTF-8 ``key = value`` lines. Multi-valued fields repeat their
key. Values escape backslash and newline as ``\\\\`` and ``\\n``. Unknown keys
are kept, in order, after the known ones.
"""
from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, fields, replace
from typing import Mapping

from .crystallizer import Crystal, detect_conflicts, dumps_crystal, loads_crystal
from .elements import FORMAT_ID
from .errors import FormatError, IncompleteMeta, KwfError, MalformedContainer

MAGIC = b"KWF-CONTAINER 1\n"


def digest(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


@dataclass(frozen=True)
class Manifest:
    name: str
    version: str
    content_list: tuple[tuple[str, int], ...] = ()
    representation_format: str = FORMAT_ID
    applications: tuple[str, ...] = ()
    license_declaration: str = ""
    middleware_compat: tuple[str, ...] = ()
    adapter: str = ""  # id of a transformation middleware, never code
    watermark: str = ""
    authentication: str | None = None
    docs_functions: str = ""
    docs_use: str = ""
    docs_maintenance: str = ""
    extras: tuple[tuple[str, str], ...] = ()

    @property
    def counts(self) -> dict[str, int]:
        return dict(self.content_list)


# manifest key <-> field; multi-valued keys repeat
_SCALAR = [
    ("name", "name"),
    ("version", "version"),
    ("representation_format", "representation_format"),
    ("license", "license_declaration"),
    ("adapter", "adapter"),
    ("watermark", "watermark"),
    ("authentication", "authentication"),
    ("docs.functions", "docs_functions"),
    ("docs.use", "docs_use"),
    ("docs.maintenance", "docs_maintenance"),
]
_MULTI = {"application": "applications", "middleware": "middleware_compat"}


def _esc(v: str) -> str:
    return v.replace("\\", "\\\\").replace("\n", "\\n")


def _unesc(v: str) -> str:
    out, it = [], iter(v)
    for ch in it:
        if ch == "\\":
            nxt = next(it, "")
            out.append("\n" if nxt == "n" else nxt)
        else:
            out.append(ch)
    return "".join(out)


def dumps_manifest(m: Manifest) -> str:
    lines = [f"name = {_esc(m.name)}", f"version = {_esc(m.version)}",
             f"representation_format = {_esc(m.representation_format)}"]
    lines += [f"content = {tag}:{n}" for tag, n in m.content_list]
    lines += [f"application = {_esc(a)}" for a in m.applications]
    if m.license_declaration:
        lines.append(f"license = {_esc(m.license_declaration)}")
    lines += [f"middleware = {_esc(x)}" for x in m.middleware_compat]
    if m.adapter:
        lines.append(f"adapter = {_esc(m.adapter)}")
    lines.append(f"watermark = {m.watermark}")
    if m.authentication is not None:
        lines.append(f"authentication = {_esc(m.authentication)}")
    for key, attr in (("docs.functions", "docs_functions"), ("docs.use", "docs_use"),
                      ("docs.maintenance", "docs_maintenance")):
        if getattr(m, attr):
            lines.append(f"{key} = {_esc(getattr(m, attr))}")
    lines += [f"{k} = {_esc(v)}" for k, v in m.extras]
    return "\n".join(lines) + "\n"


def loads_manifest(text: str) -> Manifest:
    scalars: dict[str, str] = {}
    multi: dict[str, list[str]] = {v: [] for v in _MULTI.values()}
    content: list[tuple[str, int]] = []
    extras: list[tuple[str, str]] = []
    scalar_keys = dict(_SCALAR)
    for line in text.splitlines():
        if not line.strip():
            continue
        key, sep, value = line.partition(" = ")
        if not sep:
            raise FormatError(f"bad manifest line {line!r}")
        value = _unesc(value)
        if key == "content":
            tag, _, n = value.rpartition(":")
            try:
                content.append((tag, int(n)))
            except ValueError as exc:
                raise FormatError(f"bad content entry {value!r}") from exc
        elif key in _MULTI:
            multi[_MULTI[key]].append(value)
        elif key in scalar_keys:
            if scalar_keys[key] in scalars:
                raise FormatError(f"repeated manifest key {key!r}")
            scalars[scalar_keys[key]] = value
        else:
            extras.append((key, value))
    if "name" not in scalars or "version" not in scalars:
        raise FormatError("manifest lacks name or version")
    kw = dict(scalars)
    kw.update({k: tuple(v) for k, v in multi.items()})
    return Manifest(content_list=tuple(content), extras=tuple(extras), **kw)


@dataclass(frozen=True)
class KnowwarePackage:
    """Data only: there is no method that changes a package or runs code from it."""

    manifest: Manifest
    payload: bytes

    def crystal(self) -> Crystal:
        return loads_crystal(self.payload.decode("utf-8"))

    def serialize(self) -> bytes:
        return serialize(self)


def _count(crystal: Crystal) -> tuple[tuple[str, int], ...]:
    return tuple(sorted(Counter(e.pragmatics for e in crystal.elements).items()))


_META_FIELDS = {f.name for f in fields(Manifest)} - {"content_list", "watermark", "representation_format"}


def package(crystal: Crystal, meta: Mapping | None = None, **kw) -> KnowwarePackage:
    meta = {**(meta or {}), **kw}
    for required in ("name", "version"):
        if not str(meta.get(required, "")).strip():
            raise IncompleteMeta(f"manifest field {required!r} is required")
    unknown = set(meta) - _META_FIELDS
    if unknown:
        raise IncompleteMeta(f"unknown manifest fields {sorted(unknown)}")
    if detect_conflicts(crystal.elements):
        raise KwfError("crystal has unresolved conflicts; crystallize or renew it first")
    for seq in ("applications", "middleware_compat", "extras"):
        if seq in meta:
            meta[seq] = tuple(meta[seq])
    payload = dumps_crystal(crystal).encode("utf-8")
    manifest = Manifest(content_list=_count(crystal), watermark=digest(payload), **meta)
    return KnowwarePackage(manifest, payload)


def serialize(pkg: KnowwarePackage) -> bytes:
    m = dumps_manifest(pkg.manifest).encode("utf-8")
    return (MAGIC + b"MANIFEST %d\n" % len(m) + m + b"\n"
            + b"PAYLOAD %d\n" % len(pkg.payload) + pkg.payload + b"\n")


def _section(data: bytes, pos: int, name: bytes) -> tuple[bytes, int]:
    nl = data.find(b"\n", pos)
    if nl < 0:
        raise MalformedContainer(f"missing {name.decode()} header")
    head = data[pos:nl].split(b" ")
    if len(head) != 2 or head[0] != name or not head[1].isdigit():
        raise MalformedContainer(f"bad {name.decode()} header")
    n = int(head[1])
    body = data[nl + 1: nl + 1 + n]
    if len(body) != n or data[nl + 1 + n: nl + 2 + n] != b"\n":
        raise MalformedContainer(f"{name.decode()} section truncated")
    return body, nl + 2 + n


def open_package(data: bytes) -> KnowwarePackage:
    if not data.startswith(MAGIC):
        raise MalformedContainer("not a knowware container")
    manifest, pos = _section(data, len(MAGIC), b"MANIFEST")
    payload, pos = _section(data, pos, b"PAYLOAD")
    if pos != len(data):
        raise MalformedContainer("trailing bytes after payload")
    try:
        return KnowwarePackage(loads_manifest(manifest.decode("utf-8")), payload)
    except (FormatError, UnicodeDecodeError) as exc:
        raise MalformedContainer(f"bad manifest: {exc}") from exc


open = open_package


@dataclass(frozen=True)
class Verdict:
    ok: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        return "pass" if self.ok else f"fail {self.reason}"


def verify(pkg: KnowwarePackage) -> Verdict:
    if digest(pkg.payload) != pkg.manifest.watermark:
        return Verdict(False, "watermark")
    try:
        crystal = pkg.crystal()
    except (FormatError, UnicodeDecodeError):
        return Verdict(False, "payload")
    if _count(crystal) != tuple(sorted(pkg.manifest.content_list)):
        return Verdict(False, "content-list")
    if pkg.manifest.authentication is not None and not pkg.manifest.authentication.strip():
        return Verdict(False, "authentication")
    return Verdict(True)


def interface_of(pkg: KnowwarePackage) -> Manifest:
    return replace(pkg.manifest)
