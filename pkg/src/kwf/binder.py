"""Mixware objects and the knowware-object binding mechanism.

A program mixes software objects (data and methods), knowware objects (data
only) and knowledge-middleware objects (methods, optional data). Binding gives
every knowware object a private copy of each middleware object it is planned
with. The result is an NKO whose data is the union of the data parts and whose
methods are the union of the middleware methods. Members whose names clash
are renamed ``<source-id>.<member>``.

Methods are simulated: a read-set over data names plus an expression. The
expression is a ``+``-joined list of read names, integer literals and
double-quoted strings. It sums when every term is an int and concatenates
otherwise.
"""
from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .errors import (
    DuplicateMemberUnresolvable,
    FormatError,
    MissingData,
    NoSuchMethod,
    NotCoUsed,
    PlanMismatch,
    ProgramInvalid,
    UnboundKnowware,
)

SOFTWARE = "software"
KNOWWARE = "knowware"
MIDDLEWARE = "knowledge-middleware"
NKO = "nko"
KINDS = (SOFTWARE, KNOWWARE, MIDDLEWARE)

_TERM = re.compile(r'\s*("(?:[^"\\]|\\.)*"|-?\d+|[A-Za-z_][\w.]*)\s*(\+|$)')


@dataclass(frozen=True)
class Method:
    reads: tuple[str, ...]
    expr: str
    # local read name -> data name in the owning object, filled in by binding
    resolve: tuple[tuple[str, str], ...] = ()

    def evaluate(self, values: Mapping[str, object]):
        terms = []
        pos = 0
        while pos < len(self.expr):
            m = _TERM.match(self.expr, pos)
            if not m or m.end() == pos:
                raise FormatError(f"bad expression {self.expr!r}")
            tok = m.group(1)
            if tok.startswith('"'):
                terms.append(re.sub(r"\\(.)", r"\1", tok[1:-1]))
            elif re.fullmatch(r"-?\d+", tok):
                terms.append(int(tok))
            else:
                if tok not in self.reads:
                    raise FormatError(f"expression uses {tok!r} outside its read-set")
                terms.append(values[tok])
            pos = m.end()
        if not terms:
            raise FormatError("empty expression")
        if all(isinstance(t, int) for t in terms):
            return sum(terms)
        return "".join(str(t) for t in terms)


@dataclass(frozen=True)
class MixObject:
    id: str
    kind: str
    data: dict = field(default_factory=dict)
    methods: dict = field(default_factory=dict)  # name -> Method
    parents: tuple[str, ...] = ()


def validate_program(objects: Sequence[MixObject]) -> list[str]:
    errors = []
    by_id: dict[str, MixObject] = {}
    for o in objects:
        if o.id in by_id:
            errors.append(f"{o.id}: duplicate object id")
        by_id[o.id] = o
    for o in objects:
        if o.kind not in KINDS:
            errors.append(f"{o.id}: unknown kind {o.kind!r}")
        elif o.kind == SOFTWARE:
            if not o.data:
                errors.append(f"{o.id}: software object with empty data part")
            if not o.methods:
                errors.append(f"{o.id}: software object with empty method part")
        elif o.kind == KNOWWARE and o.methods:
            errors.append(f"{o.id}: knowware object with a method part")
        elif o.kind == MIDDLEWARE and not o.methods:
            errors.append(f"{o.id}: knowledge middleware object without methods")
        for name, m in o.methods.items():
            for r in m.reads:
                if not r:
                    errors.append(f"{o.id}.{name}: empty read name")
        for p in o.parents:
            parent = by_id.get(p)
            if p == o.id:
                errors.append(f"{o.id}: object is its own parent")
            elif parent is None:
                errors.append(f"{o.id}: unknown parent {p!r}")
            elif parent.parents:
                errors.append(f"{o.id}: parent {p!r} has parents (only one level supported)")
    return errors


@dataclass(frozen=True)
class BindingPlan:
    bindings: dict  # knowware id -> tuple of middleware ids
    mode: str = "static"
    co_use: frozenset = frozenset()  # of frozenset({a, b})

    def __post_init__(self):
        if self.mode not in ("static", "dynamic"):
            raise ValueError(f"unknown binding mode {self.mode!r}")
        object.__setattr__(self, "bindings", {k: tuple(v) for k, v in self.bindings.items()})
        object.__setattr__(self, "co_use", frozenset(frozenset(p) for p in self.co_use))

    def co_used(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in self.co_use


def _unique(seq: Iterable[str]) -> tuple[str, ...]:
    return tuple(dict.fromkeys(seq))


def _integrate(ko: MixObject, kmos: Sequence[MixObject]) -> tuple[MixObject, dict]:
    """Steps 1-3 for one knowware object: copy, union with renaming, inherit."""
    ids = [ko.id] + [k.id for k in kmos]
    if len(set(ids)) != len(ids):
        raise DuplicateMemberUnresolvable(f"{ko.id}: the same middleware object is bound twice")
    sources = [ko] + list(kmos)

    def union(member_maps):
        owners: dict[str, int] = {}
        for src, members in member_maps:
            for name in members:
                owners[name] = owners.get(name, 0) + 1
        merged, names = {}, {}
        for src, members in member_maps:
            for name, value in members.items():
                new = name if owners[name] == 1 else f"{src.id}.{name}"
                if new in merged:
                    raise DuplicateMemberUnresolvable(f"{ko.id}: member {new!r} cannot be renamed apart")
                merged[new] = value
                names[(src.id, name)] = new
        return merged, names

    data, data_names = union([(s, s.data) for s in sources])
    raw_methods, method_names = union([(k, k.methods) for k in kmos])
    owner_of = {new: src for (src, _), new in method_names.items()}
    src_by_id = {s.id: s for s in sources}
    methods = {}
    for new, m in raw_methods.items():
        src = src_by_id[owner_of[new]]
        resolve = []
        for r in m.reads:
            if r in src.data:
                resolve.append((r, data_names[(src.id, r)]))
            elif r in ko.data:
                resolve.append((r, data_names[(ko.id, r)]))
        methods[new] = replace(m, resolve=tuple(resolve))
    parents = _unique(p for s in sources for p in s.parents)
    renames = {(ko.id, src, name): new
               for (src, name), new in {**data_names, **method_names}.items() if new != name}
    return MixObject(ko.id, NKO, data, methods, parents), renames


class BoundProgram:
    """Program after binding. Static mode integrates every NKO up front;
    dynamic mode keeps the plan and integrates each NKO on first use."""

    def __init__(self, program: Sequence[MixObject], plan: BindingPlan):
        self._program = list(program)
        self._by_id = {o.id: o for o in self._program}
        self.plan = plan
        self.mode = plan.mode
        self._nkos: dict[str, MixObject] = {}
        self._renames: dict[str, dict] = {}
        self._lock = threading.Lock()
        if self.mode == "static":
            for o in self._program:
                if o.kind == KNOWWARE:
                    self._materialize(o.id)

    def _materialize(self, ko_id: str) -> MixObject:
        with self._lock:
            if ko_id not in self._nkos:
                kmos = [self._by_id[k] for k in self.plan.bindings[ko_id]]
                nko, renames = _integrate(self._by_id[ko_id], kmos)
                self._nkos[ko_id] = nko
                self._renames[ko_id] = renames
            return self._nkos[ko_id]

    def object(self, obj_id: str) -> MixObject:
        o = self._by_id.get(obj_id)
        if o is None:
            raise NoSuchMethod(f"no object {obj_id!r}")
        return self._materialize(obj_id) if o.kind == KNOWWARE else o

    def source(self, obj_id: str) -> MixObject:
        """The object as written in the program, before binding."""
        return self._by_id[obj_id]

    @property
    def objects(self) -> list[MixObject]:
        return [self.object(o.id) for o in self._program]

    @property
    def rename_log(self) -> dict:
        self.objects
        out = {}
        for ko in self._program:
            out.update(self._renames.get(ko.id, {}))
        return out

    @property
    def materialized(self) -> set[str]:
        return set(self._nkos)


def bind(program: Sequence[MixObject], plan: BindingPlan) -> BoundProgram:
    errors = validate_program(program)
    if errors:
        raise ProgramInvalid("; ".join(errors))
    by_id = {o.id: o for o in program}
    for o in program:
        if o.kind == KNOWWARE and not plan.bindings.get(o.id):
            raise UnboundKnowware(f"knowware object {o.id!r} is not bound to any middleware object")
    for ko, kmos in plan.bindings.items():
        if ko not in by_id or by_id[ko].kind != KNOWWARE:
            raise ProgramInvalid(f"plan binds {ko!r}, which is not a knowware object")
        for k in kmos:
            if k not in by_id or by_id[k].kind != MIDDLEWARE:
                raise ProgramInvalid(f"plan binds {ko!r} to {k!r}, which is not a middleware object")
    return BoundProgram(program, plan)


def dispatch(bound: BoundProgram, obj_id: str, method: str):
    """Run a method. A bound middleware method sees its own copy's data, then
    the knowware object's data; any object falls back to its parents' data."""
    obj = bound.object(obj_id)
    m = obj.methods.get(method)
    if m is None:
        raise NoSuchMethod(f"{obj_id} has no method {method!r}")
    resolved = dict(m.resolve)
    values = {}
    for r in m.reads:
        if obj.kind == NKO and r in resolved:
            values[r] = obj.data[resolved[r]]
            continue
        if obj.kind != NKO and r in obj.data:
            values[r] = obj.data[r]
            continue
        for p in obj.parents:
            parent = bound.source(p)
            if r in parent.data:
                values[r] = parent.data[r]
                break
        else:
            raise MissingData(f"{obj_id}.{method} reads {r!r}, which is not available")
    return m.evaluate(values)


def merge_knowware(program: Sequence[MixObject], ko_a: str, ko_b: str,
                   plan: BindingPlan) -> tuple[list[MixObject], BindingPlan]:
    """Merge two co-used knowware objects bound to the same middleware set.

    Shared data names with equal values collapse; differing ones are renamed.
    The merged object keeps ``ko_a``'s id.
    """
    if set(plan.bindings.get(ko_a, ())) != set(plan.bindings.get(ko_b, ())):
        raise PlanMismatch(f"{ko_a} and {ko_b} are bound to different middleware objects")
    if not plan.co_used(ko_a, ko_b):
        raise NotCoUsed(f"{ko_a} and {ko_b} are not annotated as co-used")
    by_id = {o.id: o for o in program}
    a, b = by_id[ko_a], by_id[ko_b]
    data = {}
    for name in _unique(list(a.data) + list(b.data)):
        if name in a.data and name in b.data and a.data[name] != b.data[name]:
            data[f"{a.id}.{name}"] = a.data[name]
            data[f"{b.id}.{name}"] = b.data[name]
        else:
            data[name] = a.data[name] if name in a.data else b.data[name]
    merged = MixObject(a.id, KNOWWARE, data, {}, _unique(a.parents + b.parents))
    out = []
    for o in program:
        if o.id == ko_b:
            continue
        if o.id == ko_a:
            out.append(merged)
        elif ko_b in o.parents:
            out.append(replace(o, parents=_unique(ko_a if p == ko_b else p for p in o.parents)))
        else:
            out.append(o)
    bindings = {k: v for k, v in plan.bindings.items() if k != ko_b}
    co_use = {p for p in plan.co_use if ko_b not in p}
    return out, BindingPlan(bindings, plan.mode, co_use)


# -- program / plan files -----------------------------------------------------------

_METHOD = re.compile(r"^method\s+(\S+)\s+reads\s*(.*?)\s*->\s*(.+)$")


def _value(text: str):
    return int(text) if re.fullmatch(r"-?\d+", text) else text


def loads_program(text: str) -> list[MixObject]:
    objects = []
    cur: dict | None = None

    def flush():
        if cur is not None:
            objects.append(MixObject(cur["id"], cur["kind"], cur["data"], cur["methods"], tuple(cur["parents"])))

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        word = line.split(None, 1)[0]
        if word == "object":
            parts = line.split()
            if len(parts) != 3:
                raise FormatError(f"line {lineno}: expected 'object <id> <kind>'")
            flush()
            cur = {"id": parts[1], "kind": parts[2], "data": {}, "methods": {}, "parents": []}
            continue
        if cur is None:
            raise FormatError(f"line {lineno}: member outside an object block")
        if word == "data":
            key, sep, value = line[4:].strip().partition("=")
            if not sep or not key.strip():
                raise FormatError(f"line {lineno}: expected 'data k=v'")
            cur["data"][key.strip()] = _value(value.strip())
        elif word == "method":
            m = _METHOD.match(line)
            if not m:
                raise FormatError(f"line {lineno}: expected 'method name reads a,b -> expr'")
            reads = tuple(r.strip() for r in m.group(2).split(",") if r.strip())
            cur["methods"][m.group(1)] = Method(reads, m.group(3).strip())
        elif word == "parent":
            cur["parents"].append(line.split(None, 1)[1].strip())
        else:
            raise FormatError(f"line {lineno}: unknown directive {word!r}")
    flush()
    return objects


def loads_plan(text: str) -> BindingPlan:
    bindings, co_use, mode = {}, set(), "static"
    for lineno, raw in enumerate(text.splitlines(), 1):
        words = raw.split()
        if not words or words[0].startswith("#"):
            continue
        if words[0] == "mode" and len(words) == 2:
            mode = words[1]
        elif words[0] == "bind" and len(words) == 3:
            bindings[words[1]] = tuple(words[2].split(","))
        elif words[0] == "couse" and len(words) == 3:
            co_use.add(frozenset(words[1:]))
        else:
            raise FormatError(f"line {lineno}: expected mode/bind/couse directive")
    try:
        return BindingPlan(bindings, mode, frozenset(co_use))
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
