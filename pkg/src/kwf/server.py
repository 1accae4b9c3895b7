"""Knowledge server: four-layer warehouse, registry, journal, and the line protocol.

See docs/protocol.md for the wire grammar. Layers only fill through PROMOTE
(ore -> magma -> crystal -> knowware); knowware may also be a locator entry
``external:<uri>``, which VERIFY reports as external instead of checking.
"""
from __future__ import annotations

import logging
import os
import socketserver
import threading
from pathlib import Path
from urllib.parse import unquote

from .crystallizer import Crystal, Magma, Requirement, crystallize, dumps_crystal, query_define, query_name
from .elements import dumps_element
from .errors import DuplicateId, FormatError, KwfError, NotFound, WrongLayer
from .keystructure import KeyStructure, loads_key_structure
from .knowware import open_package, package, serialize, verify
from .middleware import CATEGORIES, EXECUTABLE
from .pump import PumpSpec, pump

log = logging.getLogger(__name__)

LAYERS = ("ORE", "MAGMA", "CRYSTAL", "KNOWWARE")
REGISTRY_KINDS = ("PROVIDER", "REQUESTER", "MIDDLEWARE", "PROTOCOL", "SOURCE")
MUTATING = ("PUT", "PROMOTE", "REGISTER")
JOURNAL = "journal.log"


class RequestError(Exception):
    def __init__(self, code: int, reason: str):
        super().__init__(f"{code} {reason}")
        self.code = code
        self.reason = reason


def _meta(words: list[str]) -> dict[str, str]:
    out = {}
    for w in words:
        key, sep, value = w.partition("=")
        if not sep or not key:
            raise RequestError(400, f"bad-meta:{w}")
        out[key] = unquote(value)
    return out


class Warehouse:
    """Ore, magma, crystals and knowware plus the provider/requester registry.

    Every successful mutating request is appended to ``journal.log`` under
    ``data_dir``; constructing a Warehouse on an existing directory replays it.
    Timestamps come from a logical clock (one tick per mutation), so replay
    reproduces state exactly.
    """

    def __init__(self, data_dir: str | Path | None = None):
        self.ore: dict[str, str] = {}
        self.key_structures: dict[str, KeyStructure] = {}
        self.magma = Magma()
        self.crystals: dict[tuple[str, int], Crystal] = {}
        self.knowware: dict[tuple[str, str], bytes | str] = {}
        self.sources: dict[str, dict] = {}
        self.registry: dict[str, dict[str, dict]] = {k: {} for k in REGISTRY_KINDS if k != "SOURCE"}
        self.clock = 0
        self._write = threading.Lock()
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self._journal = None
        if self.data_dir is not None:
            self.data_dir.mkdir(parents=True, exist_ok=True)
            self._replay(self.data_dir / JOURNAL)
            self._journal = open(self.data_dir / JOURNAL, "ab")

    # -- journal --------------------------------------------------------------

    def _replay(self, path: Path) -> None:
        if not path.exists():
            return
        data = path.read_bytes()
        pos = 0
        while pos < len(data):
            nl = data.find(b"\n", pos)
            head = data[pos:nl].split(b" ") if nl >= 0 else []
            if len(head) != 3 or head[0] != b"REQ":
                log.warning("journal %s: stopping at corrupt record at byte %d", path, pos)
                break
            n_line, n_body = int(head[1]), int(head[2])
            start = nl + 1
            end = start + n_line + 1 + n_body + 1
            if end > len(data):
                log.warning("journal %s: dropping torn tail record", path)
                break
            line = data[start:start + n_line].decode("utf-8")
            body = data[start + n_line + 1:start + n_line + 1 + n_body]
            self._execute(line, body)
            pos = end

    def _append(self, line: str, body: bytes) -> None:
        if self._journal is None:
            return
        raw = line.encode("utf-8")
        self._journal.write(b"REQ %d %d\n" % (len(raw), len(body)) + raw + b"\n" + body + b"\n")
        self._journal.flush()
        os.fsync(self._journal.fileno())

    def close(self) -> None:
        if self._journal is not None:
            self._journal.close()
            self._journal = None

    # -- operations -----------------------------------------------------------

    def register(self, kind: str, id: str, meta: dict | None = None) -> None:
        kind = kind.upper()
        meta = dict(meta or {})
        if kind not in REGISTRY_KINDS:
            raise FormatError(f"unknown registry kind {kind!r}")
        table = self.sources if kind == "SOURCE" else self.registry[kind]
        if id in table:
            raise DuplicateId(f"{kind.lower()} {id!r} already registered")
        if kind == "MIDDLEWARE":
            cat = meta.get("category", "")
            if cat not in CATEGORIES + EXECUTABLE:
                raise FormatError(f"unknown middleware category {cat!r}")
        elif kind == "PROTOCOL" and not ("from" in meta and "to" in meta):
            raise FormatError("protocol registration needs from= and to=")
        elif kind == "SOURCE" and "locator" not in meta:
            raise FormatError("source registration needs locator=")
        table[id] = meta

    def promote(self, layer: str, item: list[str], target: str, params: list[str]):
        layer, target = layer.upper(), target.upper()
        if layer not in LAYERS or target not in LAYERS:
            raise FormatError(f"unknown layer in {layer} -> {target}")
        if LAYERS.index(target) != LAYERS.index(layer) + 1:
            raise WrongLayer(f"cannot promote {layer} to {target}")
        if layer == "ORE":
            (doc_id,) = item
            if doc_id not in self.ore:
                raise NotFound(f"ore {doc_id!r}")
            if len(params) != 2:
                raise FormatError("ORE -> MAGMA needs <TAG> <ks-name>")
            tag, ks_name = params
            if ks_name not in self.key_structures:
                raise NotFound(f"key structure {ks_name!r}")
            result = pump(self.ore[doc_id], PumpSpec(tag, self.key_structures[ks_name]), doc_id,
                          timestamp=self.clock)
            before = len(self.magma)
            self.magma.ingest(result.elements)
            return [str(len(self.magma) - before)]
        if layer == "MAGMA":
            (domain,) = item
            req = Requirement.parse(" ".join(["require"] + params))
            c = crystallize(self.magma, req, domain, formed_at=self.clock)
            version = 1 + max((v for d, v in self.crystals if d == domain), default=0)
            c = Crystal(c.domain, c.elements, c.requirement, c.formed_at, version)
            self.crystals[(domain, version)] = c
            return [f"{domain} {version}"]
        domain, version = item
        crystal = self.crystals.get((domain, int(version)))
        if crystal is None:
            raise NotFound(f"crystal {domain} {version}")
        if len(params) < 2:
            raise FormatError("CRYSTAL -> KNOWWARE needs <name> <version>")
        meta = _meta(params[2:])
        for multi in ("applications", "middleware_compat"):
            if multi in meta:
                meta[multi] = tuple(v for v in meta[multi].split(",") if v)
        if (params[0], params[1]) in self.knowware:
            raise DuplicateId(f"knowware {params[0]} {params[1]}")
        pkg = package(crystal, meta, name=params[0], version=params[1])
        if not verify(pkg):
            raise KwfError("freshly packaged knowware failed verification")
        self.knowware[(params[0], params[1])] = serialize(pkg)
        return [f"{params[0]} {params[1]}"]

    def latest_crystal(self, domain: str) -> Crystal:
        versions = [v for d, v in self.crystals if d == domain]
        if not versions:
            raise NotFound(f"crystal domain {domain!r}")
        return self.crystals[(domain, max(versions))]

    def listing(self, what: str) -> list[str]:
        what = what.upper()
        if what == "ORE":
            return sorted(self.ore)
        if what == "KS":
            return sorted(self.key_structures)
        if what == "MAGMA":
            return [e.id for e in self.magma]
        if what in ("CRYSTAL", "CRYSTALS"):
            return [f"{d} {v}" for d, v in sorted(self.crystals)]
        if what == "KNOWWARE":
            return [f"{n} {v}" + (" external" if isinstance(b, str) else "")
                    for (n, v), b in sorted(self.knowware.items())]
        if what in ("SOURCE", "SOURCES"):
            return [f"{i} {self.sources[i]['locator']}" for i in sorted(self.sources)]
        kind = what[:-1] if what.endswith("S") else what
        if kind in self.registry:
            return sorted(self.registry[kind])
        raise FormatError(f"cannot list {what!r}")

    # -- protocol -------------------------------------------------------------

    def handle_request(self, line: str, body: bytes = b"") -> bytes:
        line = line.rstrip("\r\n")
        words = line.split(" ")
        mutating = bool(words) and words[0].upper() in MUTATING
        try:
            if mutating:
                with self._write:
                    out = self._execute(line, body)
                    self._append(line, body)
            else:
                out = self._execute(line, body)
        except RequestError as exc:
            return f"ERR {exc.code} {exc.reason}\n".encode("utf-8")
        return out

    def _execute(self, line: str, body: bytes) -> bytes:
        words = [w for w in line.split(" ") if w]
        if not words:
            raise RequestError(400, "parse")
        cmd, args = words[0].upper(), words[1:]
        handler = getattr(self, f"_cmd_{cmd.lower()}", None)
        if handler is None:
            raise RequestError(400, "parse")
        tick = cmd in MUTATING
        self.clock += tick
        try:
            return self._guarded(handler, args, body)
        except Exception:
            self.clock -= tick
            raise

    @staticmethod
    def _guarded(handler, args, body) -> bytes:
        try:
            return handler(args, body)
        except RequestError:
            raise
        except WrongLayer:
            raise RequestError(409, "layer")
        except DuplicateId:
            raise RequestError(409, "duplicate")
        except NotFound:
            raise RequestError(404, "missing")
        except (FormatError, ValueError, IndexError):
            raise RequestError(400, "parse")
        except KwfError as exc:
            raise RequestError(422, type(exc).__name__)

    @staticmethod
    def _lines(items: list[str]) -> bytes:
        return (f"OK {len(items)}\n" + "".join(i + "\n" for i in items)).encode("utf-8")

    @staticmethod
    def _body(data: bytes) -> bytes:
        return b"OK %d\n" % len(data) + data

    def _cmd_list(self, args, body):
        if len(args) != 1:
            raise RequestError(400, "parse")
        return self._lines(self.listing(args[0]))

    def _cmd_put(self, args, body):
        what = args[0].upper()
        if what in ("ORE", "KS"):
            if len(args) != 3 or int(args[2]) != len(body):
                raise RequestError(400, "parse")
            name = args[1]
            text = body.decode("utf-8")
            if what == "ORE":
                if name in self.ore:
                    raise DuplicateId(name)
                self.ore[name] = text
                return f"OK {name}\n".encode()
            ks = loads_key_structure(text, name=name)
            self.key_structures[name] = ks
            return f"OK {name} {len(ks.patterns)}\n".encode()
        if what == "KNOWWARE" and len(args) == 4 and args[3].startswith("external:"):
            key = (args[1], args[2])
            if key in self.knowware:
                raise DuplicateId(" ".join(key))
            self.knowware[key] = args[3]
            return f"OK {args[1]} {args[2]}\n".encode()
        if what in ("CRYSTAL", "MAGMA", "KNOWWARE"):
            raise WrongLayer("direct writes only for ore, key structures and external knowware")
        raise RequestError(400, "parse")

    def _cmd_promote(self, args, body):
        layer = args[0].upper()
        n_item = 2 if layer == "CRYSTAL" else 1
        item, rest = args[1:1 + n_item], args[1 + n_item:]
        if len(item) != n_item or not rest:
            raise RequestError(400, "parse")
        out = self.promote(layer, item, rest[0], rest[1:])
        return ("OK " + " ".join(out) + "\n").encode("utf-8")

    def _cmd_get(self, args, body):
        what = args[0].upper()
        if what == "ORE" and len(args) == 2:
            if args[1] not in self.ore:
                raise NotFound(args[1])
            return self._body(self.ore[args[1]].encode("utf-8"))
        if what == "CRYSTAL" and len(args) == 3:
            c = self.crystals.get((args[1], int(args[2])))
            if c is None:
                raise NotFound(" ".join(args[1:]))
            return self._body(dumps_crystal(c).encode("utf-8"))
        if what == "KNOWWARE" and len(args) == 3:
            entry = self.knowware.get((args[1], args[2]))
            if entry is None:
                raise NotFound(" ".join(args[1:]))
            return self._body(entry.encode("utf-8") if isinstance(entry, str) else entry)
        raise RequestError(400, "parse")

    def _cmd_verify(self, args, body):
        if len(args) != 2:
            raise RequestError(400, "parse")
        entry = self.knowware.get((args[0], args[1]))
        if entry is None:
            raise NotFound(" ".join(args))
        if isinstance(entry, str):
            return b"OK external\n"
        try:
            verdict = verify(open_package(entry))
        except KwfError:
            raise RequestError(422, "malformed")
        if not verdict:
            raise RequestError(422, verdict.reason)
        return b"OK pass\n"

    def _cmd_query(self, args, body):
        if len(args) < 3:
            raise RequestError(400, "parse")
        form, domain, rest = args[0].upper(), args[1], " ".join(args[2:])
        crystal = self.latest_crystal(domain)
        if form == "DEFINE":
            return self._lines([dumps_element(e) for e in query_define(crystal, rest)])
        if form == "NAME":
            cond, sep, father = rest.partition("|")
            if not sep:
                raise RequestError(400, "parse")
            return self._lines(query_name(crystal, cond.strip(), father.strip()))
        raise RequestError(400, "parse")

    def _cmd_register(self, args, body):
        if len(args) < 2:
            raise RequestError(400, "parse")
        self.register(args[0], args[1], _meta(args[2:]))
        return b"OK\n"


def handle_request(wh: Warehouse, line: str, body: bytes = b"") -> bytes:
    return wh.handle_request(line, body)


def body_length(line: str) -> int:
    """Length of the request body announced by a request line (PUT ORE/KS only)."""
    words = line.split()
    if len(words) == 4 and words[0].upper() == "PUT" and words[1].upper() in ("ORE", "KS"):
        try:
            return int(words[3])
        except ValueError:
            return 0
    return 0


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        wh: Warehouse = self.server.warehouse
        while True:
            raw = self.rfile.readline()
            if not raw:
                break
            try:
                line = raw.decode("utf-8").rstrip("\r\n")
            except UnicodeDecodeError:
                self.wfile.write(b"ERR 400 parse\n")
                continue
            if line.upper() == "QUIT":
                self.wfile.write(b"OK bye\n")
                break
            n = body_length(line)
            body = self.rfile.read(n) if n else b""
            self.wfile.write(wh.handle_request(line, body))
            self.wfile.flush()


class KnowledgeServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, warehouse: Warehouse):
        super().__init__(address, _Handler)
        self.warehouse = warehouse


def serve(port: int, data_dir: str | Path | None = None, host: str = "127.0.0.1") -> None:
    data_dir = data_dir or os.environ.get("KWF_DATA_DIR")
    wh = Warehouse(data_dir)
    with KnowledgeServer((host, port), wh) as srv:
        log.info("serving on %s:%d (data dir %s)", host, srv.server_address[1], data_dir)
        try:
            srv.serve_forever()
        finally:
            wh.close()
