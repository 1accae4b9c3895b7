"""``kwf`` command line: one subcommand per lifecycle stage.

Exit codes: 0 success, 1 usage error, 2 domain error (diagnostic on stderr).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import binder, knowware
from .crystallizer import (
    Magma, Requirement, SubjectFilter, crystallize, dumps_crystal, loads_crystal,
    query_define, query_name,
)
from .elements import dumps_element, loads_elements
from .errors import KwfError
from .keystructure import load_key_structure
from .middleware import apply_view, dumps_triples, loads_view, render_summary, summarize, to_triples
from .pump import PumpSpec, pump, write_outputs

log = logging.getLogger("kwf")

SUBCOMMANDS = ("pump", "ingest", "crystallize", "package", "verify", "inspect",
               "view", "query", "bind", "serve", "register")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class CliConfig:
    data_dir: Path
    ks: Path | None = None
    verbosity: int = 0

    @classmethod
    def load(cls, data_dir: str | None = None) -> "CliConfig":
        root = Path(data_dir or os.environ.get("KWF_DATA_DIR") or Path.home() / ".kwf")
        cfg = cls(root)
        conf = root / "config"
        if conf.is_file():
            for line in conf.read_text(encoding="utf-8").splitlines():
                key, sep, value = line.partition("=")
                if not sep or line.lstrip().startswith("#"):
                    continue
                key, value = key.strip(), value.strip()
                if key == "ks":
                    cfg.ks = Path(value)
                elif key == "verbosity":
                    cfg.verbosity = int(value)
        return cfg


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _write(path: str, text: str | bytes) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(text, bytes):
        p.write_bytes(text)
    else:
        p.write_text(text, encoding="utf-8")


def _csv(value: str | None):
    return None if value is None else frozenset(v for v in value.split(",") if v)


def cmd_pump(args, cfg, out):
    ks_path = args.ks or cfg.ks
    if ks_path is None:
        raise UsageError("pump: --ks is required (or set ks= in the config file)")
    ks = load_key_structure(ks_path)
    doc_id = args.doc_id or Path(args.doc).stem
    result = pump(_read(args.doc), PumpSpec(args.tag, ks), doc_id, timestamp=args.timestamp)
    write_outputs(result, args.out)
    out.write(f"elements {len(result.elements)}\ngroups {len(result.hierarchy)}\n"
              f"discarded {len(result.discarded_spans)}\n")


def cmd_ingest(args, cfg, out):
    magma = Magma.load(args.magma)
    before = len(magma)
    for f in args.elements:
        magma.ingest(loads_elements(_read(f)))
    magma.save_index()
    out.write(f"ingested {len(magma) - before}\ntotal {len(magma)}\n")


def _requirement(args) -> Requirement:
    subjects = tuple(SubjectFilter(s) for s in args.subject or ())
    subjects += tuple(SubjectFilter(s, prefix=True) for s in args.subject_prefix or ())
    try:
        return Requirement(_csv(args.pragmatics), subjects, _csv(args.source))
    except ValueError as exc:
        raise UsageError(f"crystallize: {exc}") from exc


def cmd_crystallize(args, cfg, out):
    magma = Magma.load(args.magma)
    c = crystallize(magma, _requirement(args), args.domain, formed_at=args.formed_at)
    text = dumps_crystal(c)
    if args.out:
        _write(args.out, text)
    out.write(render_summary(summarize(c)))


def cmd_package(args, cfg, out):
    crystal = loads_crystal(_read(args.crystal))
    meta = {"name": args.name, "version": args.version}
    for key in ("license_declaration", "authentication", "adapter", "docs_functions", "docs_use",
                "docs_maintenance"):
        value = getattr(args, key)
        if value is not None:
            meta[key] = value
    meta["applications"] = tuple(args.application or ())
    meta["middleware_compat"] = tuple(args.middleware or ())
    pkg = knowware.package(crystal, meta)
    data = knowware.serialize(pkg)
    _write(args.out, data)
    out.write(f"package {args.out}\nwatermark {pkg.manifest.watermark}\n")


def _open(path: str) -> knowware.KnowwarePackage:
    return knowware.open_package(Path(path).read_bytes())


def cmd_verify(args, cfg, out):
    verdict = knowware.verify(_open(args.package))
    out.write(f"{verdict}\n")
    return 0 if verdict else 2


def cmd_inspect(args, cfg, out):
    path = args.file
    data = Path(path).read_bytes()
    if data.startswith(knowware.MAGIC):
        out.write(knowware.dumps_manifest(knowware.interface_of(knowware.open_package(data))))
    elif data.startswith(b"crystal "):
        out.write(render_summary(summarize(loads_crystal(data.decode("utf-8")))))
    else:
        elements = loads_elements(data.decode("utf-8"))
        out.write(f"elements {len(elements)}\n")


def cmd_view(args, cfg, out):
    data = Path(args.source).read_bytes()
    source = (knowware.open_package(data) if data.startswith(knowware.MAGIC)
              else loads_crystal(data.decode("utf-8")))
    result = apply_view(source, loads_view(_read(args.view)))
    if args.out:
        _write(args.out, dumps_crystal(result))
    if args.triples:
        triples = [t for e in result.elements if e.key_role for t in to_triples(e)]
        _write(args.triples, dumps_triples(triples))
    out.write(render_summary(summarize(result)))


def cmd_query(args, cfg, out):
    crystal = loads_crystal(_read(args.crystal))
    if args.form == "define":
        if not args.terms:
            raise UsageError("query define: concept required")
        for e in query_define(crystal, " ".join(args.terms)):
            out.write(dumps_element(e) + "\n")
    else:
        if args.condition is None or args.father is None:
            raise UsageError("query name: --condition and --father are required")
        for concept in query_name(crystal, args.condition, args.father):
            out.write(concept + "\n")


def cmd_bind(args, cfg, out):
    program = binder.loads_program(_read(args.program))
    plan = binder.loads_plan(_read(args.plan))
    if args.mode:
        plan = binder.BindingPlan(plan.bindings, args.mode, plan.co_use)
    bound = binder.bind(program, plan)
    calls = args.call or [f"{o.id}.{m}" for o in bound.objects if o.kind != binder.MIDDLEWARE
                          for m in o.methods]
    for call in calls:
        obj, _, method = call.partition(".")
        try:
            value = binder.dispatch(bound, obj, method)
            out.write(f"{call} = {value}\n")
        except (binder.MissingData, binder.NoSuchMethod) as exc:
            if args.call:
                raise
            out.write(f"{call} ! {type(exc).__name__}\n")


def cmd_serve(args, cfg, out):
    from .server import serve

    serve(args.port, args.data_dir or cfg.data_dir, host=args.host)


def cmd_register(args, cfg, out):
    from .server import Warehouse

    wh = Warehouse(args.data_dir or cfg.data_dir)
    try:
        line = " ".join(["REGISTER", args.kind.upper(), args.id] + list(args.meta or ()))
        resp = wh.handle_request(line).decode("utf-8")
    finally:
        wh.close()
    out.write(resp)
    return 0 if resp.startswith("OK") else 2


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kwf", description="knowware toolkit: pump, crystallize, package, serve")
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("--data-dir", dest="global_data_dir")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("pump", help="run a key structure over tagged regions")
    s.add_argument("--doc", required=True)
    s.add_argument("--tag", required=True)
    s.add_argument("--ks")
    s.add_argument("--out", required=True)
    s.add_argument("--doc-id")
    s.add_argument("--timestamp", type=int, default=0)

    s = sub.add_parser("ingest", help="append element files to a magma log")
    s.add_argument("--elements", nargs="+", required=True)
    s.add_argument("--magma", required=True)

    s = sub.add_parser("crystallize", help="form a crystal from a magma log")
    s.add_argument("--magma", required=True)
    s.add_argument("--domain", required=True)
    s.add_argument("--pragmatics")
    s.add_argument("--subject", action="append")
    s.add_argument("--subject-prefix", action="append")
    s.add_argument("--source")
    s.add_argument("--formed-at", type=int, default=0)
    s.add_argument("--out")

    s = sub.add_parser("package", help="package a crystal as knowware")
    s.add_argument("--crystal", required=True)
    s.add_argument("--name", required=True)
    s.add_argument("--version", required=True)
    s.add_argument("--license", dest="license_declaration")
    s.add_argument("--application", action="append")
    s.add_argument("--middleware", action="append")
    s.add_argument("--adapter")
    s.add_argument("--authentication")
    s.add_argument("--docs-functions")
    s.add_argument("--docs-use")
    s.add_argument("--docs-maintenance")
    s.add_argument("--out", required=True)

    s = sub.add_parser("verify", help="check a package's watermark and content list")
    s.add_argument("package")

    s = sub.add_parser("inspect", help="show a package manifest or a crystal summary")
    s.add_argument("file")

    s = sub.add_parser("view", help="apply a view to a crystal or package")
    s.add_argument("--source", required=True)
    s.add_argument("--view", required=True)
    s.add_argument("--out")
    s.add_argument("--triples")

    s = sub.add_parser("query", help="ask a crystal 'what is X' or 'what is it called'")
    s.add_argument("form", choices=("define", "name"))
    s.add_argument("terms", nargs="*")
    s.add_argument("--crystal", required=True)
    s.add_argument("--condition")
    s.add_argument("--father")

    s = sub.add_parser("bind", help="bind knowware objects and dispatch methods")
    s.add_argument("--program", required=True)
    s.add_argument("--plan", required=True)
    s.add_argument("--mode", choices=("static", "dynamic"))
    s.add_argument("--call", action="append")

    s = sub.add_parser("serve", help="run the knowledge server")
    s.add_argument("--port", type=int, required=True)
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--data-dir")

    s = sub.add_parser("register", help="register a provider, requester, middleware, protocol or source")
    s.add_argument("--kind", required=True,
                   choices=("provider", "requester", "middleware", "protocol", "source"))
    s.add_argument("--id", required=True)
    s.add_argument("--meta", nargs="*")
    s.add_argument("--data-dir")
    return p


def run(argv: list[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError(f"kwf: a subcommand is required ({', '.join(SUBCOMMANDS)})")
        cfg = CliConfig.load(args.global_data_dir)
        level = max(cfg.verbosity, args.verbose)
        logging.basicConfig(level=logging.DEBUG if level > 1 else logging.INFO if level else logging.WARNING)
        code = globals()[f"cmd_{args.command}"](args, cfg, out)
        return code or 0
    except UsageError as exc:
        err.write(f"{exc}\n")
        return 1
    except (KwfError, OSError, UnicodeDecodeError) as exc:
        err.write(f"kwf: {type(exc).__name__}: {exc}\n")
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
