"""Walk knowledge from ore to knowware and back out through a view.

ore -> magma -> crystal -> renewed crystal -> knowware -> view -> triples,
then answer the two question forms on the biology example.

    python3 scripts/furnace_pipeline.py [--workdir DIR]
"""
import argparse
import tempfile
from dataclasses import dataclass
from pathlib import Path

from kwf.crystallizer import (
    Magma, Requirement, SubjectFilter, crystallize, detect_conflicts, dumps_crystal, query_define,
    query_name, renew,
)
from kwf.keystructure import load_key_structure
from kwf.knowware import open_package, package, serialize, verify
from kwf.middleware import ViewSpec, apply_view, dumps_triples, render_summary, summarize, to_triples
from kwf.pnlu import extract
from kwf.pump import PumpSpec, pump

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

UPDATE = ("Application software includes office suites, games, etc. "
          "System software is classified in kernels and drivers and firmware.")


@dataclass
class PipelineConfig:
    workdir: Path
    domain: str = "software"
    name: str = "software-basics"
    version: str = "1.0"


def main(cfg: PipelineConfig) -> None:
    ks = load_key_structure(CORPUS / "software.ksl")
    ore = (CORPUS / "software.txt").read_text(encoding="utf-8")

    magma = Magma(cfg.workdir / "magma.kel")
    magma.ingest(pump(ore, PumpSpec("SOFTWARE", ks), "sw", timestamp=1).elements)
    magma.save_index()
    print(f"magma: {len(magma)} elements, log at {magma.path}")

    req = Requirement(subjects=(SubjectFilter("s", prefix=True), SubjectFilter("a", prefix=True)))
    crystal = crystallize(magma, req, cfg.domain, formed_at=1)
    print(render_summary(summarize(crystal)), end="")

    # the kidney: newer knowledge about application software supersedes the old list
    fresh, _ = extract(ks, UPDATE, "update", timestamp=2)
    crystal = renew(crystal, fresh, now=2)
    assert not detect_conflicts(crystal.elements)
    print(f"renewed to version {crystal.version}")
    for e in query_define(crystal, "application software"):
        print("  application software:", e.get("members"))

    pkg = package(crystal, name=cfg.name, version=cfg.version, applications=("tutor",),
                  license_declaration="CC-BY")
    blob = serialize(pkg)
    path = cfg.workdir / f"{cfg.name}-{cfg.version}.kw"
    path.write_bytes(blob)
    print(f"knowware {path.name}: {len(blob)} bytes, verify {verify(open_package(blob))}")

    view = ViewSpec(pragmatics={"extensional-definition"}, roles={"subject", "members"})
    viewed = apply_view(open_package(blob), view)
    (cfg.workdir / "view.kcr").write_text(dumps_crystal(viewed), encoding="utf-8")
    triples = [t for e in viewed.elements for t in to_triples(e)]
    print("view as triples:")
    print(dumps_triples(triples), end="")

    bio_ks = load_key_structure(CORPUS / "erythrocyte.ksl")
    bio, _ = extract(bio_ks, (CORPUS / "erythrocyte.txt").read_text(encoding="utf-8"), "ery")
    bio_crystal = crystallize(bio, Requirement(frozenset({"concept-definition"})), "biology", 0)
    print("what is erythrocyte?", [e.get("condition") for e in query_define(bio_crystal, "erythrocyte")])
    print("what is a red blood cell called?",
          query_name(bio_crystal, "the color of the blood cell is red", "the blood cell"))


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--workdir", type=Path)
    args = ap.parse_args()
    if args.workdir is None:
        with tempfile.TemporaryDirectory() as tmp:
            main(PipelineConfig(Path(tmp)))
    else:
        args.workdir.mkdir(parents=True, exist_ok=True)
        main(PipelineConfig(args.workdir))
