"""Pump the software paragraph and print marked text, elements and hierarchy.

Also shows how granularity grows as patterns are added to the key structure.

    python3 scripts/software_pump_demo.py [--out DIR]
"""
import argparse
from dataclasses import dataclass
from pathlib import Path

from kwf.elements import dumps_elements
from kwf.keystructure import load_key_structure
from kwf.pnlu import extract
from kwf.pump import PumpSpec, pump, strip_marks, write_outputs

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


@dataclass
class DemoConfig:
    doc: Path = CORPUS / "software.txt"
    ks: Path = CORPUS / "software.ksl"
    tag: str = "SOFTWARE"
    doc_id: str = "sw"
    out: Path | None = None


def main(cfg: DemoConfig) -> None:
    ks = load_key_structure(cfg.ks)
    result = pump(cfg.doc.read_text(encoding="utf-8"), PumpSpec(cfg.tag, ks), cfg.doc_id)
    print("== marked text")
    print(result.marked_text)
    print("\n== bold runs")
    print(result.bold_runs())
    print("\n== elements")
    print(dumps_elements(result.elements), end="")
    print("\n== hierarchy")
    print(result.hierarchy.render(), end="")
    print("\n== granularity (patterns -> elements)")
    plain = strip_marks(result.marked_text)
    for n in range(1, len(ks.patterns) + 1):
        print(n, len(extract(ks.prefix(n), plain, cfg.doc_id)[0]))
    if cfg.out is not None:
        write_outputs(result, cfg.out)
        print(f"\nwrote {cfg.out}/marked.txt, elements.kel, hierarchy.txt")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path)
    main(DemoConfig(out=ap.parse_args().out))
