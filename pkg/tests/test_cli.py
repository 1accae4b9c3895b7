import io
import subprocess
import sys

import pytest

from conftest import CORPUS
from kwf import cli
from kwf.crystallizer import Magma, Requirement, crystallize, dumps_crystal, loads_crystal
from kwf.elements import dumps_elements, loads_elements
from kwf.knowware import open_package, package, serialize
from kwf.pump import PumpSpec, pump, write_outputs


def run(*argv, data_dir=None):
    out, err = io.StringIO(), io.StringIO()
    args = list(argv) if data_dir is None else ["--data-dir", str(data_dir), *argv]
    code = cli.run(args, out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def pumped(tmp_path):
    code, out, _ = run("pump", "--doc", str(CORPUS / "software.txt"), "--tag", "SOFTWARE",
                       "--ks", str(CORPUS / "software.ksl"), "--out", str(tmp_path / "sw"),
                       "--doc-id", "sw", data_dir=tmp_path)
    assert code == 0
    return tmp_path


def test_pump_writes_three_files(pumped, software_ks, software_doc):
    d = pumped / "sw"
    assert sorted(p.name for p in d.iterdir()) == ["elements.kel", "hierarchy.txt", "marked.txt"]
    lib = pumped / "lib"
    write_outputs(pump(software_doc, PumpSpec("SOFTWARE", software_ks), "sw"), lib)
    for name in ("elements.kel", "hierarchy.txt", "marked.txt"):
        assert (d / name).read_bytes() == (lib / name).read_bytes()


def test_usage_errors(tmp_path):
    assert run("frobnicate", data_dir=tmp_path)[0] == 1
    assert run(data_dir=tmp_path)[0] == 1
    assert run("pump", "--doc", "x", data_dir=tmp_path)[0] == 1
    code, _, err = run("verify", str(tmp_path / "absent.kw"), data_dir=tmp_path)
    assert code == 2 and "FileNotFoundError" in err


def test_pipeline_matches_library(pumped, software_ks, software_doc):
    t = pumped
    assert run("ingest", "--elements", str(t / "sw" / "elements.kel"), "--magma", str(t / "m.kel"),
               data_dir=t)[0] == 0
    assert (t / "m.idx").exists()
    code, out, _ = run("crystallize", "--magma", str(t / "m.kel"), "--domain", "software",
                       "--pragmatics", "extensional-definition", "--formed-at", "7",
                       "--out", str(t / "c.kcr"), data_dir=t)
    assert code == 0 and "elements 3" in out
    elements = pump(software_doc, PumpSpec("SOFTWARE", software_ks), "sw").elements
    lib = crystallize(Magma().ingest(elements), Requirement(frozenset({"extensional-definition"})),
                      "software", formed_at=7)
    assert (t / "c.kcr").read_text(encoding="utf-8") == dumps_crystal(lib)

    code, out, _ = run("package", "--crystal", str(t / "c.kcr"), "--name", "sw-ext", "--version", "1",
                       "--application", "tutor", "--out", str(t / "p.kw"), data_dir=t)
    assert code == 0
    expected = serialize(package(lib, name="sw-ext", version="1", applications=("tutor",)))
    assert (t / "p.kw").read_bytes() == expected
    assert run("verify", str(t / "p.kw"), data_dir=t)[:2] == (0, "pass\n")

    data = bytearray(expected)
    data[-3] ^= 0x20
    (t / "bad.kw").write_bytes(bytes(data))
    assert run("verify", str(t / "bad.kw"), data_dir=t)[:2] == (2, "fail watermark\n")


def test_query_define_erythrocyte(tmp_path, bio_ks):
    (tmp_path / "e.txt").write_text("<BIO>" + (CORPUS / "erythrocyte.txt").read_text() + "</BIO>")
    assert run("pump", "--doc", str(tmp_path / "e.txt"), "--tag", "BIO", "--ks", str(CORPUS / "erythrocyte.ksl"),
               "--out", str(tmp_path / "o"), data_dir=tmp_path)[0] == 0
    run("ingest", "--elements", str(tmp_path / "o" / "elements.kel"), "--magma", str(tmp_path / "m.kel"),
        data_dir=tmp_path)
    run("crystallize", "--magma", str(tmp_path / "m.kel"), "--domain", "biology", "--subject", "erythrocyte",
        "--out", str(tmp_path / "c.kcr"), data_dir=tmp_path)
    code, out, _ = run("query", "define", "erythrocyte", "--crystal", str(tmp_path / "c.kcr"), data_dir=tmp_path)
    crystal = loads_crystal((tmp_path / "c.kcr").read_text())
    assert code == 0 and out == dumps_elements(crystal.elements)
    assert out.startswith("elem e#0#0 concept-definition concept-def ")
    code, out, _ = run("query", "name", "--crystal", str(tmp_path / "c.kcr"),
                       "--condition", "the color of the blood cell is red", "--father", "the blood cell",
                       data_dir=tmp_path)
    assert (code, out) == (0, "erythrocyte\n")
    assert run("query", "name", "--crystal", str(tmp_path / "c.kcr"), data_dir=tmp_path)[0] == 1


def test_inspect_round_trips(pumped):
    t = pumped
    run("ingest", "--elements", str(t / "sw" / "elements.kel"), "--magma", str(t / "m.kel"), data_dir=t)
    run("crystallize", "--magma", str(t / "m.kel"), "--domain", "software", "--subject-prefix", "s",
        "--out", str(t / "c.kcr"), data_dir=t)
    run("package", "--crystal", str(t / "c.kcr"), "--name", "n", "--version", "2", "--out", str(t / "p.kw"),
        data_dir=t)
    code, out, _ = run("inspect", str(t / "p.kw"), data_dir=t)
    assert code == 0 and "watermark = " in out
    pkg = open_package((t / "p.kw").read_bytes())
    assert serialize(pkg) == (t / "p.kw").read_bytes()
    assert pkg.crystal() == loads_crystal((t / "c.kcr").read_text())
    assert "elements 4" in run("inspect", str(t / "c.kcr"), data_dir=t)[1]
    assert run("inspect", str(t / "sw" / "elements.kel"), data_dir=t)[1] == "elements 5\n"
    kel = (t / "sw" / "elements.kel").read_text()
    assert dumps_elements(loads_elements(kel)) == kel


def test_view(pumped):
    t = pumped
    run("ingest", "--elements", str(t / "sw" / "elements.kel"), "--magma", str(t / "m.kel"), data_dir=t)
    run("crystallize", "--magma", str(t / "m.kel"), "--domain", "software", "--subject-prefix", "s",
        "--out", str(t / "c.kcr"), data_dir=t)
    (t / "v.view").write_text("view pragmatics extensional-definition\nview roles subject,members\n")
    code, out, _ = run("view", "--source", str(t / "c.kcr"), "--view", str(t / "v.view"),
                       "--out", str(t / "v.kcr"), "--triples", str(t / "v.tsv"), data_dir=t)
    assert code == 0
    viewed = loads_crystal((t / "v.kcr").read_text())
    assert {e.pragmatics for e in viewed.elements} == {"extensional-definition"}
    assert all(e.roles == ("subject", "members") for e in viewed.elements)
    assert (t / "v.tsv").read_text().count("\n") == 2


def test_bind(tmp_path):
    (tmp_path / "prog.txt").write_text(
        "object mp3 knowware\ndata songs=la\nobject jb knowledge-middleware\nmethod play reads songs -> songs + \"!\"\n")
    (tmp_path / "plan.txt").write_text("bind mp3 jb\n")
    for mode in ("static", "dynamic"):
        code, out, _ = run("bind", "--program", str(tmp_path / "prog.txt"), "--plan", str(tmp_path / "plan.txt"),
                           "--mode", mode, data_dir=tmp_path)
        assert (code, out) == (0, "mp3.play = la!\n")


def test_register_and_config(tmp_path):
    (tmp_path / "config").write_text(f"ks = {CORPUS / 'software.ksl'}\nverbosity = 0\n")
    assert run("register", "--kind", "provider", "--id", "p1", "--meta", "name=lab", data_dir=tmp_path)[:2] == (0, "OK\n")
    assert run("register", "--kind", "provider", "--id", "p1", data_dir=tmp_path)[0] == 2
    # default key structure comes from the config file
    assert run("pump", "--doc", str(CORPUS / "software.txt"), "--tag", "SOFTWARE",
               "--out", str(tmp_path / "o"), data_dir=tmp_path)[1].startswith("elements 5\n")


def test_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "kwf", "nope"], capture_output=True, text=True)
    assert proc.returncode == 1 and proc.stderr
