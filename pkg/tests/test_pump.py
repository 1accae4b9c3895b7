import pytest
from hypothesis import given, settings, strategies as st

from conftest import CORPUS, SOFTWARE_PARAGRAPH
from kwf.errors import NestedSameTag, UnbalancedTag
from kwf.keystructure import load_key_structure
from kwf.pnlu import extract
from kwf.pump import PumpSpec, pump, scan_tags, strip_marks, write_outputs

EXPECTED_RUNS = ["is a", "is classified in", "and", "includes", "and", "includes", "etc.", "includes", "etc."]


def _scan_oracle(doc, tag):
    out, pos = [], 0
    open_t, close_t = f"<{tag}>", f"</{tag}>"
    while True:
        a = doc.find(open_t, pos)
        if a < 0:
            return out
        b = doc.find(close_t, a)
        out.append(doc[a + len(open_t):b])
        pos = b + len(close_t)


def test_scan_single():
    doc = "<SOFTWARE>abc</SOFTWARE>"
    (r,) = scan_tags(doc, "SOFTWARE")
    assert doc[r.start:r.end] == "abc"


def test_scan_absent():
    assert scan_tags("plain text", "SOFTWARE") == []


def test_scan_two_regions():
    doc = "<A>x</A>y<A>z</A>"
    regions = scan_tags(doc, "a")
    assert [doc[r.start:r.end] for r in regions] == _scan_oracle(doc, "A") == ["x", "z"]


@pytest.mark.parametrize("doc,exc", [
    ("<A>x", UnbalancedTag),
    ("x</A>", UnbalancedTag),
    ("<A><A>x</A></A>", NestedSameTag),
])
def test_scan_errors(doc, exc):
    with pytest.raises(exc):
        scan_tags(doc, "A")


def test_pump_software(software_doc, software_ks):
    r = pump(software_doc, PumpSpec("software", software_ks), "sw")
    assert r.bold_runs() == EXPECTED_RUNS
    assert len(r.elements) == 5
    assert r.hierarchy.tags() == ["intensional-definition", "classification", "extensional-definition"]
    assert strip_marks(r.marked_text) == SOFTWARE_PARAGRAPH


def test_pump_tag_absent(software_ks):
    r = pump("no tags at all", PumpSpec("SOFTWARE", software_ks), "d")
    assert r.elements == [] and r.marked_text == "" and r.discarded_spans == []


def test_pump_region_all_discarded(software_ks):
    doc = "<SOFTWARE>Nothing matches here. Nor here!</SOFTWARE>"
    r = pump(doc, PumpSpec("SOFTWARE", software_ks), "d")
    assert r.elements == []
    (region,) = scan_tags(doc, "SOFTWARE")
    assert r.discarded_spans == [(region.start, region.end)]


def test_discarded_and_kept_partition_region(software_ks):
    body = "Noise first. Software is a thing. More noise! Tools includes hammers and saws."
    doc = f"<SOFTWARE>{body}</SOFTWARE>"
    r = pump(doc, PumpSpec("SOFTWARE", software_ks), "d")
    (region,) = scan_tags(doc, "SOFTWARE")
    raw = doc.encode()
    covered = sorted([(s.start, s.end) for e in r.elements for s in e.sources] + r.discarded_spans)
    assert covered[0][0] == region.start and covered[-1][1] == region.end
    for (a, b), (c, d) in zip(covered, covered[1:]):
        assert b == c
    assert [raw[a:b].decode() for a, b in r.discarded_spans] == ["Noise first. ", " More noise! "]


def test_pump_compositional(software_ks):
    doc = ("<SOFTWARE>Software is a set of programs.</SOFTWARE> gap "
           "<SOFTWARE>Noise. Tools includes hammers and saws.</SOFTWARE>")
    r = pump(doc, PumpSpec("SOFTWARE", software_ks), "d")
    expected = []
    for i, reg in enumerate(scan_tags(doc, "SOFTWARE")):
        expected += extract(software_ks, doc[reg.start:reg.end], "d", region=i,
                            byte_offset=len(doc[:reg.start].encode()))[0]
    assert r.elements == expected


def test_granularity_monotone(software_doc, software_ks):
    counts = [len(pump(software_doc, PumpSpec("SOFTWARE", software_ks.prefix(n)), "sw").elements)
              for n in range(1, 5)]
    assert counts == sorted(counts)


def test_marking_idempotent(software_doc, software_ks):
    spec = PumpSpec("SOFTWARE", software_ks)
    first = pump(software_doc, spec, "sw")
    again = pump(f"<SOFTWARE>{strip_marks(first.marked_text)}</SOFTWARE>", spec, "sw")
    assert again.marked_text == first.marked_text
    assert [e.content() for e in again.elements] == [e.content() for e in first.elements]
    assert again.hierarchy.tags() == first.hierarchy.tags()


def test_write_outputs(tmp_path, software_doc, software_ks):
    r = pump(software_doc, PumpSpec("SOFTWARE", software_ks), "sw")
    write_outputs(r, tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["elements.kel", "hierarchy.txt", "marked.txt"]
    assert (tmp_path / "hierarchy.txt").read_text().splitlines()[2] == \
        "extensional-definition: sw#0#2 sw#0#3 sw#0#4"


sentences = st.sampled_from([
    "Software is a set of programs.", "Noise here.", "Tools includes hammers and saws.",
    "Apps includes games, etc.", "Random words!", "X is classified in a and b.",
])


@settings(max_examples=100, deadline=None)
@given(st.lists(sentences, max_size=6), st.integers(0, 3))
def test_adding_pattern_never_loses_elements(body, n):
    ks = load_key_structure(CORPUS / "software.ksl")
    doc = "<T>" + " ".join(body) + "</T>"
    small = len(pump(doc, PumpSpec("T", ks.prefix(n)), "d").elements)
    big = len(pump(doc, PumpSpec("T", ks.prefix(n + 1)), "d").elements)
    assert big >= small
