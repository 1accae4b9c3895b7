from hypothesis import given, settings, strategies as st

from conftest import ERYTHROCYTE, SOFTWARE_PARAGRAPH
from gen import pattern_from_pieces, random_pattern_pieces, random_sentence
from kwf.elements import dumps_elements
from kwf.keystructure import compile_key_structure, parse_pattern
from kwf.pnlu import best_match, build_hierarchy, extract, match_pattern, match_sentence, segment
from oracles import brute_force_match


def test_segment_empty():
    assert segment("") == []
    assert segment("   \n ") == []


def test_segment_software():
    sents = segment(SOFTWARE_PARAGRAPH)
    assert len(sents) == 5
    assert sents[3].text.endswith("expert systems, etc.")
    for s in sents:
        assert SOFTWARE_PARAGRAPH[s.start:s.end] == s.text


def test_segment_short():
    assert [s.text for s in segment("A. B.")] == ["A.", "B."]


def test_segment_blank_line_and_no_terminator():
    assert [s.text for s in segment("first line\n\nsecond? third")] == ["first line", "second?", "third"]
    assert [s.text for s in segment("3.14 is pi. ok")] == ["3.14 is pi.", "ok"]


def test_match_erythrocyte(bio_ks):
    e = match_sentence(bio_ks, ERYTHROCYTE)
    assert dict(e.bindings) == {
        "condition": "the color of the blood cell is red",
        "father_concept": "the blood cell",
        "concept": "erythrocyte",
    }
    assert e.pragmatics == "concept-definition"


def test_match_software_definition(software_ks):
    e = match_sentence(software_ks, SOFTWARE_PARAGRAPH.split(". ")[0] + ".")
    assert dict(e.bindings) == {
        "subject": "Software",
        "definition": "set of programs running on computer with corresponding documentation",
    }


def test_no_match(software_ks):
    assert match_sentence(software_ks, "Completely unrelated sentence.") is None


def test_etc_consumes_terminator(software_ks):
    m = best_match(software_ks, "Application software includes software for numerical computation, expert systems, etc.")
    assert m.pattern.id == "includes-etc"
    assert m.terminator == ""
    assert dict(m.captures)["members"] == "software for numerical computation, expert systems,"


def test_heaviest_pattern_wins():
    light = parse_pattern("* is *", ["subject", "x"], "light", id="light")
    heavy = parse_pattern("* is called *", ["subject", "name"], "heavy", id="heavy")
    ks = compile_key_structure("k", [light, heavy])
    assert best_match(ks, "this is called that.").pattern.id == "heavy"
    # equal weight: declaration order
    a = parse_pattern("* is *", ["s", "x"], "ta", id="a")
    b = parse_pattern("* of *", ["s", "x"], "tb", id="b")
    assert best_match(compile_key_structure("k", [a, b]), "x of y is z").pattern.id == "a"


def test_empty_capture_rejected():
    p = parse_pattern("* is a *", ["s", "d"], "t")
    assert match_pattern(p, "is a thing.") is None
    assert match_pattern(p, "thing is a.") is None


def test_case_insensitive_word_boundary():
    p = parse_pattern("* IS A *", ["s", "d"], "t")
    assert match_pattern(p, "Cat is a pet.") is not None
    assert match_pattern(p, "Cat this a pet.") is None
    assert match_pattern(p, "Cat is another.") is None


def test_extract_software(software_ks):
    elements, h = extract(software_ks, SOFTWARE_PARAGRAPH, "sw")
    assert len(elements) == 5
    assert [e.pattern_id for e in elements] == [
        "is-a", "classified-in", "includes-and", "includes-etc", "includes-etc"]
    # cross-check every binding with the brute-force oracle
    for e, s in zip(elements, segment(SOFTWARE_PARAGRAPH)):
        p = software_ks.pattern(e.pattern_id)
        pieces = [None if not hasattr(t, "text") else t.text for t in p.tokens]
        assert brute_force_match(pieces, p.roles, s.text) == dict(e.bindings)
    assert h.tags() == ["intensional-definition", "classification", "extensional-definition"]


def test_extract_empty_and_nonmatching(software_ks):
    assert extract(software_ks, "", "d") == ([], build_hierarchy([]))
    els, h = extract(software_ks, "Nothing to see. Move along!", "d")
    assert els == [] and len(h) == 0


def test_build_hierarchy(software_ks):
    elements, _ = extract(software_ks, SOFTWARE_PARAGRAPH, "sw")
    h = build_hierarchy(elements)
    assert [(t, len(g)) for t, g in h.groups] == [
        ("intensional-definition", 1), ("classification", 1), ("extensional-definition", 3)]
    assert build_hierarchy([]).groups == ()
    same = build_hierarchy(elements[2:])
    assert len(same) == 1 and same.groups[0][1] == tuple(elements[2:])


def test_byte_ranges_are_utf8():
    p = parse_pattern("* is a *", ["s", "d"], "t")
    ks = compile_key_structure("k", [p])
    text = "Déjà vu. Café is a drink."
    (e,), _ = extract(ks, text, "d")
    raw = text.encode("utf-8")
    assert raw[e.source.start:e.source.end].decode() == "Café is a drink."


# -- properties ---------------------------------------------------------------------

@settings(max_examples=300, deadline=None)
@given(st.randoms(use_true_random=False))
def test_matcher_agrees_with_oracle(rng):
    pieces = random_pattern_pieces(rng)
    p = pattern_from_pieces(pieces)
    sentence = random_sentence(rng, pieces)
    m = match_pattern(p, sentence)
    expected = brute_force_match(pieces, p.roles, sentence)
    assert (None if m is None else dict(m.captures)) == expected


@settings(max_examples=200, deadline=None)
@given(st.randoms(use_true_random=False))
def test_reconstruction(rng):
    pieces = random_pattern_pieces(rng)
    p = pattern_from_pieces(pieces)
    sentence = random_sentence(rng, pieces)
    m = match_pattern(p, sentence)
    if m is not None:
        assert m.reconstruct() == " ".join(sentence.split())


def test_locality(software_ks):
    good = "Software is a set of programs."
    bad = "Nothing here matches."
    for text in (good + " " + bad, bad + " " + good):
        els, _ = extract(software_ks, text, "d")
        assert len(els) == 1 and els[0].get("subject") == "Software"


def test_extract_deterministic(software_ks):
    a = dumps_elements(extract(software_ks, SOFTWARE_PARAGRAPH, "sw")[0])
    b = dumps_elements(extract(software_ks, SOFTWARE_PARAGRAPH, "sw")[0])
    assert a == b
