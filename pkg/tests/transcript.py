"""Scripted warehouse session used by the golden-transcript checks."""
from pathlib import Path

from kwf.server import Warehouse

CORPUS = Path(__file__).resolve().parent.parent / "corpus"
GOLDEN = Path(__file__).resolve().parent / "golden" / "session.txt"


def script() -> list[tuple[str, bytes]]:
    sw_ks = (CORPUS / "software.ksl").read_bytes()
    bio_ks = (CORPUS / "erythrocyte.ksl").read_bytes()
    sw = (CORPUS / "software.txt").read_bytes()
    bio = b"<BIO>" + (CORPUS / "erythrocyte.txt").read_bytes() + b"</BIO>\n"
    return [
        ("REGISTER PROVIDER lab name=soft-lab", b""),
        ("REGISTER REQUESTER student", b""),
        ("REGISTER MIDDLEWARE viewer category=view-generation", b""),
        ("REGISTER PROTOCOL kel2triples from=kel-1 to=triples", b""),
        ("REGISTER SOURCE encyclopedia locator=https://example.org/encyclopedia", b""),
        ("REGISTER PROVIDER lab", b""),
        (f"PUT KS software {len(sw_ks)}", sw_ks),
        (f"PUT KS bio {len(bio_ks)}", bio_ks),
        (f"PUT ORE sw {len(sw)}", sw),
        (f"PUT ORE ery {len(bio)}", bio),
        ("PROMOTE ORE sw KNOWWARE", b""),
        ("PROMOTE ORE sw MAGMA SOFTWARE software", b""),
        ("PROMOTE ORE ery MAGMA BIO bio", b""),
        ("PROMOTE MAGMA software CRYSTAL pragmatics=intensional-definition,classification,extensional-definition", b""),
        ("PROMOTE MAGMA biology CRYSTAL pragmatics=concept-definition", b""),
        ("PROMOTE CRYSTAL software 1 KNOWWARE software-basics 1.0 license_declaration=CC-BY applications=tutor", b""),
        ("PROMOTE CRYSTAL biology 1 KNOWWARE blood 0.1", b""),
        ("PUT KNOWWARE atlas 2 external:https://example.org/atlas.kw", b""),
        ("PUT CRYSTAL software 9", b""),
        ("LIST ORE", b""),
        ("LIST KS", b""),
        ("LIST MAGMA", b""),
        ("LIST CRYSTALS", b""),
        ("LIST KNOWWARE", b""),
        ("LIST PROVIDERS", b""),
        ("LIST REQUESTERS", b""),
        ("LIST MIDDLEWARE", b""),
        ("LIST PROTOCOLS", b""),
        ("LIST SOURCES", b""),
        ("GET CRYSTAL software 1", b""),
        ("GET KNOWWARE software-basics 1.0", b""),
        ("GET ORE missing", b""),
        ("VERIFY software-basics 1.0", b""),
        ("VERIFY blood 0.1", b""),
        ("VERIFY atlas 2", b""),
        ("QUERY DEFINE software software", b""),
        ("QUERY DEFINE biology erythrocyte", b""),
        ("QUERY NAME biology the color of the blood cell is red | the blood cell", b""),
        ("FROB", b""),
    ]


def run(wh: Warehouse, steps=None) -> bytes:
    out = bytearray()
    for line, body in steps if steps is not None else script():
        out += b"> " + line.encode("utf-8") + b"\n" + body
        out += wh.handle_request(line, body)
    return bytes(out)


READ_ONLY = [(l, b) for l, b in script() if l.split()[0] in ("LIST", "GET", "VERIFY", "QUERY")]
