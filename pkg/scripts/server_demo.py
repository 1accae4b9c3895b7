"""Start a knowledge server on a free port and drive it over TCP.

    python3 scripts/server_demo.py [--data-dir DIR]

With ``--data-dir`` the journal persists; a second run replays it first, so the
steps that create an existing item answer ``ERR 409 duplicate``; reads still work.
"""
import argparse
import socket
import tempfile
import threading
from pathlib import Path

from kwf.server import KnowledgeServer, Warehouse

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def request(f, line: str, body: bytes = b"") -> bytes:
    f.write(line.encode("utf-8") + b"\n" + body)
    f.flush()
    head = f.readline()
    word, _, rest = head.decode("utf-8").rstrip("\n").partition(" ")
    if word == "OK" and line.split()[0] == "GET":
        return head + f.read(int(rest))
    if word == "OK" and line.split()[0] in ("LIST", "QUERY"):
        return head + b"".join(f.readline() for _ in range(int(rest)))
    return head


def session(address) -> None:
    ks = (CORPUS / "software.ksl").read_bytes()
    ore = (CORPUS / "software.txt").read_bytes()
    steps = [
        ("REGISTER PROVIDER lab", b""),
        (f"PUT KS software {len(ks)}", ks),
        (f"PUT ORE sw {len(ore)}", ore),
        ("PROMOTE ORE sw MAGMA SOFTWARE software", b""),
        ("PROMOTE MAGMA software CRYSTAL pragmatics=classification,extensional-definition", b""),
        ("PROMOTE CRYSTAL software 1 KNOWWARE software-basics 1.0", b""),
        ("LIST KNOWWARE", b""),
        ("VERIFY software-basics 1.0", b""),
        ("QUERY DEFINE software system software", b""),
    ]
    with socket.create_connection(address) as s:
        f = s.makefile("rwb")
        for line, body in steps:
            print(">", line)
            print(request(f, line, body).decode("utf-8"), end="")
        f.write(b"QUIT\n")
        f.flush()
        print(f.readline().decode("utf-8"), end="")


def main(data_dir: Path) -> None:
    wh = Warehouse(data_dir)
    srv = KnowledgeServer(("127.0.0.1", 0), wh)
    threading.Thread(target=srv.serve_forever, daemon=True).start()
    try:
        session(srv.server_address)
    finally:
        srv.shutdown()
        srv.server_close()
        wh.close()


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data-dir", type=Path)
    args = ap.parse_args()
    if args.data_dir is None:
        with tempfile.TemporaryDirectory() as tmp:
            main(Path(tmp))
    else:
        main(args.data_dir)
