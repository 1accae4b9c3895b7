from pathlib import Path

import pytest
from hypothesis import settings

from kwf.keystructure import load_key_structure

# same examples on every run; the database would otherwise replay old failures first
settings.register_profile("repo", derandomize=True, database=None)
settings.load_profile("repo")

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

SOFTWARE_PARAGRAPH = (
    "Software is a set of programs running on computer with corresponding documentation. "
    "Software is classified in three classes: system software, application software and "
    "supporting software. System software includes operating systems, compilers, database "
    "management systems and utility programs. Application software includes software for "
    "numerical computation, expert systems, etc. Supporting software includes software "
    "middleware, application server, etc."
)
ERYTHROCYTE = "If the color of the blood cell is red then the blood cell is called erythrocyte."


@pytest.fixture(scope="session")
def software_ks():
    return load_key_structure(CORPUS / "software.ksl")


@pytest.fixture(scope="session")
def bio_ks():
    return load_key_structure(CORPUS / "erythrocyte.ksl")


@pytest.fixture(scope="session")
def software_doc():
    return (CORPUS / "software.txt").read_text(encoding="utf-8")


# criterion number -> (title, passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance")
    for n in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {n}. {title}: {detail}")
