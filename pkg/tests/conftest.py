import random

import pytest

from dbcn.naming import Digest, parse_name
from dbcn.signing import KeyPair


@pytest.fixture(scope="session")
def key():
    return KeyPair.generate(seed=b"test-publisher")


@pytest.fixture(scope="session")
def other_key():
    return KeyPair.generate(seed=b"someone-else")


@pytest.fixture
def name():
    return parse_name("/parc/csl/paper.doc")


def mutate(data: bytes, rng: random.Random, edits: int | None = None, span: int = 3000) -> bytes:
    """Random inserts, deletes and replacements."""
    b = bytearray(data)
    for _ in range(rng.randint(0, 4) if edits is None else edits):
        k = rng.random()
        p = rng.randint(0, len(b))
        if k < 1 / 3:
            b[p:p] = rng.randbytes(rng.randint(1, span))
        elif k < 2 / 3:
            del b[p:p + rng.randint(1, span)]
        else:
            b[p:p + rng.randint(1, span)] = rng.randbytes(rng.randint(1, span))
    return bytes(b)


def digests(n: int, tag: str = "id") -> list[Digest]:
    return [Digest.of(f"{tag}{i}".encode()) for i in range(n)]


# one line per acceptance criterion, printed after the run
ACCEPTANCE_RESULTS: list[tuple[int, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
