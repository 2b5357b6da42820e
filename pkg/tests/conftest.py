from fractions import Fraction

import pytest

from zkowf.dist import BitString
from zkowf.zoo import DialProfile, Graph, make_dial_nizk, make_graph_iso

ACCEPTANCE: dict[int, tuple[str, str]] = {}

YES = BitString.from_str("1010")
NO = BitString.from_str("0010")

C4 = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
C4_RELABELED = Graph.from_edges(4, [(0, 2), (2, 1), (1, 3), (3, 0)])
PAW = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2)])


@pytest.fixture
def dial_nizk():
    return make_dial_nizk(DialProfile(Fraction(1, 16), Fraction(1, 8), Fraction(1, 4), m=10, ell_z=4))


@pytest.fixture
def gi_yes():
    return make_graph_iso(C4, C4_RELABELED), (C4, C4_RELABELED)


@pytest.fixture
def gi_no():
    return make_graph_iso(C4, PAW), (C4, PAW)


def record(criterion: int, passed: bool, detail: str):
    ACCEPTANCE[criterion] = ("PASS" if passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {detail}")
