import pytest

from avlane.network import build_network


def make_link(lid, a, b, length=1000.0, lanes=2, speed=25.0, cls="highway", **kw):
    return {"id": lid, "from": a, "to": b, "length_m": length, "lanes": lanes,
            "speed_mps": speed, "class": cls, **kw}


@pytest.fixture
def diamond():
    """4-node diamond: two equal two-link routes from s to t."""
    return build_network(["s", "a", "b", "t"], [
        make_link("sa", "s", "a", cls="major"),
        make_link("at", "a", "t", cls="major"),
        make_link("sb", "s", "b", cls="major"),
        make_link("bt", "b", "t", cls="major"),
    ])


@pytest.fixture
def mixed_classes():
    return build_network(["x", "y", "z", "w"], [
        make_link("h", "x", "y", lanes=3, cls="highway"),
        make_link("m", "y", "z", cls="major"),
        make_link("o", "z", "w", lanes=1, cls="other"),
    ])


# acceptance verdicts, printed once at the end of the run
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
