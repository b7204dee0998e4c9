import pytest

from traceforge.clock import VirtualClock
from traceforge.fixture import FixtureTransport


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" in nodeid and getattr(report, "when", "call") == "call":
                name = nodeid.split("::")[-1]
                lines.append((name, "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for name, verdict in lines:
            terminalreporter.write_line(f"  {verdict}  {name}")


@pytest.fixture
def clock():
    return VirtualClock()


@pytest.fixture
def transport(clock):
    return FixtureTransport(clock=clock)


@pytest.fixture(scope="session")
def cert_chain():
    """Three-certificate hierarchy (leaf, intermediate, root) in DER form.

    Generated once per session so repeated runs inside the session see
    byte-identical blobs.
    """
    from tests.certs import generate_chain

    return generate_chain()


def plant_paper_geo_fixture(transport, base="http://geo.fixture"):
    """The ip-api style response body for 46.126.85.7, verbatim."""
    body = (
        '{\n'
        '"status":"success",\n'
        '"country":"Switzerland",\n'
        '"countryCode":"CH",\n'
        '"region":"05",\n'
        '"regionName":"Bern",\n'
        '"city":"Bienne",\n'
        '"zip":"2504",\n'
        '"lat":"47.1581",\n'
        '"lon":"7.283",\n'
        '"timezone":"Europe\\/Zurich",\n'
        '"isp":"Cablecom GmbH",\n'
        '"org":"Cablecom GmbH",\n'
        '"as":"AS6830 Liberty Global Operations B.V.",\n'
        '"query":"46.126.85.7"\n'
        '}'
    )
    transport.add_http(f"{base}/json/46.126.85.7", status=200, body=body)
    return base
