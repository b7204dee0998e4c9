#!/usr/bin/env python3
"""Serve the console against the built-in fixture world (no network).

    python scripts/serve_fixtures.py [PORT]

Then open http://127.0.0.1:PORT/ and query www.bfh.ch.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

import uvicorn

from tests.test_controller import app_config, plant_full_fixture, GEO_BASE, SB_BASE
from tests.certs import generate_chain
from traceforge.clock import VirtualClock
from traceforge.controller import TraceController
from traceforge.fixture import FixtureTransport
from traceforge.service import create_app


def build_app():
    clock = VirtualClock()
    transport = FixtureTransport(clock=clock)
    plant_full_fixture(transport, generate_chain())
    controller = TraceController(app_config(), transport=transport, clock=clock,
                                 geo_base=GEO_BASE, sb_base=SB_BASE)
    static_dir = Path(__file__).resolve().parents[1] / "frontend" / "dist"
    return create_app(controller, static_dir=static_dir if static_dir.is_dir() else None)


if __name__ == "__main__":
    port = int(sys.argv[1]) if len(sys.argv) > 1 else 8800
    uvicorn.run(build_app(), host="127.0.0.1", port=port)
