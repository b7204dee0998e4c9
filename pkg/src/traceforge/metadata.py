"""Metadata trace: <meta> tag extraction and robots.txt parsing.

Both work on raw text with patterns, not an HTML tree. Only double-quoted
attribute values match; the attribute keywords are case-sensitive while the
meta tag name itself is not.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import ClassVar

from .clock import Clock, SystemClock
from .errors import TraceError
from .model import Target, TraceKind, TraceResult, execute_trace
from .transport import Transport, decode_lossy, fetch_with_fallback
from .util import Multimap

META_CHARSET_RE = re.compile(r'(?i:<meta)\s+charset="(?P<charset>[^"]*)"\s*(?:/)?>')
META_HTTP_EQUIV_RE = re.compile(
    r'(?i:<meta)\s+http-equiv="(?P<name>[^"]*)"\s+content="(?P<content>[^"]*)"\s*(?:/)?>'
)
META_NAME_RE = re.compile(
    r'(?i:<meta)\s+name="(?P<name>[^"]*)"\s+content="(?P<content>[^"]*)"\s*(?:/)?>'
)

ROBOTS_LINE_RE = re.compile(r"(?P<typer>[^:]+):\s*(?P<value>.*)")


@dataclass
class RobotsReport:
    """Typed robots.txt entries plus everything that did not parse.

    Every non-empty input line lands in exactly one of the two buckets;
    unparsed lines carry their 1-based line number.
    """

    entries: Multimap = field(default_factory=Multimap)
    unparsed: list[tuple[int, str]] = field(default_factory=list)


@dataclass
class MetadataResult:
    KIND: ClassVar[TraceKind] = TraceKind.METADATA

    charset: str | None = None
    http_equiv: Multimap = field(default_factory=Multimap)
    named: Multimap = field(default_factory=Multimap)
    robots: RobotsReport = field(default_factory=RobotsReport)


def extract_meta_tags(html: str) -> tuple[str | None, Multimap, Multimap]:
    charset = None
    match = META_CHARSET_RE.search(html)
    if match:
        charset = match["charset"]
    http_equiv = Multimap((m["name"], m["content"]) for m in META_HTTP_EQUIV_RE.finditer(html))
    named = Multimap((m["name"], m["content"]) for m in META_NAME_RE.finditer(html))
    return charset, http_equiv, named


def parse_robots(text: str) -> RobotsReport:
    """Group type:value lines by type; comments and anything else go to the
    unparsed bucket with their line number. Blank lines are ignored."""
    report = RobotsReport()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            report.unparsed.append((lineno, line))
            continue
        match = ROBOTS_LINE_RE.search(line)
        if match:
            report.entries.add(match["typer"].strip(), match["value"])
        else:
            report.unparsed.append((lineno, line))
    return report


def run_metadata(transport: Transport, target: Target, clock: Clock | None = None) -> TraceResult:
    clock = clock or SystemClock()

    def body():
        warnings: list[str] = []
        landing = fetch_with_fallback(transport, target, "/")
        charset, http_equiv, named = extract_meta_tags(decode_lossy(landing.body))
        robots = RobotsReport()
        try:
            robots_exchange = fetch_with_fallback(transport, target, "/robots.txt")
        except TraceError:
            warnings.append("robots.txt unreachable")
        else:
            if robots_exchange.status_code == 200:
                robots = parse_robots(decode_lossy(robots_exchange.body))
            else:
                warnings.append(f"no robots.txt (status {robots_exchange.status_code})")
        payload = MetadataResult(charset=charset, http_equiv=http_equiv, named=named, robots=robots)
        return payload, warnings

    return execute_trace(TraceKind.METADATA, target, clock, body)
