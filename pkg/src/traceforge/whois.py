"""Whois trace: IANA referral resolution, record fetch, best-effort parsing.

The Whois protocol (RFC 3912) defines no response format, so parsing is a
best effort against the widespread ``Name: value`` pseudo-standard and the
raw response is always retained as the escape hatch.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import ClassVar

from .clock import Clock, SystemClock
from .errors import ProtocolViolationError, TraceError
from .model import Target, TraceKind, TraceResult, execute_trace
from .transport import Transport, tcp_line_exchange

IANA_HOST = "whois.iana.org"
WHOIS_PORT = 43

# tag: word chars, whitespace, '(', ')', '/'; value: word chars, whitespace,
# '.', ',', '-', '+', '@'. Colons end a value, so URLs truncate; the raw
# response keeps the full text.
FIELD_RE = re.compile(r"(?P<tag>(?:\s|\w|\(|\)|/)+):\s*(?P<value>(?:\s|\w|\.|,|\-|\+|@)+)")

REFER_RE = re.compile(r"^\s*refer:\s*(?P<server>\S+)\s*$", re.IGNORECASE)


@dataclass
class WhoisResult:
    KIND: ClassVar[TraceKind] = TraceKind.WHOIS

    queried_server: str
    referral_chain: list[str]
    fields: dict[str, list[str]]
    display_keys: dict[str, str]
    raw: str


def normalize_key(tag: str) -> str:
    return " ".join(tag.split()).lower()


def parse_whois_fields(raw: str) -> tuple[dict[str, list[str]], dict[str, str]]:
    """Line-oriented key extraction; returns (normalized-key -> values,
    normalized-key -> first-seen display casing)."""
    fields: dict[str, list[str]] = {}
    display: dict[str, str] = {}
    for line in raw.splitlines():
        match = FIELD_RE.search(line)
        if not match:
            continue
        tag = match["tag"].strip()
        value = match["value"].strip()
        key = normalize_key(tag)
        if not key:
            continue
        fields.setdefault(key, []).append(value)
        display.setdefault(key, tag)
    return fields, display


def _find_refer(response: str) -> str | None:
    for line in response.splitlines():
        match = REFER_RE.match(line)
        if match:
            return match["server"].lower()
    return None


def resolve_whois_server(
    transport: Transport, query: str, max_referrals: int = 2
) -> tuple[str, list[str], str | None]:
    """Walk refer: lines from the IANA root, following at most
    `max_referrals` referrals; returns (final server, chain including the
    IANA root, last response text seen)."""
    if not query:
        raise ProtocolViolationError("empty whois query")
    chain = [IANA_HOST]
    response = tcp_line_exchange(transport, IANA_HOST, WHOIS_PORT, query)
    for _ in range(max_referrals):
        referred = _find_refer(response)
        if referred is None:
            break
        chain.append(referred)
        if len(chain) - 1 == max_referrals:
            # cap reached: report the referral target without querying it
            break
        try:
            response = tcp_line_exchange(transport, referred, WHOIS_PORT, query)
        except TraceError:
            # keep the last good response; the caller retries the final
            # server itself and degrades gracefully
            break
    if len(chain) == 1:
        fields, _ = parse_whois_fields(response)
        if not fields:
            raise ProtocolViolationError(f"{IANA_HOST} returned neither a referral nor a record")
    return chain[-1], chain, response


def run_whois(transport: Transport, target: Target, clock: Clock | None = None) -> TraceResult:
    clock = clock or SystemClock()

    def body():
        warnings: list[str] = []
        server, chain, last_response = resolve_whois_server(transport, target.host)
        try:
            raw = tcp_line_exchange(transport, server, WHOIS_PORT, target.host)
        except TraceError as err:
            if last_response is None:
                raise
            warnings.append(
                f"{server} unreachable ({err}); raw holds the last referral response"
            )
            raw = last_response
        fields, display = parse_whois_fields(raw)
        payload = WhoisResult(queried_server=server, referral_chain=chain,
                              fields=fields, display_keys=display, raw=raw)
        return payload, warnings

    return execute_trace(TraceKind.WHOIS, target, clock, body)
