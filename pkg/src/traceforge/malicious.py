"""Malicious activity lookups: safe-browsing HTTP API and DNS blocklist,
plus the combined trace that rates every external relation the crawler
finds.

A safe-browsing listing means the URL was flagged at least once in the
past, not that the site is infected right now. DNSBL return codes are
recorded raw, not interpreted.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace
from typing import ClassVar
from urllib.parse import quote, urlsplit

from .clock import Clock, SystemClock
from .content import CrawlerConfig, PatternRegistry, crawl
from .dnstrace import query_message
from .errors import (
    ConfigMissingError,
    ProtocolViolationError,
    RateLimitedError,
    RemoteUnreachableError,
    TraceError,
)
from .model import Target, TraceKind, TraceResult, TraceStatus, execute_trace
from .transport import Transport

DEFAULT_SAFEBROWSING_BASE = "https://sb-ssl.google.com"
DEFAULT_DNSBL_ZONE = "dbl.spamhaus.org"

THREAT_TYPES = ("phishing", "malware")

# free-tier ceilings, enforced client-side per process
SAFEBROWSING_DAILY_BUDGET = 10_000
DNSBL_DAILY_BUDGET = 300_000


@dataclass
class SafeBrowsingVerdict:
    listed: bool
    threat_types: set[str] = field(default_factory=set)
    raw_body: str | None = None


@dataclass
class DnsblVerdict:
    listed: bool
    returned_addresses: list[str] = field(default_factory=list)


@dataclass
class MaliciousActivityResult:
    KIND: ClassVar[TraceKind] = TraceKind.MALICIOUS_ACTIVITY

    safe_browsing: SafeBrowsingVerdict | None = None
    dnsbl: DnsblVerdict | None = None


@dataclass
class MaliciousRelationsResult:
    KIND: ClassVar[TraceKind] = TraceKind.MALICIOUS_RELATIONS

    per_url: dict[str, MaliciousActivityResult] = field(default_factory=dict)


class RequestBudget:
    """Process-lifetime counter; going over raises locally instead of
    hammering the upstream service."""

    def __init__(self, limit: int, label: str):
        self.limit = limit
        self.label = label
        self._used = 0
        self._lock = threading.Lock()

    def spend(self) -> None:
        with self._lock:
            if self._used >= self.limit:
                raise RateLimitedError(f"{self.label} budget of {self.limit} requests exhausted")
            self._used += 1

    @property
    def used(self) -> int:
        return self._used


def safe_browsing_lookup(
    transport: Transport,
    url: str,
    api_key: str,
    base_url: str = DEFAULT_SAFEBROWSING_BASE,
    budget: RequestBudget | None = None,
) -> SafeBrowsingVerdict:
    """GET lookup: 204 means unknown to the service, 200 carries the threat
    type(s) in the body."""
    if not api_key:
        raise ConfigMissingError("safe-browsing lookups need an API key (googleSafeBrowsingKey)")
    if budget is not None:
        budget.spend()
    lookup_url = (
        f"{base_url}/safebrowsing/api/lookup?client=dignite&apikey={api_key}"
        f"&appver=1.0&pver=3.0&url={quote(url, safe='')}"
    )
    exchange = transport.http_fetch(lookup_url)
    if exchange.status_code == 204:
        return SafeBrowsingVerdict(listed=False)
    if exchange.status_code == 200:
        body = exchange.body.decode("utf-8", errors="replace").strip()
        threats = {t for t in body.split(",") if t in THREAT_TYPES}
        if not threats:
            raise ProtocolViolationError(f"unexpected safe-browsing body {body!r}")
        return SafeBrowsingVerdict(listed=True, threat_types=threats, raw_body=body)
    if exchange.status_code in (403, 429):
        raise RateLimitedError(f"safe-browsing quota response {exchange.status_code}")
    raise ProtocolViolationError(f"unexpected safe-browsing status {exchange.status_code}")


def dnsbl_lookup(
    transport: Transport,
    domain: str,
    zone: str = DEFAULT_DNSBL_ZONE,
    budget: RequestBudget | None = None,
) -> DnsblVerdict:
    """A query under the blocklist zone: NXDOMAIN is clean, any A answer is
    a listing."""
    if budget is not None:
        budget.spend()
    message = query_message(transport, f"{domain}.{zone}", "A", max_attempts=1)
    if message.is_nxdomain:
        return DnsblVerdict(listed=False)
    addresses = [r.rdata for r in message.answers if r.rtype == "A"]
    return DnsblVerdict(listed=bool(addresses), returned_addresses=addresses)


def _activity_for_host(
    transport: Transport,
    host: str,
    api_key: str,
    sb_base: str,
    dnsbl_zone: str,
    sb_budget: RequestBudget | None,
    dnsbl_budget: RequestBudget | None,
) -> tuple[MaliciousActivityResult, list[str]]:
    warnings: list[str] = []
    safe_browsing = None
    dnsbl = None
    try:
        safe_browsing = safe_browsing_lookup(transport, f"http://{host}/", api_key, sb_base, sb_budget)
    except TraceError as err:
        warnings.append(f"safe-browsing unavailable for {host}: {err}")
    try:
        dnsbl = dnsbl_lookup(transport, host, dnsbl_zone, dnsbl_budget)
    except TraceError as err:
        warnings.append(f"DNSBL unavailable for {host}: {err}")
    if safe_browsing is None and dnsbl is None:
        raise RemoteUnreachableError(
            f"both reputation services failed for {host}: " + "; ".join(warnings)
        )
    return MaliciousActivityResult(safe_browsing=safe_browsing, dnsbl=dnsbl), warnings


def run_malicious_activity(
    transport: Transport,
    target: Target,
    api_key: str,
    sb_base: str = DEFAULT_SAFEBROWSING_BASE,
    dnsbl_zone: str = DEFAULT_DNSBL_ZONE,
    sb_budget: RequestBudget | None = None,
    dnsbl_budget: RequestBudget | None = None,
    clock: Clock | None = None,
) -> TraceResult:
    clock = clock or SystemClock()

    def body():
        return _activity_for_host(
            transport, target.host, api_key, sb_base, dnsbl_zone, sb_budget, dnsbl_budget
        )

    return execute_trace(TraceKind.MALICIOUS_ACTIVITY, target, clock, body)


def run_malicious_relations(
    transport: Transport,
    target: Target,
    crawler_cfg: CrawlerConfig | None = None,
    api_key: str = "",
    sb_base: str = DEFAULT_SAFEBROWSING_BASE,
    dnsbl_zone: str = DEFAULT_DNSBL_ZONE,
    sb_budget: RequestBudget | None = None,
    dnsbl_budget: RequestBudget | None = None,
    clock: Clock | None = None,
) -> TraceResult:
    """Crawl for external relations, then rate each distinct external host
    once; every URL maps to its host's verdicts."""
    clock = clock or SystemClock()
    cfg = crawler_cfg or CrawlerConfig.for_target(target)
    # the relations are all this trace needs; an empty registry skips the
    # extraction work
    cfg = replace(cfg, url_relation=True, registry=PatternRegistry())

    def body():
        warnings: list[str] = []
        crawl_result = crawl(transport, target, cfg, clock=clock)
        if crawl_result.status is TraceStatus.FAILURE:
            raise RemoteUnreachableError("; ".join(crawl_result.warnings))
        warnings.extend(crawl_result.warnings)
        relations = sorted(crawl_result.payload.external_relations)
        by_host: dict[str, MaliciousActivityResult | None] = {}
        per_url: dict[str, MaliciousActivityResult] = {}
        for url in relations:
            host = urlsplit(url).hostname or ""
            if host not in by_host:
                try:
                    activity, host_warnings = _activity_for_host(
                        transport, host, api_key, sb_base, dnsbl_zone, sb_budget, dnsbl_budget
                    )
                    warnings.extend(host_warnings)
                    by_host[host] = activity
                except TraceError as err:
                    warnings.append(f"no verdict for {host}: {err}")
                    by_host[host] = None
            if by_host[host] is not None:
                per_url[url] = by_host[host]
        return MaliciousRelationsResult(per_url=per_url), warnings

    return execute_trace(TraceKind.MALICIOUS_RELATIONS, target, clock, body)
