"""Server info trace: resolve every IP of the target, read the server
banner from the response header and geolocate each address through an
ip-api style JSON web service."""

from __future__ import annotations

import ipaddress
import json
import threading
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import ClassVar

from .clock import Clock, SystemClock
from .dnstrace import query_message
from .errors import (
    InvalidParameterError,
    ProtocolViolationError,
    RateLimitedError,
    RemoteUnreachableError,
    TraceError,
)
from .model import Target, TraceKind, TraceResult, execute_trace
from .transport import Transport, fetch_with_fallback

DEFAULT_GEO_BASE = "http://ip-api.com"
GEO_LIMIT_PER_MINUTE = 240


@dataclass
class Geolocation:
    status: str
    country: str = ""
    country_code: str = ""
    region: str = ""
    region_name: str = ""
    city: str = ""
    zip_code: str = ""
    lat: float = 0.0
    lon: float = 0.0
    timezone: str = ""
    isp: str = ""
    org: str = ""
    as_field: str = ""
    query: str = ""

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon}")


@dataclass
class IpInfo:
    address: str
    server_banner: str | None = None
    geo: Geolocation | None = None


@dataclass
class ServerInfoResult:
    KIND: ClassVar[TraceKind] = TraceKind.SERVER_INFO

    addresses: list[IpInfo] = field(default_factory=list)


class RateLimiter:
    """Shared token window: at most `limit` acquisitions per rolling
    `window` seconds; callers wait their turn, but never longer than
    `max_delay` (that raises RateLimitedError instead)."""

    def __init__(self, limit: int = GEO_LIMIT_PER_MINUTE, window: float = 60.0,
                 max_delay: float = 60.0, clock: Clock | None = None):
        self.limit = limit
        self.window = window
        self.max_delay = max_delay
        self.clock = clock or SystemClock()
        self._stamps: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self.clock.monotonic()
                while self._stamps and self._stamps[0] <= now - self.window:
                    self._stamps.popleft()
                if len(self._stamps) < self.limit:
                    self._stamps.append(now)
                    return
                wait = self._stamps[0] + self.window - now
                if wait > self.max_delay:
                    raise RateLimitedError(
                        f"rate limit of {self.limit}/{self.window}s would delay "
                        f"the call by {wait:.1f}s"
                    )
            self.clock.sleep(wait)


def parse_geolocation(body: str | bytes) -> Geolocation | None:
    """Parse the flat 14-field JSON record; a non-success status means the
    service has no location (None), garbage is a protocol violation."""
    if isinstance(body, bytes):
        body = body.decode("utf-8", errors="replace")
    try:
        data = json.loads(body)
    except json.JSONDecodeError as err:
        raise ProtocolViolationError(f"geolocation body is not JSON: {err}") from err
    if not isinstance(data, dict):
        raise ProtocolViolationError("geolocation body is not a JSON object")
    if data.get("status") != "success":
        return None
    try:
        return Geolocation(
            status="success",
            country=str(data.get("country", "")),
            country_code=str(data.get("countryCode", "")),
            region=str(data.get("region", "")),
            region_name=str(data.get("regionName", "")),
            city=str(data.get("city", "")),
            zip_code=str(data.get("zip", "")),
            lat=float(data.get("lat", 0.0)),
            lon=float(data.get("lon", 0.0)),
            timezone=str(data.get("timezone", "")),
            isp=str(data.get("isp", "")),
            org=str(data.get("org", "")),
            as_field=str(data.get("as", "")),
            query=str(data.get("query", "")),
        )
    except ValueError as err:
        raise ProtocolViolationError(f"bad geolocation values: {err}") from err


_process_limiter = RateLimiter()


def geolocate(
    transport: Transport, ip: str, base_url: str = DEFAULT_GEO_BASE,
    limiter: RateLimiter | None = None,
) -> Geolocation | None:
    try:
        ipaddress.ip_address(ip)
    except ValueError as err:
        raise InvalidParameterError(f"not an IP address: {ip!r}") from err
    (limiter if limiter is not None else _process_limiter).acquire()
    exchange = transport.http_fetch(f"{base_url}/json/{ip}")
    if exchange.status_code != 200:
        raise ProtocolViolationError(f"geolocation service answered {exchange.status_code}")
    return parse_geolocation(exchange.body)


def resolve_addresses(transport: Transport, target: Target, max_attempts: int = 3) -> list[str]:
    """Union of A and AAAA answers: deduplicated, v4 before v6, each group
    sorted by canonical text."""
    v4: set[str] = set()
    v6: set[str] = set()
    failures = 0
    for rtype, bucket in (("A", v4), ("AAAA", v6)):
        try:
            message = query_message(transport, target.host, rtype, max_attempts)
        except RemoteUnreachableError:
            failures += 1
            continue
        if message.is_nxdomain:
            continue
        for record in message.answers:
            if record.rtype == rtype:
                bucket.add(record.rdata)
    if failures == 2:
        raise RemoteUnreachableError(f"address resolution failed for {target.host}")
    addresses = sorted(v4) + sorted(v6)
    if not addresses:
        raise RemoteUnreachableError(f"{target.host} resolves to no address")
    return addresses


def probe_server_banner(transport: Transport, target: Target) -> str | None:
    """Value of the Server response header, or None when the administrator
    hides it. Error-page bodies are never scraped. HEAD first, GET on 405."""
    exchange = fetch_with_fallback(transport, target, "/", method="HEAD")
    if exchange.status_code == 405:
        exchange = fetch_with_fallback(transport, target, "/", method="GET")
    return exchange.headers.get("Server")


def run_server_info(
    transport: Transport,
    target: Target,
    geo_base: str = DEFAULT_GEO_BASE,
    limiter: RateLimiter | None = None,
    clock: Clock | None = None,
    workers: int = 8,
) -> TraceResult:
    clock = clock or SystemClock()
    shared_limiter = limiter or RateLimiter(clock=clock)

    def body():
        warnings: list[str] = []
        addresses = resolve_addresses(transport, target)
        try:
            banner = probe_server_banner(transport, target)
        except TraceError as err:
            warnings.append(f"banner probe failed: {err}")
            banner = None

        def lookup(ip: str):
            try:
                return geolocate(transport, ip, geo_base, shared_limiter)
            except TraceError as err:
                return err

        with ThreadPoolExecutor(max_workers=min(workers, len(addresses))) as pool:
            geos = list(pool.map(lookup, addresses))
        infos = []
        for ip, geo in zip(addresses, geos):
            if isinstance(geo, TraceError):
                warnings.append(f"geolocation failed for {ip}: {geo}")
                geo = None
            infos.append(IpInfo(address=ip, server_banner=banner, geo=geo))
        return ServerInfoResult(addresses=infos), warnings

    return execute_trace(TraceKind.SERVER_INFO, target, clock, body)
