"""Deterministic fixture transport.

Replays canned responses instead of touching the network. Responses come
from a transcript directory and/or programmatic registration:

    http/<host>_<port><path with / as __>.resp   raw status line + headers +
                                                 blank line + body
    tcp/<host>_<port>_<request-hash>.resp        request-hash = first 12 hex
                                                 chars of sha256(request)
    dns/<qname>_<qtype>.bin                      raw DNS wire-format response
    tls/<host>_<port>/NN.der                     chain blobs, leaf first

Unregistered HTTP/TCP/TLS endpoints behave like refused connections. An
unregistered DNS question synthesizes NXDOMAIN, or an empty NOERROR answer
when the name exists under another record type, so a fixture zone only
needs files for names that exist. Scripted failures and request logs
support retry/counting assertions.
"""

from __future__ import annotations

import hashlib
import re
from pathlib import Path
from urllib.parse import urlsplit

from . import dnswire
from .clock import Clock
from .errors import ProtocolViolationError, RemoteUnreachableError
from .transport import DEFAULT_TIMEOUT, Headers, HttpExchange, ProxyConfig, Transport

_HTTP_FILE_RE = re.compile(r"^(?P<host>[^_]+)_(?P<port>\d+)(?P<path>(?:__.*)?)$")
_TCP_FILE_RE = re.compile(r"^(?P<host>[^_]+)_(?P<port>\d+)_(?P<digest>[0-9a-f]{12})$")
_TLS_DIR_RE = re.compile(r"^(?P<host>[^_]+)_(?P<port>\d+)$")


def tcp_request_digest(request: str) -> str:
    return hashlib.sha256(request.encode("utf-8", errors="replace")).hexdigest()[:12]


def _decode_path(encoded: str) -> str:
    return encoded.replace("__", "/") if encoded else "/"


def _effective_port(url: str) -> tuple[str, int, str]:
    parts = urlsplit(url)
    host = (parts.hostname or "").lower()
    port = parts.port or (443 if parts.scheme == "https" else 80)
    path = parts.path or "/"
    if parts.query:
        path = f"{path}?{parts.query}"
    return host, port, path


class FixtureTransport(Transport):
    """Transport whose every answer was planted in advance."""

    def __init__(self, root: str | Path | None = None, clock: Clock | None = None):
        self.proxy = ProxyConfig()
        self.clock = clock
        self.synthesize_nxdomain = True
        self._http: dict[tuple[str, str, int, str], tuple[int, list[tuple[str, str]], bytes]] = {}
        self._tcp: dict[tuple[str, int, str], bytes] = {}
        self._dns: dict[tuple[str, str], bytes] = {}
        self._dns_names: set[str] = set()
        self._tls: dict[tuple[str, int], list[bytes]] = {}
        self._not_tls: set[tuple[str, int]] = set()
        self._http_failures: list[dict] = []
        self._dns_failures: dict[tuple[str, str], int] = {}
        self.http_requests: list[tuple[str, str]] = []
        self.http_request_times: list[tuple[float, str, str]] = []
        self.tcp_requests: list[tuple[str, int, str]] = []
        self.dns_requests: list[tuple[str, str]] = []
        self.tls_requests: list[tuple[str, int]] = []
        if root is not None:
            self.load_directory(root)

    # -- registration ---------------------------------------------------

    def add_http(
        self,
        url: str,
        status: int = 200,
        headers: list[tuple[str, str]] | dict[str, str] | None = None,
        body: bytes | str = b"",
        method: str = "*",
    ) -> None:
        host, port, path = _effective_port(url)
        if isinstance(body, str):
            body = body.encode("utf-8")
        if isinstance(headers, dict):
            headers = list(headers.items())
        self._http[(method.upper(), host, port, path)] = (status, headers or [], body)

    def fail_http(self, url_or_host: str, times: int = 1) -> None:
        """Make the next `times` requests matching the URL (or any URL on the
        host) raise a connection failure, then fall through to fixtures."""
        self._http_failures.append({"match": url_or_host, "left": times})

    def add_tcp(self, host: str, port: int, request: str, response: bytes | str) -> None:
        if isinstance(response, str):
            response = response.encode("utf-8")
        self._tcp[(host.lower(), port, tcp_request_digest(request))] = response

    def add_dns_raw(self, qname: str, qtype: str, wire: bytes) -> None:
        key = (qname.lower().rstrip("."), qtype.upper())
        self._dns[key] = wire
        try:
            if dnswire.decode_message(wire).rcode == dnswire.RCODE_NOERROR:
                self._dns_names.add(key[0])
        except ProtocolViolationError:
            pass

    def add_dns_records(
        self, qname: str, qtype: str, records: list[tuple[str, str, int, str]], rcode: int = 0
    ) -> None:
        """records are (name, rtype, ttl, rdata-text) answer tuples."""
        self.add_dns_raw(qname, qtype, dnswire.build_response(qname, qtype, records, rcode=rcode))

    def add_dns_nxdomain(self, qname: str, qtype: str) -> None:
        self.add_dns_records(qname, qtype, [], rcode=dnswire.RCODE_NXDOMAIN)

    def fail_dns(self, qname: str, qtype: str, times: int = 1) -> None:
        key = (qname.lower().rstrip("."), qtype.upper())
        self._dns_failures[key] = self._dns_failures.get(key, 0) + times

    def add_tls_chain(self, host: str, port: int, chain: list[bytes]) -> None:
        self._tls[(host.lower(), port)] = list(chain)

    def mark_not_tls(self, host: str, port: int) -> None:
        self._not_tls.add((host.lower(), port))

    # -- directory loading ------------------------------------------------

    def load_directory(self, root: str | Path) -> None:
        root = Path(root)
        for resp_file in sorted((root / "http").glob("*.resp")) if (root / "http").is_dir() else []:
            match = _HTTP_FILE_RE.match(resp_file.stem)
            if not match:
                continue
            status, headers, body = _parse_http_response_file(resp_file.read_bytes())
            key = ("*", match["host"].lower(), int(match["port"]), _decode_path(match["path"]))
            self._http[key] = (status, headers, body)
        for resp_file in sorted((root / "tcp").glob("*.resp")) if (root / "tcp").is_dir() else []:
            match = _TCP_FILE_RE.match(resp_file.stem)
            if not match:
                continue
            self._tcp[(match["host"].lower(), int(match["port"]), match["digest"])] = resp_file.read_bytes()
        for bin_file in sorted((root / "dns").glob("*.bin")) if (root / "dns").is_dir() else []:
            qname, _, qtype = bin_file.stem.rpartition("_")
            if qname:
                self.add_dns_raw(qname, qtype, bin_file.read_bytes())
        tls_root = root / "tls"
        if tls_root.is_dir():
            for chain_dir in sorted(p for p in tls_root.iterdir() if p.is_dir()):
                match = _TLS_DIR_RE.match(chain_dir.name)
                if not match:
                    continue
                chain = [der.read_bytes() for der in sorted(chain_dir.glob("*.der"))]
                if chain:
                    self._tls[(match["host"].lower(), int(match["port"]))] = chain

    # -- Transport implementation ----------------------------------------

    def http_fetch(self, url: str, method: str = "GET", timeout: float = DEFAULT_TIMEOUT) -> HttpExchange:
        method = method.upper()
        self.http_requests.append((method, url))
        if self.clock is not None:
            self.http_request_times.append((self.clock.monotonic(), method, url))
        host, port, path = _effective_port(url)
        for failure in self._http_failures:
            if failure["left"] > 0 and failure["match"] in (url, host):
                failure["left"] -= 1
                raise RemoteUnreachableError(f"fixture: scripted failure for {url}")
        entry = self._http.get((method, host, port, path)) or self._http.get(("*", host, port, path))
        if entry is None and "?" in path:
            bare = path.split("?", 1)[0]
            entry = self._http.get((method, host, port, bare)) or self._http.get(("*", host, port, bare))
        if entry is None:
            raise RemoteUnreachableError(f"fixture: no response planted for {method} {url}")
        status, headers, body = entry
        scheme = urlsplit(url).scheme or "http"
        if method == "HEAD":
            body = b""
        return HttpExchange(url=url, status_code=status, headers=Headers(headers),
                            body=body, used_scheme=scheme)

    def tcp_exchange(self, host: str, port: int, request: str, timeout: float = DEFAULT_TIMEOUT) -> bytes:
        self.tcp_requests.append((host, port, request))
        key = (host.lower(), port, tcp_request_digest(request))
        if key not in self._tcp:
            raise RemoteUnreachableError(f"fixture: no TCP transcript for {host}:{port} {request!r}")
        return self._tcp[key]

    def dns_query(self, qname: str, qtype: str, timeout: float = DEFAULT_TIMEOUT) -> bytes:
        key = (qname.lower().rstrip("."), qtype.upper())
        self.dns_requests.append(key)
        left = self._dns_failures.get(key, 0)
        if left > 0:
            self._dns_failures[key] = left - 1
            raise RemoteUnreachableError(f"fixture: scripted DNS failure for {key}")
        if key in self._dns:
            return self._dns[key]
        if self.synthesize_nxdomain:
            # a name that exists under another type answers NoData, a name
            # nothing was planted for answers NXDOMAIN
            if key[0] in self._dns_names:
                return dnswire.build_response(qname, qtype, [])
            return dnswire.build_response(qname, qtype, [], rcode=dnswire.RCODE_NXDOMAIN)
        raise RemoteUnreachableError(f"fixture: no DNS transcript for {key}")

    def tls_chain(self, host: str, port: int, timeout: float = DEFAULT_TIMEOUT) -> list[bytes]:
        self.tls_requests.append((host, port))
        key = (host.lower(), port)
        if key in self._not_tls:
            raise ProtocolViolationError(f"fixture: {host}:{port} is not speaking TLS")
        if key not in self._tls:
            raise RemoteUnreachableError(f"fixture: no TLS chain planted for {host}:{port}")
        return list(self._tls[key])

    # -- assertions helpers -----------------------------------------------

    def dns_query_count(self, qname: str, qtype: str) -> int:
        key = (qname.lower().rstrip("."), qtype.upper())
        return self.dns_requests.count(key)

    def http_request_count(self, url_substring: str) -> int:
        return sum(1 for _, url in self.http_requests if url_substring in url)


def _parse_http_response_file(raw: bytes) -> tuple[int, list[tuple[str, str]], bytes]:
    for separator in (b"\r\n\r\n", b"\n\n"):
        if separator in raw:
            head, body = raw.split(separator, 1)
            break
    else:
        head, body = raw, b""
    lines = head.replace(b"\r\n", b"\n").split(b"\n")
    status_line = lines[0].decode("ascii", errors="replace")
    parts = status_line.split()
    if len(parts) < 2 or not parts[1].isdigit():
        raise ValueError(f"bad status line in fixture: {status_line!r}")
    status = int(parts[1])
    headers = []
    for line in lines[1:]:
        text = line.decode("utf-8", errors="replace")
        if ":" in text:
            name, _, value = text.partition(":")
            headers.append((name.strip(), value.strip()))
    return status, headers, body
