"""Network access chokepoint.

Every byte the engine sends or receives goes through a Transport: HTTP(S)
fetches, raw TCP line exchanges (Whois), DNS queries and TLS chain capture.
Traces never open sockets themselves, which is what makes the fixture
transport a drop-in replacement in tests.
"""

from __future__ import annotations

import socket
import ssl
import struct
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable
from urllib.parse import urlsplit, urljoin

from . import dnswire
from .clock import Clock, SystemClock
from .errors import ProtocolViolationError, RemoteUnreachableError
from .model import Target

USER_AGENT = "dignite-traceforge/1.0"

DEFAULT_TIMEOUT = 10.0
DEFAULT_RETRY_DELAY = 1.0


class ConnectivityStatus(Enum):
    CONNECTED = "Connected"
    DISCONNECTED = "Disconnected"


@dataclass(frozen=True)
class ProxyConfig:
    """HTTP-level proxy endpoint; an empty host means a direct connection."""

    host: str = ""
    port: int = 0

    @property
    def is_direct(self) -> bool:
        return not self.host


class Headers:
    """Ordered multimap of HTTP headers with case-insensitive lookup."""

    def __init__(self, items: Iterable[tuple[str, str]] = ()):
        self._items: list[tuple[str, str]] = [(n, v) for n, v in items]

    def add(self, name: str, value: str) -> None:
        self._items.append((name, value))

    def get(self, name: str) -> str | None:
        lowered = name.lower()
        for n, v in self._items:
            if n.lower() == lowered:
                return v
        return None

    def get_all(self, name: str) -> list[str]:
        lowered = name.lower()
        return [v for n, v in self._items if n.lower() == lowered]

    def items(self) -> list[tuple[str, str]]:
        return list(self._items)

    def __contains__(self, name: str) -> bool:
        return self.get(name) is not None

    def __repr__(self) -> str:
        return f"Headers({self._items!r})"


@dataclass
class HttpExchange:
    """One completed HTTP request/response pair."""

    url: str
    status_code: int
    headers: Headers = field(default_factory=Headers)
    body: bytes = b""
    used_scheme: str = "http"


class Transport(ABC):
    """The four network capabilities the engine relies on."""

    proxy: ProxyConfig = ProxyConfig()

    def configure_proxy(self, proxy: ProxyConfig) -> None:
        """Route httpFetch and tcpExchange through the proxy. DNS queries
        always go direct; see the anonymity caveat in the README."""
        self.proxy = proxy

    @abstractmethod
    def http_fetch(self, url: str, method: str = "GET", timeout: float = DEFAULT_TIMEOUT) -> HttpExchange:
        """Fetch a URL; HTTP error statuses are results, connection-level
        failures raise RemoteUnreachableError."""

    @abstractmethod
    def tcp_exchange(self, host: str, port: int, request: str, timeout: float = DEFAULT_TIMEOUT) -> bytes:
        """Send one request line (CRLF appended) and read until close."""

    @abstractmethod
    def dns_query(self, qname: str, qtype: str, timeout: float = DEFAULT_TIMEOUT) -> bytes:
        """Return the raw wire-format response message for one question."""

    @abstractmethod
    def tls_chain(self, host: str, port: int, timeout: float = DEFAULT_TIMEOUT) -> list[bytes]:
        """Handshake with all validation disabled; return the presented
        certificate chain as DER blobs, leaf first."""


def normalize_url(url: str) -> str:
    """Prefix bare host[:port][/path] values with http:// (config files give
    the connectivity-check URL without a scheme)."""
    if "://" not in url:
        return "http://" + url
    return url


def check_connection(
    transport: Transport,
    reliable_url: str,
    max_attempts: int,
    timeout: float = DEFAULT_TIMEOUT,
    retry_delay: float = DEFAULT_RETRY_DELAY,
    clock: Clock | None = None,
) -> ConnectivityStatus:
    """UC1: Connected as soon as any attempt gets an HTTP status below 500,
    Disconnected after exactly max_attempts failed tries."""
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    clock = clock or SystemClock()
    url = normalize_url(reliable_url)
    for attempt in range(1, max_attempts + 1):
        try:
            exchange = transport.http_fetch(url, method="GET", timeout=timeout)
            if exchange.status_code < 500:
                return ConnectivityStatus.CONNECTED
        except (RemoteUnreachableError, ProtocolViolationError):
            pass
        if attempt < max_attempts:
            clock.sleep(retry_delay)
    return ConnectivityStatus.DISCONNECTED


def target_url(target: Target, scheme: str, path: str) -> str:
    port = target.http_port if scheme == "http" else target.https_port
    default = 80 if scheme == "http" else 443
    netloc = target.host if port == default else f"{target.host}:{port}"
    return f"{scheme}://{netloc}{path}"


def fetch_with_fallback(
    transport: Transport,
    target: Target,
    path: str,
    method: str = "GET",
    timeout: float = DEFAULT_TIMEOUT,
) -> HttpExchange:
    """Try plain HTTP first; on connection failure (not on 4xx/5xx) retry
    once over HTTPS. Certain sites allow only secure requests."""
    if not path.startswith("/"):
        raise ValueError("path must start with '/'")
    try:
        exchange = transport.http_fetch(target_url(target, "http", path), method=method, timeout=timeout)
        exchange.used_scheme = "http"
        return exchange
    except RemoteUnreachableError:
        pass
    try:
        exchange = transport.http_fetch(target_url(target, "https", path), method=method, timeout=timeout)
        exchange.used_scheme = "https"
        return exchange
    except RemoteUnreachableError:
        raise RemoteUnreachableError(
            f"{target.host}: neither http:{target.http_port} nor https:{target.https_port} answered"
        )


def decode_lossy(raw: bytes) -> str:
    """8-bit-safe text decoding: invalid byte sequences become replacement
    characters, never get dropped, so line structure survives."""
    return raw.decode("utf-8", errors="replace")


def tcp_line_exchange(
    transport: Transport, host: str, port: int, request: str, timeout: float = DEFAULT_TIMEOUT
) -> str:
    """Send one line, read to close, decode. An empty response is a
    protocol violation (the peer accepted the connection but said nothing)."""
    raw = transport.tcp_exchange(host, port, request, timeout=timeout)
    if not raw:
        raise ProtocolViolationError(f"{host}:{port} closed the connection without sending data")
    return decode_lossy(raw)


def capture_tls_chain(
    transport: Transport, host: str, port: int, timeout: float = DEFAULT_TIMEOUT
) -> list[bytes]:
    return transport.tls_chain(host, port, timeout=timeout)


def resolve_relative(base_url: str, link: str) -> str:
    return urljoin(base_url, link)


class RealTransport(Transport):
    """Live-network implementation on the standard library.

    HTTPS requests never validate certificates: the engine's job is to
    collect evidence from arbitrary (often misconfigured or self-signed)
    sites, not to trust them.
    """

    def __init__(self, resolver: str | None = None):
        self.proxy = ProxyConfig()
        self._resolver = resolver or _system_resolver()

    # -- HTTP ---------------------------------------------------------------

    def http_fetch(self, url: str, method: str = "GET", timeout: float = DEFAULT_TIMEOUT) -> HttpExchange:
        import urllib.error
        import urllib.request

        handlers: list[urllib.request.BaseHandler] = [
            urllib.request.HTTPSHandler(context=_trust_all_context())
        ]
        if not self.proxy.is_direct:
            proxy_netloc = f"{self.proxy.host}:{self.proxy.port}"
            handlers.append(
                urllib.request.ProxyHandler({"http": f"http://{proxy_netloc}", "https": f"http://{proxy_netloc}"})
            )
        opener = urllib.request.build_opener(*handlers)
        request = urllib.request.Request(url, method=method, headers={"User-Agent": USER_AGENT})
        scheme = urlsplit(url).scheme or "http"
        try:
            with opener.open(request, timeout=timeout) as response:
                body = response.read()
                headers = Headers(response.headers.items())
                return HttpExchange(url=url, status_code=response.status, headers=headers,
                                    body=body, used_scheme=scheme)
        except urllib.error.HTTPError as err:
            body = err.read() if err.fp else b""
            return HttpExchange(url=url, status_code=err.code, headers=Headers(err.headers.items()),
                                body=body, used_scheme=scheme)
        except (urllib.error.URLError, socket.timeout, ConnectionError, OSError) as err:
            raise RemoteUnreachableError(f"{url}: {err}") from err

    # -- raw TCP ------------------------------------------------------------

    def tcp_exchange(self, host: str, port: int, request: str, timeout: float = DEFAULT_TIMEOUT) -> bytes:
        try:
            if self.proxy.is_direct:
                sock = socket.create_connection((host, port), timeout=timeout)
            else:
                sock = self._connect_through_proxy(host, port, timeout)
            with sock:
                sock.sendall(request.encode("utf-8", errors="replace") + b"\r\n")
                chunks = []
                while True:
                    chunk = sock.recv(4096)
                    if not chunk:
                        break
                    chunks.append(chunk)
                return b"".join(chunks)
        except (socket.timeout, ConnectionError, OSError) as err:
            raise RemoteUnreachableError(f"{host}:{port}: {err}") from err

    def _connect_through_proxy(self, host: str, port: int, timeout: float) -> socket.socket:
        """HTTP CONNECT tunnel for non-HTTP TCP traffic (Whois)."""
        sock = socket.create_connection((self.proxy.host, self.proxy.port), timeout=timeout)
        try:
            connect = f"CONNECT {host}:{port} HTTP/1.1\r\nHost: {host}:{port}\r\n\r\n"
            sock.sendall(connect.encode("ascii"))
            reply = b""
            while b"\r\n\r\n" not in reply:
                chunk = sock.recv(4096)
                if not chunk:
                    break
                reply += chunk
            status_line = reply.split(b"\r\n", 1)[0].decode("ascii", errors="replace")
            parts = status_line.split()
            if len(parts) < 2 or not parts[1].startswith("2"):
                raise RemoteUnreachableError(f"proxy refused CONNECT {host}:{port}: {status_line}")
            return sock
        except Exception:
            sock.close()
            raise

    # -- DNS ----------------------------------------------------------------

    def dns_query(self, qname: str, qtype: str, timeout: float = DEFAULT_TIMEOUT) -> bytes:
        # Deliberately not proxied: blocklist and record lookups use plain
        # port 53 against the configured resolver.
        query = dnswire.encode_query(qname, qtype, txid=_txid(qname, qtype))
        try:
            with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as sock:
                sock.settimeout(timeout)
                sock.sendto(query, (self._resolver, 53))
                data, _ = sock.recvfrom(65535)
        except (socket.timeout, OSError) as err:
            raise RemoteUnreachableError(f"DNS {qname}/{qtype}: {err}") from err
        if len(data) >= 4 and data[2] & 0x02:  # truncated: retry over TCP
            data = self._dns_query_tcp(query, timeout)
        return data

    def _dns_query_tcp(self, query: bytes, timeout: float) -> bytes:
        try:
            with socket.create_connection((self._resolver, 53), timeout=timeout) as sock:
                sock.sendall(struct.pack(">H", len(query)) + query)
                length_raw = _recv_exact(sock, 2)
                (length,) = struct.unpack(">H", length_raw)
                return _recv_exact(sock, length)
        except (socket.timeout, OSError) as err:
            raise RemoteUnreachableError(f"DNS over TCP: {err}") from err

    # -- TLS ----------------------------------------------------------------

    def tls_chain(self, host: str, port: int, timeout: float = DEFAULT_TIMEOUT) -> list[bytes]:
        context = _trust_all_context()
        try:
            with socket.create_connection((host, port), timeout=timeout) as raw_sock:
                with context.wrap_socket(raw_sock, server_hostname=host) as tls_sock:
                    return _presented_chain(tls_sock)
        except ssl.SSLError as err:
            raise ProtocolViolationError(f"{host}:{port} is not speaking TLS: {err}") from err
        except (socket.timeout, ConnectionError, OSError) as err:
            raise RemoteUnreachableError(f"{host}:{port}: {err}") from err


def _presented_chain(tls_sock: ssl.SSLSocket) -> list[bytes]:
    # Newer Pythons expose the full presented chain; older versions only
    # give the leaf. Fixture transports carry full chains either way.
    get_chain = getattr(tls_sock, "get_unverified_chain", None)
    if get_chain is not None:
        blobs = []
        for cert in get_chain() or []:
            if isinstance(cert, bytes):
                blobs.append(cert)
            else:
                pem = cert.public_bytes()
                blobs.append(ssl.PEM_cert_to_DER_cert(pem if isinstance(pem, str) else pem.decode("ascii")))
        if blobs:
            return blobs
    leaf = tls_sock.getpeercert(binary_form=True)
    return [leaf] if leaf else []


def _trust_all_context() -> ssl.SSLContext:
    context = ssl.SSLContext(ssl.PROTOCOL_TLS_CLIENT)
    context.check_hostname = False
    context.verify_mode = ssl.CERT_NONE
    # Weak digests (MD2-era chains) must still be capturable.
    try:
        context.set_ciphers("DEFAULT@SECLEVEL=0")
    except ssl.SSLError:
        pass
    return context


def _system_resolver() -> str:
    try:
        with open("/etc/resolv.conf", encoding="ascii", errors="replace") as handle:
            for line in handle:
                parts = line.split()
                if len(parts) >= 2 and parts[0] == "nameserver":
                    return parts[1]
    except OSError:
        pass
    return "8.8.8.8"


def _txid(qname: str, qtype: str) -> int:
    import zlib

    return zlib.crc32(f"{qname}/{qtype}".encode()) & 0xFFFF


def _recv_exact(sock: socket.socket, count: int) -> bytes:
    data = b""
    while len(data) < count:
        chunk = sock.recv(count - len(data))
        if not chunk:
            raise RemoteUnreachableError("DNS TCP stream closed early")
        data += chunk
    return data
