"""Core domain types: targets, trace kinds and the result envelope."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any

from .errors import InvalidParameterError, TraceError

LABEL_RE = re.compile(r"^[a-z0-9]([a-z0-9-]*[a-z0-9])?$")

MAX_HOST_LENGTH = 253
MAX_LABEL_LENGTH = 63


class TraceKind(Enum):
    """The eight trace kinds; values are the stable wire identifiers."""

    SERVER_INFO = "ServerInfo"
    SSL_CERTIFICATE = "SslCertificate"
    DNS = "Dns"
    WHOIS = "Whois"
    METADATA = "Metadata"
    PAGE_CONTENT = "PageContent"
    MALICIOUS_ACTIVITY = "MaliciousActivity"
    MALICIOUS_RELATIONS = "MaliciousRelations"

    @classmethod
    def from_name(cls, name: str) -> "TraceKind":
        for kind in cls:
            if kind.value == name:
                return kind
        raise InvalidParameterError(f"unknown trace kind: {name!r}")


class TraceStatus(Enum):
    SUCCESS = "Success"
    PARTIAL_FAILURE = "PartialFailure"
    FAILURE = "Failure"


@dataclass(frozen=True)
class Target:
    """Validated investigation target: hostname plus plain/secure ports."""

    host: str
    http_port: int = 80
    https_port: int = 443


def _validate_port(port: int, label: str) -> int:
    if not isinstance(port, int) or isinstance(port, bool) or not 1 <= port <= 65535:
        raise InvalidParameterError(f"{label} must be in [1, 65535], got {port!r}")
    return port


def _validate_host(host: str) -> str:
    if not host:
        raise InvalidParameterError("target host is empty")
    if len(host) > MAX_HOST_LENGTH:
        raise InvalidParameterError(f"target host exceeds {MAX_HOST_LENGTH} octets")
    for label in host.split("."):
        if not label or len(label) > MAX_LABEL_LENGTH or not LABEL_RE.match(label):
            raise InvalidParameterError(f"invalid hostname label {label!r} in {host!r}")
    return host


def make_target(raw: str, http_port: int | None = None, https_port: int | None = None) -> Target:
    """Normalize user input into a Target.

    Strips an http:// or https:// scheme prefix, anything from the first
    slash on, and a trailing dot; lowercases the rest and validates it as a
    DNS hostname.
    """
    if raw is None:
        raise InvalidParameterError("target is required")
    host = raw.strip().lower()
    for scheme in ("http://", "https://"):
        if host.startswith(scheme):
            host = host[len(scheme):]
            break
    host = host.split("/", 1)[0]
    host = host.rstrip(".")
    _validate_host(host)
    return Target(
        host=host,
        http_port=_validate_port(80 if http_port is None else http_port, "http port"),
        https_port=_validate_port(443 if https_port is None else https_port, "https port"),
    )


def registrable_suffixes(target: Target) -> list[str]:
    """Hostname suffixes a crawled URL may end with to count as in-domain.

    Returns the host itself, the host as a subdomain suffix and, when the
    host has more than two labels, the parent domain (one label dropped) as
    a suffix: www.bfh.ch -> [www.bfh.ch, .www.bfh.ch, .bfh.ch].
    """
    host = target.host
    suffixes = [host, "." + host]
    labels = host.split(".")
    if len(labels) > 2:
        suffixes.append("." + ".".join(labels[1:]))
    return suffixes


def registrable_parent(target: Target) -> str:
    """The host with one leading label dropped, or the host itself for
    two-label names."""
    labels = target.host.split(".")
    if len(labels) > 2:
        return ".".join(labels[1:])
    return target.host


def format_timestamp(dt: datetime) -> str:
    """UTC ISO-8601 with millisecond precision, e.g. 2014-06-13T12:00:00.000Z."""
    dt = dt.astimezone(timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{dt.microsecond // 1000:03d}Z"


def parse_timestamp(text: str) -> datetime:
    return datetime.strptime(text, "%Y-%m-%dT%H:%M:%S.%fZ").replace(tzinfo=timezone.utc)


@dataclass
class TraceResult:
    """Timestamped, kind-tagged envelope around a trace-specific payload."""

    kind: TraceKind
    target: Target
    started_at: datetime
    finished_at: datetime
    status: TraceStatus
    payload: Any = None
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.finished_at < self.started_at:
            raise ValueError("finished_at precedes started_at")
        if self.status is TraceStatus.FAILURE:
            if self.payload is not None:
                raise ValueError("a failed trace carries no payload")
            if not self.warnings:
                raise ValueError("a failed trace must explain itself in warnings")
        if self.payload is not None:
            payload_kind = getattr(type(self.payload), "KIND", None)
            if payload_kind is not self.kind:
                raise ValueError(
                    f"payload {type(self.payload).__name__} does not belong to {self.kind.value}"
                )


def execute_trace(kind: TraceKind, target: Target, clock, body) -> TraceResult:
    """Run a trace body and wrap the outcome in an envelope.

    `body` returns (payload, warnings). A raised TraceError becomes a
    Failure envelope; any warnings downgrade Success to PartialFailure.
    """
    started = clock.now()
    try:
        payload, warnings = body()
    except TraceError as err:
        message = str(err) or type(err).__name__
        return TraceResult(kind, target, started, clock.now(), TraceStatus.FAILURE,
                           payload=None, warnings=[f"{type(err).__name__}: {message}"])
    status = TraceStatus.PARTIAL_FAILURE if warnings else TraceStatus.SUCCESS
    return TraceResult(kind, target, started, clock.now(), status,
                       payload=payload, warnings=list(warnings))
