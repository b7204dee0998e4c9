"""DNS trace: record sweep, CNAME chain resolution, dictionary enumeration
and reverse lookups, with per-type retry on transient failures."""

from __future__ import annotations

import ipaddress
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import ClassVar

from . import dnswire
from .clock import Clock, SystemClock
from .errors import RemoteUnreachableError
from .model import Target, TraceKind, TraceResult, execute_trace, registrable_parent
from .transport import Transport

# ANY is widely refused, so the sweep asks for a fixed set of types.
SWEEP_TYPES = ("A", "AAAA", "CNAME", "MX", "NS", "SOA", "TXT", "SRV")

DEFAULT_MAX_ATTEMPTS = 3
DEFAULT_MAX_DEPTH = 10
ENUM_FANOUT = 8

DEFAULT_DICTIONARY_FILE = Path(__file__).parent / "data" / "subdomains.txt"


@dataclass
class DnsRecordEntry:
    name: str
    rtype: str
    ttl: int
    rdata: str


@dataclass
class CnameChain:
    """Alias hops in order; truncated when no concrete terminal was reached
    (loop, depth limit or NXDOMAIN)."""

    names: list[str]
    terminal_records: list[DnsRecordEntry] = field(default_factory=list)
    truncated: bool = False


@dataclass
class DnsResult:
    KIND: ClassVar[TraceKind] = TraceKind.DNS

    records: list[DnsRecordEntry] = field(default_factory=list)
    cname_chains: list[CnameChain] = field(default_factory=list)
    enumerated_hosts: list[str] = field(default_factory=list)
    reverse_names: dict[str, str | None] = field(default_factory=dict)


def load_dictionary(path: str | Path | None = None) -> list[str]:
    """One label per line; '#' comments and blank lines ignored."""
    file_path = Path(path) if path else DEFAULT_DICTIONARY_FILE
    labels = []
    for line in file_path.read_text(encoding="utf-8").splitlines():
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            labels.append(stripped)
    return labels


def query_message(
    transport: Transport, qname: str, qtype: str, max_attempts: int = 1
) -> dnswire.DnsMessage:
    """One question with retry: timeouts and SERVFAIL retry up to
    max_attempts, NXDOMAIN/NoData return immediately."""
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    last_error: Exception | None = None
    for _ in range(max_attempts):
        try:
            message = dnswire.decode_message(transport.dns_query(qname, qtype))
        except RemoteUnreachableError as err:
            last_error = err
            continue
        if message.is_servfail:
            last_error = RemoteUnreachableError(f"SERVFAIL for {qname}/{qtype}")
            continue
        return message
    raise RemoteUnreachableError(
        f"{qname}/{qtype}: no answer after {max_attempts} attempts ({last_error})"
    )


def query_records(
    transport: Transport,
    name: str,
    types: tuple[str, ...] = SWEEP_TYPES,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> list[DnsRecordEntry]:
    """Sweep the given types; a type fails quietly only if another type
    still answered, total failure raises."""
    entries: list[DnsRecordEntry] = []
    failures = 0
    last_error: Exception | None = None
    for rtype in types:
        try:
            message = query_message(transport, name, rtype, max_attempts)
        except RemoteUnreachableError as err:
            failures += 1
            last_error = err
            continue
        if message.is_nxdomain:
            continue
        for record in message.answers:
            entries.append(DnsRecordEntry(record.name, record.rtype, record.ttl, record.rdata))
    if failures == len(types):
        raise RemoteUnreachableError(f"every record type failed for {name}: {last_error}")
    return entries


def resolve_cname_chain(
    transport: Transport,
    name: str,
    max_depth: int = DEFAULT_MAX_DEPTH,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> CnameChain:
    """Follow CNAMEs until a name holds A/AAAA data; loops and depth
    overruns mark the chain truncated instead of failing."""
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    chain = [name]
    seen = {name.lower()}
    current = name
    for _ in range(max_depth):
        message = query_message(transport, current, "CNAME", max_attempts)
        if message.is_nxdomain:
            return CnameChain(names=chain, truncated=True)
        cnames = [r for r in message.answers if r.rtype == "CNAME"]
        if not cnames:
            # concrete name: collect its address records
            terminal: list[DnsRecordEntry] = []
            found = False
            for rtype in ("A", "AAAA"):
                answer = query_message(transport, current, rtype, max_attempts)
                if answer.is_nxdomain:
                    continue
                for record in answer.answers:
                    if record.rtype == rtype:
                        found = True
                        terminal.append(
                            DnsRecordEntry(record.name, record.rtype, record.ttl, record.rdata)
                        )
            return CnameChain(names=chain, terminal_records=terminal, truncated=not found)
        next_name = cnames[0].rdata
        if next_name.lower() in seen:
            return CnameChain(names=chain, truncated=True)
        seen.add(next_name.lower())
        chain.append(next_name)
        current = next_name
    return CnameChain(names=chain, truncated=True)


def _host_exists(transport: Transport, hostname: str, max_attempts: int) -> bool:
    """A label exists when the response differs from NXDOMAIN (A first,
    AAAA as the tie-breaker for v6-only hosts)."""
    message = query_message(transport, hostname, "A", max_attempts)
    if not message.is_nxdomain:
        return True
    message = query_message(transport, hostname, "AAAA", max_attempts)
    return not message.is_nxdomain


def enumerate_hosts(
    transport: Transport,
    domain: str,
    dictionary: list[str],
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    fanout: int = ENUM_FANOUT,
) -> list[str]:
    """Probe `label.domain` for every dictionary label; results keep
    dictionary order regardless of probe concurrency."""
    if not dictionary:
        return []
    candidates = [f"{label}.{domain}" for label in dictionary]

    def probe(hostname: str):
        try:
            return _host_exists(transport, hostname, max_attempts)
        except RemoteUnreachableError as err:
            return err

    with ThreadPoolExecutor(max_workers=min(fanout, len(candidates))) as pool:
        outcomes = list(pool.map(probe, candidates))
    if all(isinstance(outcome, Exception) for outcome in outcomes):
        raise RemoteUnreachableError(f"resolver failed for every probe under {domain}")
    return [host for host, outcome in zip(candidates, outcomes) if outcome is True]


def reverse_lookup(
    transport: Transport, ip: str, max_attempts: int = DEFAULT_MAX_ATTEMPTS
) -> str | None:
    """PTR lookup on the standard reverse zone; absent names return None."""
    zone = ipaddress.ip_address(ip).reverse_pointer
    message = query_message(transport, zone, "PTR", max_attempts)
    if message.is_nxdomain:
        return None
    for record in message.answers:
        if record.rtype == "PTR":
            return record.rdata.rstrip(".")
    return None


def run_dns(
    transport: Transport,
    target: Target,
    dictionary: list[str] | None = None,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    max_depth: int = DEFAULT_MAX_DEPTH,
    clock: Clock | None = None,
) -> TraceResult:
    """Record sweep on host and registrable parent, CNAME chain for the
    host, dictionary enumeration under the parent, reverse lookup per IP."""
    clock = clock or SystemClock()
    labels = load_dictionary() if dictionary is None else dictionary

    def body():
        warnings: list[str] = []
        parent = registrable_parent(target)
        records = query_records(transport, target.host, SWEEP_TYPES, max_attempts)
        if parent != target.host:
            try:
                records += query_records(transport, parent, SWEEP_TYPES, max_attempts)
            except RemoteUnreachableError as err:
                warnings.append(f"parent sweep failed: {err}")
        chains = [resolve_cname_chain(transport, target.host, max_depth, max_attempts)]
        try:
            enumerated = enumerate_hosts(transport, parent, labels, max_attempts)
        except RemoteUnreachableError as err:
            warnings.append(f"enumeration failed: {err}")
            enumerated = []
        reverse: dict[str, str | None] = {}
        for entry in records:
            if entry.rtype in ("A", "AAAA") and entry.rdata not in reverse:
                try:
                    reverse[entry.rdata] = reverse_lookup(transport, entry.rdata, max_attempts)
                except RemoteUnreachableError as err:
                    warnings.append(f"reverse lookup failed for {entry.rdata}: {err}")
        payload = DnsResult(records=records, cname_chains=chains,
                            enumerated_hosts=enumerated, reverse_names=reverse)
        return payload, warnings

    return execute_trace(TraceKind.DNS, target, clock, body)
