"""Minimal DNS message codec (RFC 1035 wire format).

The transport layer deals in raw response messages: a real resolver returns
the bytes it got from the network, a fixture returns captured or synthesized
bytes. This module turns both into records, and builds query/response
messages in the first place.
"""

from __future__ import annotations

import ipaddress
import struct
from dataclasses import dataclass, field

from .errors import ProtocolViolationError

TYPE_CODES = {
    "A": 1,
    "NS": 2,
    "CNAME": 5,
    "SOA": 6,
    "PTR": 12,
    "MX": 15,
    "TXT": 16,
    "AAAA": 28,
    "SRV": 33,
    "ANY": 255,
}
TYPE_NAMES = {code: name for name, code in TYPE_CODES.items()}

RCODE_NOERROR = 0
RCODE_SERVFAIL = 2
RCODE_NXDOMAIN = 3

_MAX_NAME_JUMPS = 64


def type_code(rtype: str) -> int:
    try:
        return TYPE_CODES[rtype.upper()]
    except KeyError:
        raise ProtocolViolationError(f"unsupported DNS record type {rtype!r}") from None


def type_name(code: int) -> str:
    return TYPE_NAMES.get(code, f"TYPE{code}")


@dataclass
class DnsRecord:
    name: str
    rtype: str
    ttl: int
    rdata: str


@dataclass
class DnsMessage:
    txid: int
    rcode: int
    question_name: str
    question_type: str
    answers: list[DnsRecord] = field(default_factory=list)
    authority: list[DnsRecord] = field(default_factory=list)

    @property
    def is_nxdomain(self) -> bool:
        return self.rcode == RCODE_NXDOMAIN

    @property
    def is_servfail(self) -> bool:
        return self.rcode == RCODE_SERVFAIL


def _encode_name(name: str) -> bytes:
    out = bytearray()
    name = name.rstrip(".")
    if name:
        for label in name.split("."):
            raw = label.encode("ascii")
            if not 1 <= len(raw) <= 63:
                raise ProtocolViolationError(f"bad DNS label {label!r}")
            out.append(len(raw))
            out += raw
    out.append(0)
    return bytes(out)


def _decode_name(data: bytes, offset: int) -> tuple[str, int]:
    """Decode a possibly compressed name; returns (name, offset after it)."""
    labels: list[str] = []
    jumps = 0
    end = None
    pos = offset
    while True:
        if pos >= len(data):
            raise ProtocolViolationError("truncated DNS name")
        length = data[pos]
        if length & 0xC0 == 0xC0:
            if pos + 1 >= len(data):
                raise ProtocolViolationError("truncated DNS compression pointer")
            pointer = struct.unpack(">H", data[pos:pos + 2])[0] & 0x3FFF
            if end is None:
                end = pos + 2
            jumps += 1
            if jumps > _MAX_NAME_JUMPS:
                raise ProtocolViolationError("DNS name compression loop")
            pos = pointer
            continue
        if length & 0xC0:
            raise ProtocolViolationError("reserved DNS label type")
        pos += 1
        if length == 0:
            break
        labels.append(data[pos:pos + length].decode("ascii", errors="replace"))
        pos += length
    return ".".join(labels), end if end is not None else pos


def _encode_rdata(rtype: str, rdata: str) -> bytes:
    rtype = rtype.upper()
    if rtype == "A":
        return ipaddress.IPv4Address(rdata).packed
    if rtype == "AAAA":
        return ipaddress.IPv6Address(rdata).packed
    if rtype in ("CNAME", "NS", "PTR"):
        return _encode_name(rdata)
    if rtype == "MX":
        pref, exchange = rdata.split(None, 1)
        return struct.pack(">H", int(pref)) + _encode_name(exchange)
    if rtype == "TXT":
        raw = rdata.encode("utf-8")
        if not raw:
            return b"\x00"
        out = bytearray()
        for i in range(0, len(raw), 255):
            chunk = raw[i:i + 255]
            out.append(len(chunk))
            out += chunk
        return bytes(out)
    if rtype == "SOA":
        mname, rname, serial, refresh, retry, expire, minimum = rdata.split()
        return (
            _encode_name(mname)
            + _encode_name(rname)
            + struct.pack(">IIIII", int(serial), int(refresh), int(retry), int(expire), int(minimum))
        )
    if rtype == "SRV":
        prio, weight, port, srv_target = rdata.split()
        return struct.pack(">HHH", int(prio), int(weight), int(port)) + _encode_name(srv_target)
    raise ProtocolViolationError(f"cannot encode rdata for type {rtype}")


def _decode_rdata(data: bytes, offset: int, rdlength: int, rtype_code: int) -> str:
    end = offset + rdlength
    blob = data[offset:end]
    name = TYPE_NAMES.get(rtype_code)
    if name == "A" and rdlength == 4:
        return str(ipaddress.IPv4Address(blob))
    if name == "AAAA" and rdlength == 16:
        return str(ipaddress.IPv6Address(blob))
    if name in ("CNAME", "NS", "PTR"):
        target, _ = _decode_name(data, offset)
        return target
    if name == "MX":
        pref = struct.unpack(">H", blob[:2])[0]
        exchange, _ = _decode_name(data, offset + 2)
        return f"{pref} {exchange}"
    if name == "TXT":
        parts = []
        pos = offset
        while pos < end:
            length = data[pos]
            parts.append(data[pos + 1:pos + 1 + length].decode("utf-8", errors="replace"))
            pos += 1 + length
        return "".join(parts)
    if name == "SOA":
        mname, pos = _decode_name(data, offset)
        rname, pos = _decode_name(data, pos)
        serial, refresh, retry, expire, minimum = struct.unpack(">IIIII", data[pos:pos + 20])
        return f"{mname} {rname} {serial} {refresh} {retry} {expire} {minimum}"
    if name == "SRV":
        prio, weight, port = struct.unpack(">HHH", blob[:6])
        srv_target, _ = _decode_name(data, offset + 6)
        return f"{prio} {weight} {port} {srv_target}"
    return blob.hex()


def encode_query(qname: str, qtype: str, txid: int = 0, recursion_desired: bool = True) -> bytes:
    flags = 0x0100 if recursion_desired else 0
    header = struct.pack(">HHHHHH", txid & 0xFFFF, flags, 1, 0, 0, 0)
    return header + _encode_name(qname) + struct.pack(">HH", type_code(qtype), 1)


def build_response(
    qname: str,
    qtype: str,
    answers: list[tuple[str, str, int, str]] | None = None,
    rcode: int = RCODE_NOERROR,
    txid: int = 0,
) -> bytes:
    """Build a response message; answers are (name, rtype, ttl, rdata-text)."""
    answers = answers or []
    flags = 0x8180 | (rcode & 0xF)
    header = struct.pack(">HHHHHH", txid & 0xFFFF, flags, 1, len(answers), 0, 0)
    out = bytearray(header)
    out += _encode_name(qname) + struct.pack(">HH", type_code(qtype), 1)
    for name, rtype, ttl, rdata in answers:
        rdata_bytes = _encode_rdata(rtype, rdata)
        out += _encode_name(name)
        out += struct.pack(">HHIH", type_code(rtype), 1, ttl, len(rdata_bytes))
        out += rdata_bytes
    return bytes(out)


def decode_message(data: bytes) -> DnsMessage:
    if len(data) < 12:
        raise ProtocolViolationError("DNS message shorter than header")
    txid, flags, qdcount, ancount, nscount, _ = struct.unpack(">HHHHHH", data[:12])
    rcode = flags & 0xF
    offset = 12
    qname, qtype_name = "", "ANY"
    for i in range(qdcount):
        qname, offset = _decode_name(data, offset)
        qtype, _qclass = struct.unpack(">HH", data[offset:offset + 4])
        offset += 4
        if i == 0:
            qtype_name = type_name(qtype)

    def read_records(count: int, pos: int) -> tuple[list[DnsRecord], int]:
        records = []
        for _ in range(count):
            name, pos = _decode_name(data, pos)
            rtype_c, _rclass, ttl, rdlength = struct.unpack(">HHIH", data[pos:pos + 10])
            pos += 10
            if pos + rdlength > len(data):
                raise ProtocolViolationError("truncated DNS rdata")
            rdata = _decode_rdata(data, pos, rdlength, rtype_c)
            pos += rdlength
            records.append(DnsRecord(name=name, rtype=type_name(rtype_c), ttl=ttl, rdata=rdata))
        return records, pos

    answers, offset = read_records(ancount, offset)
    authority, offset = read_records(nscount, offset)
    return DnsMessage(
        txid=txid,
        rcode=rcode,
        question_name=qname,
        question_type=qtype_name,
        answers=answers,
        authority=authority,
    )
