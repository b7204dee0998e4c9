"""XML export of trace results, plus the matching parser.

The document layout is this engine's contract (versioned via schemaVersion):
one <trace> element per result, payload entries with canonically sorted
keys, raw Whois bodies in CDATA. Output is byte-deterministic for identical
inputs: 2-space indentation, LF line endings, fixed escaping.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field as dc_field
from datetime import datetime
from enum import Enum
from pathlib import Path
from xml.etree import ElementTree as ET

from .content import PageContentResult, RegexResultEntry
from .dnstrace import CnameChain, DnsRecordEntry, DnsResult
from .errors import InvalidParameterError, ExportIoError, ProtocolViolationError
from .malicious import (
    DnsblVerdict,
    MaliciousActivityResult,
    MaliciousRelationsResult,
    SafeBrowsingVerdict,
)
from .metadata import MetadataResult, RobotsReport
from .model import (
    Target,
    TraceKind,
    TraceResult,
    TraceStatus,
    format_timestamp,
    parse_timestamp,
)
from .serverinfo import Geolocation, IpInfo, ServerInfoResult
from .tlscert import CertificateInfo, SslCertificateResult
from .util import Multimap
from .whois import WhoisResult

SCHEMA_VERSION = "1"


class ExportFormat(Enum):
    XML = "Xml"


@dataclass
class ExportRequest:
    results: list[TraceResult]
    path: str | Path
    format: ExportFormat = ExportFormat.XML


# ---------------------------------------------------------------------------
# writing


def _escape_text(value: str) -> str:
    return (
        value.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
        .replace("\r", "&#13;")
    )


def _escape_attr(value: str) -> str:
    return (
        _escape_text(value).replace('"', "&quot;").replace("\n", "&#10;").replace("\t", "&#9;")
    )


def _cdata(text: str) -> str:
    # split around data that would end the section early, and route CR
    # through a character reference so XML line-ending normalization cannot
    # rewrite it
    escaped = text.replace("]]>", "]]]]><![CDATA[>").replace("\r", "]]>&#13;<![CDATA[")
    return f"<![CDATA[{escaped}]]>"


@dataclass
class Node:
    tag: str
    attrs: list[tuple[str, str]] = dc_field(default_factory=list)
    children: list["Node"] = dc_field(default_factory=list)
    text: str | None = None
    cdata: bool = False

    def child(self, tag: str, attrs: list[tuple[str, str]] | None = None,
              text: str | None = None, cdata: bool = False) -> "Node":
        node = Node(tag, attrs or [], text=text, cdata=cdata)
        self.children.append(node)
        return node

    def render(self, lines: list[str], depth: int = 0) -> None:
        pad = "  " * depth
        attrs = "".join(f' {name}="{_escape_attr(value)}"' for name, value in self.attrs)
        if not self.children and self.text is None:
            lines.append(f"{pad}<{self.tag}{attrs}/>")
            return
        if not self.children:
            body = _cdata(self.text) if self.cdata else _escape_text(self.text)
            lines.append(f"{pad}<{self.tag}{attrs}>{body}</{self.tag}>")
            return
        lines.append(f"{pad}<{self.tag}{attrs}>")
        for child in self.children:
            child.render(lines, depth + 1)
        lines.append(f"{pad}</{self.tag}>")


def _bool(value: bool) -> str:
    return "true" if value else "false"


def _entry(parent: Node, key: str, value: str) -> None:
    parent.child("entry", [("key", key)], text=value)


def _render_server_info(parent: Node, payload: ServerInfoResult) -> None:
    for info in payload.addresses:
        address = parent.child("address", [("ip", info.address)])
        if info.server_banner is not None:
            address.child("serverBanner", text=info.server_banner)
        if info.geo is not None:
            geo = address.child("geo")
            fields = {
                "status": info.geo.status,
                "country": info.geo.country,
                "countryCode": info.geo.country_code,
                "region": info.geo.region,
                "regionName": info.geo.region_name,
                "city": info.geo.city,
                "zip": info.geo.zip_code,
                "lat": repr(info.geo.lat),
                "lon": repr(info.geo.lon),
                "timezone": info.geo.timezone,
                "isp": info.geo.isp,
                "org": info.geo.org,
                "asField": info.geo.as_field,
                "query": info.geo.query,
            }
            for key in sorted(fields):
                _entry(geo, key, fields[key])


def _render_ssl(parent: Node, payload: SslCertificateResult) -> None:
    for position, info in enumerate(payload.chain):
        cert = parent.child("certificate", [("position", str(position))])
        fields = {
            "subjectDn": info.subject_dn,
            "issuerDn": info.issuer_dn,
            "notBefore": format_timestamp(info.not_before),
            "notAfter": format_timestamp(info.not_after),
            "serialHex": info.serial_hex,
            "signatureAlgorithm": info.signature_algorithm,
            "isSelfSigned": _bool(info.is_self_signed),
        }
        for key in sorted(fields):
            _entry(cert, key, fields[key])
        for san in info.subject_alt_names:
            cert.child("subjectAltName", text=san)


def _render_dns(parent: Node, payload: DnsResult) -> None:
    for record in payload.records:
        parent.child("record", [("name", record.name), ("rtype", record.rtype),
                                ("ttl", str(record.ttl))], text=record.rdata)
    for chain in payload.cname_chains:
        chain_node = parent.child("cnameChain", [("truncated", _bool(chain.truncated))])
        for name in chain.names:
            chain_node.child("name", text=name)
        for record in chain.terminal_records:
            chain_node.child("terminal", [("name", record.name), ("rtype", record.rtype),
                                          ("ttl", str(record.ttl))], text=record.rdata)
    for host in payload.enumerated_hosts:
        parent.child("enumeratedHost", text=host)
    for ip in sorted(payload.reverse_names):
        name = payload.reverse_names[ip]
        if name is None:
            parent.child("reverseName", [("ip", ip), ("found", "false")])
        else:
            parent.child("reverseName", [("ip", ip), ("found", "true")], text=name)


def _render_whois(parent: Node, payload: WhoisResult) -> None:
    parent.child("queriedServer", text=payload.queried_server)
    for server in payload.referral_chain:
        parent.child("referral", text=server)
    for key in sorted(payload.fields):
        field_node = parent.child("field", [("key", key),
                                            ("displayKey", payload.display_keys.get(key, key))])
        for value in payload.fields[key]:
            field_node.child("value", text=value)
    parent.child("raw", text=payload.raw, cdata=True)


def _render_multimap(parent: Node, tag: str, attr: str, multimap: Multimap) -> None:
    for key in sorted(multimap.keys()):
        node = parent.child(tag, [(attr, key)])
        for value in multimap.get(key):
            node.child("value", text=value)


def _render_metadata(parent: Node, payload: MetadataResult) -> None:
    if payload.charset is not None:
        parent.child("charset", text=payload.charset)
    _render_multimap(parent, "httpEquiv", "name", payload.http_equiv)
    _render_multimap(parent, "meta", "name", payload.named)
    robots = parent.child("robots")
    _render_multimap(robots, "entry", "type", payload.robots.entries)
    for lineno, raw_line in payload.robots.unparsed:
        robots.child("unparsed", [("line", str(lineno))], text=raw_line)


def _render_page_content(parent: Node, payload: PageContentResult) -> None:
    for name in sorted(payload.hits):
        for hit in payload.hits[name]:
            parent.child("hit", [("entry", name), ("sourceUrl", hit.source_url)], text=hit.text)
    for url in sorted(payload.external_relations):
        parent.child("externalRelation", text=url)
    for url in sorted(payload.image_urls):
        parent.child("imageUrl", text=url)
    parent.child("pagesVisited", text=str(payload.pages_visited))


def _render_activity(parent: Node, payload: MaliciousActivityResult) -> None:
    if payload.safe_browsing is None:
        parent.child("safeBrowsing", [("available", "false")])
    else:
        verdict = payload.safe_browsing
        sb_node = parent.child("safeBrowsing", [("available", "true"),
                                                ("listed", _bool(verdict.listed))])
        for threat in sorted(verdict.threat_types):
            sb_node.child("threatType", text=threat)
        if verdict.raw_body is not None:
            sb_node.child("rawBody", text=verdict.raw_body)
    if payload.dnsbl is None:
        parent.child("dnsbl", [("available", "false")])
    else:
        dnsbl_node = parent.child("dnsbl", [("available", "true"),
                                            ("listed", _bool(payload.dnsbl.listed))])
        for address in payload.dnsbl.returned_addresses:
            dnsbl_node.child("returnedAddress", text=address)


def _render_relations(parent: Node, payload: MaliciousRelationsResult) -> None:
    for url in sorted(payload.per_url):
        relation = parent.child("relation", [("url", url)])
        _render_activity(relation, payload.per_url[url])


_RENDERERS = {
    TraceKind.SERVER_INFO: _render_server_info,
    TraceKind.SSL_CERTIFICATE: _render_ssl,
    TraceKind.DNS: _render_dns,
    TraceKind.WHOIS: _render_whois,
    TraceKind.METADATA: _render_metadata,
    TraceKind.PAGE_CONTENT: _render_page_content,
    TraceKind.MALICIOUS_ACTIVITY: _render_activity,
    TraceKind.MALICIOUS_RELATIONS: _render_relations,
}


def render_results(results: list[TraceResult], generated_at: datetime) -> str:
    root = Node("digniteResults", [("generatedAt", format_timestamp(generated_at)),
                                   ("schemaVersion", SCHEMA_VERSION)])
    for result in results:
        trace = root.child("trace", [
            ("kind", result.kind.value),
            ("target", result.target.host),
            ("httpPort", str(result.target.http_port)),
            ("httpsPort", str(result.target.https_port)),
            ("status", result.status.value),
            ("startedAt", format_timestamp(result.started_at)),
            ("finishedAt", format_timestamp(result.finished_at)),
        ])
        for warning in result.warnings:
            trace.child("warning", text=warning)
        if result.payload is not None:
            payload_node = trace.child("payload")
            _RENDERERS[result.kind](payload_node, result.payload)
            if not payload_node.children:
                payload_node.text = ""
    lines: list[str] = ['<?xml version="1.0" encoding="UTF-8"?>']
    root.render(lines)
    return "\n".join(lines) + "\n"


def export_results(request: ExportRequest, generated_at: datetime | None = None) -> Path:
    """UC4: validate, check the destination, write the document."""
    if not request.results:
        raise InvalidParameterError("nothing to export: result list is empty")
    for result in request.results:
        if not isinstance(result, TraceResult):
            raise InvalidParameterError(f"malformed result of type {type(result).__name__}")
    if request.format is not ExportFormat.XML:
        raise InvalidParameterError(f"unsupported export format {request.format}")
    path = Path(request.path)
    parent = path.parent if str(path.parent) else Path(".")
    if not parent.is_dir():
        raise ExportIoError(ExportIoError.REASON_MISSING_PATH, str(path))
    if not os.access(parent, os.W_OK) or (path.exists() and not os.access(path, os.W_OK)):
        raise ExportIoError(ExportIoError.REASON_NO_PERMISSION, str(path))
    from .clock import SystemClock

    stamp = generated_at if generated_at is not None else SystemClock().now()
    text = render_results(request.results, stamp)
    try:
        path.write_bytes(text.encode("utf-8"))
    except PermissionError:
        raise ExportIoError(ExportIoError.REASON_NO_PERMISSION, str(path)) from None
    except OSError:
        raise ExportIoError(ExportIoError.REASON_MISSING_PATH, str(path)) from None
    return path


# ---------------------------------------------------------------------------
# parsing (round-trip support)


def _text(element: ET.Element) -> str:
    return element.text or ""


def _parse_entries(element: ET.Element) -> dict[str, str]:
    return {child.get("key", ""): _text(child) for child in element.findall("entry")}


def _parse_server_info(payload: ET.Element) -> ServerInfoResult:
    addresses = []
    for address in payload.findall("address"):
        banner_el = address.find("serverBanner")
        geo_el = address.find("geo")
        geo = None
        if geo_el is not None:
            entries = _parse_entries(geo_el)
            geo = Geolocation(
                status=entries.get("status", ""),
                country=entries.get("country", ""),
                country_code=entries.get("countryCode", ""),
                region=entries.get("region", ""),
                region_name=entries.get("regionName", ""),
                city=entries.get("city", ""),
                zip_code=entries.get("zip", ""),
                lat=float(entries.get("lat", "0")),
                lon=float(entries.get("lon", "0")),
                timezone=entries.get("timezone", ""),
                isp=entries.get("isp", ""),
                org=entries.get("org", ""),
                as_field=entries.get("asField", ""),
                query=entries.get("query", ""),
            )
        addresses.append(IpInfo(
            address=address.get("ip", ""),
            server_banner=_text(banner_el) if banner_el is not None else None,
            geo=geo,
        ))
    return ServerInfoResult(addresses=addresses)


def _parse_ssl(payload: ET.Element) -> SslCertificateResult:
    chain = []
    for cert in payload.findall("certificate"):
        entries = _parse_entries(cert)
        chain.append(CertificateInfo(
            subject_dn=entries.get("subjectDn", ""),
            issuer_dn=entries.get("issuerDn", ""),
            not_before=parse_timestamp(entries["notBefore"]),
            not_after=parse_timestamp(entries["notAfter"]),
            serial_hex=entries.get("serialHex", ""),
            signature_algorithm=entries.get("signatureAlgorithm", ""),
            subject_alt_names=[_text(san) for san in cert.findall("subjectAltName")],
            is_self_signed=entries.get("isSelfSigned") == "true",
        ))
    return SslCertificateResult(chain=chain)


def _record_from(element: ET.Element) -> DnsRecordEntry:
    return DnsRecordEntry(
        name=element.get("name", ""),
        rtype=element.get("rtype", ""),
        ttl=int(element.get("ttl", "0")),
        rdata=_text(element),
    )


def _parse_dns(payload: ET.Element) -> DnsResult:
    result = DnsResult()
    result.records = [_record_from(r) for r in payload.findall("record")]
    for chain_el in payload.findall("cnameChain"):
        result.cname_chains.append(CnameChain(
            names=[_text(n) for n in chain_el.findall("name")],
            terminal_records=[_record_from(t) for t in chain_el.findall("terminal")],
            truncated=chain_el.get("truncated") == "true",
        ))
    result.enumerated_hosts = [_text(h) for h in payload.findall("enumeratedHost")]
    for reverse in payload.findall("reverseName"):
        ip = reverse.get("ip", "")
        result.reverse_names[ip] = _text(reverse) if reverse.get("found") == "true" else None
    return result


def _parse_whois(payload: ET.Element) -> WhoisResult:
    fields: dict[str, list[str]] = {}
    display: dict[str, str] = {}
    for field_el in payload.findall("field"):
        key = field_el.get("key", "")
        display[key] = field_el.get("displayKey", key)
        fields[key] = [_text(v) for v in field_el.findall("value")]
    raw_el = payload.find("raw")
    return WhoisResult(
        queried_server=_text(payload.find("queriedServer")) if payload.find("queriedServer") is not None else "",
        referral_chain=[_text(r) for r in payload.findall("referral")],
        fields=fields,
        display_keys=display,
        raw=_text(raw_el) if raw_el is not None else "",
    )


def _parse_multimap(payload: ET.Element, tag: str, attr: str) -> Multimap:
    multimap = Multimap()
    for node in payload.findall(tag):
        key = node.get(attr, "")
        for value in node.findall("value"):
            multimap.add(key, _text(value))
    return multimap


def _parse_metadata(payload: ET.Element) -> MetadataResult:
    charset_el = payload.find("charset")
    robots_el = payload.find("robots")
    robots = RobotsReport()
    if robots_el is not None:
        robots.entries = _parse_multimap(robots_el, "entry", "type")
        robots.unparsed = [(int(u.get("line", "0")), _text(u)) for u in robots_el.findall("unparsed")]
    return MetadataResult(
        charset=_text(charset_el) if charset_el is not None else None,
        http_equiv=_parse_multimap(payload, "httpEquiv", "name"),
        named=_parse_multimap(payload, "meta", "name"),
        robots=robots,
    )


def _parse_page_content(payload: ET.Element) -> PageContentResult:
    result = PageContentResult()
    for hit in payload.findall("hit"):
        result.hits.setdefault(hit.get("entry", ""), []).append(
            RegexResultEntry(source_url=hit.get("sourceUrl", ""), text=_text(hit))
        )
    result.external_relations = {_text(r) for r in payload.findall("externalRelation")}
    result.image_urls = {_text(i) for i in payload.findall("imageUrl")}
    pages_el = payload.find("pagesVisited")
    result.pages_visited = int(_text(pages_el)) if pages_el is not None else 0
    return result


def _parse_activity(payload: ET.Element) -> MaliciousActivityResult:
    result = MaliciousActivityResult()
    sb_el = payload.find("safeBrowsing")
    if sb_el is not None and sb_el.get("available") == "true":
        raw_el = sb_el.find("rawBody")
        result.safe_browsing = SafeBrowsingVerdict(
            listed=sb_el.get("listed") == "true",
            threat_types={_text(t) for t in sb_el.findall("threatType")},
            raw_body=_text(raw_el) if raw_el is not None else None,
        )
    dnsbl_el = payload.find("dnsbl")
    if dnsbl_el is not None and dnsbl_el.get("available") == "true":
        result.dnsbl = DnsblVerdict(
            listed=dnsbl_el.get("listed") == "true",
            returned_addresses=[_text(a) for a in dnsbl_el.findall("returnedAddress")],
        )
    return result


def _parse_relations(payload: ET.Element) -> MaliciousRelationsResult:
    result = MaliciousRelationsResult()
    for relation in payload.findall("relation"):
        result.per_url[relation.get("url", "")] = _parse_activity(relation)
    return result


_PARSERS = {
    TraceKind.SERVER_INFO: _parse_server_info,
    TraceKind.SSL_CERTIFICATE: _parse_ssl,
    TraceKind.DNS: _parse_dns,
    TraceKind.WHOIS: _parse_whois,
    TraceKind.METADATA: _parse_metadata,
    TraceKind.PAGE_CONTENT: _parse_page_content,
    TraceKind.MALICIOUS_ACTIVITY: _parse_activity,
    TraceKind.MALICIOUS_RELATIONS: _parse_relations,
}


# ---------------------------------------------------------------------------
# JSON mirror (service results endpoint)


def _geo_to_json(geo: Geolocation) -> dict:
    return {
        "status": geo.status, "country": geo.country, "countryCode": geo.country_code,
        "region": geo.region, "regionName": geo.region_name, "city": geo.city,
        "zip": geo.zip_code, "lat": geo.lat, "lon": geo.lon, "timezone": geo.timezone,
        "isp": geo.isp, "org": geo.org, "asField": geo.as_field, "query": geo.query,
    }


def _activity_to_json(payload: MaliciousActivityResult) -> dict:
    sb = {"available": False}
    if payload.safe_browsing is not None:
        sb = {"available": True, "listed": payload.safe_browsing.listed,
              "threatTypes": sorted(payload.safe_browsing.threat_types),
              "rawBody": payload.safe_browsing.raw_body}
    dnsbl = {"available": False}
    if payload.dnsbl is not None:
        dnsbl = {"available": True, "listed": payload.dnsbl.listed,
                 "returnedAddresses": list(payload.dnsbl.returned_addresses)}
    return {"safeBrowsing": sb, "dnsbl": dnsbl}


def _payload_to_json(kind: TraceKind, payload) -> dict:
    if kind is TraceKind.SERVER_INFO:
        return {"addresses": [
            {"ip": info.address, "serverBanner": info.server_banner,
             "geo": _geo_to_json(info.geo) if info.geo is not None else None}
            for info in payload.addresses
        ]}
    if kind is TraceKind.SSL_CERTIFICATE:
        return {"chain": [
            {"subjectDn": c.subject_dn, "issuerDn": c.issuer_dn,
             "notBefore": format_timestamp(c.not_before),
             "notAfter": format_timestamp(c.not_after),
             "serialHex": c.serial_hex, "signatureAlgorithm": c.signature_algorithm,
             "subjectAltNames": list(c.subject_alt_names),
             "isSelfSigned": c.is_self_signed}
            for c in payload.chain
        ]}
    if kind is TraceKind.DNS:
        return {
            "records": [{"name": r.name, "rtype": r.rtype, "ttl": r.ttl, "rdata": r.rdata}
                        for r in payload.records],
            "cnameChains": [{"names": list(c.names), "truncated": c.truncated,
                             "terminalRecords": [{"name": r.name, "rtype": r.rtype,
                                                  "ttl": r.ttl, "rdata": r.rdata}
                                                 for r in c.terminal_records]}
                            for c in payload.cname_chains],
            "enumeratedHosts": list(payload.enumerated_hosts),
            "reverseNames": {ip: payload.reverse_names[ip]
                             for ip in sorted(payload.reverse_names)},
        }
    if kind is TraceKind.WHOIS:
        return {
            "queriedServer": payload.queried_server,
            "referralChain": list(payload.referral_chain),
            "fields": {key: {"displayKey": payload.display_keys.get(key, key),
                             "values": list(payload.fields[key])}
                       for key in sorted(payload.fields)},
            "raw": payload.raw,
        }
    if kind is TraceKind.METADATA:
        return {
            "charset": payload.charset,
            "httpEquiv": payload.http_equiv.as_dict(),
            "named": payload.named.as_dict(),
            "robots": {"entries": payload.robots.entries.as_dict(),
                       "unparsed": [[line, text] for line, text in payload.robots.unparsed]},
        }
    if kind is TraceKind.PAGE_CONTENT:
        return {
            "hits": {name: [{"sourceUrl": h.source_url, "text": h.text}
                            for h in payload.hits[name]]
                     for name in sorted(payload.hits)},
            "externalRelations": sorted(payload.external_relations),
            "imageUrls": sorted(payload.image_urls),
            "pagesVisited": payload.pages_visited,
        }
    if kind is TraceKind.MALICIOUS_ACTIVITY:
        return _activity_to_json(payload)
    if kind is TraceKind.MALICIOUS_RELATIONS:
        return {"perUrl": {url: _activity_to_json(payload.per_url[url])
                           for url in sorted(payload.per_url)}}
    raise InvalidParameterError(f"no JSON mapping for {kind}")


def result_to_json(result: TraceResult) -> dict:
    """The same information as the XML <trace> element, as JSON."""
    return {
        "kind": result.kind.value,
        "target": result.target.host,
        "httpPort": result.target.http_port,
        "httpsPort": result.target.https_port,
        "status": result.status.value,
        "startedAt": format_timestamp(result.started_at),
        "finishedAt": format_timestamp(result.finished_at),
        "warnings": list(result.warnings),
        "payload": _payload_to_json(result.kind, result.payload)
        if result.payload is not None else None,
    }


def parse_results(text: str | bytes) -> tuple[datetime, list[TraceResult]]:
    """Rebuild full TraceResult objects from an exported document."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as err:
        raise ProtocolViolationError(f"not a well-formed export document: {err}") from err
    if root.tag != "digniteResults":
        raise ProtocolViolationError(f"unexpected root element {root.tag!r}")
    generated_at = parse_timestamp(root.get("generatedAt", ""))
    results = []
    for trace in root.findall("trace"):
        kind = TraceKind.from_name(trace.get("kind", ""))
        target = Target(
            host=trace.get("target", ""),
            http_port=int(trace.get("httpPort", "80")),
            https_port=int(trace.get("httpsPort", "443")),
        )
        payload_el = trace.find("payload")
        payload = _PARSERS[kind](payload_el) if payload_el is not None else None
        results.append(TraceResult(
            kind=kind,
            target=target,
            started_at=parse_timestamp(trace.get("startedAt", "")),
            finished_at=parse_timestamp(trace.get("finishedAt", "")),
            status=TraceStatus(trace.get("status", "")),
            payload=payload,
            warnings=[_text(w) for w in trace.findall("warning")],
        ))
    return generated_at, results
