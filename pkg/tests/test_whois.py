import pytest
from hypothesis import given, strategies as st

from traceforge.errors import ProtocolViolationError
from traceforge.model import TraceStatus, make_target
from traceforge.whois import (
    IANA_HOST,
    parse_whois_fields,
    resolve_whois_server,
    run_whois,
)

IANA_REFERRAL_CH = (
    "% IANA WHOIS server\r\n"
    "% for more information on IANA, visit http://www.iana.org\r\n"
    "\r\n"
    "domain:       CH\r\n"
    "organisation: SWITCH\r\n"
    "refer:        whois.nic.ch\r\n"
    "\r\n"
    "source:       IANA\r\n"
)

NIC_CH_RECORD = (
    "Domain Name: example.ch\r\n"
    "Holder Name: Example Holder AG\r\n"
    "Holder Street: Musterstrasse 12\r\n"
    "Holder City: Bern\r\n"
    "Holder Country: CH\r\n"
    "Technical Contact: Jane Doe\r\n"
    "Technical Email: tech@example.ch\r\n"
    "Registrar Name: Example Registrar GmbH\r\n"
    "Name Server: ns1.example.ch\r\n"
    "Name Server: ns2.example.ch\r\n"
    "First Registration Date: 2001-03-20\r\n"
    "DNSSEC: N\r\n"
)


class TestParseFields:
    def test_simple_key_value(self):
        fields, display = parse_whois_fields("Registrant Name:  Jane Doe")
        assert fields == {"registrant name": ["Jane Doe"]}
        assert display == {"registrant name": "Registrant Name"}

    def test_comment_line_skipped(self):
        fields, _ = parse_whois_fields("% comment line")
        assert fields == {}

    def test_repeated_keys_accumulate_in_order(self):
        raw = "Name Server: ns1.example.net\r\nName Server: ns2.example.net\r\n"
        fields, _ = parse_whois_fields(raw)
        assert fields == {"name server": ["ns1.example.net", "ns2.example.net"]}

    def test_value_truncates_at_colon(self):
        # ':' is outside the value character class, so URLs cut off; the raw
        # response is the escape hatch.
        fields, _ = parse_whois_fields("Registrar URL: http://www.example-registrar.ch")
        assert fields["registrar url"] == ["http"]

    def test_key_normalization_collapses_whitespace(self):
        fields, display = parse_whois_fields("Tech   Contact/Phone: +41 31 123 45 67")
        assert fields == {"tech contact/phone": ["+41 31 123 45 67"]}
        assert display["tech contact/phone"] == "Tech   Contact/Phone"

    @given(st.text(max_size=800))
    def test_values_always_substrings_of_raw(self, raw):
        fields, _ = parse_whois_fields(raw)
        for values in fields.values():
            for value in values:
                assert value in raw


class TestResolveServer:
    def test_iana_referral_followed(self, transport):
        transport.add_tcp(IANA_HOST, 43, "example.ch", IANA_REFERRAL_CH)
        transport.add_tcp("whois.nic.ch", 43, "example.ch", NIC_CH_RECORD)
        server, chain, last = resolve_whois_server(transport, "example.ch")
        assert server == "whois.nic.ch"
        assert chain == [IANA_HOST, "whois.nic.ch"]
        assert last == NIC_CH_RECORD

    def test_terminal_record_at_iana(self, transport):
        transport.add_tcp(IANA_HOST, 43, "example", "domain: EXAMPLE\r\norganisation: IANA\r\n")
        server, chain, _ = resolve_whois_server(transport, "example")
        assert server == IANA_HOST
        assert chain == [IANA_HOST]

    def test_referral_chain_capped_after_two_hops(self, transport):
        # iana -> b -> c: the second referral target is reported without
        # being queried during resolution.
        transport.add_tcp(IANA_HOST, 43, "deep.example", "refer: whois.b.example\r\n")
        transport.add_tcp("whois.b.example", 43, "deep.example", "refer: whois.c.example\r\n")
        server, chain, _ = resolve_whois_server(transport, "deep.example")
        assert server == "whois.c.example"
        assert chain == [IANA_HOST, "whois.b.example", "whois.c.example"]
        assert len(transport.tcp_requests) == 2

    def test_refer_case_and_whitespace_insensitive(self, transport):
        transport.add_tcp(IANA_HOST, 43, "x.ch", "  ReFeR:   WHOIS.NIC.CH  \r\nfoo: bar\r\n")
        transport.add_tcp("whois.nic.ch", 43, "x.ch", "Domain Name: x.ch\r\n")
        server, chain, _ = resolve_whois_server(transport, "x.ch")
        assert server == "whois.nic.ch"

    def test_garbage_without_referral_or_record(self, transport):
        transport.add_tcp(IANA_HOST, 43, "???", "% nothing here\r\n%% error\r\n")
        with pytest.raises(ProtocolViolationError):
            resolve_whois_server(transport, "???")


class TestRunWhois:
    def test_full_pipeline(self, transport, clock):
        transport.add_tcp(IANA_HOST, 43, "example.ch", IANA_REFERRAL_CH)
        transport.add_tcp("whois.nic.ch", 43, "example.ch", NIC_CH_RECORD)
        result = run_whois(transport, make_target("example.ch"), clock=clock)
        assert result.status is TraceStatus.SUCCESS
        payload = result.payload
        assert payload.queried_server == "whois.nic.ch"
        assert payload.raw == NIC_CH_RECORD
        assert payload.fields["name server"] == ["ns1.example.ch", "ns2.example.ch"]
        assert payload.fields["holder name"] == ["Example Holder AG"]
        # bounded referral following: iana + nic.ch during resolution + record
        assert len(transport.tcp_requests) <= 3

    def test_unparseable_blob_still_succeeds(self, transport, clock):
        blob = ">>> free text without any structure <<<\r\njust prose\r\n"
        transport.add_tcp(IANA_HOST, 43, "odd.example", "refer: whois.odd.example\r\n")
        transport.add_tcp("whois.odd.example", 43, "odd.example", blob)
        result = run_whois(transport, make_target("odd.example"), clock=clock)
        assert result.status is TraceStatus.SUCCESS
        assert result.payload.fields == {}
        assert result.payload.raw == blob

    def test_ip_style_query_returns_range_owner(self, transport):
        # Whois-by-IP goes through the same pipeline.
        record = (
            "inetnum: 192.0.2.0 - 192.0.2.255\r\n"
            "netname: TEST-NET-1\r\n"
            "descr: Example range owner\r\n"
            "country: CH\r\n"
        )
        transport.add_tcp(IANA_HOST, 43, "192.0.2.1", "refer: whois.ripe.net\r\n")
        transport.add_tcp("whois.ripe.net", 43, "192.0.2.1", record)
        server, chain, last = resolve_whois_server(transport, "192.0.2.1")
        fields, _ = parse_whois_fields(last)
        assert server == "whois.ripe.net"
        assert fields["netname"] == ["TEST-NET-1"]

    def test_everything_down_is_failure(self, transport, clock):
        result = run_whois(transport, make_target("down.example"), clock=clock)
        assert result.status is TraceStatus.FAILURE
        assert result.payload is None
        assert result.warnings

    def test_final_server_down_degrades_to_referral_raw(self, transport, clock):
        transport.add_tcp(IANA_HOST, 43, "half.example", IANA_REFERRAL_CH)
        result = run_whois(transport, make_target("half.example"), clock=clock)
        assert result.status is TraceStatus.PARTIAL_FAILURE
        assert result.payload.raw == IANA_REFERRAL_CH
        assert result.warnings
