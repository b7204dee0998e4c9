import pytest

from traceforge.dnstrace import (
    SWEEP_TYPES,
    enumerate_hosts,
    load_dictionary,
    query_records,
    resolve_cname_chain,
    reverse_lookup,
    run_dns,
)
from traceforge.errors import RemoteUnreachableError
from traceforge.model import TraceStatus, make_target


class TestQueryRecords:
    def test_single_a_answer(self, transport):
        transport.add_dns_records("www.bfh.ch", "A", [("www.bfh.ch", "A", 60, "147.87.0.1")])
        entries = query_records(transport, "www.bfh.ch", ("A",), 3)
        assert len(entries) == 1
        assert (entries[0].rtype, entries[0].rdata) == ("A", "147.87.0.1")

    def test_cname_answer_from_capture(self, transport):
        from tests.test_dnswire import IMAGES_GOOGLE_CH_CAPTURE

        transport.add_dns_raw("images.google.ch", "CNAME", IMAGES_GOOGLE_CH_CAPTURE)
        entries = query_records(transport, "images.google.ch", ("CNAME",), 3)
        assert len(entries) == 1
        assert entries[0].rtype == "CNAME"
        assert entries[0].rdata == "images.google.com"

    def test_transient_failures_retried_up_to_max(self, transport):
        transport.add_dns_records("flaky.example", "A", [("flaky.example", "A", 60, "192.0.2.9")])
        transport.fail_dns("flaky.example", "A", times=2)
        entries = query_records(transport, "flaky.example", ("A",), max_attempts=3)
        assert entries[0].rdata == "192.0.2.9"
        assert transport.dns_query_count("flaky.example", "A") == 3

    def test_nxdomain_not_retried(self, transport):
        transport.add_dns_nxdomain("gone.example", "A")
        entries = query_records(transport, "gone.example", ("A",), max_attempts=3)
        assert entries == []
        assert transport.dns_query_count("gone.example", "A") == 1

    def test_retry_count_never_exceeds_max_attempts(self, transport):
        transport.fail_dns("dead.example", "A", times=99)
        transport.fail_dns("dead.example", "AAAA", times=99)
        with pytest.raises(RemoteUnreachableError):
            query_records(transport, "dead.example", ("A", "AAAA"), max_attempts=3)
        assert transport.dns_query_count("dead.example", "A") == 3
        assert transport.dns_query_count("dead.example", "AAAA") == 3

    def test_partial_type_failure_keeps_other_answers(self, transport):
        transport.add_dns_records("mixed.example", "A", [("mixed.example", "A", 60, "192.0.2.1")])
        transport.fail_dns("mixed.example", "AAAA", times=99)
        entries = query_records(transport, "mixed.example", ("A", "AAAA"), max_attempts=2)
        assert [e.rdata for e in entries] == ["192.0.2.1"]


class TestCnameChain:
    def test_three_hop_chain(self, transport):
        transport.add_dns_records("a.example", "CNAME", [("a.example", "CNAME", 60, "b.example")])
        transport.add_dns_records("b.example", "CNAME", [("b.example", "CNAME", 60, "c.example")])
        transport.add_dns_records("c.example", "A", [("c.example", "A", 60, "192.0.2.7")])
        chain = resolve_cname_chain(transport, "a.example", max_depth=10)
        assert chain.names == ["a.example", "b.example", "c.example"]
        assert not chain.truncated
        assert [r.rdata for r in chain.terminal_records] == ["192.0.2.7"]

    def test_direct_a_record_chain_of_one(self, transport):
        transport.add_dns_records("plain.example", "A", [("plain.example", "A", 60, "192.0.2.1")])
        chain = resolve_cname_chain(transport, "plain.example")
        assert chain.names == ["plain.example"]
        assert not chain.truncated

    def test_loop_truncates_at_revisit(self, transport):
        transport.add_dns_records("a.example", "CNAME", [("a.example", "CNAME", 60, "b.example")])
        transport.add_dns_records("b.example", "CNAME", [("b.example", "CNAME", 60, "a.example")])
        chain = resolve_cname_chain(transport, "a.example", max_depth=10)
        assert chain.truncated
        assert chain.names == ["a.example", "b.example"]

    def test_max_depth_truncates(self, transport):
        for i in range(12):
            transport.add_dns_records(
                f"h{i}.example", "CNAME", [(f"h{i}.example", "CNAME", 60, f"h{i+1}.example")]
            )
        chain = resolve_cname_chain(transport, "h0.example", max_depth=5)
        assert chain.truncated
        assert len(chain.names) <= 6

    def test_terminates_within_depth_queries_even_for_adversarial_loops(self, transport):
        transport.add_dns_records("self.example", "CNAME", [("self.example", "CNAME", 60, "self.example")])
        chain = resolve_cname_chain(transport, "self.example", max_depth=10)
        assert chain.truncated
        assert transport.dns_query_count("self.example", "CNAME") == 1


class TestEnumerateHosts:
    def test_existing_hosts_in_dictionary_order(self, transport):
        transport.add_dns_records("www.example.org", "A", [("www.example.org", "A", 60, "192.0.2.1")])
        transport.add_dns_records("mail.example.org", "A", [("mail.example.org", "A", 60, "192.0.2.2")])
        hosts = enumerate_hosts(transport, "example.org", ["www", "mail", "nosuch"])
        assert hosts == ["www.example.org", "mail.example.org"]

    def test_empty_dictionary(self, transport):
        assert enumerate_hosts(transport, "example.org", []) == []

    def test_aaaa_only_host_included(self, transport):
        transport.add_dns_records("ipv6.example.org", "AAAA",
                                  [("ipv6.example.org", "AAAA", 60, "2001:db8::1")])
        hosts = enumerate_hosts(transport, "example.org", ["ipv6"])
        assert hosts == ["ipv6.example.org"]

    def test_never_returns_nxdomain_names(self, transport):
        transport.add_dns_records("real.example.org", "A", [("real.example.org", "A", 60, "192.0.2.1")])
        dictionary = ["real"] + [f"fake{i}" for i in range(10)]
        hosts = enumerate_hosts(transport, "example.org", dictionary)
        assert hosts == ["real.example.org"]
        for i in range(10):
            assert f"fake{i}.example.org" not in hosts

    def test_total_resolver_failure_raises(self, transport):
        for label in ("a", "b"):
            transport.fail_dns(f"{label}.example.org", "A", times=99)
            transport.fail_dns(f"{label}.example.org", "AAAA", times=99)
        with pytest.raises(RemoteUnreachableError):
            enumerate_hosts(transport, "example.org", ["a", "b"], max_attempts=1)


class TestReverseLookup:
    def test_v4_ptr(self, transport):
        transport.add_dns_records("1.2.0.192.in-addr.arpa", "PTR",
                                  [("1.2.0.192.in-addr.arpa", "PTR", 60, "host.example.net")])
        assert reverse_lookup(transport, "192.0.2.1") == "host.example.net"

    def test_nxdomain_gives_none(self, transport):
        assert reverse_lookup(transport, "192.0.2.99") is None

    def test_v6_nibble_zone(self, transport):
        import ipaddress

        zone = ipaddress.ip_address("2001:db8::1").reverse_pointer
        transport.add_dns_records(zone, "PTR", [(zone, "PTR", 60, "v6host.example.net")])
        assert reverse_lookup(transport, "2001:db8::1") == "v6host.example.net"


class TestRunDns:
    def _plant_zone(self, transport):
        transport.add_dns_records("www.bfh.ch", "A", [("www.bfh.ch", "A", 60, "147.87.0.1")])
        transport.add_dns_records("bfh.ch", "A", [("bfh.ch", "A", 60, "147.87.0.2")])
        transport.add_dns_records("bfh.ch", "MX", [("bfh.ch", "MX", 60, "10 mail.bfh.ch")])
        transport.add_dns_records("mail.bfh.ch", "A", [("mail.bfh.ch", "A", 60, "147.87.0.3")])
        transport.add_dns_records("1.0.87.147.in-addr.arpa", "PTR",
                                  [("1.0.87.147.in-addr.arpa", "PTR", 60, "www.bfh.ch")])

    def test_composition(self, transport, clock):
        self._plant_zone(transport)
        result = run_dns(transport, make_target("www.bfh.ch"),
                         dictionary=["www", "mail", "nosuch"], clock=clock)
        assert result.status in (TraceStatus.SUCCESS, TraceStatus.PARTIAL_FAILURE)
        payload = result.payload
        rdatas = {(e.rtype, e.rdata) for e in payload.records}
        assert ("A", "147.87.0.1") in rdatas
        assert ("A", "147.87.0.2") in rdatas  # parent sweep
        assert ("MX", "10 mail.bfh.ch") in rdatas
        # enumeration runs on the registrable parent
        assert payload.enumerated_hosts == ["www.bfh.ch", "mail.bfh.ch"]
        assert payload.reverse_names["147.87.0.1"] == "www.bfh.ch"
        assert payload.cname_chains[0].names == ["www.bfh.ch"]

    def test_empty_dictionary(self, transport, clock):
        self._plant_zone(transport)
        result = run_dns(transport, make_target("www.bfh.ch"), dictionary=[], clock=clock)
        assert result.payload.enumerated_hosts == []

    def test_cname_target_host(self, transport, clock):
        transport.add_dns_records("images.google.ch", "CNAME",
                                  [("images.google.ch", "CNAME", 3600, "images.google.com")])
        transport.add_dns_records("images.google.com", "A",
                                  [("images.google.com", "A", 60, "142.250.0.1")])
        result = run_dns(transport, make_target("images.google.ch"), dictionary=[], clock=clock)
        chain = result.payload.cname_chains[0]
        assert chain.names == ["images.google.ch", "images.google.com"]
        assert not chain.truncated

    def test_total_failure(self, transport, clock):
        for rtype in SWEEP_TYPES:
            transport.fail_dns("dark.example", rtype, times=99)
        result = run_dns(transport, make_target("dark.example"), dictionary=[],
                         max_attempts=2, clock=clock)
        assert result.status is TraceStatus.FAILURE


class TestDictionaryFile:
    def test_default_dictionary_ships(self):
        labels = load_dictionary()
        assert "www" in labels and "mail" in labels
        assert len(labels) >= 50
        assert all(label == label.strip() and label for label in labels)

    def test_user_file_with_comments(self, tmp_path):
        path = tmp_path / "dict.txt"
        path.write_text("# comment\nwww\n\n  mail  \n#tail\n")
        assert load_dictionary(path) == ["www", "mail"]
