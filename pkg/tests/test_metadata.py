from hypothesis import given, strategies as st

from traceforge.metadata import extract_meta_tags, parse_robots, run_metadata
from traceforge.model import TraceStatus, make_target

ROBOTS_12_LINES = """# robots.txt for fixture.example
# generated 2014
User-agent: *
Disallow: /private/
Disallow: /tmp/
Allow: /public/
Crawl-delay: 5

Sitemap: http://fixture.example/sitemap.xml
User-agent: evilbot
Disallow: /
this line has no colon separator"""


class TestMetaExtraction:
    def test_charset_form(self):
        charset, _, _ = extract_meta_tags('<meta charset="utf-8" />')
        assert charset == "utf-8"

    def test_http_equiv_form(self):
        _, http_equiv, _ = extract_meta_tags(
            '<meta http-equiv="Content-Language" content="de-ch" />'
        )
        assert http_equiv.get("Content-Language") == ["de-ch"]

    def test_named_form_without_self_close(self):
        _, _, named = extract_meta_tags(
            '<meta name="viewport" content="width=device-width, initial-scale=1, maximum-scale=1">'
        )
        assert named.get("viewport") == ["width=device-width, initial-scale=1, maximum-scale=1"]

    def test_tag_name_case_insensitive_attributes_not(self):
        charset, _, _ = extract_meta_tags('<META charset="latin-1">')
        assert charset == "latin-1"
        charset, _, named = extract_meta_tags('<meta CHARSET="nope"><meta NAME="x" content="y">')
        assert charset is None
        assert len(named) == 0

    def test_single_quoted_values_do_not_match(self):
        charset, http_equiv, named = extract_meta_tags(
            "<meta charset='utf-8'><meta name='a' content='b'>"
        )
        assert charset is None and len(named) == 0 and len(http_equiv) == 0

    def test_multiple_named_tags_accumulate(self):
        html = (
            '<meta name="author" content="jane">'
            '<meta name="keywords" content="a,b">'
            '<meta name="author" content="joe">'
        )
        _, _, named = extract_meta_tags(html)
        assert named.get("author") == ["jane", "joe"]
        assert named.get("keywords") == ["a,b"]

    @given(st.text(alphabet=st.characters(blacklist_characters="<"), max_size=200))
    def test_insensitive_to_noise_between_tags(self, noise):
        base = '<meta charset="utf-8" /><meta name="a" content="b">'
        noisy = noise + '<meta charset="utf-8" />' + noise + '<meta name="a" content="b">' + noise
        assert extract_meta_tags(noisy) == extract_meta_tags(base)


class TestParseRobots:
    def test_disallow_entry(self):
        report = parse_robots("Disallow: /private/")
        assert report.entries.get("Disallow") == ["/private/"]

    def test_comment_goes_to_unparsed_with_line_number(self):
        report = parse_robots("# generated 2014")
        assert report.unparsed == [(1, "# generated 2014")]

    def test_crawl_delay(self):
        report = parse_robots("Crawl-delay: 5")
        assert report.entries.get("Crawl-delay") == ["5"]

    def test_line_accounting_is_complete(self):
        report = parse_robots(ROBOTS_12_LINES)
        non_empty = sum(1 for line in ROBOTS_12_LINES.splitlines() if line.strip())
        assert report.entries.total_values() + len(report.unparsed) == non_empty

    def test_twelve_line_fixture_details(self):
        report = parse_robots(ROBOTS_12_LINES)
        assert report.entries.get("User-agent") == ["*", "evilbot"]
        assert report.entries.get("Disallow") == ["/private/", "/tmp/", "/"]
        assert report.entries.get("Allow") == ["/public/"]
        assert report.entries.get("Crawl-delay") == ["5"]
        assert report.entries.get("Sitemap") == ["http://fixture.example/sitemap.xml"]
        assert (1, "# robots.txt for fixture.example") in report.unparsed
        assert (2, "# generated 2014") in report.unparsed
        assert (12, "this line has no colon separator") in report.unparsed

    def test_empty_lines_ignored_but_numbering_preserved(self):
        report = parse_robots("\n\n# late comment\n")
        assert report.unparsed == [(3, "# late comment")]
        assert report.entries.total_values() == 0

    @given(st.text(max_size=500))
    def test_every_nonempty_line_lands_in_exactly_one_bucket(self, text):
        report = parse_robots(text)
        non_empty = sum(1 for line in text.splitlines() if line.strip())
        assert report.entries.total_values() + len(report.unparsed) == non_empty


class TestRunMetadata:
    HTML = (
        "<html><head>"
        '<meta charset="utf-8" />'
        '<meta http-equiv="Content-Language" content="de-ch" />'
        '<meta name="viewport" content="width=device-width, initial-scale=1, maximum-scale=1">'
        '<meta name="author" content="web team">'
        "</head><body>hello</body></html>"
    )

    def test_page_and_robots(self, transport, clock):
        target = make_target("fixture.example")
        transport.add_http("http://fixture.example/", body=self.HTML)
        transport.add_http("http://fixture.example/robots.txt", body="Disallow: /x/\n# c\n")
        result = run_metadata(transport, target, clock=clock)
        assert result.status is TraceStatus.SUCCESS
        payload = result.payload
        assert payload.charset == "utf-8"
        assert payload.http_equiv.get("Content-Language") == ["de-ch"]
        assert payload.named.keys() == ["viewport", "author"]
        assert payload.robots.entries.get("Disallow") == ["/x/"]
        assert payload.robots.unparsed == [(2, "# c")]

    def test_missing_robots_warns_but_succeeds(self, transport, clock):
        target = make_target("fixture.example")
        transport.add_http("http://fixture.example/", body=self.HTML)
        transport.add_http("http://fixture.example/robots.txt", status=404, body="not here")
        result = run_metadata(transport, target, clock=clock)
        assert result.status is TraceStatus.PARTIAL_FAILURE
        assert result.payload.charset == "utf-8"
        assert result.payload.robots.entries.total_values() == 0
        assert any("robots" in w for w in result.warnings)

    def test_empty_body_is_empty_result(self, transport, clock):
        target = make_target("fixture.example")
        transport.add_http("http://fixture.example/", body=b"")
        transport.add_http("http://fixture.example/robots.txt", body=b"")
        result = run_metadata(transport, target, clock=clock)
        assert result.payload.charset is None
        assert len(result.payload.named) == 0

    def test_https_only_host_uses_fallback(self, transport, clock):
        target = make_target("secure.example")
        transport.add_http("https://secure.example/", body=self.HTML)
        transport.add_http("https://secure.example/robots.txt", body="User-agent: *\n")
        result = run_metadata(transport, target, clock=clock)
        assert result.status is TraceStatus.SUCCESS
        assert result.payload.charset == "utf-8"

    def test_unreachable_host_is_failure(self, transport, clock):
        result = run_metadata(transport, make_target("void.example"), clock=clock)
        assert result.status is TraceStatus.FAILURE
