import pytest

from tests import sites
from traceforge.content import (
    CrawlerConfig,
    PageContentResult,
    PatternRegistry,
    RegexEntry,
    crawl,
    email_entry,
    facebook_entry,
    google_analytics_entry,
    registry_defaults,
    robots_rules_for_all,
    search_text_entry,
    should_visit,
    twitter_entry,
    visit_page,
)
from traceforge.errors import InvalidParameterError
from traceforge.model import TraceStatus, make_target, registrable_suffixes


def config_for(host="www.bfh.ch", **overrides):
    return CrawlerConfig.for_target(make_target(host), **overrides)


# expectations computed by hand against both URL patterns and the domain
# rule, then checked with the reference regex engine
SHOULD_VISIT_TABLE = [
    ("http://www.bfh.ch/welcome", True, False, False),
    ("http://www.bfh.ch/", True, False, False),
    ("http://www.bfh.ch/index.html", True, False, False),
    ("http://WWW.BFH.CH/INDEX.HTML", True, False, False),
    ("http://www.bfh.ch/page.php", True, False, False),
    ("http://www.bfh.ch/page.php5", True, False, False),
    ("http://www.bfh.ch/doc.aspx?id=2", True, False, False),
    ("http://sub.www.bfh.ch/a.jsp", True, False, False),
    ("http://research.bfh.ch/pub.xhtml", True, False, False),
    ("http://www.bfh.ch/deep/dir/page.shtml", True, False, False),
    ("http://partner.example.com/index.html", False, True, False),
    ("http://other.example.net/", False, True, False),
    ("http://evil.example.org/welcome", False, True, False),
    ("http://www.bfh.ch/logo.png", False, False, True),
    ("http://www.bfh.ch/banner.jpg", False, False, True),
    ("http://cdn.thirdparty.net/pic.gif", False, False, True),
    ("http://www.bfh.ch/photo.jpeg", False, False, True),
    ("http://www.bfh.ch/img.png?v=2", False, False, True),
    ("http://www.bfh.ch/report.pdf", False, False, False),
    ("http://www.bfh.ch/style.css", False, False, False),
    ("http://www.bfh.ch", False, False, False),
]


class TestShouldVisit:
    @pytest.mark.parametrize("url,visit,relation,image", SHOULD_VISIT_TABLE)
    def test_truth_table(self, url, visit, relation, image):
        cfg = config_for()
        result = PageContentResult()
        assert should_visit(url, cfg, result) is visit
        assert (url.lower() in result.external_relations) is relation
        assert (url.lower() in result.image_urls) is image

    def test_relations_not_recorded_when_disabled(self):
        cfg = config_for(url_relation=False)
        result = PageContentResult()
        assert not should_visit("http://partner.example.com/index.html", cfg, result)
        assert result.external_relations == set()

    def test_images_not_recorded_when_disabled(self):
        cfg = config_for(image_relation=False)
        result = PageContentResult()
        assert not should_visit("http://www.bfh.ch/logo.png", cfg, result)
        assert result.image_urls == set()

    def test_no_relation_ever_matches_allowed_suffixes(self):
        cfg = config_for()
        result = PageContentResult()
        for url, *_ in SHOULD_VISIT_TABLE:
            should_visit(url, cfg, result)
        suffixes = registrable_suffixes(make_target("www.bfh.ch"))
        from urllib.parse import urlsplit

        for relation in result.external_relations:
            host = urlsplit(relation).hostname
            assert host != suffixes[0]
            assert not any(host.endswith(s) for s in suffixes[1:])


class TestRegistry:
    def test_defaults_in_order(self):
        names = [e.name for e in registry_defaults()]
        assert names == ["Email", "Phone", "GoogleAnalytics", "ClickyAnalytics", "Scripts"]

    def test_first_found_flags(self):
        flags = {e.name: e.first_found_only for e in registry_defaults()}
        assert flags["GoogleAnalytics"] and flags["ClickyAnalytics"]
        assert not flags["Email"] and not flags["Phone"] and not flags["Scripts"]

    def test_add_and_remove(self):
        registry = PatternRegistry.with_defaults()
        registry.add_regex(facebook_entry())
        registry.add_regex(twitter_entry())
        assert len(registry) == 7
        registry.remove_all_regexs()
        assert len(registry) == 0

    def test_duplicate_name_rejected(self):
        registry = PatternRegistry.with_defaults()
        with pytest.raises(InvalidParameterError):
            registry.add_regex(email_entry())

    def test_broken_pattern_rejected(self):
        with pytest.raises(InvalidParameterError):
            RegexEntry("Broken", "([unclosed")


class TestVisitPage:
    def test_email_hit(self):
        result = PageContentResult()
        visit_page("http://x/", "reach info@example.org here",
                   PatternRegistry([email_entry()]), result)
        assert [(h.source_url, h.text) for h in result.hits["Email"]] == [
            ("http://x/", "info@example.org")
        ]

    def test_obfuscated_email_hit(self):
        result = PageContentResult()
        visit_page("http://x/", "mail john(at)mail(dot)example(dot)com now",
                   PatternRegistry([email_entry()]), result)
        assert result.hits["Email"][0].text == "john(at)mail(dot)example(dot)com"

    def test_first_found_only_skips_later_pages(self):
        registry = PatternRegistry([google_analytics_entry()])
        result = PageContentResult()
        matched = set()
        visit_page("http://x/1", "_gaq.push(['_setAccount', 'UA-1111-1'])",
                   registry, result, matched)
        visit_page("http://x/2", "_gaq.push(['_setAccount', 'UA-2222-2'])",
                   registry, result, matched)
        assert len(result.hits["GoogleAnalytics"]) == 1
        assert result.hits["GoogleAnalytics"][0].text == "UA-1111-1"

    def test_projection_extracts_group(self):
        result = PageContentResult()
        visit_page("http://x/", "_gaq.push(['_setAccount', 'UA-55-5'])",
                   PatternRegistry([google_analytics_entry()]), result)
        assert result.hits["GoogleAnalytics"][0].text == "UA-55-5"

    def test_clicky_projection_joins_id_and_key(self):
        from traceforge.content import clicky_analytics_entry

        result = PageContentResult()
        visit_page("http://x/", "see https://api.clicky.com/api/stats/4?site_id=100877862&sitekey=875272665599",
                   PatternRegistry([clicky_analytics_entry()]), result)
        assert result.hits["ClickyAnalytics"][0].text == "site_id=100877862 sitekey=875272665599"

    def test_search_text_case_insensitive(self):
        result = PageContentResult()
        visit_page("http://x/", "cheap rolex replica",
                   PatternRegistry([search_text_entry("Rolex", case_sensitive=False)]), result)
        assert result.hits["Search[Rolex]"][0].text == "rolex"

    def test_search_text_case_sensitive_misses(self):
        result = PageContentResult()
        visit_page("http://x/", "cheap rolex replica",
                   PatternRegistry([search_text_entry("Rolex", case_sensitive=True)]), result)
        assert "Search[Rolex]" not in result.hits

    def test_facebook_widget_divs(self):
        body = ('<div class="fb-like" data-share="true"></div>'
                '<div class="fb-share-button"></div>'
                '<div class="fb-unknown"></div>')
        result = PageContentResult()
        visit_page("http://x/", body, PatternRegistry([facebook_entry()]), result)
        texts = [h.text for h in result.hits["Facebook"]]
        assert texts == ['<div class="fb-like" data-share="true"></div>',
                         '<div class="fb-share-button"></div>']

    def test_twitter_count_widget(self):
        body = ('src="http://cdn.api.twitter.com/1/urls/count.json'
                '?url=http%3A%2F%2Fx&amp;callback=twttr.receiveCount"')
        result = PageContentResult()
        visit_page("http://x/", body, PatternRegistry([twitter_entry()]), result)
        assert len(result.hits["Twitter"]) == 1

    def test_scripts_capture_inline_and_self_closing(self):
        from traceforge.content import scripts_entry

        body = ('<script type="text/javascript">var x=1;</script> '
                '<script src="x.js" type="text/javascript"/>')
        result = PageContentResult()
        visit_page("http://x/", body, PatternRegistry([scripts_entry()]), result)
        assert [h.text for h in result.hits["Scripts"]] == [
            '<script type="text/javascript">var x=1;</script>',
            '<script src="x.js" type="text/javascript"/>',
        ]

    def test_empty_body_no_hits(self):
        result = PageContentResult()
        visit_page("http://x/", "", PatternRegistry.with_defaults(), result)
        assert result.hits == {}

    def test_hits_are_substrings_of_body(self):
        body = sites.PAGES["/contact.html"] + sites.PAGES["/about.html"]
        result = PageContentResult()
        visit_page("http://x/", body, PatternRegistry.with_defaults(), result)
        for entries in result.hits.values():
            for hit in entries:
                assert hit.text in body or hit.text in " ".join(body.split())


class TestRobotsRules:
    def test_star_group_only(self):
        disallows, delay = robots_rules_for_all(
            "User-agent: googlebot\nDisallow: /gbot/\n\n"
            "User-agent: *\nDisallow: /secret/\nCrawl-delay: 2\n"
        )
        assert disallows == ["/secret/"]
        assert delay == 2.0

    def test_group_resets_after_rules(self):
        disallows, _ = robots_rules_for_all(
            "User-agent: *\nDisallow: /a/\nUser-agent: other\nDisallow: /b/\n"
        )
        assert disallows == ["/a/"]

    def test_empty_disallow_ignored(self):
        disallows, _ = robots_rules_for_all("User-agent: *\nDisallow:\n")
        assert disallows == []


class TestCrawl:
    def _crawl(self, transport, clock, **overrides):
        sites.plant_site(transport)
        cfg = config_for(**overrides)
        return crawl(transport, make_target(sites.SITE_HOST), cfg, clock=clock)

    def test_all_planted_artifacts_recovered(self, transport, clock):
        result = self._crawl(transport, clock)
        assert result.status is TraceStatus.SUCCESS
        payload = result.payload
        assert payload.pages_visited == sites.CRAWLABLE_PAGE_COUNT
        emails = {h.text for h in payload.hits["Email"]}
        assert emails == sites.PLANTED_EMAILS
        phones = {h.text for h in payload.hits["Phone"]}
        assert phones == {sites.PLANTED_PHONE}
        ga = [h.text for h in payload.hits["GoogleAnalytics"]]
        assert ga == [sites.PLANTED_GA_FIRST]
        assert payload.external_relations == sites.PLANTED_EXTERNALS
        assert payload.image_urls == sites.PLANTED_IMAGES

    def test_disallowed_path_never_requested(self, transport, clock):
        self._crawl(transport, clock)
        assert transport.http_request_count("/secret/") == 0

    def test_no_url_fetched_twice(self, transport, clock):
        self._crawl(transport, clock)
        urls = [url for _, url in transport.http_requests]
        assert len(urls) == len(set(urls))

    def test_politeness_spacing_respects_crawl_delay(self, transport, clock):
        self._crawl(transport, clock)
        stamps = [t for t, _, url in transport.http_request_times if sites.SITE_HOST in url]
        deltas = [b - a for a, b in zip(stamps, stamps[1:])]
        assert deltas and all(d >= 1.0 - 1e-9 for d in deltas)

    def test_max_pages_one_visits_only_seed(self, transport, clock):
        result = self._crawl(transport, clock, max_pages=1)
        assert result.payload.pages_visited == 1
        page_gets = [u for m, u in transport.http_requests if "robots" not in u]
        assert page_gets == [f"http://{sites.SITE_HOST}/"]

    def test_removed_registry_still_collects_relations_and_images(self, transport, clock):
        registry = PatternRegistry.with_defaults()
        registry.remove_all_regexs()
        result = self._crawl(transport, clock, registry=registry)
        assert result.payload.hits == {}
        assert result.payload.external_relations == sites.PLANTED_EXTERNALS
        assert result.payload.image_urls == sites.PLANTED_IMAGES

    def test_hits_canonically_ordered(self, transport, clock):
        payload = self._crawl(transport, clock).payload
        assert list(payload.hits) == sorted(payload.hits)
        for entries in payload.hits.values():
            keys = [(e.source_url, e.text) for e in entries]
            assert keys == sorted(keys)

    def test_seed_unreachable_is_failure(self, transport, clock):
        result = crawl(transport, make_target("void.example"),
                       config_for("void.example"), clock=clock)
        assert result.status is TraceStatus.FAILURE

    def test_page_fetch_failure_is_warning(self, transport, clock):
        sites.plant_site(transport)
        transport.fail_http(f"http://{sites.SITE_HOST}/history.html", times=5)
        result = self._crawl(transport, clock)
        assert result.status is TraceStatus.PARTIAL_FAILURE
        assert result.payload.pages_visited == sites.CRAWLABLE_PAGE_COUNT - 1
        assert any("history" in w for w in result.warnings)

    def test_https_seed_fallback(self, transport, clock):
        transport.add_http("https://tls.example/", body='<a href="/a.html">a</a>')
        transport.add_http("https://tls.example/a.html", body="leaf")
        result = crawl(transport, make_target("tls.example"),
                       config_for("tls.example", politeness_delay_ms=0), clock=clock)
        assert result.payload.pages_visited == 2
