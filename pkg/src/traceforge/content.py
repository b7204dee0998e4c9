"""Page content trace: polite same-domain crawler with a pluggable registry
of extraction patterns.

URLs found on a page either get visited (same-domain pages), recorded as an
external relation (pages elsewhere) or recorded as an image URL; everything
else is dropped. Each visited page runs through the registry in order.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, ClassVar, Iterable
from urllib.parse import urljoin, urlsplit

from .clock import Clock, SystemClock
from .errors import InvalidParameterError, RemoteUnreachableError, TraceError
from .metadata import ROBOTS_LINE_RE
from .model import Target, TraceKind, TraceResult, execute_trace
from .transport import Transport, decode_lossy, target_url

# URL shape filters. Extensionless paths pass the page filter because
# rewrite mechanisms hide the real extension.
PAGE_EXTENSION_RE = re.compile(
    r"^(.*\/)+[^\.]*(\.(aspx?|cfm|chm|cms|(s|p|x|m)?html?|xhtml|jsp|mspx|php(3|4|5)?)(\?.*)?)?$"
)
IMAGE_EXTENSION_RE = re.compile(r"^(.*\/)+[^\.]*(\.(jpe?g|png|gif|bmp|tif?f)(\?.*)?)?$")

# Extraction patterns. Email handles (AT)/(DOT) obfuscation.
EMAIL_PATTERN = (
    r"[\w(\.|DOT|\(dot\)|\(DOT\))]+(@|AT|\(at\)|\(AT\))"
    r"[\w(\.|DOT|\(dot\)|\(DOT\))]+(\.|DOT|\(dot\)|\(DOT\))\w{2,4}"
)
PHONE_PATTERN = r"\+\s*\d{1,3}[\s.()-]*(?:\d[\s.()-]*){10,12}(?:x\d*)?"
GOOGLE_ANALYTICS_PATTERN = r"\_gaq\.push\(\[\'\_setAccount\'\,\s*\'(?P<id>[\w\-\s]+)\'\]\)"
CLICKY_ANALYTICS_PATTERN = (
    r"https?\:\/\/api\.clicky\.com\/api\/stats\/\d*\?"
    r"(?P<id>site\_id\=[\d\-]*)\&(?P<key>sitekey\=\d*)"
)
SCRIPTS_PATTERN = r"<script[^>]*type=\"text\/javascript\"[^>]*(\/>|>.*<\/script>)"
FACEBOOK_PATTERN = (
    r"<div\s*class=\"fb-(send|post|follow|comments|like-box|share-button|like)\"[^>]*><\/div>"
)
TWITTER_PATTERN = (
    r"cdn\.api\.twitter\.com\/1\/urls\/count\.json\?url\=.*(\&|\&amp\;)"
    r"callback\=twttr\.receiveCount"
)

LINK_ATTR_RE = re.compile(r"""(?:href|src)\s*=\s*(?:"([^"]*)"|'([^']*)')""", re.IGNORECASE)


@dataclass
class RegexEntry:
    """Named extraction pattern; firstFoundOnly entries stop matching after
    their first hit anywhere in the crawl."""

    name: str
    pattern: str
    first_found_only: bool = False
    projection: Callable[[re.Match], str] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        try:
            self.regex = re.compile(self.pattern)
        except re.error as err:
            raise InvalidParameterError(f"pattern for {self.name!r} does not compile: {err}") from err

    def project(self, match: re.Match) -> str:
        if self.projection is not None:
            return self.projection(match)
        return match.group(0)


@dataclass
class RegexResultEntry:
    source_url: str
    text: str


def email_entry() -> RegexEntry:
    return RegexEntry("Email", EMAIL_PATTERN)


def phone_entry() -> RegexEntry:
    return RegexEntry("Phone", PHONE_PATTERN)


def google_analytics_entry() -> RegexEntry:
    return RegexEntry("GoogleAnalytics", GOOGLE_ANALYTICS_PATTERN,
                      first_found_only=True, projection=lambda m: m["id"])


def clicky_analytics_entry() -> RegexEntry:
    return RegexEntry("ClickyAnalytics", CLICKY_ANALYTICS_PATTERN,
                      first_found_only=True, projection=lambda m: f"{m['id']} {m['key']}")


def scripts_entry() -> RegexEntry:
    return RegexEntry("Scripts", SCRIPTS_PATTERN)


def facebook_entry() -> RegexEntry:
    return RegexEntry("Facebook", FACEBOOK_PATTERN)


def twitter_entry() -> RegexEntry:
    return RegexEntry("Twitter", TWITTER_PATTERN)


def search_text_entry(text: str, case_sensitive: bool = True) -> RegexEntry:
    pattern = text if case_sensitive else "(?i)" + text
    return RegexEntry(f"Search[{text}]", pattern)


def registry_defaults() -> list[RegexEntry]:
    return [
        email_entry(),
        phone_entry(),
        google_analytics_entry(),
        clicky_analytics_entry(),
        scripts_entry(),
    ]


class PatternRegistry:
    """Ordered, name-unique collection of extraction patterns."""

    def __init__(self, entries: Iterable[RegexEntry] = ()):
        self._entries: list[RegexEntry] = []
        self._names: set[str] = set()
        for entry in entries:
            self.add_regex(entry)

    @classmethod
    def with_defaults(cls) -> "PatternRegistry":
        return cls(registry_defaults())

    def add_regex(self, entry: RegexEntry) -> None:
        if entry.name in self._names:
            raise InvalidParameterError(f"duplicate pattern name {entry.name!r}")
        self._names.add(entry.name)
        self._entries.append(entry)

    def remove_all_regexs(self) -> None:
        self._entries.clear()
        self._names.clear()

    def entries(self) -> list[RegexEntry]:
        return list(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)


@dataclass
class CrawlerConfig:
    max_pages: int = 500
    max_depth: int = 8
    workers: int = 4
    politeness_delay_ms: int = 200
    url_relation: bool = True
    image_relation: bool = True
    allowed_suffixes: list[str] = field(default_factory=list)
    registry: PatternRegistry = field(default_factory=PatternRegistry.with_defaults)

    def __post_init__(self) -> None:
        for name in ("max_pages", "max_depth", "workers"):
            if getattr(self, name) < 1:
                raise InvalidParameterError(f"{name} must be >= 1")
        if self.politeness_delay_ms < 0:
            raise InvalidParameterError("politeness_delay_ms must be >= 0")

    @classmethod
    def for_target(cls, target: Target, **overrides) -> "CrawlerConfig":
        from .model import registrable_suffixes

        overrides.setdefault("allowed_suffixes", registrable_suffixes(target))
        return cls(**overrides)


@dataclass
class PageContentResult:
    KIND: ClassVar[TraceKind] = TraceKind.PAGE_CONTENT

    hits: dict[str, list[RegexResultEntry]] = field(default_factory=dict)
    external_relations: set[str] = field(default_factory=set)
    image_urls: set[str] = field(default_factory=set)
    pages_visited: int = 0


def host_matches_suffixes(host: str, suffixes: list[str]) -> bool:
    for suffix in suffixes:
        if suffix.startswith("."):
            if host.endswith(suffix):
                return True
        elif host == suffix:
            return True
    return False


def should_visit(url: str, cfg: CrawlerConfig, result: PageContentResult) -> bool:
    """Decide whether a discovered URL gets crawled; the rejects feed the
    external-relation and image collections."""
    lowered = url.lower()
    if PAGE_EXTENSION_RE.search(lowered):
        host = urlsplit(lowered).hostname or ""
        if host_matches_suffixes(host, cfg.allowed_suffixes):
            return True
        if cfg.url_relation:
            result.external_relations.add(lowered)
        return False
    if cfg.image_relation and IMAGE_EXTENSION_RE.search(lowered):
        result.image_urls.add(lowered)
    return False


def visit_page(
    page_url: str,
    body: str,
    registry: PatternRegistry,
    result: PageContentResult,
    matched: set[str] | None = None,
) -> None:
    """Run every registry entry over the page body in order; a
    firstFoundOnly entry records one hit per crawl and is skipped after."""
    if matched is None:
        matched = set()
    for entry in registry:
        if entry.first_found_only and entry.name in matched:
            continue
        for match in entry.regex.finditer(body):
            result.hits.setdefault(entry.name, []).append(
                RegexResultEntry(source_url=page_url, text=entry.project(match))
            )
            if entry.first_found_only:
                matched.add(entry.name)
                break


def robots_rules_for_all(text: str) -> tuple[list[str], float | None]:
    """Disallow prefixes and Crawl-delay applying to User-agent '*'."""
    disallows: list[str] = []
    crawl_delay: float | None = None
    agents: list[str] = []
    rules_seen = False
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        match = ROBOTS_LINE_RE.search(line)
        if not match:
            continue
        entry_type = match["typer"].strip().lower()
        value = match["value"].strip()
        if entry_type == "user-agent":
            if rules_seen:
                agents = []
                rules_seen = False
            agents.append(value)
        elif entry_type in ("disallow", "allow", "crawl-delay"):
            rules_seen = True
            if "*" not in agents:
                continue
            if entry_type == "disallow" and value:
                disallows.append(value)
            elif entry_type == "crawl-delay":
                try:
                    crawl_delay = float(value)
                except ValueError:
                    pass
    return disallows, crawl_delay


def path_disallowed(url: str, disallows: list[str]) -> bool:
    path = urlsplit(url).path or "/"
    return any(path.startswith(rule) for rule in disallows)


def extract_links(html: str) -> list[str]:
    return [m.group(1) or m.group(2) or "" for m in LINK_ATTR_RE.finditer(html)]


def _canonicalize(result: PageContentResult) -> None:
    ordered = {}
    for name in sorted(result.hits):
        ordered[name] = sorted(result.hits[name], key=lambda e: (e.source_url, e.text))
    result.hits = ordered


def crawl(
    transport: Transport,
    target: Target,
    cfg: CrawlerConfig | None = None,
    clock: Clock | None = None,
    on_page: Callable[[dict], None] | None = None,
) -> TraceResult:
    """BFS from the landing page, honoring robots.txt Disallow rules and
    Crawl-delay, with frontier deduplication and per-host request spacing.

    `on_page` gets called with {pagesVisited, maxPages} after every visited
    page, for progress reporting.
    """
    clock = clock or SystemClock()
    cfg = cfg or CrawlerConfig.for_target(target)
    if not cfg.allowed_suffixes:
        from dataclasses import replace

        from .model import registrable_suffixes

        cfg = replace(cfg, allowed_suffixes=registrable_suffixes(target))

    def body():
        warnings: list[str] = []
        result = PageContentResult()
        matched: set[str] = set()
        last_request: dict[str, float] = {}

        disallows: list[str] = []
        crawl_delay: float | None = None
        try:
            robots = _polite_fetch(transport, target_url(target, "http", "/robots.txt"),
                                   clock, last_request, 0.0)
        except TraceError:
            try:
                robots = _polite_fetch(transport, target_url(target, "https", "/robots.txt"),
                                       clock, last_request, 0.0)
            except TraceError:
                robots = None
        if robots is not None and robots.status_code == 200:
            disallows, crawl_delay = robots_rules_for_all(decode_lossy(robots.body))
        spacing = max(cfg.politeness_delay_ms / 1000.0, crawl_delay or 0.0)

        seed_urls = [target_url(target, "http", "/"), target_url(target, "https", "/")]
        if path_disallowed(seed_urls[0], disallows):
            warnings.append("robots.txt disallows the landing page; nothing crawled")
            return result, warnings
        exchange = None
        seed_error: TraceError | None = None
        for candidate in seed_urls:
            try:
                exchange = _polite_fetch(transport, candidate, clock, last_request, spacing)
                break
            except RemoteUnreachableError as err:
                seed_error = err
        if exchange is None:
            raise RemoteUnreachableError(f"seed page unreachable: {seed_error}")

        frontier: deque[tuple[str, int]] = deque()
        seen: set[str] = {exchange.url.lower()}

        def process(page_exchange, depth: int) -> None:
            if not 200 <= page_exchange.status_code < 300:
                warnings.append(f"{page_exchange.url} answered {page_exchange.status_code}")
                return
            page_text = decode_lossy(page_exchange.body)
            result.pages_visited += 1
            if on_page is not None:
                on_page({"pagesVisited": result.pages_visited, "maxPages": cfg.max_pages})
            visit_page(page_exchange.url, page_text, cfg.registry, result, matched)
            if depth >= cfg.max_depth:
                return
            for link in extract_links(page_text):
                absolute = urljoin(page_exchange.url, link).split("#", 1)[0]
                if not absolute.startswith(("http://", "https://")):
                    continue
                if not should_visit(absolute, cfg, result):
                    continue
                key = absolute.lower()
                if key in seen or path_disallowed(absolute, disallows):
                    continue
                seen.add(key)
                frontier.append((absolute, depth + 1))

        process(exchange, 0)
        while frontier and result.pages_visited < cfg.max_pages:
            url, depth = frontier.popleft()
            try:
                page = _polite_fetch(transport, url, clock, last_request, spacing)
            except TraceError as err:
                warnings.append(f"fetch failed for {url}: {err}")
                continue
            process(page, depth)

        _canonicalize(result)
        return result, warnings

    return execute_trace(TraceKind.PAGE_CONTENT, target, clock, body)


def _polite_fetch(transport, url, clock, last_request, spacing):
    host = urlsplit(url).hostname or ""
    previous = last_request.get(host)
    if previous is not None and spacing > 0:
        wait = spacing - (clock.monotonic() - previous)
        if wait > 0:
            clock.sleep(wait)
    try:
        return transport.http_fetch(url, "GET")
    finally:
        last_request[host] = clock.monotonic()
