"""Trace controller: the use-case facade (connectivity check, connection
configuration, trace dispatch, batch run with export) plus the job registry
the HTTP service builds on."""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable

from .clock import Clock, SystemClock
from .config import AppConfig, validate_config
from .content import CrawlerConfig, PatternRegistry, crawl, search_text_entry
from .dnstrace import load_dictionary, run_dns
from .errors import InvalidParameterError, NoConnectivityError
from .exportxml import ExportRequest, export_results
from .malicious import (
    DNSBL_DAILY_BUDGET,
    SAFEBROWSING_DAILY_BUDGET,
    DEFAULT_DNSBL_ZONE,
    DEFAULT_SAFEBROWSING_BASE,
    RequestBudget,
    run_malicious_activity,
    run_malicious_relations,
)
from .metadata import run_metadata
from .model import Target, TraceKind, TraceResult, TraceStatus
from .serverinfo import DEFAULT_GEO_BASE, RateLimiter, run_server_info
from .transport import ConnectivityStatus, RealTransport, Transport, check_connection
from .tlscert import run_ssl_certificate
from .whois import run_whois

DEFAULT_CONNECT_ATTEMPTS = 3
DEFAULT_TRACE_TIMEOUT = 120.0

# traces whose duration is governed by their own page budget, not the
# per-trace timeout
_TIMEOUT_EXEMPT = {TraceKind.PAGE_CONTENT, TraceKind.MALICIOUS_RELATIONS}


@dataclass
class TraceRequest:
    kind: TraceKind
    params: dict[str, Any] = field(default_factory=dict)


class TraceController:
    """Single entry point: configure once, then query traces."""

    def __init__(
        self,
        config: AppConfig,
        transport: Transport | None = None,
        clock: Clock | None = None,
        connect_attempts: int = DEFAULT_CONNECT_ATTEMPTS,
        trace_timeout: float = DEFAULT_TRACE_TIMEOUT,
        geo_base: str = DEFAULT_GEO_BASE,
        sb_base: str = DEFAULT_SAFEBROWSING_BASE,
        dnsbl_zone: str = DEFAULT_DNSBL_ZONE,
    ):
        self.transport = transport if transport is not None else RealTransport()
        self.clock = clock or SystemClock()
        self.connect_attempts = connect_attempts
        self.trace_timeout = trace_timeout
        self.geo_base = geo_base
        self.sb_base = sb_base
        self.dnsbl_zone = dnsbl_zone
        self.geo_limiter = RateLimiter(clock=self.clock)
        self.sb_budget = RequestBudget(SAFEBROWSING_DAILY_BUDGET, "safe-browsing")
        self.dnsbl_budget = RequestBudget(DNSBL_DAILY_BUDGET, "DNSBL")
        self.config = config
        self.configure_connection(config)

    # -- UC2 ------------------------------------------------------------

    def configure_connection(self, config: AppConfig) -> None:
        validate_config(config)
        self.transport.configure_proxy(config.proxy)
        self.config = config

    # -- UC1 ------------------------------------------------------------

    def check_connection(self) -> ConnectivityStatus:
        return check_connection(
            self.transport, self.config.check_connection_url,
            self.connect_attempts, clock=self.clock,
        )

    # -- UC3 ------------------------------------------------------------

    def query_trace(
        self,
        target: Target,
        kind: TraceKind,
        params: dict[str, Any] | None = None,
        on_progress: Callable[[dict], None] | None = None,
    ) -> TraceResult:
        """Validate, verify connectivity, dispatch. Trace-level failures
        come back inside the envelope; bad parameters and a dead connection
        raise."""
        params = self._validate_params(kind, params or {})
        if self.check_connection() is ConnectivityStatus.DISCONNECTED:
            raise NoConnectivityError(
                f"no connectivity after {self.connect_attempts} attempts against "
                f"{self.config.check_connection_url}"
            )
        return self._run_with_timeout(target, kind, params, on_progress)

    # -- CLI batch behavior ----------------------------------------------

    def run_all_traces(
        self,
        target: Target,
        out_path: str | Path = "result.xml",
        kinds: list[TraceKind] | None = None,
    ) -> list[TraceResult]:
        """Run every trace kind sequentially in selection-table order, then
        export the results. Individual trace failures do not stop the run."""
        if self.check_connection() is ConnectivityStatus.DISCONNECTED:
            raise NoConnectivityError(
                f"no connectivity against {self.config.check_connection_url}"
            )
        selected = kinds if kinds is not None else list(TraceKind)
        results = [
            self._run_with_timeout(target, kind, self._validate_params(kind, {}), None)
            for kind in selected
        ]
        if out_path is not None:
            export_results(ExportRequest(results=results, path=out_path),
                           generated_at=self.clock.now())
        return results

    # -- dispatch ---------------------------------------------------------

    def _run_with_timeout(self, target, kind, params, on_progress) -> TraceResult:
        if kind in _TIMEOUT_EXEMPT or self.trace_timeout is None:
            return self._dispatch(target, kind, params, on_progress)
        started = self.clock.now()
        with ThreadPoolExecutor(max_workers=1) as pool:
            future = pool.submit(self._dispatch, target, kind, params, on_progress)
            try:
                return future.result(timeout=self.trace_timeout)
            except TimeoutError:
                future.cancel()
                return TraceResult(
                    kind, target, started, self.clock.now(), TraceStatus.FAILURE,
                    payload=None,
                    warnings=[f"trace timed out after {self.trace_timeout:.0f}s"],
                )

    def _dispatch(self, target, kind, params, on_progress) -> TraceResult:
        if kind is TraceKind.SERVER_INFO:
            return run_server_info(self.transport, target, geo_base=self.geo_base,
                                   limiter=self.geo_limiter, clock=self.clock)
        if kind is TraceKind.SSL_CERTIFICATE:
            return run_ssl_certificate(self.transport, target, clock=self.clock)
        if kind is TraceKind.DNS:
            return run_dns(self.transport, target,
                           dictionary=params.get("dictionary"),
                           max_attempts=params.get("maxAttempts", 3),
                           max_depth=params.get("maxDepth", 10),
                           clock=self.clock)
        if kind is TraceKind.WHOIS:
            return run_whois(self.transport, target, clock=self.clock)
        if kind is TraceKind.METADATA:
            return run_metadata(self.transport, target, clock=self.clock)
        if kind is TraceKind.PAGE_CONTENT:
            return crawl(self.transport, target, self._crawler_config(target, params),
                         clock=self.clock, on_page=on_progress)
        if kind is TraceKind.MALICIOUS_ACTIVITY:
            return run_malicious_activity(
                self.transport, target,
                params.get("apiKey", self.config.google_safe_browsing_key),
                sb_base=self.sb_base, dnsbl_zone=self.dnsbl_zone,
                sb_budget=self.sb_budget, dnsbl_budget=self.dnsbl_budget,
                clock=self.clock)
        if kind is TraceKind.MALICIOUS_RELATIONS:
            return run_malicious_relations(
                self.transport, target,
                crawler_cfg=self._crawler_config(target, params),
                api_key=params.get("apiKey", self.config.google_safe_browsing_key),
                sb_base=self.sb_base, dnsbl_zone=self.dnsbl_zone,
                sb_budget=self.sb_budget, dnsbl_budget=self.dnsbl_budget,
                clock=self.clock)
        raise InvalidParameterError(f"no dispatcher for {kind}")

    def _crawler_config(self, target: Target, params: dict) -> CrawlerConfig:
        registry = PatternRegistry.with_defaults()
        for search in params.get("searchTexts", []):
            registry.add_regex(search_text_entry(search["text"],
                                                 search.get("caseSensitive", True)))
        return CrawlerConfig.for_target(
            target,
            max_pages=params.get("maxPages", 500),
            max_depth=params.get("maxDepth", 8),
            workers=params.get("workers", 4),
            politeness_delay_ms=params.get("politenessDelayMs", 200),
            url_relation=params.get("urlRelation", True),
            image_relation=params.get("imageRelation", True),
            registry=registry,
        )

    def _validate_params(self, kind: TraceKind, params: dict[str, Any]) -> dict[str, Any]:
        if not isinstance(params, dict):
            raise InvalidParameterError("trace parameters must be an object")
        checked = dict(params)
        for name in ("maxAttempts", "maxDepth", "maxPages", "workers"):
            if name in checked:
                value = checked[name]
                if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                    raise InvalidParameterError(f"{name} must be a positive integer")
        if "politenessDelayMs" in checked:
            value = checked["politenessDelayMs"]
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise InvalidParameterError("politenessDelayMs must be >= 0")
        if "dictionaryFile" in checked and checked["dictionaryFile"]:
            checked["dictionary"] = load_dictionary(checked["dictionaryFile"])
        if "dictionary" in checked and checked["dictionary"] is not None:
            labels = checked["dictionary"]
            if not isinstance(labels, list) or not all(
                isinstance(l, str) and l.strip() for l in labels
            ):
                raise InvalidParameterError("dictionary must be a list of non-empty labels")
        if "searchTexts" in checked:
            searches = checked["searchTexts"]
            if not isinstance(searches, list) or not all(
                isinstance(s, dict) and s.get("text") for s in searches
            ):
                raise InvalidParameterError("searchTexts must be a list of {text, caseSensitive}")
        return checked


# ---------------------------------------------------------------------------
# query jobs (service surface)


class JobState(Enum):
    PENDING = "Pending"
    RUNNING = "Running"
    DONE = "Done"
    FAILED = "Failed"


_STATE_ORDER = [JobState.PENDING, JobState.RUNNING, JobState.DONE, JobState.FAILED]


@dataclass
class QueryJob:
    id: str
    target: Target
    kinds: list[TraceKind]
    state: JobState = JobState.PENDING
    progress: dict[str, dict] = field(default_factory=dict)
    results: list[TraceResult] = field(default_factory=list)
    error: str | None = None

    def advance(self, state: JobState) -> None:
        # forward-only state machine
        if _STATE_ORDER.index(state) < _STATE_ORDER.index(self.state):
            raise ValueError(f"job state cannot regress from {self.state} to {state}")
        self.state = state


class JobRegistry:
    """Thread-safe job store running each job's traces on a bounded pool."""

    def __init__(self, controller: TraceController, fanout: int = 8):
        self.controller = controller
        self.fanout = fanout
        self._jobs: dict[str, QueryJob] = {}
        self._lock = threading.Lock()

    def get(self, job_id: str) -> QueryJob | None:
        with self._lock:
            return self._jobs.get(job_id)

    def submit(self, target: Target, requests: list[TraceRequest],
               synchronous: bool = False) -> QueryJob:
        """Validates everything up front (raising on bad input or a dead
        connection), then runs the job's traces concurrently."""
        if not requests:
            raise InvalidParameterError("select at least one trace")
        validated = [
            (request.kind, self.controller._validate_params(request.kind, request.params))
            for request in requests
        ]
        if self.controller.check_connection() is ConnectivityStatus.DISCONNECTED:
            raise NoConnectivityError("no connectivity; job rejected")
        job = QueryJob(
            id=uuid.uuid4().hex,
            target=target,
            kinds=[kind for kind, _ in validated],
            progress={kind.value: {"state": "Pending"} for kind, _ in validated},
        )
        with self._lock:
            self._jobs[job.id] = job
        if synchronous:
            self._run_job(job, validated)
        else:
            runner = threading.Thread(target=self._run_job, args=(job, validated), daemon=True)
            runner.start()
        return job

    def _run_job(self, job: QueryJob, validated: list) -> None:
        job.advance(JobState.RUNNING)

        def run_one(kind: TraceKind, params: dict) -> TraceResult:
            job.progress[kind.value]["state"] = "Running"

            def on_page(update: dict) -> None:
                job.progress[kind.value].update(update)

            result = self.controller._run_with_timeout(job.target, kind, params, on_page)
            job.progress[kind.value]["state"] = result.status.value
            return result

        try:
            with ThreadPoolExecutor(max_workers=min(self.fanout, len(validated))) as pool:
                futures = [pool.submit(run_one, kind, params) for kind, params in validated]
                results = [future.result() for future in futures]
            job.results = results
            job.advance(JobState.DONE)
        except Exception as err:  # defensive: a job never dies silently
            job.error = str(err)
            job.advance(JobState.FAILED)
