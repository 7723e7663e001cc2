"""Trace analysis pipeline: ingest, classify, build flows, summarize"""

import hashlib
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import reduce
from itertools import repeat
from operator import add
from typing import List, Optional, Sequence, Tuple

from anon import AnonKey, new_anonymizer
from capture import PcapReader
from classify import (GeoDb, PrefixConfig, Scope, ServiceDb, classify_scope, classify_transport,
                      is_foreign, lookup_continent, remote_address)
from flows import FlowSummary, FlowTable, event_rows, summarize_flow

from .aggregates import TraceAggregates

logger = logging.getLogger(__name__)

EXPIRY_INTERVAL_US = 1_000_000


@dataclass(frozen=True)
class AnalysisSettings:
    """Everything a worker needs to analyse one trace; picklable"""
    prefixes: PrefixConfig
    anon_key: AnonKey = field(repr=False)
    geo: Optional[GeoDb] = None
    services: ServiceDb = field(default_factory=ServiceDb)
    idle_timeout: float = 60.0
    fin_linger: float = 2.0
    reorder_buffer: int = 128
    reorder_window_ms: float = 3.0
    correlation_window: float = 1.0
    syn_timeout: float = 30.0


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()


def analyze_trace(path: str, settings: AnalysisSettings, trace_no: int = 0) -> TraceAggregates:
    """
    Analyse one pcap trace

    Classification runs on raw addresses; addresses are anonymized only when
    finished flows are summarized.

    Raises:
        IngestError: the trace cannot be read
    """
    anonymizer = new_anonymizer(settings.anon_key)
    prefixes, geo = settings.prefixes, settings.geo
    agg = TraceAggregates()

    def labeler(pkt):
        scope = classify_scope(pkt, prefixes)
        continent = lookup_continent(remote_address(pkt, prefixes), geo) if scope == Scope.WAN else ''
        return scope.value, continent

    table = FlowTable(
        idle_timeout=settings.idle_timeout,
        fin_linger=settings.fin_linger,
        reorder_window_ms=settings.reorder_window_ms,
        syn_timeout=settings.syn_timeout,
        labeler=labeler,
        trace_no=trace_no,
    )
    finished: List[Tuple[int, FlowSummary, list]] = []
    now_us = None
    next_expiry = None

    def collect():
        for rec in table.drain_finished():
            summary = summarize_flow(rec, anonymizer, settings.services, settings.correlation_window)
            finished.append((rec.seq, summary, event_rows(rec)))

    with PcapReader(path, reorder_buffer=settings.reorder_buffer) as reader:
        for pkt in reader:
            scope = classify_scope(pkt, prefixes)
            continent = None
            if scope == Scope.WAN:
                continent = lookup_continent(remote_address(pkt, prefixes), geo)
            agg.count_packet(pkt, scope, is_foreign(pkt, prefixes), continent, classify_transport(pkt))

            if pkt.flow_eligible:
                table.update_flow(pkt)
            now_us = pkt.ts_us if now_us is None else max(now_us, pkt.ts_us)
            if next_expiry is None or now_us >= next_expiry:
                table.expire_until(now_us)
                collect()
                next_expiry = now_us + EXPIRY_INTERVAL_US

        table.flush(now_us)
        collect()
        agg.ingest = reader.stats

    finished.sort(key=lambda item: item[0])
    for _, summary, events in finished:
        agg.flows.append(summary)
        agg.events.extend(events)
    agg.flow_counters.update(table.counters())
    agg.traces.append((os.path.basename(path), file_sha256(path)))

    logger.info("Analysed %s: %d IPv4 packets, %d flows", path, agg.ingest.packets_ipv4, len(agg.flows))
    return agg


def analyze_traces(paths: Sequence[str], settings: AnalysisSettings, jobs: int = 1) -> TraceAggregates:
    """Analyse traces (in a process pool when jobs > 1) and merge them in input order"""
    paths = list(paths)
    if jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts: List[TraceAggregates] = list(pool.map(analyze_trace, paths, repeat(settings), range(len(paths))))
    else:
        parts = [analyze_trace(path, settings, i) for i, path in enumerate(paths)]
    return reduce(add, parts, TraceAggregates())
