"""Whole-flow TCP analysis run once a flow has finished"""

from bisect import bisect_left
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .events import FLAG_KINDS, LOSS_EVIDENCE_KINDS, EventKind, TcpEvent, opposite

DEFAULT_CORRELATION_WINDOW = 1.0
DEFAULT_SYN_TIMEOUT = 30.0

NO_ANSWER = "no_answer"
REFUSED = "refused"


@dataclass(frozen=True)
class RttSummary:
    min: float
    median: float
    mean: float


@dataclass(frozen=True)
class RttEstimate:
    """Handshake RTT components and ACK-matched samples, in seconds"""
    handshake_syn_side: Optional[float]
    handshake_ack_side: Optional[float]
    handshake_total: Optional[float]
    ack_samples: Tuple[float, ...]
    summary: Optional[RttSummary]


@dataclass(frozen=True)
class CongestionReport:
    """
    Congestion events of one flow

    `flag_events` holds the ECE/CWR evidence (counted once per flow);
    `correlated` pairs each qualifying WindowReduction with the nearest
    retransmission or inferred loss on the data it governs.
    """
    flag_events: Tuple[TcpEvent, ...]
    correlated: Tuple[Tuple[TcpEvent, TcpEvent], ...]

    @property
    def flag_count(self) -> int:
        return 1 if self.flag_events else 0

    @property
    def correlated_count(self) -> int:
        return len(self.correlated)

    @property
    def count(self) -> int:
        return self.flag_count + self.correlated_count


@dataclass(frozen=True)
class EstablishmentOutcome:
    failure: Optional[str]
    syn_retries: int


def summarize_samples(samples) -> Optional[RttSummary]:
    if len(samples) == 0:
        return None
    values = np.asarray(samples, dtype=float)
    return RttSummary(min=float(values.min()), median=float(np.median(values)), mean=float(values.mean()))


def estimate_rtt(flow) -> RttEstimate:
    """
    RTT of a finished TCP flow

    Handshake components need the SYN, SYN/ACK and handshake ACK; the SYN
    side is measured from the last SYN before the SYN/ACK. ACK samples
    exclude every retransmitted range.
    """
    conn = flow.tcp
    syn, synack, ack = conn.last_syn_us, conn.synack_us, conn.handshake_ack_us
    syn_side = (synack - syn) / 1e6 if syn is not None and synack is not None else None
    ack_side = (ack - synack) / 1e6 if synack is not None and ack is not None else None
    total = (ack - syn) / 1e6 if syn is not None and synack is not None and ack is not None else None
    samples = tuple(s / 1e6 for s in conn.ack_samples_us)
    return RttEstimate(syn_side, ack_side, total, samples, summarize_samples(samples))


def derive_congestion_events(flow, correlation_window: float = DEFAULT_CORRELATION_WINDOW) -> CongestionReport:
    """
    Congestion evidence for a finished flow

    Rule one: any ECE/CWR outside the handshake. Rule two: a WindowReduction
    within `correlation_window` seconds of a retransmission or inferred loss
    in the data direction the window governs.
    """
    events: List[TcpEvent] = list(flow.events)
    flags = tuple(e for e in events if e.kind in FLAG_KINDS and not e.handshake)

    evidence: Dict[str, List[TcpEvent]] = {}
    for e in events:
        if e.kind in LOSS_EVIDENCE_KINDS:
            evidence.setdefault(e.direction, []).append(e)
    for bucket in evidence.values():
        bucket.sort(key=lambda e: e.ts_us)

    window_us = int(round(correlation_window * 1e6))
    correlated = []
    for reduction in (e for e in events if e.kind == EventKind.WINDOW_REDUCTION):
        candidates = evidence.get(opposite(reduction.direction), [])
        times = [e.ts_us for e in candidates]
        i = bisect_left(times, reduction.ts_us - window_us)
        nearest = None
        for e in candidates[i:]:
            if e.ts_us > reduction.ts_us + window_us:
                break
            if nearest is None or abs(e.ts_us - reduction.ts_us) < abs(nearest.ts_us - reduction.ts_us):
                nearest = e
        if nearest is not None:
            correlated.append((reduction, nearest))

    return CongestionReport(flags, tuple(correlated))


def detect_establishment_problem(flow, now_us: int, syn_timeout: float = DEFAULT_SYN_TIMEOUT) -> EstablishmentOutcome:
    """
    Connection establishment outcome

    `refused` when the responder reset before any SYN/ACK, `no_answer` when
    no SYN/ACK arrived within `syn_timeout` seconds of the first SYN. A
    SYN/ACK later than that still counts as `no_answer`.
    """
    conn = flow.tcp
    if conn is None or conn.first_syn_us is None:
        return EstablishmentOutcome(None, 0 if conn is None else conn.syn_retries)
    deadline = conn.first_syn_us + syn_timeout * 1e6
    failure = None
    if conn.synack_us is None and conn.refused:
        failure = REFUSED
    elif conn.synack_us is not None:
        if conn.synack_us >= deadline:
            failure = NO_ANSWER
    elif now_us >= deadline:
        failure = NO_ANSWER
    return EstablishmentOutcome(failure, conn.syn_retries)
