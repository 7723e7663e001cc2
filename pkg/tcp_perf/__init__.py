"""Passive TCP performance analysis"""

from .events import (EventKind, TcpEvent, RETRANSMISSION_KINDS, LOSS_EVIDENCE_KINDS,
                     FORWARD, REVERSE, opposite)
from .seqspace import RangeSet, seq_diff, seq_lt, unwrap
from .state import TcpConnState, TcpDirState, PARTITION_BUCKETS
from .tracker import (SegmentOrder, track_tcp, classify_retransmission, detect_gap_and_ooo,
                      detect_window_reduction)
from .analysis import (RttEstimate, RttSummary, CongestionReport, EstablishmentOutcome,
                       estimate_rtt, derive_congestion_events, detect_establishment_problem,
                       summarize_samples, NO_ANSWER, REFUSED)

__all__ = [
    'EventKind', 'TcpEvent', 'RETRANSMISSION_KINDS', 'LOSS_EVIDENCE_KINDS', 'FORWARD', 'REVERSE',
    'opposite', 'RangeSet', 'seq_diff', 'seq_lt', 'unwrap', 'TcpConnState', 'TcpDirState',
    'PARTITION_BUCKETS', 'SegmentOrder', 'track_tcp', 'classify_retransmission',
    'detect_gap_and_ooo', 'detect_window_reduction', 'RttEstimate', 'RttSummary',
    'CongestionReport', 'EstablishmentOutcome', 'estimate_rtt', 'derive_congestion_events',
    'detect_establishment_problem', 'summarize_samples', 'NO_ANSWER', 'REFUSED',
]
