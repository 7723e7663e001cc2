"""Mergeable per-trace aggregates and the tables, series and summary derived from them"""

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from capture.records import FLAG_NAMES, IngestStats, PacketRecord
from classify import ALL_CONTINENTS, FIXED_CATEGORIES, OTHER
from classify.prefixes import Scope
from flows import FlowSummary
from tcp_perf import summarize_samples

from .distributions import LINEAR, LOG, DistributionSeries, build_cdf, build_pdf, volume_share
from .tables import PercentTable, fold_other, percent_table

SPREADING_LABELS = (
    ('In order', 'in_order'),
    ('Plain retransmit', 'retx_plain'),
    ('Fast retransmit', 'retx_fast'),
    ('Spurious retransmit', 'retx_spurious'),
    ('Out of order', 'out_of_order'),
)
TRANSPORT_ORDER = ('ICMP', 'IGMP', 'TCP', 'UDP')

SHORT_FLOW_PACKETS = 100
LONG_FLOW_SECONDS = 300
VERY_LONG_FLOW_SECONDS = 600
SLOW_FLOW_BPS = 10


def _merge(a: Counter, b: Counter) -> Counter:
    out = Counter(a)
    out.update(b)
    return out


@dataclass
class TraceAggregates:
    """
    Everything the report needs from one or more traces

    Packet-level counters exist only when traces were read (`ingest` is set);
    aggregates rebuilt from a flow export carry flows alone. Addition is
    associative; merging in trace order keeps flow and event order stable.
    """
    traces: List[Tuple[str, str]] = field(default_factory=list)
    ingest: Optional[IngestStats] = None
    scope_packets: Counter = field(default_factory=Counter)
    scope_bytes: Counter = field(default_factory=Counter)
    foreign_both_ends: int = 0
    continent_packets: Counter = field(default_factory=Counter)
    continent_bytes: Counter = field(default_factory=Counter)
    transport_packets: Counter = field(default_factory=Counter)
    transport_bytes: Counter = field(default_factory=Counter)
    flow_counters: Counter = field(default_factory=Counter)
    flows: List[FlowSummary] = field(default_factory=list)
    events: List[Tuple[str, str, str, str, str]] = field(default_factory=list)

    @property
    def packet_level(self) -> bool:
        return self.ingest is not None

    @classmethod
    def from_flows(cls, flows: Sequence[FlowSummary]) -> 'TraceAggregates':
        return cls(flows=list(flows))

    def count_packet(self, pkt: PacketRecord, scope: Scope, foreign: bool, continent: Optional[str],
                     transport: str):
        size = pkt.ip_total_length
        self.scope_packets[scope.value] += 1
        self.scope_bytes[scope.value] += size
        if foreign:
            self.foreign_both_ends += 1
        if scope == Scope.WAN and continent is not None:
            self.continent_packets[continent] += 1
            self.continent_bytes[continent] += size
        self.transport_packets[transport] += 1
        self.transport_bytes[transport] += size

    def __add__(self, other: 'TraceAggregates') -> 'TraceAggregates':
        if self.ingest is None:
            ingest = other.ingest
        elif other.ingest is None:
            ingest = self.ingest
        else:
            ingest = self.ingest + other.ingest
        return TraceAggregates(
            traces=self.traces + other.traces,
            ingest=ingest,
            scope_packets=_merge(self.scope_packets, other.scope_packets),
            scope_bytes=_merge(self.scope_bytes, other.scope_bytes),
            foreign_both_ends=self.foreign_both_ends + other.foreign_both_ends,
            continent_packets=_merge(self.continent_packets, other.continent_packets),
            continent_bytes=_merge(self.continent_bytes, other.continent_bytes),
            transport_packets=_merge(self.transport_packets, other.transport_packets),
            transport_bytes=_merge(self.transport_bytes, other.transport_bytes),
            flow_counters=_merge(self.flow_counters, other.flow_counters),
            flows=self.flows + other.flows,
            events=self.events + other.events,
        )


# -- percent tables -----------------------------------------------------------

def scope_table(agg: TraceAggregates) -> PercentTable:
    counts = {s.value: (agg.scope_packets[s.value], agg.scope_bytes[s.value]) for s in Scope}
    return percent_table(counts, "Traffic scope", allow_empty=True)


def geography_table(agg: TraceAggregates) -> PercentTable:
    counts = {c: (agg.continent_packets[c], agg.continent_bytes[c]) for c in ALL_CONTINENTS}
    return percent_table(counts, "WAN destinations by continent", allow_empty=True)


def _transport_sort_key(label: str):
    if label in TRANSPORT_ORDER:
        return (0, TRANSPORT_ORDER.index(label))
    return (1, int(label[len('Other('):-1]))


def transport_table(agg: TraceAggregates) -> PercentTable:
    labels = sorted(set(TRANSPORT_ORDER) | set(agg.transport_packets), key=_transport_sort_key)
    counts = {t: (agg.transport_packets[t], agg.transport_bytes[t]) for t in labels}
    return percent_table(counts, "Transport protocols", allow_empty=True)


def service_table(flows: Sequence[FlowSummary], other_threshold: float = 1.0) -> PercentTable:
    """TCP flows per service, with bytes and packets; named services under the threshold fold into Other"""
    counts: Dict[str, List[int]] = {}
    for f in flows:
        if not f.is_tcp:
            continue
        entry = counts.setdefault(f.service, [0, 0, 0])
        entry[0] += 1
        entry[1] += f.bytes
        entry[2] += f.packets
    folded = fold_other(counts, other_threshold, FIXED_CATEGORIES, other_label=OTHER)
    return percent_table(folded, "TCP services", count_label="flows", secondary_label="packets",
                         allow_empty=True)


def spreading_table(flows: Sequence[FlowSummary]) -> PercentTable:
    """TCP data packets split into in-order, retransmission kinds and out-of-order"""
    counts = {
        label: (sum(getattr(f, attr) for f in flows), sum(getattr(f, attr + '_bytes') for f in flows))
        for label, attr in SPREADING_LABELS
    }
    return percent_table(counts, "TCP data packet spreading", allow_empty=True)


def build_tables(agg: TraceAggregates, other_threshold: float = 1.0) -> Dict[str, PercentTable]:
    """Report tables by file stem; packet-level tables only when traces were read"""
    tables: Dict[str, PercentTable] = {}
    if agg.packet_level:
        tables['scope'] = scope_table(agg)
        tables['geography'] = geography_table(agg)
        tables['transport'] = transport_table(agg)
    tables['services'] = service_table(agg.flows, other_threshold)
    tables['packets_spreading'] = spreading_table(agg.flows)
    return tables


# -- distribution series ------------------------------------------------------

def build_series(flows: Sequence[FlowSummary], bin_width: float = 3.0,
                 rate_scale: str = LOG) -> Dict[str, Optional[DistributionSeries]]:
    """Flow length CDF, duration PDF and mean-rate CDF; None where no flow qualifies"""
    lengths = [f.packets for f in flows]
    durations = [f.duration_s for f in flows]
    rates = [f.mean_rate_bps for f in flows if f.mean_rate_bps is not None]
    return {
        'flow_length_cdf': build_cdf(lengths, LINEAR, 'packets') if lengths else None,
        'flow_duration_pdf': build_pdf(durations, bin_width, 'duration_s') if durations else None,
        'flow_rate_cdf': build_cdf(rates, rate_scale, 'rate_bps') if rates else None,
    }


# -- headline summary ---------------------------------------------------------

def _rounded(value: Optional[float]) -> Optional[float]:
    return None if value is None else round(value, 6)


def _ratio(part: float, whole: float) -> Optional[float]:
    return _rounded(part / whole) if whole else None


def window_reduction_ratio(marked_packets: int, flows: int) -> Optional[float]:
    """Packets carrying a window reduction per flow"""
    return marked_packets / flows if flows else None


def _digest(values: List[float]) -> Optional[Dict[str, float]]:
    summary = summarize_samples(values)
    if summary is None:
        return None
    return {'count': len(values), 'min': round(summary.min, 3),
            'median': round(summary.median, 3), 'mean': round(summary.mean, 3)}


def headline_summary(agg: TraceAggregates, bin_width: float = 3.0) -> Dict:
    """Key figures of the run as a JSON-ready dict"""
    flows = agg.flows
    tcp = [f for f in flows if f.is_tcp]
    n = len(flows)
    packets_in_flows = sum(f.packets for f in flows)
    total_packets = agg.ingest.packets_ipv4 if agg.packet_level else packets_in_flows
    wr_packets = sum(f.window_reductions for f in flows)
    data_packets = sum(f.data_packets for f in flows)
    failures = Counter(f.establishment_failure for f in tcp if f.establishment_failure)
    has_volume = any(f.bytes for f in flows)

    def share(predicate) -> Optional[float]:
        return _rounded(volume_share(flows, predicate)) if has_volume else None

    summary = {
        'traffic': {
            'ipv4_packets': total_packets,
            'ipv4_bytes': agg.ingest.bytes_ipv4 if agg.packet_level else sum(f.bytes for f in flows),
            'foreign_both_ends': agg.foreign_both_ends if agg.packet_level else None,
        },
        'flows': {
            'total': n,
            'tcp': len(tcp),
            'bidirectional': sum(1 for f in flows if f.bidirectional),
            'undefined_rate': sum(1 for f in flows if f.mean_rate_bps is None),
            'packets_assigned': packets_in_flows,
            'short_fraction': _ratio(sum(1 for f in flows if f.packets < SHORT_FLOW_PACKETS), n),
            'short_volume_share': share(lambda f: f.packets < SHORT_FLOW_PACKETS),
            'first_bin_volume_share': share(lambda f: f.duration_s < bin_width),
            'long_volume_share': share(lambda f: f.duration_s > LONG_FLOW_SECONDS),
            'very_long_fraction': _ratio(sum(1 for f in flows if f.duration_s > VERY_LONG_FLOW_SECONDS), n),
            'slow_fraction': _ratio(sum(1 for f in flows if f.mean_rate_bps is not None
                                        and f.mean_rate_bps <= SLOW_FLOW_BPS), n),
            'slow_volume_share': share(lambda f: f.mean_rate_bps is not None
                                        and f.mean_rate_bps <= SLOW_FLOW_BPS),
        },
        'windows': {
            'reduction_packets': wr_packets,
            'reduction_packets_per_flow': _rounded(window_reduction_ratio(wr_packets, n)),
            'flows_with_reduction_fraction': _ratio(sum(1 for f in flows if f.window_reductions), n),
            'reduction_packet_share': _ratio(wr_packets, total_packets),
            'zero_window_events': sum(f.zero_windows for f in flows),
        },
        'congestion': {
            'events': sum(f.congestion_events for f in flows),
            'by_flags': sum(f.congestion_flag for f in flows),
            'by_window_correlation': sum(f.congestion_correlated for f in flows),
        },
        'losses': {
            'data_packets': data_packets,
            'inferred_lost_segments': sum(f.lost_gaps for f in flows),
            'inferred_lost_bytes': sum(f.lost_bytes for f in flows),
            'inferred_lost_per_data_packet': _ratio(sum(f.lost_gaps for f in flows), data_packets),
            'late_fillers': sum(f.late_fillers for f in flows),
        },
        'flags': {name: sum(getattr(f, 'flag_' + name.lower()) for f in flows) for name in FLAG_NAMES},
        'rtt_ms': {
            'handshake': _digest([f.rtt_handshake_ms for f in tcp if f.rtt_handshake_ms is not None]),
            'ack_median_per_flow': _digest([f.rtt_median_ms for f in tcp if f.rtt_median_ms is not None]),
        },
        'establishment': {
            'failures': dict(sorted(failures.items())),
            'syn_retries': sum(f.syn_retries for f in tcp),
        },
    }
    if agg.packet_level:
        summary['ingest'] = agg.ingest.as_dict()
        summary['flow_table'] = dict(sorted(agg.flow_counters.items()))
    return summary


def render_summary_text(summary: Dict) -> str:
    """Indented plain-text view of the headline summary"""
    lines = []

    def walk(node, depth):
        for key, value in node.items():
            if isinstance(value, dict):
                lines.append(f"{'  ' * depth}{key}:")
                walk(value, depth + 1)
            else:
                shown = '-' if value is None else value
                lines.append(f"{'  ' * depth}{key}: {shown}")

    walk(summary, 0)
    return '\n'.join(lines) + '\n'
