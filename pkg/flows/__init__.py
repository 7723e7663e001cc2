"""Bidirectional flow reconstruction and export"""

from .keys import FlowKey, flow_key, packet_endpoints
from .table import (FlowRecord, FlowTable, END_IDLE, END_CLOSED, END_FLUSHED,
                    DEFAULT_IDLE_TIMEOUT, DEFAULT_FIN_LINGER)
from .summary import FlowMetrics, FlowSummary, flow_metrics, summarize_flow
from .export import (FLOW_COLUMNS, EVENT_COLUMNS, event_rows, flow_row, format_value,
                     write_flow_csv, read_flow_csv)

__all__ = [
    'FlowKey', 'flow_key', 'packet_endpoints', 'FlowRecord', 'FlowTable', 'END_IDLE', 'END_CLOSED',
    'END_FLUSHED', 'DEFAULT_IDLE_TIMEOUT', 'DEFAULT_FIN_LINGER', 'FlowMetrics', 'FlowSummary',
    'flow_metrics', 'summarize_flow', 'FLOW_COLUMNS', 'EVENT_COLUMNS', 'event_rows', 'flow_row',
    'format_value', 'write_flow_csv', 'read_flow_csv',
]
