"""Flow and event CSV export"""

import csv
from dataclasses import astuple, fields
from typing import Iterable, List, Optional, Tuple

from utils.errors import DataError

from .summary import FlowSummary
from .table import FlowRecord

FLOW_COLUMNS: Tuple[str, ...] = tuple(f.name for f in fields(FlowSummary))
EVENT_COLUMNS = ('flow_id', 'ts', 'kind', 'direction', 'detail')

_PARSERS = {
    int: int,
    float: float,
    Optional[float]: lambda text: float(text) if text != '' else None,
    bool: lambda text: text == '1',
    str: str,
}


def format_value(value) -> str:
    if value is None:
        return ''
    if isinstance(value, bool):
        return '1' if value else '0'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def flow_row(summary: FlowSummary) -> List[str]:
    return [format_value(v) for v in astuple(summary)]


def event_rows(flow: FlowRecord) -> List[Tuple[str, str, str, str, str]]:
    """Event log rows of one flow, in event order"""
    return [
        (flow.flow_id, repr(round(e.ts_us / 1_000_000, 6)), e.kind.value, e.direction, e.detail())
        for e in flow.events
    ]


def write_flow_csv(path: str, summaries: Iterable[FlowSummary]):
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(FLOW_COLUMNS)
        for summary in summaries:
            writer.writerow(flow_row(summary))


def read_flow_csv(path: str) -> List[FlowSummary]:
    """
    Load a flows.csv export

    Raises:
        DataError: unreadable file, unexpected header or malformed row
    """
    parsers = [_PARSERS[f.type] for f in fields(FlowSummary)]
    try:
        with open(path, 'r', encoding='utf-8', newline='') as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header is None or tuple(header) != FLOW_COLUMNS:
                raise DataError(f"{path}: not a flow export (header mismatch)")
            summaries = []
            for line_no, row in enumerate(reader, start=2):
                if len(row) != len(FLOW_COLUMNS):
                    raise DataError(f"{path}:{line_no}: expected {len(FLOW_COLUMNS)} columns, got {len(row)}")
                try:
                    summaries.append(FlowSummary(*(parse(text) for parse, text in zip(parsers, row))))
                except ValueError as e:
                    raise DataError(f"{path}:{line_no}: {e}") from None
    except OSError as e:
        raise DataError(f"cannot read {path}: {e.strerror or e}") from e
    return summaries
