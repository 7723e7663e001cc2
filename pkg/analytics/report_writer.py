"""Report directory writer: tables, series, flow and event logs, summary, manifest"""

import csv
import hashlib
import io
import json
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional

from anon import WriteFailure
from flows import EVENT_COLUMNS, FLOW_COLUMNS, flow_row
from utils import __version__
from utils.errors import DataError

from .aggregates import TraceAggregates, build_series, build_tables, headline_summary, render_summary_text
from .distributions import LOG, DistributionSeries

logger = logging.getLogger(__name__)

SERIES_X_COLUMNS = {
    'flow_length_cdf': 'packets',
    'flow_duration_pdf': 'duration_s',
    'flow_rate_cdf': 'rate_bps',
}


class RefusesRawAddresses(DataError):
    """A flow with unanonymized addresses reached the report writer"""


def _csv_text(header: List[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def series_csv(name: str, series: Optional[DistributionSeries]) -> str:
    """Two-column CSV; a log-scale series is written as log10 of x"""
    x_col = SERIES_X_COLUMNS.get(name, 'x')
    y_col = 'cdf' if name.endswith('_cdf') else 'mass'
    if series is None:
        return _csv_text([x_col, y_col], [])
    if series.x_scale == LOG:
        x_col = f'log10_{x_col}'
        rows = [(repr(math.log10(x)), repr(y)) for x, y in series.points]
    else:
        rows = [(repr(x), repr(y)) for x, y in series.points]
    return _csv_text([x_col, y_col], rows)


class ReportWriter:
    """
    Writes one report directory

    Every file is rendered in memory first and then written, so the manifest
    can carry the checksum of each output.
    """

    def __init__(self, out_dir: str):
        self.out_dir = Path(out_dir)
        self.written: Dict[str, str] = {}

    def write(self, relative: str, text: str):
        path = self.out_dir / relative
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, 'w', encoding='utf-8', newline='') as f:
                f.write(text)
        except OSError as e:
            raise WriteFailure(str(path), e.strerror or str(e)) from e
        self.written[relative] = hashlib.sha256(text.encode('utf-8')).hexdigest()
        logger.debug("Wrote %s", path)


def emit_report(agg: TraceAggregates, cfg) -> List[Path]:
    """
    Write the report for `agg` into cfg.out

    Args:
        agg: merged aggregates
        cfg: run configuration (out, formats, bin_width, other_threshold,
            rate_scale and fingerprint() are used)

    Returns:
        Paths written, manifest last

    Raises:
        RefusesRawAddresses: a flow summary still carries raw addresses
        WriteFailure: the output directory or a file cannot be written
    """
    raw = [f.flow_id for f in agg.flows if not f.anonymized]
    if raw:
        raise RefusesRawAddresses(f"{len(raw)} flows carry unanonymized addresses (first: {raw[0]})")

    writer = ReportWriter(cfg.out)
    formats = set(cfg.formats)

    for name, table in build_tables(agg, cfg.other_threshold).items():
        if 'csv' in formats:
            writer.write(f'tables/{name}.csv', _csv_text(table.header(), table.csv_rows()))
        if 'text' in formats:
            writer.write(f'tables/{name}.txt', table.render_text())

    for name, series in build_series(agg.flows, cfg.bin_width, cfg.rate_scale).items():
        writer.write(f'series/{name}.csv', series_csv(name, series))

    writer.write('flows.csv', _csv_text(list(FLOW_COLUMNS), (flow_row(f) for f in agg.flows)))
    if agg.packet_level:
        writer.write('events.csv', _csv_text(list(EVENT_COLUMNS), agg.events))

    summary = headline_summary(agg, cfg.bin_width)
    writer.write('summary.json', json.dumps(summary, indent=2, sort_keys=True) + '\n')
    if 'text' in formats:
        writer.write('summary.txt', render_summary_text(summary))

    manifest = {
        'tool': 'tcpmetro',
        'version': __version__,
        'config_fingerprint': cfg.fingerprint(),
        'traces': [{'name': name, 'sha256': digest} for name, digest in agg.traces],
        'files': dict(sorted(writer.written.items())),
    }
    writer.write('manifest.json', json.dumps(manifest, indent=2, sort_keys=True) + '\n')

    logger.info("Report written to %s (%d files)", cfg.out, len(writer.written))
    return [writer.out_dir / name for name in writer.written]
