"""Aggregation, distributions and report generation"""

from .tables import PercentRow, PercentTable, EmptyUniverse, percent, percent_table, fold_other
from .distributions import (DistributionSeries, EmptyInput, NonPositiveBin, build_cdf, build_pdf,
                            cdf_at, volume_share, CDF, PDF, LINEAR, LOG)
from .aggregates import (TraceAggregates, build_tables, build_series, headline_summary,
                         render_summary_text, scope_table, geography_table, transport_table,
                         service_table, spreading_table, window_reduction_ratio)
from .pipeline import AnalysisSettings, analyze_trace, analyze_traces, file_sha256
from .report_writer import RefusesRawAddresses, ReportWriter, emit_report, series_csv

__all__ = [
    'PercentRow', 'PercentTable', 'EmptyUniverse', 'percent', 'percent_table', 'fold_other',
    'DistributionSeries', 'EmptyInput', 'NonPositiveBin', 'build_cdf', 'build_pdf', 'cdf_at',
    'volume_share', 'CDF', 'PDF', 'LINEAR', 'LOG', 'TraceAggregates', 'build_tables',
    'build_series', 'headline_summary', 'render_summary_text', 'scope_table', 'geography_table',
    'transport_table', 'service_table', 'spreading_table', 'window_reduction_ratio',
    'AnalysisSettings', 'analyze_trace', 'analyze_traces', 'file_sha256', 'RefusesRawAddresses',
    'ReportWriter', 'emit_report', 'series_csv',
]
