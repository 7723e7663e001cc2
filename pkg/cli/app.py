"""Command-line interface: analyze, anonymize and report subcommands"""

import argparse
import logging
import sys
from typing import Dict, List, Optional

from analytics import TraceAggregates, analyze_traces, emit_report
from anon import anonymize_trace, new_anonymizer
from flows import read_flow_csv
from utils import __version__, setup_logging
from utils.errors import ConfigError, DataError

from .config import FORMATS, KEY_ENV_VAR, build_run_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class ToolkitArgumentParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', metavar='FILE', help="TOML configuration file")
    common.add_argument('-v', '--verbose', action='count', default=0,
                        help="more logging (-v info, -vv debug)")
    return common


def _report_options() -> argparse.ArgumentParser:
    report = argparse.ArgumentParser(add_help=False)
    report.add_argument('--out', metavar='DIR', help="report directory (default: report)")
    report.add_argument('--format', dest='formats', action='append', choices=FORMATS,
                        help="table/summary format; repeat for several (default: csv and text)")
    report.add_argument('--bin-width', type=float, metavar='SECONDS',
                        help="duration PDF bin width (default: 3)")
    report.add_argument('--other-threshold', type=float, metavar='PERCENT',
                        help="named services below this share fold into Other (default: 1.0)")
    report.add_argument('--linear-rate', dest='rate_scale', action='store_const', const='linear',
                        help="linear x axis for the rate CDF instead of log10")
    return report


def build_parser() -> ToolkitArgumentParser:
    parser = ToolkitArgumentParser(
        prog='tcpmetro',
        description="Passive TCP metrology over pcap traces.",
        epilog=f"The anonymization key is read from {KEY_ENV_VAR} or anon_key_hex in the config file.",
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    subparsers = parser.add_subparsers(dest='command', required=True, parser_class=ToolkitArgumentParser)
    common, report = _common_options(), _report_options()

    analyze = subparsers.add_parser('analyze', parents=[common, report],
                                    help="classify, build flows and write the full report")
    analyze.add_argument('traces', nargs='+', metavar='TRACE', help="pcap files")
    analyze.add_argument('--lan', action='append', metavar='CIDR', help="LAN prefix; repeatable")
    analyze.add_argument('--man', action='append', metavar='CIDR', help="MAN (island) prefix; repeatable")
    analyze.add_argument('--prefix-file', metavar='FILE', help="file of 'lan <cidr>' / 'man <cidr>' lines")
    analyze.add_argument('--geo-db', metavar='FILE', help="CSV of cidr,continent")
    analyze.add_argument('--services', metavar='FILE', help="services file (name port/proto)")
    analyze.add_argument('--timeout', dest='idle_timeout', type=float, metavar='SECONDS',
                         help="flow idle timeout (default: 60)")
    analyze.add_argument('--reorder-window', dest='reorder_window_ms', type=float, metavar='MS',
                         help="gap fillers sooner than this are out of order (default: 3)")
    analyze.add_argument('--correlation-window', type=float, metavar='SECONDS',
                         help="window reduction / loss correlation window (default: 1)")
    analyze.add_argument('--reorder-buffer', type=int, metavar='PACKETS',
                         help="packets held to repair timestamp inversions (default: 128)")
    analyze.add_argument('--jobs', type=int, metavar='N', help="traces analysed in parallel (default: 1)")
    analyze.set_defaults(handler=cmd_analyze)

    anonymize = subparsers.add_parser('anonymize', parents=[common],
                                      help="rewrite a trace with prefix-preserving anonymized addresses")
    anonymize.add_argument('input', metavar='IN', help="input pcap")
    anonymize.add_argument('output', metavar='OUT', help="output pcap")
    anonymize.set_defaults(handler=cmd_anonymize)

    rebuild = subparsers.add_parser('report', parents=[common, report],
                                    help="rebuild flow-derived outputs from a flows.csv export")
    rebuild.add_argument('flows', metavar='FLOWS_CSV', help="flows.csv written by analyze")
    rebuild.set_defaults(handler=cmd_report)
    return parser


_OVERRIDES = ('out', 'formats', 'bin_width', 'other_threshold', 'rate_scale', 'lan', 'man',
              'prefix_file', 'geo_db', 'services', 'idle_timeout', 'reorder_window_ms',
              'correlation_window', 'reorder_buffer', 'jobs')


def _overrides(args: argparse.Namespace) -> Dict:
    return {name: getattr(args, name) for name in _OVERRIDES if hasattr(args, name)}


def cmd_analyze(args: argparse.Namespace) -> int:
    cfg = build_run_config(dict(_overrides(args), inputs=args.traces), args.config).validate(need_key=True)
    settings = cfg.analysis_settings()
    agg = analyze_traces(cfg.inputs, settings, cfg.jobs)
    emit_report(agg, cfg)
    print(f"Analysed {len(cfg.inputs)} trace(s): {len(agg.flows)} flows, report in {cfg.out}")
    return EXIT_OK


def cmd_anonymize(args: argparse.Namespace) -> int:
    cfg = build_run_config({}, args.config).validate(need_key=True)
    stats = anonymize_trace(args.input, args.output, new_anonymizer(cfg.anon_key()))
    print(f"Anonymized {stats.packets_ipv4} IPv4 packets of {stats.packets_total} into {args.output}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    cfg = build_run_config(_overrides(args), args.config).validate()
    flows = read_flow_csv(args.flows)
    emit_report(TraceAggregates.from_flows(flows), cfg)
    print(f"Rebuilt report for {len(flows)} flows in {cfg.out}")
    return EXIT_OK


def run_cli(argv: Optional[List[str]] = None) -> int:
    """
    Run the command line

    Returns:
        0 on success, 1 on usage or configuration errors, 2 on data errors
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    setup_logging(args.verbose)
    try:
        return args.handler(args)
    except ConfigError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as e:
        logger.debug("Data error", exc_info=True)
        print(f"ERROR: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_DATA
    except OSError as e:
        logger.debug("I/O error", exc_info=True)
        print(f"ERROR: {e.filename or ''}: {e.strerror or e}", file=sys.stderr)
        return EXIT_DATA
