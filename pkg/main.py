#!/usr/bin/env python3
"""
tcpmetro
Passive TCP metrology over pcap traces
"""

import sys

from dotenv import load_dotenv

from cli import run_cli


def main() -> int:
    """Main entry point"""
    # TCPMETRO_ANON_KEY_HEX may live in .env
    load_dotenv()

    try:
        return run_cli(sys.argv[1:])
    except KeyboardInterrupt:
        print("\nInterrupted", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
