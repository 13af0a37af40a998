#!/usr/bin/env python3
"""tcn-bench - Entry point script (delegates to tcn_bench.cli)."""

from tcn_bench.cli import main

if __name__ == "__main__":
    main()
