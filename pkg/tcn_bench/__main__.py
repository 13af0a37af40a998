"""Allow running as `python -m tcn_bench`."""

from .cli import main

main()
