#!/usr/bin/env python3
"""Direct repository launcher for hawkes-agg."""

from hawkes_agg.cli import main


if __name__ == "__main__":
    raise SystemExit(main())
