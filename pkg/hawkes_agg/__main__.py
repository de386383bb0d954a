"""Module entry point for ``python -m hawkes_agg``."""

from .cli import main


if __name__ == "__main__":
    raise SystemExit(main())
