#!/usr/bin/env python3
import sys

sys.path.append("src")
from cli.app import main  # noqa: E402


if __name__ == "__main__":
    raise SystemExit(main())
