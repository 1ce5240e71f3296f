"""``python -m memxbar`` entry point."""

import sys

from .harness.cli import main

sys.exit(main())
