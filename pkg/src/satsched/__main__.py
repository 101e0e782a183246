"""Allow running the command line interface as ``python -m satsched``."""

import sys

from .cli import main

sys.exit(main())
