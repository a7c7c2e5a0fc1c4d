"""Module entry point so ``python -m runclust`` matches the console script."""

import sys

from .cli import main

sys.exit(main())
