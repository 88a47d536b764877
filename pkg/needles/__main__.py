import sys

from needles.cli import main

sys.exit(main())
