import sys

from redtide.cli import main

sys.exit(main())
