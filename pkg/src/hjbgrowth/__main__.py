import sys

from hjbgrowth.cli import main

sys.exit(main())
