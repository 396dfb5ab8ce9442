import sys

from icfd.cli import main

sys.exit(main())
