import sys

from smoothlab.cli import main

sys.exit(main())
