import sys

from npb.cli import main

sys.exit(main())
