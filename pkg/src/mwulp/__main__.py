import sys

from mwulp.cli import main

sys.exit(main())
