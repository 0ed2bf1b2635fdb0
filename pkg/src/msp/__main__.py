import sys

from msp.cli import main

sys.exit(main())
