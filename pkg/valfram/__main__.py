import sys

from valfram.cli import main

sys.exit(main())
