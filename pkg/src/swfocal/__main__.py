import sys

from swfocal.cli import main

sys.exit(main())
