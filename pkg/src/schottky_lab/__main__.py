import sys

from schottky_lab.cli import main

sys.exit(main())
