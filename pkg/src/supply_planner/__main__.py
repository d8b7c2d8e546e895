import sys

from supply_planner.cli import main

sys.exit(main())
