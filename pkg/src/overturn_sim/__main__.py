import sys

from overturn_sim.cli import main

sys.exit(main())
