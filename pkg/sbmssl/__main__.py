import sys

from sbmssl._cli import main

sys.exit(main())
