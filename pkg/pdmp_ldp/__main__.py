import sys

from pdmp_ldp.cli import main

sys.exit(main())
