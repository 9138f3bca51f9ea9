import sys

from inverse_erm.cli import main

sys.exit(main())
