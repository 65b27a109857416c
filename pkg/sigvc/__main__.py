import sys

from sigvc.cli.main import main

sys.exit(main())
