import sys

from core.cli_1_8_0.main import main

sys.exit(main())
