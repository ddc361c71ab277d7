"""Allow ``python -m fedsaddle``."""

import sys

from fedsaddle.main import main

sys.exit(main())
