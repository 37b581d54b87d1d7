import sys

from runner.runner import main

sys.exit(main())
