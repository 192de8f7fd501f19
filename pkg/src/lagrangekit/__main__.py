import sys

from lagrangekit.cli import main

sys.exit(main())
