import sys

from podkeeper.client.cli import main

sys.exit(main())
