import sys

from scatternet.main import main

sys.exit(main())
