import sys

from bwe.main import main

sys.exit(main())
