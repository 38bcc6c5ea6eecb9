import sys

from affine_twist.cli import main

sys.exit(main())
