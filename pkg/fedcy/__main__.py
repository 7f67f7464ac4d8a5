import sys

from fedcy.commands import main

sys.exit(main(prog="python -m fedcy"))
