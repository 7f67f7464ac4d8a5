"""
The ``python -m fedcy`` command line: ``generate``, ``train``, ``compare`` and
``gradcheck``. Every subcommand returns its exit status; errors raised by this package are
logged and turn into status 1.
"""
from typing import Dict, Optional, Sequence
import argparse
import logging

from fedcy.commands.compare import Compare, cmd_compare
from fedcy.commands.generate import Generate, cmd_generate
from fedcy.commands.gradcheck import Gradcheck, cmd_gradcheck
from fedcy.commands.subcommand import Subcommand
from fedcy.commands.train import Train, cmd_train
from fedcy.common.checks import FedCyError

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(name)s - %(message)s"


def subcommands() -> Dict[str, Subcommand]:
    return {"generate": Generate(),
            "train": Train(),
            "compare": Compare(),
            "gradcheck": Gradcheck()}


def build_parser(prog: Optional[str] = None) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Federated semi-supervised phase recognition simulator",
                                     usage="%(prog)s", prog=prog,
                                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    subparsers = parser.add_subparsers(title="Commands", metavar="")
    for name, subcommand in subcommands().items():
        subcommand.add_subparser(name, subparsers)
    return parser


def main(prog: Optional[str] = None, argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser(prog)
    args = parser.parse_args(argv)
    if "func" not in args:
        parser.print_help()
        return 1
    logging.basicConfig(format=LOG_FORMAT, level=logging.DEBUG if args.verbose else logging.INFO)
    try:
        return args.func(args)
    except FedCyError as error:
        logger.error("%s", error)
        return 1
