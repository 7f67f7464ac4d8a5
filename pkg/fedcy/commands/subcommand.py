"""
Base class for the ``python -m fedcy`` subcommands.
"""
import argparse


class Subcommand:
    """
    A subcommand adds its own parser to the main parser and sets ``func`` on it; ``func``
    receives the parsed arguments and returns the process exit status.
    """
    def add_subparser(self, name: str, parser: argparse._SubParsersAction) -> argparse.ArgumentParser:  # pylint: disable=protected-access
        raise NotImplementedError


def add_common_arguments(subparser: argparse.ArgumentParser) -> None:
    subparser.add_argument("--verbose", action="store_true", help="log at DEBUG level")
