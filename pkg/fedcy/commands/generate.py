"""
``python -m fedcy generate --config experiment.json [--seed 3] [--out data/scenario]``

Generates the synthetic scenario of the config and writes one dataset file per client
plus ``manifest.json``.
"""
from typing import Optional
import argparse
import logging
import os

from overrides import overrides

from fedcy.commands.subcommand import Subcommand, add_common_arguments
from fedcy.common.checks import DatasetError
from fedcy.data.synthetic import generate_scenario
from fedcy.data.workflow import validate_workflow
from fedcy.dataset_readers.scenario import write_scenario
from fedcy.experiment import load_experiment_config, save_experiment_config

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name


class Generate(Subcommand):
    @overrides
    def add_subparser(self, name: str, parser: argparse._SubParsersAction) -> argparse.ArgumentParser:  # pylint: disable=protected-access
        description = "Generate the synthetic client datasets of an experiment."
        subparser = parser.add_parser(name, description=description, help=description,
                                      formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        subparser.add_argument("--config", required=True, help="path to the experiment config (JSON)")
        subparser.add_argument("--seed", type=int, default=None,
                               help="master seed of the scenario (default: scenario.seed)")
        subparser.add_argument("--out", default=None, help="output directory (default: data_dir of the config)")
        add_common_arguments(subparser)
        subparser.set_defaults(func=generate_from_args)
        return subparser


def generate_from_args(args: argparse.Namespace) -> int:
    cmd_generate(args.config, seed=args.seed, out=args.out)
    return 0


def cmd_generate(config_path: str, seed: Optional[int] = None, out: Optional[str] = None) -> str:
    """
    Returns the directory the scenario was written to.
    """
    config = load_experiment_config(config_path).with_overrides(scenario_seed=seed)
    directory = out or config.data_dir
    scenario = generate_scenario(config.scenario, config.scenario.seed)
    for dataset in scenario.clients:
        for video in dataset.all_videos():
            if not validate_workflow(video.labels, config.scenario.workflow):
                raise DatasetError(f"client {dataset.client_id} holds a video that breaks the workflow")
    write_scenario(scenario, directory)
    save_experiment_config(config, directory)
    logger.info("Wrote %d clients to %s", len(scenario.clients), os.path.abspath(directory))
    return directory
