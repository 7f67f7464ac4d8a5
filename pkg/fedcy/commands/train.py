"""
``python -m fedcy train --config experiment.json --mode fedcy --seed 0 [--out runs/fedcy_0]``

Trains one mode on a generated scenario. The run directory receives the effective config,
one JSON line per round, the best checkpoint (one per client for ``fullsup_each``), the test
evaluation and the log of dataset files read by each stage.
"""
from typing import Optional
import argparse
import logging
import os

from overrides import overrides

from fedcy.commands.subcommand import Subcommand, add_common_arguments
from fedcy.common.checks import ConfigurationError
from fedcy.common.util import FORMAT_VERSION, append_jsonl, write_json
from fedcy.dataset_readers.scenario import ACCESS_LOG_NAME, ScenarioReader
from fedcy.experiment import load_experiment_config, save_experiment_config
from fedcy.federation.config import MODES
from fedcy.federation.trainer import Federation, RoundReport, run_each_training, run_training
from fedcy.metrics.evaluation import evaluate_each, evaluate_scenario
from fedcy.models.archival import save_params

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name

ROUNDS_FILE = "rounds.jsonl"
CHECKPOINT_FILE = "best_model.json"
EVALUATION_FILE = "evaluation.json"
EVALUATION_TABLE = "evaluation.tsv"


def checkpoint_file_name(mode: str, client_id: str) -> str:
    """
    ``fullsup_each`` keeps one checkpoint per client; every other mode has one global model.
    """
    if mode == "fullsup_each":
        return f"best_model_{client_id}.json"
    return CHECKPOINT_FILE


class Train(Subcommand):
    @overrides
    def add_subparser(self, name: str, parser: argparse._SubParsersAction) -> argparse.ArgumentParser:  # pylint: disable=protected-access
        description = "Train one mode on a generated scenario and evaluate the best checkpoint."
        subparser = parser.add_parser(name, description=description, help=description,
                                      formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        subparser.add_argument("--config", required=True, help="path to the experiment config (JSON)")
        subparser.add_argument("--mode", choices=MODES, default=None,
                               help="training mode (default: federation.mode of the config)")
        subparser.add_argument("--seed", type=int, default=None,
                               help="master seed of the run (default: federation.master_seed)")
        subparser.add_argument("--out", default=None,
                               help="run directory (default: <output_dir>/<mode>_seed<seed>)")
        subparser.add_argument("--data-dir", default=None,
                               help="scenario directory (default: data_dir of the config)")
        add_common_arguments(subparser)
        subparser.set_defaults(func=train_from_args)
        return subparser


def train_from_args(args: argparse.Namespace) -> int:
    cmd_train(args.config, mode=args.mode, seed=args.seed, out=args.out, data_dir=args.data_dir,
              show_progress=True)
    return 0


def cmd_train(config_path: str,
              mode: Optional[str] = None,
              seed: Optional[int] = None,
              out: Optional[str] = None,
              data_dir: Optional[str] = None,
              show_progress: bool = False) -> str:
    """
    Returns the run directory.
    """
    config = load_experiment_config(config_path).with_overrides(mode=mode, seed=seed)
    federation_config = config.federation
    reader = ScenarioReader(data_dir or config.data_dir)
    if reader.config.input_dim != config.model.input_dim:
        raise ConfigurationError(f"the scenario has {reader.config.input_dim}-dimensional frames but "
                                 f"model.input_dim is {config.model.input_dim}")
    if reader.config.workflow.num_phases != config.model.num_phases:
        raise ConfigurationError(f"the scenario has {reader.config.workflow.num_phases} phases but "
                                 f"model.num_phases is {config.model.num_phases}")

    run_dir = out or os.path.join(config.output_dir,
                                  f"{federation_config.mode}_seed{federation_config.master_seed}")
    os.makedirs(run_dir, exist_ok=True)
    save_experiment_config(config, run_dir)
    rounds_path = os.path.join(run_dir, ROUNDS_FILE)
    if os.path.exists(rounds_path):
        os.remove(rounds_path)

    labeled = reader.read_client(reader.labeled_id, "train")
    unlabeled = []
    if federation_config.uses_unlabeled_clients:
        unlabeled = [reader.read_client(client_id, "train") for client_id in reader.client_ids("unlabeled")]

    def record_round(report: RoundReport, _: Federation) -> None:
        append_jsonl(rounds_path, report.model_dump(mode="json"))

    if federation_config.mode == "fullsup_each":
        results = run_each_training(federation_config, config.model, [labeled] + unlabeled,
                                    round_callback=record_round, show_progress=show_progress)
    else:
        results = {reader.labeled_id: run_training(federation_config, config.model, labeled, unlabeled,
                                                   round_callback=record_round, show_progress=show_progress)}
    logger.info("Training read %s", ", ".join(reader.files_read("train")))
    for client_id, result in results.items():
        lineage = {"master_seed": federation_config.master_seed,
                   "scenario_seed": reader.master_seed,
                   "mode": federation_config.mode,
                   "round": result.best_round,
                   "validation_f1": result.best_validation_f1}
        if federation_config.mode == "fullsup_each":
            lineage["client_id"] = client_id
        save_params(result.params, os.path.join(run_dir, checkpoint_file_name(federation_config.mode, client_id)),
                    config.model, lineage=lineage)
        logger.info("%s: best round %d, validation F1 %.4f", client_id, result.best_round,
                    result.best_validation_f1)

    scenario = reader.read_scenario("evaluate")
    if federation_config.mode == "fullsup_each":
        report = evaluate_each({client_id: result.params for client_id, result in results.items()}, scenario,
                               "test", mode=federation_config.mode, seed=federation_config.master_seed)
    else:
        report = evaluate_scenario(results[reader.labeled_id].params, scenario, "test",
                                   mode=federation_config.mode, seed=federation_config.master_seed)
    write_json(os.path.join(run_dir, EVALUATION_FILE),
               {"format_version": FORMAT_VERSION, **report.model_dump(mode="json")})
    report.to_frame().to_csv(os.path.join(run_dir, EVALUATION_TABLE), sep="\t", index=False)
    reader.write_access_log(os.path.join(run_dir, ACCESS_LOG_NAME))
    logger.info("Finished %s run in %s", federation_config.mode, run_dir)
    return run_dir
