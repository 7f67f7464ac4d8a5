"""
``python -m fedcy compare --runs runs/fedcy_seed0 runs/fedcy_seed1 ... --out comparison``

Collects the test evaluations of finished runs and writes one row per mode with the mean
and standard deviation across seeds of every score column.
"""
from typing import Dict, List, Optional, Sequence
import argparse
import logging
import os

import pandas as pd
from overrides import overrides

from fedcy.commands.subcommand import Subcommand, add_common_arguments
from fedcy.commands.train import EVALUATION_FILE
from fedcy.common.checks import DatasetError
from fedcy.common.util import FORMAT_VERSION, check_format_version, read_json, write_json
from fedcy.experiment import CONFIG_FILE_NAME
from fedcy.metrics.evaluation import EvaluationReport, aggregate_runs

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name

COMPARISON_TABLE = "comparison.tsv"
COMPARISON_TEXT = "comparison.txt"
COMPARISON_CONFIG = "compare_config.json"


class Compare(Subcommand):
    @overrides
    def add_subparser(self, name: str, parser: argparse._SubParsersAction) -> argparse.ArgumentParser:  # pylint: disable=protected-access
        description = "Aggregate finished runs into a per-mode comparison table."
        subparser = parser.add_parser(name, description=description, help=description,
                                      formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        subparser.add_argument("--runs", nargs="+", required=True, help="run directories written by train")
        subparser.add_argument("--out", default="comparison", help="output directory")
        add_common_arguments(subparser)
        subparser.set_defaults(func=compare_from_args)
        return subparser


def compare_from_args(args: argparse.Namespace) -> int:
    cmd_compare(args.runs, out=args.out)
    return 0


def read_run(run_dir: str) -> EvaluationReport:
    """
    Reads the test evaluation of a finished run. A run without its config snapshot or
    evaluation is incomplete.
    """
    for file_name in (CONFIG_FILE_NAME, EVALUATION_FILE):
        if not os.path.exists(os.path.join(run_dir, file_name)):
            raise DatasetError(f"incomplete run directory {run_dir}: {file_name} is missing")
    path = os.path.join(run_dir, EVALUATION_FILE)
    document = read_json(path)
    check_format_version(document, path)
    document.pop("format_version")
    return EvaluationReport.model_validate(document)


def comparison_frame(reports: Sequence[EvaluationReport]) -> pd.DataFrame:
    """
    One row per mode, in order of first appearance: ``mode``, ``num_runs``, ``seeds``, then
    ``<column>_mean`` and ``<column>_std`` for every score column.
    """
    by_mode: Dict[str, List[EvaluationReport]] = {}
    for report in reports:
        by_mode.setdefault(report.mode, []).append(report)
    rows = []
    for mode, mode_reports in by_mode.items():
        row = {"mode": mode,
               "num_runs": len(mode_reports),
               "seeds": ",".join(str(report.seed) for report in mode_reports)}
        for column, (mean, std) in aggregate_runs(mode_reports).items():
            row[f"{column}_mean"] = mean
            row[f"{column}_std"] = std
        rows.append(row)
    return pd.DataFrame(rows)


def format_comparison(frame: pd.DataFrame) -> str:
    """
    Human-readable table with ``mean ± std`` cells in F1 points.
    """
    columns = [column[:-len("_mean")] for column in frame.columns if column.endswith("_mean")]
    text = frame[["mode", "num_runs"]].copy()
    for column in columns:
        text[column] = [f"{100 * mean:.2f} ± {100 * std:.2f}"
                        for mean, std in zip(frame[f"{column}_mean"], frame[f"{column}_std"])]
    return text.to_string(index=False) + "\n"


def cmd_compare(run_dirs: Sequence[str], out: Optional[str] = None) -> pd.DataFrame:
    if not run_dirs:
        raise DatasetError("compare needs at least one run directory")
    reports = [read_run(run_dir) for run_dir in run_dirs]
    frame = comparison_frame(reports)
    directory = out or "comparison"
    os.makedirs(directory, exist_ok=True)
    frame.to_csv(os.path.join(directory, COMPARISON_TABLE), sep="\t", index=False)
    with open(os.path.join(directory, COMPARISON_TEXT), "w", encoding="utf-8") as text_file:
        text_file.write(format_comparison(frame))
    write_json(os.path.join(directory, COMPARISON_CONFIG),
               {"format_version": FORMAT_VERSION,
                "runs": [{"run_dir": run_dir, "mode": report.mode, "seed": report.seed}
                         for run_dir, report in zip(run_dirs, reports)]})
    logger.info("Compared %d runs over %d modes into %s", len(reports), len(frame), directory)
    return frame
