"""
Per-client evaluation of a global model and the reporting layout built on it: one macro F1
per participating client, their averages over the unlabeled clients and over all clients,
and the held-out client on its own. Runs over several seeds aggregate to mean and sample
standard deviation.
"""
from typing import Dict, List, Mapping, Optional, Sequence, Tuple
import logging

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from fedcy.common.checks import MetricError
from fedcy.data.client_dataset import ClientDataset
from fedcy.data.synthetic import Scenario
from fedcy.metrics.phase_f1 import PhaseF1
from fedcy.models.phase_recognizer import ParameterSet
from fedcy.predictors.phase_predictor import PhasePredictor

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name


class EvaluationReport(BaseModel):
    """
    Parameters
    ----------
    per_client : ``Dict[str, float]``
        Macro F1 of every participating client, labeled client first.
    unlabeled_clients : ``List[str]``
        The keys of ``per_client`` that belong to unlabeled clients.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    mode: str
    seed: int
    split: str
    per_client: Dict[str, float]
    unlabeled_clients: List[str]
    overall_unlabeled: Optional[float]
    overall_all: float
    held_out: Optional[float] = None

    def scores(self) -> Dict[str, float]:
        """
        Flat score columns in report order: clients, the two overall averages, held-out.
        """
        columns = dict(self.per_client)
        if self.overall_unlabeled is not None:
            columns["overall_unlabeled"] = self.overall_unlabeled
        columns["overall_all"] = self.overall_all
        if self.held_out is not None:
            columns["held_out"] = self.held_out
        return columns

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"client": list(self.scores()), "macro_f1": list(self.scores().values())})


def client_f1(predictor: PhasePredictor, dataset: ClientDataset, split: str, num_phases: int,
              exclude_absent: bool = True) -> float:
    """
    Macro F1 over all frames of ``dataset``'s videos in ``split``.
    """
    metric = PhaseF1(num_phases, exclude_absent=exclude_absent)
    videos = dataset.evaluation_view(split)
    for predictions, video in zip(predictor.predict_videos(videos), videos):
        metric(predictions, video.labels)
    return metric.get_metric(reset=True)["macro_f1"]


def evaluate_scenario(params: ParameterSet,
                      scenario: Scenario,
                      split: str,
                      mode: str = "",
                      seed: int = 0,
                      exclude_absent: bool = True) -> EvaluationReport:
    """
    Evaluates ``params`` on ``split`` of every participating client. The held-out client
    is always scored on its test videos and kept out of both averages.
    """
    predictor = PhasePredictor(params)
    num_phases = scenario.config.workflow.num_phases
    per_client = {dataset.client_id: client_f1(predictor, dataset, split, num_phases, exclude_absent)
                  for dataset in scenario.participants}
    held_out = None
    if scenario.held_out is not None:
        held_out = client_f1(predictor, scenario.held_out, "test", num_phases, exclude_absent)
    return _report(scenario, split, mode, seed, per_client, held_out)


def evaluate_each(params: Mapping[str, ParameterSet],
                  scenario: Scenario,
                  split: str,
                  mode: str = "",
                  seed: int = 0,
                  exclude_absent: bool = True) -> EvaluationReport:
    """
    Evaluates one model per participating client, each on its own client. The held-out
    score is the mean over those models of their F1 on the held-out test videos.
    """
    missing = [dataset.client_id for dataset in scenario.participants if dataset.client_id not in params]
    if missing:
        raise MetricError(f"no model for clients {missing}")
    predictors = {client_id: PhasePredictor(client_params) for client_id, client_params in params.items()}
    num_phases = scenario.config.workflow.num_phases
    per_client = {dataset.client_id: client_f1(predictors[dataset.client_id], dataset, split, num_phases,
                                               exclude_absent)
                  for dataset in scenario.participants}
    held_out = None
    if scenario.held_out is not None:
        held_out = float(np.mean([client_f1(predictors[dataset.client_id], scenario.held_out, "test", num_phases,
                                            exclude_absent)
                                  for dataset in scenario.participants]))
    return _report(scenario, split, mode, seed, per_client, held_out)


def _report(scenario: Scenario,
            split: str,
            mode: str,
            seed: int,
            per_client: Dict[str, float],
            held_out: Optional[float]) -> EvaluationReport:
    unlabeled = [dataset.client_id for dataset in scenario.unlabeled]
    overall_unlabeled = float(np.mean([per_client[client_id] for client_id in unlabeled])) if unlabeled else None
    overall_all = float(np.mean(list(per_client.values())))
    report = EvaluationReport(mode=mode, seed=seed, split=split, per_client=per_client,
                              unlabeled_clients=unlabeled, overall_unlabeled=overall_unlabeled,
                              overall_all=overall_all, held_out=held_out)
    logger.info("%s split: overall_unlabeled=%s overall_all=%.4f held_out=%s", split,
                overall_unlabeled, overall_all, held_out)
    return report


def aggregate_runs(reports: Sequence[EvaluationReport]) -> Dict[str, Tuple[float, float]]:
    """
    Mean and unbiased sample standard deviation of every score column across ``reports``.
    A single report has standard deviation 0.
    """
    if not reports:
        raise MetricError("cannot aggregate an empty list of reports")
    frame = pd.DataFrame([report.scores() for report in reports])
    if frame.isna().any().any():
        raise MetricError("reports do not share the same score columns")
    means = frame.mean(axis=0)
    if len(reports) > 1:
        stds = frame.std(axis=0, ddof=1)
    else:
        stds = pd.Series(0.0, index=frame.columns)
    return {column: (float(means[column]), float(stds[column])) for column in frame.columns}
