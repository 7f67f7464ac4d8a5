"""
Rounds of federated training and the training modes built from them. A round broadcasts
the global parameters, runs one local epoch on every client (each client sees only the
broadcast, never its siblings' results), aggregates, and scores the new global model on
the validation videos.
"""
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence
import logging
import time

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from tqdm import tqdm

from fedcy.common.checks import ConfigurationError
from fedcy.common.util import derive_rng
from fedcy.data.client_dataset import ClientDataset, TrainingView
from fedcy.federation.client import (ClientState, LocalUpdate, local_supervised_epoch,
                                     local_unsupervised_epoch)
from fedcy.federation.config import MODES, FederationConfig
from fedcy.federation.early_stopping import EarlyStopping
from fedcy.federation.server import aggregate, data_fractions
from fedcy.metrics.phase_f1 import PhaseF1
from fedcy.models.phase_recognizer import ModelConfig, ParameterSet, init_params
from fedcy.predictors.phase_predictor import PhasePredictor

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name

STAGES = ("pretrain", "train")

_ROUND_STREAM = 20


def client_rng(master_seed: int, stage: str, round_index: int, client_index: int) -> np.random.Generator:
    """
    The random stream of one client in one round; it depends on nothing else, so results
    do not depend on the order clients run in.
    """
    return derive_rng(master_seed, _ROUND_STREAM, STAGES.index(stage), round_index, client_index)


class RoundReport(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    round: int
    stage: str
    client_losses: Dict[str, float]
    weights: Dict[str, float]
    validation_f1: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    early_stop: bool = False


class Federation:
    """
    The server's view of a federation: the participating clients, their aggregation
    weights and the current global parameters.

    Parameters
    ----------
    cfg : ``FederationConfig``
    clients : ``Sequence[ClientState]``
    initial_params : ``ParameterSet``
    validation : ``Sequence[ClientDataset]``
        Clients whose validation videos score every round. Empty for pretraining.
    stage : ``str``, optional (default = "train")
    labeled_index : ``int``, optional (default = 0)
        The client whose classifier becomes the global classifier.
    average_theta : ``bool``, optional (default = False)
    early_stopping : ``EarlyStopping``, optional
    """
    def __init__(self,
                 cfg: FederationConfig,
                 clients: Sequence[ClientState],
                 initial_params: ParameterSet,
                 validation: Sequence[ClientDataset] = (),
                 stage: str = "train",
                 labeled_index: int = 0,
                 average_theta: bool = False,
                 early_stopping: Optional[EarlyStopping] = None) -> None:
        if stage not in STAGES:
            raise ConfigurationError(f"unknown stage {stage!r}, expected one of {STAGES}")
        self.cfg = cfg
        self.clients = list(clients)
        self.global_params = initial_params.copy()
        self.validation = list(validation)
        self.stage = stage
        self.labeled_index = labeled_index
        self.average_theta = average_theta
        self.early_stopping = early_stopping
        self.weights = data_fractions([client.num_training_frames for client in self.clients])
        for client, weight in zip(self.clients, self.weights):
            client.data_fraction = weight
        self.round = 0
        self.last_updates: List[LocalUpdate] = []
        self.best_params: Optional[ParameterSet] = None

    def _train_client(self, position: int, broadcast: ParameterSet) -> LocalUpdate:
        client = self.clients[position]
        rng = client_rng(self.cfg.master_seed, self.stage, self.round, client.index)
        if client.role == "labeled":
            return local_supervised_epoch(client, broadcast, self.cfg, rng)
        return local_unsupervised_epoch(client, broadcast, self.cfg, rng)

    def validate(self, params: Optional[ParameterSet] = None) -> float:
        """
        Macro F1 over the pooled validation frames of the validation clients.
        """
        params = params if params is not None else self.global_params
        predictor = PhasePredictor(params)
        num_phases = params.theta["classifier.bias"].shape[0]
        metric = PhaseF1(num_phases)
        for dataset in self.validation:
            videos = dataset.evaluation_view("validation")
            for predictions, video in zip(predictor.predict_videos(videos), videos):
                metric(predictions, video.labels)
        return metric.get_metric(reset=True)["macro_f1"]

    def run_round(self) -> RoundReport:
        self.round += 1
        start = time.perf_counter()
        broadcast = self.global_params.copy()
        positions = range(len(self.clients))
        if self.cfg.num_workers > 1:
            with ThreadPoolExecutor(max_workers=self.cfg.num_workers) as pool:
                updates = list(pool.map(lambda position: self._train_client(position, broadcast), positions))
        else:
            updates = [self._train_client(position, broadcast) for position in positions]
        self.last_updates = updates
        self.global_params = aggregate([update.params for update in updates], self.weights,
                                       self.labeled_index, average_theta=self.average_theta)
        validation_f1 = self.validate() if self.validation else None
        early_stop = False
        if validation_f1 is not None and self.early_stopping is not None:
            early_stop = self.early_stopping.update(self.round, validation_f1)
            if self.early_stopping.improved_at(self.round):
                self.best_params = self.global_params.copy()
        report = RoundReport(round=self.round,
                             stage=self.stage,
                             client_losses={update.client_id: update.mean_loss for update in updates},
                             weights={client.client_id: weight for client, weight in zip(self.clients, self.weights)},
                             validation_f1=validation_f1,
                             early_stop=early_stop)
        logger.info("%s round %d: losses %s, validation F1 %s (%.2fs)", self.stage, self.round,
                    {name: round(loss, 5) for name, loss in report.client_losses.items()}, validation_f1,
                    time.perf_counter() - start)
        return report


class TrainingResult(NamedTuple):
    params: ParameterSet
    best_round: int
    best_validation_f1: float
    reports: List[RoundReport]
    final_params: ParameterSet


RoundCallback = Callable[[RoundReport, Federation], None]


def _pooled_view(datasets: Sequence[ClientDataset]) -> TrainingView:
    frames, labels = [], []
    for dataset in datasets:
        view = dataset.training_view(reveal_labels=True)
        frames.extend(view.frames)
        labels.extend(view.labels)
    return TrainingView("pooled", frames, labels)


def build_federation(cfg: FederationConfig,
                     labeled: ClientDataset,
                     unlabeled: Sequence[ClientDataset],
                     initial_params: ParameterSet) -> Federation:
    """
    The training-stage federation of ``cfg.mode``.
    """
    participants = [labeled] + list(unlabeled)
    early_stopping = EarlyStopping(cfg.min_epochs, cfg.patience)
    if cfg.mode in ("fedcy", "fedcy_no_cont"):
        clients = [ClientState(0, labeled.training_view(), "labeled")]
        clients += [ClientState(index, dataset.training_view(), "unlabeled")
                    for index, dataset in enumerate(unlabeled, start=1)]
        return Federation(cfg, clients, initial_params, [labeled], early_stopping=early_stopping)
    if cfg.mode in ("fedtcc", "fullsup_labeled_only"):
        clients = [ClientState(0, labeled.training_view(), "labeled")]
        return Federation(cfg, clients, initial_params, [labeled], early_stopping=early_stopping)
    if cfg.mode == "fedavg_fullsup":
        clients = [ClientState(index, dataset.training_view(reveal_labels=True), "labeled")
                   for index, dataset in enumerate(participants)]
        return Federation(cfg, clients, initial_params, participants, average_theta=True,
                          early_stopping=early_stopping)
    if cfg.mode == "fullsup_all":
        clients = [ClientState(0, _pooled_view(participants), "labeled")]
        return Federation(cfg, clients, initial_params, participants, early_stopping=early_stopping)
    if cfg.mode == "fullsup_each":
        raise ConfigurationError("fullsup_each trains one model per client, use run_each_training")
    raise ConfigurationError(f"unknown mode {cfg.mode!r}, expected one of {MODES}")


def run_training(cfg: FederationConfig,
                 model_config: ModelConfig,
                 labeled: ClientDataset,
                 unlabeled: Sequence[ClientDataset] = (),
                 round_callback: Optional[RoundCallback] = None,
                 show_progress: bool = False) -> TrainingResult:
    """
    Trains from ``init_params(model_config, cfg.master_seed)`` until early stopping or
    ``rounds_max`` and returns the global parameters of the round with the best
    validation F1. In ``fedtcc`` mode a federated cycle-consistency pretraining stage of
    ``pretrain_rounds`` rounds over every client comes first; only training-stage rounds
    compete for the best checkpoint.
    """
    if cfg.mode not in MODES:
        raise ConfigurationError(f"unknown mode {cfg.mode!r}, expected one of {MODES}")
    if cfg.mode == "fullsup_each":
        raise ConfigurationError("fullsup_each trains one model per client, use run_each_training")
    logger.info("Training mode %s with master seed %d", cfg.mode, cfg.master_seed)
    params = init_params(model_config, cfg.master_seed)
    reports: List[RoundReport] = []
    if cfg.mode == "fedtcc" and cfg.pretrain_rounds > 0:
        pretrain_clients = [ClientState(index, dataset.training_view().without_labels(), "unlabeled")
                            for index, dataset in enumerate([labeled] + list(unlabeled))]
        pretraining = Federation(cfg, pretrain_clients, params, stage="pretrain")
        for _ in tqdm(range(cfg.pretrain_rounds), desc="pretrain", disable=not show_progress):
            reports.append(pretraining.run_round())
            if round_callback is not None:
                round_callback(reports[-1], pretraining)
        params = pretraining.global_params
    federation = build_federation(cfg, labeled, unlabeled, params)
    return _train_until_stopped(federation, reports, round_callback, show_progress, cfg.mode)


def _train_until_stopped(federation: Federation,
                         reports: List[RoundReport],
                         round_callback: Optional[RoundCallback],
                         show_progress: bool,
                         description: str) -> TrainingResult:
    for _ in tqdm(range(federation.cfg.rounds_max), desc=description, disable=not show_progress):
        reports.append(federation.run_round())
        if round_callback is not None:
            round_callback(reports[-1], federation)
        if reports[-1].early_stop:
            break
    stopping = federation.early_stopping
    logger.info("Best validation F1 %.4f at round %d", stopping.best_f1, stopping.best_round)
    return TrainingResult(federation.best_params, stopping.best_round, stopping.best_f1, reports,
                          federation.global_params)


def run_each_training(cfg: FederationConfig,
                      model_config: ModelConfig,
                      participants: Sequence[ClientDataset],
                      round_callback: Optional[RoundCallback] = None,
                      show_progress: bool = False) -> Dict[str, TrainingResult]:
    """
    The ``fullsup_each`` baseline: every participant trains a model of its own on its own
    revealed labels, from the same initialization, with early stopping on its own
    validation videos. Nothing is aggregated across clients.

    Returns
    -------
    ``Dict[str, TrainingResult]``
        One result per client id, in the order of ``participants``.
    """
    if cfg.mode != "fullsup_each":
        raise ConfigurationError(f"run_each_training needs mode fullsup_each, got {cfg.mode!r}")
    logger.info("Training one model per client with master seed %d", cfg.master_seed)
    params = init_params(model_config, cfg.master_seed)
    results: Dict[str, TrainingResult] = OrderedDict()
    for index, dataset in enumerate(participants):
        client = ClientState(index, dataset.training_view(reveal_labels=True), "labeled")
        federation = Federation(cfg, [client], params, [dataset],
                                early_stopping=EarlyStopping(cfg.min_epochs, cfg.patience))
        results[dataset.client_id] = _train_until_stopped(federation, [], round_callback, show_progress,
                                                          f"{cfg.mode} {dataset.client_id}")
    return results
