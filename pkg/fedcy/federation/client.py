"""
Local training of one client for one epoch. A client keeps its own parameter tensors and
AdamW state across rounds; at the start of every round the broadcast global parameters
are copied into those tensors, and the payload sent back is a detached snapshot, so
optimizer moments never leave the client.
"""
from typing import Any, List, NamedTuple, Optional, Sequence, Tuple
import logging

import numpy as np
import torch

from fedcy.common.checks import FederationError
from fedcy.data.client_dataset import TrainingView
from fedcy.engine.functional import DTYPE, check_finite
from fedcy.federation.config import FederationConfig
from fedcy.losses.cycle_consistency import tcc_batch_objective
from fedcy.losses.objectives import labeled_objective
from fedcy.models.phase_recognizer import ParameterSet, extract_features
from fedcy.sampling.clip_sampler import Clip, sample_video_clips

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name

ROLES = ("labeled", "unlabeled")

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8

# (video index, 1-based frame ids)
ClipRef = Tuple[int, Clip]


class LocalUpdate(NamedTuple):
    """
    What a client returns to the server after its local epoch. ``batches`` lists the
    executed batches in order (frame indices for labeled clients, clip references for
    unlabeled ones).
    """
    client_id: str
    params: ParameterSet
    mean_loss: float
    batches: List[Any]


class ClientState:
    """
    Parameters
    ----------
    index : ``int``
        Position of the client in the federation; selects its random stream.
    view : ``TrainingView``
        The client's training data. Labeled clients need labels.
    role : ``str``
        ``labeled`` trains the labeled objective, ``unlabeled`` trains clip cycle consistency.
    """
    def __init__(self, index: int, view: TrainingView, role: str) -> None:
        if role not in ROLES:
            raise FederationError(f"unknown client role {role!r}, expected one of {ROLES}")
        if role == "labeled" and view.labels is None:
            raise FederationError(f"labeled client {view.client_id} has no labels")
        self.index = index
        self.client_id = view.client_id
        self.role = role
        self.view = view
        self.data_fraction = 0.0
        self._videos = [torch.as_tensor(np.asarray(frames, dtype=np.float64)) for frames in view.frames]
        self._params: Optional[ParameterSet] = None
        self._optimizer: Optional[torch.optim.Optimizer] = None
        if role == "labeled":
            frames, labels = view.pooled()
            self.frames = torch.as_tensor(frames, dtype=DTYPE)
            self.labels = torch.as_tensor(labels, dtype=torch.long)

    @property
    def num_training_frames(self) -> int:
        return self.view.num_frames

    @property
    def videos(self) -> List[torch.Tensor]:
        return self._videos

    def load_global(self, global_params: ParameterSet, cfg: FederationConfig) -> ParameterSet:
        """
        Copies ``global_params`` into the client's tensors, creating them and the optimizer
        on first use. Unlabeled clients only optimize the feature extractor.
        """
        if self._params is None:
            self._params = global_params.copy()
            trainable = list(self._params.omega.values())
            if self.role == "labeled":
                trainable += list(self._params.theta.values())
            for tensor in trainable:
                tensor.requires_grad_(True)
            self._optimizer = torch.optim.AdamW(trainable, lr=cfg.learning_rate, betas=ADAM_BETAS,
                                                eps=ADAM_EPS, weight_decay=cfg.weight_decay)
            return self._params
        local_items = list(self._params.items())
        global_items = list(global_params.items())
        if [name for name, _ in local_items] != [name for name, _ in global_items]:
            raise FederationError(f"client {self.client_id} received parameters with different names")
        with torch.no_grad():
            for (_, local), (_, incoming) in zip(local_items, global_items):
                local.copy_(incoming)
        return self._params

    def step(self, loss: torch.Tensor) -> None:
        check_finite(loss.detach(), f"the local loss of client {self.client_id}")
        self._optimizer.zero_grad(set_to_none=True)
        loss.backward()
        self._optimizer.step()

    def snapshot(self) -> ParameterSet:
        return self._params.copy()


def clip_embeddings(params: ParameterSet,
                    videos: Sequence[torch.Tensor],
                    batch: Sequence[ClipRef]) -> List[torch.Tensor]:
    """
    Embeds the frames of every clip in ``batch`` with one forward pass.
    """
    frames = torch.cat([videos[video_index][torch.as_tensor(clip) - 1] for video_index, clip in batch])
    embeddings = extract_features(params, frames)
    return list(torch.split(embeddings, [len(clip) for _, clip in batch]))


def _required_length(cfg: FederationConfig) -> int:
    if cfg.sampler.strategy == "uniform_strided":
        return (cfg.sampler.clip_size - 1) * cfg.sampler.stride + 1
    return cfg.sampler.clip_size


def epoch_clip_batches(client: ClientState, cfg: FederationConfig, rng: np.random.Generator) -> List[List[ClipRef]]:
    """
    Samples this epoch's clips from every training video and shuffles them into batches of
    ``clip_batch_size``. A trailing single clip cannot form a pair and is dropped.
    """
    clips: List[ClipRef] = []
    required = _required_length(cfg)
    for video_index, video in enumerate(client.videos):
        length = int(video.shape[0])
        if length < required:
            logger.warning("client %s: video %d has %d frames, fewer than the %d a clip needs; skipped",
                           client.client_id, video_index, length, required)
            continue
        clips.extend((video_index, clip) for clip in sample_video_clips(length, cfg.sampler, rng))
    if len(clips) < cfg.clip_batch_size:
        raise FederationError(f"client {client.client_id} has {len(clips)} clips, fewer than the "
                              f"batch size {cfg.clip_batch_size}")
    order = rng.permutation(len(clips))
    batches = [[clips[int(position)] for position in order[start:start + cfg.clip_batch_size]]
               for start in range(0, len(clips), cfg.clip_batch_size)]
    if len(batches[-1]) < 2:
        logger.debug("client %s: dropping a trailing batch of one clip", client.client_id)
        batches.pop()
    return batches


def local_unsupervised_epoch(client: ClientState,
                             global_params: ParameterSet,
                             cfg: FederationConfig,
                             rng: np.random.Generator) -> LocalUpdate:
    """
    One pass over the client's epoch clips minimizing the clip-batch cycle consistency
    objective. Only the feature extractor is updated.
    """
    if client.role != "unlabeled":
        raise FederationError(f"client {client.client_id} is {client.role}, not unlabeled")
    params = client.load_global(global_params, cfg)
    batches = epoch_clip_batches(client, cfg, rng)
    losses = []
    for batch in batches:
        loss = tcc_batch_objective(clip_embeddings(params, client.videos, batch), cfg.tcc)
        client.step(loss)
        losses.append(float(loss.detach()))
        logger.debug("client %s: clip batch loss %.6f", client.client_id, losses[-1])
    return LocalUpdate(client.client_id, client.snapshot(), float(np.mean(losses)), batches)


def labeled_batches(num_frames: int, batch_size: int, rng: np.random.Generator) -> List[np.ndarray]:
    order = rng.permutation(num_frames)
    return [order[start:start + batch_size] for start in range(0, num_frames, batch_size)]


def local_supervised_epoch(client: ClientState,
                           global_params: ParameterSet,
                           cfg: FederationConfig,
                           rng: np.random.Generator) -> LocalUpdate:
    """
    One shuffled pass over the labeled frames in batches of ``labeled_batch_size``
    minimizing the labeled objective; both the feature extractor and the classifier move.
    """
    if client.role != "labeled":
        raise FederationError(f"client {client.client_id} is {client.role}, not labeled")
    num_frames = int(client.frames.shape[0])
    if num_frames == 0:
        raise FederationError(f"labeled client {client.client_id} has no training frames")
    params = client.load_global(global_params, cfg)
    contrastive = cfg.supervised_contrastive()
    batches = labeled_batches(num_frames, cfg.labeled_batch_size, rng)
    losses = []
    for batch in batches:
        index = torch.as_tensor(batch)
        loss = labeled_objective(client.frames[index], client.labels[index], params, contrastive)
        client.step(loss)
        losses.append(float(loss.detach()))
        logger.debug("client %s: labeled batch loss %.6f", client.client_id, losses[-1])
    return LocalUpdate(client.client_id, client.snapshot(), float(np.mean(losses)), batches)
