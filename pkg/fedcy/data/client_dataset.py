"""
One client's videos and their split assignment. Training code only ever sees a
``TrainingView``; the ground truth of unlabeled clients stays behind ``evaluation_view``.
"""
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple
import logging

import numpy as np

from fedcy.common.checks import DatasetError

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name

ROLES = ("labeled", "unlabeled", "held_out")
SPLITS = ("train", "validation", "test")


class SyntheticVideo(NamedTuple):
    frames: np.ndarray
    labels: np.ndarray

    @property
    def length(self) -> int:
        return int(self.frames.shape[0])


class TrainingView(NamedTuple):
    """
    The training split of a client as local training sees it. ``labels`` is ``None``
    unless the client is labeled or its labels were explicitly revealed.
    """
    client_id: str
    frames: List[np.ndarray]
    labels: Optional[List[np.ndarray]]

    @property
    def num_frames(self) -> int:
        return sum(int(video.shape[0]) for video in self.frames)

    def pooled(self) -> Tuple[np.ndarray, np.ndarray]:
        if self.labels is None:
            raise DatasetError(f"client {self.client_id} exposes no labels for training")
        return np.concatenate(self.frames), np.concatenate(self.labels)

    def without_labels(self) -> "TrainingView":
        return TrainingView(self.client_id, self.frames, None)


class ClientDataset:
    """
    Parameters
    ----------
    client_id : ``str``
    role : ``str``
        ``labeled``, ``unlabeled`` or ``held_out``.
    videos : ``Sequence[SyntheticVideo]``
    splits : ``Sequence[str]``
        The split of each video.
    profile : ``Dict``, optional
        JSON description of the client profile the videos were generated from.
    generation_seed : ``int``, optional
    """
    def __init__(self,
                 client_id: str,
                 role: str,
                 videos: Sequence[SyntheticVideo],
                 splits: Sequence[str],
                 profile: Optional[Dict] = None,
                 generation_seed: Optional[int] = None) -> None:
        if role not in ROLES:
            raise DatasetError(f"unknown client role {role!r}, expected one of {ROLES}")
        if len(videos) != len(splits):
            raise DatasetError(f"{len(videos)} videos but {len(splits)} split assignments")
        for split in splits:
            if split not in SPLITS:
                raise DatasetError(f"unknown split {split!r}, expected one of {SPLITS}")
        self.client_id = client_id
        self.role = role
        self._videos = list(videos)
        self.splits = list(splits)
        self.profile = profile or {}
        self.generation_seed = generation_seed

    def __len__(self) -> int:
        return len(self._videos)

    def split_indices(self, split: str) -> List[int]:
        return [index for index, assigned in enumerate(self.splits) if assigned == split]

    def has_split(self, split: str) -> bool:
        return bool(self.split_indices(split))

    @property
    def num_training_frames(self) -> int:
        return sum(self._videos[index].length for index in self.split_indices("train"))

    def training_view(self, reveal_labels: bool = False) -> TrainingView:
        """
        Frames of the training videos, with labels for the labeled client or when
        ``reveal_labels`` is set (the fully supervised baselines).
        """
        if self.role == "held_out":
            raise DatasetError(f"held-out client {self.client_id} never trains")
        videos = [self._videos[index] for index in self.split_indices("train")]
        labels = None
        if self.role == "labeled" or reveal_labels:
            labels = [video.labels for video in videos]
        return TrainingView(self.client_id, [video.frames for video in videos], labels)

    def evaluation_view(self, split: str) -> List[SyntheticVideo]:
        if split not in SPLITS:
            raise DatasetError(f"unknown split {split!r}, expected one of {SPLITS}")
        indices = self.split_indices(split)
        if not indices:
            raise DatasetError(f"client {self.client_id} has no {split} videos")
        return [self._videos[index] for index in indices]

    def all_videos(self) -> List[SyntheticVideo]:
        return list(self._videos)

    def __repr__(self) -> str:
        return f"ClientDataset({self.client_id!r}, role={self.role!r}, videos={len(self._videos)})"
