from typing import List, Sequence
import logging

import numpy as np
import torch

from fedcy.data.client_dataset import SyntheticVideo
from fedcy.engine.functional import as_array
from fedcy.models.phase_recognizer import ParameterSet, classify, extract_features

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name


class PhasePredictor:
    """
    Frame-wise phase predictions of a global model. Ties between equally probable phases
    go to the lowest phase id.
    """
    def __init__(self, params: ParameterSet) -> None:
        self._params = params

    def predict_probabilities(self, frames: np.ndarray) -> np.ndarray:
        with torch.no_grad():
            probabilities = classify(self._params, extract_features(self._params, as_array(frames)))
        return probabilities.numpy()

    def predict_frames(self, frames: np.ndarray) -> np.ndarray:
        """
        Returns 1-based phase ids, one per row of ``frames``.
        """
        # np.argmax returns the first maximum.
        return np.argmax(self.predict_probabilities(frames), axis=1) + 1

    def predict_videos(self, videos: Sequence[SyntheticVideo]) -> List[np.ndarray]:
        return [self.predict_frames(video.frames) for video in videos]
