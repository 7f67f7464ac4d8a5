from typing import Dict, List, Sequence
import logging

import numpy as np
from sklearn.metrics import f1_score

from fedcy.common.checks import MetricError

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name


def _as_ids(values: Sequence[int], name: str, num_phases: int) -> np.ndarray:
    ids = np.asarray(values, dtype=np.int64).reshape(-1)
    outside = sorted({int(value) for value in ids if not 1 <= value <= num_phases})
    if outside:
        raise MetricError(f"{name} contain unknown phase ids {outside} (expected 1..{num_phases})")
    return ids


def macro_f1(predictions: Sequence[int],
             labels: Sequence[int],
             num_phases: int,
             exclude_absent: bool = True) -> float:
    """
    Unweighted mean of the per-phase F1 scores, with F1 = 0 for a phase that is predicted
    or present but never correctly predicted.

    Parameters
    ----------
    exclude_absent : ``bool``, optional (default = True)
        Leave phases that occur neither in ``predictions`` nor in ``labels`` out of the
        average. Otherwise they count as 0.
    """
    predicted = _as_ids(predictions, "predictions", num_phases)
    gold = _as_ids(labels, "labels", num_phases)
    if predicted.shape[0] != gold.shape[0]:
        raise MetricError(f"{predicted.shape[0]} predictions for {gold.shape[0]} labels")
    if gold.shape[0] == 0:
        raise MetricError("macro F1 of an empty sequence")
    if exclude_absent:
        phases = sorted(set(predicted.tolist()) | set(gold.tolist()))
    else:
        phases = list(range(1, num_phases + 1))
    return float(f1_score(gold, predicted, labels=phases, average="macro", zero_division=0))


class PhaseF1:
    """
    Accumulates predictions over batches or videos and reports macro F1 over everything
    seen since the last reset.
    """
    def __init__(self, num_phases: int, exclude_absent: bool = True) -> None:
        self._num_phases = num_phases
        self._exclude_absent = exclude_absent
        self._predictions: List[np.ndarray] = []
        self._labels: List[np.ndarray] = []

    def __call__(self, predictions: Sequence[int], labels: Sequence[int]) -> None:
        predicted = _as_ids(predictions, "predictions", self._num_phases)
        gold = _as_ids(labels, "labels", self._num_phases)
        if predicted.shape != gold.shape:
            raise MetricError(f"{predicted.shape[0]} predictions for {gold.shape[0]} labels")
        self._predictions.append(predicted)
        self._labels.append(gold)

    def get_metric(self, reset: bool = False) -> Dict[str, float]:
        if not self._labels:
            raise MetricError("no predictions have been recorded")
        score = macro_f1(np.concatenate(self._predictions), np.concatenate(self._labels),
                         self._num_phases, exclude_absent=self._exclude_absent)
        if reset:
            self.reset()
        return {"macro_f1": score}

    def reset(self) -> None:
        self._predictions = []
        self._labels = []
