"""
The phase workflow of a procedure: the first ``Q`` phases always happen in order, the
remaining ones in any order, and designated phases may happen more than once.
"""
from itertools import groupby
from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, model_validator

from fedcy.common.checks import WorkflowError

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name


class WorkflowModel(BaseModel):
    """
    Parameters
    ----------
    num_phases : ``int``, optional (default = 6)
    sequential_phases : ``int``, optional (default = ``num_phases - 2``)
        Length ``Q`` of the strictly ordered prefix ``1, ..., Q``.
    repeatable_phases : ``Tuple[int, ...]``, optional (default = the last phase)
        Phases after the prefix that may occur as more than one run.
    repeat_probability : ``float``, optional (default = 0.3)
        Chance that a repeatable phase gets a second run in a generated video.
    mean_durations : ``Tuple[float, ...]``, optional
        Mean run length in frames of each phase before the client's duration scale.
    duration_sigma : ``float``, optional (default = 0.3)
        Log-space standard deviation of the log-normal run lengths.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    num_phases: PositiveInt = 6
    sequential_phases: Optional[int] = Field(default=None, ge=0)
    repeatable_phases: Optional[Tuple[PositiveInt, ...]] = None
    repeat_probability: float = Field(default=0.3, ge=0.0, le=1.0)
    mean_durations: Optional[Tuple[PositiveFloat, ...]] = None
    duration_sigma: float = Field(default=0.3, ge=0.0)

    @model_validator(mode="after")
    def _check_phases(self) -> "WorkflowModel":
        if self.prefix_length > self.num_phases:
            raise ValueError(f"sequential_phases ({self.prefix_length}) exceeds num_phases ({self.num_phases})")
        for phase in self.repeatable:
            if not self.prefix_length < phase <= self.num_phases:
                raise ValueError(f"repeatable phase {phase} must come after the sequential prefix")
        if self.mean_durations is not None and len(self.mean_durations) != self.num_phases:
            raise ValueError(f"mean_durations has {len(self.mean_durations)} entries for "
                             f"{self.num_phases} phases")
        return self

    @property
    def prefix_length(self) -> int:
        if self.sequential_phases is not None:
            return self.sequential_phases
        return max(self.num_phases - 2, 0)

    @property
    def repeatable(self) -> Tuple[int, ...]:
        if self.repeatable_phases is not None:
            return self.repeatable_phases
        return (self.num_phases,) if self.num_phases > self.prefix_length else ()

    def mean_duration(self, phase: int) -> float:
        if self.mean_durations is not None:
            return float(self.mean_durations[phase - 1])
        return 12.0


def sample_phase_order(workflow: WorkflowModel, rng: np.random.Generator) -> List[int]:
    """
    The sequence of phase runs of one video: the ordered prefix, a random permutation of
    the remaining phases, and, with ``repeat_probability`` each, a second run of every
    repeatable phase placed so that it never touches its first run.
    """
    prefix = list(range(1, workflow.prefix_length + 1))
    tail = [int(phase) for phase in rng.permutation(np.arange(workflow.prefix_length + 1,
                                                              workflow.num_phases + 1))]
    for phase in workflow.repeatable:
        if len(tail) < 2 or rng.random() >= workflow.repeat_probability:
            continue
        if tail[-1] != phase:
            tail.append(phase)
        else:
            tail.insert(0, phase)
    return prefix + tail


def phase_runs(labels: Sequence[int]) -> List[int]:
    """
    Run-length compression of a label sequence: ``1,1,2,3,3`` becomes ``1,2,3``.
    """
    return [int(phase) for phase, _ in groupby(labels)]


def validate_workflow(labels: Sequence[int], workflow: WorkflowModel) -> bool:
    """
    Whether ``labels`` (1-based phase ids, one per frame) follows ``workflow``: the first
    runs are exactly ``1, ..., Q``, later runs only use phases after ``Q``, and only
    repeatable phases occur as more than one run.
    """
    labels = [int(label) for label in labels]
    if not labels:
        raise WorkflowError("cannot validate an empty label sequence")
    unknown = sorted({label for label in labels if not 1 <= label <= workflow.num_phases})
    if unknown:
        raise WorkflowError(f"unknown phase ids {unknown} for a workflow of {workflow.num_phases} phases")
    runs = phase_runs(labels)
    prefix_length = workflow.prefix_length
    if runs[:prefix_length] != list(range(1, prefix_length + 1)):
        return False
    tail = runs[prefix_length:]
    if any(phase <= prefix_length for phase in tail):
        return False
    repeatable = set(workflow.repeatable)
    seen = set()
    for phase in tail:
        if phase in seen and phase not in repeatable:
            return False
        seen.add(phase)
    return True
