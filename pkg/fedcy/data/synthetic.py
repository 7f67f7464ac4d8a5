"""
Synthetic multicenter workflow data. Each client ("hospital") has a profile: phase
centroids in frame feature space (a shared reference plus a client shift), a duration
scale and a noise level. Videos are runs of phases in workflow order; each frame is its
phase centroid plus Gaussian noise plus a linear drift across the run.
"""
from typing import Dict, List, Optional
import logging
import math

import numpy as np
from pydantic import (BaseModel, ConfigDict, NonNegativeFloat, NonNegativeInt, PositiveFloat,
                      PositiveInt, model_validator)

from fedcy.common.checks import ConfigurationError, WorkflowError
from fedcy.common.util import derive_rng
from fedcy.data.client_dataset import ClientDataset, SyntheticVideo
from fedcy.data.workflow import WorkflowModel, sample_phase_order, validate_workflow

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name

# Stream ids under the master seed.
_REFERENCE_STREAM = 10
_PROFILE_STREAM = 11
_VIDEO_STREAM = 12
_SPLIT_STREAM = 13

SPLIT_TOLERANCE = 1e-9


class SplitFractions(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    train: PositiveFloat = 0.6
    validation: PositiveFloat = 0.2
    test: NonNegativeFloat = 0.2

    @model_validator(mode="after")
    def _sums_to_one(self) -> "SplitFractions":
        total = self.train + self.validation + self.test
        if abs(total - 1.0) > SPLIT_TOLERANCE:
            raise ValueError(f"split fractions must sum to 1, got {total}")
        return self


class ScenarioConfig(BaseModel):
    """
    Parameters
    ----------
    seed : ``int``, optional (default = 0)
        Master seed of the command line generator; ``generate_scenario`` takes it explicitly.
    input_dim : ``int``, optional (default = 16)
        Frame feature size; at least the number of phases so centroids can be orthogonal.
    num_unlabeled_clients : ``int``, optional (default = 4)
    labeled_videos, unlabeled_videos, held_out_videos : ``int``
        Videos per client of each role. ``held_out_videos = 0`` drops the held-out client.
    heterogeneity : ``float``, optional (default = 0.5)
        Scales every cross-client difference; 0 makes all clients identical to the reference.
    centroid_spacing : ``float``, optional (default = 1.0)
        Distance between any two reference phase centroids.
    shift_scale, duration_spread, noise_spread : ``float``
        Per unit of heterogeneity: length of the centroid shift, log-space standard deviation
        of the duration scale, and the largest relative noise increase.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    seed: int = 0
    input_dim: PositiveInt = 16
    workflow: WorkflowModel = WorkflowModel()
    num_unlabeled_clients: PositiveInt = 4
    labeled_videos: PositiveInt = 12
    unlabeled_videos: PositiveInt = 8
    held_out_videos: NonNegativeInt = 6
    split_fractions: SplitFractions = SplitFractions()
    heterogeneity: NonNegativeFloat = 0.5
    centroid_spacing: PositiveFloat = 1.0
    noise_sigma: NonNegativeFloat = 0.1
    drift: NonNegativeFloat = 0.05
    shift_scale: NonNegativeFloat = 1.0
    duration_spread: NonNegativeFloat = 0.3
    noise_spread: NonNegativeFloat = 0.5

    @model_validator(mode="after")
    def _room_for_centroids(self) -> "ScenarioConfig":
        if self.input_dim < self.workflow.num_phases:
            raise ValueError(f"input_dim ({self.input_dim}) must be at least num_phases "
                             f"({self.workflow.num_phases})")
        return self


class ClientProfile:
    """
    Generation parameters of one client. ``phase_centroids`` is the reference centroid
    matrix moved by the client's ``shift``.
    """
    def __init__(self,
                 client_id: str,
                 role: str,
                 centroids: np.ndarray,
                 shift: np.ndarray,
                 duration_scale: float,
                 noise_sigma: float,
                 drift: float,
                 drift_directions: np.ndarray) -> None:
        self.client_id = client_id
        self.role = role
        self.centroids = np.asarray(centroids, dtype=np.float64)
        self.shift = np.asarray(shift, dtype=np.float64)
        self.duration_scale = float(duration_scale)
        self.noise_sigma = float(noise_sigma)
        self.drift = float(drift)
        self.drift_directions = np.asarray(drift_directions, dtype=np.float64)

    @property
    def phase_centroids(self) -> np.ndarray:
        return self.centroids + self.shift

    def to_json(self) -> Dict:
        return {"client_id": self.client_id,
                "role": self.role,
                "centroids": self.centroids.tolist(),
                "shift": self.shift.tolist(),
                "duration_scale": self.duration_scale,
                "noise_sigma": self.noise_sigma,
                "drift": self.drift,
                "drift_directions": self.drift_directions.tolist()}


def _unit(vector: np.ndarray) -> np.ndarray:
    return vector / np.linalg.norm(vector)


def reference_profile(config: ScenarioConfig, master_seed: int) -> ClientProfile:
    """
    Orthogonal phase centroids of length ``spacing / sqrt(2)``, so every pair of centroids is
    ``spacing`` apart.
    """
    rng = derive_rng(master_seed, _REFERENCE_STREAM)
    num_phases = config.workflow.num_phases
    basis, _ = np.linalg.qr(rng.standard_normal((config.input_dim, num_phases)))
    centroids = basis.T * (config.centroid_spacing / math.sqrt(2.0))
    directions = np.stack([_unit(row) for row in rng.standard_normal((num_phases, config.input_dim))])
    return ClientProfile("reference", "reference", centroids, np.zeros(config.input_dim),
                         1.0, config.noise_sigma, config.drift, directions)


def build_profile(client_id: str,
                  role: str,
                  reference: ClientProfile,
                  config: ScenarioConfig,
                  rng: np.random.Generator,
                  duration_scale: Optional[float] = None) -> ClientProfile:
    """
    Moves ``reference`` by ``heterogeneity`` times a random client direction. Every random
    draw happens whatever the knob, so a client's shift is linear in it.
    """
    knob = config.heterogeneity
    direction = _unit(rng.standard_normal(config.input_dim))
    duration_draw = rng.standard_normal()
    noise_draw = rng.random()
    shift = knob * config.shift_scale * direction
    if duration_scale is None:
        duration_scale = float(np.exp(knob * config.duration_spread * duration_draw))
    noise_sigma = reference.noise_sigma * (1.0 + knob * config.noise_spread * noise_draw)
    return ClientProfile(client_id, role, reference.centroids, shift, duration_scale, noise_sigma,
                         reference.drift, reference.drift_directions)


def sample_duration(mean: float, sigma: float, rng: np.random.Generator) -> int:
    """
    A log-normal run length with the given mean, rounded and at least one frame.
    """
    if sigma == 0:
        return max(1, int(round(mean)))
    return max(1, int(round(rng.lognormal(math.log(mean) - sigma ** 2 / 2.0, sigma))))


def generate_video(profile: ClientProfile, workflow: WorkflowModel, rng: np.random.Generator) -> SyntheticVideo:
    centroids = profile.phase_centroids
    frames: List[np.ndarray] = []
    labels: List[np.ndarray] = []
    for phase in sample_phase_order(workflow, rng):
        duration = sample_duration(workflow.mean_duration(phase) * profile.duration_scale,
                                   workflow.duration_sigma, rng)
        position = (np.arange(duration) + 0.5) / duration - 0.5
        noise = rng.standard_normal((duration, centroids.shape[1]))
        frames.append(centroids[phase - 1]
                      + profile.noise_sigma * noise
                      + profile.drift * position[:, None] * profile.drift_directions[phase - 1])
        labels.append(np.full(duration, phase, dtype=np.int64))
    video = SyntheticVideo(np.concatenate(frames), np.concatenate(labels))
    if not validate_workflow(video.labels, workflow):
        raise WorkflowError(f"generated an invalid phase sequence for client {profile.client_id}")
    return video


def assign_splits(num_videos: int, fractions: SplitFractions, rng: np.random.Generator) -> List[str]:
    """
    Assigns whole videos to splits. Non-zero fractions get at least one video each; the
    validation fraction is never zero.
    """
    counts = {}
    for split in ("validation", "test"):
        fraction = getattr(fractions, split)
        counts[split] = max(1, int(round(fraction * num_videos))) if fraction > 0 else 0
    counts["train"] = num_videos - counts["validation"] - counts["test"]
    if counts["train"] < 1:
        raise ConfigurationError(f"{num_videos} videos cannot be split into {fractions.model_dump()}")
    ordered = ["train"] * counts["train"] + ["validation"] * counts["validation"] + ["test"] * counts["test"]
    splits = [""] * num_videos
    for position, video_index in enumerate(rng.permutation(num_videos)):
        splits[int(video_index)] = ordered[position]
    return splits


class Scenario:
    """
    A labeled client, ``M`` unlabeled clients and an optional held-out client.
    """
    def __init__(self,
                 labeled: ClientDataset,
                 unlabeled: List[ClientDataset],
                 held_out: Optional[ClientDataset],
                 config: ScenarioConfig,
                 master_seed: int) -> None:
        self.labeled = labeled
        self.unlabeled = list(unlabeled)
        self.held_out = held_out
        self.config = config
        self.master_seed = master_seed

    @property
    def participants(self) -> List[ClientDataset]:
        return [self.labeled] + self.unlabeled

    @property
    def clients(self) -> List[ClientDataset]:
        return self.participants + ([self.held_out] if self.held_out is not None else [])

    def client(self, client_id: str) -> ClientDataset:
        for dataset in self.clients:
            if dataset.client_id == client_id:
                return dataset
        raise ConfigurationError(f"no client {client_id!r} in the scenario")


def client_ids(config: ScenarioConfig) -> List[str]:
    ids = ["labeled"] + [f"unlabeled_{index}" for index in range(1, config.num_unlabeled_clients + 1)]
    if config.held_out_videos > 0:
        ids.append("held_out")
    return ids


def _role_of(client_id: str) -> str:
    return "unlabeled" if client_id.startswith("unlabeled") else client_id


def generate_scenario(config: ScenarioConfig, master_seed: int) -> Scenario:
    """
    Generates every client of the scenario from streams derived from ``master_seed``:
    the reference profile, then per client its profile, its videos and its split
    assignment. The held-out client keeps all its videos for testing.
    """
    reference = reference_profile(config, master_seed)
    datasets: Dict[str, ClientDataset] = {}
    for client_index, client_id in enumerate(client_ids(config)):
        role = _role_of(client_id)
        profile = build_profile(client_id, role, reference, config,
                                derive_rng(master_seed, _PROFILE_STREAM, client_index))
        num_videos = {"labeled": config.labeled_videos,
                      "unlabeled": config.unlabeled_videos,
                      "held_out": config.held_out_videos}[role]
        videos = [generate_video(profile, config.workflow,
                                 derive_rng(master_seed, _VIDEO_STREAM, client_index, video_index))
                  for video_index in range(num_videos)]
        if role == "held_out":
            splits = ["test"] * num_videos
        else:
            splits = assign_splits(num_videos, config.split_fractions,
                                   derive_rng(master_seed, _SPLIT_STREAM, client_index))
        datasets[client_id] = ClientDataset(client_id, role, videos, splits,
                                            profile=profile.to_json(), generation_seed=master_seed)
        logger.info("Generated %s client %s: %d videos, %d training frames",
                    role, client_id, num_videos, datasets[client_id].num_training_frames)
    unlabeled = [datasets[client_id] for client_id in client_ids(config) if client_id.startswith("unlabeled")]
    return Scenario(datasets["labeled"], unlabeled, datasets.get("held_out"), config, master_seed)
