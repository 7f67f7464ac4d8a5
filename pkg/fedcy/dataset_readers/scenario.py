"""
Scenario directories: ``manifest.json`` plus one JSON document per client. Reading goes
through ``ScenarioReader``, which records every file it opens together with the stage
("train", "evaluate") that asked for it.
"""
from typing import Any, Dict, List, Optional
import logging
import os

import numpy as np

from fedcy.common.checks import DatasetError
from fedcy.common.util import FORMAT_VERSION, PathLike, check_format_version, read_json, write_json
from fedcy.data.client_dataset import ClientDataset, SyntheticVideo
from fedcy.data.synthetic import Scenario, ScenarioConfig

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name

MANIFEST_NAME = "manifest.json"
ACCESS_LOG_NAME = "data_access.json"
CLIENT_KIND = "fedcy-client"
MANIFEST_KIND = "fedcy-scenario"


def client_document(dataset: ClientDataset) -> Dict[str, Any]:
    return {"format_version": FORMAT_VERSION,
            "kind": CLIENT_KIND,
            "client_id": dataset.client_id,
            "role": dataset.role,
            "generation_seed": dataset.generation_seed,
            "profile": dataset.profile,
            "videos": [{"split": split,
                        "frames": video.frames.tolist(),
                        "labels": [int(label) for label in video.labels]}
                       for video, split in zip(dataset.all_videos(), dataset.splits)]}


def client_file_name(client_id: str) -> str:
    return f"{client_id}.json"


def write_scenario(scenario: Scenario, directory: PathLike) -> None:
    """
    Writes one file per client and the manifest. Output is a pure function of the scenario,
    so regenerating from the same config and seed reproduces every file byte for byte.
    """
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as error:
        raise DatasetError(f"cannot create output directory {directory}: {error}") from error
    entries = []
    for dataset in scenario.clients:
        file_name = client_file_name(dataset.client_id)
        write_json(os.path.join(directory, file_name), client_document(dataset), compact=True)
        entries.append({"client_id": dataset.client_id,
                        "role": dataset.role,
                        "file": file_name,
                        "num_videos": len(dataset),
                        "num_training_frames": dataset.num_training_frames})
        logger.info("Wrote client %s to %s", dataset.client_id, os.path.join(directory, file_name))
    manifest = {"format_version": FORMAT_VERSION,
                "kind": MANIFEST_KIND,
                "master_seed": scenario.master_seed,
                "scenario": scenario.config.model_dump(mode="json"),
                "clients": entries}
    write_json(os.path.join(directory, MANIFEST_NAME), manifest)


def _dataset_from_document(document: Dict[str, Any], path: PathLike) -> ClientDataset:
    check_format_version(document, path)
    if document.get("kind") != CLIENT_KIND:
        raise DatasetError(f"{path} is not a client dataset (kind={document.get('kind')!r})")
    try:
        videos = [SyntheticVideo(np.asarray(video["frames"], dtype=np.float64),
                                 np.asarray(video["labels"], dtype=np.int64))
                  for video in document["videos"]]
        splits = [video["split"] for video in document["videos"]]
        return ClientDataset(document["client_id"], document["role"], videos, splits,
                             profile=document.get("profile"),
                             generation_seed=document.get("generation_seed"))
    except KeyError as error:
        raise DatasetError(f"{path} is missing the field {error}") from error


class ScenarioReader:
    """
    Lazily reads the clients of a scenario directory.

    Parameters
    ----------
    directory : ``str``
        A directory written by ``write_scenario``.
    """
    def __init__(self, directory: PathLike) -> None:
        self._directory = directory
        manifest_path = os.path.join(directory, MANIFEST_NAME)
        self._access_log: List[Dict[str, str]] = []
        logger.info("Reading scenario manifest from %s", manifest_path)
        self.manifest = read_json(manifest_path)
        check_format_version(self.manifest, manifest_path)
        if self.manifest.get("kind") != MANIFEST_KIND:
            raise DatasetError(f"{manifest_path} is not a scenario manifest")
        self._record("setup", MANIFEST_NAME)
        self.config = ScenarioConfig(**self.manifest["scenario"])
        self.master_seed = int(self.manifest["master_seed"])
        self._entries = {entry["client_id"]: entry for entry in self.manifest["clients"]}

    def _record(self, stage: str, file_name: str) -> None:
        self._access_log.append({"stage": stage, "file": file_name})

    def client_ids(self, role: Optional[str] = None) -> List[str]:
        return [client_id for client_id, entry in self._entries.items() if role is None or entry["role"] == role]

    @property
    def labeled_id(self) -> str:
        labeled = self.client_ids("labeled")
        if len(labeled) != 1:
            raise DatasetError(f"the manifest lists {len(labeled)} labeled clients, expected 1")
        return labeled[0]

    def read_client(self, client_id: str, stage: str) -> ClientDataset:
        if client_id not in self._entries:
            raise DatasetError(f"client {client_id!r} is not in the manifest")
        file_name = self._entries[client_id]["file"]
        path = os.path.join(self._directory, file_name)
        logger.info("Reading client dataset from %s", path)
        self._record(stage, file_name)
        return _dataset_from_document(read_json(path), path)

    def read_scenario(self, stage: str) -> Scenario:
        labeled = self.read_client(self.labeled_id, stage)
        unlabeled = [self.read_client(client_id, stage) for client_id in self.client_ids("unlabeled")]
        held_out_ids = self.client_ids("held_out")
        held_out = self.read_client(held_out_ids[0], stage) if held_out_ids else None
        return Scenario(labeled, unlabeled, held_out, self.config, self.master_seed)

    @property
    def access_log(self) -> List[Dict[str, str]]:
        return list(self._access_log)

    def files_read(self, stage: str) -> List[str]:
        return sorted({entry["file"] for entry in self._access_log if entry["stage"] == stage})

    def write_access_log(self, path: PathLike) -> None:
        write_json(path, {"format_version": FORMAT_VERSION, "accesses": self._access_log})
