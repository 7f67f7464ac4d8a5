# pylint: disable=no-self-use,invalid-name
import json
import os

import pandas as pd
import pytest

from fedcy.commands import cmd_compare, cmd_generate, cmd_train, main
from fedcy.commands.train import (CHECKPOINT_FILE, EVALUATION_FILE, EVALUATION_TABLE, ROUNDS_FILE,
                                  checkpoint_file_name)
from fedcy.common.checks import ConfigurationError, DatasetError
from fedcy.common.testing import FedCyTestCase
from fedcy.common.util import read_json, read_jsonl
from fedcy.experiment import load_experiment_config
from fedcy.models import load_params

TINY = "experiment_tiny.json"


class TestTrain(FedCyTestCase):
    def setup_method(self):
        super().setup_method()
        self.data_dir = cmd_generate(self.fixture(TINY), out=str(self.TEST_DIR / "data"))

    def train(self, mode, seed=0, name=None):
        out = str(self.TEST_DIR / "runs" / (name or f"{mode}_{seed}"))
        return cmd_train(self.fixture(TINY), mode=mode, seed=seed, out=out, data_dir=self.data_dir)

    def accesses(self, run_dir):
        return read_json(os.path.join(run_dir, "data_access.json"))["accesses"]

    def test_run_directory(self):
        run_dir = self.train("fedcy")
        assert sorted(os.listdir(run_dir)) == sorted(["config.json", ROUNDS_FILE, CHECKPOINT_FILE, EVALUATION_FILE,
                                                      EVALUATION_TABLE, "data_access.json"])
        rounds = read_jsonl(os.path.join(run_dir, ROUNDS_FILE))
        assert 1 <= len(rounds) <= 3
        assert [record["round"] for record in rounds] == list(range(1, len(rounds) + 1))
        assert all(0.0 <= record["validation_f1"] <= 1.0 for record in rounds)
        evaluation = read_json(os.path.join(run_dir, EVALUATION_FILE))
        assert evaluation["format_version"] == 1
        assert (evaluation["mode"], evaluation["seed"], evaluation["split"]) == ("fedcy", 0, "test")
        assert evaluation["held_out"] is not None
        table = pd.read_csv(os.path.join(run_dir, EVALUATION_TABLE), sep="\t")
        assert list(table["client"]) == ["labeled", "unlabeled_1", "unlabeled_2", "overall_unlabeled",
                                         "overall_all", "held_out"]

    def test_checkpoint_is_the_best_round(self):
        run_dir = self.train("fedcy", seed=2)
        checkpoint = load_params(os.path.join(run_dir, CHECKPOINT_FILE))
        rounds = read_jsonl(os.path.join(run_dir, ROUNDS_FILE))
        best = max(record["validation_f1"] for record in rounds)
        assert checkpoint.lineage["validation_f1"] == best
        assert checkpoint.lineage["mode"] == "fedcy"
        assert checkpoint.lineage["master_seed"] == 2
        assert checkpoint.lineage["scenario_seed"] == 7
        assert rounds[checkpoint.lineage["round"] - 1]["validation_f1"] == best

    def test_rerun_gives_an_identical_checkpoint(self):
        first = self.train("fedcy", seed=1, name="first")
        second = self.train("fedcy", seed=1, name="second")
        with open(os.path.join(first, CHECKPOINT_FILE), "rb") as one, \
                open(os.path.join(second, CHECKPOINT_FILE), "rb") as other:
            assert one.read() == other.read()
        with open(os.path.join(first, ROUNDS_FILE), "rb") as one, \
                open(os.path.join(second, ROUNDS_FILE), "rb") as other:
            assert one.read() == other.read()

    def test_labeled_only_never_reads_unlabeled_clients_for_training(self):
        run_dir = self.train("fullsup_labeled_only")
        training = sorted({entry["file"] for entry in self.accesses(run_dir) if entry["stage"] == "train"})
        assert training == ["labeled.json"]
        evaluation = {entry["file"] for entry in self.accesses(run_dir) if entry["stage"] == "evaluate"}
        assert "held_out.json" in evaluation

    def test_held_out_client_never_trains(self):
        run_dir = self.train("fedcy")
        training = sorted({entry["file"] for entry in self.accesses(run_dir) if entry["stage"] == "train"})
        assert training == ["labeled.json", "unlabeled_1.json", "unlabeled_2.json"]

    def test_no_contrastive_mode_drops_the_contrastive_weight(self):
        run_dir = self.train("fedcy_no_cont")
        config = load_experiment_config(os.path.join(run_dir, "config.json"))
        assert config.federation.mode == "fedcy_no_cont"
        assert config.federation.contrastive.lambda_c > 0.0
        assert config.federation.supervised_contrastive().lambda_c == 0.0

    @pytest.mark.parametrize("mode", ["fedtcc", "fedavg_fullsup", "fullsup_all"])
    def test_baseline_modes(self, mode):
        run_dir = self.train(mode)
        evaluation = read_json(os.path.join(run_dir, EVALUATION_FILE))
        assert evaluation["mode"] == mode
        assert 0.0 <= evaluation["overall_unlabeled"] <= 1.0

    def test_each_client_trains_its_own_model(self):
        run_dir = self.train("fullsup_each")
        participants = ["labeled", "unlabeled_1", "unlabeled_2"]
        for client_id in participants:
            checkpoint = load_params(os.path.join(run_dir, checkpoint_file_name("fullsup_each", client_id)))
            assert checkpoint.lineage["client_id"] == client_id
        assert not os.path.exists(os.path.join(run_dir, CHECKPOINT_FILE))
        rounds = read_jsonl(os.path.join(run_dir, ROUNDS_FILE))
        assert {client for record in rounds for client in record["client_losses"]} == set(participants)
        assert all(len(record["client_losses"]) == 1 for record in rounds)
        evaluation = read_json(os.path.join(run_dir, EVALUATION_FILE))
        assert list(evaluation["per_client"]) == participants
        assert evaluation["held_out"] is not None
        training = sorted({entry["file"] for entry in self.accesses(run_dir) if entry["stage"] == "train"})
        assert training == ["labeled.json", "unlabeled_1.json", "unlabeled_2.json"]

    def test_default_run_directory(self, monkeypatch):
        monkeypatch.chdir(self.TEST_DIR)
        run_dir = cmd_train(self.fixture(TINY), mode="fullsup_labeled_only", seed=4, data_dir=self.data_dir)
        assert run_dir == os.path.join("runs", "tiny", "fullsup_labeled_only_seed4")
        assert os.path.exists(os.path.join(self.TEST_DIR, run_dir, CHECKPOINT_FILE))

    def test_model_must_fit_the_scenario(self):
        document = read_json(self.fixture(TINY))
        document["scenario"]["input_dim"] = 8
        document["model"]["input_dim"] = 8
        path = self.TEST_DIR / "wide.json"
        path.write_text(json.dumps(document))
        with pytest.raises(ConfigurationError):
            cmd_train(str(path), out=str(self.TEST_DIR / "runs" / "wide"), data_dir=self.data_dir)

    def test_missing_scenario(self):
        with pytest.raises(DatasetError):
            cmd_train(self.fixture(TINY), out=str(self.TEST_DIR / "runs" / "x"), data_dir=str(self.TEST_DIR / "none"))

    def test_command_line_and_comparison(self):
        runs = []
        for mode in ("fedcy", "fullsup_labeled_only", "fullsup_each"):
            for seed in (0, 1):
                out = str(self.TEST_DIR / "runs" / f"{mode}_{seed}")
                assert main(argv=["train", "--config", self.fixture(TINY), "--mode", mode, "--seed", str(seed),
                                  "--out", out, "--data-dir", self.data_dir]) == 0
                runs.append(out)
        frame = cmd_compare(runs, out=str(self.TEST_DIR / "comparison"))
        assert list(frame["mode"]) == ["fedcy", "fullsup_labeled_only", "fullsup_each"]
        assert list(frame["seeds"]) == ["0,1", "0,1", "0,1"]
        assert (frame["overall_unlabeled_std"] >= 0.0).all()
