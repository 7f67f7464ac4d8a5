# pylint: disable=no-self-use,invalid-name
import os

import numpy as np
import pandas as pd
import pytest

from fedcy.commands import cmd_compare
from fedcy.commands.compare import COMPARISON_CONFIG, COMPARISON_TABLE, COMPARISON_TEXT, format_comparison
from fedcy.commands.train import EVALUATION_FILE
from fedcy.common.checks import DatasetError
from fedcy.common.testing import FedCyTestCase
from fedcy.common.util import read_json, write_json
from fedcy.experiment import ExperimentConfig, save_experiment_config
from fedcy.metrics import EvaluationReport


class TestCompare(FedCyTestCase):
    def write_run(self, name, mode, seed, labeled, unlabeled, held_out=0.3):
        run_dir = self.TEST_DIR / name
        os.makedirs(run_dir)
        save_experiment_config(ExperimentConfig(), run_dir)
        report = EvaluationReport(mode=mode, seed=seed, split="test",
                                  per_client={"labeled": labeled, "unlabeled_1": unlabeled},
                                  unlabeled_clients=["unlabeled_1"], overall_unlabeled=unlabeled,
                                  overall_all=(labeled + unlabeled) / 2, held_out=held_out)
        write_json(run_dir / EVALUATION_FILE, {"format_version": 1, **report.model_dump(mode="json")})
        return str(run_dir)

    def test_single_run_has_zero_spread(self):
        run = self.write_run("fedcy_0", "fedcy", 0, 0.8, 0.6)
        frame = cmd_compare([run], out=str(self.TEST_DIR / "comparison"))
        assert list(frame.columns) == ["mode", "num_runs", "seeds",
                                       "labeled_mean", "labeled_std", "unlabeled_1_mean", "unlabeled_1_std",
                                       "overall_unlabeled_mean", "overall_unlabeled_std",
                                       "overall_all_mean", "overall_all_std", "held_out_mean", "held_out_std"]
        assert all(frame[column].iloc[0] == 0.0 for column in frame.columns if column.endswith("_std"))
        assert frame["overall_all_mean"].iloc[0] == pytest.approx(0.7)

    def test_modes_in_order_of_appearance(self):
        runs = [self.write_run("a", "fullsup_labeled_only", 0, 0.7, 0.4),
                self.write_run("b", "fedcy", 0, 0.8, 0.5),
                self.write_run("c", "fullsup_labeled_only", 1, 0.7, 0.6)]
        frame = cmd_compare(runs, out=str(self.TEST_DIR / "comparison"))
        assert list(frame["mode"]) == ["fullsup_labeled_only", "fedcy"]
        assert list(frame["num_runs"]) == [2, 1]
        assert frame["overall_unlabeled_mean"].iloc[0] == pytest.approx(0.5)
        assert frame["overall_unlabeled_std"].iloc[0] == pytest.approx(np.sqrt(0.02))

    def test_output_files(self):
        runs = [self.write_run("a", "fedcy", 3, 0.9, 0.55), self.write_run("b", "fedcy", 4, 0.9, 0.45)]
        out = self.TEST_DIR / "comparison"
        frame = cmd_compare(runs, out=str(out))
        table = pd.read_csv(out / COMPARISON_TABLE, sep="\t", dtype={"seeds": str})
        assert table["seeds"].tolist() == ["3,4"]
        np.testing.assert_allclose(table["overall_unlabeled_mean"], frame["overall_unlabeled_mean"], rtol=1e-12)
        text = (out / COMPARISON_TEXT).read_text(encoding="utf-8")
        assert "50.00 ± 7.07" in text
        snapshot = read_json(out / COMPARISON_CONFIG)
        assert snapshot["runs"] == [{"run_dir": runs[0], "mode": "fedcy", "seed": 3},
                                    {"run_dir": runs[1], "mode": "fedcy", "seed": 4}]

    def test_per_client_baseline_sits_next_to_the_federated_modes(self):
        runs = [self.write_run("fedcy_0", "fedcy", 0, 0.8, 0.5),
                self.write_run("each_0", "fullsup_each", 0, 0.9, 0.7, held_out=0.2),
                self.write_run("each_1", "fullsup_each", 1, 0.9, 0.5, held_out=0.4)]
        frame = cmd_compare(runs, out=str(self.TEST_DIR / "comparison"))
        assert list(frame["mode"]) == ["fedcy", "fullsup_each"]
        each = frame.set_index("mode").loc["fullsup_each"]
        assert each["overall_unlabeled_mean"] == pytest.approx(0.6)
        assert each["held_out_mean"] == pytest.approx(0.3)

    def test_format_uses_f1_points(self):
        frame = pd.DataFrame([{"mode": "fedcy", "num_runs": 1, "seeds": "0", "held_out_mean": 0.4321,
                               "held_out_std": 0.0}])
        assert "43.21 ± 0.00" in format_comparison(frame)

    def test_incomplete_run(self):
        run = self.write_run("a", "fedcy", 0, 0.5, 0.5)
        os.remove(os.path.join(run, EVALUATION_FILE))
        with pytest.raises(DatasetError):
            cmd_compare([run], out=str(self.TEST_DIR / "comparison"))

    def test_wrong_format_version(self):
        run = self.write_run("a", "fedcy", 0, 0.5, 0.5)
        document = read_json(os.path.join(run, EVALUATION_FILE))
        document["format_version"] = 9
        write_json(os.path.join(run, EVALUATION_FILE), document)
        with pytest.raises(DatasetError):
            cmd_compare([run], out=str(self.TEST_DIR / "comparison"))

    def test_nothing_to_compare(self):
        with pytest.raises(DatasetError):
            cmd_compare([], out=str(self.TEST_DIR / "comparison"))
