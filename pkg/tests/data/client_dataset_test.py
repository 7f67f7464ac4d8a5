# pylint: disable=no-self-use,invalid-name
import numpy as np
import pytest

from fedcy.common.checks import DatasetError
from fedcy.data import ClientDataset, SyntheticVideo


def video(length, phase=1, dim=3):
    return SyntheticVideo(np.full((length, dim), float(phase)), np.full(length, phase, dtype=np.int64))


def client(role, splits=("train", "train", "validation", "test")):
    videos = [video(4 + index, phase=index + 1) for index in range(len(splits))]
    return ClientDataset(f"{role}_client", role, videos, list(splits), generation_seed=3)


class TestClientDataset:
    def test_split_bookkeeping(self):
        dataset = client("labeled")
        assert len(dataset) == 4
        assert dataset.split_indices("train") == [0, 1]
        assert dataset.has_split("test")
        assert dataset.num_training_frames == 9

    def test_labeled_client_trains_with_labels(self):
        view = client("labeled").training_view()
        assert view.num_frames == 9
        frames, labels = view.pooled()
        assert frames.shape == (9, 3)
        np.testing.assert_array_equal(labels, [1] * 4 + [2] * 5)

    def test_unlabeled_client_hides_labels(self):
        view = client("unlabeled").training_view()
        assert view.labels is None
        assert len(view.frames) == 2
        with pytest.raises(DatasetError):
            view.pooled()

    def test_revealed_labels(self):
        view = client("unlabeled").training_view(reveal_labels=True)
        _, labels = view.pooled()
        assert len(labels) == 9
        assert view.without_labels().labels is None

    def test_held_out_client_never_trains(self):
        dataset = client("held_out", splits=("test", "test"))
        with pytest.raises(DatasetError):
            dataset.training_view()
        assert len(dataset.evaluation_view("test")) == 2

    def test_evaluation_view_keeps_labels(self):
        videos = client("unlabeled").evaluation_view("validation")
        assert len(videos) == 1
        np.testing.assert_array_equal(videos[0].labels, [3] * 6)

    def test_evaluation_view_errors(self):
        dataset = client("unlabeled", splits=("train", "test"))
        with pytest.raises(DatasetError):
            dataset.evaluation_view("validation")
        with pytest.raises(DatasetError):
            dataset.evaluation_view("dev")

    @pytest.mark.parametrize("role,splits", [("server", ["train"]), ("labeled", ["dev"])])
    def test_bad_role_or_split(self, role, splits):
        with pytest.raises(DatasetError):
            ClientDataset("c", role, [video(3)], splits)

    def test_one_split_per_video(self):
        with pytest.raises(DatasetError):
            ClientDataset("c", "labeled", [video(3), video(3)], ["train"])
