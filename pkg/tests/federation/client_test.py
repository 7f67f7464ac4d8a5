# pylint: disable=no-self-use,invalid-name
import numpy as np
import pytest
import torch

from fedcy.common.checks import FederationError
from fedcy.data import TrainingView
from fedcy.federation import (ClientState, clip_embeddings, epoch_clip_batches, local_supervised_epoch,
                              local_unsupervised_epoch)
from fedcy.losses import labeled_objective, mean_cross_entropy, one_hot_labels, tcc_batch_objective
from fedcy.models import classify, extract_features, init_params
from tests.federation.scenarios import MODEL, small_scenario, with_updates


def unlabeled_client(scenario, position=0):
    return ClientState(position + 1, scenario.unlabeled[position].training_view(), "unlabeled")


def labeled_client(scenario):
    return ClientState(0, scenario.labeled.training_view(), "labeled")


class TestClientState:
    def test_labeled_client_needs_labels(self):
        with pytest.raises(FederationError):
            ClientState(0, small_scenario().unlabeled[0].training_view(), "labeled")

    def test_unknown_role(self):
        with pytest.raises(FederationError):
            ClientState(0, small_scenario().labeled.training_view(), "held_out")

    def test_unlabeled_client_sees_no_labels(self):
        client = unlabeled_client(small_scenario())
        assert client.view.labels is None
        assert not hasattr(client, "labels")

    def test_payload_is_a_detached_snapshot(self):
        scenario = small_scenario()
        client = labeled_client(scenario)
        update = local_supervised_epoch(client, init_params(MODEL, 0), with_updates(), np.random.default_rng(0))
        assert set(vars(update.params)) == {"omega", "theta"}
        assert not any(value.requires_grad for _, value in update.params.items())
        local_supervised_epoch(client, update.params, with_updates(), np.random.default_rng(1))
        assert not update.params.equals(client.snapshot())


class TestEpochClipBatches:
    def test_batches_of_clips(self):
        client = unlabeled_client(small_scenario())
        cfg = with_updates(clip_batch_size=3)
        batches = epoch_clip_batches(client, cfg, np.random.default_rng(0))
        clips = [clip for batch in batches for clip in batch]
        expected = sum(int(video.shape[0]) // 4 for video in client.videos)
        assert len(clips) in (expected, expected - 1)
        assert all(2 <= len(batch) <= 3 for batch in batches)
        for video_index, clip in clips:
            assert len(clip) == 4
            assert clip[-1] <= client.videos[video_index].shape[0]

    def test_short_videos_are_skipped(self):
        view = TrainingView("c", [np.zeros((3, 6)), np.arange(54, dtype=np.float64).reshape(9, 6)], None)
        client = ClientState(1, view, "unlabeled")
        batches = epoch_clip_batches(client, with_updates(), np.random.default_rng(0))
        assert len(batches) == 1
        assert {video_index for video_index, _ in batches[0]} == {1}

    def test_too_few_clips(self):
        client = ClientState(1, TrainingView("c", [np.zeros((5, 6))], None), "unlabeled")
        with pytest.raises(FederationError):
            epoch_clip_batches(client, with_updates(), np.random.default_rng(0))

    def test_embeddings_of_each_clip(self):
        client = unlabeled_client(small_scenario())
        params = init_params(MODEL, 0)
        batch = [(0, (1, 2, 3, 4)), (0, (5, 6, 7, 8))]
        embeddings = clip_embeddings(params, client.videos, batch)
        np.testing.assert_allclose(embeddings[1].numpy(),
                                   extract_features(params, client.videos[0][4:8]).numpy(), rtol=1e-12)


class TestLocalUnsupervisedEpoch:
    def test_replayed_batches_give_the_mean_loss(self):
        scenario = small_scenario(1)
        client = unlabeled_client(scenario)
        cfg = with_updates(learning_rate=0.0, weight_decay=0.0)
        params = init_params(MODEL, 1)
        update = local_unsupervised_epoch(client, params, cfg, np.random.default_rng(3))
        replayed = [float(tcc_batch_objective(clip_embeddings(params, client.videos, batch), cfg.tcc))
                    for batch in update.batches]
        assert update.mean_loss == pytest.approx(np.mean(replayed), rel=1e-12)
        assert update.params.equals(params)

    def test_classifier_untouched(self):
        client = unlabeled_client(small_scenario())
        params = init_params(MODEL, 2)
        update = local_unsupervised_epoch(client, params, with_updates(learning_rate=0.05), np.random.default_rng(0))
        for name, value in params.theta.items():
            assert torch.equal(update.params.theta[name], value)
        assert not all(torch.equal(update.params.omega[name], value) for name, value in params.omega.items())

    def test_zero_cycle_weight_leaves_only_weight_decay(self):
        client = unlabeled_client(small_scenario())
        params = init_params(MODEL, 3)
        cfg = with_updates(learning_rate=0.1, weight_decay=0.5, tcc={"tau_tcc": 0.1, "lambda_t": 0.0})
        update = local_unsupervised_epoch(client, params, cfg, np.random.default_rng(0))
        shrink = (1.0 - 0.1 * 0.5) ** len(update.batches)
        for name, value in params.omega.items():
            np.testing.assert_allclose(update.params.omega[name].numpy(), value.numpy() * shrink,
                                       rtol=1e-12, atol=1e-15)

    def test_same_seed_same_result(self):
        scenario = small_scenario(2)
        params = init_params(MODEL, 2)
        first = local_unsupervised_epoch(unlabeled_client(scenario), params, with_updates(), np.random.default_rng(9))
        second = local_unsupervised_epoch(unlabeled_client(scenario), params, with_updates(), np.random.default_rng(9))
        assert first.params.equals(second.params)
        assert first.batches == second.batches
        assert first.mean_loss == second.mean_loss

    def test_labeled_client_is_rejected(self):
        scenario = small_scenario()
        with pytest.raises(FederationError):
            local_unsupervised_epoch(labeled_client(scenario), init_params(MODEL, 0), with_updates(),
                                     np.random.default_rng(0))


class TestLocalSupervisedEpoch:
    def test_replayed_batches_give_the_mean_loss(self):
        client = labeled_client(small_scenario(3))
        cfg = with_updates(learning_rate=0.0, weight_decay=0.0)
        params = init_params(MODEL, 3)
        update = local_supervised_epoch(client, params, cfg, np.random.default_rng(4))
        assert sorted(np.concatenate(update.batches).tolist()) == list(range(client.frames.shape[0]))
        assert all(len(batch) <= cfg.labeled_batch_size for batch in update.batches)
        replayed = []
        for batch in update.batches:
            rows = torch.as_tensor(batch)
            replayed.append(float(labeled_objective(client.frames[rows], client.labels[rows], params,
                                                    cfg.supervised_contrastive())))
        assert update.mean_loss == pytest.approx(np.mean(replayed), rel=1e-12)

    def test_zero_learning_rate_keeps_the_parameters(self):
        client = labeled_client(small_scenario())
        params = init_params(MODEL, 4)
        update = local_supervised_epoch(client, params, with_updates(learning_rate=0.0), np.random.default_rng(0))
        assert update.params.equals(params)

    def test_both_halves_move(self):
        client = labeled_client(small_scenario())
        params = init_params(MODEL, 5)
        update = local_supervised_epoch(client, params, with_updates(learning_rate=0.05), np.random.default_rng(0))
        assert not torch.equal(update.params.omega["embedding.weight"], params.omega["embedding.weight"])
        assert not torch.equal(update.params.theta["classifier.weight"], params.theta["classifier.weight"])

    def test_without_contrastive_term_is_cross_entropy(self):
        client = labeled_client(small_scenario())
        cfg = with_updates(mode="fedcy_no_cont", learning_rate=0.0, contrastive={"lambda_c": 5.0})
        assert cfg.supervised_contrastive().lambda_c == 0.0
        params = init_params(MODEL, 6)
        update = local_supervised_epoch(client, params, cfg, np.random.default_rng(0))
        cross_entropies = []
        for batch in update.batches:
            index = torch.as_tensor(batch)
            probabilities = classify(params, extract_features(params, client.frames[index]))
            cross_entropies.append(float(mean_cross_entropy(one_hot_labels(client.labels[index], 4), probabilities)))
        assert update.mean_loss == pytest.approx(np.mean(cross_entropies), rel=1e-12)

    def test_empty_dataset(self):
        view = TrainingView("c", [np.zeros((0, 6))], [np.zeros(0, dtype=np.int64)])
        with pytest.raises(FederationError):
            local_supervised_epoch(ClientState(0, view, "labeled"), init_params(MODEL, 0), with_updates(),
                                   np.random.default_rng(0))

    def test_unlabeled_client_is_rejected(self):
        with pytest.raises(FederationError):
            local_supervised_epoch(unlabeled_client(small_scenario()), init_params(MODEL, 0), with_updates(),
                                   np.random.default_rng(0))
