# pylint: disable=no-self-use,invalid-name
import itertools
import json

import numpy as np
import pytest
from pydantic import ValidationError
from sklearn.linear_model import LogisticRegression

from fedcy.common.checks import ConfigurationError
from fedcy.common.util import derive_rng
from fedcy.data import (ScenarioConfig, SplitFractions, WorkflowModel, build_profile,
                        generate_scenario, generate_video, reference_profile, validate_workflow)
from fedcy.data.synthetic import assign_splits, client_ids, sample_duration

SMALL = ScenarioConfig(input_dim=6,
                       workflow=WorkflowModel(num_phases=4, mean_durations=(4.0, 5.0, 3.0, 4.0)),
                       num_unlabeled_clients=2,
                       labeled_videos=5,
                       unlabeled_videos=3,
                       held_out_videos=2)


def generation_of(profile):
    """
    What decides the distribution of a client's videos, from a profile or its JSON document.
    """
    document = profile if isinstance(profile, dict) else profile.to_json()
    return (np.add(document["centroids"], document["shift"]).tolist(), document["duration_scale"],
            document["noise_sigma"], document["drift"], document["drift_directions"])


def phase_lengths(labels, phase):
    return int(np.sum(np.asarray(labels) == phase))


class TestScenarioConfig:
    def test_split_fractions_must_sum_to_one(self):
        with pytest.raises(ValidationError):
            SplitFractions(train=0.5, validation=0.2, test=0.2)

    def test_validation_split_is_required(self):
        with pytest.raises(ValidationError, match="greater than 0"):
            SplitFractions(train=0.8, validation=0.0, test=0.2)

    def test_input_dim_holds_the_centroids(self):
        with pytest.raises(ValidationError):
            ScenarioConfig(input_dim=3)

    def test_unknown_field(self):
        with pytest.raises(ValidationError):
            ScenarioConfig(num_clients=3)

    def test_client_ids(self):
        assert client_ids(SMALL) == ["labeled", "unlabeled_1", "unlabeled_2", "held_out"]
        assert client_ids(SMALL.model_copy(update={"held_out_videos": 0})) == ["labeled", "unlabeled_1",
                                                                               "unlabeled_2"]


class TestProfiles:
    def test_reference_centroids_are_equally_spaced(self):
        reference = reference_profile(ScenarioConfig(centroid_spacing=2.0), 0)
        centroids = reference.phase_centroids
        assert centroids.shape == (6, 16)
        for first, second in itertools.combinations(range(6), 2):
            assert np.linalg.norm(centroids[first] - centroids[second]) == pytest.approx(2.0, rel=1e-12)

    def test_zero_heterogeneity_reproduces_the_reference(self):
        config = ScenarioConfig(heterogeneity=0.0)
        reference = reference_profile(config, 5)
        for client_index in range(4):
            profile = build_profile(f"unlabeled_{client_index}", "unlabeled", reference, config,
                                    derive_rng(5, 11, client_index))
            assert generation_of(profile) == generation_of(reference)

    def test_shift_length_follows_the_knob(self):
        config = ScenarioConfig(heterogeneity=0.7, shift_scale=2.0)
        reference = reference_profile(config, 1)
        profile = build_profile("unlabeled_1", "unlabeled", reference, config, derive_rng(1, 11, 1))
        assert np.linalg.norm(profile.shift) == pytest.approx(1.4, rel=1e-12)
        assert generation_of(profile) != generation_of(reference)
        assert profile.noise_sigma >= reference.noise_sigma

    def test_forced_duration_scale(self):
        config = ScenarioConfig(heterogeneity=0.0)
        reference = reference_profile(config, 0)
        profile = build_profile("slow", "unlabeled", reference, config, derive_rng(0, 11, 0), duration_scale=2.0)
        assert profile.duration_scale == 2.0
        np.testing.assert_array_equal(profile.phase_centroids, reference.phase_centroids)

    def test_json_document(self):
        config = ScenarioConfig()
        reference = reference_profile(config, 2)
        profile = build_profile("unlabeled_3", "unlabeled", reference, config, derive_rng(2, 11, 3))
        restored = json.loads(json.dumps(profile.to_json()))
        assert (restored["client_id"], restored["role"]) == ("unlabeled_3", "unlabeled")
        assert generation_of(restored) == generation_of(profile)


class TestGenerateVideo:
    def test_noiseless_frames_sit_on_their_centroid(self):
        config = ScenarioConfig(noise_sigma=0.0, drift=0.0)
        profile = reference_profile(config, 0)
        video = generate_video(profile, config.workflow, np.random.default_rng(0))
        np.testing.assert_array_equal(video.frames, profile.phase_centroids[video.labels - 1])

    def test_every_video_follows_the_workflow(self):
        workflow = WorkflowModel(repeat_probability=0.5, duration_sigma=0.8)
        config = ScenarioConfig(workflow=workflow)
        profile = reference_profile(config, 3)
        rng = np.random.default_rng(3)
        for _ in range(200):
            video = generate_video(profile, workflow, rng)
            assert validate_workflow(video.labels, workflow)
            assert video.length >= workflow.num_phases
            assert video.frames.shape == (video.length, 16)

    def test_drift_is_linear_within_a_run(self):
        config = ScenarioConfig(noise_sigma=0.0, drift=1.0, workflow=WorkflowModel(duration_sigma=0.0))
        profile = reference_profile(config, 4)
        video = generate_video(profile, config.workflow, np.random.default_rng(4))
        first_run = video.frames[video.labels == 1]
        assert len(first_run) == 12
        steps = np.diff(first_run, axis=0)
        np.testing.assert_allclose(steps, np.tile(profile.drift_directions[0] / 12, (11, 1)), atol=1e-12)
        np.testing.assert_allclose(first_run.mean(axis=0), profile.phase_centroids[0], atol=1e-12)

    def test_mean_duration_matches_the_profile(self):
        config = ScenarioConfig(heterogeneity=0.0)
        reference = reference_profile(config, 6)
        profile = build_profile("slow", "unlabeled", reference, config, derive_rng(6, 11, 0), duration_scale=1.5)
        rng = np.random.default_rng(6)
        workflow = config.workflow
        durations = np.array([phase_lengths(generate_video(profile, workflow, rng).labels, 2)
                              for _ in range(1000)])
        expected = workflow.mean_duration(2) * 1.5
        standard_error = durations.std(ddof=1) / np.sqrt(len(durations))
        assert abs(durations.mean() - expected) < 3 * standard_error

    def test_duration_is_at_least_one_frame(self):
        rng = np.random.default_rng(7)
        assert min(sample_duration(0.2, 1.0, rng) for _ in range(500)) >= 1
        assert sample_duration(7.4, 0.0, rng) == 7


class TestAssignSplits:
    def test_counts(self):
        splits = assign_splits(10, SplitFractions(), np.random.default_rng(0))
        assert sorted(splits) == ["test"] * 2 + ["train"] * 6 + ["validation"] * 2

    def test_small_fractions_still_get_a_video(self):
        splits = assign_splits(3, SplitFractions(), np.random.default_rng(0))
        assert sorted(splits) == ["test", "train", "validation"]

    def test_no_test_videos(self):
        splits = assign_splits(5, SplitFractions(train=0.8, validation=0.2, test=0.0), np.random.default_rng(0))
        assert sorted(splits) == ["train"] * 4 + ["validation"]

    def test_too_few_videos(self):
        with pytest.raises(ConfigurationError):
            assign_splits(2, SplitFractions(), np.random.default_rng(0))


class TestGenerateScenario:
    def test_clients_and_roles(self):
        scenario = generate_scenario(SMALL, 0)
        assert [client.client_id for client in scenario.clients] == client_ids(SMALL)
        assert [client.role for client in scenario.clients] == ["labeled", "unlabeled", "unlabeled", "held_out"]
        assert [len(client) for client in scenario.clients] == [5, 3, 3, 2]
        assert scenario.held_out.splits == ["test", "test"]
        assert scenario.participants == scenario.clients[:3]
        assert scenario.client("unlabeled_2") is scenario.unlabeled[1]

    def test_unknown_client(self):
        with pytest.raises(ConfigurationError):
            generate_scenario(SMALL, 0).client("unlabeled_9")

    def test_without_held_out_client(self):
        scenario = generate_scenario(SMALL.model_copy(update={"held_out_videos": 0}), 0)
        assert scenario.held_out is None
        assert len(scenario.clients) == 3

    def test_same_seed_same_scenario(self):
        first, second = generate_scenario(SMALL, 11), generate_scenario(SMALL, 11)
        for one, other in zip(first.clients, second.clients):
            assert one.splits == other.splits
            assert one.profile == other.profile
            for video, copy in zip(one.all_videos(), other.all_videos()):
                np.testing.assert_array_equal(video.frames, copy.frames)
                np.testing.assert_array_equal(video.labels, copy.labels)

    def test_clients_draw_from_distinct_streams(self):
        config = SMALL.model_copy(update={"heterogeneity": 0.0})
        scenario = generate_scenario(config, 4)
        first, second = scenario.unlabeled
        assert not np.array_equal(first.all_videos()[0].frames[:3], second.all_videos()[0].frames[:3])

    def test_every_generated_video_follows_the_workflow(self):
        scenario = generate_scenario(SMALL, 8)
        for client in scenario.clients:
            assert client.generation_seed == 8
            for video in client.all_videos():
                assert validate_workflow(video.labels, SMALL.workflow)

    def test_zero_heterogeneity_gives_identical_profiles(self):
        config = SMALL.model_copy(update={"heterogeneity": 0.0})
        scenario = generate_scenario(config, 2)
        reference = reference_profile(config, 2)
        for client in scenario.clients:
            assert generation_of(client.profile) == generation_of(reference)

    def test_centroid_distance_grows_with_heterogeneity(self):
        distances = []
        for knob in (0.1, 0.3, 0.5, 1.0, 2.0):
            config = SMALL.model_copy(update={"heterogeneity": knob})
            scenario = generate_scenario(config, 3)
            centroids = [np.add(client.profile["centroids"], client.profile["shift"]) for client in scenario.clients]
            pairs = list(itertools.combinations(centroids, 2))
            distances.append(np.mean([np.linalg.norm(a - b, axis=1).mean() for a, b in pairs]))
        assert all(smaller < larger for smaller, larger in zip(distances, distances[1:]))

    def test_phases_are_linearly_separable(self):
        config = ScenarioConfig(noise_sigma=0.1, centroid_spacing=1.0, heterogeneity=0.0)
        profile = reference_profile(config, 0)
        rng = np.random.default_rng(0)
        train = [generate_video(profile, config.workflow, rng) for _ in range(10)]
        test = [generate_video(profile, config.workflow, rng) for _ in range(5)]
        classifier = LogisticRegression(max_iter=1000)
        classifier.fit(np.concatenate([video.frames for video in train]),
                       np.concatenate([video.labels for video in train]))
        accuracy = classifier.score(np.concatenate([video.frames for video in test]),
                                    np.concatenate([video.labels for video in test]))
        assert accuracy > 0.9
