"""
Clip samplers over a video of ``L`` frames. Frame ids are 1-based and every clip is a
strictly increasing tuple of ``k`` ids in ``[1, L]``.
"""
from typing import List, Literal, Tuple
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, PositiveInt

from fedcy.common.checks import SamplingError

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name

Clip = Tuple[int, ...]

STRATEGIES = ("partition", "uniform_strided", "random_offset")


class SamplerConfig(BaseModel):
    """
    Parameters
    ----------
    strategy : ``str``, optional (default = "partition")
        ``partition`` draws one frame from each of ``k`` equal partitions; ``uniform_strided``
        takes every ``stride``-th frame from a random offset; ``random_offset`` takes ``k``
        random frames after a random offset.
    clip_size : ``int``, optional (default = 16)
    stride : ``int``, optional (default = 1)
        Only used by ``uniform_strided``.
    clips_per_video : ``str``, optional (default = "multiple")
        ``single`` samples one clip per video per epoch, ``multiple`` samples ``floor(L/k)``.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    strategy: Literal["partition", "uniform_strided", "random_offset"] = "partition"
    clip_size: PositiveInt = 16
    stride: PositiveInt = 1
    clips_per_video: Literal["single", "multiple"] = "multiple"


def _check_fits(video_length: int, clip_size: int) -> None:
    if clip_size < 1:
        raise SamplingError(f"clip size must be positive, got {clip_size}")
    if video_length < clip_size:
        raise SamplingError(f"a video of {video_length} frames is shorter than a clip of {clip_size}")


def sample_uniform_strided(video_length: int, clip_size: int, stride: int, rng: np.random.Generator) -> Clip:
    """
    ``{o, o + s, ..., o + (k - 1) s}`` with the offset ``o`` uniform in ``[1, L - (k - 1) s]``.
    """
    if stride < 1:
        raise SamplingError(f"stride must be positive, got {stride}")
    span = (clip_size - 1) * stride
    if clip_size < 1 or span >= video_length:
        raise SamplingError(f"a video of {video_length} frames cannot hold {clip_size} frames "
                            f"at stride {stride}")
    offset = int(rng.integers(1, video_length - span + 1))
    return tuple(offset + index * stride for index in range(clip_size))


def sample_random_offset(video_length: int, clip_size: int, offset: int, rng: np.random.Generator) -> Clip:
    """
    ``k`` distinct ids from ``[o, L]``, uniform over such subsets, sorted ascending.
    """
    if offset < 1:
        raise SamplingError(f"offset must be at least 1, got {offset}")
    available = video_length - offset + 1
    if clip_size < 1 or available < clip_size:
        raise SamplingError(f"only {available} frames from offset {offset}, need {clip_size}")
    chosen = rng.choice(available, size=clip_size, replace=False)
    return tuple(int(offset + index) for index in np.sort(chosen))


def partition_bounds(video_length: int, clip_size: int) -> List[Tuple[int, int]]:
    """
    Inclusive ``(first, last)`` ids of each partition; partition ``i`` (1-based) covers
    ``(ceil((i - 1) L / k), ceil(i L / k)]``.
    """
    _check_fits(video_length, clip_size)
    # -(-a // b) is ceil(a / b) in integer arithmetic.
    edges = [-(-index * video_length // clip_size) for index in range(clip_size + 1)]
    return [(edges[index] + 1, edges[index + 1]) for index in range(clip_size)]


def sample_partitioned(video_length: int, clip_size: int, rng: np.random.Generator) -> Clip:
    """
    One uniform draw from each of the ``k`` partitions of ``[1, L]``.
    """
    return tuple(int(rng.integers(first, last + 1)) for first, last in partition_bounds(video_length, clip_size))


def sample_epoch_clips(video_length: int,
                       clip_size: int,
                       strategy: str,
                       rng: np.random.Generator,
                       stride: int = 1) -> List[Clip]:
    """
    ``floor(L / k)`` clips for one epoch. The partition strategy splits the video into that
    many contiguous blocks and partition-samples inside each, so clips are pairwise
    disjoint. The baseline strategies draw their offsets independently.
    """
    _check_fits(video_length, clip_size)
    num_clips = video_length // clip_size
    if strategy == "partition":
        block_edges = [index * video_length // num_clips for index in range(num_clips + 1)]
        clips = []
        for start, end in zip(block_edges, block_edges[1:]):
            local = sample_partitioned(end - start, clip_size, rng)
            clips.append(tuple(start + frame for frame in local))
        return clips
    return [_sample_one(video_length, clip_size, strategy, rng, stride) for _ in range(num_clips)]


def _sample_one(video_length: int,
                clip_size: int,
                strategy: str,
                rng: np.random.Generator,
                stride: int) -> Clip:
    if strategy == "partition":
        return sample_partitioned(video_length, clip_size, rng)
    if strategy == "uniform_strided":
        return sample_uniform_strided(video_length, clip_size, stride, rng)
    if strategy == "random_offset":
        _check_fits(video_length, clip_size)
        offset = int(rng.integers(1, video_length - clip_size + 2))
        return sample_random_offset(video_length, clip_size, offset, rng)
    raise SamplingError(f"unknown sampling strategy {strategy!r}, expected one of {STRATEGIES}")


def sample_video_clips(video_length: int,
                       cfg: SamplerConfig,
                       rng: np.random.Generator) -> List[Clip]:
    """
    The clips one video contributes to an epoch under ``cfg``.
    """
    if cfg.clips_per_video == "single":
        clips = [_sample_one(video_length, cfg.clip_size, cfg.strategy, rng, cfg.stride)]
    else:
        clips = sample_epoch_clips(video_length, cfg.clip_size, cfg.strategy, rng, stride=cfg.stride)
    logger.debug("sampled %d %s clips from a video of %d frames", len(clips), cfg.strategy, video_length)
    return clips
