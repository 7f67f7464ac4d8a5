from fedcy.sampling.clip_sampler import (Clip, SamplerConfig, partition_bounds, sample_epoch_clips,
                                         sample_partitioned, sample_random_offset,
                                         sample_uniform_strided, sample_video_clips)
