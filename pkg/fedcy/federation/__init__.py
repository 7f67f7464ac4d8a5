from fedcy.federation.client import (ClientState, LocalUpdate, clip_embeddings, epoch_clip_batches,
                                     labeled_batches, local_supervised_epoch, local_unsupervised_epoch)
from fedcy.federation.config import MODES, FederationConfig
from fedcy.federation.early_stopping import EarlyStopping
from fedcy.federation.server import aggregate, data_fractions
from fedcy.federation.trainer import (Federation, RoundReport, TrainingResult, build_federation,
                                      client_rng, run_each_training, run_training)
