from typing import Literal
import logging

from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, NonNegativeInt, PositiveInt

from fedcy.losses.contrastive import ContrastiveConfig
from fedcy.losses.cycle_consistency import TccConfig
from fedcy.sampling.clip_sampler import SamplerConfig

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name

MODES = ("fedcy", "fedcy_no_cont", "fedtcc", "fullsup_labeled_only", "fedavg_fullsup", "fullsup_all", "fullsup_each")

Mode = Literal["fedcy", "fedcy_no_cont", "fedtcc", "fullsup_labeled_only", "fedavg_fullsup", "fullsup_all",
               "fullsup_each"]

# Modes whose supervised objective is plain cross-entropy.
_CROSS_ENTROPY_ONLY = ("fedcy_no_cont", "fedtcc", "fullsup_labeled_only", "fedavg_fullsup", "fullsup_all",
                       "fullsup_each")


class FederationConfig(BaseModel):
    """
    Training protocol of one run.

    Parameters
    ----------
    mode : ``str``, optional (default = "fedcy")
        ``fedcy``: cross-entropy plus supervised contrastive on the labeled client, clip
        cycle consistency on the unlabeled ones. ``fedcy_no_cont``: the same without the
        contrastive term. ``fedtcc``: federated cycle-consistency pretraining on every
        client, then cross-entropy fine-tuning on the labeled client.
        ``fullsup_labeled_only``: cross-entropy on the labeled client alone.
        ``fedavg_fullsup``: every client trains with its labels revealed and both the
        feature extractor and the classifier are averaged. ``fullsup_all``: centralized
        cross-entropy on the pooled labeled data of every client. ``fullsup_each``: every
        client trains its own model on its own labels and nothing is shared.
    rounds_max : ``int``, optional (default = 40)
    min_epochs : ``int``, optional (default = 6)
        Rounds before a lack of validation improvement counts toward ``patience``.
    patience : ``int``, optional (default = 3)
    learning_rate, weight_decay : ``float``, optional (default = 5e-5)
        AdamW step size and decoupled weight decay.
    labeled_batch_size : ``int``, optional (default = 64)
        Frames per supervised batch.
    clip_batch_size : ``int``, optional (default = 2)
        Clips per cycle-consistency batch.
    pretrain_rounds : ``int``, optional (default = 30)
        Length of the ``fedtcc`` pretraining stage.
    num_workers : ``int``, optional (default = 1)
        Clients trained concurrently within a round; results do not depend on it.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    mode: Mode = "fedcy"
    rounds_max: PositiveInt = 40
    min_epochs: NonNegativeInt = 6
    patience: PositiveInt = 3
    learning_rate: NonNegativeFloat = 5e-5
    weight_decay: NonNegativeFloat = 5e-5
    labeled_batch_size: PositiveInt = 64
    clip_batch_size: int = Field(default=2, ge=2)
    pretrain_rounds: NonNegativeInt = 30
    tcc: TccConfig = TccConfig()
    contrastive: ContrastiveConfig = ContrastiveConfig()
    sampler: SamplerConfig = SamplerConfig()
    master_seed: int = 0
    num_workers: PositiveInt = 1

    def supervised_contrastive(self) -> ContrastiveConfig:
        """
        The contrastive config the labeled objective actually uses: ``lambda_c`` is forced
        to 0 in every mode except ``fedcy``.
        """
        if self.mode in _CROSS_ENTROPY_ONLY:
            return self.contrastive.model_copy(update={"lambda_c": 0.0})
        return self.contrastive

    @property
    def uses_unlabeled_clients(self) -> bool:
        return self.mode != "fullsup_labeled_only"

    @property
    def reveals_labels(self) -> bool:
        return self.mode in ("fedavg_fullsup", "fullsup_all", "fullsup_each")
