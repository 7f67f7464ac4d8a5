from fedcy.losses.contrastive import ContrastiveConfig, ntxent, supervised_contrastive_batch
from fedcy.losses.cycle_consistency import (TccConfig, cycle_back_loss, cycle_back_losses,
                                            soft_nearest_neighbor, tcc_batch_objective,
                                            tcc_pair_loss)
from fedcy.losses.objectives import (LabeledTerms, cross_entropy, labeled_objective,
                                     labeled_objective_terms, mean_cross_entropy, one_hot_labels)
