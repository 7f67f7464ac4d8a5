import logging

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name


class EarlyStopping:
    """
    Tracks the best validation F1 from the first round on. A round without a strict
    improvement counts toward ``patience`` only once ``min_epochs`` rounds have run, and
    training stops when the count reaches ``patience``. A model whose F1 never improves
    therefore stops after exactly ``min_epochs + patience`` rounds.
    """
    def __init__(self, min_epochs: int, patience: int) -> None:
        self.min_epochs = min_epochs
        self.patience = patience
        self.best_f1 = float("-inf")
        self.best_round = 0
        self.rounds_without_improvement = 0
        self.stopped = False

    def update(self, round_index: int, f1: float) -> bool:
        """
        Records the validation F1 of ``round_index`` (1-based) and returns whether to stop.
        """
        if f1 > self.best_f1:
            self.best_f1 = f1
            self.best_round = round_index
            self.rounds_without_improvement = 0
        elif round_index > self.min_epochs:
            self.rounds_without_improvement += 1
        self.stopped = self.rounds_without_improvement >= self.patience
        if self.stopped:
            logger.info("Stopping after round %d: no improvement over %.4f (round %d) for %d rounds",
                        round_index, self.best_f1, self.best_round, self.rounds_without_improvement)
        return self.stopped

    def improved_at(self, round_index: int) -> bool:
        return self.best_round == round_index
