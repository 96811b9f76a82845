"""
Input sampling for MIMO training.

Each head draws its own training example per row. Per epoch every head has an
independent permutation of the training indices. With batch repetition R,
head 0's rows are repeated R times and the other heads draw from a fresh
permutation per repetition, so repeated examples get new partners. With
probability rho a row ties all heads to head 0's draw.
"""

from typing import Iterator

import numpy as np

from ensembench.backend.exceptions import ValidationError


class MimoSampler:
    """Index sampler yielding [rows, heads] index matrices for one epoch."""

    def __init__(self, n_train: int, heads: int, batch_size: int,
                 input_repetition: float = 0.0, batch_repetition: int = 1):
        if n_train < 1 or heads < 1 or batch_size < 1 or batch_repetition < 1:
            raise ValidationError(
                f"invalid MIMO sampler sizes: n_train={n_train}, heads={heads}, "
                f"batch_size={batch_size}, batch_repetition={batch_repetition}"
            )
        if not 0.0 <= input_repetition <= 1.0:
            raise ValidationError(f"input repetition must lie in [0, 1], got {input_repetition}")
        self.n_train = n_train
        self.heads = heads
        self.batch_size = batch_size
        self.input_repetition = input_repetition
        self.batch_repetition = batch_repetition

    def epoch(self, rng: np.random.Generator) -> Iterator[np.ndarray]:
        """Yield one index matrix per minibatch."""
        lead = rng.permutation(self.n_train)
        partners = [
            [rng.permutation(self.n_train) for _ in range(self.batch_repetition)]
            for _ in range(self.heads - 1)
        ]
        for start in range(0, self.n_train, self.batch_size):
            window = slice(start, start + self.batch_size)
            blocks = []
            for r in range(self.batch_repetition):
                columns = [lead[window]] + [perms[r][window] for perms in partners]
                blocks.append(np.stack(columns, axis=1))
            index = np.concatenate(blocks, axis=0)
            if self.input_repetition > 0 and self.heads > 1:
                tie = rng.random(len(index)) < self.input_repetition
                index[tie, 1:] = index[tie, :1]
            yield index
