from abc import ABC, abstractmethod
import logging

import numpy as np

logger = logging.getLogger(__name__)


class BaseObjective(ABC):
    """
    Base class for functions minimized by the optimizer

    Subclasses must return finite values for every vector inside the bounds;
    infeasible regions are encoded as large penalties, never exceptions.
    """
    def __init__(self, name: str):
        self.name = name
        self.evaluations = 0

    @abstractmethod
    def evaluate(self, values: np.ndarray) -> float:
        """
        Objective value of one design vector

        Args:
            values: Design vector, shape (D,)

        Returns:
            Finite objective value
        """
        pass

    def evaluate_batch(self, values: np.ndarray) -> np.ndarray:
        """
        Objective values for a stack of design vectors

        The default loops over evaluate(); vectorized objectives override it.

        Args:
            values: Design vectors, shape (m, D)

        Returns:
            Objective values, shape (m,)
        """
        return np.array([self.evaluate(v) for v in np.atleast_2d(values)])

    def __call__(self, values: np.ndarray) -> float:
        return self.evaluate(values)
