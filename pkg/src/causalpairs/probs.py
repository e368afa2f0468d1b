"""Class-probability triple over the three causal labels."""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# Fixed bijection between labels {1, 0, -1} and class indices {0, 1, 2}.
# Serialized with every model so train/predict can never skew.
LABELS = (1, 0, -1)
LABEL_TO_CLASS = {1: 0, 0: 1, -1: 2}
CLASS_TO_LABEL = {0: 1, 1: 0, 2: -1}


@dataclass(frozen=True)
class ProbTriple:
    """(p_1, p_0, p_-1): probabilities of first-causes-second, neither, reverse."""

    p1: float
    p0: float
    p_neg1: float

    def __post_init__(self):
        vals = (self.p1, self.p0, self.p_neg1)
        if any(not np.isfinite(v) or v < -1e-12 or v > 1.0 + 1e-9 for v in vals):
            raise ValidationError(f"probabilities out of range: {vals}")
        if abs(sum(vals) - 1.0) > 1e-9:
            raise ValidationError(f"probabilities sum to {sum(vals)!r}, not 1")

    def as_array(self) -> np.ndarray:
        """Probabilities in class-index order (label 1, then 0, then -1)."""
        return np.array([self.p1, self.p0, self.p_neg1], dtype=np.float64)

    @classmethod
    def from_array(cls, arr) -> "ProbTriple":
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))
