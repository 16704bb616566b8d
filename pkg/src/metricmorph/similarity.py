"""Point-set similarity between a drawing and a target shape."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import AlreadyAtTargetError, DegenerateDrawingError, SizeMismatchError

KINDS = {"greedy": K.SIM_GREEDY, "mse": K.SIM_MSE, "procrustes": K.SIM_PROCRUSTES}


def _pair(X, Y):
    X = np.ascontiguousarray(X, dtype=np.float64).reshape(-1, 2)
    Y = np.ascontiguousarray(Y, dtype=np.float64).reshape(-1, 2)
    if len(X) != len(Y):
        raise SizeMismatchError(f"point sets differ in size: {len(X)} vs {len(Y)}")
    if len(X) == 0:
        raise SizeMismatchError("point sets are empty")
    return X, Y


def sim_greedy(X, Y) -> float:
    """Greedy nearest-neighbour matching loss.

    Rows of ``X`` are consumed in stored order; each is matched to the
    nearest still-unmatched row of ``Y`` (lowest index on ties) and that
    distance is added to the loss. The result depends on the row order of
    ``X`` but not of ``Y``, and is never below the optimal assignment cost.
    """
    X, Y = _pair(X, Y)
    return float(K.greedy_sim(X, Y))


def sim_mse(X, Y) -> float:
    X, Y = _pair(X, Y)
    return float(K.mse_sim(X, Y))


def sim_procrustes(X, Y) -> float:
    """Residual in [0, 1] after best translation, uniform scale and rotation of X onto Y."""
    X, Y = _pair(X, Y)
    v = K.procrustes_sim(X, Y)
    if np.isnan(v):
        raise DegenerateDrawingError("procrustes needs point sets that are not all coincident")
    return float(v)


SIM_FUNCTIONS = {"greedy": sim_greedy, "mse": sim_mse, "procrustes": sim_procrustes}


def similarity(X, Y, kind: str = "greedy") -> float:
    try:
        return SIM_FUNCTIONS[kind](X, Y)
    except KeyError:
        raise ValueError(f"unknown similarity kind {kind!r}; choose from {sorted(SIM_FUNCTIONS)}") from None


def percent(current_loss: float, baseline_loss: float) -> float:
    """100 at the target, 0 at the start, negative when worse than the start."""
    if not baseline_loss > 0:
        raise AlreadyAtTargetError("baseline similarity loss is 0: drawing already matches the target")
    return 100.0 - current_loss / baseline_loss * 100.0


@dataclass(frozen=True)
class SimilarityReport:
    loss: float
    baseline_loss: float

    @property
    def percent(self) -> float:
        if self.loss == 0:
            return 100.0
        return percent(self.loss, self.baseline_loss)
