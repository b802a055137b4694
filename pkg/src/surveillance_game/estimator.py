"""Scikit-learn style facade over the partition builder.

GameSolver packages parameter handling, the fit step (building the arc
partition) and vectorized state queries behind the get_params/set_params/
fit/predict protocol.  The class is duck-typed: nothing here imports
scikit-learn, but clone-style workflows that only rely on that protocol
(read parameters, copy them into a fresh instance, fit, predict) work
unchanged.
"""

from __future__ import annotations

import math

import numpy as np

from .core import GameParams
from .errors import AlreadyEscapedError, InsideBodyError, ValidationError
from .partition import Partition, build_partition, locate

_PARAM_NAMES = ("v_r_max", "v_a_max", "b", "r_d", "resolution")


class GameSolver:
    """Time-optimal strategy solver with an estimator interface.

    Hyperparameters are stored verbatim at construction and only validated
    in fit, which builds the partition of the playing annulus.  predict
    maps reduced evader positions to escape times; strategy exposes the
    full control recommendation for a single state.
    """

    def __init__(self, v_r_max: float = 1.0, v_a_max: float = 2.0,
                 b: float = 1.0, r_d: float = 7.0, resolution: int = 400):
        self.v_r_max = v_r_max
        self.v_a_max = v_a_max
        self.b = b
        self.r_d = r_d
        self.resolution = resolution

    # -- parameter protocol -------------------------------------------------

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in _PARAM_NAMES}

    def set_params(self, **params) -> "GameSolver":
        for name, value in params.items():
            if name not in _PARAM_NAMES:
                raise ValidationError(
                    f"unknown parameter {name!r}; valid names: {', '.join(_PARAM_NAMES)}"
                )
            setattr(self, name, value)
        return self

    def __repr__(self) -> str:
        inner = ", ".join(f"{n}={getattr(self, n)!r}" for n in _PARAM_NAMES)
        return f"GameSolver({inner})"

    # -- fitting ------------------------------------------------------------

    def fit(self, X=None, y=None) -> "GameSolver":
        """Build the partition for the current parameters.

        X and y are accepted for interface compatibility and ignored: the
        solution is determined by the game parameters alone.
        """
        params = GameParams(self.v_r_max, self.v_a_max, self.b, self.r_d)
        self.partition_ = build_partition(params, resolution=self.resolution)
        self.regime_ = self.partition_.regime
        return self

    def _fitted(self) -> Partition:
        part = getattr(self, "partition_", None)
        if part is None:
            raise ValidationError("this GameSolver is not fitted; call fit first")
        return part

    # -- queries ------------------------------------------------------------

    def predict(self, X) -> np.ndarray:
        """Escape times for reduced evader positions.

        X is array-like of shape (n, 2) holding (x, y) in the frame fixed
        to the robot; a single pair is also accepted.  States beyond the
        detection circle have already escaped and map to 0; states inside
        the robot body are nonphysical and map to nan.
        """
        part = self._fitted()
        arr = np.asarray(X, dtype=float)
        if arr.ndim == 1:
            arr = arr[np.newaxis, :]
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValidationError(f"predict expects shape (n, 2), got {arr.shape}")
        out = np.empty(arr.shape[0])
        for i, (x, y) in enumerate(arr):
            try:
                out[i] = locate((float(x), float(y)), part).time_to_escape
            except AlreadyEscapedError:
                out[i] = 0.0
            except InsideBodyError:
                out[i] = math.nan
        return out

    def strategy(self, state):
        """Full strategy recommendation (controls, costate, region) at one state."""
        return locate(state, self._fitted())

    def score(self, X, y) -> float:
        """Negative mean relative error of predicted escape times against y."""
        pred = self.predict(X)
        ref = np.asarray(y, dtype=float)
        if ref.shape != pred.shape:
            raise ValidationError(f"y has shape {ref.shape}, expected {pred.shape}")
        mask = np.isfinite(pred) & np.isfinite(ref) & (ref != 0.0)
        if not mask.any():
            raise ValidationError("no finite reference times to score against")
        return -float(np.mean(np.abs(pred[mask] - ref[mask]) / np.abs(ref[mask])))
