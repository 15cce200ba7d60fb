from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError


class StateEstimator(BaseEstimator):
    """Base for the optimizers: hyperparameters via get_params/set_params,
    ``fit(state)`` stores results in trailing-underscore attributes."""

    _fitted_attr = "value_"

    def _check_fitted(self):
        if not hasattr(self, self._fitted_attr):
            raise NotFittedError(
                f"This {type(self).__name__} instance is not fitted yet; call fit(state) first."
            )
