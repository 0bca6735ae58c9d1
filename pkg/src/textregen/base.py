"""Minimal estimator plumbing in the scikit-learn style.

Trainable components (n-gram predictors, the perceptron tagger, the
tf-idf classifier, the stylometry verifier, the embedding trainer) expose
``fit`` plus ``get_params``/``set_params`` so they compose with pipeline
tooling that duck-types against the sklearn estimator contract. We keep
the implementation local instead of importing sklearn: the introspection
below is all we need.
"""

import inspect

from .errors import ContractError, ValidationError


class BaseEstimator:
    """get_params/set_params derived from the subclass __init__ signature.

    Subclass __init__ must store every constructor argument under the
    same attribute name (the sklearn convention).
    """

    @classmethod
    def _param_names(cls):
        sig = inspect.signature(cls.__init__)
        return sorted(
            name
            for name, p in sig.parameters.items()
            if name != "self" and p.kind not in (p.VAR_POSITIONAL, p.VAR_KEYWORD)
        )

    def get_params(self, deep=True):
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for name, value in params.items():
            if name not in valid:
                raise ValidationError(
                    f"invalid parameter {name!r} for {type(self).__name__}; "
                    f"valid parameters are {sorted(valid)}"
                )
            setattr(self, name, value)
        return self

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"


def check_is_fitted(estimator, attribute):
    """Raise if the estimator has not been fitted yet."""
    if getattr(estimator, attribute, None) is None:
        raise ContractError(
            f"{type(estimator).__name__} is not fitted; call fit() first"
        )
