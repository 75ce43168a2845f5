"""Regression imputation: fit on complete cases, predict the missing
responses record-locally, clip into the universe."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core_data import Dataset, Universe, hamming_distance, n_mis
from .mechanisms import OlsFit, RandomSource, functional_mechanism_ols, ols_fit


class TooFewCompleteCasesError(ValueError):
    """Not enough fully observed records to fit the imputation model."""


@dataclass(frozen=True)
class ImputationModel:
    """Fitted model used to complete a dataset.

    Stochastic imputation draws N(0, sigma2_hat) around the prediction and is
    only allowed for non-private fits: a private fit carries no DP residual
    variance estimate, and drawing from the non-private one would leak it.
    """

    fit: OlsFit
    stochastic: bool
    universe: Universe

    def __post_init__(self):
        if self.stochastic and self.fit.private:
            raise ValueError(
                "stochastic imputation requires a non-private fit "
                "(no DP residual-variance estimate is available)"
            )


def fit_imputation_model(
    d: Dataset,
    privacy_epsilon: float | None,
    rng: RandomSource | None = None,
    stochastic: bool = False,
    intercept: bool = False,
) -> ImputationModel:
    """Fit the regression model on complete cases only.

    ``privacy_epsilon=None`` gives a plain OLS fit; a positive value fits via
    the functional mechanism at that budget.  The caller is responsible for
    recording the spend in its budget ledger.
    """
    complete = ~d.mask
    n_cc = int(complete.sum())
    p = d.d + (1 if intercept else 0)
    if n_cc < p + 1:
        raise TooFewCompleteCasesError(
            f"need at least {p + 1} complete cases, got {n_cc}"
        )
    x = d.covariates[complete]
    y = d.response[complete]
    if privacy_epsilon is None:
        fit = ols_fit(x, y, intercept=intercept)
    else:
        if rng is None:
            raise ValueError("a RandomSource is required for a private fit")
        fit = functional_mechanism_ols(
            x,
            y,
            privacy_epsilon,
            rng,
            intercept=intercept,
            response_bounds=d.universe.response_bounds,
        )
    return ImputationModel(fit=fit, stochastic=stochastic, universe=d.universe)


def impute(
    d: Dataset, model: ImputationModel, rng: RandomSource | None = None
) -> Dataset:
    """Complete the dataset: observed values are untouched, each missing
    response is predicted from its own covariate row and clipped into [a, b].

    Stochastic draws use per-record sub-streams keyed by record index, so
    the output is independent of processing order.
    """
    expected = d.d + (1 if model.fit.intercept else 0)
    if len(model.fit.beta) != expected:
        raise ValueError(
            f"model has {len(model.fit.beta)} coefficients, dataset needs {expected}"
        )
    if not d.mask.any():
        return d
    missing_idx = np.nonzero(d.mask)[0]
    preds = model.fit.predict(d.covariates[missing_idx])
    if model.stochastic:
        if rng is None:
            raise ValueError("a RandomSource is required for stochastic imputation")
        sd = float(np.sqrt(model.fit.sigma2_hat))
        noise = np.array(
            [rng.split(int(i)).normal(0.0, sd) for i in missing_idx]
        )
        preds = preds + noise
    lo, hi = d.universe.response_bounds
    response = np.array(d.response)
    response[missing_idx] = np.clip(preds, lo, hi)
    return Dataset(
        d.covariates, response, np.zeros(d.n, dtype=bool), d.universe
    )


def check_imputer_contract(
    imputer: Callable[[Dataset], Dataset], d: Dataset, d_neighbor: Dataset
) -> list[str]:
    """Verify the imputation-scheme assumptions on a neighbor pair.

    Checks that the completed datasets stay inside the universe, that
    observed values are bit-identical, and that the completed pair differs in
    at most n_mis + 1 records.  An empty list means ok.
    """
    if hamming_distance(d, d_neighbor) != 1:
        raise ValueError("inputs must be neighbors (hamming distance 1)")
    violations: list[str] = []
    completed = []
    for tag, original in (("D", d), ("D'", d_neighbor)):
        out = imputer(original)
        completed.append(out)
        if out.mask.any():
            violations.append(f"{tag}: output still has missing values")
        lo, hi = original.universe.response_bounds
        if ((out.response < lo) | (out.response > hi)).any():
            violations.append(f"{tag}: imputed dataset leaves the universe")
        obs = ~original.mask
        if not np.array_equal(
            out.response[obs], original.response[obs]
        ) or not np.array_equal(out.covariates, original.covariates):
            violations.append(f"{tag}: observed values were changed")
    dist = hamming_distance(completed[0], completed[1])
    bound = n_mis(d) + 1
    if dist > bound:
        violations.append(
            f"completed pair differs in {dist} records, bound is n_mis+1={bound}"
        )
    return violations
