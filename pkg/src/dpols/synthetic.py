"""Generative model for validation: Gaussian designs with linear labels.

Rows of the design are i.i.d. centered Gaussians with a known covariance,
labels are a fixed linear map plus independent Gaussian noise. The model
also knows the joint covariance of a (features, label) row and cheap
bounds on its spectrum, which the Monte Carlo harness leans on.
"""

import csv
import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import linalg
from .distributions import rng_from_seed
from .exceptions import InvalidInputError, InvalidParameterError


@dataclass
class GaussianLinearModel:
    """Ground-truth parameters: design covariance, coefficients, noise variance."""

    covariance: np.ndarray
    coef: np.ndarray
    noise_variance: float

    def __post_init__(self):
        self.covariance = linalg.symmetrize(self.covariance)
        self.coef = linalg.as_vector(self.coef, name="coef")
        if self.covariance.shape[0] != self.coef.size:
            raise InvalidInputError(
                f"covariance is {self.covariance.shape[0]}-dimensional but coef has length {self.coef.size}"
            )
        self.noise_variance = float(self.noise_variance)
        # zero collapses the label to the exact linear map (testing hook)
        if not self.noise_variance >= 0.0:
            raise InvalidParameterError(f"noise_variance must be nonnegative, got {self.noise_variance!r}")
        eigenvalues = np.linalg.eigvalsh(self.covariance)
        if eigenvalues[0] <= 0.0:
            raise InvalidInputError(
                f"covariance must be positive definite; smallest eigenvalue is {eigenvalues[0]:.6g}"
            )
        self._eigenvalues = eigenvalues

    @property
    def p(self) -> int:
        return self.coef.size

    def sqrt_factor(self) -> np.ndarray:
        """Symmetric square root of the covariance, via eigendecomposition."""
        values, vectors = np.linalg.eigh(self.covariance)
        return (vectors * np.sqrt(values)) @ vectors.T

    def to_json(self) -> str:
        return json.dumps(
            {
                "p": self.p,
                "Sigma": [float(v) for v in self.covariance.reshape(-1)],
                "beta": [float(v) for v in self.coef],
                "sigma2": self.noise_variance,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "GaussianLinearModel":
        doc = json.loads(text)
        p = int(doc["p"])
        return cls(
            covariance=np.asarray(doc["Sigma"], dtype=float).reshape(p, p),
            coef=np.asarray(doc["beta"], dtype=float),
            noise_variance=float(doc["sigma2"]),
        )


class SyntheticData(NamedTuple):
    x: np.ndarray
    y: np.ndarray
    noise: np.ndarray  # returned for oracle checks only


def generate_dataset(model: GaussianLinearModel, n: int, rng) -> SyntheticData:
    """n rows from the model; the noise vector rides along for oracles."""
    if int(n) < 1:
        raise InvalidParameterError(f"need n >= 1 rows, got {n!r}")
    gen = rng_from_seed(rng)
    x = gen.standard_normal((int(n), model.p)) @ model.sqrt_factor()
    noise = math.sqrt(model.noise_variance) * gen.standard_normal(int(n))
    return SyntheticData(x, x @ model.coef + noise, noise)


def build_sigma_a(model: GaussianLinearModel) -> np.ndarray:
    """Covariance of a joint (features, label) row.

    Blocks: the design covariance, its product with the coefficients on
    the border, and noise variance plus explained variance in the corner.
    """
    p = model.p
    sigma_beta = model.covariance @ model.coef
    out = np.zeros((p + 1, p + 1))
    out[:p, :p] = model.covariance
    out[:p, p] = sigma_beta
    out[p, :p] = sigma_beta
    out[p, p] = model.noise_variance + float(model.coef @ sigma_beta)
    return out


def sigma_a_min_bound(model: GaussianLinearModel) -> float:
    """Lower bound on the joint (features, label) covariance's smallest eigenvalue.

    Uses the symmetric-block eigenvalue bound
    ``(c + lam)/2 - sqrt((c + lam)^2/4 - sigma2 lam)`` with ``lam`` the
    smallest design eigenvalue and ``c`` the label variance. With zero
    coefficients this reduces to ``min(lam, sigma2)``; the plain
    ``min(lam, sigma2)`` is NOT a valid bound once the label correlates
    with the features, which is why the full expression is kept.
    """
    lam = float(model._eigenvalues[0])
    explained = float(model.coef @ (model.covariance @ model.coef))
    total = model.noise_variance + explained + lam
    return total / 2.0 - math.sqrt(total**2 / 4.0 - model.noise_variance * lam)


def empirical_row_bound(x, y) -> float:
    """Largest row norm of [X; y]."""
    mat = linalg.as_matrix(x, "X")
    vec = linalg.as_vector(y, mat.shape[0], "y")
    return float(np.sqrt(np.max(np.sum(mat**2, axis=1) + vec**2)))


def analytic_row_bound(model: GaussianLinearModel, n: int) -> float:
    """sqrt(log(n p) sigma_max(Sigma_A)): the model-based row-norm scale."""
    if int(n) < 1:
        raise InvalidParameterError(f"need n >= 1, got {n!r}")
    sigma_max = float(np.linalg.eigvalsh(build_sigma_a(model))[-1])
    return math.sqrt(math.log(int(n) * model.p) * sigma_max)


def dataset_to_csv(x, y, path) -> None:
    """Write a headered CSV with feature columns first and the label last."""
    mat = linalg.as_matrix(x, "X")
    vec = linalg.as_vector(y, mat.shape[0], "y")
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([f"x{i + 1}" for i in range(mat.shape[1])] + ["y"])
        for row, label in zip(mat, vec):
            writer.writerow([repr(v) for v in row] + [repr(label)])
