"""The private Gaussian-projection release.

The mechanism takes an n x d data matrix with a declared row norm bound,
privately tests whether its smallest singular value clears a
noise-calibrated threshold, and releases an r x d Gaussian sketch: of the
data itself when the test passes, or of the data with a scaled identity
block appended when it fails. The appended branch turns downstream
least-squares into a ridge problem, handled by :mod:`dpols.ridge`.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from . import linalg
from .distributions import rng_from_seed, sample_gaussian_matrix, sample_laplace
from .exceptions import InvalidParameterError, RowBoundViolationError
from .ledger import BudgetLedger

W_VARIANTS = ("algorithm", "notation")


@dataclass(frozen=True)
class PrivacyBudget:
    """An (epsilon, delta) pair spent by a single release."""

    epsilon: float
    delta: float

    def __post_init__(self):
        if not self.epsilon > 0.0 or not math.isfinite(self.epsilon):
            raise InvalidParameterError(f"epsilon must be positive, got {self.epsilon!r}")
        if not 0.0 < self.delta < 1.0:
            raise InvalidParameterError(f"delta must lie in (0, 1), got {self.delta!r}")


@dataclass
class BoundedDataset:
    """An n x d matrix with a designated label column and a row norm bound.

    Construction enforces the bound: violating rows raise
    ``RowBoundViolationError`` unless ``clip=True`` rescales them onto the
    bound (clipping changes the data, so it is never implicit).
    """

    data: np.ndarray
    row_bound: float
    label_column: int = -1
    clipped_rows: int = 0

    def __post_init__(self):
        self.data = linalg.as_matrix(self.data, "data")
        self.row_bound = float(self.row_bound)
        if not self.row_bound > 0.0:
            raise InvalidParameterError(f"row_bound must be positive, got {self.row_bound!r}")
        d = self.data.shape[1]
        if self.label_column < 0:
            self.label_column += d
        if not 0 <= self.label_column < d:
            raise InvalidParameterError(f"label_column out of range for d={d}")
        norms = np.linalg.norm(self.data, axis=1)
        # small relative slack so clipped rows re-validate
        bad = np.flatnonzero(norms > self.row_bound * (1.0 + 1e-12))
        if bad.size:
            raise RowBoundViolationError(bad.tolist(), self.row_bound)

    @classmethod
    def from_features_labels(cls, x, y, row_bound: float, clip: bool = False) -> "BoundedDataset":
        """Assemble [X; y] with the label as the last column."""
        mat = linalg.as_matrix(x, "X")
        vec = linalg.as_vector(y, mat.shape[0], "y")
        data = np.column_stack([mat, vec])
        return cls.from_matrix(data, row_bound, label_column=-1, clip=clip)

    @classmethod
    def from_matrix(cls, data, row_bound: float, label_column: int = -1, clip: bool = False) -> "BoundedDataset":
        mat = linalg.as_matrix(data, "data")
        bound = float(row_bound)
        clipped = 0
        if clip:
            norms = np.linalg.norm(mat, axis=1)
            over = norms > bound
            clipped = int(np.count_nonzero(over))
            if clipped:
                mat = mat.copy()
                mat[over] *= (bound / norms[over])[:, None]
        return cls(mat, bound, label_column=label_column, clipped_rows=clipped)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def features(self) -> np.ndarray:
        keep = [c for c in range(self.d) if c != self.label_column]
        return self.data[:, keep]

    def labels(self) -> np.ndarray:
        return self.data[:, self.label_column]


def noise_magnitude_w(row_bound, budget: PrivacyBudget, r: int, variant: str = "algorithm") -> float:
    """The regularizer scale w paired with an r-row Gaussian sketch.

    ``variant="algorithm"`` uses w^2 = (8 B^2/eps)(sqrt(2 r ln(8/delta)) + 2 ln(8/delta));
    ``"notation"`` uses the smaller + ln(8/delta) additive term. The larger
    value is the default as the conservative choice for privacy.
    """
    b = float(row_bound)
    if not b > 0.0:
        raise InvalidParameterError(f"row_bound must be positive, got {row_bound!r}")
    if int(r) < 1:
        raise InvalidParameterError(f"sketch rows r must be >= 1, got {r!r}")
    if variant not in W_VARIANTS:
        raise InvalidParameterError(f"variant must be one of {W_VARIANTS}, got {variant!r}")
    log_term = math.log(8.0 / budget.delta)
    additive = 2.0 * log_term if variant == "algorithm" else log_term
    w2 = (8.0 * b * b / budget.epsilon) * (math.sqrt(2.0 * int(r) * log_term) + additive)
    return math.sqrt(w2)


@dataclass(frozen=True)
class GateDecision:
    """Outcome of the propose-test-release gate, with its noise draw kept for diagnostics."""

    passed: bool
    noise: float
    threshold: float
    sigma_min_sq: float

    def __bool__(self) -> bool:
        return self.passed


def ptr_gate(data, row_bound, budget: PrivacyBudget, w: float, rng) -> GateDecision:
    """Privately test whether the data's smallest singular value clears w.

    Compares sigma_min(A)^2 against w^2 + Z + 4 B^2 ln(1/delta)/eps with
    Z ~ Laplace(4 B^2/eps). The squared singular value has sensitivity
    2 B^2 under a row swap, which is what calibrates the Laplace scale.
    """
    mat = linalg.as_matrix(data, "data")
    b = float(row_bound)
    if not b > 0.0:
        raise InvalidParameterError(f"row_bound must be positive, got {row_bound!r}")
    wf = float(w)
    scale = 4.0 * b * b / budget.epsilon
    noise = sample_laplace(scale, rng_from_seed(rng))
    threshold = wf * wf + noise + scale * math.log(1.0 / budget.delta)
    sigma_min_sq = linalg.min_singular_value(mat) ** 2
    return GateDecision(
        passed=sigma_min_sq > threshold,
        noise=noise,
        threshold=threshold,
        sigma_min_sq=sigma_min_sq,
    )


def append_regularizer(a, w: float) -> np.ndarray:
    """Stack a w-scaled d x d identity block below the n x d matrix."""
    mat = linalg.as_matrix(a)
    wf = float(w)
    if not wf > 0.0:
        raise InvalidParameterError(f"w must be positive, got {w!r}")
    return np.vstack([mat, wf * np.eye(mat.shape[1])])


@dataclass
class ProjectionRelease:
    """An r x d sketch plus the metadata needed for inference on it.

    ``altered`` records which branch produced the sketch; ``n_public``
    carries the (public) original row count that degree-of-freedom
    corrections downstream depend on.
    """

    sketch: np.ndarray
    altered: bool
    r: int
    w: float
    n_public: int
    seed: int | None
    epsilon: float
    delta: float
    gate: GateDecision | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.sketch = linalg.as_matrix(self.sketch, "sketch")
        if self.sketch.shape[0] != self.r:
            raise InvalidParameterError(
                f"sketch has {self.sketch.shape[0]} rows, metadata says r={self.r}"
            )

    @property
    def d(self) -> int:
        return self.sketch.shape[1]

    def to_json(self) -> str:
        doc = {
            "r": self.r,
            "d": self.d,
            "altered": self.altered,
            "w": self.w,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "n_public": self.n_public,
            "seed": self.seed,
            "sketch": [float(v) for v in self.sketch.reshape(-1)],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "ProjectionRelease":
        doc = json.loads(text)
        sketch = np.asarray(doc["sketch"], dtype=float).reshape(doc["r"], doc["d"])
        return cls(
            sketch=sketch,
            altered=bool(doc["altered"]),
            r=int(doc["r"]),
            w=float(doc["w"]),
            n_public=int(doc["n_public"]),
            seed=doc["seed"],
            epsilon=float(doc["epsilon"]),
            delta=float(doc["delta"]),
        )


def project(
    dataset: BoundedDataset,
    budget: PrivacyBudget,
    r: int,
    seed: int | None = None,
    w_variant: str = "algorithm",
    ledger: BudgetLedger | None = None,
    projection_matrix=None,
) -> ProjectionRelease:
    """Run the full mechanism and return the released sketch.

    Deterministic given ``seed``: the gate noise and the Gaussian
    projection are drawn from one seeded stream. ``projection_matrix`` is
    a deterministic test hook replacing the Gaussian draw (a callable
    ``(rows, cols) -> ndarray`` or an array); releases built with it are
    not private.
    """
    if int(r) < 1:
        raise InvalidParameterError(f"sketch rows r must be >= 1, got {r!r}")
    r = int(r)
    rng = rng_from_seed(seed)
    w = noise_magnitude_w(dataset.row_bound, budget, r, variant=w_variant)
    gate = ptr_gate(dataset.data, dataset.row_bound, budget, w, rng)
    target = dataset.data if gate.passed else append_regularizer(dataset.data, w)
    if projection_matrix is None:
        rmat = sample_gaussian_matrix(r, target.shape[0], rng)
    elif callable(projection_matrix):
        rmat = np.asarray(projection_matrix(r, target.shape[0]), dtype=float)
    else:
        rmat = np.asarray(projection_matrix, dtype=float)
    if rmat.shape != (r, target.shape[0]):
        raise InvalidParameterError(
            f"projection matrix has shape {rmat.shape}, expected {(r, target.shape[0])}"
        )
    if ledger is not None:
        ledger.spend("gaussian_projection", budget.epsilon, budget.delta)
    return ProjectionRelease(
        sketch=rmat @ target,
        altered=not gate.passed,
        r=r,
        w=w,
        n_public=dataset.n,
        seed=seed if isinstance(seed, (int, np.integer)) else None,
        epsilon=budget.epsilon,
        delta=budget.delta,
        gate=gate,
    )


class PrivateProjection(BaseEstimator):
    """Estimator wrapper around :func:`project`.

    ``fit(X, y)`` assembles ``[X; y]`` (label last), runs the mechanism,
    and stores the release; ``fit_transform`` returns the sketch array.
    Like other one-shot reductions there is no out-of-sample ``transform``:
    the privacy guarantee covers exactly the fitted data.
    """

    def __init__(
        self,
        r: int = 100,
        epsilon: float = 1.0,
        delta: float = 1e-6,
        row_bound: float = 1.0,
        clip: bool = False,
        w_variant: str = "algorithm",
        random_state: int | None = None,
        ledger: BudgetLedger | None = None,
    ):
        self.r = r
        self.epsilon = epsilon
        self.delta = delta
        self.row_bound = row_bound
        self.clip = clip
        self.w_variant = w_variant
        self.random_state = random_state
        self.ledger = ledger

    def fit(self, X, y=None):
        if y is not None:
            dataset = BoundedDataset.from_features_labels(X, y, self.row_bound, clip=self.clip)
        elif isinstance(X, BoundedDataset):
            dataset = X
        else:
            dataset = BoundedDataset.from_matrix(X, self.row_bound, clip=self.clip)
        budget = PrivacyBudget(self.epsilon, self.delta)
        self.release_ = project(
            dataset,
            budget,
            self.r,
            seed=self.random_state,
            w_variant=self.w_variant,
            ledger=self.ledger,
        )
        self.altered_ = self.release_.altered
        self.w_ = self.release_.w
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X, y).release_.sketch
