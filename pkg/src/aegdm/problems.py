"""Objective families with closed-form gradients, plus sampling utilities.

Three kinds of objectives feed the optimizers:

* deterministic test functions (Rosenbrock, shifted quadratics),
* finite sums over synthetic datasets (least squares, logistic) with
  uniform size-b minibatch sampling,
* online sequences of convex costs with a known best fixed comparator.

Every closed-form gradient is independently checkable against the central
finite-difference oracle at the bottom of the module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Evaluation",
    "InvalidBatch",
    "NonSPD",
    "Rosenbrock",
    "Quadratic",
    "FiniteSumProblem",
    "LeastSquaresProblem",
    "LogisticProblem",
    "OnlineQuadraticSequence",
    "rosenbrock_eval",
    "quadratic_eval",
    "least_squares_component",
    "logistic_component",
    "b_minibatch_sample",
    "minibatch_xi",
    "online_quadratic_sequence",
    "finite_difference_gradient",
    "make_synthetic_dataset",
    "dump_dataset_csv",
    "load_dataset_csv",
]


class InvalidBatch(ValueError):
    """Minibatch size outside [1, m]."""


class NonSPD(ValueError):
    """Quadratic matrix failed the symmetric-positive-definite check."""


@dataclass(frozen=True)
class Evaluation:
    """Objective value and gradient at one point, with sampling metadata.

    For finite-sum problems the value is the scaled-indicator weighted
    average over sample_ids (equivalently the plain mean over the drawn
    minibatch); sample_ids is None for deterministic or full-batch
    evaluations.
    """

    value: float
    gradient: np.ndarray
    t: int = 0
    sample_ids: tuple[int, ...] | None = None


# ---------------------------------------------------------------------------
# deterministic test functions
# ---------------------------------------------------------------------------

class Rosenbrock:
    """f(x1, x2) = (1 - x1)^2 + 100 (x2 - x1^2)^2.

    Global minimum 0 at (1, 1), reached through a long, narrow parabolic
    valley; the classic stress test for momentum and step-size adaptation.
    """

    dim = 2
    f_star = 0.0
    default_theta0 = (-3.0, -4.0)
    c_min = 0.0  # f >= 0 everywhere

    def evaluate(self, theta, t: int = 0, rng=None, batch_size=None) -> Evaluation:
        x1 = float(theta[0])
        x2 = float(theta[1])
        gap = x2 - x1 * x1
        value = (1.0 - x1) ** 2 + 100.0 * gap * gap
        grad = np.array([-2.0 * (1.0 - x1) - 400.0 * x1 * gap, 200.0 * gap])
        return Evaluation(value=value, gradient=grad, t=t)


def rosenbrock_eval(theta) -> Evaluation:
    return Rosenbrock().evaluate(theta)


class Quadratic:
    """f(theta) = 0.5 theta'Q theta - b'theta + shift with Q symmetric PD.

    The default shift places the minimum value at exactly 0, so the energy
    shift c = 1 keeps f + c >= 1 everywhere.  The smoothness constant is
    the largest eigenvalue of Q.
    """

    def __init__(self, Q, b=None, shift: float | None = None):
        Q = np.asarray(Q, dtype=np.float64)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise NonSPD("Q must be a square matrix")
        if not np.allclose(Q, Q.T, rtol=1e-12, atol=1e-12):
            raise NonSPD("Q must be symmetric")
        try:
            np.linalg.cholesky(Q)
        except np.linalg.LinAlgError as exc:
            raise NonSPD("Q must be positive definite") from exc
        self.Q = Q
        self.b = np.zeros(Q.shape[0]) if b is None else np.asarray(b, np.float64)
        self.theta_star = np.linalg.solve(Q, self.b)
        raw_min = 0.5 * float(self.theta_star @ Q @ self.theta_star) \
            - float(self.b @ self.theta_star)
        self.shift = -raw_min if shift is None else float(shift)
        self.f_star = raw_min + self.shift
        self.dim = Q.shape[0]
        self.default_theta0 = tuple(np.ones(self.dim))
        self.c_min = -self.f_star

    @classmethod
    def diagonal(cls, dim: int, cond: float = 10.0) -> "Quadratic":
        """Diagonal family with eigenvalues log-spaced from 1 to cond."""
        return cls(np.diag(np.logspace(0.0, np.log10(cond), dim)))

    def evaluate(self, theta, t: int = 0, rng=None, batch_size=None) -> Evaluation:
        theta = np.asarray(theta, np.float64)
        q_theta = self.Q @ theta
        value = 0.5 * float(theta @ q_theta) - float(self.b @ theta) + self.shift
        return Evaluation(value=value, gradient=q_theta - self.b, t=t)

    def smoothness(self) -> float:
        return float(np.linalg.eigvalsh(self.Q).max())


def quadratic_eval(theta, Q, b=None) -> Evaluation:
    return Quadratic(Q, b).evaluate(theta)


# ---------------------------------------------------------------------------
# finite sums over datasets
# ---------------------------------------------------------------------------

def least_squares_component(theta, x, y: float, l2: float = 0.0) -> Evaluation:
    """Per-sample squared loss 0.5 (x'theta - y)^2 (+ ridge term)."""
    theta = np.asarray(theta, np.float64)
    x = np.asarray(x, np.float64)
    residual = float(x @ theta) - y
    value = 0.5 * residual * residual
    grad = residual * x
    if l2:
        value += 0.5 * l2 * float(theta @ theta)
        grad = grad + l2 * theta
    return Evaluation(value=value, gradient=grad)


def _sigmoid(z):
    # stable on both tails
    out = np.empty_like(z)
    pos = z >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_component(theta, x, y: float, l2: float = 0.0) -> Evaluation:
    """Per-sample logistic loss log(1 + exp(-y x'theta)) with y in {-1, +1}.

    The loss is bounded below by 0, so any shift c >= 1 certifies
    positivity of f + c along every trajectory.
    """
    theta = np.asarray(theta, np.float64)
    x = np.asarray(x, np.float64)
    z = -y * float(x @ theta)
    value = float(np.logaddexp(0.0, z))
    grad = (-y * float(_sigmoid(np.array([z]))[0])) * x
    if l2:
        value += 0.5 * l2 * float(theta @ theta)
        grad = grad + l2 * theta
    return Evaluation(value=value, gradient=grad)


class FiniteSumProblem:
    """Average loss (1/m) sum_j L_j(theta) over a fixed dataset.

    Subclasses implement the vectorized per-component losses; evaluation
    with batch_size < m draws a uniform size-b subset and averages over it,
    which is exactly the scaled-indicator sampling-vector estimate and is
    unbiased for the full average.  batch_size in (None, m) evaluates the
    full sum deterministically without touching the RNG.
    """

    def __init__(self, X, y, l2: float = 0.0):
        self.X = np.asarray(X, np.float64)
        self.y = np.asarray(y, np.float64)
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X and y row counts differ")
        self.l2 = float(l2)
        self.m, self.dim = self.X.shape
        self.c_min = 0.0  # both loss families are bounded below by 0
        self.default_theta0 = tuple(np.zeros(self.dim))
        self._f_star = None

    # subclasses: (values (k,), grads (k, n)) for rows `ids` at theta
    def component_losses(self, theta, ids):
        raise NotImplementedError

    def evaluate(self, theta, t: int = 0, rng=None, batch_size=None) -> Evaluation:
        b = self.m if batch_size is None else int(batch_size)
        if not 1 <= b <= self.m:
            raise InvalidBatch(f"batch size {b} outside [1, {self.m}]")
        if b == self.m:
            ids = np.arange(self.m)
            sample_ids = None
        else:
            if rng is None:
                raise ValueError("minibatch evaluation needs an rng")
            ids = rng.choice(self.m, size=b, replace=False)
            sample_ids = tuple(int(i) for i in ids)
        values, grads = self.component_losses(np.asarray(theta, np.float64), ids)
        return Evaluation(value=float(values.mean()),
                          gradient=grads.mean(axis=0),
                          t=t, sample_ids=sample_ids)

    def evaluate_weighted(self, theta, xi) -> Evaluation:
        """(1/m) sum_j xi_j L_j(theta): the sampling-vector form of the loss."""
        xi = np.asarray(xi, np.float64)
        values, grads = self.component_losses(np.asarray(theta, np.float64),
                                              np.arange(self.m))
        return Evaluation(value=float((xi * values).sum() / self.m),
                          gradient=(xi[:, None] * grads).sum(axis=0) / self.m)

    def smoothness(self) -> float:
        raise NotImplementedError

    @property
    def f_star(self):
        return self._f_star


class LeastSquaresProblem(FiniteSumProblem):
    def component_losses(self, theta, ids):
        Xb = self.X[ids]
        residual = Xb @ theta - self.y[ids]
        values = 0.5 * residual * residual
        grads = residual[:, None] * Xb
        if self.l2:
            values = values + 0.5 * self.l2 * float(theta @ theta)
            grads = grads + self.l2 * theta
        return values, grads

    def smoothness(self) -> float:
        return float(np.linalg.eigvalsh(self.X.T @ self.X).max() / self.m + self.l2)

    @property
    def f_star(self):
        if self._f_star is None:
            A = self.X.T @ self.X / self.m + self.l2 * np.eye(self.dim)
            w = np.linalg.solve(A, self.X.T @ self.y / self.m)
            self._f_star = float(self.evaluate(w).value)
        return self._f_star


class LogisticProblem(FiniteSumProblem):
    def component_losses(self, theta, ids):
        Xb = self.X[ids]
        z = -self.y[ids] * (Xb @ theta)
        values = np.logaddexp(0.0, z)
        grads = (-self.y[ids] * _sigmoid(z))[:, None] * Xb
        if self.l2:
            values = values + 0.5 * self.l2 * float(theta @ theta)
            grads = grads + self.l2 * theta
        return values, grads

    def smoothness(self) -> float:
        return float(np.linalg.eigvalsh(self.X.T @ self.X).max() / (4.0 * self.m)
                     + self.l2)


# ---------------------------------------------------------------------------
# minibatch sampling vectors
# ---------------------------------------------------------------------------

def minibatch_xi(m: int, ids) -> np.ndarray:
    """Scaled indicator xi = (m/b) * sum_{i in ids} e_i over a size-b subset."""
    ids = np.asarray(ids, dtype=np.intp)
    b = ids.size
    if not 1 <= b <= m:
        raise InvalidBatch(f"batch size {b} outside [1, {m}]")
    xi = np.zeros(m)
    xi[ids] = m / b
    return xi


def b_minibatch_sample(m: int, b: int, rng) -> np.ndarray:
    """Draw a uniform size-b subset and return its sampling vector.

    Each component has expectation exactly 1, so the weighted average
    (1/m) sum_j xi_j L_j is an unbiased estimate of the full average.
    b = m short-circuits to the all-ones vector without consuming
    randomness.
    """
    if not 1 <= b <= m:
        raise InvalidBatch(f"batch size {b} outside [1, {m}]")
    if b == m:
        return np.ones(m)
    return minibatch_xi(m, rng.choice(m, size=b, replace=False))


# ---------------------------------------------------------------------------
# online convex sequences
# ---------------------------------------------------------------------------

class OnlineQuadraticSequence:
    """Costs f_t(theta) = 0.5 ||theta - a_t||^2 with a_t i.i.d. uniform in a box.

    The best fixed point over the first k costs is the mean of the first k
    targets (the exact argmin of their sum, which lies inside the box), and
    the box itself is the feasible set, so the sup-norm diameter d_inf is
    simply hi - lo.
    """

    def __init__(self, length: int, dim: int, rng, lo: float = -1.0, hi: float = 1.0):
        if length < 1:
            raise ValueError("sequence length must be >= 1")
        if not hi > lo:
            raise ValueError("box must satisfy hi > lo")
        self.targets = rng.uniform(lo, hi, size=(length, dim))
        self.lo = float(lo)
        self.hi = float(hi)
        self.dim = dim
        self.length = length
        self.d_inf = float(hi - lo)
        self.default_theta0 = tuple(np.full(dim, hi))
        self.f_star = None

    @property
    def box(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    def evaluate(self, theta, t: int = 0, rng=None, batch_size=None) -> Evaluation:
        diff = np.asarray(theta, np.float64) - self.targets[t]
        return Evaluation(value=0.5 * float(diff @ diff), gradient=diff, t=t)

    def comparator(self, horizon: int | None = None) -> np.ndarray:
        """Mean of the first `horizon` targets: argmin of their summed cost."""
        h = self.length if horizon is None else int(horizon)
        return self.targets[:h].mean(axis=0)

    def total_cost(self, theta, horizon: int | None = None) -> float:
        h = self.length if horizon is None else int(horizon)
        diffs = np.asarray(theta, np.float64)[None, :] - self.targets[:h]
        return 0.5 * float((diffs * diffs).sum())


def online_quadratic_sequence(length: int, dim: int, rng,
                              lo: float = -1.0, hi: float = 1.0
                              ) -> OnlineQuadraticSequence:
    return OnlineQuadraticSequence(length, dim, rng, lo=lo, hi=hi)


# ---------------------------------------------------------------------------
# finite-difference oracle
# ---------------------------------------------------------------------------

def finite_difference_gradient(f, theta, h: float = 1e-6) -> np.ndarray:
    """Central differences (f(x+h e_i) - f(x-h e_i)) / 2h per coordinate."""
    if not h > 0.0:
        raise ValueError("h must be positive")
    theta = np.asarray(theta, np.float64)
    grad = np.empty_like(theta)
    for i in range(theta.size):
        bump = np.zeros_like(theta)
        bump[i] = h
        grad[i] = (f(theta + bump) - f(theta - bump)) / (2.0 * h)
    return grad


# ---------------------------------------------------------------------------
# synthetic datasets and their CSV round trip
# ---------------------------------------------------------------------------

def make_synthetic_dataset(kind: str, n: int = 20, m: int = 200,
                           seed: int = 7, noise: float = 0.1):
    """Fixed-seed linear-model dataset with label noise.

    kind="least_squares" gives real labels y = Xw + noise; kind="logistic"
    gives labels in {-1, +1} from the sign of the same noisy responses.
    """
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(m, n))
    w = rng.normal(size=n)
    response = X @ w + noise * rng.normal(size=m)
    if kind == "least_squares":
        return X, response
    if kind == "logistic":
        y = np.sign(response)
        y[y == 0.0] = 1.0
        return X, y
    raise ValueError(f"unknown dataset kind {kind!r}")


def dump_dataset_csv(path, X, y) -> None:
    """Header row of feature columns then the label; 17-digit floats."""
    X = np.asarray(X, np.float64)
    y = np.asarray(y, np.float64)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join([f"x{i}" for i in range(X.shape[1])] + ["label"]) + "\n")
        for row, label in zip(X, y):
            fh.write(",".join(f"{val:.17g}" for val in row)
                     + f",{label:.17g}\n")


def load_dataset_csv(path):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        n = len(header) - 1
        rows = [line.strip().split(",") for line in fh if line.strip()]
    data = np.array([[float(v) for v in row] for row in rows])
    if data.shape[1] != n + 1:
        raise ValueError("row width does not match header")
    return data[:, :n], data[:, n]
