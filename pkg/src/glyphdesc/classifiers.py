"""Four classic classifiers with validation-set tuning.

Multinomial logistic regression and a one-hidden-layer (25-unit) network
are trained by full-batch gradient descent with a backtracking (Armijo)
line search; linear and RBF support vector machines are trained one-vs-rest
by a sequential minimal optimization solver.  Training follows the dtype of
the input features; model weights are stored as float64.

Protocol helpers: `grid_search` tunes hyperparameters on a validation set,
`refit_and_test` retrains on train+validation and scores the test set.
"""

from __future__ import annotations

import enum
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import (
    DimensionMismatch,
    NoConvergenceWarning,
    NonFiniteLoss,
)

__all__ = [
    "ClassifierKind",
    "LabeledSet",
    "Standardizer",
    "LogRegModel",
    "AnnModel",
    "SvmModel",
    "ParamGrid",
    "GridSearchResult",
    "RefitResult",
    "train_logreg",
    "train_ann",
    "train_svm",
    "class_scores",
    "predict",
    "predict_many",
    "grid_search",
    "refit_and_test",
    "save_model",
    "load_model",
]

HIDDEN_UNITS = 25


class ClassifierKind(enum.Enum):
    LOGREG = "lr"
    ANN = "ann"
    SVM_LINEAR = "svm_linear"
    SVM_RBF = "svm_rbf"


@dataclass(frozen=True)
class LabeledSet:
    """Feature matrix with integer class labels in {0..K-1}."""

    X: np.ndarray
    y: np.ndarray
    K: int

    def __post_init__(self):
        X = np.asarray(self.X)
        y = np.asarray(self.y, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] < 1:
            raise ValueError(f"X must be a nonempty 2-D matrix, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise ValueError(f"y shape {y.shape} does not match {X.shape[0]} rows")
        if self.K < 1 or y.min() < 0 or y.max() >= self.K:
            raise ValueError(f"labels must lie in [0, {self.K})")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def union(self, other: "LabeledSet") -> "LabeledSet":
        if other.dim != self.dim or other.K != self.K:
            raise DimensionMismatch("cannot combine sets with different D or K")
        return LabeledSet(np.vstack([self.X, other.X]),
                          np.concatenate([self.y, other.y]), self.K)


@dataclass(frozen=True)
class Standardizer:
    """Per-dimension z-score fitted on training data, applied to val/test."""

    mean: np.ndarray
    std: np.ndarray

    @staticmethod
    def fit(X: np.ndarray) -> "Standardizer":
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        std = np.where(std < 1e-12, 1.0, std)
        return Standardizer(mean, std)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std


# ---------------------------------------------------------------------------
# gradient descent with backtracking line search (shared by LR and ANN)
# ---------------------------------------------------------------------------

def _descend(w0, value_and_grad, value_only, max_iter, grad_tol, armijo=1e-4):
    """Minimize; returns (w, loss history, stop reason).

    Stops on small gradient infinity-norm, the iteration cap, or when no
    Armijo-acceptable step exists at machine precision (stall).
    """
    w = w0
    loss, grad = value_and_grad(w)
    if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
        raise NonFiniteLoss("non-finite loss or gradient at the starting point")
    history = [float(loss)]
    step = 1.0
    reason = "max_iter"
    for _ in range(max_iter):
        if np.abs(grad).max() < grad_tol:
            reason = "grad_tol"
            break
        gg = float(np.vdot(grad, grad))
        step = min(step * 2.0, 1e8)
        accepted = False
        for _ in range(80):
            cand = w - step * grad
            cand_loss = value_only(cand)
            if np.isfinite(cand_loss) and cand_loss <= loss - armijo * step * gg:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            reason = "stalled"
            break
        w = cand
        loss, grad = value_and_grad(w)
        if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
            raise NonFiniteLoss("training diverged to non-finite loss")
        history.append(float(loss))
    return w, history, reason


def _add_bias(X: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((X.shape[0], 1), dtype=X.dtype), X])


def _log_softmax(Z: np.ndarray) -> np.ndarray:
    Z = Z - Z.max(axis=1, keepdims=True)
    return Z - np.log(np.exp(Z).sum(axis=1, keepdims=True))


# ---------------------------------------------------------------------------
# multinomial logistic regression
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogRegModel:
    """Softmax regression weights, bias in column 0 of W (K x (D+1))."""

    W: np.ndarray
    lam: float
    history: tuple = field(default=(), compare=False)

    @property
    def dim(self) -> int:
        return self.W.shape[1] - 1

    @property
    def K(self) -> int:
        return self.W.shape[0]


def logreg_loss_grad(W: np.ndarray, Xb: np.ndarray, y: np.ndarray, lam: float):
    """Cross-entropy plus (lam/2N)||W||^2 with the bias column unregularized."""
    n = Xb.shape[0]
    logp = _log_softmax(Xb @ W.T)
    loss = -logp[np.arange(n), y].mean()
    loss += 0.5 * lam / n * float(np.sum(W[:, 1:] ** 2))
    P = np.exp(logp)
    P[np.arange(n), y] -= 1.0
    G = (P.T @ Xb) / n
    G[:, 1:] += (lam / n) * W[:, 1:]
    return loss, G


def train_logreg(train: LabeledSet, lam: float, max_iter: int = 2000,
                 grad_tol: float = 1e-5) -> LogRegModel:
    """Full-batch gradient descent from zero weights."""
    if train.n < train.K:
        raise ValueError(f"need at least K={train.K} samples, got {train.n}")
    if not np.all(np.isfinite(train.X)):
        raise NonFiniteLoss("training features contain non-finite values")
    Xb = _add_bias(train.X)
    y = train.y
    K = train.K
    shape = (K, Xb.shape[1])

    def vag(wflat):
        loss, G = logreg_loss_grad(wflat.reshape(shape), Xb, y, lam)
        return loss, G.reshape(-1)

    def vonly(wflat):
        n = Xb.shape[0]
        W = wflat.reshape(shape)
        logp = _log_softmax(Xb @ W.T)
        return -logp[np.arange(n), y].mean() + 0.5 * lam / n * float(np.sum(W[:, 1:] ** 2))

    w0 = np.zeros(K * Xb.shape[1], dtype=Xb.dtype)
    w, history, _ = _descend(w0, vag, vonly, max_iter, grad_tol)
    return LogRegModel(W=w.reshape(shape).astype(np.float64), lam=float(lam),
                       history=tuple(history))


# ---------------------------------------------------------------------------
# one-hidden-layer network: sigmoid hidden layer, softmax output
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnnModel:
    """W1 (25 x (D+1)) and W2 (K x 26); biases in column 0."""

    W1: np.ndarray
    W2: np.ndarray
    lam: float
    seed: int = 0
    history: tuple = field(default=(), compare=False)

    @property
    def dim(self) -> int:
        return self.W1.shape[1] - 1

    @property
    def K(self) -> int:
        return self.W2.shape[0]


def _ann_unpack(wflat, d, k):
    n1 = HIDDEN_UNITS * (d + 1)
    W1 = wflat[:n1].reshape(HIDDEN_UNITS, d + 1)
    W2 = wflat[n1:].reshape(k, HIDDEN_UNITS + 1)
    return W1, W2


def ann_loss_grad(wflat: np.ndarray, Xb: np.ndarray, y: np.ndarray, K: int, lam: float):
    """Backpropagation for the cross-entropy loss with L2 on non-bias weights."""
    n, d1 = Xb.shape
    W1, W2 = _ann_unpack(wflat, d1 - 1, K)
    A1 = expit(Xb @ W1.T)
    A1b = _add_bias(A1)
    logp = _log_softmax(A1b @ W2.T)
    loss = -logp[np.arange(n), y].mean()
    loss += 0.5 * lam / n * (float(np.sum(W1[:, 1:] ** 2)) + float(np.sum(W2[:, 1:] ** 2)))

    D2 = np.exp(logp)
    D2[np.arange(n), y] -= 1.0
    D2 /= n
    G2 = D2.T @ A1b
    G2[:, 1:] += (lam / n) * W2[:, 1:]
    D1 = (D2 @ W2[:, 1:]) * A1 * (1.0 - A1)
    G1 = D1.T @ Xb
    G1[:, 1:] += (lam / n) * W1[:, 1:]
    return loss, np.concatenate([G1.reshape(-1), G2.reshape(-1)])


def _ann_loss(wflat, Xb, y, K, lam):
    n, d1 = Xb.shape
    W1, W2 = _ann_unpack(wflat, d1 - 1, K)
    A1b = _add_bias(expit(Xb @ W1.T))
    logp = _log_softmax(A1b @ W2.T)
    loss = -logp[np.arange(n), y].mean()
    return loss + 0.5 * lam / n * (float(np.sum(W1[:, 1:] ** 2)) + float(np.sum(W2[:, 1:] ** 2)))


def ann_init(d: int, K: int, seed: int, dtype=np.float64) -> np.ndarray:
    """Symmetric uniform init, half-width sqrt(6 / (fan_in + fan_out)) per layer."""
    rng = np.random.default_rng(seed)
    e1 = np.sqrt(6.0 / (d + HIDDEN_UNITS))
    e2 = np.sqrt(6.0 / (HIDDEN_UNITS + K))
    W1 = rng.uniform(-e1, e1, size=(HIDDEN_UNITS, d + 1))
    W2 = rng.uniform(-e2, e2, size=(K, HIDDEN_UNITS + 1))
    return np.concatenate([W1.reshape(-1), W2.reshape(-1)]).astype(dtype)


def train_ann(train: LabeledSet, lam: float, seed: int = 0, max_iter: int = 2000,
              grad_tol: float = 1e-5) -> AnnModel:
    if not np.all(np.isfinite(train.X)):
        raise NonFiniteLoss("training features contain non-finite values")
    Xb = _add_bias(train.X)
    y = train.y
    K = train.K
    d = train.dim
    w0 = ann_init(d, K, seed, dtype=Xb.dtype)
    w, history, _ = _descend(
        w0,
        lambda wf: ann_loss_grad(wf, Xb, y, K, lam),
        lambda wf: _ann_loss(wf, Xb, y, K, lam),
        max_iter,
        grad_tol,
    )
    W1, W2 = _ann_unpack(w.astype(np.float64), d, K)
    return AnnModel(W1=W1, W2=W2, lam=float(lam), seed=seed, history=tuple(history))


# ---------------------------------------------------------------------------
# support vector machines via sequential minimal optimization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SvmBinary:
    """One one-vs-rest subproblem: indices into the model's vector block."""

    indices: np.ndarray
    coefs: np.ndarray       # alpha_i * y_i for the support vectors
    bias: float
    converged: bool = True
    updates: int = 0


@dataclass(frozen=True)
class SvmModel:
    kernel: str             # "linear" or "rbf"
    C: float
    gamma: float | None
    K: int
    vectors: np.ndarray     # union of support vectors over all subproblems
    problems: tuple
    # diagnostics, not serialized: full dual variables per subproblem
    alpha: np.ndarray = field(default=None, compare=False, repr=False)
    binary_y: np.ndarray = field(default=None, compare=False, repr=False)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def kernel_matrix(A: np.ndarray, B: np.ndarray, kernel: str, gamma=None) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if kernel == "linear":
        return A @ B.T
    if kernel == "rbf":
        if gamma is None or gamma <= 0:
            raise ValueError("rbf kernel requires gamma > 0")
        d2 = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * (A @ B.T)
        np.maximum(d2, 0.0, out=d2)
        return np.exp(-gamma * d2)
    raise ValueError(f"unknown kernel {kernel!r}")


def _smo_solve(K: np.ndarray, y: np.ndarray, C: float, tol: float = 1e-3,
               max_updates: int = 100_000, seed: int = 0):
    """Solve one soft-margin dual problem.

    Pair selection: examine KKT violators, choosing the partner that
    maximizes |E_i - E_j| first, then scanning non-bound points, then all
    points.  Converges when a full pass finds no violation beyond tol.
    Returns (alpha, b, converged, update count).
    """
    n = y.size
    alpha = np.zeros(n)
    b = 0.0
    E = -y.astype(np.float64)  # decision function starts at zero
    rng = np.random.default_rng(seed)
    updates = 0

    def take_step(i1, i2):
        nonlocal b, E, updates
        if i1 == i2:
            return False
        a1o, a2o = alpha[i1], alpha[i2]
        y1, y2 = y[i1], y[i2]
        E1, E2 = E[i1], E[i2]
        s = y1 * y2
        if s > 0:
            L, H = max(0.0, a1o + a2o - C), min(C, a1o + a2o)
        else:
            L, H = max(0.0, a2o - a1o), min(C, C + a2o - a1o)
        if H - L < 1e-12:
            return False
        k11, k12, k22 = K[i1, i1], K[i1, i2], K[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 1e-12:
            a2 = a2o + y2 * (E1 - E2) / eta
            a2 = min(max(a2, L), H)
        else:
            # flat direction: pick the better interval endpoint
            dL = y2 * (E1 - E2) * (L - a2o) - 0.5 * eta * (L - a2o) ** 2
            dH = y2 * (E1 - E2) * (H - a2o) - 0.5 * eta * (H - a2o) ** 2
            if dL > dH + 1e-12:
                a2 = L
            elif dH > dL + 1e-12:
                a2 = H
            else:
                return False
        if abs(a2 - a2o) < 1e-12 * (a2 + a2o + 1e-12):
            return False
        a1 = a1o + s * (a2o - a2)
        # clean up fp drift without breaking the equality constraint
        if a1 < 0.0:
            a1 = 0.0
        elif a1 > C:
            a1 = C
        d1 = y1 * (a1 - a1o)
        d2 = y2 * (a2 - a2o)
        b1 = b - E1 - d1 * k11 - d2 * k12
        b2 = b - E2 - d1 * k12 - d2 * k22
        if 0.0 < a1 < C:
            b_new = b1
        elif 0.0 < a2 < C:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)
        E += d1 * K[i1] + d2 * K[i2] + (b_new - b)
        alpha[i1], alpha[i2] = a1, a2
        b = b_new
        updates += 1
        return True

    def examine(i2):
        y2, a2, E2 = y[i2], alpha[i2], E[i2]
        r2 = E2 * y2
        if not ((r2 < -tol and a2 < C) or (r2 > tol and a2 > 0)):
            return False
        nb = np.flatnonzero((alpha > 0) & (alpha < C))
        if nb.size > 1:
            i1 = nb[np.argmax(np.abs(E[nb] - E2))]
            if take_step(i1, i2):
                return True
        if nb.size:
            for i1 in np.roll(nb, -int(rng.integers(nb.size))):
                if take_step(int(i1), i2):
                    return True
        for i1 in np.roll(np.arange(n), -int(rng.integers(n))):
            if take_step(int(i1), i2):
                return True
        return False

    examine_all = True
    converged = False
    while updates < max_updates:
        changed = 0
        if examine_all:
            for i in range(n):
                changed += examine(i)
                if updates >= max_updates:
                    break
            if changed == 0:
                converged = True
                break
            examine_all = False
        else:
            for i in np.flatnonzero((alpha > 0) & (alpha < C)):
                changed += examine(int(i))
                if updates >= max_updates:
                    break
            if changed == 0:
                examine_all = True
    return alpha, b, converged, updates


def train_svm(train: LabeledSet, kernel: str = "linear", C: float = 1.0,
              gamma: float | None = None, tol: float = 1e-3,
              max_updates: int = 100_000, seed: int = 0,
              gram: np.ndarray | None = None) -> SvmModel:
    """One-vs-rest SVM.  `gram` may carry a precomputed training kernel matrix."""
    if C <= 0:
        raise ValueError(f"C must be positive, got {C}")
    if kernel == "rbf":
        if gamma is None or gamma <= 0:
            raise ValueError("rbf kernel requires gamma > 0")
    elif kernel == "linear":
        gamma = None
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    X = train.X
    if gram is None:
        gram = kernel_matrix(X, X, kernel, gamma)
    alphas = np.zeros((train.K, train.n))
    signs = np.zeros((train.K, train.n))
    biases = np.zeros(train.K)
    flags = []
    counts = []
    for k in range(train.K):
        yk = np.where(train.y == k, 1.0, -1.0)
        signs[k] = yk
        if np.all(yk == yk[0]):
            biases[k] = float(yk[0])
            flags.append(True)
            counts.append(0)
            continue
        a, b, ok, nup = _smo_solve(gram, yk, C, tol, max_updates, seed=seed * 1009 + k)
        alphas[k] = a
        biases[k] = b
        flags.append(ok)
        counts.append(nup)
        if not ok:
            warnings.warn(
                f"SMO subproblem for class {k} hit the {max_updates}-update budget",
                NoConvergenceWarning,
            )
    union = np.flatnonzero((alphas > 1e-12).any(axis=0))
    vectors = np.asarray(X[union], dtype=np.float64)
    pos = {int(j): i for i, j in enumerate(union)}
    problems = []
    for k in range(train.K):
        sv = np.flatnonzero(alphas[k] > 1e-12)
        idx = np.array([pos[int(j)] for j in sv], dtype=np.int64)
        coefs = alphas[k, sv] * signs[k, sv]
        problems.append(SvmBinary(indices=idx, coefs=coefs, bias=float(biases[k]),
                                  converged=flags[k], updates=counts[k]))
    return SvmModel(kernel=kernel, C=float(C), gamma=gamma, K=train.K,
                    vectors=vectors, problems=tuple(problems),
                    alpha=alphas, binary_y=signs)


def svm_dual_objective(alpha: np.ndarray, y: np.ndarray, gram: np.ndarray) -> float:
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ gram @ ay)


# ---------------------------------------------------------------------------
# prediction and the tuning/refit protocol
# ---------------------------------------------------------------------------

def class_scores(model, X: np.ndarray) -> np.ndarray:
    """(n, K) per-class scores: probabilities for LR/ANN, decision values for SVM."""
    X = np.asarray(X, dtype=np.float64)
    if isinstance(model, LogRegModel):
        if X.shape[1] != model.dim:
            raise DimensionMismatch(f"expected {model.dim} features, got {X.shape[1]}")
        Z = _add_bias(X) @ model.W.T
        return np.exp(_log_softmax(Z))
    if isinstance(model, AnnModel):
        if X.shape[1] != model.dim:
            raise DimensionMismatch(f"expected {model.dim} features, got {X.shape[1]}")
        A1b = _add_bias(expit(_add_bias(X) @ model.W1.T))
        return np.exp(_log_softmax(A1b @ model.W2.T))
    if isinstance(model, SvmModel):
        if X.shape[1] != model.dim:
            raise DimensionMismatch(f"expected {model.dim} features, got {X.shape[1]}")
        kq = kernel_matrix(model.vectors, X, model.kernel, model.gamma)
        out = np.empty((X.shape[0], model.K))
        for k, prob in enumerate(model.problems):
            if prob.indices.size:
                out[:, k] = prob.coefs @ kq[prob.indices] + prob.bias
            else:
                out[:, k] = prob.bias
        return out
    raise TypeError(f"unknown model type {type(model).__name__}")


def predict_many(model, X: np.ndarray) -> np.ndarray:
    """Argmax of the per-class scores; ties go to the lowest class index."""
    return np.argmax(class_scores(model, X), axis=1)


def predict(model, x: np.ndarray) -> int:
    return int(predict_many(model, np.atleast_2d(np.asarray(x)))[0])


@dataclass(frozen=True)
class ParamGrid:
    """Candidate hyperparameter values per classifier."""

    lambdas: tuple = (0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0)
    Cs: tuple = (0.3, 1.0, 3.0, 10.0, 30.0)
    gammas: tuple = (0.001, 0.003, 0.01, 0.03, 0.1)

    def __post_init__(self):
        if not self.lambdas or not self.Cs or not self.gammas:
            raise ValueError("parameter grids must be nonempty")


@dataclass(frozen=True)
class GridSearchResult:
    params: dict
    accuracy: float
    table: tuple  # ((params, accuracy), ...) in tie-break order


@dataclass(frozen=True)
class RefitResult:
    accuracy: float          # fraction correct on the test set
    predictions: np.ndarray
    model: object = field(compare=False, repr=False, default=None)


def _candidates(kind: ClassifierKind, grid: ParamGrid):
    """Candidate parameter dicts in tie-break order (smaller values first)."""
    if kind in (ClassifierKind.LOGREG, ClassifierKind.ANN):
        return [{"lambda": float(l)} for l in sorted(grid.lambdas)]
    if kind is ClassifierKind.SVM_LINEAR:
        return [{"C": float(c)} for c in sorted(grid.Cs)]
    return [{"C": float(c), "gamma": float(g)}
            for c in sorted(grid.Cs) for g in sorted(grid.gammas)]


def fit(kind: ClassifierKind, train: LabeledSet, params: dict, seed: int = 0,
        gram: np.ndarray | None = None, svm_max_updates: int = 100_000):
    if kind is ClassifierKind.LOGREG:
        return train_logreg(train, params["lambda"])
    if kind is ClassifierKind.ANN:
        return train_ann(train, params["lambda"], seed=seed)
    if kind is ClassifierKind.SVM_LINEAR:
        return train_svm(train, "linear", C=params["C"], seed=seed, gram=gram,
                         max_updates=svm_max_updates)
    if kind is ClassifierKind.SVM_RBF:
        return train_svm(train, "rbf", C=params["C"], gamma=params["gamma"],
                         seed=seed, gram=gram, max_updates=svm_max_updates)
    raise ValueError(f"unknown classifier kind {kind}")


def _accuracy(preds: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(preds == y))


def grid_search(train: LabeledSet, val: LabeledSet, kind: ClassifierKind,
                grid: ParamGrid, seed: int = 0) -> GridSearchResult:
    """Train at every grid point, return the argmax validation accuracy.

    Ties go to the smaller parameter (lambda, or C then gamma).  Kernel
    matrices are shared across C values for the SVMs.
    """
    cands = _candidates(kind, grid)
    accs: dict[int, float] = {}

    if kind in (ClassifierKind.SVM_LINEAR, ClassifierKind.SVM_RBF):
        kernel = "linear" if kind is ClassifierKind.SVM_LINEAR else "rbf"
        gammas = [None] if kernel == "linear" else sorted({c["gamma"] for c in cands})
        for g in gammas:
            gram = kernel_matrix(train.X, train.X, kernel, g)
            for i, params in enumerate(cands):
                if kernel == "rbf" and params["gamma"] != g:
                    continue
                model = fit(kind, train, params, seed=seed, gram=gram)
                accs[i] = _accuracy(predict_many(model, val.X), val.y)
    else:
        for i, params in enumerate(cands):
            model = fit(kind, train, params, seed=seed)
            accs[i] = _accuracy(predict_many(model, val.X), val.y)

    table = tuple((cands[i], accs[i]) for i in range(len(cands)))
    best_i = 0
    for i in range(1, len(cands)):
        if accs[i] > accs[best_i]:
            best_i = i
    return GridSearchResult(params=cands[best_i], accuracy=accs[best_i], table=table)


def refit_and_test(train: LabeledSet, val: LabeledSet, test: LabeledSet,
                   kind: ClassifierKind, params: dict, seed: int = 0) -> RefitResult:
    """Retrain on train+validation with the chosen parameters, score the test set."""
    model = fit(kind, train.union(val), params, seed=seed)
    preds = predict_many(model, test.X)
    return RefitResult(accuracy=_accuracy(preds, test.y), predictions=preds, model=model)


# ---------------------------------------------------------------------------
# model serialization: versioned little-endian binary container
# ---------------------------------------------------------------------------

_MAGIC = b"GDM1"
_KIND_TAGS = {
    ClassifierKind.LOGREG: 0,
    ClassifierKind.ANN: 1,
    ClassifierKind.SVM_LINEAR: 2,
    ClassifierKind.SVM_RBF: 3,
}


def _f64_bytes(a: np.ndarray) -> bytes:
    return np.ascontiguousarray(a, dtype="<f8").tobytes()


def save_model(model, path) -> None:
    """Write a GDM1 container; loading reproduces predictions bit-exactly."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        if isinstance(model, LogRegModel):
            fh.write(struct.pack("<B", 0))
            fh.write(struct.pack("<d", model.lam))
            fh.write(struct.pack("<II", model.K, model.dim))
            fh.write(_f64_bytes(model.W))
        elif isinstance(model, AnnModel):
            fh.write(struct.pack("<B", 1))
            fh.write(struct.pack("<d", model.lam))
            fh.write(struct.pack("<III", model.K, model.dim, HIDDEN_UNITS))
            fh.write(_f64_bytes(model.W1))
            fh.write(_f64_bytes(model.W2))
        elif isinstance(model, SvmModel):
            tag = 2 if model.kernel == "linear" else 3
            fh.write(struct.pack("<B", tag))
            fh.write(struct.pack("<dd", model.C, model.gamma or 0.0))
            fh.write(struct.pack("<III", model.K, model.dim, model.vectors.shape[0]))
            fh.write(_f64_bytes(model.vectors))
            for prob in model.problems:
                fh.write(struct.pack("<I", prob.indices.size))
                fh.write(np.ascontiguousarray(prob.indices, dtype="<u4").tobytes())
                fh.write(_f64_bytes(prob.coefs))
                fh.write(struct.pack("<d", prob.bias))
        else:
            raise TypeError(f"cannot serialize {type(model).__name__}")


def load_model(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:4] != _MAGIC:
        raise ValueError(f"{path}: not a GDM1 model file")
    tag = buf[4]
    off = 5

    def take(fmt):
        nonlocal off
        vals = struct.unpack_from(fmt, buf, off)
        off += struct.calcsize(fmt)
        return vals

    def arr(count, dtype="<f8"):
        nonlocal off
        a = np.frombuffer(buf, dtype=dtype, count=count, offset=off).copy()
        off += a.nbytes
        return a

    if tag == 0:
        (lam,) = take("<d")
        k, d = take("<II")
        W = arr(k * (d + 1)).reshape(k, d + 1)
        return LogRegModel(W=W, lam=lam)
    if tag == 1:
        (lam,) = take("<d")
        k, d, hidden = take("<III")
        if hidden != HIDDEN_UNITS:
            raise ValueError(f"unsupported hidden layer size {hidden}")
        W1 = arr(hidden * (d + 1)).reshape(hidden, d + 1)
        W2 = arr(k * (hidden + 1)).reshape(k, hidden + 1)
        return AnnModel(W1=W1, W2=W2, lam=lam)
    if tag in (2, 3):
        C, gamma = take("<dd")
        k, d, nvec = take("<III")
        vectors = arr(nvec * d).reshape(nvec, d)
        problems = []
        for _ in range(k):
            (nidx,) = take("<I")
            idx = arr(nidx, dtype="<u4").astype(np.int64)
            coefs = arr(nidx)
            (bias,) = take("<d")
            problems.append(SvmBinary(indices=idx, coefs=coefs, bias=bias))
        kernel = "linear" if tag == 2 else "rbf"
        return SvmModel(kernel=kernel, C=C, gamma=(gamma if tag == 3 else None),
                        K=k, vectors=vectors, problems=tuple(problems))
    raise ValueError(f"unknown model tag {tag}")
