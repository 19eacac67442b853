"""Softmax-headed score models and the mixed full/partial-information trainer.

Two score families are provided behind one estimator-style interface:
a linear (multinomial logistic) model and a small tanh MLP. Both expose

* ``scores(X)`` / ``decision_function(X)`` -- pre-softmax score vectors,
* ``predict_proba(X)`` / ``predict(X)``    -- class probabilities / labels,
* ``parameters``                           -- a flat view of all weights,
* ``backprop(X, G)``                       -- parameter gradient given
                                              per-row score gradients,

and fit either to plain labels (``fit``) or to a knowledge base of
answered class/all/any questions (``fit_knowledge`` / ``train_model``)
by full-batch gradient descent on the aggregated cross-entropy loss.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from sklearn.base import BaseEstimator

from .questions import ALL, ANY, CLASS, PROB_FLOOR, KnowledgeBase, QuestionKind, QuestionPoint


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss or gradient becomes non-finite."""


@dataclass
class TrainingConfig:
    """Gradient-descent hyperparameters.

    The optimizer is deterministic full-batch descent: each epoch's step
    is halved until the objective does not increase (so feature scale
    cannot destabilize it), the accepted step then decays geometrically,
    and training stops on a relative-loss-change test. ``l2_penalty``
    applies to weights (not biases) and keeps separable problems from
    driving the scores unbounded.
    """

    max_epochs: int = 300
    step_size: float = 1.0
    step_decay: float = 0.999
    convergence_tol: float = 1e-7
    l2_penalty: float = 1e-4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be positive")
        if not 0 < self.step_decay <= 1:
            raise ValueError("step_decay must lie in (0, 1]")
        if self.l2_penalty < 0:
            raise ValueError("l2_penalty must be >= 0")


# Accepted-step regrowth factor; rejections halve, so the step settles near
# the largest locally stable value whatever the feature scale.
_STEP_GROWTH = 1.2


def softmax(z: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max-subtraction for overflow safety."""
    z = np.asarray(z, dtype=float)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


class _SoftmaxModelBase(BaseEstimator):
    """Shared prediction machinery; subclasses own the score function."""

    n_classes: int
    n_features: int

    # -- input handling ------------------------------------------------

    def _as_matrix(self, X) -> Tuple[np.ndarray, bool]:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(
                f"expected feature vectors of length {self.n_features}, got shape {X.shape}"
            )
        if not np.isfinite(X).all():
            raise ValueError("features must be finite")
        return X, single

    # -- prediction ----------------------------------------------------

    def scores(self, X) -> np.ndarray:
        """Pre-softmax score vectors h(x), shape (n, L) (or (L,) for one x)."""
        X, single = self._as_matrix(X)
        Z = self._forward(X)[-1]
        return Z[0] if single else Z

    def decision_function(self, X) -> np.ndarray:
        return self.scores(X)

    def predict_proba(self, X) -> np.ndarray:
        """Class probabilities, kept strictly inside (0, 1).

        Saturated scores can round a softmax entry to exactly 0 or 1 in
        floats; entries are nudged to the 1e-12 floor and renormalized so
        downstream products and logs stay well defined.
        """
        p = softmax(self.scores(X))
        p = np.clip(p, PROB_FLOOR, 1.0 - PROB_FLOOR)
        return p / p.sum(axis=-1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        """1-based argmax labels; ties resolve to the lowest class index."""
        probs = np.atleast_2d(self.predict_proba(X))
        return np.argmax(probs, axis=1) + 1

    def score(self, X, y) -> float:
        y = np.asarray(y, dtype=int)
        return float(np.mean(self.predict(X) == y))

    # -- fitting ---------------------------------------------------------

    def fit(self, X, y, config: Optional[TrainingConfig] = None):
        """Supervised convenience: treat (X, y) as answered class questions."""
        X, _ = self._as_matrix(X)
        y = np.asarray(y, dtype=int)
        if y.shape != (len(X),):
            raise ValueError("y must be one 1-based label per row of X")
        if y.min() < 1 or y.max() > self.n_classes:
            raise ValueError(f"labels must lie in 1..{self.n_classes}")
        kb = KnowledgeBase(X, self.n_classes, n_kinds=1)
        kind = QuestionKind(CLASS)
        for i, label in enumerate(y):
            kb.add(0, QuestionPoint(kind, (i,)), int(label))
        return train_model(self, kb, config)

    def fit_knowledge(self, kb: KnowledgeBase, config: Optional[TrainingConfig] = None):
        return train_model(self, kb, config)


class LinearSoftmaxModel(_SoftmaxModelBase):
    """Affine scores h_c(x) = w_c . x + b_c with a softmax head.

    Weights initialize to zero (uniform predictions), so the parameter
    count is exactly L * (p + 1) and training is fully determined by the
    knowledge base.
    """

    family = "linear"

    def __init__(self, n_classes: int, n_features: int, seed: int = 0):
        if n_classes < 2:
            raise ValueError("need at least two classes")
        if n_features < 1:
            raise ValueError("need at least one feature")
        self.n_classes = int(n_classes)
        self.n_features = int(n_features)
        self.seed = int(seed)
        self.weights_ = np.zeros((self.n_classes, self.n_features))
        self.bias_ = np.zeros(self.n_classes)

    @property
    def parameters(self) -> np.ndarray:
        """Flat parameter vector: weights row-major, then biases."""
        return np.concatenate([self.weights_.ravel(), self.bias_])

    @parameters.setter
    def parameters(self, theta) -> None:
        theta = np.asarray(theta, dtype=float)
        n_w = self.n_classes * self.n_features
        if theta.shape != (n_w + self.n_classes,):
            raise ValueError(f"expected {n_w + self.n_classes} parameters")
        self.weights_ = theta[:n_w].reshape(self.n_classes, self.n_features).copy()
        self.bias_ = theta[n_w:].copy()

    @property
    def weight_decay_mask(self) -> np.ndarray:
        """1 for penalized coordinates (weights), 0 for biases."""
        mask = np.ones(self.n_classes * (self.n_features + 1))
        mask[self.n_classes * self.n_features:] = 0.0
        return mask

    def _forward(self, X: np.ndarray):
        return [X, X @ self.weights_.T + self.bias_]

    def backprop(self, X: np.ndarray, G: np.ndarray) -> np.ndarray:
        """Gradient wrt parameters given dLoss/dscores rows G (same shape as scores)."""
        X, _ = self._as_matrix(X)
        grad_w = G.T @ X
        grad_b = G.sum(axis=0)
        return np.concatenate([grad_w.ravel(), grad_b])

    def _enter_standardized(self, mu: np.ndarray, sigma: np.ndarray) -> None:
        # same scores on (x - mu) / sigma: W' = W * sigma, b' = b + W @ mu
        self.bias_ = self.bias_ + self.weights_ @ mu
        self.weights_ = self.weights_ * sigma

    def _leave_standardized(self, mu: np.ndarray, sigma: np.ndarray) -> None:
        self.weights_ = self.weights_ / sigma
        self.bias_ = self.bias_ - self.weights_ @ mu


class MLPSoftmaxModel(_SoftmaxModelBase):
    """Tanh multilayer perceptron scores with a softmax head.

    One hidden layer of width 16 by default; weights draw from a seeded
    1/sqrt(fan_in) normal so runs are reproducible.
    """

    family = "mlp"

    def __init__(
        self,
        n_classes: int,
        n_features: int,
        hidden: Sequence[int] = (16,),
        seed: int = 0,
    ):
        if n_classes < 2:
            raise ValueError("need at least two classes")
        if n_features < 1:
            raise ValueError("need at least one feature")
        hidden = tuple(int(h) for h in hidden)
        if not hidden or any(h < 1 for h in hidden):
            raise ValueError("hidden must name at least one positive layer width")
        self.n_classes = int(n_classes)
        self.n_features = int(n_features)
        self.hidden = hidden
        self.seed = int(seed)
        rng = np.random.default_rng(seed)
        widths = (self.n_features,) + hidden + (self.n_classes,)
        self.coefs_ = []
        self.intercepts_ = []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            self.coefs_.append(rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_out, fan_in)))
            self.intercepts_.append(np.zeros(fan_out))

    @property
    def parameters(self) -> np.ndarray:
        parts = []
        for W, b in zip(self.coefs_, self.intercepts_):
            parts.append(W.ravel())
            parts.append(b)
        return np.concatenate(parts)

    @parameters.setter
    def parameters(self, theta) -> None:
        theta = np.asarray(theta, dtype=float)
        expected = sum(W.size + b.size for W, b in zip(self.coefs_, self.intercepts_))
        if theta.shape != (expected,):
            raise ValueError(f"expected {expected} parameters")
        pos = 0
        for i, (W, b) in enumerate(zip(self.coefs_, self.intercepts_)):
            self.coefs_[i] = theta[pos:pos + W.size].reshape(W.shape).copy()
            pos += W.size
            self.intercepts_[i] = theta[pos:pos + b.size].copy()
            pos += b.size

    @property
    def weight_decay_mask(self) -> np.ndarray:
        parts = []
        for W, b in zip(self.coefs_, self.intercepts_):
            parts.append(np.ones(W.size))
            parts.append(np.zeros(b.size))
        return np.concatenate(parts)

    def _forward(self, X: np.ndarray):
        activations = [X]
        a = X
        last = len(self.coefs_) - 1
        for i, (W, b) in enumerate(zip(self.coefs_, self.intercepts_)):
            z = a @ W.T + b
            a = z if i == last else np.tanh(z)
            activations.append(a)
        return activations

    def _enter_standardized(self, mu: np.ndarray, sigma: np.ndarray) -> None:
        self.intercepts_[0] = self.intercepts_[0] + self.coefs_[0] @ mu
        self.coefs_[0] = self.coefs_[0] * sigma

    def _leave_standardized(self, mu: np.ndarray, sigma: np.ndarray) -> None:
        self.coefs_[0] = self.coefs_[0] / sigma
        self.intercepts_[0] = self.intercepts_[0] - self.coefs_[0] @ mu

    def backprop(self, X: np.ndarray, G: np.ndarray) -> np.ndarray:
        X, _ = self._as_matrix(X)
        activations = self._forward(X)
        grads_w = [None] * len(self.coefs_)
        grads_b = [None] * len(self.coefs_)
        delta = np.asarray(G, dtype=float)
        for i in range(len(self.coefs_) - 1, -1, -1):
            grads_w[i] = delta.T @ activations[i]
            grads_b[i] = delta.sum(axis=0)
            if i > 0:
                # activations[i] is tanh output of layer i-1
                delta = (delta @ self.coefs_[i]) * (1.0 - activations[i] ** 2)
        parts = []
        for gw, gb in zip(grads_w, grads_b):
            parts.append(gw.ravel())
            parts.append(gb)
        return np.concatenate(parts)


def make_model(family: str, n_classes: int, n_features: int, hidden=(16,), seed: int = 0):
    if family == "linear":
        return LinearSoftmaxModel(n_classes, n_features, seed=seed)
    if family == "mlp":
        return MLPSoftmaxModel(n_classes, n_features, hidden=hidden, seed=seed)
    raise ValueError(f"unknown model family: {family!r}")


# ---------------------------------------------------------------------------
# Vectorized loss/gradient over a knowledge base
# ---------------------------------------------------------------------------

# Record categories after folding class answers into the all-yes shape
# (a class answer c is the same observation as "all of {x} are class c" = yes).
_POS = 0   # all answered yes, and class records
_ALL_NO = 1
_ANY_NO = 2
_ANY_YES = 3


class _CompiledRecords:
    """Flat arrays describing every (record, member) pair of a knowledge base."""

    def __init__(self, kb: KnowledgeBase):
        member_idx = []
        rec_sizes = []
        rec_cat = []
        rec_target0 = []
        for _, rec in kb.records():
            q = rec.question
            fam = q.kind.family
            if fam == CLASS:
                cat, target0 = _POS, rec.answer - 1
            elif fam == ALL:
                cat = _POS if rec.answer == 1 else _ALL_NO
                target0 = q.target_class - 1
            elif fam == ANY:
                cat = _ANY_YES if rec.answer == 1 else _ANY_NO
                target0 = q.target_class - 1
            else:  # pragma: no cover - guarded by QuestionKind
                raise ValueError(fam)
            member_idx.extend(q.members)
            rec_sizes.append(len(q.members))
            rec_cat.append(cat)
            rec_target0.append(target0)
        self.n_records = len(rec_sizes)
        self.member_idx = np.asarray(member_idx, dtype=int)
        self.rec_sizes = np.asarray(rec_sizes, dtype=int)
        self.rec_cat = np.asarray(rec_cat, dtype=int)
        self.rec_target0 = np.asarray(rec_target0, dtype=int)
        self.offsets = np.concatenate([[0], np.cumsum(self.rec_sizes)])
        self.member_target0 = np.repeat(self.rec_target0, self.rec_sizes)
        self.member_cat = np.repeat(self.rec_cat, self.rec_sizes)
        self.X = kb.pool[self.member_idx]


def _loss_and_score_grads(
    model, rec: _CompiledRecords, with_grads: bool = True
) -> Tuple[float, Optional[np.ndarray]]:
    """Total (unnormalized) loss and per-member dLoss/dscore rows."""
    P = softmax(model._forward(rec.X)[-1])
    M = len(rec.member_idx)
    rows = np.arange(M)
    pc = P[rows, rec.member_target0]
    pc_safe = np.clip(pc, PROB_FLOOR, 1.0 - PROB_FLOOR)

    # Per-record products of p_c and of (1 - p_c) over the record's members.
    prod_p = np.multiply.reduceat(pc, rec.offsets[:-1])
    prod_q = np.multiply.reduceat(1.0 - pc, rec.offsets[:-1])

    cat = rec.rec_cat
    rec_loss = np.zeros(rec.n_records)
    rec_loss[cat == _POS] = -np.log(np.clip(prod_p[cat == _POS], PROB_FLOOR, None))
    rec_loss[cat == _ALL_NO] = -np.log(
        np.clip(1.0 - prod_p[cat == _ALL_NO], PROB_FLOOR, None)
    )
    rec_loss[cat == _ANY_NO] = -np.log(np.clip(prod_q[cat == _ANY_NO], PROB_FLOOR, None))
    rec_loss[cat == _ANY_YES] = -np.log(
        np.clip(1.0 - prod_q[cat == _ANY_YES], PROB_FLOOR, None)
    )
    total = float(rec_loss.sum())
    if not with_grads:
        return total, None

    # Every category's score gradient is coeff * (onehot(target) - P_row).
    rec_coeff = np.zeros(rec.n_records)
    rec_coeff[cat == _POS] = -1.0
    p_all_no = np.clip(prod_p[cat == _ALL_NO], PROB_FLOOR, 1.0 - PROB_FLOOR)
    rec_coeff[cat == _ALL_NO] = p_all_no / (1.0 - p_all_no)
    rec_coeff[cat == _ANY_YES] = np.nan  # member-specific, filled below
    member_coeff = np.repeat(rec_coeff, rec.rec_sizes)
    ratio = pc_safe / (1.0 - pc_safe)
    any_no_rows = rec.member_cat == _ANY_NO
    member_coeff[any_no_rows] = ratio[any_no_rows]
    any_yes_rows = rec.member_cat == _ANY_YES
    if any_yes_rows.any():
        q_any_yes = np.clip(prod_q, PROB_FLOOR, 1.0 - PROB_FLOOR)
        rec_factor = np.where(cat == _ANY_YES, -q_any_yes / (1.0 - q_any_yes), 0.0)
        member_coeff[any_yes_rows] = (
            np.repeat(rec_factor, rec.rec_sizes)[any_yes_rows] * ratio[any_yes_rows]
        )

    G = -P.copy()
    G[rows, rec.member_target0] += 1.0
    G *= member_coeff[:, None]
    return total, G


def loss_gradient(model, kb: KnowledgeBase) -> np.ndarray:
    """Gradient of the aggregated question loss wrt the flat parameters.

    Matches ``questions.aggregate_loss`` (no regularization term); an
    empty knowledge base has a zero gradient.
    """
    if len(kb) == 0:
        return np.zeros_like(model.parameters)
    rec = _CompiledRecords(kb)
    _, G = _loss_and_score_grads(model, rec)
    return model.backprop(rec.X, G) / rec.n_records


def train_model(model, kb: KnowledgeBase, config: Optional[TrainingConfig] = None):
    """Fit ``model`` to the knowledge base by full-batch gradient descent.

    Warm-starts from the model's current parameters and guarantees the
    returned parameters never have higher aggregated loss than the
    starting point (the best visited iterate is kept). Per-epoch
    objective values land in ``model.training_history_``.
    """
    cfg = config if config is not None else TrainingConfig()
    if len(kb) == 0 or cfg.max_epochs == 0:
        model.training_history_ = []
        return model

    rec = _CompiledRecords(kb)
    # Optimize against centered/scaled member features; the warm-start
    # parameters move into that space and the result moves back, so the
    # stored parameters always describe raw features while the descent
    # sees a well-conditioned problem whatever the feature scale.
    mu = rec.X.mean(axis=0)
    sigma = rec.X.std(axis=0)
    sigma[sigma < 1e-12] = 1.0
    rec.X = (rec.X - mu) / sigma
    model._enter_standardized(mu, sigma)
    try:
        _descend(model, rec, cfg)
    finally:
        model._leave_standardized(mu, sigma)
    return model


def _descend(model, rec: _CompiledRecords, cfg: TrainingConfig) -> None:
    mask = model.weight_decay_mask
    theta = model.parameters
    init_theta = theta.copy()

    def objective_at(current_theta: np.ndarray) -> Tuple[float, float]:
        model.parameters = current_theta
        total, _ = _loss_and_score_grads(model, rec, with_grads=False)
        agg = total / rec.n_records
        penalty = cfg.l2_penalty * float(np.sum((current_theta * mask) ** 2))
        return agg, agg + penalty

    def gradient_at(current_theta: np.ndarray) -> np.ndarray:
        model.parameters = current_theta
        _, G = _loss_and_score_grads(model, rec)
        grad = model.backprop(rec.X, G) / rec.n_records
        return grad + 2.0 * cfg.l2_penalty * current_theta * mask

    history = []
    step = cfg.step_size
    init_agg = None
    prev_obj = None
    agg, objective = objective_at(theta)
    for _ in range(cfg.max_epochs):
        grad = gradient_at(theta)
        if not np.isfinite(objective) or not np.isfinite(grad).all():
            model.parameters = init_theta
            raise TrainingDivergedError(
                "training produced a non-finite loss or gradient; retry with a smaller step"
            )
        if init_agg is None:
            init_agg = agg
        history.append(objective)
        if prev_obj is not None and abs(objective - prev_obj) <= cfg.convergence_tol * max(
            1.0, abs(prev_obj)
        ):
            break
        prev_obj = objective
        # halve the step until the objective stops increasing, then let it
        # regrow gently so one early halving spree does not doom later
        # epochs to a crawl
        while True:
            candidate = theta - step * grad
            cand_agg, cand_obj = objective_at(candidate)
            if (np.isfinite(cand_obj) and cand_obj <= objective) or step < 1e-15:
                break
            step *= 0.5
        theta, agg, objective = candidate, cand_agg, cand_obj
        step *= _STEP_GROWTH * cfg.step_decay

    final_agg, final_obj = agg, objective
    if not np.isfinite(final_obj):
        model.parameters = init_theta
        raise TrainingDivergedError("training diverged on the final step")
    if init_agg is None:
        init_agg = final_agg
    history.append(final_obj)

    # Accepted steps never increase the objective, so the final iterate is
    # the best one; if regularization ever traded pure question loss for
    # weight shrinkage past the start point, keep the start instead.
    if final_agg > init_agg:
        model.parameters = init_theta
        history.append(history[0])
    else:
        model.parameters = theta
    model.training_history_ = history
