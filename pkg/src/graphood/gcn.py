"""Two-layer graph convolutional network trained with hand-derived gradients.

Forward pass (``A`` is the normalized adjacency, no bias terms)::

    H1     = relu(A @ X @ W0)
    logits = A @ dropout(H1) @ W1

The output nonlinearity lives inside the loss: class-weighted cross entropy
over the softmax of the logits, averaged over the labeled nodes.  Dropout is
inverted (kept units scaled by 1/(1-p)) and applied only between the layers,
only in training mode.

Gradients, with ``G`` the loss gradient at the logits and ``A`` symmetric::

    dW1 = (H1d)^T (A G) + wd * W1
    dH1 = ((A G) W1^T) * mask * relu'(H1)
    dW0 = X^T (A dH1) + wd * W0

Weight decay is coupled: added straight onto both gradients.  Optimization is
full-batch Adam.  Everything is deterministic given the config seed; weight
init and dropout masks come from one seeded PCG64 generator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import EmptyTrainingSet, NonFiniteLoss, ShapeMismatch


@dataclass
class GcnModel:
    W0: np.ndarray  # (feature_dim, hidden_dim)
    W1: np.ndarray  # (hidden_dim, out_dim)

    @property
    def feature_dim(self):
        return self.W0.shape[0]

    @property
    def hidden_dim(self):
        return self.W0.shape[1]

    @property
    def out_dim(self):
        return self.W1.shape[1]

    def clone(self):
        return GcnModel(self.W0.copy(), self.W1.copy())

    def is_finite(self):
        return bool(np.all(np.isfinite(self.W0)) and np.all(np.isfinite(self.W1)))


@dataclass(frozen=True)
class GcnActivations:
    """First-layer output (post-ReLU, pre-dropout) and raw output logits."""

    H1: np.ndarray
    logits: np.ndarray


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    weight_decay: float = 5e-4
    dropout_p: float = 0.5
    epochs: int = 200
    hidden_dim: int = 32
    class_weights: tuple[float, ...] | None = None  # None means all ones
    seed: int = 0
    model_selection: str = "best_val"  # or "last_epoch"

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ShapeMismatch("learning_rate must be > 0")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ShapeMismatch("dropout_p must be in [0, 1)")
        if self.epochs < 0:
            raise ShapeMismatch("epochs must be >= 0")
        if self.model_selection not in ("best_val", "last_epoch"):
            raise ShapeMismatch(f"unknown model_selection {self.model_selection!r}")
        if self.class_weights is not None and any(w <= 0 for w in self.class_weights):
            raise ShapeMismatch("class_weights must all be > 0")


@dataclass(frozen=True)
class LabeledTrainingSet:
    """Node ids with labels in the model's output alphabet."""

    node_ids: np.ndarray
    labels: np.ndarray
    provenance: tuple[str, ...] = ()

    def __post_init__(self):
        if self.node_ids.shape != self.labels.shape:
            raise ShapeMismatch("node_ids and labels must align")
        if len(np.unique(self.node_ids)) != len(self.node_ids):
            raise ShapeMismatch("duplicate node in training set")
        if self.provenance and len(self.provenance) != len(self.node_ids):
            raise ShapeMismatch("provenance length mismatch")

    def __len__(self):
        return len(self.node_ids)

    @classmethod
    def from_mapping(cls, labels_by_node, provenance_by_node=None):
        nodes = np.asarray(sorted(labels_by_node), dtype=np.int64)
        labels = np.asarray([labels_by_node[int(n)] for n in nodes], dtype=np.int64)
        prov = ()
        if provenance_by_node is not None:
            prov = tuple(provenance_by_node[int(n)] for n in nodes)
        return cls(nodes, labels, prov)


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    val_score: float | None


@dataclass
class TrainLog:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = -1
    best_score: float = float("-inf")


def glorot_uniform(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_model(feature_dim, hidden_dim, out_dim, rng):
    return GcnModel(
        glorot_uniform(rng, feature_dim, hidden_dim),
        glorot_uniform(rng, hidden_dim, out_dim),
    )


def draw_dropout_mask(rng, shape, p):
    """Inverted-dropout multiplier: kept entries are 1/(1-p), dropped are 0."""
    return (rng.random(shape) >= p).astype(np.float64) / (1.0 - p)


def forward(model, adj, X, dropout_mask=None):
    """Run the two layers; ``dropout_mask`` is None in evaluation mode."""
    if X.shape[1] != model.feature_dim:
        raise ShapeMismatch(
            f"features have dim {X.shape[1]}, model expects {model.feature_dim}"
        )
    if X.shape[0] != adj.num_nodes:
        raise ShapeMismatch("feature rows != adjacency size")
    H1 = np.maximum(adj.apply(X @ model.W0), 0.0)
    H1d = H1 if dropout_mask is None else H1 * dropout_mask
    logits = adj.apply(H1d @ model.W1)
    return GcnActivations(H1=H1, logits=logits)


def ce_loss_and_grad(logits, train, class_weights=None):
    """Class-weighted mean cross entropy and its gradient at the logits.

    Softmax is computed with per-row max subtraction.  The gradient matrix is
    zero outside the training rows.  Weights of all ones recover the plain
    unweighted mean cross entropy.
    """
    if len(train) == 0:
        raise EmptyTrainingSet("no labeled nodes")
    out_dim = logits.shape[1]
    if class_weights is None:
        weights = np.ones(out_dim)
    else:
        weights = np.asarray(class_weights, dtype=np.float64)
        if weights.shape != (out_dim,):
            raise ShapeMismatch("class_weights length must equal out_dim")
    idx = train.node_ids
    y = train.labels
    if y.size and (y.min() < 0 or y.max() >= out_dim):
        raise ShapeMismatch("label outside the output alphabet")

    sub = logits[idx]
    shifted = sub - sub.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    log_p = shifted - log_z[:, None]
    rows = np.arange(len(idx))
    w = weights[y]
    loss = float(-(w * log_p[rows, y]).sum() / len(idx))

    g = np.exp(log_p) * w[:, None]
    g[rows, y] -= w
    g /= len(idx)
    grad = np.zeros_like(logits)
    grad[idx] = g
    return loss, grad


def backward(model, adj, X, acts, grad_logits, dropout_mask=None, weight_decay=0.0):
    """Gradients of the loss w.r.t. W0 and W1, weight decay included."""
    ag = adj.apply(grad_logits)
    H1d = acts.H1 if dropout_mask is None else acts.H1 * dropout_mask
    g_w1 = H1d.T @ ag + weight_decay * model.W1

    d_h1d = ag @ model.W1.T
    d_h1 = d_h1d if dropout_mask is None else d_h1d * dropout_mask
    d_pre = d_h1 * (acts.H1 > 0)
    g_w0 = X.T @ adj.apply(d_pre) + weight_decay * model.W0
    return g_w0, g_w1


class AdamState:
    """First/second moment accumulators for both weight matrices."""

    def __init__(self, model):
        self.t = 0
        self.m = [np.zeros_like(model.W0), np.zeros_like(model.W1)]
        self.v = [np.zeros_like(model.W0), np.zeros_like(model.W1)]


def adam_step(model, grads, state, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One in-place Adam update with bias correction."""
    state.t += 1
    t = state.t
    params = [model.W0, model.W1]
    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g
        m_hat = state.m[i] / (1.0 - beta1 ** t)
        v_hat = state.v[i] / (1.0 - beta2 ** t)
        p -= lr * m_hat / (np.sqrt(v_hat) + eps)


def train(X, adj, out_dim, train_set, val_eval, config):
    """Full-batch training loop.

    After every epoch the model is scored in evaluation mode by ``val_eval``
    (a pure callback on :class:`GcnActivations`); with
    ``model_selection="best_val"`` the returned model is the snapshot with the
    highest score, earliest epoch winning ties.  Returns
    ``(model, eval_activations, train_log)``.
    """
    if out_dim < 2:
        raise ShapeMismatch("out_dim must be >= 2")
    if len(train_set) and train_set.labels.max() >= out_dim:
        raise ShapeMismatch("training label outside the output alphabet")

    rng = np.random.default_rng(config.seed)
    model = init_model(X.shape[1], config.hidden_dim, out_dim, rng)
    state = AdamState(model)
    log = TrainLog()
    best_model = None

    for epoch in range(config.epochs):
        mask = None
        if config.dropout_p > 0.0:
            mask = draw_dropout_mask(rng, (X.shape[0], config.hidden_dim), config.dropout_p)
        acts = forward(model, adj, X, dropout_mask=mask)
        loss, grad = ce_loss_and_grad(acts.logits, train_set, config.class_weights)
        if not np.isfinite(loss):
            raise NonFiniteLoss(epoch)
        grads = backward(model, adj, X, acts, grad, dropout_mask=mask,
                         weight_decay=config.weight_decay)
        adam_step(model, grads, state, config.learning_rate)
        if not model.is_finite():
            raise NonFiniteLoss(epoch)

        score = None
        if val_eval is not None:
            eval_acts = forward(model, adj, X)
            score = float(val_eval(eval_acts))
            if score > log.best_score:
                log.best_score = score
                log.best_epoch = epoch
                best_model = model.clone()
        log.records.append(EpochRecord(epoch, loss, score))

    if config.model_selection == "best_val" and best_model is not None:
        model = best_model
    final_acts = forward(model, adj, X)
    return model, final_acts, log


def save_checkpoint(path, model, meta=None):
    """JSON header line plus raw little-endian float64 weight payloads."""
    header = json.dumps(
        {
            "feature_dim": model.feature_dim,
            "hidden_dim": model.hidden_dim,
            "out_dim": model.out_dim,
            "meta": meta or {},
        },
        sort_keys=True,
    ).encode()
    w0 = np.ascontiguousarray(model.W0, dtype="<f8")
    w1 = np.ascontiguousarray(model.W1, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(header + b"\n")
        fh.write(w0.tobytes(order="C"))
        fh.write(w1.tobytes(order="C"))


def load_checkpoint(path):
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        payload = fh.read()
    d, h, o = header["feature_dim"], header["hidden_dim"], header["out_dim"]
    n0 = d * h * 8
    w0 = np.frombuffer(payload[:n0], dtype="<f8").reshape(d, h).copy()
    w1 = np.frombuffer(payload[n0:n0 + h * o * 8], dtype="<f8").reshape(h, o).copy()
    return GcnModel(w0, w1), header["meta"]


def config_with_weights(config, class_weights):
    """Copy of a config with the class-weight vector replaced."""
    return replace(config, class_weights=tuple(float(w) for w in class_weights))
