"""Two-layer LSTM with multi-head attention, trained by backprop in plain numpy.

Layer 1 returns its full hidden sequence; layer 2 consumes it and its final
state acts as the attention query over the layer-1 sequence (keys and values).
The per-lag attention mass, averaged over heads, is the model's attention
profile: it is exactly uniform for an all-zero model and sums to one always.
Everything runs in float64 so analytic gradients can be checked against
central finite differences to tight tolerance.

Gate layout inside each 4H parameter block is [input, forget, output, cell].
Training uses adaptive-moment gradient steps (beta1 0.9, beta2 0.999), MSE
loss, dropout on both LSTM outputs, and early stopping on validation loss with
the best-epoch parameters restored.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergedLoss, EmptyDataset, NonFiniteParameter
from .sequences import SequenceDataset, split_dataset


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


class LstmModel:
    """Parameter container; all arrays float64, uniform +/- 1/sqrt(fan_in) init."""

    def __init__(
        self,
        input_dim: int = 3,
        hidden1: int = 64,
        hidden2: int = 32,
        heads: int = 4,
        key_dim: int = 32,
        dropout_rate: float = 0.2,
        seed: int = 0,
    ):
        self.input_dim = input_dim
        self.hidden1 = hidden1
        self.hidden2 = hidden2
        self.heads = heads
        self.key_dim = key_dim
        self.dropout_rate = dropout_rate
        rng = np.random.default_rng(seed)

        def uniform(fan_in, shape):
            limit = 1.0 / np.sqrt(fan_in)
            return rng.uniform(-limit, limit, size=shape)

        h1, h2, a, dk = hidden1, hidden2, heads, key_dim
        self.params: dict[str, np.ndarray] = {
            "wx1": uniform(input_dim, (input_dim, 4 * h1)),
            "wh1": uniform(h1, (h1, 4 * h1)),
            "b1": np.zeros(4 * h1),
            "wx2": uniform(h1, (h1, 4 * h2)),
            "wh2": uniform(h2, (h2, 4 * h2)),
            "b2": np.zeros(4 * h2),
            "wq": uniform(h2, (a, h2, dk)),
            "wk": uniform(h1, (a, h1, dk)),
            "wv": uniform(h1, (a, h1, dk)),
            "wo": uniform(a * dk, (a * dk, h2)),
            "bo": np.zeros(h2),
            "w_out": uniform(h2, (h2,)),
            "b_out": np.zeros(()),
        }

    @classmethod
    def zeros(cls, **kwargs) -> "LstmModel":
        model = cls(**kwargs)
        for name in model.params:
            model.params[name] = np.zeros_like(model.params[name])
        return model

    def param_count(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def check_finite(self) -> None:
        for name, p in self.params.items():
            if not np.all(np.isfinite(p)):
                raise NonFiniteParameter(f"parameter {name} contains non-finite values")

    def predict(self, x) -> np.ndarray:
        """Deterministic (dropout-off) predictions for a batch of windows."""
        pred, _, _ = _forward(self, np.asarray(x, dtype=float), rng=None)
        return pred

    def mean_attention(self, x) -> np.ndarray:
        """Mean attention mass per lag over a batch, dropout off."""
        _, profile, _ = _forward(self, np.asarray(x, dtype=float), rng=None)
        return profile.mean(axis=0)

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden1": self.hidden1,
            "hidden2": self.hidden2,
            "heads": self.heads,
            "key_dim": self.key_dim,
            "dropout_rate": self.dropout_rate,
            "params": {k: v.tolist() for k, v in self.params.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LstmModel":
        model = cls(
            input_dim=d["input_dim"],
            hidden1=d["hidden1"],
            hidden2=d["hidden2"],
            heads=d["heads"],
            key_dim=d["key_dim"],
            dropout_rate=d["dropout_rate"],
        )
        for k, v in d["params"].items():
            model.params[k] = np.array(v, dtype=float).reshape(model.params[k].shape)
        return model


def _lstm_layer_forward(x_seq, wx, wh, b):
    """Run one LSTM layer over (B, K, D); returns hidden sequence and caches."""
    bsz, steps, _ = x_seq.shape
    h_units = wh.shape[0]
    shape = (bsz, steps, h_units)
    i_g, f_g, o_g, g_g = (np.empty(shape) for _ in range(4))
    c_all, tanh_c, c_prev_all, h_prev_all, h_all = (np.empty(shape) for _ in range(5))
    h = np.zeros((bsz, h_units))
    c = np.zeros((bsz, h_units))
    for t in range(steps):
        h_prev_all[:, t] = h
        c_prev_all[:, t] = c
        z = x_seq[:, t] @ wx + h @ wh + b
        i = _sigmoid(z[:, :h_units])
        f = _sigmoid(z[:, h_units : 2 * h_units])
        o = _sigmoid(z[:, 2 * h_units : 3 * h_units])
        g = np.tanh(z[:, 3 * h_units :])
        c = f * c + i * g
        h = o * np.tanh(c)
        i_g[:, t], f_g[:, t], o_g[:, t], g_g[:, t] = i, f, o, g
        c_all[:, t], tanh_c[:, t], h_all[:, t] = c, np.tanh(c), h
    cache = {
        "x": x_seq, "i": i_g, "f": f_g, "o": o_g, "g": g_g,
        "c": c_all, "tanh_c": tanh_c, "c_prev": c_prev_all, "h_prev": h_prev_all,
    }
    return h_all, cache


def _lstm_layer_backward(dh_seq, cache, wx, wh):
    """Backprop through time; dh_seq holds the gradient on each step's output."""
    x_seq = cache["x"]
    bsz, steps, _ = x_seq.shape
    h_units = wh.shape[0]
    dwx, dwh, db = np.zeros_like(wx), np.zeros_like(wh), np.zeros(4 * h_units)
    dx = np.zeros_like(x_seq)
    dh_next = np.zeros((bsz, h_units))
    dc_next = np.zeros((bsz, h_units))
    for t in reversed(range(steps)):
        i, f, o, g = cache["i"][:, t], cache["f"][:, t], cache["o"][:, t], cache["g"][:, t]
        tc = cache["tanh_c"][:, t]
        dh = dh_seq[:, t] + dh_next
        do = dh * tc
        dc = dc_next + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        df = dc * cache["c_prev"][:, t]
        dc_next = dc * f
        dz = np.concatenate(
            [di * i * (1 - i), df * f * (1 - f), do * o * (1 - o), dg * (1 - g * g)],
            axis=1,
        )
        dwx += x_seq[:, t].T @ dz
        dwh += cache["h_prev"][:, t].T @ dz
        db += dz.sum(axis=0)
        dx[:, t] = dz @ wx.T
        dh_next = dz @ wh.T
    return dx, dwx, dwh, db


def _forward(model: LstmModel, x: np.ndarray, rng):
    """Full forward pass. `rng` enables dropout (train mode); None disables it.

    Returns (predictions (B,), attention profile (B, K), cache for backward).
    """
    model.check_finite()
    single = x.ndim == 2
    if single:
        x = x[None]
    p = model.params
    dk = model.key_dim

    h1_seq, cache1 = _lstm_layer_forward(x, p["wx1"], p["wh1"], p["b1"])
    if rng is not None and model.dropout_rate > 0:
        keep = 1.0 - model.dropout_rate
        mask1 = (rng.random(h1_seq.shape) < keep) / keep
    else:
        mask1 = None
    h1d = h1_seq if mask1 is None else h1_seq * mask1

    h2_seq, cache2 = _lstm_layer_forward(h1d, p["wx2"], p["wh2"], p["b2"])
    h2 = h2_seq[:, -1]
    if rng is not None and model.dropout_rate > 0:
        keep = 1.0 - model.dropout_rate
        mask2 = (rng.random(h2.shape) < keep) / keep
    else:
        mask2 = None
    h2d = h2 if mask2 is None else h2 * mask2

    # multi-head attention: query = final layer-2 state, keys/values = layer-1 sequence
    q = np.einsum("bh,ahd->abd", h2d, p["wq"])  # (A, B, dk)
    keys = np.einsum("bkh,ahd->abkd", h1d, p["wk"])  # (A, B, K, dk)
    vals = np.einsum("bkh,ahd->abkd", h1d, p["wv"])
    scores = np.einsum("abkd,abd->abk", keys, q) / np.sqrt(dk)
    scores -= scores.max(axis=2, keepdims=True)
    expo = np.exp(scores)
    alpha = expo / expo.sum(axis=2, keepdims=True)  # (A, B, K)
    ctx = np.einsum("abk,abkd->abd", alpha, vals)  # (A, B, dk)
    ctx_cat = np.transpose(ctx, (1, 0, 2)).reshape(x.shape[0], model.heads * dk)
    att = ctx_cat @ p["wo"] + p["bo"]  # (B, hidden2)
    pred = att @ p["w_out"] + p["b_out"]  # (B,)
    profile = alpha.mean(axis=0)  # (B, K)

    cache = {
        "x": x, "cache1": cache1, "cache2": cache2, "mask1": mask1, "mask2": mask2,
        "h1d": h1d, "h2d": h2d, "q": q, "keys": keys, "vals": vals,
        "alpha": alpha, "ctx_cat": ctx_cat, "att": att, "single": single,
    }
    return (pred[0], profile[0], cache) if single else (pred, profile, cache)


def _backward(model: LstmModel, dpred: np.ndarray, cache) -> dict[str, np.ndarray]:
    """Gradient of the loss w.r.t. every parameter, given dLoss/dprediction."""
    p = model.params
    dk = model.key_dim
    h1d, h2d = cache["h1d"], cache["h2d"]
    q, keys, vals, alpha = cache["q"], cache["keys"], cache["vals"], cache["alpha"]

    grads = {name: np.zeros_like(arr) for name, arr in p.items()}
    grads["w_out"] = cache["att"].T @ dpred
    grads["b_out"] = np.asarray(dpred.sum())
    datt = dpred[:, None] * p["w_out"][None, :]
    grads["wo"] = cache["ctx_cat"].T @ datt
    grads["bo"] = datt.sum(axis=0)
    dctx_cat = datt @ p["wo"].T  # (B, A*dk)
    dctx = np.transpose(
        dctx_cat.reshape(len(dctx_cat), model.heads, dk), (1, 0, 2)
    )  # (A, B, dk)

    dalpha = np.einsum("abd,abkd->abk", dctx, vals)
    dvals = alpha[:, :, :, None] * dctx[:, :, None, :]
    dscores = alpha * (dalpha - (dalpha * alpha).sum(axis=2, keepdims=True))
    dq = np.einsum("abk,abkd->abd", dscores, keys) / np.sqrt(dk)
    dkeys = dscores[:, :, :, None] * q[:, :, None, :] / np.sqrt(dk)

    grads["wq"] = np.einsum("bh,abd->ahd", h2d, dq)
    grads["wk"] = np.einsum("bkh,abkd->ahd", h1d, dkeys)
    grads["wv"] = np.einsum("bkh,abkd->ahd", h1d, dvals)
    dh2d = np.einsum("abd,ahd->bh", dq, p["wq"])
    dh1d = np.einsum("abkd,ahd->bkh", dkeys, p["wk"])
    dh1d += np.einsum("abkd,ahd->bkh", dvals, p["wv"])

    dh2 = dh2d if cache["mask2"] is None else dh2d * cache["mask2"]
    dh2_seq = np.zeros_like(cache["cache2"]["i"])
    dh2_seq[:, -1] = dh2
    dh1d_from2, dwx2, dwh2, db2 = _lstm_layer_backward(dh2_seq, cache["cache2"], p["wx2"], p["wh2"])
    grads["wx2"], grads["wh2"], grads["b2"] = dwx2, dwh2, db2

    dh1d += dh1d_from2
    dh1 = dh1d if cache["mask1"] is None else dh1d * cache["mask1"]
    _, dwx1, dwh1, db1 = _lstm_layer_backward(dh1, cache["cache1"], p["wx1"], p["wh1"])
    grads["wx1"], grads["wh1"], grads["b1"] = dwx1, dwh1, db1
    return grads


def lstm_forward(model: LstmModel, inputs, train_mode: bool = False, seed: int = 0):
    """Prediction and per-lag attention profile for one window or a batch.

    With train_mode=False the pass is deterministic (dropout disabled); with
    train_mode=True dropout masks are drawn from a generator seeded by `seed`.
    """
    rng = np.random.default_rng(seed) if train_mode else None
    pred, profile, _ = _forward(model, np.asarray(inputs, dtype=float), rng)
    return pred, profile


def mse_loss_and_grads(model: LstmModel, x, y, rng=None):
    """Mean squared error over a batch and its parameter gradients."""
    pred, _, cache = _forward(model, x, rng)
    err = pred - y
    loss = float(np.mean(err * err))
    if not np.isfinite(loss):
        raise DivergedLoss("batch loss is non-finite")
    grads = _backward(model, 2.0 * err / len(y), cache)
    return loss, grads


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    patience: int = 10
    max_epochs: int = 200
    batch_size: int = 256
    split: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0

    def validate(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if abs(sum(self.split) - 1.0) > 1e-9:
            raise ValueError("split fractions must sum to 1")


@dataclass
class TrainingLog:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = 0
    epochs_trained: int = 0
    param_count: int = 0


def _batch_loss(model: LstmModel, x, y, batch_size=4096) -> float:
    total, n = 0.0, len(y)
    for s in range(0, n, batch_size):
        pred = model.predict(x[s : s + batch_size])
        total += float(np.sum((pred - y[s : s + batch_size]) ** 2))
    return total / n


def train(model: LstmModel, data: SequenceDataset, cfg: TrainConfig | None = None):
    """Fit by minibatch gradient descent with early stopping on validation loss.

    The dataset is split chronologically per cfg.split; batch order is
    shuffled (seeded) within the train split each epoch. Returns the model
    carrying the best-validation-epoch parameters plus a TrainingLog. Raises
    DivergedLoss if any loss goes non-finite.
    """
    cfg = cfg or TrainConfig()
    cfg.validate()
    train_ds, val_ds, _ = split_dataset(data, cfg.split)
    if len(train_ds) == 0 or len(val_ds) == 0:
        raise EmptyDataset("train or validation split is empty")

    rng = np.random.default_rng(cfg.seed)
    adam_m = {k: np.zeros_like(v) for k, v in model.params.items()}
    adam_v = {k: np.zeros_like(v) for k, v in model.params.items()}
    step = 0
    log = TrainingLog(param_count=model.param_count())
    best_val, best_params, since_best = np.inf, None, 0

    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(train_ds))
        epoch_loss, seen = 0.0, 0
        for s in range(0, len(order), cfg.batch_size):
            idx = order[s : s + cfg.batch_size]
            loss, grads = mse_loss_and_grads(
                model, train_ds.inputs[idx], train_ds.targets[idx], rng
            )
            epoch_loss += loss * len(idx)
            seen += len(idx)
            step += 1
            for name, g in grads.items():
                adam_m[name] = cfg.beta1 * adam_m[name] + (1 - cfg.beta1) * g
                adam_v[name] = cfg.beta2 * adam_v[name] + (1 - cfg.beta2) * g * g
                m_hat = adam_m[name] / (1 - cfg.beta1**step)
                v_hat = adam_v[name] / (1 - cfg.beta2**step)
                model.params[name] = model.params[name] - cfg.learning_rate * m_hat / (
                    np.sqrt(v_hat) + cfg.eps
                )
        val = _batch_loss(model, val_ds.inputs, val_ds.targets)
        if not np.isfinite(val):
            raise DivergedLoss(f"validation loss non-finite at epoch {epoch}")
        log.train_loss.append(epoch_loss / seen)
        log.val_loss.append(val)
        log.epochs_trained = epoch
        if val < best_val:
            best_val, since_best = val, 0
            best_params = copy.deepcopy(model.params)
            log.best_epoch = epoch
        else:
            since_best += 1
            if since_best >= cfg.patience:
                break
    if best_params is not None:
        model.params = best_params
    return model, log
