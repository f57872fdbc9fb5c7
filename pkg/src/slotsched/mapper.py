"""Recurrent multi-label classifier mapping a sentence to a 40-slot mask.

One-hot tokens feed a hand-rolled LSTM (hidden 64); its final state passes
through a ReLU layer into 40 sigmoid outputs, one per calendar slot. The
default training objective is a separate binary cross-entropy per output,
summed, which is what makes the 40 slots behave as independent little tasks.
A single shared mean-squared-error over the whole output vector and a
softmax-per-output {off,on} head exist as variants for comparison runs, and
the recurrent pass can optionally run in both directions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .calendar import NUM_SLOTS
from .gradcheck import max_gradient_error
from .optim import Adam
from .phrases import LabeledSample, build_vocab, encode_tokens

LOSS_SEPARATE = "separate"  # per-output BCE, summed over the 40 outputs
LOSS_SHARED = "shared"  # one MSE over the whole output vector
OUTPUT_SIGMOID = "sigmoid"
OUTPUT_SOFTMAX_PAIRS = "softmax_pairs"  # 2-way softmax per slot, "on" prob kept

THRESHOLD = 0.5


@dataclass
class MapperConfig:
    hidden_size: int = 64
    fc_size: int = 64
    loss_mode: str = LOSS_SEPARATE
    output_mode: str = OUTPUT_SIGMOID
    bidirectional: bool = False
    learning_rate: float = 5e-3
    batch_size: int = 32
    max_epochs: int = 150
    patience: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.loss_mode not in (LOSS_SEPARATE, LOSS_SHARED):
            raise ValueError(f"unknown loss_mode {self.loss_mode!r}")
        if self.output_mode not in (OUTPUT_SIGMOID, OUTPUT_SOFTMAX_PAIRS):
            raise ValueError(f"unknown output_mode {self.output_mode!r}")
        if self.loss_mode == LOSS_SHARED and self.output_mode == OUTPUT_SOFTMAX_PAIRS:
            raise ValueError("softmax_pairs requires the separate loss")


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    val_precision: float
    val_recall: float
    val_f1: float


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -60.0, 60.0)))


class MapperModel:
    """LSTM -> ReLU -> 40 outputs, with hand-written backprop through time."""

    def __init__(self, vocab: dict[str, int], config: Optional[MapperConfig] = None) -> None:
        self.vocab = dict(vocab)
        self.config = config or MapperConfig()
        cfg = self.config
        rng = np.random.default_rng(cfg.seed)
        v, h, f = len(self.vocab), cfg.hidden_size, cfg.fc_size
        out_units = NUM_SLOTS * (2 if cfg.output_mode == OUTPUT_SOFTMAX_PAIRS else 1)
        head_in = 2 * h if cfg.bidirectional else h

        def uniform(rows: int, cols: int, fan_in: int) -> np.ndarray:
            bound = np.sqrt(6.0 / fan_in)
            return rng.uniform(-bound, bound, size=(rows, cols))

        self.params: dict[str, np.ndarray] = {
            "Wx": uniform(4 * h, v, v),
            "Wh": uniform(4 * h, h, h),
            "b": np.zeros(4 * h),
            "Wf": uniform(f, head_in, head_in),
            "bf": np.zeros(f),
            "Wo": uniform(out_units, f, f),
            "bo": np.zeros(out_units),
        }
        if cfg.bidirectional:
            self.params["Wx_r"] = uniform(4 * h, v, v)
            self.params["Wh_r"] = uniform(4 * h, h, h)
            self.params["b_r"] = np.zeros(4 * h)
        # forget-gate bias starts positive so early training keeps cell memory
        h_ = cfg.hidden_size
        self.params["b"][h_ : 2 * h_] = 1.0
        if cfg.bidirectional:
            self.params["b_r"][h_ : 2 * h_] = 1.0
        self.optimizer = Adam(self.params, learning_rate=cfg.learning_rate)

    # -- recurrent pass -------------------------------------------------------

    def _lstm_forward(self, ids: np.ndarray, reverse: bool = False) -> tuple[np.ndarray, dict]:
        h_size = self.config.hidden_size
        suffix = "_r" if reverse else ""
        Wx = self.params["Wx" + suffix]
        Wh = self.params["Wh" + suffix]
        b = self.params["b" + suffix]
        batch, length = ids.shape
        order = range(length - 1, -1, -1) if reverse else range(length)
        h = np.zeros((batch, h_size))
        c = np.zeros((batch, h_size))
        cache: dict = {"steps": [], "order": list(order), "ids": ids, "suffix": suffix}
        for t in cache["order"]:
            tok = ids[:, t]
            gates = Wx[:, tok].T + h @ Wh.T + b
            i = _sigmoid(gates[:, :h_size])
            f = _sigmoid(gates[:, h_size : 2 * h_size])
            o = _sigmoid(gates[:, 2 * h_size : 3 * h_size])
            g = np.tanh(gates[:, 3 * h_size :])
            c_next = f * c + i * g
            tanh_c = np.tanh(c_next)
            h_next = o * tanh_c
            cache["steps"].append((tok, h, c, i, f, o, g, tanh_c))
            h, c = h_next, c_next
        cache["h_final"] = h
        return h, cache

    def _lstm_backward(self, dh_final: np.ndarray, cache: dict, grads: dict[str, np.ndarray]) -> None:
        h_size = self.config.hidden_size
        suffix = cache["suffix"]
        Wx = self.params["Wx" + suffix]
        Wh = self.params["Wh" + suffix]
        dWx = np.zeros_like(Wx)
        dWh = np.zeros_like(Wh)
        db = np.zeros_like(self.params["b" + suffix])
        dh = dh_final
        dc = np.zeros_like(dh_final)
        for tok, h_prev, c_prev, i, f, o, g, tanh_c in reversed(cache["steps"]):
            do = dh * tanh_c
            dc = dc + dh * o * (1.0 - tanh_c**2)
            di = dc * g
            dg = dc * i
            df = dc * c_prev
            dc = dc * f
            dgates = np.concatenate(
                [
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    do * o * (1.0 - o),
                    dg * (1.0 - g**2),
                ],
                axis=1,
            )
            np.add.at(dWx.T, tok, dgates)
            dWh += dgates.T @ h_prev
            db += dgates.sum(axis=0)
            dh = dgates @ Wh
        grads["Wx" + suffix] = dWx
        grads["Wh" + suffix] = dWh
        grads["b" + suffix] = db

    # -- head -------------------------------------------------------------------

    def _head_forward(self, h_final: np.ndarray) -> tuple[np.ndarray, dict]:
        p = self.params
        zf = h_final @ p["Wf"].T + p["bf"]
        af = np.maximum(zf, 0.0)
        logits = af @ p["Wo"].T + p["bo"]
        if self.config.output_mode == OUTPUT_SOFTMAX_PAIRS:
            pair = logits.reshape(-1, NUM_SLOTS, 2)
            shifted = pair - pair.max(axis=2, keepdims=True)
            e = np.exp(shifted)
            soft = e / e.sum(axis=2, keepdims=True)
            probs = soft[:, :, 1]
            return probs, {"h_final": h_final, "zf": zf, "af": af, "soft": soft}
        probs = _sigmoid(logits)
        return probs, {"h_final": h_final, "zf": zf, "af": af}

    def forward_ids(self, ids: np.ndarray) -> tuple[np.ndarray, dict]:
        """Per-slot probabilities for a (batch, length) id matrix."""
        h_final, cache_f = self._lstm_forward(ids)
        caches = {"fwd": cache_f}
        if self.config.bidirectional:
            h_rev, cache_r = self._lstm_forward(ids, reverse=True)
            h_final = np.concatenate([h_final, h_rev], axis=1)
            caches["rev"] = cache_r
        probs, head_cache = self._head_forward(h_final)
        caches["head"] = head_cache
        return probs, caches

    # -- loss --------------------------------------------------------------------

    def loss_from_probs(self, probs: np.ndarray, labels: np.ndarray) -> float:
        n = probs.shape[0]
        if self.config.loss_mode == LOSS_SHARED:
            return float(((probs - labels) ** 2).mean(axis=1).sum() / n)
        clipped = np.clip(probs, 1e-12, 1.0 - 1e-12)
        bce = -(labels * np.log(clipped) + (1.0 - labels) * np.log(1.0 - clipped))
        return float(bce.sum(axis=1).mean())

    def loss(self, ids: np.ndarray, labels: np.ndarray) -> float:
        probs, _ = self.forward_ids(ids)
        return self.loss_from_probs(probs, labels)

    def loss_and_grads(self, ids: np.ndarray, labels: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
        probs, caches = self.forward_ids(ids)
        loss = self.loss_from_probs(probs, labels)
        n = probs.shape[0]
        head = caches["head"]
        if self.config.output_mode == OUTPUT_SOFTMAX_PAIRS:
            soft = head["soft"]
            target = np.stack([1.0 - labels, labels], axis=2)
            dlogits = ((soft - target) / n).reshape(n, 2 * NUM_SLOTS)
        elif self.config.loss_mode == LOSS_SHARED:
            dlogits = 2.0 * (probs - labels) * probs * (1.0 - probs) / (NUM_SLOTS * n)
        else:
            dlogits = (probs - labels) / n
        p = self.params
        grads: dict[str, np.ndarray] = {
            "Wo": dlogits.T @ head["af"],
            "bo": dlogits.sum(axis=0),
        }
        daf = dlogits @ p["Wo"]
        dzf = daf * (head["zf"] > 0.0)
        grads["Wf"] = dzf.T @ head["h_final"]
        grads["bf"] = dzf.sum(axis=0)
        dh_final = dzf @ p["Wf"]
        h_size = self.config.hidden_size
        if self.config.bidirectional:
            self._lstm_backward(dh_final[:, :h_size], caches["fwd"], grads)
            self._lstm_backward(dh_final[:, h_size:], caches["rev"], grads)
        else:
            self._lstm_backward(dh_final, caches["fwd"], grads)
        return loss, grads

    # -- prediction and metrics ----------------------------------------------------

    def predict_probs(self, tokens: Sequence[str]) -> np.ndarray:
        if len(tokens) == 0:
            return np.zeros(NUM_SLOTS)
        ids = encode_tokens(self.vocab, tokens)[None, :]
        probs, _ = self.forward_ids(ids)
        return probs[0]

    def predict_slots(self, tokens: Sequence[str]) -> np.ndarray:
        """40-bit mask: probabilities thresholded at 0.5."""
        return (self.predict_probs(tokens) > THRESHOLD).astype(np.int8)

    def gradient_check(
        self,
        ids: np.ndarray,
        labels: np.ndarray,
        rng: Optional[np.random.Generator] = None,
        n_samples: int = 200,
    ) -> float:
        rng = rng or np.random.default_rng(0)
        _, grads = self.loss_and_grads(ids, labels)
        return max_gradient_error(self.params, grads, lambda: self.loss(ids, labels), rng, n_samples)

    # -- persistence ------------------------------------------------------------------

    def arrays(self) -> dict[str, np.ndarray]:
        out = dict(self.params)
        out.update(self.optimizer.state_arrays())
        return out

    def meta(self) -> dict:
        cfg = self.config
        return {
            "kind": "mapper",
            "vocab": self.vocab,
            "hidden_size": cfg.hidden_size,
            "fc_size": cfg.fc_size,
            "loss_mode": cfg.loss_mode,
            "output_mode": cfg.output_mode,
            "bidirectional": cfg.bidirectional,
            "learning_rate": cfg.learning_rate,
            "adam_step": self.optimizer.step_count,
        }

    @classmethod
    def from_arrays(cls, meta: dict, arrays: dict[str, np.ndarray]) -> "MapperModel":
        cfg = MapperConfig(
            hidden_size=int(meta["hidden_size"]),
            fc_size=int(meta["fc_size"]),
            loss_mode=meta["loss_mode"],
            output_mode=meta["output_mode"],
            bidirectional=bool(meta["bidirectional"]),
            learning_rate=float(meta["learning_rate"]),
        )
        model = cls(vocab=meta["vocab"], config=cfg)
        for k in model.params:
            model.params[k] = arrays[k]
        model.optimizer = Adam(model.params, learning_rate=cfg.learning_rate)
        model.optimizer.load_state_arrays(arrays, int(meta.get("adam_step", 0)))
        return model


# -- evaluation -----------------------------------------------------------------


def micro_metrics(predictions: np.ndarray, labels: np.ndarray) -> tuple[float, float, float]:
    """Micro-averaged precision/recall/F1 over all output bits pooled."""
    pred = predictions.astype(bool)
    true = labels.astype(bool)
    tp = int(np.count_nonzero(pred & true))
    fp = int(np.count_nonzero(pred & ~true))
    fn = int(np.count_nonzero(~pred & true))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def evaluate(model: MapperModel, samples: Sequence[LabeledSample]) -> tuple[float, float, float]:
    if not samples:
        raise ValueError("empty evaluation set")
    preds = np.stack([model.predict_slots(s.tokens) for s in samples])
    labels = np.stack([s.label for s in samples])
    return micro_metrics(preds, labels)


# -- training ---------------------------------------------------------------------


def _length_buckets(samples: Sequence[LabeledSample]) -> dict[int, list[int]]:
    buckets: dict[int, list[int]] = {}
    for idx, s in enumerate(samples):
        buckets.setdefault(len(s.tokens), []).append(idx)
    return buckets


def train_mapper(
    train: Sequence[LabeledSample],
    valid: Sequence[LabeledSample],
    config: Optional[MapperConfig] = None,
    vocab: Optional[dict[str, int]] = None,
    model: Optional[MapperModel] = None,
) -> tuple[MapperModel, list[EpochMetrics]]:
    """Train with Adam, early-stopping on validation micro-F1 (patience per config).

    Returns the model (fresh unless one is passed in for warm starting)
    restored to its best-validation epoch, plus per-epoch metrics. Raises
    FloatingPointError if the loss diverges.
    """
    if not train or not valid:
        raise ValueError("train and validation splits must be non-empty")
    if model is not None:
        config = model.config
        vocab = model.vocab
    config = config or MapperConfig()
    vocab = vocab or build_vocab(train)
    model = model or MapperModel(vocab, config)
    rng = np.random.default_rng(config.seed)

    encoded = [encode_tokens(vocab, s.tokens) for s in train]
    labels = np.stack([s.label.astype(np.float64) for s in train])
    buckets = _length_buckets(train)

    history: list[EpochMetrics] = []
    best_f1 = -1.0
    best_params: dict[str, np.ndarray] = {}
    stale = 0
    for epoch in range(1, config.max_epochs + 1):
        epoch_loss = 0.0
        n_batches = 0
        for length in sorted(buckets):
            indices = np.array(buckets[length])
            rng.shuffle(indices)
            for start in range(0, len(indices), config.batch_size):
                chunk = indices[start : start + config.batch_size]
                ids = np.stack([encoded[i] for i in chunk])
                loss, grads = model.loss_and_grads(ids, labels[chunk])
                if not np.isfinite(loss):
                    raise FloatingPointError(
                        f"mapper loss diverged at epoch {epoch} (loss={loss})"
                    )
                model.optimizer.step(model.params, grads)
                epoch_loss += loss
                n_batches += 1
        precision, recall, f1 = evaluate(model, valid)
        history.append(EpochMetrics(epoch, epoch_loss / max(n_batches, 1), precision, recall, f1))
        if f1 > best_f1 + 1e-4:
            best_f1 = f1
            best_params = {k: v.copy() for k, v in model.params.items()}
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    if best_params:
        model.params.update(best_params)
    return model, history
