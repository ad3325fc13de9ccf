"""Per-client behavior: local training, prototype generation, inference.

Each client owns an independently initialized model and a private shard.
During a round it rebuilds the dense global targets it received, runs E
epochs of minibatch SGD on the combined loss, recomputes its per-class
feature means, and uploads the masked entries (optionally pre-multiplied by
its per-class sample counts).  Prediction is nearest-local-prototype in
feature space, restricted to classes the client actually holds.

Per-epoch prototype recomputation uses a full pass over the shard, and all
batches within the epoch reuse that snapshot.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .datagen import Dataset
from .masking import MaskSet
from .numerics import (
    ModelParams,
    forward_features,
    loss_and_grad,
    sgd_step,
)
from .prototypes import CompressedPrototype, Prototype, compress

__all__ = [
    "TrainConfig",
    "ClientState",
    "InferenceError",
    "MaskMissingError",
    "compute_local_prototypes",
    "local_update",
    "predict",
    "evaluate_accuracy",
]


class InferenceError(RuntimeError):
    """Prediction was requested before any local prototype existed."""


class MaskMissingError(RuntimeError):
    """A compressed exchange was attempted before masks were delivered."""


@dataclass
class TrainConfig:
    """Local-training hyperparameters shared by all clients."""

    lam: float = 1.0
    mu: float = 1.0
    lr: float = 0.01
    batch_size: int = 32
    local_epochs: int = 1
    rho: str = "squared_l2"

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.mu <= 0:
            raise ValueError("mu must be > 0")
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.local_epochs < 1:
            raise ValueError("local_epochs must be >= 1")


@dataclass
class ClientState:
    """Everything one client owns: model, data, counts, and latest targets."""

    client_id: int
    params: ModelParams
    shard: Dataset
    class_counts: dict[int, int]
    test_shard: Dataset | None = None
    mask_set: MaskSet | None = None
    global_protos: dict[int, np.ndarray] = field(default_factory=dict)
    local_protos: dict[int, Prototype] | None = None
    last_train_loss: float | None = None

    @property
    def n_local_classes(self) -> int:
        return sum(1 for n in self.class_counts.values() if n > 0)


def compute_local_prototypes(state: ClientState) -> dict[int, Prototype]:
    """Per-class mean feature vector over the client's shard (ascending ids)."""
    feats = forward_features(state.params, state.shard.x)
    protos: dict[int, Prototype] = {}
    for cls in sorted(state.class_counts):
        rows = feats[state.shard.y == cls]
        if rows.shape[0] == 0:
            continue
        protos[cls] = Prototype(cls, rows.mean(axis=0))
    return protos


def _dense_targets(
    state: ClientState,
    global_comp: Mapping[int, CompressedPrototype | Prototype],
    cps: bool,
) -> dict[int, np.ndarray]:
    """Rebuild full-length regularization targets from received payloads.

    All-zero payloads mean the server has not aggregated that class yet;
    they are dropped so the class contributes nothing to the penalty, same
    as in the very first round.
    """
    targets: dict[int, np.ndarray] = {}
    for cls, payload in global_comp.items():
        if not np.any(payload.values):
            continue
        if cps:
            if state.mask_set is None:
                raise MaskMissingError(f"client {state.client_id} has no masks yet")
            mask = state.mask_set.for_class(cls)
            if payload.dim != mask.popcount:
                raise ValueError(
                    f"class {cls}: payload length {payload.dim} != mask popcount {mask.popcount}"
                )
            full = np.zeros(mask.dim)
            full[mask.bits == 1] = payload.values
            targets[cls] = full
        else:
            targets[cls] = np.asarray(payload.values, dtype=np.float64)
    return targets


def local_update(
    state: ClientState,
    global_comp: Mapping[int, CompressedPrototype | Prototype],
    cfg: TrainConfig,
    first_round: bool,
    rng: np.random.Generator,
    *,
    cps: bool = True,
    scale_by_count: bool = True,
) -> dict[int, CompressedPrototype | Prototype]:
    """Train locally and return this client's per-class upload payloads.

    Steps: rebuild dense targets from the received global payloads, run
    ``cfg.local_epochs`` epochs of minibatch SGD (the penalty weight is
    forced to 0 in the first round), recompute the per-class feature means,
    then mask-compress each one (when ``cps``) and multiply by the class
    sample count (when ``scale_by_count``).  Only locally present classes
    are returned.  ``rng`` drives the per-epoch shuffles; the caller derives
    it from (experiment seed, client id, round).
    """
    n = len(state.shard)
    if n == 0:
        raise ValueError(f"client {state.client_id} has an empty shard")
    if cps and state.mask_set is None:
        raise MaskMissingError(f"client {state.client_id} has no masks yet")

    state.global_protos = _dense_targets(state, global_comp, cps)
    lam = 0.0 if first_round else cfg.lam

    xs, ys = state.shard.x, state.shard.y
    params = state.params
    epoch_losses: list[float] = []
    for _ in range(cfg.local_epochs):
        state.params = params
        protos = compute_local_prototypes(state)
        proto_vecs = {cls: p.values for cls, p in protos.items()}
        order = rng.permutation(n)
        batch_losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            batch = [(xs[i], int(ys[i])) for i in idx]
            loss, grads = loss_and_grad(
                params,
                batch,
                state.global_protos,
                lam,
                cfg.mu,
                proto_vecs,
                rho=cfg.rho,
            )
            params = sgd_step(params, grads, cfg.lr)
            batch_losses.append(loss)
        epoch_losses.append(float(np.mean(batch_losses)))

    state.params = params
    state.local_protos = compute_local_prototypes(state)
    state.last_train_loss = epoch_losses[-1]

    payloads: dict[int, CompressedPrototype | Prototype] = {}
    for cls in sorted(state.local_protos):
        count = state.class_counts.get(cls, 0)
        if count <= 0:
            continue
        proto = state.local_protos[cls]
        scale = float(count) if scale_by_count else 1.0
        if cps:
            comp = compress(proto, state.mask_set.for_class(cls))
            payloads[cls] = CompressedPrototype(cls, scale * comp.values)
        else:
            payloads[cls] = Prototype(cls, scale * proto.values)
    return payloads


def predict(state: ClientState, x: np.ndarray) -> int:
    """Class of the nearest local prototype in feature space (L2).

    Only locally present classes compete; ties go to the lowest class id.
    """
    if not state.local_protos:
        raise InferenceError(f"client {state.client_id} has no local prototypes")
    feats = forward_features(state.params, x)
    class_ids = sorted(state.local_protos)
    stack = np.stack([state.local_protos[c].values for c in class_ids])
    dists = np.linalg.norm(feats - stack, axis=1)
    return class_ids[int(np.argmin(dists))]


def evaluate_accuracy(state: ClientState) -> float:
    """Accuracy of nearest-prototype prediction on the local test split."""
    if state.test_shard is None or len(state.test_shard) == 0:
        raise ValueError(f"client {state.client_id} has no test data")
    if not state.local_protos:
        raise InferenceError(f"client {state.client_id} has no local prototypes")
    feats = forward_features(state.params, state.test_shard.x)
    class_ids = sorted(state.local_protos)
    stack = np.stack([state.local_protos[c].values for c in class_ids])
    dists = np.linalg.norm(feats[:, None, :] - stack[None, :, :], axis=2)
    picked = np.array(class_ids)[np.argmin(dists, axis=1)]
    return float(np.mean(picked == state.test_shard.y))
