"""Architecture registry, spec-driven torch networks, classifier training and cost counting."""

from __future__ import annotations

import copy
import hashlib
import io
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .config import ClassifierConfig
from .errors import Divergence, EmptyEvaluationSet, UnknownArchitecture, UnshapedLayer

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "prgan-checkpoint"
CHECKPOINT_VERSION = 1

LAYER_KINDS = ("conv", "deconv", "maxpool", "dropout", "dense", "reshape", "softmax", "skip")
ACTIVATIONS = (None, "relu", "leaky_relu", "sigmoid", "softmax")


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    units: int = 0  # dense width / conv output channels
    kernel: int = 0
    stride: int = 1
    padding: int = 0
    activation: str | None = None
    rate: float = 0.0  # dropout rate
    shape: tuple = ()  # reshape target
    init: float = 0.0  # skip-gate initial value

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        object.__setattr__(self, "shape", tuple(self.shape))

    def describe(self) -> str:
        act = f"+{self.activation.capitalize()}" if self.activation else ""
        if self.kind == "conv":
            return f"Conv({self.units},{self.kernel},{self.kernel}){act}"
        if self.kind == "deconv":
            return f"ConvT({self.units},{self.kernel},{self.kernel}){act}"
        if self.kind == "dense":
            return f"FC({self.units}){act}"
        if self.kind == "dropout":
            return f"Dropout({self.rate:g})"
        if self.kind == "maxpool":
            return f"MaxPooling({self.kernel},{self.kernel})"
        if self.kind == "softmax":
            return "Softmax"
        if self.kind == "reshape":
            return f"Reshape{self.shape}"
        return f"Skip{act}"


def Conv(units, kernel, activation="relu", stride=1, padding=0):
    return LayerSpec("conv", units=units, kernel=kernel, stride=stride, padding=padding, activation=activation)


def Deconv(units, kernel, activation="relu", stride=1, padding=0):
    return LayerSpec("deconv", units=units, kernel=kernel, stride=stride, padding=padding, activation=activation)


def Dense(units, activation="relu"):
    return LayerSpec("dense", units=units, activation=activation)


def Dropout(rate):
    return LayerSpec("dropout", rate=rate)


def MaxPool(kernel):
    return LayerSpec("maxpool", kernel=kernel, stride=kernel)


def Reshape(*shape):
    return LayerSpec("reshape", shape=shape)


def Softmax():
    return LayerSpec("softmax")


def Skip(init=4.0, activation="sigmoid"):
    """Adds ``gate * (2x - 1)`` of the network input, ``gate`` learned per feature."""
    return LayerSpec("skip", init=init, activation=activation)


@dataclass(frozen=True)
class ArchitectureSpec:
    arch_id: str
    dataset_kind: str
    input_shape: tuple
    layers: tuple
    role: str = "classifier"

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(self.input_shape))
        object.__setattr__(self, "layers", tuple(self.layers))

    @property
    def output_width(self) -> int:
        return int(np.prod(infer_shapes(self)[-1]))

    def describe(self) -> list[str]:
        return [layer.describe() for layer in self.layers]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["input_shape"] = list(self.input_shape)
        d["layers"] = [{**asdict(l), "shape": list(l.shape)} for l in self.layers]
        return d

    @classmethod
    def from_dict(cls, d) -> ArchitectureSpec:
        layers = [LayerSpec(**{**l, "shape": tuple(l.get("shape", ()))}) for l in d["layers"]]
        return cls(d["arch_id"], d["dataset_kind"], tuple(d["input_shape"]), tuple(layers), d.get("role", "classifier"))


def stack(a: ArchitectureSpec, b: ArchitectureSpec) -> ArchitectureSpec:
    """Concatenate two specs; ``b`` must accept ``a``'s output shape."""
    out = infer_shapes(a)[-1]
    if int(np.prod(out)) != int(np.prod(b.input_shape)):
        raise UnshapedLayer(f"cannot stack: {out} feeds a spec expecting {b.input_shape}")
    layers = list(a.layers)
    if tuple(out) != tuple(b.input_shape):
        layers.append(Reshape(*b.input_shape))
    return ArchitectureSpec(f"{a.arch_id}+{b.arch_id}", a.dataset_kind, a.input_shape, tuple(layers) + b.layers, a.role)


# --------------------------------------------------------------------------- registry

MNIST_SHAPE = (1, 28, 28)
WIFI_DIM = 520


def _mnist_classifier(arch_id, k, w):
    if arch_id == "M1":
        return [Conv(w(64), 5), Conv(w(64), 5), Dropout(0.25), Dense(w(128)), Dropout(0.5), Dense(k, "softmax")]
    if arch_id == "M2":
        return [Conv(w(64), 8), Dropout(0.2), Conv(w(128), 6), Conv(w(128), 5), Dropout(0.5), Dense(k, "softmax")]
    if arch_id == "M3":
        return [
            Conv(w(32), 3), Conv(w(32), 3), MaxPool(2),
            Conv(w(64), 3), Conv(w(64), 3), MaxPool(2),
            Dense(w(200)), Dense(k, "softmax"),
        ]
    raise UnknownArchitecture(f"no architecture {arch_id!r} for mnist")


def _wifi_classifier(arch_id, k, w):
    if arch_id == "M1":
        return [Dense(w(256)), Dropout(0.5), Dense(w(128)), Dropout(0.5), Dense(w(64)), Dense(k, None), Softmax()]
    if arch_id == "M2":
        return [Dense(w(1024)), Dropout(0.5), Dense(w(512)), Dropout(0.5), Dense(k, None), Softmax()]
    if arch_id == "M3":
        return [Dense(w(256)), Dropout(0.5), Dense(w(256)), Dropout(0.5), Dense(k, None), Softmax()]
    raise UnknownArchitecture(f"no architecture {arch_id!r} for wifi")


def _vector_classifier(arch_id, k, w):
    if arch_id == "M1":
        return [Dense(w(64)), Dense(k, "softmax")]
    if arch_id == "M2":
        return [Dense(w(128)), Dense(w(64)), Dense(k, "softmax")]
    if arch_id == "M3":
        return [Dense(w(32)), Dropout(0.2), Dense(k, "softmax")]
    raise UnknownArchitecture(f"no architecture {arch_id!r} for generic vectors")


_CLASSIFIERS = {
    "mnist": (_mnist_classifier, MNIST_SHAPE),
    "wifi": (_wifi_classifier, (WIFI_DIM,)),
    "vector": (_vector_classifier, None),
}
DATASET_KIND_ALIASES = {"mnist": "mnist", "mnist-5k": "mnist", "uji": "wifi", "wifi": "wifi",
                        "synthetic-uji": "wifi", "vector": "vector"}


def dataset_kind_of(name: str) -> str:
    try:
        return DATASET_KIND_ALIASES[name]
    except KeyError:
        raise UnknownArchitecture(f"no architectures registered for dataset {name!r}") from None


def build_classifier(arch_id: str, dataset_kind: str, num_classes: int, width: float = 1.0,
                     input_shape=None) -> ArchitectureSpec:
    """Model 1/2/3 classifier for a dataset. ``width`` scales hidden layers only."""
    kind = DATASET_KIND_ALIASES.get(dataset_kind, dataset_kind)
    if kind not in _CLASSIFIERS:
        raise UnknownArchitecture(f"no architectures registered for dataset {dataset_kind!r}")
    factory, default_shape = _CLASSIFIERS[kind]
    if not (input_shape or default_shape):
        raise UnshapedLayer(f"{kind} classifiers need an explicit input shape")

    def w(units):
        return max(1, int(round(units * width)))

    layers = factory(arch_id, num_classes, w)
    return ArchitectureSpec(arch_id, kind, tuple(input_shape or default_shape), tuple(layers))


def mlp_classifier(input_dim: int, num_classes: int, hidden=(64, 64), arch_id="MLP") -> ArchitectureSpec:
    layers = [Dense(h) for h in hidden] + [Dense(num_classes, "softmax")]
    return ArchitectureSpec(arch_id, "vector", (input_dim,), tuple(layers))


def generator_spec(dataset_kind: str, input_shape=None, hidden: int = 64) -> ArchitectureSpec:
    """Perturbation generator: encoder-decoder with a gated input skip, sigmoid output."""
    kind = DATASET_KIND_ALIASES.get(dataset_kind, dataset_kind)
    if kind == "mnist":
        layers = [
            Conv(16, 3, stride=2, padding=1), Conv(32, 3, stride=2, padding=1),
            Dense(64), Dense(32 * 7 * 7), Reshape(32, 7, 7),
            Deconv(16, 4, stride=2, padding=1), Deconv(1, 4, activation=None, stride=2, padding=1),
            Skip(),
        ]
        return ArchitectureSpec("G", kind, input_shape or MNIST_SHAPE, tuple(layers), role="generator")
    if kind == "wifi":
        d = int(np.prod(input_shape)) if input_shape else WIFI_DIM
        layers = [Dense(1024), Dense(d, None), Skip()]
        return ArchitectureSpec("G", kind, (d,), tuple(layers), role="generator")
    if kind == "vector":
        d = int(np.prod(input_shape))
        layers = [Dense(hidden), Dense(d, None), Skip()]
        return ArchitectureSpec("G", kind, (d,), tuple(layers), role="generator")
    raise UnknownArchitecture(f"no generator registered for {dataset_kind!r}")


def discriminator_spec(dataset_kind: str, input_shape=None, hidden: int = 64) -> ArchitectureSpec:
    """GAN discriminator; outputs the probability that its input is original data."""
    kind = DATASET_KIND_ALIASES.get(dataset_kind, dataset_kind)
    if kind == "mnist":
        layers = [
            Conv(16, 4, "leaky_relu", stride=2, padding=1), Conv(32, 4, "leaky_relu", stride=2, padding=1),
            Dense(1, "sigmoid"),
        ]
        return ArchitectureSpec("D", kind, input_shape or MNIST_SHAPE, tuple(layers), role="discriminator")
    d = int(np.prod(input_shape)) if input_shape else WIFI_DIM
    h = 256 if kind == "wifi" else hidden
    layers = [Dense(h, "leaky_relu"), Dense(1, "sigmoid")]
    return ArchitectureSpec("D", kind, (d,), tuple(layers), role="discriminator")


# --------------------------------------------------------------------------- shapes & cost

def _check_int(value, what, layer_i):
    if value <= 0:
        raise UnshapedLayer(f"layer {layer_i}: {what} has non-positive size")


def infer_shapes(spec: ArchitectureSpec) -> list[tuple]:
    """Output shape after each layer (index 0 is the input shape)."""
    if not spec.input_shape:
        raise UnshapedLayer("spec has no input shape")
    shapes = [tuple(spec.input_shape)]
    for i, layer in enumerate(spec.layers):
        cur = shapes[-1]
        if layer.kind in ("conv", "deconv", "maxpool"):
            if len(cur) != 3:
                raise UnshapedLayer(f"layer {i} ({layer.describe()}) needs a C x H x W input, got {cur}")
            c, h, w = cur
            k, s, p = layer.kernel, layer.stride, layer.padding
            if layer.kind == "conv":
                out = (layer.units, (h + 2 * p - k) // s + 1, (w + 2 * p - k) // s + 1)
            elif layer.kind == "deconv":
                out = (layer.units, (h - 1) * s - 2 * p + k, (w - 1) * s - 2 * p + k)
            else:
                out = (c, h // k, w // k)
            for v in out:
                _check_int(v, layer.describe(), i)
        elif layer.kind == "dense":
            _check_int(layer.units, layer.describe(), i)
            out = (layer.units,)
        elif layer.kind == "reshape":
            if int(np.prod(layer.shape)) != int(np.prod(cur)):
                raise UnshapedLayer(f"layer {i}: cannot reshape {cur} to {layer.shape}")
            out = tuple(layer.shape)
        elif layer.kind == "skip":
            if int(np.prod(cur)) != int(np.prod(spec.input_shape)):
                raise UnshapedLayer(f"layer {i}: skip needs output size equal to input size")
            out = tuple(spec.input_shape)
        else:
            out = cur
        shapes.append(out)
    return shapes


@dataclass(frozen=True)
class CostReport:
    flops: int
    params: int

    def __add__(self, other):
        return CostReport(self.flops + other.flops, self.params + other.params)


def layer_costs(spec: ArchitectureSpec) -> list[CostReport]:
    """Per-layer cost; one multiply-add counts as 2 FLOPs, bias/activation adds excluded."""
    shapes = infer_shapes(spec)
    costs = []
    for layer, cin, cout in zip(spec.layers, shapes[:-1], shapes[1:]):
        if layer.kind == "dense":
            n_in = int(np.prod(cin))
            costs.append(CostReport(2 * n_in * layer.units, n_in * layer.units + layer.units))
        elif layer.kind == "conv":
            k2 = layer.kernel * layer.kernel
            macs = cin[0] * k2 * cout[0] * cout[1] * cout[2]
            costs.append(CostReport(2 * macs, cin[0] * cout[0] * k2 + cout[0]))
        elif layer.kind == "deconv":
            k2 = layer.kernel * layer.kernel
            macs = cin[0] * cout[0] * k2 * cin[1] * cin[2]
            costs.append(CostReport(2 * macs, cin[0] * cout[0] * k2 + cout[0]))
        elif layer.kind == "skip":
            n = int(np.prod(cout))
            costs.append(CostReport(2 * n, n))
        else:
            costs.append(CostReport(0, 0))
    return costs


def count_cost(spec: ArchitectureSpec) -> CostReport:
    total = CostReport(0, 0)
    for c in layer_costs(spec):
        total = total + c
    if total.flops <= 0 or total.params <= 0:
        raise UnshapedLayer("spec has no trainable layers")
    return total


# --------------------------------------------------------------------------- torch networks

def _activation(name):
    if name == "relu":
        return nn.ReLU()
    if name == "leaky_relu":
        return nn.LeakyReLU(0.2)
    if name == "sigmoid":
        return nn.Sigmoid()
    if name == "softmax":
        return nn.Softmax(dim=1)
    return None


class _SkipGate(nn.Module):
    def __init__(self, shape, init):
        super().__init__()
        self.gate = nn.Parameter(torch.full(shape, float(init)))

    def forward(self, h, x):
        return h + self.gate * (2.0 * x - 1.0)


class SpecNet(nn.Module):
    """A feed-forward network built from an :class:`ArchitectureSpec`.

    Takes flat ``(N, prod(input_shape))`` inputs and returns flat outputs.
    ``forward(x, logits=True)`` skips a trailing softmax/sigmoid.
    """

    def __init__(self, spec: ArchitectureSpec):
        super().__init__()
        self.spec = spec
        shapes = infer_shapes(spec)
        self.ops = nn.ModuleList()
        self.acts = nn.ModuleList()
        self.kinds = []
        for layer, cin, cout in zip(spec.layers, shapes[:-1], shapes[1:]):
            if layer.kind == "dense":
                op = nn.Linear(int(np.prod(cin)), layer.units)
            elif layer.kind == "conv":
                op = nn.Conv2d(cin[0], layer.units, layer.kernel, layer.stride, layer.padding)
            elif layer.kind == "deconv":
                op = nn.ConvTranspose2d(cin[0], layer.units, layer.kernel, layer.stride, layer.padding)
            elif layer.kind == "maxpool":
                op = nn.MaxPool2d(layer.kernel, layer.stride)
            elif layer.kind == "dropout":
                op = nn.Dropout(layer.rate)
            elif layer.kind == "reshape":
                op = nn.Unflatten(1, tuple(layer.shape))
            elif layer.kind == "softmax":
                op = nn.Softmax(dim=1)
            else:
                op = _SkipGate(tuple(cout), layer.init)
            self.ops.append(op)
            self.acts.append(_activation(layer.activation) or nn.Identity())
            self.kinds.append(layer.kind)
        last = spec.layers[-1]
        self._trailing = last.kind == "softmax" or last.activation in ("softmax", "sigmoid")

    def forward(self, x, logits=False):
        x = x.reshape(x.shape[0], *self.spec.input_shape)
        inp = x
        h = x
        n = len(self.ops)
        for i, (kind, op, act) in enumerate(zip(self.kinds, self.ops, self.acts)):
            final = i == n - 1 and logits and self._trailing
            if kind == "softmax":
                if not final:
                    h = op(h)
                continue
            if kind == "dense" and h.dim() > 2:
                h = h.flatten(1)
            h = op(h, inp) if kind == "skip" else op(h)
            if not final:
                h = act(h)
        return h.flatten(1)


def build_network(spec: ArchitectureSpec, seed: int = 0) -> SpecNet:
    torch.manual_seed(seed)
    return SpecNet(spec)


# --------------------------------------------------------------------------- trained models

def state_checksum(state: dict) -> str:
    h = hashlib.sha256()
    for key in sorted(state):
        t = state[key].detach().cpu().contiguous()
        h.update(key.encode())
        h.update(str(t.dtype).encode())
        h.update(t.numpy().tobytes())
    return h.hexdigest()


@dataclass(eq=False)
class TrainedModel:
    """An architecture plus a parameter checkpoint.

    Inference always runs in eval mode (dropout off), in fixed-size batches, so
    predictions are reproducible for a given checkpoint.
    """

    spec: ArchitectureSpec
    state: dict
    meta: dict = field(default_factory=dict)
    _net: SpecNet | None = field(default=None, repr=False)

    @classmethod
    def from_network(cls, net: SpecNet, meta=None):
        state = {k: v.detach().clone() for k, v in net.state_dict().items()}
        return cls(net.spec, state, dict(meta or {}))

    def network(self) -> SpecNet:
        """Frozen (eval mode, no grad) network; shared between calls."""
        if self._net is None:
            net = SpecNet(self.spec)
            net.load_state_dict(self.state)
            net.eval()
            for p in net.parameters():
                p.requires_grad_(False)
            self._net = net
        return self._net

    def trainable_copy(self) -> SpecNet:
        net = SpecNet(self.spec)
        net.load_state_dict(self.state)
        return net

    def checksum(self) -> str:
        return state_checksum(self.network().state_dict())

    @property
    def id(self) -> str:
        return state_checksum(self.state)[:16]

    def _run(self, x, fn, batch=1024):
        x = np.array(x, dtype=np.float32)
        net = self.network()
        out = []
        with torch.no_grad():
            for i in range(0, len(x), batch):
                out.append(fn(net, torch.from_numpy(x[i:i + batch])).numpy())
        if not out:
            return np.zeros((0, self.spec.output_width), dtype=np.float32)
        return np.concatenate(out)

    def predict_proba(self, x) -> np.ndarray:
        """Class probabilities (softmax) or, for a sigmoid head, P(original)."""
        return self._run(x, lambda net, b: net(b))

    def logits(self, x) -> np.ndarray:
        return self._run(x, lambda net, b: net(b, logits=True))

    def predict(self, x) -> np.ndarray:
        return self.logits(x).argmax(axis=1)

    def save(self, path) -> None:
        payload = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "spec": self.spec.to_dict(),
            "state": self.state,
            "meta": self.meta,
        }
        buf = io.BytesIO()
        torch.save(payload, buf)
        Path(path).write_bytes(buf.getvalue())

    @classmethod
    def load(cls, path):
        payload = torch.load(path, map_location="cpu", weights_only=True)
        if payload.get("format") != CHECKPOINT_FORMAT or payload.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: not a version-{CHECKPOINT_VERSION} {CHECKPOINT_FORMAT} file")
        return cls(ArchitectureSpec.from_dict(payload["spec"]), payload["state"], payload["meta"])


class GeneratorModel(TrainedModel):
    """Perturbation generator: maps feature vectors to same-shaped vectors in [0, 1]."""

    def apply(self, x) -> np.ndarray:
        return self.predict_proba(x)


def accuracy(model, examples, labels) -> float:
    labels = np.asarray(labels)
    if len(labels) == 0:
        raise EmptyEvaluationSet("cannot compute accuracy on zero records")
    if len(examples) != len(labels):
        raise ValueError("examples and labels are not aligned")
    return float((model.predict(examples) == labels).mean())


def train_classifier(spec: ArchitectureSpec, x, y, config: ClassifierConfig | None = None,
                     val_x=None, val_y=None, meta=None) -> TrainedModel:
    """Train with Adam on cross-entropy and keep the epoch with best held-out accuracy.

    Without a held-out set the training data itself is used for checkpoint selection.
    """
    config = config or ClassifierConfig()
    x = np.array(x, dtype=np.float32)
    y = np.array(y, dtype=np.int64)
    if len(x) == 0:
        raise EmptyEvaluationSet("empty training set")
    if y.min() < 0 or y.max() >= spec.output_width:
        raise ValueError(f"labels must be in [0, {spec.output_width})")
    if val_x is None:
        val_x, val_y = x, y
    val_x = torch.from_numpy(np.array(val_x, dtype=np.float32))
    val_y = torch.from_numpy(np.array(val_y, dtype=np.int64))

    net = build_network(spec, config.seed)
    opt = torch.optim.Adam(net.parameters(), lr=config.lr)
    gen = torch.Generator().manual_seed(config.seed)
    xt, yt = torch.from_numpy(x), torch.from_numpy(y)
    best_acc, best_state, history = -1.0, None, []
    for epoch in range(config.epochs):
        net.train()
        order = torch.randperm(len(xt), generator=gen)
        total = 0.0
        for i in range(0, len(xt), config.batch_size):
            idx = order[i:i + config.batch_size]
            loss = F.cross_entropy(net(xt[idx], logits=True), yt[idx])
            if not torch.isfinite(loss):
                raise Divergence(f"classifier loss became {loss.item()} at epoch {epoch}",
                                 {"epoch": epoch, "last_mean_loss": history[-1] if history else None})
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item() * len(idx)
        history.append(total / len(xt))
        net.eval()
        with torch.no_grad():
            acc = (net(val_x, logits=True).argmax(1) == val_y).float().mean().item()
        if acc > best_acc:
            best_acc, best_state = acc, copy.deepcopy(net.state_dict())
        log.debug("epoch %d loss %.4f held-out acc %.4f", epoch, history[-1], acc)
    net.load_state_dict(best_state)
    info = {"epochs": config.epochs, "seed": config.seed, "best_heldout_accuracy": best_acc,
            "loss_history": history, "lr": config.lr, "batch_size": config.batch_size}
    info.update(meta or {})
    return TrainedModel.from_network(net, info)


def gradient_check(net: nn.Module, x: torch.Tensor, loss_fn, step: float = 1e-3, n_params: int = 8, seed: int = 0):
    """Max relative error between autograd and central differences (float64).

    Checks ``n_params`` randomly chosen parameter entries and input entries.
    """
    net = net.double()
    x = x.double().clone().requires_grad_(True)
    loss = loss_fn(net(x))
    params = [p for p in net.parameters() if p.requires_grad]
    grads = torch.autograd.grad(loss, params + [x])
    rng = np.random.default_rng(seed)
    worst = 0.0
    targets = list(zip(params + [x], grads))
    for tensor, grad in targets:
        flat = tensor.data.view(-1)
        gflat = grad.reshape(-1)
        for j in rng.choice(flat.numel(), size=min(n_params, flat.numel()), replace=False):
            orig = flat[j].item()
            with torch.no_grad():
                flat[j] = orig + step
                up = loss_fn(net(x)).item()
                flat[j] = orig - step
                down = loss_fn(net(x)).item()
                flat[j] = orig
            fd = (up - down) / (2 * step)
            an = gflat[j].item()
            denom = max(abs(fd), abs(an), 1e-8)
            worst = max(worst, abs(fd - an) / denom if denom > 1e-6 else abs(fd - an))
    return worst


def describe_cost(spec: ArchitectureSpec) -> str:
    c = count_cost(spec)
    return f"{spec.arch_id}: {_human(c.flops)} FLOP, {_human(c.params)} params"


def _human(n):
    for unit, scale in (("M", 1e6), ("K", 1e3)):
        if n >= scale:
            return f"{n / scale:.1f}{unit}"
    return str(n)


__all__ = [
    "ArchitectureSpec", "LayerSpec", "CostReport", "TrainedModel", "GeneratorModel", "SpecNet",
    "build_classifier", "generator_spec", "discriminator_spec", "mlp_classifier", "count_cost",
    "layer_costs", "infer_shapes", "stack", "train_classifier", "accuracy", "build_network",
    "gradient_check", "state_checksum", "dataset_kind_of",
]
