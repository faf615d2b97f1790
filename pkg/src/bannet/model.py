"""Binary-activated network data model and exact forward semantics.

A network is a chain of affine layers. Every hidden layer is followed by a
two-valued activation; the output layer is purely affine. The activation is
parametrized by a threshold ``t`` and the two output values ``h1 < h2``, so
the default sign activation is ``(t=0, h1=-1, h2=+1)``.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DimensionError, ModelFormatError

MODEL_FORMAT_VERSION = 1


def _readonly(values, ndim: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise DimensionError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ActivationParams:
    """Two-valued activation: outputs h1 below the threshold t, h2 at or above it."""

    t: float = 0.0
    h1: float = -1.0
    h2: float = 1.0

    def __post_init__(self):
        if not (self.h1 < self.h2):
            raise ValueError(f"activation requires h1 < h2, got ({self.h1}, {self.h2})")


SIGN = ActivationParams(0.0, -1.0, 1.0)


@dataclass(frozen=True)
class LayerParams:
    """One affine layer: ``weights`` has one row per unit, ``biases`` one entry per unit."""

    weights: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _readonly(self.weights, 2, "weights"))
        object.__setattr__(self, "biases", _readonly(self.biases, 1, "biases"))
        if self.weights.shape[0] != self.biases.shape[0]:
            raise DimensionError(
                f"layer has {self.weights.shape[0]} weight rows but {self.biases.shape[0]} biases"
            )

    @property
    def width(self) -> int:
        return self.weights.shape[0]

    @property
    def in_width(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class BannModel:
    """A full network: hidden affine+activation layers, then an affine output layer."""

    activation: ActivationParams
    hidden: tuple[LayerParams, ...]
    output: LayerParams

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(self.hidden))
        layers = list(self.hidden) + [self.output]
        for k in range(1, len(layers)):
            if layers[k].in_width != layers[k - 1].width:
                raise DimensionError(
                    f"layer {k + 1} expects input width {layers[k].in_width}, "
                    f"but layer {k} has width {layers[k - 1].width}"
                )

    @property
    def depth(self) -> int:
        """Number of affine layers (hidden count + 1)."""
        return len(self.hidden) + 1

    @property
    def in_width(self) -> int:
        return (self.hidden[0] if self.hidden else self.output).in_width

    @property
    def out_width(self) -> int:
        return self.output.width

    def architecture(self) -> list[int]:
        widths = [self.in_width]
        widths += [layer.width for layer in self.hidden]
        widths.append(self.output.width)
        return widths


@dataclass(frozen=True)
class Dataset:
    """Feature matrix (m x d0) with a label matrix (m x dl)."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...] | None = None
    label_names: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "features", _readonly(self.features, 2, "features"))
        object.__setattr__(self, "labels", _readonly(self.labels, 2, "labels"))
        if self.features.shape[0] != self.labels.shape[0]:
            raise DataError(
                f"features have {self.features.shape[0]} rows, labels {self.labels.shape[0]}"
            )
        if self.features.shape[0] < 1:
            raise DataError("dataset is empty")

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_labels(self) -> int:
        return self.labels.shape[1]

    def take(self, indices) -> "Dataset":
        return Dataset(
            self.features[indices],
            self.labels[indices],
            self.feature_names,
            self.label_names,
        )


def activate(z, params: ActivationParams) -> np.ndarray:
    """Apply the two-valued activation elementwise; the threshold itself maps to h2."""
    z = np.asarray(z, dtype=float)
    return np.where(z < params.t, params.h1, params.h2)


def _forward_hidden(model: BannModel, x: np.ndarray, upto: int) -> np.ndarray:
    """Activations after hidden layer ``upto`` (1-based) for a batch of rows."""
    out = x
    for k in range(upto):
        layer = model.hidden[k]
        if out.shape[-1] != layer.in_width:
            raise DimensionError(
                f"layer {k + 1}: input width {out.shape[-1]}, expected {layer.in_width}"
            )
        out = activate(out @ layer.weights.T + layer.biases, model.activation)
    return out


def forward(model: BannModel, x) -> np.ndarray:
    """Network output for a single input vector or a batch of row vectors."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    batch = x.reshape(1, -1) if single else x
    hidden = _forward_hidden(model, batch, len(model.hidden))
    if hidden.shape[-1] != model.output.in_width:
        raise DimensionError(
            f"layer {model.depth}: input width {hidden.shape[-1]}, "
            f"expected {model.output.in_width}"
        )
    out = hidden @ model.output.weights.T + model.output.biases
    return out[0] if single else out


def hidden_pattern(model: BannModel, x, k: int) -> np.ndarray:
    """Activation pattern after hidden layer k: a vector over {h1, h2}."""
    if not 1 <= k <= model.depth - 1:
        raise DimensionError(f"hidden layer index {k} out of range 1..{model.depth - 1}")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    batch = x.reshape(1, -1) if single else x
    out = _forward_hidden(model, batch, k)
    return out[0] if single else out


def mse(model: BannModel, data: Dataset) -> float:
    """Mean over examples of the squared Euclidean prediction error."""
    if data.m == 0:
        raise DataError("cannot evaluate on an empty dataset")
    pred = forward(model, data.features)
    if pred.shape[1] != data.n_labels:
        raise DimensionError(
            f"model outputs {pred.shape[1]} values, labels have {data.n_labels}"
        )
    diff = pred - data.labels
    return float(np.sum(diff * diff) / data.m)


def reparametrize_activation(model: BannModel, target: ActivationParams) -> BannModel:
    """Rewrite weights and biases so the network computes the same function
    under a different activation parametrization.

    With a = (h1-h2)/(h1*-h2*) and k = a*h1* - h1, the old activation values
    satisfy h = a*h* - k, so scaling deeper weights by a and absorbing the
    constant k through each unit's incoming row sum preserves every
    pre-activation sign and the final output. The first hidden layer only
    shifts its biases by the threshold change; the output layer takes the
    row-sum correction without the threshold shift.
    """
    src = model.activation
    if src == target:
        return model
    if not model.hidden:
        # No activations anywhere; the function is already independent of them.
        return BannModel(target, (), model.output)
    a = (src.h1 - src.h2) / (target.h1 - target.h2)
    k_const = a * target.h1 - src.h1
    delta = target.t - src.t

    new_hidden = [LayerParams(model.hidden[0].weights, model.hidden[0].biases + delta)]
    for layer in model.hidden[1:]:
        rowsum = layer.weights.sum(axis=1)
        new_hidden.append(LayerParams(a * layer.weights, layer.biases - k_const * rowsum + delta))
    out_rowsum = model.output.weights.sum(axis=1)
    new_output = LayerParams(a * model.output.weights, model.output.biases - k_const * out_rowsum)
    return BannModel(target, tuple(new_hidden), new_output)


def count_nonzero_parameters(model: BannModel, tol: float = 0.0) -> int:
    """Number of weights and biases with absolute value above tol.

    The default tol of 0 counts exact nonzeros; the sparse solver produces
    exact zeros, so no threshold fudge is needed.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    total = 0
    for layer in list(model.hidden) + [model.output]:
        total += int(np.count_nonzero(np.abs(layer.weights) > tol))
        total += int(np.count_nonzero(np.abs(layer.biases) > tol))
    return total


def model_to_dict(model: BannModel) -> dict:
    return {
        "version": MODEL_FORMAT_VERSION,
        "activation": {
            "t": model.activation.t,
            "h1": model.activation.h1,
            "h2": model.activation.h2,
        },
        "hidden": [
            {"weights": layer.weights.tolist(), "biases": layer.biases.tolist()}
            for layer in model.hidden
        ],
        "output": {
            "weights": model.output.weights.tolist(),
            "biases": model.output.biases.tolist(),
        },
    }


def model_from_dict(doc: dict) -> BannModel:
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    version = doc.get("version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version: {version!r}")
    try:
        act = doc["activation"]
        activation = ActivationParams(float(act["t"]), float(act["h1"]), float(act["h2"]))
        hidden = tuple(
            LayerParams(np.array(h["weights"], dtype=float), np.array(h["biases"], dtype=float))
            for h in doc["hidden"]
        )
        output = LayerParams(
            np.array(doc["output"]["weights"], dtype=float),
            np.array(doc["output"]["biases"], dtype=float),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model document: {exc}") from exc
    return BannModel(activation, hidden, output)


def write_atomic(path: str, text: str) -> None:
    """Write via a temp file in the same directory, then rename into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_model(model: BannModel, path: str) -> None:
    write_atomic(path, json.dumps(model_to_dict(model), indent=2) + "\n")


def load_model(path: str) -> BannModel:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from exc
    return model_from_dict(doc)
