"""Spectral neural operators with an auxiliary p axis."""

import json

import numpy as np

from . import _skno
from ._skno import NumericError, UsageError

__all__ = [
    "Model",
    "NumericError",
    "UsageError",
    "energy_capture",
    "entanglement_entropy",
    "evaluate",
    "generate",
    "grad_check",
    "oracle_verify",
    "rel_l2",
    "train",
    "trace_entropies",
]


def _dump(obj):
    return obj if isinstance(obj, str) else json.dumps(obj)


class Model:
    """A trainable operator; `arch` is the architecture dict used by the CLI."""

    def __init__(self, arch=None, seed=0, _impl=None):
        self._impl = _impl if _impl is not None else _skno.Model(_dump(arch or {}), seed)

    @classmethod
    def load(cls, path):
        return cls(_impl=_skno.Model.load(str(path)))

    def save(self, path):
        self._impl.save(str(path))

    @property
    def arch(self):
        return json.loads(self._impl.arch_json())

    @property
    def arch_hash(self):
        return self._impl.arch_hash()

    def param_names(self):
        return self._impl.param_names()

    def param(self, name):
        return self._impl.param(name)

    def set_param(self, name, values):
        self._impl.set_param(name, np.asarray(values, dtype=float))

    def __call__(self, a):
        """Maps one input of shape (N, C) or (N0, N1, C) to its prediction."""
        return self._impl.forward(np.asarray(a, dtype=float))


def generate(spec):
    """Returns (a, u) stacked as (samples, ..., channels) for a data spec dict."""
    return _skno.generate(_dump(spec))


def train(arch, config, train_data, test_data, out_dir=None):
    """Trains from data spec dicts; returns (best model, metrics rows, best test error)."""
    impl, metrics, best = _skno.train(_dump(arch), _dump(config), _dump(train_data), _dump(test_data),
                                      str(out_dir) if out_dir else "")
    return Model(_impl=impl), metrics, best


def evaluate(model, data, resolution=0):
    """Returns (mean relative L2, per-sample errors)."""
    return _skno.evaluate(model._impl, _dump(data), resolution)


def rel_l2(pred, target):
    return _skno.rel_l2(np.asarray(pred, dtype=float), np.asarray(target, dtype=float))


def grad_check(model, a, u, eps=1e-5):
    return _skno.grad_check(model._impl, np.asarray(a, dtype=float), np.asarray(u, dtype=float), eps)


def oracle_verify():
    """Returns (pass, table text)."""
    return _skno.oracle_verify()


def entanglement_entropy(v):
    return _skno.entanglement_entropy(np.asarray(v, dtype=float))


def energy_capture(v, chi, r):
    """Returns (energy, truncation error, |u|)."""
    return _skno.energy_capture(np.asarray(v, dtype=float), np.asarray(chi, dtype=float), int(r))


def trace_entropies(model, a):
    return _skno.trace_entropies(model._impl, np.asarray(a, dtype=float))
