"""Line-oriented model files: ``hydrotwin-model v1 <kind>`` then ``key value...`` lines."""

from __future__ import annotations

import numpy as np

from .svr import SvrModel
from .tree import DecisionTreeModel

MAGIC = "hydrotwin-model"
VERSION = "v1"


class FormatError(ValueError):
    pass


def _f(x) -> str:
    return repr(float(x))


def _row(values) -> str:
    return " ".join(_f(v) for v in values)


def _dump_tree(m: DecisionTreeModel) -> list[str]:
    lines = [
        "classes " + " ".join(str(int(c)) for c in m.classes),
        f"max_depth {'none' if m.max_depth is None else int(m.max_depth)}",
        f"min_samples_leaf {int(m.min_samples_leaf)}",
        f"degenerate {int(m.degenerate)}",
        f"nodes {m.n_nodes}",
    ]
    for i in range(m.n_nodes):
        hist = " ".join(str(int(h)) for h in m.histogram[i])
        if m.feature[i] < 0:
            lines.append(f"leaf {i} {int(m.label[i])} {hist}")
        else:
            lines.append(f"split {i} {int(m.feature[i])} {_f(m.threshold[i])} "
                         f"{int(m.left[i])} {int(m.right[i])} {int(m.label[i])} {hist}")
    return lines


def _dump_svr(m: SvrModel) -> list[str]:
    lines = [
        f"C {_f(m.C)}",
        f"epsilon {_f(m.epsilon)}",
        f"gamma {_f(m.gamma)}",
        f"bias {_f(m.bias)}",
        f"converged {int(m.converged)}",
        f"n_iter {int(m.n_iter)}",
        f"objective {_f(m.objective)}",
        f"kkt_gap {_f(m.kkt_gap)}",
        "x_mean " + _row(m.x_mean),
        "x_std " + _row(m.x_std),
        f"y_mean {_f(m.y_mean)}",
        f"y_std {_f(m.y_std)}",
        f"support_vectors {len(m.dual_coef)}",
    ]
    for coef, sv in zip(m.dual_coef, m.support_vectors):
        lines.append(f"sv {_f(coef)} {_row(sv)}")
    return lines


def dumps(model) -> str:
    kind = getattr(model, "kind", None)
    if kind == "tree":
        body = _dump_tree(model)
    elif kind == "svr":
        body = _dump_svr(model)
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return "\n".join([f"{MAGIC} {VERSION} {kind}", *body]) + "\n"


def model_save(model, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(model))


class _Lines:
    def __init__(self, text: str):
        self.lines = [ln.split() for ln in text.splitlines() if ln.strip()]
        self.pos = 1

    def take(self, key: str) -> list[str]:
        if self.pos >= len(self.lines):
            raise FormatError(f"unexpected end of file, expected {key!r}")
        parts = self.lines[self.pos]
        if parts[0] != key:
            raise FormatError(f"line {self.pos + 1}: expected {key!r}, got {parts[0]!r}")
        self.pos += 1
        return parts[1:]

    def value(self, key: str) -> str:
        parts = self.take(key)
        if len(parts) != 1:
            raise FormatError(f"{key}: expected one value")
        return parts[0]


def _load_tree(r: _Lines) -> DecisionTreeModel:
    classes = np.array([int(c) for c in r.take("classes")])
    max_depth = r.value("max_depth")
    min_leaf = int(r.value("min_samples_leaf"))
    degenerate = bool(int(r.value("degenerate")))
    n = int(r.value("nodes"))
    k = len(classes)
    feature = np.full(n, -1, dtype=int)
    threshold = np.zeros(n)
    left = np.full(n, -1, dtype=int)
    right = np.full(n, -1, dtype=int)
    label = np.zeros(n, dtype=classes.dtype)
    hist = np.zeros((n, k), dtype=int)
    for _ in range(n):
        if r.pos >= len(r.lines):
            raise FormatError("truncated node list")
        parts = r.lines[r.pos]
        r.pos += 1
        if parts[0] == "leaf" and len(parts) == 3 + k:
            i = int(parts[1])
            label[i] = int(parts[2])
            hist[i] = [int(h) for h in parts[3:]]
        elif parts[0] == "split" and len(parts) == 7 + k:
            i = int(parts[1])
            feature[i] = int(parts[2])
            threshold[i] = float(parts[3])
            left[i], right[i] = int(parts[4]), int(parts[5])
            label[i] = int(parts[6])
            hist[i] = [int(h) for h in parts[7:]]
        else:
            raise FormatError(f"line {r.pos}: bad node record")
    return DecisionTreeModel(classes, feature, threshold, left, right, label, hist,
                             None if max_depth == "none" else int(max_depth), min_leaf, degenerate)


def _load_svr(r: _Lines) -> SvrModel:
    C = float(r.value("C"))
    epsilon = float(r.value("epsilon"))
    gamma = float(r.value("gamma"))
    bias = float(r.value("bias"))
    converged = bool(int(r.value("converged")))
    n_iter = int(r.value("n_iter"))
    objective = float(r.value("objective"))
    kkt_gap = float(r.value("kkt_gap"))
    x_mean = np.array([float(v) for v in r.take("x_mean")])
    x_std = np.array([float(v) for v in r.take("x_std")])
    y_mean = float(r.value("y_mean"))
    y_std = float(r.value("y_std"))
    n = int(r.value("support_vectors"))
    d = len(x_mean)
    coef = np.zeros(n)
    sv = np.zeros((n, d))
    for k in range(n):
        parts = r.take("sv")
        if len(parts) != d + 1:
            raise FormatError(f"support vector {k}: expected {d + 1} values")
        coef[k] = float(parts[0])
        sv[k] = [float(v) for v in parts[1:]]
    return SvrModel(sv, coef, bias, gamma, x_mean, x_std, y_mean, y_std, C, epsilon,
                    converged, n_iter, objective, kkt_gap)


def loads(text: str, kind: str | None = None):
    r = _Lines(text)
    if not r.lines:
        raise FormatError("empty model file")
    head = r.lines[0]
    if len(head) != 3 or head[0] != MAGIC:
        raise FormatError(f"bad magic line {' '.join(head)!r}")
    if head[1] != VERSION:
        raise FormatError(f"unsupported version {head[1]!r}")
    if kind is not None and head[2] != kind:
        raise FormatError(f"expected a {kind} model, file holds {head[2]!r}")
    try:
        if head[2] == "tree":
            model = _load_tree(r)
        elif head[2] == "svr":
            model = _load_svr(r)
        else:
            raise FormatError(f"unknown model kind {head[2]!r}")
    except (ValueError, IndexError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(str(exc)) from None
    if r.pos != len(r.lines):
        raise FormatError(f"trailing content at line {r.pos + 1}")
    return model


def model_load(path, kind: str | None = None):
    with open(path) as fh:
        return loads(fh.read(), kind)
