"""Exact linear fractional transformations over repeated real scalars.

An :class:`Lft` represents the matrix-valued rational function

    F(delta) = M22 + M21 D (I - M11 D)^-1 M12,   D = blkdiag(delta_k I_{n_k})

where every ``delta_k`` is a normalized real parameter in [-1, 1]. The
channels of ``D`` are kept grouped by label, in sorted label order, so that
``D`` is block diagonal with one repeated-scalar block per label.

Sums, products, inverses and block stacking are realized exactly; no order
reduction is attempted.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "IllPosedError",
    "UncertainReal",
    "Lft",
    "WellPosedness",
    "make_uncertain",
    "lft_eval",
    "lft_add",
    "lft_mul",
    "lft_inverse",
    "lft_scale",
    "lft_matrix",
    "well_posed",
]


class IllPosedError(ArithmeticError):
    """``I - M11 D`` is singular (or the requested inverse passes through zero)."""


@dataclass(frozen=True)
class UncertainReal:
    """A real parameter ``nominal * (1 + delta * spread)`` with ``delta`` in [-1, 1]."""

    nominal: float
    spread: float
    label: str

    def __post_init__(self):
        if not self.nominal > 0:
            raise ValueError(f"{self.label}: nominal value must be positive, got {self.nominal}")
        if not 0 <= self.spread < 1:
            raise ValueError(f"{self.label}: relative spread must lie in [0, 1), got {self.spread}")

    @property
    def bounds(self) -> tuple[float, float]:
        return self.denormalize(-1.0), self.denormalize(1.0)

    def denormalize(self, delta):
        return self.nominal * (1.0 + delta * self.spread)

    def normalize(self, value):
        if self.spread == 0:
            return np.zeros_like(np.asarray(value, dtype=float))
        return (np.asarray(value, dtype=float) / self.nominal - 1.0) / self.spread

    def lft(self) -> "Lft":
        s = self.nominal * self.spread
        return Lft([[0.0]], [[1.0]], [[s]], [[self.nominal]], [(self.label, 1)])


def make_uncertain(lo: float, hi: float, label: str) -> UncertainReal:
    """Uncertain real spanning ``[lo, hi]``; ``delta = -1, +1`` map to ``lo, hi``."""
    if not (lo > 0 and hi > lo):
        raise ValueError(f"{label}: need 0 < min < max, got [{lo}, {hi}]")
    return UncertainReal(nominal=(lo + hi) / 2.0, spread=(hi - lo) / (hi + lo), label=label)


def _as_matrix(x) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=float))


class Lft:
    """Upper LFT ``M22 + M21 D (I - M11 D)^-1 M12`` with a repeated-scalar ``D``.

    Instances are immutable; all operations return new objects.
    """

    __slots__ = ("M11", "M12", "M21", "M22", "structure")

    def __init__(self, M11, M12, M21, M22, structure: Sequence[tuple[str, int]] = ()):
        M22 = _as_matrix(M22)
        p, m = M22.shape
        nd = sum(n for _, n in structure)
        M11 = np.asarray(M11, dtype=float).reshape(nd, nd)
        M12 = np.asarray(M12, dtype=float).reshape(nd, m)
        M21 = np.asarray(M21, dtype=float).reshape(p, nd)
        labels = [lab for lab, _ in structure]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate labels in structure {structure}")
        for arr in (M11, M12, M21, M22):
            arr.setflags(write=False)
        object.__setattr__(self, "M11", M11)
        object.__setattr__(self, "M12", M12)
        object.__setattr__(self, "M21", M21)
        object.__setattr__(self, "M22", M22)
        object.__setattr__(self, "structure", tuple((str(lab), int(n)) for lab, n in structure))

    def __setattr__(self, name, value):
        raise AttributeError("Lft is immutable")

    # -- construction -----------------------------------------------------

    @classmethod
    def constant(cls, value) -> "Lft":
        M22 = _as_matrix(value)
        p, m = M22.shape
        return cls(np.zeros((0, 0)), np.zeros((0, m)), np.zeros((p, 0)), M22, ())

    @classmethod
    def _regroup(cls, M11, M12, M21, M22, channel_labels: Sequence[str]) -> "Lft":
        # Permute D channels so equal labels are contiguous, labels sorted.
        order = sorted(range(len(channel_labels)), key=lambda i: (channel_labels[i], i))
        M11 = M11[np.ix_(order, order)]
        M12 = M12[order, :]
        M21 = M21[:, order]
        structure = [(lab, sum(1 for _ in grp)) for lab, grp in itertools.groupby(channel_labels[i] for i in order)]
        return cls(M11, M12, M21, M22, structure)

    # -- properties ---------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return self.M22.shape

    @property
    def n_delta(self) -> int:
        return self.M11.shape[0]

    @property
    def counts(self) -> dict[str, int]:
        return dict(self.structure)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.structure)

    def channel_labels(self) -> list[str]:
        return [lab for lab, n in self.structure for _ in range(n)]

    def delta_matrix(self, delta: Mapping[str, float]) -> np.ndarray:
        check_assignment(self, delta)
        return np.diag([float(delta[lab]) for lab in self.channel_labels()])

    # -- evaluation -----------------------------------------------------------

    def __call__(self, delta: Mapping[str, float]) -> np.ndarray:
        return lft_eval(self, delta)

    @property
    def nominal(self) -> np.ndarray:
        return np.array(self.M22)

    # -- algebra ----------------------------------------------------------

    def __add__(self, other) -> "Lft":
        return lft_add(self, other)

    def __radd__(self, other) -> "Lft":
        return lft_add(other, self)

    def __neg__(self) -> "Lft":
        return lft_scale(self, -1.0)

    def __sub__(self, other) -> "Lft":
        return lft_add(self, -_coerce(other, self.shape))

    def __rsub__(self, other) -> "Lft":
        return lft_add(other, -self)

    def __mul__(self, other) -> "Lft":
        if np.isscalar(other):
            return lft_scale(self, other)
        return lft_mul(self, other)

    def __rmul__(self, other) -> "Lft":
        if np.isscalar(other):
            return lft_scale(self, other)
        return lft_mul(other, self)

    def __matmul__(self, other) -> "Lft":
        return lft_mul(self, other)

    def __rmatmul__(self, other) -> "Lft":
        return lft_mul(other, self)

    def __truediv__(self, other) -> "Lft":
        if np.isscalar(other):
            return lft_scale(self, 1.0 / other)
        return lft_mul(self, lft_inverse(_coerce(other, (1, 1))))

    def __rtruediv__(self, other) -> "Lft":
        return lft_mul(_coerce(other, (1, 1)), lft_inverse(self))

    def __pow__(self, k: int) -> "Lft":
        if not isinstance(k, (int, np.integer)) or k == 0:
            raise ValueError("only nonzero integer powers are supported")
        base = self if k > 0 else lft_inverse(self)
        out = base
        for _ in range(abs(k) - 1):
            out = lft_mul(out, base)
        return out

    def inverse(self) -> "Lft":
        return lft_inverse(self)

    def __repr__(self):
        return f"Lft(shape={self.shape}, structure={list(self.structure)})"

    def describe(self) -> str:
        """JSON dump of partition sizes, Delta structure and nominal value."""
        p, m = self.shape
        info = {
            "shape": [p, m],
            "n_delta": self.n_delta,
            "structure": [{"label": lab, "repeats": n} for lab, n in self.structure],
            "partition": {
                "M11": list(self.M11.shape),
                "M12": list(self.M12.shape),
                "M21": list(self.M21.shape),
                "M22": list(self.M22.shape),
            },
            "nominal": self.M22.tolist(),
        }
        return json.dumps(info, indent=2)


def _coerce(x, shape) -> Lft:
    if isinstance(x, Lft):
        return x
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        if shape[0] != shape[1]:
            raise ValueError(f"scalar cannot be promoted to non-square shape {shape}")
        arr = arr * np.eye(shape[0])
    return Lft.constant(arr)


def check_assignment(model: Lft, delta: Mapping[str, float], tol: float = 1e-12) -> None:
    missing = [lab for lab in model.labels if lab not in delta]
    if missing:
        raise KeyError(f"delta assignment missing labels {missing}")
    for lab in model.labels:
        v = float(delta[lab])
        if not abs(v) <= 1.0 + tol:
            raise ValueError(f"delta[{lab!r}]={v} outside [-1, 1]")


def lft_eval(model: Lft, delta: Mapping[str, float]) -> np.ndarray:
    """Upper LFT evaluation ``M22 + M21 D (I - M11 D)^-1 M12``."""
    if model.n_delta == 0:
        return np.array(model.M22)
    D = model.delta_matrix(delta)
    K = np.eye(model.n_delta) - model.M11 @ D
    if np.linalg.cond(K) > 1e13:
        raise IllPosedError(f"I - M11*Delta is singular at delta={dict(delta)}")
    return model.M22 + model.M21 @ D @ np.linalg.solve(K, model.M12)


def lft_add(a, b) -> Lft:
    if not isinstance(a, Lft):
        a = _coerce(a, b.shape)
    if not isinstance(b, Lft):
        b = _coerce(b, a.shape)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch in sum: {a.shape} vs {b.shape}")
    na, nb = a.n_delta, b.n_delta
    M11 = np.block([[a.M11, np.zeros((na, nb))], [np.zeros((nb, na)), b.M11]])
    M12 = np.vstack([a.M12, b.M12])
    M21 = np.hstack([a.M21, b.M21])
    return Lft._regroup(M11, M12, M21, a.M22 + b.M22, a.channel_labels() + b.channel_labels())


def lft_mul(a, b) -> Lft:
    """Matrix product ``a(delta) @ b(delta)``."""
    if not isinstance(a, Lft):
        a = Lft.constant(a)
    if not isinstance(b, Lft):
        b = Lft.constant(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"shape mismatch in product: {a.shape} @ {b.shape}")
    na, nb = a.n_delta, b.n_delta
    M11 = np.block([[a.M11, a.M12 @ b.M21], [np.zeros((nb, na)), b.M11]])
    M12 = np.vstack([a.M12 @ b.M22, b.M12])
    M21 = np.hstack([a.M21, a.M22 @ b.M21])
    M22 = a.M22 @ b.M22
    return Lft._regroup(M11, M12, M21, M22, a.channel_labels() + b.channel_labels())


def lft_scale(a: Lft, k: float) -> Lft:
    return Lft(a.M11, a.M12, k * a.M21, k * a.M22, a.structure)


def lft_inverse(a: Lft) -> Lft:
    """Pointwise matrix inverse; fails if the inverse is not well-posed on the unit box."""
    p, m = a.shape
    if p != m:
        raise ValueError(f"cannot invert non-square LFT of shape {a.shape}")
    if np.linalg.cond(a.M22) > 1e13:
        raise IllPosedError("nominal value (M22) is singular; inverse is not realizable")
    M22i = np.linalg.inv(a.M22)
    out = Lft(a.M11 - a.M12 @ M22i @ a.M21, a.M12 @ M22i, -M22i @ a.M21, M22i, a.structure)
    report = well_posed(out)
    if not report.ok:
        raise IllPosedError(
            f"inverse passes through a singular value at delta={report.worst_delta} "
            f"(min singular value {report.min_singular_value:.3e})"
        )
    return out


def _block_stack(items: Sequence[Lft], axis: int) -> Lft:
    items = list(items)
    if axis == 1:
        p = items[0].shape[0]
        if any(it.shape[0] != p for it in items):
            raise ValueError("hstack operands need the same number of rows")
    else:
        m = items[0].shape[1]
        if any(it.shape[1] != m for it in items):
            raise ValueError("vstack operands need the same number of columns")
    nds = [it.n_delta for it in items]
    N = sum(nds)
    M11 = np.zeros((N, N))
    off = 0
    for it, nd in zip(items, nds):
        M11[off : off + nd, off : off + nd] = it.M11
        off += nd
    if axis == 1:
        widths = [it.shape[1] for it in items]
        M12 = np.zeros((N, sum(widths)))
        r = c = 0
        for it, nd, w in zip(items, nds, widths):
            M12[r : r + nd, c : c + w] = it.M12
            r += nd
            c += w
        M21 = np.hstack([it.M21 for it in items])
        M22 = np.hstack([it.M22 for it in items])
    else:
        heights = [it.shape[0] for it in items]
        M21 = np.zeros((sum(heights), N))
        r = c = 0
        for it, nd, h in zip(items, nds, heights):
            M21[r : r + h, c : c + nd] = it.M21
            r += h
            c += nd
        M12 = np.vstack([it.M12 for it in items])
        M22 = np.vstack([it.M22 for it in items])
    labels = [lab for it in items for lab in it.channel_labels()]
    return Lft._regroup(M11, M12, M21, M22, labels)


def hstack(items: Sequence) -> Lft:
    return _block_stack([x if isinstance(x, Lft) else Lft.constant(x) for x in items], axis=1)


def vstack(items: Sequence) -> Lft:
    return _block_stack([x if isinstance(x, Lft) else Lft.constant(x) for x in items], axis=0)


def lft_matrix(rows: Sequence[Sequence]) -> Lft:
    """Assemble a matrix LFT from a nested list of blocks (LFTs or constants).

    Scalars ``0`` and plain numbers are accepted as 1x1 constant blocks. Each
    occurrence of an uncertain block contributes its own copy of the Delta
    channels, so an entry repeated in two places doubles its repetition count.
    """
    return vstack([hstack(row) for row in rows])


@dataclass(frozen=True)
class WellPosedness:
    ok: bool
    min_singular_value: float
    worst_delta: dict
    checked: int


def well_posed(
    model: Lft,
    n_random: int = 100,
    seed: int = 0,
    tol: float = 1e-10,
    box: Mapping[str, tuple[float, float]] | None = None,
) -> WellPosedness:
    """Check that ``I - M11 D`` stays nonsingular over the Delta box.

    Every vertex of the box and ``n_random`` uniform interior points are
    tested. For a single-label structure the check is exact: ``I - d M11`` is
    singular exactly when ``1/d`` is a real eigenvalue of ``M11``.
    """
    labels = model.labels
    nd = model.n_delta
    if nd == 0:
        return WellPosedness(True, np.inf, {}, 0)
    box = {lab: (-1.0, 1.0) for lab in labels} | dict(box or {})
    M11 = model.M11
    ch = model.channel_labels()

    def smin(assign):
        D = np.diag([assign[lab] for lab in ch])
        return np.linalg.svd(np.eye(nd) - M11 @ D, compute_uv=False)[-1]

    worst = (np.inf, {})
    count = 0
    for corner in itertools.product(*[box[lab] for lab in labels]):
        assign = dict(zip(labels, corner))
        s = smin(assign)
        count += 1
        if s < worst[0]:
            worst = (s, assign)
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        assign = {lab: float(rng.uniform(*box[lab])) for lab in labels}
        s = smin(assign)
        count += 1
        if s < worst[0]:
            worst = (s, assign)
    ok = worst[0] > tol
    if ok and len(labels) == 1:
        lo, hi = box[labels[0]]
        for lam in np.linalg.eigvals(M11):
            if abs(lam.imag) <= 1e-12 * max(1.0, abs(lam)) and lam.real != 0:
                d = 1.0 / lam.real
                if lo - 1e-12 <= d <= hi + 1e-12:
                    ok = False
                    worst = (0.0, {labels[0]: d})
    return WellPosedness(bool(ok), float(worst[0]), worst[1], count)
