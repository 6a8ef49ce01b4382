"""Dense 64-bit tensors with a reverse-mode differentiation tape and Adam.

Everything downstream (graph encoding, contrastive pre-training, prompt
tuning) is built from the handful of operations defined here.  Values are
2-D numpy arrays wrapped in an immutable ``Tensor``.  Gradients flow
through a ``Tape`` that is rebuilt for every optimization step: operations
whose inputs touch a tape register a node on it, operations on plain
tensors just compute.

Constants (for example a normalized adjacency) enter the graph through
``const_mm`` and may be scipy sparse matrices; tensors themselves stay
dense.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateInputError, DimensionError, NumericError

LEAKY_SLOPE = 0.01


def _as_matrix(data) -> np.ndarray:
    arr = np.array(data, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise DimensionError(f"tensors are 2-D, got {arr.ndim}-D data")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"tensor shape components must be >= 1, got {arr.shape}")
    return arr


def _all_finite(arr: np.ndarray) -> bool:
    # One vectorized reduction instead of an isfinite scan: any NaN poisons
    # the sum, a lone +/-inf survives it, and inf - inf yields NaN.
    if arr.size > 4096:
        return bool(np.isfinite(arr.sum()))
    return bool(np.isfinite(arr).all())


class Tensor:
    """Immutable 2-D float64 matrix, optionally bound to a tape node.

    A tensor with ``tape is None`` is a plain value; one with a tape behaves
    identically in forward computations but records every operation so
    ``backward`` can reach it.
    """

    __slots__ = ("data", "tape", "tape_id")

    def __init__(self, data, tape: "Tape | None" = None, tape_id: int | None = None):
        arr = _as_matrix(data)
        if not _all_finite(arr):
            raise NumericError("tensor holds non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "tape", tape)
        object.__setattr__(self, "tape_id", tape_id)

    @classmethod
    def _wrap(cls, arr: np.ndarray, tape=None, tape_id=None) -> "Tensor":
        # Fast path for freshly computed op outputs: skips the copy in
        # np.array but keeps the finiteness and shape checks.
        t = object.__new__(cls)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError(f"bad result shape {arr.shape}")
        if not _all_finite(arr):
            raise NumericError("operation produced non-finite values")
        arr.setflags(write=False)
        object.__setattr__(t, "data", arr)
        object.__setattr__(t, "tape", tape)
        object.__setattr__(t, "tape_id", tape_id)
        return t

    def __setattr__(self, name, value):
        raise AttributeError("Tensor is immutable")

    def __reduce__(self):
        # Tape bindings never cross process boundaries; pickle values only.
        return (Tensor, (np.asarray(self.data),))

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def tracked(self) -> bool:
        return self.tape is not None

    def item(self) -> float:
        if self.shape != (1, 1):
            raise DimensionError(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.data[0, 0])

    def row(self, i: int) -> np.ndarray:
        return self.data[i]

    def __repr__(self):
        tag = f", node={self.tape_id}" if self.tracked else ""
        return f"Tensor(shape={self.shape}{tag})"

    # constructors ---------------------------------------------------------

    @staticmethod
    def zeros(rows: int, cols: int) -> "Tensor":
        return Tensor._wrap(np.zeros((rows, cols)))

    @staticmethod
    def ones(rows: int, cols: int) -> "Tensor":
        return Tensor._wrap(np.ones((rows, cols)))

    @staticmethod
    def full(rows: int, cols: int, value: float) -> "Tensor":
        return Tensor._wrap(np.full((rows, cols), float(value)))

    @staticmethod
    def eye(n: int) -> "Tensor":
        return Tensor._wrap(np.eye(n))


@dataclass
class TapeNode:
    op: str
    inputs: tuple[int, ...]
    value: np.ndarray
    payload: object = None
    needs_grad: bool = False


class Tape:
    """Topologically ordered record of one forward computation.

    Nodes are appended in execution order, so every node's inputs precede
    it.  A tape belongs to a single training step; optimizers rebuild it
    rather than reusing it.
    """

    def __init__(self):
        self.nodes: list[TapeNode] = []
        self.gradients: list[np.ndarray | None] = []

    def _add(self, op, inputs, value, payload=None, needs_grad=False) -> int:
        self.nodes.append(TapeNode(op, tuple(inputs), value, payload, needs_grad))
        return len(self.nodes) - 1

    def leaf(self, data) -> Tensor:
        """Register a trainable leaf parameter and return its tracked tensor."""
        t = data if isinstance(data, Tensor) else Tensor(data)
        nid = self._add("leaf", (), t.data, needs_grad=True)
        return Tensor._wrap(t.data, self, nid)

    def constant(self, data) -> Tensor:
        """Intern a non-trainable value so tracked ops can reference it."""
        t = data if isinstance(data, Tensor) else Tensor(data)
        nid = self._add("const", (), t.data)
        return Tensor._wrap(t.data, self, nid)

    def grad(self, tensor: Tensor) -> np.ndarray:
        if tensor.tape is not self or tensor.tape_id is None:
            raise NumericError("tensor is not tracked on this tape")
        g = self.gradients[tensor.tape_id] if self.gradients else None
        if g is None:
            raise NumericError("no gradient: run backward first")
        return g

    def num_leaves(self) -> int:
        return sum(1 for n in self.nodes if n.op == "leaf")


def _join_tape(*tensors: Tensor) -> Tape | None:
    tape = None
    for t in tensors:
        if t.tracked:
            if tape is None:
                tape = t.tape
            elif tape is not t.tape:
                raise NumericError("operands live on different tapes")
    return tape


def _node_id(tape: Tape, t: Tensor) -> int:
    if t.tracked:
        return t.tape_id
    return tape._add("const", (), t.data)


def _record(tape, op, input_tensors, value, payload=None) -> Tensor:
    ids = [_node_id(tape, t) for t in input_tensors]
    needs = any(tape.nodes[i].needs_grad for i in ids)
    nid = tape._add(op, ids, value, payload, needs)
    return Tensor._wrap(value, tape, nid)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


_SPARSE_MIN_SIZE = 50_000
_SPARSE_MAX_DENSITY = 0.25


def _sparse_worthwhile(arr: np.ndarray) -> bool:
    if arr.size < _SPARSE_MIN_SIZE:
        return False
    sample = arr[:: max(1, arr.shape[0] // 64)]
    return np.count_nonzero(sample) / sample.size < _SPARSE_MAX_DENSITY


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product a @ b.

    When the left operand is an untracked constant and mostly zeros (bag-of-
    words features, say), the product and the right operand's gradient run
    through a CSR kernel; the result is the same up to float reassociation.
    """
    if a.cols != b.rows:
        raise DimensionError(f"matmul mismatch: {a.shape} @ {b.shape}")
    a_csr = None
    if not a.tracked and _sparse_worthwhile(a.data):
        a_csr = sp.csr_matrix(a.data)
        value = np.asarray(a_csr @ b.data)
    else:
        value = a.data @ b.data
    tape = _join_tape(a, b)
    if tape is None:
        return Tensor._wrap(value)
    payload = a_csr.T.tocsr() if a_csr is not None else None
    return _record(tape, "matmul", (a, b), value, payload=payload)


def const_mm(matrix, a: Tensor) -> Tensor:
    """Product of a constant matrix (dense or scipy sparse) with a tensor.

    Used for adjacency propagation, row gathering / aggregation and row
    broadcasts; the constant never receives a gradient.
    """
    if isinstance(matrix, Tensor):
        matrix = matrix.data
    if sp.issparse(matrix):
        mat = matrix.tocsr()
    else:
        mat = np.asarray(matrix, dtype=np.float64)
        if mat.ndim != 2:
            raise DimensionError("const_mm needs a 2-D matrix")
    if mat.shape[1] != a.rows:
        raise DimensionError(f"const_mm mismatch: {mat.shape} @ {a.shape}")
    value = mat @ a.data
    if sp.issparse(matrix):
        value = np.asarray(value)
    if not a.tracked:
        return Tensor._wrap(value)
    mat_t = mat.T.tocsr() if sp.issparse(mat) else mat.T
    return _record(a.tape, "const_mm", (a,), value, payload=mat_t)


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise DimensionError(f"add shape mismatch: {a.shape} vs {b.shape}")
    value = a.data + b.data
    tape = _join_tape(a, b)
    if tape is None:
        return Tensor._wrap(value)
    return _record(tape, "add", (a, b), value)


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise DimensionError(f"mul shape mismatch: {a.shape} vs {b.shape}")
    value = a.data * b.data
    tape = _join_tape(a, b)
    if tape is None:
        return Tensor._wrap(value)
    return _record(tape, "mul", (a, b), value)


def relu(a: Tensor) -> Tensor:
    value = np.maximum(a.data, 0.0)
    if not a.tracked:
        return Tensor._wrap(value)
    return _record(a.tape, "relu", (a,), value)


def leaky_relu(a: Tensor, slope: float = LEAKY_SLOPE) -> Tensor:
    value = np.where(a.data > 0.0, a.data, slope * a.data)
    if not a.tracked:
        return Tensor._wrap(value)
    return _record(a.tape, "leaky_relu", (a,), value, payload=float(slope))


def elementwise(kind: str, a: Tensor, b: Tensor | None = None) -> Tensor:
    """Pointwise dispatcher: binary {mul, add} and unary {relu, leaky_relu}."""
    if kind == "mul":
        if b is None:
            raise DimensionError("elementwise mul needs two operands")
        return mul(a, b)
    if kind == "add":
        if b is None:
            raise DimensionError("elementwise add needs two operands")
        return add(a, b)
    if kind == "relu":
        return relu(a)
    if kind == "leaky_relu":
        return leaky_relu(a)
    raise DimensionError(f"unknown elementwise kind {kind!r}")


def row_softmax(a: Tensor) -> Tensor:
    """Softmax over each row; shift-invariant and rows sum to one."""
    shifted = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    value = e / e.sum(axis=1, keepdims=True)
    if not a.tracked:
        return Tensor._wrap(value)
    return _record(a.tape, "row_softmax", (a,), value)


def log(a: Tensor) -> Tensor:
    with np.errstate(divide="ignore", invalid="ignore"):
        value = np.log(a.data)
    if not np.isfinite(value).all():
        raise NumericError("log of non-positive value")
    if not a.tracked:
        return Tensor._wrap(value)
    return _record(a.tape, "log", (a,), value)


def exp(a: Tensor) -> Tensor:
    with np.errstate(over="raise"):
        try:
            value = np.exp(a.data)
        except FloatingPointError as err:
            raise NumericError("exp overflow") from err
    if not a.tracked:
        return Tensor._wrap(value)
    return _record(a.tape, "exp", (a,), value)


def sum_all(a: Tensor) -> Tensor:
    """Sum of all entries as a 1x1 tensor."""
    value = np.array([[a.data.sum()]])
    if not a.tracked:
        return Tensor._wrap(value)
    return _record(a.tape, "sum_all", (a,), value)


def smul(s: Tensor, a: Tensor) -> Tensor:
    """Scale a matrix by a (possibly trainable) 1x1 scalar tensor."""
    if s.shape != (1, 1):
        raise DimensionError(f"smul scalar must be 1x1, got {s.shape}")
    value = s.data[0, 0] * a.data
    tape = _join_tape(s, a)
    if tape is None:
        return Tensor._wrap(value)
    return _record(tape, "smul", (s, a), value)


def cmul(a: Tensor, c: float) -> Tensor:
    """Multiply by a plain Python constant."""
    c = float(c)
    if not np.isfinite(c):
        raise NumericError("cmul constant must be finite")
    value = c * a.data
    if not a.tracked:
        return Tensor._wrap(value)
    return _record(a.tape, "cmul", (a,), value, payload=c)


class SparseConst:
    """A constant sparse matrix with its pattern laid out for masked ops.

    ``rows``/``cols``/``vals`` follow the canonical CSR data order, so value
    vectors indexed by them can be dropped straight into a copy of ``csr``.
    """

    __slots__ = ("csr", "rows", "cols", "vals", "shape")

    def __init__(self, matrix):
        csr = sp.csr_matrix(matrix)
        csr.sum_duplicates()
        csr.sort_indices()
        self.csr = csr
        self.shape = csr.shape
        self.rows = np.repeat(
            np.arange(csr.shape[0]), np.diff(csr.indptr)
        ).astype(np.int64)
        self.cols = csr.indices.astype(np.int64)
        self.vals = csr.data.copy()

    def with_values(self, vals: np.ndarray) -> sp.csr_matrix:
        out = self.csr.copy()
        out.data = vals
        return out

    def __reduce__(self):
        return (SparseConst, (self.csr,))


def masked_project(
    hidden: Tensor, w2: Tensor, b2: Tensor, base: SparseConst, theta: np.ndarray
) -> Tensor:
    """((hidden @ w2 + 1 b2) * X) @ theta without the dense intermediates.

    X (``base``) and ``theta`` are constants; the per-node affine map only
    matters at X's nonzero positions, so everything runs at nnz scale.
    Gradients flow to hidden, w2 and b2.
    """
    n, d = base.shape
    if hidden.rows != n or w2.rows != hidden.cols or w2.cols != d:
        raise DimensionError(
            f"masked_project shapes: hidden {hidden.shape}, w2 {w2.shape}, X {base.shape}"
        )
    if b2.shape != (1, d):
        raise DimensionError(f"masked_project bias must be 1x{d}, got {b2.shape}")
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape[0] != d:
        raise DimensionError(f"masked_project theta rows {theta.shape[0]} != {d}")

    p_vals = (
        np.einsum("ij,ij->i", hidden.data[base.rows], w2.data.T[base.cols])
        + b2.data[0, base.cols]
    )
    value = np.asarray(base.with_values(p_vals * base.vals) @ theta)
    tape = _join_tape(hidden, w2, b2)
    if tape is None:
        return Tensor._wrap(value)
    return _record(tape, "masked_project", (hidden, w2, b2), value, payload=(base, theta))


def _row_norms(x: np.ndarray, what: str) -> np.ndarray:
    norms = np.sqrt((x * x).sum(axis=1))
    if (norms == 0.0).any():
        raise DegenerateInputError(f"zero-norm row in {what}")
    return norms


def cosine(u: Tensor, v: Tensor) -> Tensor:
    """Cosine similarity of two vectors as a 1x1 tensor (value in [-1, 1])."""
    for t in (u, v):
        if t.rows != 1 and t.cols != 1:
            raise DimensionError(f"cosine expects vectors, got {t.shape}")
    if u.data.size != v.data.size:
        raise DimensionError(f"cosine length mismatch: {u.shape} vs {v.shape}")
    uf = u.data.reshape(-1)
    vf = v.data.reshape(-1)
    nu = np.sqrt(uf @ uf)
    nv = np.sqrt(vf @ vf)
    if nu == 0.0 or nv == 0.0:
        raise DegenerateInputError("cosine of zero-norm vector")
    value = np.array([[(uf @ vf) / (nu * nv)]])
    tape = _join_tape(u, v)
    if tape is None:
        return Tensor._wrap(value)
    return _record(tape, "cosine", (u, v), value, payload=(nu, nv))


def cosine_pairs(a: Tensor, b: Tensor) -> Tensor:
    """All pairwise cosine similarities between rows of a and rows of b."""
    if a.cols != b.cols:
        raise DimensionError(f"cosine_pairs dim mismatch: {a.shape} vs {b.shape}")
    na = _row_norms(a.data, "cosine_pairs left operand")
    nb = _row_norms(b.data, "cosine_pairs right operand")
    value = (a.data @ b.data.T) / np.outer(na, nb)
    tape = _join_tape(a, b)
    if tape is None:
        return Tensor._wrap(value)
    return _record(tape, "cosine_pairs", (a, b), value, payload=(na, nb))


def rowwise_cosine(a: Tensor, b: Tensor) -> Tensor:
    """Cosine similarity of corresponding rows, as an n x 1 column."""
    if a.shape != b.shape:
        raise DimensionError(f"rowwise_cosine shape mismatch: {a.shape} vs {b.shape}")
    na = _row_norms(a.data, "rowwise_cosine left operand")
    nb = _row_norms(b.data, "rowwise_cosine right operand")
    value = ((a.data * b.data).sum(axis=1) / (na * nb)).reshape(-1, 1)
    tape = _join_tape(a, b)
    if tape is None:
        return Tensor._wrap(value)
    return _record(tape, "rowwise_cosine", (a, b), value, payload=(na, nb))


# ---------------------------------------------------------------------------
# backward
# ---------------------------------------------------------------------------


def _backward_into(tape: Tape, grads: list, owned: list, nid: int, g: np.ndarray):
    # Rules hand over freshly allocated arrays except when forwarding their
    # incoming gradient unchanged (add); those are stored by reference and
    # only copied if a second contribution arrives.
    if not tape.nodes[nid].needs_grad:
        return
    if grads[nid] is None:
        grads[nid] = g
        owned[nid] = False
    elif owned[nid]:
        grads[nid] += g
    else:
        grads[nid] = grads[nid] + g
        owned[nid] = True


def backward(loss: Tensor, tape: Tape | None = None) -> None:
    """Reverse sweep from a scalar loss, populating tape.gradients.

    Every trainable leaf ends up with a gradient of its own shape (zeros if
    the loss does not depend on it).
    """
    if tape is None:
        tape = loss.tape
    if loss.tape is not tape or loss.tape_id is None:
        raise NumericError("loss is not a node on this tape")
    if loss.shape != (1, 1):
        raise DimensionError(f"loss must be scalar (1x1), got {loss.shape}")

    nodes = tape.nodes
    grads: list[np.ndarray | None] = [None] * len(nodes)
    owned: list[bool] = [False] * len(nodes)
    grads[loss.tape_id] = np.ones((1, 1))
    owned[loss.tape_id] = True

    for nid in range(loss.tape_id, -1, -1):
        node = nodes[nid]
        g = grads[nid]
        if g is None or not node.needs_grad or node.op in ("leaf", "const"):
            continue
        ins = node.inputs
        if node.op == "matmul":
            a, b = nodes[ins[0]], nodes[ins[1]]
            if a.needs_grad:
                _backward_into(tape, grads, owned, ins[0], g @ b.value.T)
            if b.needs_grad:
                a_t_csr = node.payload
                gb = a_t_csr @ g if a_t_csr is not None else a.value.T @ g
                _backward_into(tape, grads, owned, ins[1], np.asarray(gb))
        elif node.op == "const_mm":
            mat_t = node.payload
            ga = mat_t @ g
            if sp.issparse(mat_t):
                ga = np.asarray(ga)
            _backward_into(tape, grads, owned, ins[0], ga)
        elif node.op == "add":
            _backward_into(tape, grads, owned, ins[0], g)
            _backward_into(tape, grads, owned, ins[1], g)
        elif node.op == "mul":
            a, b = nodes[ins[0]], nodes[ins[1]]
            if a.needs_grad:
                _backward_into(tape, grads, owned, ins[0], g * b.value)
            if b.needs_grad:
                _backward_into(tape, grads, owned, ins[1], g * a.value)
        elif node.op == "relu":
            _backward_into(tape, grads, owned, ins[0], g * (node.value > 0.0))
        elif node.op == "leaky_relu":
            slope = node.payload
            x = nodes[ins[0]].value
            _backward_into(tape, grads, owned, ins[0], g * np.where(x > 0.0, 1.0, slope))
        elif node.op == "row_softmax":
            s = node.value
            gs = g * s
            _backward_into(tape, grads, owned, ins[0], gs - s * gs.sum(axis=1, keepdims=True))
        elif node.op == "log":
            _backward_into(tape, grads, owned, ins[0], g / nodes[ins[0]].value)
        elif node.op == "exp":
            _backward_into(tape, grads, owned, ins[0], g * node.value)
        elif node.op == "sum_all":
            x = nodes[ins[0]].value
            _backward_into(tape, grads, owned, ins[0], np.full(x.shape, g[0, 0]))
        elif node.op == "smul":
            s, a = nodes[ins[0]], nodes[ins[1]]
            if s.needs_grad:
                _backward_into(tape, grads, owned, ins[0], np.array([[(g * a.value).sum()]]))
            if a.needs_grad:
                _backward_into(tape, grads, owned, ins[1], s.value[0, 0] * g)
        elif node.op == "cmul":
            _backward_into(tape, grads, owned, ins[0], node.payload * g)
        elif node.op == "masked_project":
            base, theta = node.payload
            hidden, w2, b2 = nodes[ins[0]], nodes[ins[1]], nodes[ins[2]]
            dm = np.einsum("ij,ij->i", g[base.rows], theta[base.cols])
            dp = dm * base.vals
            dp_csr = base.with_values(dp)
            if hidden.needs_grad:
                _backward_into(
                    tape, grads, owned, ins[0], np.asarray(dp_csr @ w2.value.T)
                )
            if w2.needs_grad:
                gw2 = np.asarray((dp_csr.T @ hidden.value).T)
                _backward_into(tape, grads, owned, ins[1], gw2)
            if b2.needs_grad:
                gb2 = np.bincount(
                    base.cols, weights=dp, minlength=base.shape[1]
                ).reshape(1, -1)
                _backward_into(tape, grads, owned, ins[2], gb2)
        elif node.op == "cosine":
            u, v = nodes[ins[0]], nodes[ins[1]]
            nu, nv = node.payload
            c = node.value[0, 0]
            gs = g[0, 0]
            uf = u.value.reshape(-1)
            vf = v.value.reshape(-1)
            if u.needs_grad:
                du = gs * (vf / (nu * nv) - c * uf / (nu * nu))
                _backward_into(tape, grads, owned, ins[0], du.reshape(u.value.shape))
            if v.needs_grad:
                dv = gs * (uf / (nu * nv) - c * vf / (nv * nv))
                _backward_into(tape, grads, owned, ins[1], dv.reshape(v.value.shape))
        elif node.op == "cosine_pairs":
            a, b = nodes[ins[0]], nodes[ins[1]]
            na, nb = node.payload
            s = node.value
            if a.needs_grad:
                da = (g / nb[None, :]) @ b.value / na[:, None] \
                    - ((g * s).sum(axis=1) / (na * na))[:, None] * a.value
                _backward_into(tape, grads, owned, ins[0], da)
            if b.needs_grad:
                db = (g / na[:, None]).T @ a.value / nb[:, None] \
                    - ((g * s).sum(axis=0) / (nb * nb))[:, None] * b.value
                _backward_into(tape, grads, owned, ins[1], db)
        elif node.op == "rowwise_cosine":
            a, b = nodes[ins[0]], nodes[ins[1]]
            na, nb = node.payload
            c = node.value
            if a.needs_grad:
                da = g * (b.value / (na * nb)[:, None] - c * a.value / (na * na)[:, None])
                _backward_into(tape, grads, owned, ins[0], da)
            if b.needs_grad:
                db = g * (a.value / (na * nb)[:, None] - c * b.value / (nb * nb)[:, None])
                _backward_into(tape, grads, owned, ins[1], db)
        else:
            raise NumericError(f"no backward rule for op {node.op!r}")

    for nid, node in enumerate(nodes):
        if node.op == "leaf" and grads[nid] is None:
            grads[nid] = np.zeros_like(node.value)
    tape.gradients = grads


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdamHyper:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


@dataclass
class AdamState:
    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step_count: int
    hyper: AdamHyper

    @classmethod
    def init(cls, params: list[Tensor], hyper: AdamHyper | None = None) -> "AdamState":
        hyper = hyper or AdamHyper()
        if hyper.learning_rate < 0:
            raise NumericError("learning_rate must be >= 0")
        return cls(
            first_moment=[np.zeros(p.shape) for p in params],
            second_moment=[np.zeros(p.shape) for p in params],
            step_count=0,
            hyper=hyper,
        )


def adam_step(
    params: list[Tensor], grads: list[np.ndarray], state: AdamState
) -> tuple[list[Tensor], AdamState]:
    """One Adam update with bias correction; returns fresh params and state."""
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise DimensionError("adam_step: params/grads/state length mismatch")
    h = state.hyper
    t = state.step_count + 1
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        g = np.asarray(g, dtype=np.float64)
        if g.shape != p.shape:
            raise DimensionError(f"adam_step grad shape {g.shape} != param {p.shape}")
        m1 = h.beta1 * m + (1.0 - h.beta1) * g
        v1 = h.beta2 * v + (1.0 - h.beta2) * g * g
        m_hat = m1 / (1.0 - h.beta1**t)
        v_hat = v1 / (1.0 - h.beta2**t)
        step = h.learning_rate * m_hat / (np.sqrt(v_hat) + h.epsilon)
        new_params.append(Tensor._wrap(p.data - step))
        new_m.append(m1)
        new_v.append(v1)
    return new_params, AdamState(new_m, new_v, t, h)
