"""Compilation of an MPS into a quantum circuit acting on ``|0...0>``.

Two routes are provided.

* :func:`exact_circuit_from_mps` completes the right-canonical site
  tensors to unitaries. Gate ``i`` acts on qubits ``i .. i + n_i`` where
  ``2**n_i`` is the padded right bond dimension of site ``i``.
* :func:`optimize_staircase_circuit` fixes ``D`` staircase layers of
  two-qubit gates and maximises ``F = |<psi|U|0>|^2`` one gate at a time:
  with the environment ``E = |phi~><psi~|`` and its SVD ``E = W S W~^dag``
  the optimal gate is ``V = W~ W^dag`` and ``F = (Tr S)^2``.

Environments are either evaluated on dense state vectors or by
contracting the overlap network column by column. In the latter, each
staircase layer is written as an exact bond-4 MPO obtained by splitting
every gate into two single-qubit pieces.

Qubit ``q`` is the ``q``-th most significant bit of the basis index, and
basis state ``0`` is ``|0...0>``, the same ordering used for MPS.
"""

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ._kernels import apply_gate_2q, environment_2q
from .ed import DenseState
from .errors import CapacityError, CircuitFormatError, DimensionError
from .mps import DENSE_CAP, Mps, canonicalize, to_dense
from .tensor import truncated_svd

__all__ = [
    "Gate",
    "Circuit",
    "CompileReport",
    "UNITARY_TOL",
    "DENSE_ENV_MAX",
    "circuit_apply",
    "circuit_fidelity",
    "exact_circuit_from_mps",
    "gate_environment",
    "optimal_gate",
    "optimize_staircase_circuit",
    "export_circuit",
    "import_circuit",
]

#: largest deviation from unitarity accepted for a gate
UNITARY_TOL = 1e-10
#: with ``method="auto"`` environments are computed densely up to this size
DENSE_ENV_MAX = 12


def _unitarity_error(u):
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


@dataclass
class Gate:
    """Unitary acting on a contiguous block of qubits.

    Parameters
    ----------
    qubits : tuple of int
        Ascending, contiguous qubit indices.
    unitary : ndarray
        ``2**m x 2**m`` matrix; the first listed qubit is the most
        significant bit of the row and column index.
    """

    qubits: tuple
    unitary: np.ndarray

    def __post_init__(self):
        self.qubits = tuple(int(q) for q in self.qubits)
        self.unitary = np.asarray(self.unitary, dtype=np.complex128)
        m = len(self.qubits)
        if m == 0 or any(b - a != 1 for a, b in zip(self.qubits, self.qubits[1:])):
            raise DimensionError(f"gate qubits must be contiguous and ascending, got {self.qubits}")
        if self.unitary.shape != (2**m, 2**m):
            raise DimensionError(f"gate on {m} qubits needs a {2**m}x{2**m} matrix")

    @property
    def n_qubits(self):
        return len(self.qubits)


@dataclass
class Circuit:
    """Layers of gates applied in order to ``|0...0>``; gates inside a layer apply in list order."""

    n_qubits: int
    layers: list = field(default_factory=list)

    def __post_init__(self):
        for layer in self.layers:
            for g in layer:
                if g.qubits[-1] >= self.n_qubits or g.qubits[0] < 0:
                    raise DimensionError(f"gate on {g.qubits} outside a {self.n_qubits}-qubit register")

    @property
    def gates(self):
        return [g for layer in self.layers for g in layer]

    @property
    def n_gates(self):
        return sum(len(layer) for layer in self.layers)

    @property
    def depth(self):
        return len(self.layers)

    def max_unitarity_error(self):
        return max((_unitarity_error(g.unitary) for g in self.gates), default=0.0)

    def __eq__(self, other):
        if not isinstance(other, Circuit) or self.n_qubits != other.n_qubits:
            return False
        if [len(a) for a in self.layers] != [len(b) for b in other.layers]:
            return False
        return all(
            g.qubits == h.qubits and np.array_equal(g.unitary, h.unitary)
            for a, b in zip(self.layers, other.layers)
            for g, h in zip(a, b)
        )


def _apply_gate(vec, g, n):
    q0, m = g.qubits[0], g.n_qubits
    if m == 2:
        apply_gate_2q(vec, np.ascontiguousarray(g.unitary), q0, n)
        return vec
    v = vec.reshape(2**q0, 2**m, 2 ** (n - q0 - m))
    return np.einsum("ij,ajb->aib", g.unitary, v).reshape(-1)


def circuit_apply(circuit, state=None):
    """Apply ``circuit`` to ``|0...0>`` (or to ``state``) as a dense vector.

    Returns
    -------
    DenseState
    """
    n = circuit.n_qubits
    if n > DENSE_CAP:
        raise CapacityError(f"dense circuit simulation is limited to {DENSE_CAP} qubits")
    if state is None:
        vec = np.zeros(2**n, dtype=np.complex128)
        vec[0] = 1.0
    else:
        vec = np.array(state.amplitudes if isinstance(state, DenseState) else state, dtype=np.complex128)
        if vec.shape != (2**n,):
            raise DimensionError("state size does not match the circuit")
    for g in circuit.gates:
        vec = _apply_gate(vec, g, n)
    return DenseState(vec)


def circuit_fidelity(circuit, target):
    """``|<target|U|0>|^2 / <target|target>`` for an MPS or dense target."""
    vec = circuit_apply(circuit).amplitudes
    t = to_dense(target) if isinstance(target, Mps) else np.asarray(target, dtype=np.complex128)
    return float(abs(np.vdot(t, vec)) ** 2 / np.vdot(t, t).real)


# --------------------------------------------------------------------------
# exact mapping


def _right_canonical_minimal(psi):
    """Right-canonical form with bonds reduced to their numerical rank."""
    c = canonicalize(psi, psi.n_sites - 1)
    ts = [t.copy() for t in c.tensors]
    for i in range(len(ts) - 1, 0, -1):
        a, _, b = ts[i].shape
        svd = truncated_svd(ts[i].reshape(a, 2 * b), cutoff=1e-30)
        ts[i] = svd.vh.reshape(-1, 2, b)
        ts[i - 1] = np.tensordot(ts[i - 1], svd.u * svd.s, axes=(2, 0))
    nrm = np.linalg.norm(ts[0])
    if nrm == 0:
        raise ValueError("cannot map the zero state")
    ts[0] = ts[0] / nrm
    return ts


def _complete_unitary(cols, positions, dim, rng):
    """Unitary whose columns at ``positions`` are the orthonormal ``cols``."""
    k = cols.shape[1]
    u = np.zeros((dim, dim), dtype=np.complex128)
    u[:, positions] = cols
    if k < dim:
        r = rng.standard_normal((dim, dim - k)) + 1j * rng.standard_normal((dim, dim - k))
        r -= cols @ (cols.conj().T @ r)
        r -= cols @ (cols.conj().T @ r)
        q, _ = np.linalg.qr(r)
        rest = np.setdiff1d(np.arange(dim), positions)
        u[:, rest] = q
    return u


def _n_bits(chi):
    return int(np.ceil(np.log2(chi))) if chi > 1 else 0


def exact_circuit_from_mps(psi, seed=0):
    """Map an MPS exactly onto ``N`` multi-qubit unitaries in one layer.

    The state is brought to minimal right-canonical form and bonds are
    padded to ``2**n_i``. Gate ``i`` takes the bond register of qubits
    ``i+1 ..`` (holding the left bond index, zeros elsewhere) to
    ``|sigma_i> |a_i>``; unused input columns are completed to a unitary
    from a seeded random complement.

    Parameters
    ----------
    psi : Mps
        Any gauge; the state is normalised.
    seed : int
        Seed of the random complement.

    Returns
    -------
    Circuit
    """
    rng = np.random.default_rng(seed)
    ts = _right_canonical_minimal(psi)
    n = len(ts)
    gates = []
    for i, t in enumerate(ts):
        chi_l, _, chi_r = t.shape
        nl, nr = _n_bits(chi_l), _n_bits(chi_r)
        m = max(nl, nr + 1)
        if i + m > n:
            raise DimensionError("bond dimensions exceed the available qubits")
        padded = np.zeros((chi_l, 2, 2 ** (m - 1)), dtype=np.complex128)
        padded[:, :, :chi_r] = t
        cols = padded.reshape(chi_l, 2**m).T
        positions = np.arange(chi_l) * 2 ** (m - nl)
        gates.append(Gate(tuple(range(i, i + m)), _complete_unitary(cols, positions, 2**m, rng)))
    return Circuit(n, [gates])


# --------------------------------------------------------------------------
# fixed-depth staircase optimisation


@dataclass
class CompileReport:
    """Diagnostics of :func:`optimize_staircase_circuit`.

    Attributes
    ----------
    fidelity : float
        Final ``|<psi|U|0>|^2``.
    trace : list of float
        Fidelity at the start and after every iteration.
    update_trace : list of float
        Fidelity after every single gate update (only if requested).
    flagged : list of tuple
        ``(iteration, layer, gate)`` of updates skipped for a vanishing environment.
    method : str
        ``"dense"`` or ``"mps"``.
    """

    fidelity: float
    trace: list = field(default_factory=list)
    update_trace: list = field(default_factory=list)
    flagged: list = field(default_factory=list)
    method: str = "dense"


def optimal_gate(env):
    """Unitary maximising ``|Tr(V E)|`` and the maximum ``Tr(S)``.

    Parameters
    ----------
    env : ndarray
        Environment ``E[(i1 i2), (o1 o2)]``.
    """
    w, s, wth = np.linalg.svd(env)
    return wth.conj().T @ w.conj().T, float(np.sum(s))


def _random_near_identity(rng, eps):
    h = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    return scipy.linalg.expm(0.5j * eps * (h + h.conj().T))


def _staircase(n, gates):
    return Circuit(n, [[Gate((j, j + 1), g) for j, g in enumerate(layer)] for layer in gates])


class _DenseEngine:
    """Environments from dense ``|phi~>`` and ``|psi~>`` vectors."""

    def __init__(self, target, gates):
        self.n = len(gates[0]) + 1
        self.target = target
        self.gates = gates

    def start(self):
        n = self.n
        self.phi = np.zeros(2**n, dtype=np.complex128)
        self.phi[0] = 1.0
        psi = self.target.copy()
        for layer in reversed(self.gates):
            for j in range(n - 2, -1, -1):
                apply_gate_2q(psi, np.ascontiguousarray(layer[j].conj().T), j, n)
        self.psi = psi

    def start_layer(self, d):
        pass

    def environment(self, d, j):
        apply_gate_2q(self.psi, self.gates[d][j], j, self.n)
        return environment_2q(self.phi, self.psi, j, self.n)

    def set_gate(self, d, j, u):
        self.gates[d][j] = u
        apply_gate_2q(self.phi, u, j, self.n)


def _split(g):
    """``G[(o1 o2), (i1 i2)] = sum_k A[o1, i1, k] B[k, o2, i2]``."""
    t = g.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    u, s, vh = np.linalg.svd(t)
    return (u * s).reshape(2, 2, 4), vh.reshape(4, 2, 2)


_ID_A = np.eye(2, dtype=np.complex128).reshape(2, 2, 1)
_ID_B = np.eye(2, dtype=np.complex128).reshape(1, 2, 2)
_E0 = np.array([1.0, 0.0], dtype=np.complex128)
_EYE2 = np.eye(2, dtype=np.complex128)


def _layer_left(x, w, l):
    """Push the open wire (last axis) of ``x`` through ``w[kl, o, i, kr]`` on layer ``l``."""
    x = np.tensordot(x, w, axes=([1 + l, x.ndim - 1], [0, 2]))
    return np.moveaxis(x, -1, 1 + l)


def _layer_right(x, w, l):
    x = np.tensordot(x, w, axes=([1 + l, x.ndim - 1], [3, 2]))
    return np.moveaxis(x, -2, 1 + l)


def _open_wire(x):
    """Keep the current wire as an open index and start a fresh one."""
    return np.einsum("...i,os->...ios", x, _EYE2)


class _MpsEngine:
    """Environments by contracting ``<psi| U |0>`` column by column.

    Boundary tensors have axes ``(a, k_1, ..., k_D)``: the target bond and
    the bond of every layer MPO at that column boundary.
    """

    def __init__(self, target, gates):
        self.target = target
        self.gates = gates
        self.n = len(target)
        self.depth = len(gates)
        self.conj = [t.conj() for t in target]
        self.a = [[None] * self.n for _ in range(self.depth)]
        self.b = [[None] * (self.n + 1) for _ in range(self.depth)]
        for d in range(self.depth):
            self.a[d][self.n - 1] = _ID_A
            self.b[d][0] = _ID_B
            for j, g in enumerate(gates[d]):
                self.a[d][j], self.b[d][j + 1] = _split(g)
        self.w = [[self._column(d, j) for j in range(self.n)] for d in range(self.depth)]

    def _column(self, d, j):
        return np.einsum("omr,lmi->loir", self.a[d][j], self.b[d][j])

    def _absorb_left(self, lb, j):
        x = lb[..., None] * _E0
        for d in range(self.depth):
            x = _layer_left(x, self.w[d][j], d)
        x = np.tensordot(x, self.conj[j], axes=([0, x.ndim - 1], [0, 1]))
        return np.moveaxis(x, -1, 0)

    def _absorb_right(self, rb, j):
        x = rb[..., None] * _E0
        for d in range(self.depth):
            x = _layer_right(x, self.w[d][j], d)
        x = np.tensordot(x, self.conj[j], axes=([0, x.ndim - 1], [2, 1]))
        return np.moveaxis(x, -1, 0)

    def _ones(self):
        return np.ones((1,) * (self.depth + 1), dtype=np.complex128)

    def start(self):
        pass

    def start_layer(self, d):
        rb = [None] * (self.n + 1)
        rb[self.n] = self._ones()
        for j in range(self.n - 1, 0, -1):
            rb[j] = self._absorb_right(rb[j + 1], j)
        self.rb = rb
        self.lb = self._ones()

    def environment(self, d, j):
        depth = self.depth
        # column j: the gate's first input wire stays open, a new wire o1 starts
        x = self.lb[..., None] * _E0
        for l in range(depth):
            if l == d:
                x = _layer_left(x, self.b[d][j][..., None], l)
                x = _open_wire(x)
            else:
                x = _layer_left(x, self.w[l][j], l)
        x = np.moveaxis(np.tensordot(x, self.conj[j], axes=([0, x.ndim - 1], [0, 1])), -1, 0)
        # column j + 1 from the right: input i2 stays open, the gate's output o2 enters A
        y = self.rb[j + 2][..., None] * _E0
        for l in range(depth):
            if l == d:
                y = _open_wire(y)
                y = _layer_right(y, self.a[d][j + 1][None], l)
            else:
                y = _layer_right(y, self.w[l][j + 1], l)
        y = np.moveaxis(np.tensordot(y, self.conj[j + 1], axes=([0, y.ndim - 1], [2, 1])), -1, 0)
        axes = list(range(depth + 1))
        e = np.tensordot(x, y, axes=(axes, axes))
        return e.transpose(0, 2, 1, 3).reshape(4, 4)

    def set_gate(self, d, j, u):
        self.gates[d][j] = u
        self.a[d][j], self.b[d][j + 1] = _split(u)
        self.w[d][j] = self._column(d, j)
        self.w[d][j + 1] = self._column(d, j + 1)
        self.lb = self._absorb_left(self.lb, j)


def _prepare_target(target, method):
    if isinstance(target, Mps):
        n = target.n_sites
        if method == "dense":
            vec = to_dense(target)
            return n, vec / np.linalg.norm(vec)
        c = canonicalize(target, 0)
        ts = [t.copy() for t in c.tensors]
        ts[0] = ts[0] / np.linalg.norm(ts[0])
        return n, ts
    vec = np.asarray(target, dtype=np.complex128)
    n = int(round(np.log2(vec.shape[0])))
    if vec.shape != (2**n,):
        raise DimensionError("dense target length must be a power of two")
    if method == "mps":
        raise DimensionError("the mps method needs an Mps target")
    return n, vec / np.linalg.norm(vec)


def _resolve_method(target, method):
    if method not in ("auto", "dense", "mps"):
        raise ValueError(f"unknown method {method!r}")
    if method != "auto":
        return method
    if not isinstance(target, Mps) or target.n_sites <= DENSE_ENV_MAX:
        return "dense"
    return "mps"


def _engine(target, gates, method):
    method = _resolve_method(target, method)
    n, prepared = _prepare_target(target, method)
    if method == "dense" and n > DENSE_CAP:
        raise CapacityError(f"dense environments are limited to {DENSE_CAP} qubits")
    cls = _DenseEngine if method == "dense" else _MpsEngine
    return cls(prepared, gates), method


def _gate_arrays(circuit):
    n = circuit.n_qubits
    for layer in circuit.layers:
        if [g.qubits for g in layer] != [(j, j + 1) for j in range(n - 1)]:
            raise DimensionError("expected a staircase circuit with gates (0,1) ... (N-2,N-1) in every layer")
    return [[np.ascontiguousarray(g.unitary) for g in layer] for layer in circuit.layers]


def gate_environment(circuit, target, layer, gate, method="auto"):
    """Environment ``E[(i1 i2), (o1 o2)]`` of one gate of a staircase circuit.

    ``Tr(V E) = <psi|U|0>`` where ``V`` replaces the selected gate.
    """
    gates = _gate_arrays(circuit)
    eng, _ = _engine(target, gates, method)
    eng.start()
    for d in range(layer + 1):
        eng.start_layer(d)
        stop = gate if d == layer else len(gates[d])
        for j in range(stop):
            eng.environment(d, j)
            eng.set_gate(d, j, gates[d][j])
    return eng.environment(layer, gate)


def optimize_staircase_circuit(target, d_layers, n_iterations, seed=None, method="auto",
                               init=None, perturbation=1e-2, record_updates=False, zero_tol=1e-14):
    """Maximise ``|<psi|U|0>|^2`` over ``d_layers`` staircases of two-qubit gates.

    One iteration visits every gate once, layer by layer from the ``|0>``
    side and pairs ``(0, 1) ... (N-2, N-1)`` inside a layer.

    Parameters
    ----------
    target : Mps or ndarray
        Target state; normalised internally.
    d_layers : int
    n_iterations : int
    seed : int, optional
        Seed of the random near-identity initial gates.
    method : {"auto", "dense", "mps"}
        How environments are evaluated; ``"auto"`` uses dense vectors up
        to ``DENSE_ENV_MAX`` qubits.
    init : Circuit, optional
        Starting staircase circuit instead of the random initialisation.
    perturbation : float
        Scale of the random Hermitian generator of the initial gates.
    record_updates : bool
        Store the fidelity after every gate update.
    zero_tol : float
        Environments with ``Tr(S)`` below this value leave the gate unchanged.

    Returns
    -------
    circuit : Circuit
    report : CompileReport
    """
    if d_layers < 1:
        raise ValueError("d_layers must be at least 1")
    n = target.n_sites if isinstance(target, Mps) else int(round(np.log2(len(target))))
    if n < 2:
        raise DimensionError("need at least two qubits")
    if init is not None:
        if init.n_qubits != n or init.depth != d_layers:
            raise DimensionError("initial circuit does not match target size and depth")
        gates = _gate_arrays(init)
    else:
        rng = np.random.default_rng(seed)
        gates = [[_random_near_identity(rng, perturbation) for _ in range(n - 1)] for _ in range(d_layers)]
    eng, method = _engine(target, gates, method)
    report = CompileReport(fidelity=0.0, method=method)
    fid = None
    for it in range(n_iterations):
        eng.start()
        for d in range(d_layers):
            eng.start_layer(d)
            for j in range(n - 1):
                env = eng.environment(d, j)
                if fid is None:
                    fid = float(abs(np.trace(gates[d][j] @ env)) ** 2)
                    report.trace.append(fid)
                u, tr = optimal_gate(env)
                if tr < zero_tol:
                    report.flagged.append((it, d, j))
                    u = gates[d][j]
                else:
                    fid = tr**2
                eng.set_gate(d, j, np.ascontiguousarray(u))
                if record_updates:
                    report.update_trace.append(fid)
        report.trace.append(fid)
    if fid is None:
        fid = circuit_fidelity(_staircase(n, gates), target) if n <= DENSE_CAP else float("nan")
        report.trace.append(fid)
    report.fidelity = fid
    return _staircase(n, gates), report


# --------------------------------------------------------------------------
# JSON


def export_circuit(circuit, path):
    """Write ``circuit`` as JSON.

    Schema: ``{"n_qubits": N, "layers": [[{"qubits": [...], "unitary": [...]}]]}``
    where ``unitary`` lists the ``2 * 4**m`` reals of the row-major matrix
    with real and imaginary parts interleaved.
    """
    data = {
        "n_qubits": int(circuit.n_qubits),
        "layers": [
            [{"qubits": list(g.qubits), "unitary": g.unitary.reshape(-1).view(np.float64).tolist()} for g in layer]
            for layer in circuit.layers
        ],
    }
    with open(path, "w") as fh:
        json.dump(data, fh)


def _parse_gate(obj, n, where):
    if not isinstance(obj, dict) or "qubits" not in obj or "unitary" not in obj:
        raise CircuitFormatError("gate needs 'qubits' and 'unitary'", where)
    qubits = obj["qubits"]
    if not isinstance(qubits, list) or not qubits or not all(isinstance(q, int) for q in qubits):
        raise CircuitFormatError("'qubits' must be a non-empty list of integers", f"{where}.qubits")
    if any(b - a != 1 for a, b in zip(qubits, qubits[1:])) or qubits[0] < 0 or qubits[-1] >= n:
        raise CircuitFormatError(f"invalid qubit block {qubits}", f"{where}.qubits")
    vals = obj["unitary"]
    dim = 2 ** len(qubits)
    if not isinstance(vals, list) or len(vals) != 2 * dim * dim:
        raise CircuitFormatError(f"'unitary' must hold {2 * dim * dim} reals", f"{where}.unitary")
    try:
        arr = np.array(vals, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise CircuitFormatError("non-numeric unitary entry", f"{where}.unitary") from exc
    if not np.all(np.isfinite(arr)):
        raise CircuitFormatError("non-finite unitary entry", f"{where}.unitary")
    u = arr.view(np.complex128).reshape(dim, dim)
    err = _unitarity_error(u)
    if err > UNITARY_TOL:
        raise CircuitFormatError(f"matrix is not unitary (deviation {err:.2e})", f"{where}.unitary")
    return Gate(tuple(qubits), u)


def import_circuit(path):
    """Read a circuit written by :func:`export_circuit`, re-checking unitarity.

    Raises
    ------
    CircuitFormatError
        With the JSON path of the offending element as position.
    """
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CircuitFormatError(f"invalid JSON: {exc.msg}", f"line {exc.lineno} column {exc.colno}") from exc
    if not isinstance(data, dict):
        raise CircuitFormatError("top level must be an object", "$")
    n = data.get("n_qubits")
    if not isinstance(n, int) or n < 1:
        raise CircuitFormatError("'n_qubits' must be a positive integer", "n_qubits")
    layers = data.get("layers")
    if not isinstance(layers, list):
        raise CircuitFormatError("'layers' must be a list", "layers")
    out = []
    for li, layer in enumerate(layers):
        if not isinstance(layer, list):
            raise CircuitFormatError("layer must be a list", f"layers[{li}]")
        out.append([_parse_gate(g, n, f"layers[{li}][{gi}]") for gi, g in enumerate(layer)])
    return Circuit(n, out)
