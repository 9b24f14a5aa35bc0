"""Open-boundary matrix product states of spin-1/2 chains.

Conventions
-----------
* Site tensors have shape ``(chi_left, 2, chi_right)``; the boundary bonds
  have dimension 1.
* Physical index 0 is the spin-up state ``sigma = +1`` and index 1 is
  ``sigma = -1``.
* In dense vectors site 1 is the most significant bit, so the basis index
  of ``(b_1, ..., b_N)`` is ``sum_i b_i 2**(N - i)``.
* A cut ``c`` separates the first ``c`` sites from the rest. The half-chain
  cut is ``N // 2``.
"""

import struct

import numpy as np

from .errors import CapacityError, CircuitFormatError, DimensionError
from .tensor import lq_positive, qr_positive, truncated_svd

__all__ = [
    "SPIN_CONVENTION",
    "DENSE_CAP",
    "Mps",
    "product_state",
    "plus_state",
    "basis_state",
    "random_mps",
    "canonicalize",
    "norm",
    "overlap",
    "overlap_dense",
    "amplitude",
    "schmidt_values",
    "entanglement_entropy",
    "half_chain_entropy",
    "entropy_from_schmidt",
    "to_dense",
    "from_dense",
    "truncate",
    "save_mps",
    "load_mps",
]

SPIN_CONVENTION = "idx0=up(+1);site1=msb"
DENSE_CAP = 24


class Mps:
    """Matrix product state of ``n_sites`` qubits.

    Parameters
    ----------
    tensors : sequence of ndarray
        Site tensors of shape ``(chi_left, 2, chi_right)``.
    canonical_center : int, optional
        Site index of the orthogonality center if the tensors to its left
        are left-isometric and those to its right right-isometric.
    """

    def __init__(self, tensors, canonical_center=None):
        tensors = [np.asarray(t, dtype=np.complex128) for t in tensors]
        if not tensors:
            raise DimensionError("an MPS needs at least one site")
        for i, t in enumerate(tensors):
            if t.ndim != 3 or t.shape[1] != 2:
                raise DimensionError(f"site {i} has shape {t.shape}, expected (chi, 2, chi)")
            if i > 0 and tensors[i - 1].shape[2] != t.shape[0]:
                raise DimensionError(f"bond mismatch between sites {i - 1} and {i}")
        if tensors[0].shape[0] != 1 or tensors[-1].shape[2] != 1:
            raise DimensionError("boundary bonds must have dimension 1")
        if canonical_center is not None and not 0 <= canonical_center < len(tensors):
            raise ValueError("canonical_center out of range")
        self.tensors = tensors
        self.canonical_center = canonical_center

    @property
    def n_sites(self):
        return len(self.tensors)

    @property
    def bond_dims(self):
        """Internal bond dimensions, ``n_sites - 1`` entries."""
        return [t.shape[2] for t in self.tensors[:-1]]

    @property
    def max_bond(self):
        return max(self.bond_dims, default=1)

    def copy(self):
        return Mps([t.copy() for t in self.tensors], self.canonical_center)

    def __repr__(self):
        return f"Mps(n_sites={self.n_sites}, bond_dims={self.bond_dims})"


def product_state(local_states):
    """Product state from a list of length-2 local vectors."""
    return Mps([np.asarray(v, dtype=np.complex128).reshape(1, 2, 1) for v in local_states], 0)


def plus_state(n_sites):
    """All spins along +x, the ground state of ``-sum_i sigma^x_i``."""
    v = np.array([1.0, 1.0]) / np.sqrt(2.0)
    return product_state([v] * n_sites)


def basis_state(config):
    """Computational basis state for a sequence of spins in {+1, -1}."""
    config = np.asarray(config)
    if not np.all(np.isin(config, (-1, 1))):
        raise ValueError("spins must be +1 or -1")
    return product_state([np.array([1.0, 0.0]) if s == 1 else np.array([0.0, 1.0]) for s in config])


def _bond_profile(n_sites, chi):
    return [min(chi, 2 ** min(i, n_sites - i)) for i in range(1, n_sites)]


def random_mps(n_sites, chi, rng=None):
    """Normalised random MPS with complex Gaussian entries.

    Every bond takes the largest dimension allowed by ``chi`` and by the
    Hilbert-space dimension on either side of the cut. The result is
    right-canonical with its center at site 0.
    """
    rng = np.random.default_rng(rng)
    dims = [1] + _bond_profile(n_sites, chi) + [1]
    tensors = []
    for i in range(n_sites):
        shape = (dims[i], 2, dims[i + 1])
        tensors.append(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    psi = canonicalize(Mps(tensors), 0)
    psi.tensors[0] /= np.linalg.norm(psi.tensors[0])
    return psi


def canonicalize(psi, center=0, normalize=False):
    """Return a mixed-canonical copy of ``psi`` with the given center.

    Sites left of ``center`` become left-isometric and sites right of it
    right-isometric. Bond dimensions never grow and may shrink to the
    local rank bound.
    """
    n = psi.n_sites
    if not 0 <= center < n:
        raise ValueError("center out of range")
    ts = [t.copy() for t in psi.tensors]
    for i in range(center):
        a, d, b = ts[i].shape
        q, r = qr_positive(ts[i].reshape(a * d, b))
        ts[i] = q.reshape(a, d, q.shape[1])
        ts[i + 1] = np.tensordot(r, ts[i + 1], axes=(1, 0))
    for i in range(n - 1, center, -1):
        a, d, b = ts[i].shape
        l, q = lq_positive(ts[i].reshape(a, d * b))
        ts[i] = q.reshape(q.shape[0], d, b)
        ts[i - 1] = np.tensordot(ts[i - 1], l, axes=(2, 0))
    if normalize:
        nrm = np.linalg.norm(ts[center])
        if nrm > 0:
            ts[center] /= nrm
    return Mps(ts, center)


def overlap(a, b):
    """Inner product ``<a|b>``."""
    if a.n_sites != b.n_sites:
        raise DimensionError("states have different numbers of sites")
    env = np.ones((1, 1), dtype=np.complex128)
    for x, y in zip(a.tensors, b.tensors):
        # env[a', b'] = sum conj(x[a, s, a']) env[a, b] y[b, s, b']
        t = np.tensordot(env, y, axes=(1, 0))
        env = np.tensordot(x.conj(), t, axes=([0, 1], [0, 1]))
    return complex(env[0, 0])


def norm(psi):
    """Euclidean norm of the state."""
    if psi.canonical_center is not None:
        return float(np.linalg.norm(psi.tensors[psi.canonical_center]))
    return float(np.sqrt(max(overlap(psi, psi).real, 0.0)))


def overlap_dense(psi, vec):
    """Inner product ``<psi|vec>`` against a dense vector without densifying ``psi``."""
    n = psi.n_sites
    vec = np.asarray(vec, dtype=np.complex128)
    if vec.shape != (2 ** n,):
        raise DimensionError("dense vector has the wrong length")
    # rows: remaining sites, columns: current bond
    rest = vec.reshape(1, 2 ** n)
    for t in psi.tensors:
        a, _, b = t.shape
        rest = rest.reshape(a, 2, -1)
        # new[b, r] = sum_{a,s} conj(t[a, s, b]) rest[a, s, r]
        rest = np.tensordot(t.conj(), rest, axes=([0, 1], [0, 1]))
    return complex(rest.reshape(-1)[0])


def amplitude(psi, config):
    """Amplitude of a basis configuration given as spins in {+1, -1}."""
    config = np.asarray(config)
    if config.shape != (psi.n_sites,):
        raise DimensionError("configuration length does not match the state")
    v = np.ones((1,), dtype=np.complex128)
    for t, s in zip(psi.tensors, config):
        v = v @ t[:, 0 if s == 1 else 1, :]
    return complex(v[0])


def schmidt_values(psi, cut=None):
    """Schmidt coefficients across ``cut`` (default: half chain)."""
    n = psi.n_sites
    cut = n // 2 if cut is None else cut
    if not 1 <= cut <= n - 1:
        raise ValueError("cut must lie strictly inside the chain")
    c = canonicalize(psi, cut - 1)
    t = c.tensors[cut - 1]
    a, d, b = t.shape
    return np.linalg.svd(t.reshape(a * d, b), compute_uv=False)


def entropy_from_schmidt(s):
    """Von Neumann entropy (natural log) of normalised Schmidt values."""
    p = np.asarray(s, dtype=float) ** 2
    p = p[p > 0.0]
    return float(-np.sum(p * np.log(p)))


def entanglement_entropy(psi, cut=None, return_info=False):
    """Von Neumann entanglement entropy across ``cut``.

    Unnormalised states are normalised first; ``return_info=True`` adds a
    dictionary reporting whether that happened.
    """
    s = schmidt_values(psi, cut)
    total = float(np.sum(s * s))
    renormalized = abs(total - 1.0) > 1e-12
    if total > 0.0 and renormalized:
        s = s / np.sqrt(total)
    value = entropy_from_schmidt(s)
    if return_info:
        return value, {"renormalized": renormalized, "schmidt_values": s}
    return value


def half_chain_entropy(psi):
    return entanglement_entropy(psi, psi.n_sites // 2)


def to_dense(psi, cap=DENSE_CAP):
    """Dense state vector of length ``2**N`` (site 1 is the most significant bit)."""
    if psi.n_sites > cap:
        raise CapacityError(f"to_dense is limited to {cap} sites")
    v = psi.tensors[0].reshape(2, -1)
    for t in psi.tensors[1:]:
        a = t.shape[0]
        v = (v @ t.reshape(a, -1)).reshape(-1, t.shape[2])
    return v.reshape(-1)


def from_dense(vec, chi_max=None, cutoff=0.0):
    """Exact (or truncated) MPS decomposition of a dense vector by sequential SVD."""
    vec = np.asarray(vec, dtype=np.complex128)
    n = int(round(np.log2(vec.size)))
    if 2 ** n != vec.size or n < 1:
        raise DimensionError("vector length must be a power of two")
    tensors = []
    rest = vec.reshape(1, -1)
    for _ in range(n - 1):
        a = rest.shape[0]
        m = rest.reshape(a * 2, -1)
        r = truncated_svd(m, chi_max, cutoff)
        tensors.append(r.u.reshape(a, 2, r.rank))
        rest = r.s[:, None] * r.vh
    tensors.append(rest.reshape(rest.shape[0], 2, 1))
    return Mps(tensors, n - 1)


def truncate(psi, chi_max=None, cutoff=0.0, normalize=False):
    """SVD truncation sweep; returns a left-canonical state with center at the last site.

    With ``chi_max=None`` and a tiny ``cutoff`` this only removes bond
    directions carrying (numerically) zero weight.
    """
    c = canonicalize(psi, psi.n_sites - 1)
    ts = [t.copy() for t in c.tensors]
    # move back to site 0 with truncating SVDs, then restore left-canonical form
    for i in range(len(ts) - 1, 0, -1):
        a, d, b = ts[i].shape
        r = truncated_svd(ts[i].reshape(a, d * b), chi_max, cutoff)
        ts[i] = r.vh.reshape(r.rank, d, b)
        ts[i - 1] = np.tensordot(ts[i - 1], r.u * r.s[None, :], axes=(2, 0))
    out = canonicalize(Mps(ts, 0), len(ts) - 1, normalize=normalize)
    return out


_MAGIC = b"MPSBIN01"


def save_mps(psi, path):
    """Write ``psi`` to a binary file.

    Layout (all integers little-endian ``uint32`` unless noted)::

        8 bytes   magic "MPSBIN01"
        uint32    length L of the convention tag, then L bytes UTF-8 tag
        uint32    number of sites N
        int32     canonical center, -1 if none
        N x 3     uint32 shapes (chi_left, 2, chi_right)
        data      each site in C order as little-endian float64 pairs (re, im)
    """
    tag = SPIN_CONVENTION.encode("utf-8")
    center = -1 if psi.canonical_center is None else psi.canonical_center
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(tag)))
        fh.write(tag)
        fh.write(struct.pack("<Ii", psi.n_sites, center))
        for t in psi.tensors:
            fh.write(struct.pack("<III", *t.shape))
        for t in psi.tensors:
            fh.write(np.ascontiguousarray(t, dtype="<c16").tobytes())


def load_mps(path):
    """Read a state written by :func:`save_mps`."""
    with open(path, "rb") as fh:
        data = fh.read()
    pos = 0

    def take(nbytes, what):
        nonlocal pos
        if pos + nbytes > len(data):
            raise CircuitFormatError(f"truncated file while reading {what}", f"byte {pos}")
        chunk = data[pos:pos + nbytes]
        pos += nbytes
        return chunk

    if take(8, "magic") != _MAGIC:
        raise CircuitFormatError("not an MPS file", "byte 0")
    (tag_len,) = struct.unpack("<I", take(4, "tag length"))
    tag = take(tag_len, "convention tag").decode("utf-8", errors="replace")
    if tag != SPIN_CONVENTION:
        raise CircuitFormatError(f"unsupported spin convention {tag!r}", "convention tag")
    n, center = struct.unpack("<Ii", take(8, "header"))
    shapes = [struct.unpack("<III", take(12, f"shape of site {i}")) for i in range(n)]
    tensors = []
    for i, shape in enumerate(shapes):
        count = shape[0] * shape[1] * shape[2]
        raw = take(16 * count, f"data of site {i}")
        tensors.append(np.frombuffer(raw, dtype="<c16").reshape(shape).astype(np.complex128))
    if pos != len(data):
        raise CircuitFormatError("trailing bytes after last site", f"byte {pos}")
    try:
        return Mps(tensors, None if center < 0 else center)
    except (DimensionError, ValueError) as exc:
        raise CircuitFormatError(str(exc), "site shapes") from exc
