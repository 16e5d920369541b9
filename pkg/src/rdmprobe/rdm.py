"""Reduced density matrices of the system register, and distances.

Matrix element conventions:

* 1-RDM: ``rho[u, v] = <psi| a+_u a_v |psi>`` over system modes, trace N.
* 2-RDM, pair-antisymmetrized layout (the internal default): rows and
  columns run over ordered pairs ``(i, j)`` with ``i < j`` in
  lexicographic order, and
  ``Gamma[(i,j), (k,l)] = 2 <psi| a+_i a+_j a_l a_k |psi>``,
  so the trace is N(N-1).
* 2-RDM, full-tensor layout: rows/columns run over all ordered pairs
  ``i*M + j`` (including ``i == j``) with element
  ``<psi| a+_i a+_j a_l a_k |psi>``; the trace is again N(N-1).

The two 2-RDM layouts assign the same Hilbert-Schmidt norm to any
antisymmetry-respecting matrix, so distances between valid RDMs agree;
targets that break the antisymmetry (for instance noisy ones built in
the full-tensor layout) contribute their symmetry-violating part as an
incompressible distance offset.

Tracing over the bath register is implicit: matrix elements restricted
to system modes of a purified state realize the partial trace exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from .fock import SectorBasis, StateVector, enumerate_sector, excitation_map

__all__ = [
    "RdmMatrix",
    "pair_index_list",
    "compute_1rdm",
    "compute_2rdm",
    "compute_rdm",
    "hs_distance",
    "contract_2rdm",
    "spectrum",
    "pair_to_full",
    "full_to_pair_projection",
    "save_rdm",
    "load_rdm",
]

PAIR_ANTISYM = "pair-antisym"
FULL_TENSOR = "full-tensor"


@dataclass
class RdmMatrix:
    """A p-body matrix over system spin-orbital index tuples.

    ``layout`` is "full-tensor" for p=1 (the plain M x M matrix) and
    either "pair-antisym" or "full-tensor" for p=2.  ``metadata`` rides
    along into file output.
    """

    p: int
    n_modes: int
    n_particles: int
    data: np.ndarray
    layout: str = PAIR_ANTISYM
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.p == 1:
            self.layout = FULL_TENSOR
            expect = self.n_modes
        elif self.p == 2:
            if self.layout not in (PAIR_ANTISYM, FULL_TENSOR):
                raise ValueError(f"unknown 2-RDM layout {self.layout!r}")
            expect = comb(self.n_modes, 2) if self.layout == PAIR_ANTISYM else self.n_modes**2
        else:
            raise ValueError("only p = 1 and p = 2 are supported")
        if self.data.shape != (expect, expect):
            raise ValueError(f"data shape {self.data.shape} does not match layout (expected {expect})")

    @property
    def expected_trace(self) -> float:
        n, p = self.n_particles, self.p
        return float(np.prod(range(1, p + 1)) * comb(n, p))

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def hermitized(self) -> "RdmMatrix":
        return RdmMatrix(self.p, self.n_modes, self.n_particles,
                         0.5 * (self.data + self.data.conj().T), self.layout, dict(self.metadata))

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return bool(np.max(np.abs(self.data - self.data.conj().T)) <= tol)

    def copy(self) -> "RdmMatrix":
        return RdmMatrix(self.p, self.n_modes, self.n_particles, self.data.copy(),
                         self.layout, dict(self.metadata))


def pair_index_list(n_modes: int) -> list:
    """Ordered (i < j) pairs indexing the antisymmetrized 2-RDM basis."""
    return list(combinations(range(n_modes), 2))


def _family_flat(basis: SectorBasis, strings: tuple, cache_key: str):
    """Flattened scatter arrays for a family of annihilation strings.

    Returns (source, flat destination, sign, reduced dimension, n_cols)
    such that a matrix F of shape (n_cols, dim_reduced) with
    ``F.flat[dst] = sign * vec[src]`` holds one annihilated vector per
    row.
    """
    cached = basis._cache.get(cache_key)
    if cached is not None:
        return cached
    maps = [excitation_map(basis, (), s) for s in strings]
    d_red = maps[0].basis_out.size
    src = np.concatenate([m.source for m in maps])
    dst = np.concatenate([m.target + col * d_red for col, m in enumerate(maps)])
    sign = np.concatenate([m.sign for m in maps])
    out = (src, dst, sign, d_red, len(strings))
    basis._cache[cache_key] = out
    return out


def family_1body(basis: SectorBasis):
    strings = tuple((v,) for v in basis.layout.system_modes())
    return _family_flat(basis, strings, "fam-1")


def family_2body(basis: SectorBasis):
    # row (k, l) with k < l holds a_l a_k |psi>: rightmost operator first
    strings = tuple((l, k) for k, l in pair_index_list(basis.layout.n_system_modes))
    return _family_flat(basis, strings, "fam-2")


def family_matrix(family, vec: np.ndarray) -> np.ndarray:
    src, dst, sign, d_red, n_cols = family
    f = np.zeros(n_cols * d_red, dtype=vec.dtype)
    f[dst] = sign * vec[src]
    return f.reshape(n_cols, d_red)


def compute_1rdm(state: StateVector) -> RdmMatrix:
    """1-RDM of the system register: Hermitian, PSD, trace N by construction."""
    layout = state.layout
    m = layout.n_system_modes
    if layout.n_system_particles == 0:
        data = np.zeros((m, m), dtype=np.complex128)
    else:
        f = family_matrix(family_1body(state.basis), state.amplitudes)
        data = f.conj() @ f.T
    return RdmMatrix(1, m, layout.n_system_particles, data)


def compute_2rdm(state: StateVector) -> RdmMatrix:
    """Pair-antisymmetrized 2-RDM of the system register, trace N(N-1)."""
    layout = state.layout
    if layout.n_system_particles < 2:
        raise ValueError("2-RDM requires at least two system particles")
    f = family_matrix(family_2body(state.basis), state.amplitudes)
    data = 2.0 * (f.conj() @ f.T)
    return RdmMatrix(2, layout.n_system_modes, layout.n_system_particles, data)


def compute_rdm(state: StateVector, p: int) -> RdmMatrix:
    if p == 1:
        return compute_1rdm(state)
    if p == 2:
        return compute_2rdm(state)
    raise ValueError("only p = 1 and p = 2 are supported")


def hs_distance(a: RdmMatrix, b: RdmMatrix) -> float:
    """Squared Hilbert-Schmidt distance, sum_uv |a_uv - b_uv|^2.

    Mixed 2-RDM layouts are reconciled by expanding the pair-antisym
    side to the full tensor, which preserves its norm exactly.
    """
    if a.p != b.p or a.n_modes != b.n_modes:
        raise ValueError("matrices have mismatched body rank or mode count")
    if a.layout != b.layout:
        a = a if a.layout == FULL_TENSOR else _expand(a)
        b = b if b.layout == FULL_TENSOR else _expand(b)
    if a.data.shape != b.data.shape:
        raise ValueError("matrices have mismatched shapes")
    d = a.data - b.data
    return float(np.sum(d.real**2 + d.imag**2))


def _expand(m: RdmMatrix) -> RdmMatrix:
    return RdmMatrix(m.p, m.n_modes, m.n_particles, pair_to_full(m.data, m.n_modes),
                     FULL_TENSOR, dict(m.metadata))


def pair_to_full(pair_data: np.ndarray, n_modes: int) -> np.ndarray:
    """Expand a pair-antisym 2-RDM (trace N(N-1)) to the full tensor.

    The expansion divides by two so that diagonal full-tensor elements
    are plain expectation values and the total trace is unchanged.
    """
    m = n_modes
    full = np.zeros((m * m, m * m), dtype=np.complex128)
    pairs = pair_index_list(m)
    for r, (i, j) in enumerate(pairs):
        for c, (k, l) in enumerate(pairs):
            v = 0.5 * pair_data[r, c]
            full[i * m + j, k * m + l] = v
            full[j * m + i, k * m + l] = -v
            full[i * m + j, l * m + k] = -v
            full[j * m + i, l * m + k] = v
    return full


def full_to_pair_projection(full_data: np.ndarray, n_modes: int) -> np.ndarray:
    """Antisymmetry-projected pair coordinates of a full-tensor matrix.

    For an exactly antisymmetric tensor this inverts :func:`pair_to_full`;
    in general it returns the orthogonal projection onto the
    antisymmetric subspace, expressed in the norm-preserving pair basis.
    """
    m = n_modes
    pairs = pair_index_list(m)
    t = full_data.reshape(m, m, m, m)
    out = np.empty((len(pairs), len(pairs)), dtype=np.complex128)
    for r, (i, j) in enumerate(pairs):
        for c, (k, l) in enumerate(pairs):
            out[r, c] = 0.5 * (t[i, j, k, l] - t[j, i, k, l] - t[i, j, l, k] + t[j, i, l, k])
    return out


def contract_2rdm(m: RdmMatrix) -> RdmMatrix:
    """Partial trace of a 2-RDM over one index, scaled to a trace-N 1-RDM."""
    if m.p != 2:
        raise ValueError("contraction requires a 2-RDM")
    if m.n_particles <= 1:
        raise ValueError("contraction requires N > 1")
    M, n = m.n_modes, m.n_particles
    full = m.data if m.layout == FULL_TENSOR else pair_to_full(m.data, M)
    t = full.reshape(M, M, M, M)
    one = np.einsum("uwvw->uv", t) / (n - 1)
    return RdmMatrix(1, M, n, one, metadata=dict(m.metadata))


def spectrum(m: RdmMatrix, hermitize: bool = False) -> np.ndarray:
    """Real eigenvalues in descending order.

    Non-Hermitian input (a noisy target, say) is rejected unless
    ``hermitize`` is set, in which case (A + A+)/2 is diagonalized.
    """
    a = m.data
    if a.shape[0] != a.shape[1]:
        raise ValueError("spectrum requires a square matrix")
    if hermitize:
        a = 0.5 * (a + a.conj().T)
    elif not m.is_hermitian():
        raise ValueError("matrix is not Hermitian; pass hermitize=True to force")
    return np.linalg.eigvalsh(a)[::-1].copy()


# ---------------------------------------------------------------------------
# file format: JSON with explicit layout metadata, complex entries as [re, im]


def save_rdm(m: RdmMatrix, path) -> None:
    doc = {
        "p": m.p,
        "n_modes": m.n_modes,
        "n_particles": m.n_particles,
        "layout": m.layout,
        "data": [[[float(z.real), float(z.imag)] for z in row] for row in m.data],
        "metadata": m.metadata,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_rdm(path) -> RdmMatrix:
    with open(path) as fh:
        doc = json.load(fh)
    try:
        raw = doc["data"]
        data = np.array([[complex(re, im) for re, im in row] for row in raw], dtype=np.complex128)
        return RdmMatrix(int(doc["p"]), int(doc["n_modes"]), int(doc["n_particles"]),
                         data, doc.get("layout", PAIR_ANTISYM), doc.get("metadata", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed RDM file {path}: {exc}") from exc
