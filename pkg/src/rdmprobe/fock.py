"""Occupation-number states for fermions on a system(+bath) mode layout.

Conventions, fixed globally and shared by every file format in this
package:

* Global mode index: the system register occupies modes
  ``0 .. n_system_modes-1``; the bath register (when present) follows.
  Within a register, ``mode = offset + 2*(spatial-1) + spin`` with
  ``spin = 0`` for alpha and ``1`` for beta; ``spatial`` is 1-based.
* A basis state is an occupation bitstring stored as an unsigned
  integer, bit ``m`` holding the occupation of mode ``m``.  It denotes
  the determinant obtained by creating its occupied modes in ascending
  index order on the vacuum.
* An elementary creation/annihilation operator acting on mode ``m``
  picks up the sign ``(-1)**(number of occupied modes below m)`` and
  yields zero when Pauli-blocked.

Because the bath sits above the system in the mode ordering, operators
that touch only system modes never cross bath occupations with their
sign strings; system observables therefore factorize exactly as
(system operator) x (bath identity).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

__all__ = [
    "EmptySectorError",
    "SectorViolationError",
    "ModeLayout",
    "SectorBasis",
    "StateVector",
    "ExcitationMap",
    "enumerate_sector",
    "excitation_map",
    "build_determinant",
    "apply_excitation_string",
    "build_purified_mixture",
]


class EmptySectorError(ValueError):
    """The requested particle-number sector contains no basis states."""


class SectorViolationError(ValueError):
    """An operator string left the space of valid sectors."""


@dataclass(frozen=True)
class ModeLayout:
    """Mode counts and particle counts for the two registers.

    ``n_bath_modes`` is 0 (pure mode) or equal to ``n_system_modes``
    (ensemble mode, where the purified state carries the same number of
    particles in each register).
    """

    n_system_modes: int
    n_bath_modes: int
    n_system_particles: int
    n_bath_particles: int

    def __post_init__(self):
        if self.n_bath_modes not in (0, self.n_system_modes):
            raise ValueError("bath register must be empty or mirror the system register")
        if not 0 <= self.n_system_particles <= self.n_system_modes:
            raise ValueError("system particle count out of range")
        if not 0 <= self.n_bath_particles <= self.n_bath_modes:
            raise ValueError("bath particle count out of range")

    @classmethod
    def pure(cls, n_modes: int, n_particles: int) -> "ModeLayout":
        return cls(n_modes, 0, n_particles, 0)

    @classmethod
    def ensemble(cls, n_modes: int, n_particles: int) -> "ModeLayout":
        return cls(n_modes, n_modes, n_particles, n_particles)

    @property
    def n_modes(self) -> int:
        return self.n_system_modes + self.n_bath_modes

    @property
    def n_particles(self) -> int:
        return self.n_system_particles + self.n_bath_particles

    @property
    def has_bath(self) -> bool:
        return self.n_bath_modes > 0

    def is_system_mode(self, mode: int) -> bool:
        return 0 <= mode < self.n_system_modes

    def register_offset(self, mode: int) -> int:
        return 0 if self.is_system_mode(mode) else self.n_system_modes

    def spin(self, mode: int) -> int:
        """0 for alpha, 1 for beta."""
        return (mode - self.register_offset(mode)) % 2

    def spatial(self, mode: int) -> int:
        """1-based spatial orbital index within the mode's register."""
        return 1 + (mode - self.register_offset(mode)) // 2

    def mode(self, spatial: int, spin: int, bath: bool = False) -> int:
        m = 2 * (spatial - 1) + spin + (self.n_system_modes if bath else 0)
        if not 0 <= m < self.n_modes:
            raise ValueError(f"mode ({spatial},{spin},bath={bath}) outside layout")
        return m

    def system_modes(self) -> range:
        return range(self.n_system_modes)

    def bath_modes(self) -> range:
        return range(self.n_system_modes, self.n_modes)

    def pure_system(self) -> "ModeLayout":
        """Layout of the system register viewed on its own."""
        return ModeLayout.pure(self.n_system_modes, self.n_system_particles)


def _bits_of(modes, n_modes: int) -> int:
    bits = 0
    for m in modes:
        if not 0 <= m < n_modes:
            raise ValueError(f"mode {m} outside layout with {n_modes} modes")
        if bits >> m & 1:
            raise ValueError(f"mode {m} listed twice")
        bits |= 1 << m
    return bits


class SectorBasis:
    """Ordered occupation basis with fixed particle count per register.

    ``states`` is an ascending uint64 array of occupation bitstrings.
    Instances are immutable; compiled operator maps are cached on the
    instance and shared by all consumers.
    """

    def __init__(self, layout: ModeLayout, states: np.ndarray):
        self.layout = layout
        self.states = states
        self.size = len(states)
        self._cache: dict = {}

    def index_of(self, bits: int) -> int:
        i = int(np.searchsorted(self.states, np.uint64(bits)))
        if i >= self.size or self.states[i] != np.uint64(bits):
            raise SectorViolationError(f"occupation {bits:#x} not in sector")
        return i

    def occupied_modes(self, index: int) -> tuple:
        bits = int(self.states[index])
        return tuple(m for m in range(self.layout.n_modes) if bits >> m & 1)

    def __eq__(self, other):
        return isinstance(other, SectorBasis) and other.layout == self.layout

    def __hash__(self):
        return hash(self.layout)

    def __repr__(self):
        return f"SectorBasis({self.layout}, size={self.size})"


@functools.lru_cache(maxsize=None)
def enumerate_sector(layout: ModeLayout) -> SectorBasis:
    """Enumerate all occupations with the layout's per-register counts.

    States are sorted ascending as unsigned integers, giving a
    deterministic ordering across runs.
    """
    n_states = comb(layout.n_system_modes, layout.n_system_particles) * comb(
        layout.n_bath_modes, layout.n_bath_particles
    )
    if n_states == 0:
        raise EmptySectorError("empty sector")
    sys_bits = np.array(
        [_bits_of(c, layout.n_system_modes) for c in
         combinations(range(layout.n_system_modes), layout.n_system_particles)],
        dtype=np.uint64,
    )
    if layout.has_bath:
        bath_bits = np.array(
            [_bits_of(c, layout.n_bath_modes) for c in
             combinations(range(layout.n_bath_modes), layout.n_bath_particles)],
            dtype=np.uint64,
        ) << np.uint64(layout.n_system_modes)
        states = (sys_bits[:, None] | bath_bits[None, :]).ravel()
    else:
        states = sys_bits
    states = np.sort(states)
    return SectorBasis(layout, states)


class StateVector:
    """Complex amplitudes over a :class:`SectorBasis`.

    Amplitudes are stored read-only; operations return new instances.
    """

    def __init__(self, basis: SectorBasis, amplitudes: np.ndarray):
        amps = np.asarray(amplitudes, dtype=np.complex128)
        if amps.shape != (basis.size,):
            raise ValueError(f"amplitude vector must have length {basis.size}")
        amps = amps.copy()
        amps.flags.writeable = False
        self.basis = basis
        self.amplitudes = amps

    @property
    def layout(self) -> ModeLayout:
        return self.basis.layout

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other: "StateVector") -> complex:
        if other.basis != self.basis:
            raise ValueError("states live on different bases")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.basis, self.amplitudes / n)

    def __repr__(self):
        return f"StateVector(dim={self.basis.size}, norm={self.norm():.6g})"


@dataclass(frozen=True)
class ExcitationMap:
    """Compiled action of one excitation string on a sector basis.

    ``target[i] = sign[i] * source-amplitude`` describes the nonzero
    matrix elements; the map is injective on its domain, and its signs
    are +-1.
    """

    basis_in: SectorBasis
    basis_out: SectorBasis
    source: np.ndarray
    target: np.ndarray
    sign: np.ndarray

    def apply(self, vec: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        if out is None:
            out = np.zeros(self.basis_out.size, dtype=vec.dtype)
        out[self.target] = self.sign * vec[self.source]
        return out

    def apply_adjoint(self, vec: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        if out is None:
            out = np.zeros(self.basis_in.size, dtype=vec.dtype)
        out[self.source] = self.sign * vec[self.target]
        return out


def _apply_string_to_bits(bits: np.ndarray, creations, annihilations):
    """Vectorized second-quantized string action on raw bitstrings.

    Annihilations act right-to-left, then creations right-to-left, each
    elementary operator contributing the parity of the occupations
    below its mode.  Returns (alive mask, output bits, signs).
    """
    cur = bits.copy()
    sign = np.ones(len(bits), dtype=np.int64)
    alive = np.ones(len(bits), dtype=bool)
    one = np.uint64(1)

    def parity_below(mode):
        below = np.uint64((1 << mode) - 1)
        return (np.bitwise_count(cur & below) & one).astype(np.int64)

    for q in reversed(list(annihilations)):
        occ = (cur >> np.uint64(q)) & one
        alive &= occ == one
        sign *= 1 - 2 * parity_below(q)
        cur &= ~np.uint64(1 << q)
    for q in reversed(list(creations)):
        occ = (cur >> np.uint64(q)) & one
        alive &= occ == np.uint64(0)
        sign *= 1 - 2 * parity_below(q)
        cur |= np.uint64(1 << q)
    return alive, cur, sign


def _string_register_deltas(layout: ModeLayout, creations, annihilations):
    d_sys = sum(1 for m in creations if layout.is_system_mode(m)) - sum(
        1 for m in annihilations if layout.is_system_mode(m)
    )
    d_bath = (len(creations) - len(annihilations)) - d_sys
    return d_sys, d_bath


def excitation_map(basis: SectorBasis, creations: tuple, annihilations: tuple) -> ExcitationMap:
    """Compile (and cache) the operator string a+_{c...} a_{a...} on a basis."""
    creations = tuple(creations)
    annihilations = tuple(annihilations)
    key = ("xmap", creations, annihilations)
    cached = basis._cache.get(key)
    if cached is not None:
        return cached

    layout = basis.layout
    for m in creations + annihilations:
        if not 0 <= m < layout.n_modes:
            raise ValueError(f"mode index {m} out of range")
    if len(set(creations)) != len(creations) or len(set(annihilations)) != len(annihilations):
        raise ValueError("operator string repeats a mode within a creation or annihilation list")

    d_sys, d_bath = _string_register_deltas(layout, creations, annihilations)
    try:
        out_layout = ModeLayout(
            layout.n_system_modes,
            layout.n_bath_modes,
            layout.n_system_particles + d_sys,
            layout.n_bath_particles + d_bath,
        )
        basis_out = enumerate_sector(out_layout)
    except (ValueError, EmptySectorError) as exc:
        raise SectorViolationError(f"sector violation: {exc}") from exc

    alive, out_bits, sign = _apply_string_to_bits(basis.states, creations, annihilations)
    src = np.nonzero(alive)[0].astype(np.int32)
    tgt_bits = out_bits[alive]
    tgt = np.searchsorted(basis_out.states, tgt_bits).astype(np.int32)
    if np.any(tgt >= basis_out.size) or np.any(basis_out.states[np.minimum(tgt, basis_out.size - 1)] != tgt_bits):
        raise SectorViolationError("sector violation: string produced out-of-sector occupations")
    m = ExcitationMap(basis, basis_out, src, tgt, sign[alive].astype(np.float64))
    basis._cache[key] = m
    return m


def build_determinant(basis: SectorBasis, occupied_modes) -> StateVector:
    """Unit vector on the given occupation, created in ascending mode order."""
    layout = basis.layout
    bits = _bits_of(occupied_modes, layout.n_modes)
    n_sys = sum(1 for m in occupied_modes if layout.is_system_mode(m))
    if n_sys != layout.n_system_particles or len(tuple(occupied_modes)) - n_sys != layout.n_bath_particles:
        raise SectorViolationError("occupation does not match the sector's particle counts")
    amps = np.zeros(basis.size, dtype=np.complex128)
    amps[basis.index_of(bits)] = 1.0
    return StateVector(basis, amps)


def apply_excitation_string(state: StateVector, creations, annihilations) -> StateVector:
    """Exact second-quantized action of a+_{c...} a_{a...}; may be unnormalized or zero.

    The result lives in the sector implied by the string's net particle
    transfer, which coincides with the input sector for strings that
    balance creations and annihilations within each register.
    """
    m = excitation_map(state.basis, tuple(creations), tuple(annihilations))
    return StateVector(m.basis_out, m.apply(state.amplitudes))


def build_purified_mixture(basis: SectorBasis, components) -> StateVector:
    """Purify a mixture: sum_i sqrt(p_i) |phi_i> (x) |phi_i copied on bath>.

    ``components`` is a sequence of ``(weight, StateVector)`` pairs with
    the states living on the system register alone.  Weights must be
    nonnegative and sum to one; the states must be mutually
    orthonormal, which makes their bath copies an orthonormal set and
    the output exactly unit norm.
    """
    layout = basis.layout
    if not layout.has_bath or layout.n_bath_particles != layout.n_system_particles:
        raise ValueError("purification requires an ensemble layout with mirrored particle counts")
    components = list(components)
    if not components:
        raise ValueError("at least one component required")
    weights = np.array([w for w, _ in components], dtype=float)
    if np.any(weights < -1e-15):
        raise ValueError("weights must be nonnegative")
    if abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError(f"weights sum to {weights.sum()!r}, expected 1")

    sys_layout = layout.pure_system()
    phis = []
    for _, phi in components:
        if phi.layout != sys_layout:
            raise ValueError("component states must live on the bare system register")
        phis.append(phi.amplitudes)
    for i in range(len(phis)):
        for j in range(i, len(phis)):
            ov = np.vdot(phis[i], phis[j])
            expected = 1.0 if i == j else 0.0
            if abs(ov - expected) > 1e-10:
                raise ValueError("component states are not orthonormal")

    sys_basis = enumerate_sector(sys_layout)
    shift = np.uint64(layout.n_system_modes)
    combined = sys_basis.states[:, None] | (sys_basis.states[None, :] << shift)
    idx = np.searchsorted(basis.states, combined.ravel()).reshape(combined.shape)

    amps = np.zeros(basis.size, dtype=np.complex128)
    for w, phi in zip(weights, phis):
        if w == 0.0:
            continue
        # bath copy of phi_i: amplitude phi[s] * phi[b] on (s, b)
        np.add.at(amps, idx, np.sqrt(w) * np.outer(phi, phi))
    return StateVector(basis, amps)
