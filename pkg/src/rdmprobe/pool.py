"""Antihermitian excitation-deexcitation generator pool.

One-body generators are ``a+_i a_k - a+_k a_i`` with ``i < k``; two-body
generators are ``a+_i a+_j a_k a_l - a+_k a+_l a_i a_j`` with ``i < j``,
``k < l`` and ``(i, j) > (k, l)`` lexicographically, which removes the
vanishing diagonal case and keeps one representative per adjoint pair.
Every generator conserves the particle number separately in the system
and in the bath register; further filters are configuration knobs.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .fock import ModeLayout, SectorBasis, StateVector, excitation_map

__all__ = ["Generator", "PoolConfig", "build_pool", "apply_generator", "generator_terms"]


@dataclass(frozen=True)
class Generator:
    """One pool element in index form.

    ``indices`` is ``(i, k)`` for one-body and ``(i, j, k, l)`` for
    two-body generators, listing creations before annihilations of the
    leading (excitation) term.  ``id`` is the stable ordinal within the
    pool that produced the generator.
    """

    kind: str  # "one-body" | "two-body"
    indices: tuple
    id: int = -1

    def __post_init__(self):
        if self.kind == "one-body":
            i, k = self.indices
            if not i < k:
                raise ValueError("one-body generator requires i < k")
        elif self.kind == "two-body":
            i, j, k, l = self.indices
            if not (i < j and k < l and (i, j) > (k, l)):
                raise ValueError("two-body generator requires i<j, k<l, (i,j)>(k,l)")
        else:
            raise ValueError(f"unknown generator kind {self.kind!r}")

    @property
    def creations(self) -> tuple:
        return self.indices[: len(self.indices) // 2]

    @property
    def annihilations(self) -> tuple:
        return self.indices[len(self.indices) // 2 :]


@dataclass(frozen=True)
class PoolConfig:
    """Filters applied when enumerating the pool.

    ``conserve_sz`` restricts spin projection: "none" keeps everything,
    "total" requires the spins created to match the spins annihilated
    overall, "per-register" requires the match within each register
    separately.  ``exclude_bath_only`` drops generators acting purely on
    bath modes; a bath-local rotation cannot change any system reduced
    density matrix, so these are dead weight in a distance scan.
    """

    include_one_body: bool = True
    include_two_body: bool = True
    conserve_sz: str = "none"  # "none" | "total" | "per-register"
    exclude_bath_only: bool = False

    def __post_init__(self):
        if not (self.include_one_body or self.include_two_body):
            raise ValueError("pool must include at least one operator kind")
        if self.conserve_sz not in ("none", "total", "per-register"):
            raise ValueError(f"unknown conserve_sz {self.conserve_sz!r}")


def _spin_signature(layout: ModeLayout, modes, per_register: bool):
    if per_register:
        return (
            sum(1 for m in modes if layout.is_system_mode(m) and layout.spin(m) == 0),
            sum(1 for m in modes if not layout.is_system_mode(m) and layout.spin(m) == 0),
        )
    return sum(1 for m in modes if layout.spin(m) == 0)


def _passes(layout: ModeLayout, config: PoolConfig, creations, annihilations) -> bool:
    n_sys_c = sum(1 for m in creations if layout.is_system_mode(m))
    n_sys_a = sum(1 for m in annihilations if layout.is_system_mode(m))
    if n_sys_c != n_sys_a:
        return False
    if config.exclude_bath_only and layout.has_bath:
        if all(not layout.is_system_mode(m) for m in creations + annihilations):
            return False
    if config.conserve_sz != "none":
        per_reg = config.conserve_sz == "per-register"
        if _spin_signature(layout, creations, per_reg) != _spin_signature(layout, annihilations, per_reg):
            return False
    return True


def build_pool(layout: ModeLayout, config: PoolConfig = PoolConfig()) -> list:
    """Deterministic, duplicate-free generator list ordered by (kind, indices)."""
    gens = []
    if config.include_one_body:
        for i, k in combinations(range(layout.n_modes), 2):
            if _passes(layout, config, (i,), (k,)):
                gens.append(("one-body", (i, k)))
    if config.include_two_body:
        pairs = list(combinations(range(layout.n_modes), 2))
        for b, (k, l) in enumerate(pairs):
            for i, j in pairs[b + 1 :]:
                if _passes(layout, config, (i, j), (k, l)):
                    gens.append(("two-body", (i, j, k, l)))
    order = {"one-body": 0, "two-body": 1}
    gens.sort(key=lambda g: (order[g[0]], g[1]))
    return [Generator(kind, idx, n) for n, (kind, idx) in enumerate(gens)]


def generator_terms(g: Generator, basis: SectorBasis):
    """Compiled map of the generator's excitation term A, with O = A - A+."""
    return excitation_map(basis, g.creations, g.annihilations)


def apply_generator_amplitudes(g: Generator, basis: SectorBasis, vec: np.ndarray,
                               out: np.ndarray | None = None) -> np.ndarray:
    """In-engine form of ``apply_generator`` on a raw amplitude array."""
    m = generator_terms(g, basis)
    if m.basis_out is not basis and m.basis_out != basis:
        raise ValueError("generator does not conserve the sector")
    if out is None:
        out = np.zeros(basis.size, dtype=vec.dtype)
    # domain and range of A are disjoint sets of basis states
    out[m.target] = m.sign * vec[m.source]
    out[m.source] -= m.sign * vec[m.target]
    return out


def apply_generator(g: Generator, state: StateVector) -> StateVector:
    """Exact action of the antihermitian generator, O|psi> (unnormalized)."""
    if any(not 0 <= m < state.layout.n_modes for m in g.indices):
        raise ValueError("generator index out of range for this layout")
    return StateVector(state.basis, apply_generator_amplitudes(g, state.basis, state.amplitudes))
