"""Target matrix construction: model mixtures, noise, thermal ensembles.

Model systems are convex two-determinant mixtures on the system
register.  Molecular targets come from exact diagonalization of an
electronic Hamiltonian read from an FCIDUMP integrals file, Boltzmann
weighted at a temperature set (by default) to the gap between the
ground and first excited states.

Noise uses a seeded PCG64 stream (numpy's default generator), so every
noisy target is reproducible bit-exactly from its seed.  For two-body
targets the noise matrix is drawn over the full-tensor layout, i.e.
over all ordered index pairs, which also makes the distance objective
pick up the antisymmetry-violating noise components.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from .fock import ModeLayout, SectorBasis, StateVector, build_determinant, enumerate_sector, excitation_map
from .rdm import FULL_TENSOR, RdmMatrix, compute_rdm, pair_to_full

__all__ = [
    "MixtureSpec",
    "NoiseSpec",
    "IntegralSet",
    "ThermalSpec",
    "ModelSystem",
    "MODEL_SYSTEMS",
    "parse_mode_labels",
    "build_mixture_target",
    "add_noise",
    "load_fcidump",
    "exact_diagonalize",
    "thermal_rdm",
]


# ---------------------------------------------------------------------------
# model systems


def parse_mode_labels(labels, layout: ModeLayout) -> tuple:
    """Map labels like "3a"/"2b" (spatial index + spin letter) to mode indices."""
    out = []
    for lab in labels:
        if isinstance(lab, int):
            out.append(lab)
            continue
        m = re.fullmatch(r"(\d+)([ab])", str(lab).strip().lower())
        if not m:
            raise ValueError(f"cannot parse spin-orbital label {lab!r}")
        out.append(layout.mode(int(m.group(1)), 0 if m.group(2) == "a" else 1))
    return tuple(out)


@dataclass(frozen=True)
class ModelSystem:
    """A named two-determinant model family on K spatial orbitals."""

    name: str
    n_spatial: int
    n_particles: int
    rho1: tuple  # spin-orbital labels
    rho2: tuple

    def layout(self, mode: str) -> ModeLayout:
        n = 2 * self.n_spatial
        if mode == "pure":
            return ModeLayout.pure(n, self.n_particles)
        if mode == "ensemble":
            return ModeLayout.ensemble(n, self.n_particles)
        raise ValueError(f"unknown mode {mode!r}")

    def determinant_modes(self) -> tuple:
        lay = ModeLayout.pure(2 * self.n_spatial, self.n_particles)
        return parse_mode_labels(self.rho1, lay), parse_mode_labels(self.rho2, lay)

    def mixture(self, w: float) -> "MixtureSpec":
        d1, d2 = self.determinant_modes()
        return MixtureSpec(ModeLayout.pure(2 * self.n_spatial, self.n_particles), (d1, d2), w)


MODEL_SYSTEMS = {
    "4e3o": ModelSystem("4e3o", 3, 4, ("1a", "1b", "2a", "2b"), ("1a", "1b", "3a", "3b")),
    "4e4o": ModelSystem("4e4o", 4, 4, ("1a", "1b", "2a", "2b"), ("1a", "1b", "3a", "2b")),
    # spin-orbital substitution families on the 4-orbital model
    "4e4o-sub1": ModelSystem("4e4o-sub1", 4, 4, ("1a", "1b", "2a", "2b"), ("1a", "1b", "3a", "2b")),
    "4e4o-sub2": ModelSystem("4e4o-sub2", 4, 4, ("1a", "1b", "2a", "2b"), ("1a", "1b", "3a", "3b")),
    "4e4o-sub3": ModelSystem("4e4o-sub3", 4, 4, ("1a", "1b", "2a", "2b"), ("1a", "3b", "4a", "4b")),
}


@dataclass(frozen=True)
class MixtureSpec:
    """Convex mixture w * rho1 + (1 - w) * rho2 of determinant states."""

    layout: ModeLayout
    determinants: tuple
    w: float

    def __post_init__(self):
        if not 0.0 <= self.w <= 1.0:
            raise ValueError("mixing weight must lie in [0, 1]")
        if len(self.determinants) != 2:
            raise ValueError("a mixture takes exactly two determinants")


def build_mixture_target(spec: MixtureSpec, p: int) -> RdmMatrix:
    """w-weighted sum of the determinants' p-RDMs, correctly normalized."""
    basis = enumerate_sector(spec.layout)
    states = [build_determinant(basis, occ) for occ in spec.determinants]
    rdms = [compute_rdm(s, p) for s in states]
    data = spec.w * rdms[0].data + (1.0 - spec.w) * rdms[1].data
    out = RdmMatrix(p, rdms[0].n_modes, rdms[0].n_particles, data, rdms[0].layout)
    out.metadata.update({"kind": "mixture", "w": spec.w,
                         "determinants": [list(map(int, d)) for d in spec.determinants]})
    return out


# ---------------------------------------------------------------------------
# noise


@dataclass(frozen=True)
class NoiseSpec:
    """Elementwise uniform [-1, 1] noise of strength epsilon."""

    epsilon: float
    seed: int = 0
    hermitize: bool = False

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")


def add_noise(m: RdmMatrix, spec: NoiseSpec) -> RdmMatrix:
    """Return m + epsilon * R with R i.i.d. uniform in [-1, 1] per entry.

    R is real.  With ``hermitize`` set, R is replaced by its Hermitian
    part before scaling.  The stream is PCG64 seeded with ``spec.seed``,
    making equal-seed calls bit-identical.
    """
    out = m.copy()
    if spec.epsilon == 0.0:
        return out
    rng = np.random.default_rng(spec.seed)
    r = rng.uniform(-1.0, 1.0, size=out.data.shape)
    if spec.hermitize:
        r = 0.5 * (r + r.T)
    out.data = out.data + spec.epsilon * r
    out.metadata.update({"noise_epsilon": spec.epsilon, "noise_seed": spec.seed,
                         "noise_hermitized": spec.hermitize})
    return out


def noisy_target(clean: RdmMatrix, spec: NoiseSpec) -> RdmMatrix:
    """Noise-corrupted target in the layout the noise is defined over.

    Two-body targets are expanded to the full-tensor layout first, so
    the noise covers every ordered index pair rather than only the
    antisymmetrized pair basis.
    """
    if clean.p == 2 and clean.layout != FULL_TENSOR and spec.epsilon > 0:
        clean = RdmMatrix(2, clean.n_modes, clean.n_particles,
                          pair_to_full(clean.data, clean.n_modes), FULL_TENSOR,
                          dict(clean.metadata))
    return add_noise(clean, spec)


# ---------------------------------------------------------------------------
# electronic integrals (FCIDUMP) and exact diagonalization


@dataclass
class IntegralSet:
    """One- and two-electron integrals over K spatial orbitals (Hartree).

    ``v`` holds chemist-notation integrals (ij|kl) as read from the
    file; :meth:`h_spin` and :meth:`v_spin_antisym` expand to spin
    orbitals, the latter in antisymmetrized physicist form <pq||rs>.
    """

    n_spatial: int
    h: np.ndarray
    v: np.ndarray
    e_core: float = 0.0
    n_electrons: int | None = None
    ms2: int | None = None

    @property
    def n_modes(self) -> int:
        return 2 * self.n_spatial

    def h_spin(self) -> np.ndarray:
        k = self.n_spatial
        out = np.zeros((2 * k, 2 * k))
        for s in (0, 1):
            out[s::2, s::2] = self.h
        return out

    def v_spin_antisym(self) -> np.ndarray:
        """<pq||rs> over spin orbitals, physicist convention."""
        k2 = self.n_modes
        spat = np.arange(k2) // 2
        spin = np.arange(k2) % 2
        # physicist <pq|rs> = chemist (pr|qs) with spin deltas
        chem = self.v
        out = np.zeros((k2, k2, k2, k2))
        for p in range(k2):
            for q in range(k2):
                for r in range(k2):
                    for s in range(k2):
                        direct = 0.0
                        exch = 0.0
                        if spin[p] == spin[r] and spin[q] == spin[s]:
                            direct = chem[spat[p], spat[r], spat[q], spat[s]]
                        if spin[p] == spin[s] and spin[q] == spin[r]:
                            exch = chem[spat[p], spat[s], spat[q], spat[r]]
                        out[p, q, r, s] = direct - exch
        return out


def load_fcidump(path) -> IntegralSet:
    """Read an FCIDUMP file: namelist header, then "value i j k l" records.

    Indices are 1-based spatial orbitals in chemist notation; the
    ``0 0 0 0`` record carries the core (nuclear repulsion) energy.
    Eightfold permutation symmetry is completed on read; records that
    conflict with an earlier value by more than 1e-8 draw a warning.
    """
    with open(path) as fh:
        text = fh.read()
    lines = text.splitlines()
    header_end = None
    header_lines = []
    for ln, line in enumerate(lines):
        header_lines.append(line)
        if "&END" in line.upper() or line.strip() == "/" or line.strip().endswith("/"):
            header_end = ln
            break
    if header_end is None:
        raise ValueError(f"{path}: no namelist terminator (&END or /) found")
    header = " ".join(header_lines)
    def _get_int(name):
        m = re.search(rf"{name}\s*=\s*(-?\d+)", header, re.IGNORECASE)
        return int(m.group(1)) if m else None
    norb = _get_int("NORB")
    if norb is None:
        raise ValueError(f"{path}: header does not declare NORB")
    nelec = _get_int("NELEC")
    ms2 = _get_int("MS2")

    h = np.full((norb, norb), np.nan)
    v = np.full((norb, norb, norb, norb), np.nan)
    e_core = 0.0

    def _assign(arr, idx, val, ln):
        prev = arr[idx]
        if not np.isnan(prev) and abs(prev - val) > 1e-8:
            warnings.warn(f"{path}: line {ln + 1}: symmetry conflict at {idx} "
                          f"({prev!r} vs {val!r})")
        arr[idx] = val

    for ln in range(header_end + 1, len(lines)):
        line = lines[ln].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 5:
            raise ValueError(f"{path}: line {ln + 1}: expected 'value i j k l'")
        try:
            val = float(parts[0])
            i, j, k, l = (int(x) for x in parts[1:])
        except ValueError as exc:
            raise ValueError(f"{path}: line {ln + 1}: {exc}") from exc
        if max(i, j, k, l) > norb or min(i, j, k, l) < 0:
            raise ValueError(f"{path}: line {ln + 1}: orbital index out of range")
        if i == j == k == l == 0:
            e_core = val
        elif k == 0 and l == 0:
            if i == 0 or j == 0:
                raise ValueError(f"{path}: line {ln + 1}: malformed one-electron record")
            _assign(h, (i - 1, j - 1), val, ln)
            _assign(h, (j - 1, i - 1), val, ln)
        else:
            if min(i, j, k, l) == 0:
                raise ValueError(f"{path}: line {ln + 1}: malformed two-electron record")
            a, b, c, d = i - 1, j - 1, k - 1, l - 1
            for idx in {(a, b, c, d), (b, a, c, d), (a, b, d, c), (b, a, d, c),
                        (c, d, a, b), (d, c, a, b), (c, d, b, a), (d, c, b, a)}:
                _assign(v, idx, val, ln)

    h = np.where(np.isnan(h), 0.0, h)
    v = np.where(np.isnan(v), 0.0, v)
    if np.max(np.abs(h - h.T)) > 1e-8:
        warnings.warn(f"{path}: one-electron block asymmetric beyond 1e-8")
    return IntegralSet(norb, h, v, e_core, nelec, ms2)


def _sector_basis_for(ints: IntegralSet, n_electrons: int, sector: str, sz: float | None):
    layout = ModeLayout.pure(ints.n_modes, n_electrons)
    basis = enumerate_sector(layout)
    if sector == "all-sz":
        return basis
    if sector != "fixed-sz":
        raise ValueError(f"unknown sector {sector!r}")
    if sz is None:
        raise ValueError("fixed-sz sector requires an sz value")
    n_alpha = round(n_electrons / 2 + sz)
    keep = []
    for i in range(basis.size):
        occ = basis.occupied_modes(i)
        if sum(1 for m in occ if layout.spin(m) == 0) == n_alpha:
            keep.append(int(basis.states[i]))
    if not keep:
        raise ValueError("fixed-sz sector is empty")
    return SectorBasis(layout, np.array(keep, dtype=np.uint64))


def build_hamiltonian(ints: IntegralSet, basis: SectorBasis) -> np.ndarray:
    """Dense N-electron Hamiltonian via second-quantized operator action."""
    n = basis.size
    ham = np.zeros((n, n))
    h_so = ints.h_spin()
    v_as = ints.v_spin_antisym()
    k2 = ints.n_modes
    for p in range(k2):
        for q in range(k2):
            if h_so[p, q] == 0.0:
                continue
            m = excitation_map(basis, (p,), (q,))
            ham[m.target, m.source] += h_so[p, q] * m.sign
    pairs = list(combinations(range(k2), 2))
    for p, q in pairs:
        for r, s in pairs:
            # sum over unordered pairs of the 1/4-weighted antisymmetrized term
            val = v_as[p, q, r, s]
            if val == 0.0:
                continue
            m = excitation_map(basis, (p, q), (s, r))
            ham[m.target, m.source] += val * m.sign
    return ham


def exact_diagonalize(ints: IntegralSet, n_electrons: int, sector: str = "all-sz",
                      sz: float | None = None):
    """All eigenpairs of the electronic Hamiltonian in one number sector.

    Returns (energies ascending, [StateVector ...]).  Energies exclude
    the core offset.  Within a degenerate level the eigenvector basis
    is whatever the dense solver returns; every thermally weighted
    quantity built downstream is invariant under that choice because
    degenerate levels enter with equal weights.
    """
    basis = _sector_basis_for(ints, n_electrons, sector, sz)
    ham = build_hamiltonian(ints, basis)
    if np.max(np.abs(ham - ham.T)) > 1e-12 * max(1.0, np.max(np.abs(ham))):
        raise RuntimeError("assembled Hamiltonian is not symmetric")
    energies, vecs = np.linalg.eigh(ham)
    states = [StateVector(basis, vecs[:, i]) for i in range(basis.size)]
    return energies, states


@dataclass(frozen=True)
class ThermalSpec:
    """Canonical-ensemble construction at fixed electron number.

    ``kbt_rule`` is "gap" (k_B T equals the energy gap between the
    ground and first excited level) or an explicit value in Hartree.
    """

    n_electrons: int
    kbt_rule: object = "gap"
    sector: str = "all-sz"
    sz: float | None = None

    def resolve_kbt(self, energies: np.ndarray) -> float:
        if self.kbt_rule != "gap":
            kbt = float(self.kbt_rule)
            if kbt <= 0:
                raise ValueError("explicit k_B T must be positive")
            return kbt
        e0 = energies[0]
        above = energies[energies > e0 + 1e-9]
        if len(above) == 0:
            raise ValueError("gap rule undefined: all levels degenerate with the ground state")
        return float(above[0] - e0)


def thermal_rdm(eigs, spec: ThermalSpec, p: int) -> RdmMatrix:
    """Boltzmann-weighted p-RDM of the canonical ensemble.

    Energies are shifted by the ground energy before exponentiation so
    the weights cannot overflow; they sum to one by construction.
    """
    energies, states = eigs
    energies = np.asarray(energies, dtype=float)
    kbt = spec.resolve_kbt(energies)
    boltz = np.exp(-(energies - energies[0]) / kbt)
    weights = boltz / boltz.sum()
    data = None
    proto = None
    for w, psi in zip(weights, states):
        r = compute_rdm(psi, p)
        data = w * r.data if data is None else data + w * r.data
        proto = r
    out = RdmMatrix(p, proto.n_modes, proto.n_particles, data, proto.layout)
    out.metadata.update({
        "kind": "thermal",
        "kbt": kbt,
        "e0": float(energies[0]),
        "e1": float(energies[0] + kbt) if spec.kbt_rule == "gap" else None,
        "sector": spec.sector,
        "weights_head": [float(x) for x in weights[:8]],
    })
    return out
