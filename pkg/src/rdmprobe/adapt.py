"""Greedy distance minimization over the generator pool.

Each iteration line-searches every pool generator from the current
state, keeps the generator/angle pair with the smallest resulting
squared Hilbert-Schmidt distance to the target, applies it, and
repeats until the per-iteration improvement drops below ``delta`` or
the iteration cap is reached.

The engine leans on two exact structural facts:

* Every pool generator O = A - A+ (A the excitation term) satisfies
  O^3 = -O, so ``exp(theta O) = 1 + sin(theta) O + (1 - cos(theta)) O^2``
  and one rotated state costs two sparse applications.
* The rotated state is ``psi + sin(theta) v1 + (1 - cos(theta)) v2``
  with v1 = O psi, v2 = O v1, so the distance along the rotation is an
  exact trigonometric polynomial with harmonics up to 4 theta.  Its
  coefficients are assembled once per generator from cross reduced
  density matrices of (psi, v1, v2); after that, evaluating the
  distance at any angle costs a 6x6 quadratic form.

The line search evaluates the distance and its derivative on an
equispaced angle grid over the search window, brackets the derivative's
sign changes, refines each bracket by bisection, and falls back to
theta = 0, so a selected move is never worse than not moving.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fock import SectorBasis, StateVector
from .pool import Generator, generator_terms
from .rdm import (
    FULL_TENSOR,
    PAIR_ANTISYM,
    RdmMatrix,
    family_1body,
    family_2body,
    family_matrix,
    full_to_pair_projection,
)

__all__ = [
    "AdaptConfig",
    "TraceStep",
    "ProbeResult",
    "apply_exponential",
    "line_search",
    "adapt_minimize",
    "distance_gradient",
]

_GRID_POINTS = 65      # odd, so theta = 0 is always probed
_BISECT_STEPS = 50
_CHUNK = 32


@dataclass(frozen=True)
class AdaptConfig:
    """Knobs of the minimization loop and its line search.

    ``d_stop`` is an optional early-exit floor: when positive, the loop
    also stops once the distance falls to or below it.  The default 0
    keeps the loop on the pure improvement criterion.
    """

    p: int = 1
    delta: float = 1e-8
    k_max: int = 5000
    theta_window: float = math.pi
    line_search_tol: float = 1e-10
    tie_tol: float = 1e-12
    d_stop: float = 0.0

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")
        if self.theta_window <= 0:
            raise ValueError("theta_window must be positive")
        if self.d_stop < 0:
            raise ValueError("d_stop must be nonnegative")


@dataclass(frozen=True)
class TraceStep:
    k: int
    generator_id: int
    theta: float
    distance: float


@dataclass
class ProbeResult:
    """Converged minimum distance, final state, and per-iteration trace."""

    d_min: float
    final_state: StateVector
    trace: list
    converged: bool
    config: AdaptConfig

    @property
    def n_iterations(self) -> int:
        return len(self.trace) - 1

    @property
    def stall_tail(self) -> list:
        """Last (up to) ten recorded distances, for plateau diagnostics."""
        return [t.distance for t in self.trace[-10:]]


class _Objective:
    """Distance to a fixed target, evaluated in the target's layout.

    Internally the evaluation always happens in mode (p=1) or
    pair-antisym (p=2) coordinates; a full-tensor 2-body target is
    split into its antisymmetric projection (an effective pair-basis
    target) plus a constant offset carrying the symmetry-violating
    remainder, which no state can absorb.
    """

    def __init__(self, basis: SectorBasis, target: RdmMatrix):
        layout = basis.layout
        if target.n_modes != layout.n_system_modes:
            raise ValueError("target mode count does not match the system register")
        self.p = target.p
        self.basis = basis
        if self.p == 1:
            if layout.n_system_particles < 1:
                raise ValueError("1-RDM probe requires at least one system particle")
            self.family = family_1body(basis)
            self.scale = 1.0
            t_eff = target.data
            self.offset = 0.0
        else:
            if layout.n_system_particles < 2:
                raise ValueError("2-RDM probe requires at least two system particles")
            self.family = family_2body(basis)
            self.scale = 2.0
            if target.layout == PAIR_ANTISYM:
                t_eff = target.data
                self.offset = 0.0
            elif target.layout == FULL_TENSOR:
                t_eff = full_to_pair_projection(target.data, target.n_modes)
                total = float(np.sum(target.data.real**2 + target.data.imag**2))
                self.offset = max(total - float(np.sum(t_eff.real**2 + t_eff.imag**2)), 0.0)
            else:
                raise ValueError(f"unknown target layout {target.layout!r}")
        self.real_target = bool(np.all(t_eff.imag == 0))
        self._t_eff = np.ascontiguousarray(t_eff)
        self.n_cols = self._t_eff.shape[0]

    def t_eff(self, dtype) -> np.ndarray:
        if dtype == np.float64 and self.real_target:
            return np.ascontiguousarray(self._t_eff.real)
        return self._t_eff

    def fam(self, vec: np.ndarray) -> np.ndarray:
        return family_matrix(self.family, vec)

    def rho_eff(self, vec: np.ndarray) -> np.ndarray:
        f = self.fam(vec)
        return self.scale * (f.conj() @ f.T)

    def distance(self, vec: np.ndarray) -> float:
        d = self.rho_eff(vec) - self.t_eff(vec.dtype)
        return float(np.sum(d.real**2 + d.imag**2)) + self.offset


class _GenAction:
    """Precompiled O = A - A+ action of one generator on a fixed basis."""

    __slots__ = ("gid", "src", "tgt", "sign")

    def __init__(self, g: Generator, basis: SectorBasis):
        m = generator_terms(g, basis)
        if m.basis_out != basis:
            raise ValueError(f"generator {g} does not conserve the sector")
        self.gid = g.id
        self.src = m.source
        self.tgt = m.target
        self.sign = m.sign

    def odot(self, vec: np.ndarray, out: np.ndarray) -> np.ndarray:
        out.fill(0)
        out[self.tgt] = self.sign * vec[self.src]
        out[self.src] -= self.sign * vec[self.tgt]
        return out


def _kappa(thetas: np.ndarray) -> np.ndarray:
    s = np.sin(thetas)
    c = 1.0 - np.cos(thetas)
    return np.stack([np.ones_like(s), s, c, s * s, s * c, c * c], axis=-1)


def _dkappa(thetas: np.ndarray) -> np.ndarray:
    s, co = np.sin(thetas), np.cos(thetas)
    c = 1.0 - co
    return np.stack([np.zeros_like(s), co, s, 2 * s * co, co * c + s * s, 2 * c * s], axis=-1)


def _line_search_g6(g6: np.ndarray, offset: float, cfg: AdaptConfig):
    """Minimize the exact distance polynomial for a batch of generators.

    ``g6`` has shape (C, 6, 6); returns (theta, distance) arrays.  The
    returned distance is the polynomial value, which tracks the exact
    recomputed distance to machine precision.  Staying at theta = 0 is
    always among the candidates, so the result is never worse than not
    moving.
    """
    w = cfg.theta_window
    n_c = g6.shape[0]
    grid = np.linspace(-w, w, _GRID_POINTS)
    kg, dkg = _kappa(grid), _dkappa(grid)
    dvals = np.einsum("ta,cab,tb->ct", kg, g6, kg)
    dervs = 2.0 * np.einsum("ta,cab,tb->ct", dkg, g6, kg)
    d0 = dvals[:, _GRID_POINTS // 2].copy()  # grid is symmetric and odd: center is 0

    # bracket the derivative's sign changes and refine by bisection
    prod = dervs[:, :-1] * dervs[:, 1:]
    ci, ti = np.nonzero(prod <= 0)
    lo, hi = grid[ti].copy(), grid[ti + 1].copy()
    slo = np.sign(dervs[ci, ti])
    g6b = g6[ci]
    for _ in range(_BISECT_STEPS):
        if not len(lo) or np.max(hi - lo) < cfg.line_search_tol:
            break
        mid = 0.5 * (lo + hi)
        dmid = 2.0 * np.einsum("ba,bac,bc->b", _dkappa(mid), g6b, _kappa(mid))
        same = np.sign(dmid) == slo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    roots = 0.5 * (lo + hi)

    # rank all candidates (full grid plus refined roots) per generator
    cand_c = np.concatenate([np.repeat(np.arange(n_c), _GRID_POINTS), ci])
    cand_t = np.concatenate([np.tile(grid, n_c), roots])
    cand_v = np.concatenate([dvals.ravel(), np.einsum("ba,bac,bc->b", _kappa(roots), g6b, _kappa(roots))])
    order = np.lexsort((cand_v, cand_c))
    first = np.searchsorted(cand_c[order], np.arange(n_c))
    best_theta = cand_t[order][first]
    best_d = cand_v[order][first]

    stay = best_d >= d0
    best_theta[stay] = 0.0
    best_d[stay] = d0[stay]
    return best_theta, best_d + offset


class _ScanEngine:
    """One full pool scan per iteration, chunked for BLAS-sized matmuls."""

    def __init__(self, basis: SectorBasis, objective: _Objective, generators, cfg: AdaptConfig, dtype):
        if not generators:
            raise ValueError("empty pool")
        self.basis = basis
        self.obj = objective
        self.cfg = cfg
        self.dtype = dtype
        self.actions = [_GenAction(g, basis) for g in generators]
        self.gen_ids = np.array([a.gid for a in self.actions])

    def scan(self, vec: np.ndarray):
        obj, cfg = self.obj, self.cfg
        n = obj.n_cols
        dim = self.basis.size
        t_eff = obj.t_eff(self.dtype)
        f0 = obj.fam(vec)
        f0c = f0.conj()
        b0 = obj.scale * (f0c @ f0.T) - t_eff

        n_gen = len(self.actions)
        all_theta = np.empty(n_gen)
        all_d = np.empty(n_gen)
        v1 = np.empty(dim, dtype=self.dtype)
        v2 = np.empty(dim, dtype=self.dtype)
        for start in range(0, n_gen, _CHUNK):
            chunk = self.actions[start : start + _CHUNK]
            c = len(chunk)
            x = np.zeros((c, 2 * n, f0.shape[1]), dtype=self.dtype)
            for ui, act in enumerate(chunk):
                act.odot(vec, v1)
                act.odot(v1, v2)
                xf = x[ui].reshape(-1)
                fam = obj.family
                half = n * f0.shape[1]
                xf[fam[1]] = fam[2] * v1[fam[0]]
                xf[half + fam[1]] = fam[2] * v2[fam[0]]
            c0x = np.matmul(f0c[None], x.transpose(0, 2, 1))      # (c, n, 2n)
            cxx = np.matmul(x.conj(), x.transpose(0, 2, 1))        # (c, 2n, 2n)
            bs = np.empty((c, 6, n, n), dtype=self.dtype)
            s = obj.scale
            c01, c02 = c0x[:, :, :n], c0x[:, :, n:]
            bs[:, 0] = b0
            bs[:, 1] = s * (c01 + c01.conj().transpose(0, 2, 1))
            bs[:, 2] = s * (c02 + c02.conj().transpose(0, 2, 1))
            bs[:, 3] = s * cxx[:, :n, :n]
            c12 = cxx[:, :n, n:]
            bs[:, 4] = s * (c12 + c12.conj().transpose(0, 2, 1))
            bs[:, 5] = s * cxx[:, n:, n:]
            g6 = np.einsum("cxuv,cyuv->cxy", bs.conj(), bs).real
            th, dv = _line_search_g6(g6, obj.offset, cfg)
            all_theta[start : start + c] = th
            all_d[start : start + c] = dv

        d_best = float(np.min(all_d))
        pick = int(np.nonzero(all_d <= d_best + cfg.tie_tol)[0][0])
        return self.gen_ids[pick], pick, float(all_theta[pick]), d_best

    def rotate(self, vec: np.ndarray, pick: int, theta: float) -> np.ndarray:
        act = self.actions[pick]
        v1 = act.odot(vec, np.empty_like(vec))
        v2 = act.odot(v1, np.empty_like(vec))
        out = vec + math.sin(theta) * v1 + (1.0 - math.cos(theta)) * v2
        return out / np.linalg.norm(out)


def apply_exponential(g: Generator, theta: float, state: StateVector) -> StateVector:
    """Exact unitary exp(theta O)|psi> for an antihermitian pool generator."""
    m = generator_terms(g, state.basis)
    if m.basis_out != state.basis:
        raise ValueError("generator does not conserve the state's sector")
    vec = state.amplitudes
    v1 = np.zeros_like(vec)
    v1[m.target] = m.sign * vec[m.source]
    v1[m.source] -= m.sign * vec[m.target]
    v2 = np.zeros_like(vec)
    v2[m.target] = m.sign * v1[m.source]
    v2[m.source] -= m.sign * v1[m.target]
    return StateVector(state.basis, vec + math.sin(theta) * v1 + (1.0 - math.cos(theta)) * v2)


def _engine_dtype(state: StateVector, objective: _Objective):
    if objective.real_target and bool(np.all(state.amplitudes.imag == 0)):
        return np.float64
    return np.complex128


def _work_vector(state: StateVector, dtype):
    return state.amplitudes.real.copy() if dtype == np.float64 else state.amplitudes.copy()


def line_search(state: StateVector, g: Generator, target: RdmMatrix,
                cfg: AdaptConfig = AdaptConfig()):
    """Best angle for one generator: (theta*, distance at theta*).

    The returned distance is recomputed exactly at theta*; it never
    exceeds the distance at theta = 0.
    """
    obj = _Objective(state.basis, target)
    dtype = _engine_dtype(state, obj)
    vec = _work_vector(state, dtype)
    engine = _ScanEngine(state.basis, obj, [g], cfg, dtype)
    _, _, theta, _ = engine.scan(vec)
    d0 = obj.distance(vec)
    d_star = obj.distance(engine.rotate(vec, 0, theta))
    if d_star >= d0:
        return 0.0, d0
    return theta, d_star


def distance_gradient(state: StateVector, g: Generator, target: RdmMatrix) -> float:
    """Analytic derivative of the squared distance along exp(theta O) at theta = 0.

    Assembled from cross reduced-density-matrix brackets between psi
    and O psi: d/dtheta rho|_0 = R01 + R01+ elementwise.
    """
    obj = _Objective(state.basis, target)
    dtype = _engine_dtype(state, obj)
    vec = _work_vector(state, dtype)
    m = generator_terms(g, state.basis)
    v1 = np.zeros_like(vec)
    v1[m.target] = m.sign * vec[m.source]
    v1[m.source] -= m.sign * vec[m.target]
    f0, f1 = obj.fam(vec), obj.fam(v1)
    b0 = obj.scale * (f0.conj() @ f0.T) - obj.t_eff(dtype)
    c01 = f0.conj() @ f1.T
    b1 = obj.scale * (c01 + c01.conj().T)
    return float(2.0 * np.sum((b0.conj() * b1).real))


def adapt_minimize(initial: StateVector, target: RdmMatrix, pool,
                   cfg: AdaptConfig = AdaptConfig()) -> ProbeResult:
    """Run the greedy minimization loop to convergence.

    Per iteration: line-search every pool generator from the current
    state, apply the best (ties break to the lowest generator id),
    record the trace, and stop once the distance improvement is at most
    ``delta`` or ``k_max`` iterations have run.
    """
    if cfg.p != target.p:
        raise ValueError(f"config p={cfg.p} does not match target p={target.p}")
    if not pool:
        raise ValueError("empty pool")
    obj = _Objective(initial.basis, target)
    dtype = _engine_dtype(initial, obj)
    vec = _work_vector(initial, dtype)
    engine = _ScanEngine(initial.basis, obj, pool, cfg, dtype)

    d_prev = obj.distance(vec)
    trace = [TraceStep(0, -1, 0.0, d_prev)]
    converged = cfg.d_stop > 0 and d_prev <= cfg.d_stop
    if not converged:
        for k in range(1, cfg.k_max + 1):
            gid, pick, theta, _ = engine.scan(vec)
            vec = engine.rotate(vec, pick, theta)
            d_k = obj.distance(vec)
            trace.append(TraceStep(k, int(gid), theta, d_k))
            stop = abs(d_k - d_prev) <= cfg.delta or (cfg.d_stop > 0 and d_k <= cfg.d_stop)
            d_prev = d_k
            if stop:
                converged = True
                break

    final = StateVector(initial.basis, vec.astype(np.complex128))
    return ProbeResult(d_min=d_prev, final_state=final, trace=trace,
                       converged=converged, config=cfg)
