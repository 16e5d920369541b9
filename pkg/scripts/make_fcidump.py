#!/usr/bin/env python3
"""Offline generator for the bundled H2 / linear-H3 STO-3G FCIDUMP files.

Standalone tool (no package imports): evaluates the analytic s-Gaussian
integrals for STO-3G hydrogens, runs an SCF (RHF for even electron
counts, Roothaan single-matrix ROHF for odd), transforms to the
molecular-orbital basis and writes FCIDUMP files with chemist-notation
integrals and 1-based indices.

Usage:
    python scripts/make_fcidump.py [outdir]

Writes h2_r0.75.fcidump, h2_r1.50.fcidump, h3_r0.75.fcidump,
h3_r1.50.fcidump into outdir (default data/fcidump) and prints the SCF
energies it converged to, which double as validation anchors for the
files.
"""

import sys
from pathlib import Path

import numpy as np
from scipy.special import erf

ANGSTROM_TO_BOHR = 1.0 / 0.529177210903

# STO-3G hydrogen 1s: exponents and contraction coefficients
STO3G_H_EXP = np.array([3.42525091, 0.62391373, 0.16885540])
STO3G_H_COEF = np.array([0.15432897, 0.53532814, 0.44463454])


def boys0(t):
    t = np.asarray(t, dtype=float)
    out = np.ones_like(t)
    mask = t > 1e-12
    out[mask] = 0.5 * np.sqrt(np.pi / t[mask]) * erf(np.sqrt(t[mask]))
    return out


def prim_norm(alpha):
    return (2.0 * alpha / np.pi) ** 0.75


def build_integrals(centers, charges):
    """AO overlap, kinetic, nuclear attraction and ERIs for s-type STO-3G."""
    nbf = len(centers)
    exps, coefs = STO3G_H_EXP, STO3G_H_COEF
    norms = prim_norm(exps)

    s = np.zeros((nbf, nbf))
    t = np.zeros((nbf, nbf))
    v = np.zeros((nbf, nbf))
    for i in range(nbf):
        for j in range(nbf):
            rij2 = float(np.dot(centers[i] - centers[j], centers[i] - centers[j]))
            for a, ca in zip(exps, coefs * norms):
                for b, cb in zip(exps, coefs * norms):
                    p = a + b
                    mu = a * b / p
                    pref = ca * cb * np.exp(-mu * rij2)
                    s[i, j] += pref * (np.pi / p) ** 1.5
                    t[i, j] += pref * mu * (3.0 - 2.0 * mu * rij2) * (np.pi / p) ** 1.5
                    pc = (a * centers[i] + b * centers[j]) / p
                    for zc, cc in zip(charges, centers):
                        r2 = float(np.dot(pc - cc, pc - cc))
                        v[i, j] += -zc * pref * (2.0 * np.pi / p) * boys0(np.array([p * r2]))[0]

    eri = np.zeros((nbf,) * 4)
    for i in range(nbf):
        for j in range(nbf):
            rij2 = float(np.dot(centers[i] - centers[j], centers[i] - centers[j]))
            for k in range(nbf):
                for l in range(nbf):
                    rkl2 = float(np.dot(centers[k] - centers[l], centers[k] - centers[l]))
                    acc = 0.0
                    for a, ca in zip(exps, coefs * norms):
                        for b, cb in zip(exps, coefs * norms):
                            p = a + b
                            pc = (a * centers[i] + b * centers[j]) / p
                            ab = np.exp(-(a * b / p) * rij2)
                            for c, cc_ in zip(exps, coefs * norms):
                                for d, cd in zip(exps, coefs * norms):
                                    q = c + d
                                    qc = (c * centers[k] + d * centers[l]) / q
                                    cd_ = np.exp(-(c * d / q) * rkl2)
                                    r2 = float(np.dot(pc - qc, pc - qc))
                                    f0 = boys0(np.array([p * q / (p + q) * r2]))[0]
                                    acc += (ca * cb * cc_ * cd * ab * cd_ * f0
                                            * 2.0 * np.pi ** 2.5 / (p * q * np.sqrt(p + q)))
                    eri[i, j, k, l] = acc
    e_nuc = 0.0
    for i in range(len(charges)):
        for j in range(i + 1, len(charges)):
            e_nuc += charges[i] * charges[j] / np.linalg.norm(centers[i] - centers[j])
    return s, t + v, eri, e_nuc


def scf(s, hcore, eri, n_alpha, n_beta, max_iter=300, tol=1e-12):
    """RHF / Roothaan single-matrix ROHF in the orthogonalized AO basis."""
    ew, ev = np.linalg.eigh(s)
    x = ev @ np.diag(ew ** -0.5) @ ev.T
    nbf = len(s)
    c = np.linalg.eigh(x.T @ hcore @ x)[1]
    c = x @ c
    e_old = 0.0
    for it in range(max_iter):
        pa = c[:, :n_alpha] @ c[:, :n_alpha].T
        pb = c[:, :n_beta] @ c[:, :n_beta].T
        j = np.einsum("ijkl,kl->ij", eri, pa + pb)
        ka = np.einsum("ikjl,kl->ij", eri, pa)
        kb = np.einsum("ikjl,kl->ij", eri, pb)
        fa = hcore + j - ka
        fb = hcore + j - kb
        if n_alpha == n_beta:
            feff = 0.5 * (fa + fb)
        else:
            # Roothaan effective Fock in the current MO basis
            fc = 0.5 * (fa + fb)
            fa_mo = c.T @ fa @ c
            fc_mo = c.T @ fc @ c
            fb_mo = c.T @ fb @ c
            nc, no = n_beta, n_alpha - n_beta
            feff_mo = fc_mo.copy()
            feff_mo[:nc, nc:nc + no] = fb_mo[:nc, nc:nc + no]
            feff_mo[nc:nc + no, :nc] = fb_mo[nc:nc + no, :nc]
            feff_mo[nc:nc + no, nc + no:] = fa_mo[nc:nc + no, nc + no:]
            feff_mo[nc + no:, nc:nc + no] = fa_mo[nc + no:, nc:nc + no]
            ci = np.linalg.inv(c)
            feff = ci.T @ feff_mo @ ci
        e = 0.5 * (np.sum(pa * (hcore + fa)) + np.sum(pb * (hcore + fb)))
        fmo = x.T @ feff @ x
        eps, cmo = np.linalg.eigh(0.5 * (fmo + fmo.T))
        c = x @ cmo
        if abs(e - e_old) < tol and it > 3:
            return e, c, eps
        e_old = e
    raise RuntimeError("SCF did not converge")


def write_fcidump(path, c, hcore, eri, e_nuc, n_elec, ms2):
    nbf = c.shape[1]
    h_mo = c.T @ hcore @ c
    eri_mo = np.einsum("pi,qj,pqrs,rk,sl->ijkl", c, c, eri, c, c, optimize=True)
    lines = [f" &FCI NORB={nbf},NELEC={n_elec},MS2={ms2},",
             "  ORBSYM=" + "1," * nbf,
             "  ISYM=1,",
             " &END"]
    seen = set()
    for i in range(nbf):
        for j in range(nbf):
            for k in range(nbf):
                for l in range(nbf):
                    key = tuple(sorted([tuple(sorted((i, j))), tuple(sorted((k, l)))]))
                    if key in seen or abs(eri_mo[i, j, k, l]) < 1e-14:
                        continue
                    seen.add(key)
                    lines.append(f"{eri_mo[i, j, k, l]: 23.16E} {i+1:3d} {j+1:3d} {k+1:3d} {l+1:3d}")
    for i in range(nbf):
        for j in range(i + 1):
            if abs(h_mo[i, j]) >= 1e-14:
                lines.append(f"{h_mo[i, j]: 23.16E} {i+1:3d} {j+1:3d}   0   0")
    lines.append(f"{e_nuc: 23.16E}   0   0   0   0")
    Path(path).write_text("\n".join(lines) + "\n")


def main():
    outdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("data/fcidump")
    outdir.mkdir(parents=True, exist_ok=True)
    for name, natoms, n_alpha, n_beta, ms2 in [("h2", 2, 1, 1, 0), ("h3", 3, 2, 1, 1)]:
        for r_ang in (0.75, 1.50):
            r = r_ang * ANGSTROM_TO_BOHR
            centers = np.array([[0.0, 0.0, i * r] for i in range(natoms)])
            charges = [1.0] * natoms
            s, hcore, eri, e_nuc = build_integrals(centers, charges)
            e_el, c, eps = scf(s, hcore, eri, n_alpha, n_beta)
            path = outdir / f"{name}_r{r_ang:.2f}.fcidump"
            write_fcidump(path, c, hcore, eri, e_nuc, n_alpha + n_beta, ms2)
            print(f"{path}: E_SCF = {e_el + e_nuc:+.10f} Ha  "
                  f"(electronic {e_el:+.10f}, nuclear {e_nuc:+.10f})")


if __name__ == "__main__":
    main()
