"""Quasi-static solution of coupled multi-mesh contact problems.

A problem is a list of domains (each a mesh with its own material and
kinematics), penalty-regularized mortar couplings tying boundary layers
to background meshes, optional mortar contact against a rigid master, and
Dirichlet/load data.  The external load and prescribed displacements are
ramped over load steps; each step is solved with a semismooth Newton
method whose active set is updated every iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .contact import (ContactAssembly, active_set_update, assemble_contact,
                      contact_tractions)
from .coupling import MortarCoupling
from .elasticity import Material, _basis_tables, assemble_internal, \
    default_quadrature
from .meshing import BoundaryLayerMesh, Mesh
from .nurbs import GeometryError


class SolverError(RuntimeError):
    """Newton iteration failed to converge."""


@dataclass
class Domain:
    mesh: Mesh
    material: Material
    kinematics: str = "finite"
    cut_rules: dict | None = None


@dataclass
class CouplingTerm:
    """Penalty mortar tie between a layer domain and a background domain."""
    layer_domain: int
    background_domain: int
    mortar: MortarCoupling
    epsilon: float


@dataclass
class ContactTerm:
    """Mortar contact of one layer's body boundary against a rigid master."""
    domain: int
    layer: BoundaryLayerMesh
    master: object
    c_n: float | None = None    # default: 10 E / mean slave edge length


@dataclass
class Problem:
    domains: list
    couplings: list = field(default_factory=list)
    contact: ContactTerm | None = None
    # (domain, local dofs 2*node+component, prescribed values at full load)
    dirichlet: list = field(default_factory=list)
    # (domain, reference dead-load vector of length 2*n_nodes)
    loads: list = field(default_factory=list)


class DofMap:
    """Contiguous global numbering over the domains of a problem."""

    def __init__(self, domains):
        sizes = [2 * d.mesh.n_nodes for d in domains]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])
        self.size = int(self.offsets[-1])

    def local_to_global(self, domain: int, local_dofs) -> np.ndarray:
        return np.asarray(local_dofs, int) + int(self.offsets[domain])

    def domain_slice(self, domain: int) -> slice:
        return slice(int(self.offsets[domain]), int(self.offsets[domain + 1]))


@dataclass
class StepRecord:
    factor: float
    iterations: int
    set_changes: int
    residual: float
    n_active: int


@dataclass
class SolveReport:
    converged: bool
    u: np.ndarray
    displacements: list
    lam: np.ndarray
    gaps: np.ndarray
    slave_nodes: np.ndarray
    tractions: np.ndarray
    active: np.ndarray
    steps: list
    contact_assembly: ContactAssembly | None = None


def _coupling_stiffness(problem: Problem, dofs: DofMap) -> sp.csr_matrix:
    """Constant global penalty stiffness of all mortar couplings."""
    rows, cols, vals = [], [], []
    for term in problem.couplings:
        m = term.mortar
        K_ll, K_lb, K_bb = m.stiffness_blocks(term.epsilon)
        ld = dofs.offsets[term.layer_domain] + 2 * m.layer_nodes
        bd = dofs.offsets[term.background_domain] + 2 * m.bg_nodes
        for comp in (0, 1):
            l = ld + comp
            b = bd + comp
            # stiffness_blocks returns the cross term with shape (nb, nl)
            for A, r, c in ((K_ll, l, l), (K_lb, b, l),
                            (K_lb.T, l, b), (K_bb, b, b)):
                rr, cc = np.meshgrid(r, c, indexing="ij")
                rows.append(rr.ravel())
                cols.append(cc.ravel())
                vals.append(np.asarray(A).ravel())
    if not rows:
        return sp.csr_matrix((dofs.size, dofs.size))
    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dofs.size, dofs.size)).tocsr()


def _internal(problem: Problem, dofs: DofMap, u: np.ndarray):
    f = np.zeros(dofs.size)
    blocks = []
    for i, dom in enumerate(problem.domains):
        s = dofs.domain_slice(i)
        d = u[s].reshape(-1, 2)
        fi, Ki = assemble_internal(dom.mesh, d, dom.material,
                                   dom.kinematics, dom.cut_rules)
        f[s] = fi
        blocks.append(Ki)
    return f, sp.block_diag(blocks, format="csr")


def _default_c_n(term: ContactTerm, domain: Domain) -> float:
    mesh = domain.mesh
    lengths = []
    for edge in term.layer.contact_edges:
        x = mesh.nodes[np.asarray(edge.nodes, int)]
        lengths.append(np.linalg.norm(x[1] - x[0]) + np.linalg.norm(x[2] - x[1]))
    h = float(np.mean(lengths))
    return 10.0 * domain.material.youngs_modulus / h


def _contact_state(problem: Problem, dofs: DofMap, u: np.ndarray):
    term = problem.contact
    s = dofs.domain_slice(term.domain)
    asm = assemble_contact(term.layer, u[s].reshape(-1, 2), term.master)
    nq, nloc = asm.C.shape
    pad_l = int(dofs.offsets[term.domain])
    pad_r = dofs.size - pad_l - nloc
    C = sp.hstack([sp.csr_matrix((nq, pad_l)), asm.C,
                   sp.csr_matrix((nq, pad_r))], format="csr")
    return asm, C


def _geometric_contact_stiffness(problem, dofs, asm, lam) -> sp.csr_matrix:
    term = problem.contact
    Kloc = asm.geometric_stiffness(lam, term.master)
    n = dofs.size
    off = int(dofs.offsets[term.domain])
    Kloc = Kloc.tocoo()
    return sp.coo_matrix((Kloc.data, (Kloc.row + off, Kloc.col + off)),
                         shape=(n, n)).tocsr()


def solve_quasi_static(problem: Problem, n_steps: int = 1,
                       max_newton: int = 50, max_set_changes: int = 10,
                       tol_r: float = 1e-8, tol_d: float = 1e-8,
                       verbose: bool = False) -> SolveReport:
    """Ramp loads over n_steps and solve each with semismooth Newton."""
    dofs = DofMap(problem.domains)
    K_pen = _coupling_stiffness(problem, dofs)

    f_ext = np.zeros(dofs.size)
    for domain, vec in problem.loads:
        f_ext[dofs.domain_slice(domain)] += np.asarray(vec, float)

    fixed, fixed_vals = [], []
    for domain, local, values in problem.dirichlet:
        fixed.append(dofs.local_to_global(domain, local))
        fixed_vals.append(np.broadcast_to(np.asarray(values, float),
                                          np.shape(local)).ravel())
    fixed = np.concatenate(fixed) if fixed else np.array([], int)
    fixed_vals = np.concatenate(fixed_vals) if fixed_vals else np.array([])
    free = np.setdiff1d(np.arange(dofs.size), fixed)

    diag = max(d.mesh.diagonal() for d in problem.domains)
    u = np.zeros(dofs.size)

    # dofs of fully void background nodes carry no stiffness; pin them
    _, K0 = _internal(problem, dofs, u)
    dead = np.flatnonzero((K0 + K_pen).diagonal() == 0.0)
    if dead.size:
        free = np.setdiff1d(free, dead)

    # with linear kinematics everywhere the material stiffness is constant
    all_linear = all(d.kinematics == "linear" for d in problem.domains)

    has_contact = problem.contact is not None
    if has_contact:
        c_n = problem.contact.c_n or _default_c_n(
            problem.contact, problem.domains[problem.contact.domain])
        nq = len({int(n) for e in problem.contact.layer.contact_edges
                  for n in e.nodes})
        lam = np.zeros(nq)
        active = np.zeros(nq, bool)
    else:
        nq, lam, active = 0, np.zeros(0), np.zeros(0, bool)

    steps = []
    asm = None
    overall = True
    for step in range(1, n_steps + 1):
        factor = step / n_steps
        u[fixed] = factor * fixed_vals
        tol_force = tol_r * max(factor * np.linalg.norm(f_ext), 1.0)
        last_dnorm = np.inf
        set_changes = 0
        converged = False
        res_norm = np.nan
        it = 0
        for it in range(1, max_newton + 1):
            if all_linear:
                f_int, K_t = K0 @ u, K0
            else:
                f_int, K_t = _internal(problem, dofs, u)
            r = f_int + K_pen @ u - factor * f_ext
            K = K_t + K_pen
            if has_contact:
                asm, C = _contact_state(problem, dofs, u)
                if it == 1:
                    # seed with touching nodes active: a body initially
                    # resting on the master has zero gaps and multipliers,
                    # and the strict tie rule would leave the rigid mode
                    # toward the master unconstrained
                    new_active = (lam - c_n * (asm.gaps - 1e-12 * diag)) > 0
                else:
                    new_active = active_set_update(lam, asm.gaps, c_n)
                changed = bool(np.any(new_active != active))
                if changed:
                    set_changes += 1
                    if set_changes > max_set_changes:
                        break
                active = new_active
                # lam >= 0 is contact pressure; the gap gradient C points
                # toward separation, so the contact force is -C^T lam
                r = r - C.T @ lam
                r_lam = np.where(active, asm.gaps, lam)
                # set-independent complementarity residual; zero at grazing
                # contact where the active set itself is indeterminate
                ncp = np.linalg.norm(
                    lam - np.maximum(0.0, lam - c_n * asm.gaps))
                res_norm = max(np.linalg.norm(r[free]),
                               np.linalg.norm(r_lam))
                settled = (not changed) or ncp <= tol_force
                if (settled and res_norm <= tol_force
                        and last_dnorm <= tol_d * diag):
                    converged = True
                    break
                if not all_linear:
                    # geometric contact stiffness only matters at finite
                    # kinematics; for linear problems the gap nonlinearity
                    # is O(|u|^2) and the quasi-Newton iteration converges
                    # on the same residual at a fraction of the cost
                    K = K + _geometric_contact_stiffness(problem, dofs,
                                                         asm, -lam)
                act = np.flatnonzero(active)
                ina = np.flatnonzero(~active)
                P_act = sp.csr_matrix(
                    (np.ones(act.size), (act, act)), shape=(nq, nq))
                I_ina = sp.csr_matrix(
                    (np.ones(ina.size), (ina, ina)), shape=(nq, nq))
                rows_l = sp.hstack([P_act @ C, I_ina], format="csr")
                J = sp.vstack([sp.hstack([K, -C.T], format="csr"), rows_l],
                              format="csr")
                rhs = -np.concatenate([r, r_lam])
                keep = np.concatenate([free, dofs.size + np.arange(nq)])
                Jff = J[keep][:, keep].tocsc()
                delta = spla.splu(Jff).solve(rhs[keep])
                u[free] += delta[:len(free)]
                lam += delta[len(free):]
                last_dnorm = np.linalg.norm(delta[:len(free)])
            else:
                res_norm = np.linalg.norm(r[free])
                if res_norm <= tol_force and last_dnorm <= tol_d * diag:
                    converged = True
                    break
                Kff = K[np.ix_(free, free)].tocsc()
                delta = spla.splu(Kff).solve(-r[free])
                u[free] += delta
                last_dnorm = np.linalg.norm(delta)
            if verbose:
                print(f"step {step} it {it}: |r|={res_norm:.3e} "
                      f"|du|={last_dnorm:.3e} active={int(active.sum())}")
        steps.append(StepRecord(factor, it, set_changes, float(res_norm),
                                int(active.sum())))
        if not converged:
            overall = False
            break

    displacements = [u[dofs.domain_slice(i)].reshape(-1, 2)
                     for i in range(len(problem.domains))]
    if has_contact and asm is not None:
        tractions = contact_tractions(asm, lam)
        gaps = asm.gaps
        slave = asm.slave_nodes
    else:
        tractions = np.zeros(0)
        gaps = np.zeros(0)
        slave = np.zeros(0, int)
    return SolveReport(overall, u, displacements, lam, gaps, slave,
                       tractions, active, steps, asm)


def energy_norm_error(mesh: Mesh, d: np.ndarray, material: Material,
                      exact_strain, cut_rules: dict | None = None):
    """Absolute and exact-field energy norms for small-strain fields.

    exact_strain(x) maps points (m, 2) to engineering strains (m, 3) in
    Voigt order (11, 22, 12).  Returns (error_norm, exact_norm).
    """
    from .elasticity import _material_matrix
    C = _material_matrix(material)
    err2 = 0.0
    ref2 = 0.0

    def accumulate(X, de, W, pts, qw, technology, physical):
        nonlocal err2, ref2
        N, dN = _basis_tables(technology, [tuple(p) for p in pts], W)
        if N.ndim == 2:                    # same tables for every element
            N = np.broadcast_to(N, (len(X),) + N.shape)
            dN = np.broadcast_to(dN, (len(X),) + dN.shape)
        J = np.einsum("eni,eqnj->eqij", X, dN)
        detJ = np.linalg.det(J)
        G = np.einsum("eqni,eqij->eqnj", dN, np.linalg.inv(J))
        H = np.einsum("eni,eqnj->eqij", de, G)
        eps_h = np.stack([H[..., 0, 0], H[..., 1, 1],
                          H[..., 0, 1] + H[..., 1, 0]], axis=-1)
        x_q = np.einsum("eqn,eni->eqi", N, X)
        eps_x = np.asarray(exact_strain(x_q.reshape(-1, 2))) \
            .reshape(eps_h.shape)
        delta = eps_h - eps_x
        scale = qw[None] if physical else qw[None] * detJ
        err2 += np.einsum("eqi,ij,eqj,eq->", delta, C, delta, scale)
        ref2 += np.einsum("eqi,ij,eqj,eq->", eps_x, C, eps_x, scale)

    for bi, blk in enumerate(mesh.blocks):
        pts, wts = default_quadrature(blk.technology)
        conn = blk.connectivity
        default_ids = []
        for ei in range(len(conn)):
            if cut_rules and (bi, ei) in cut_rules:
                rule = cut_rules[(bi, ei)]
                if rule is None:
                    continue
                c = conn[ei]
                accumulate(mesh.nodes[c][None], np.asarray(d)[c][None],
                           mesh.weights[c][None], rule[0],
                           np.asarray(rule[1]), blk.technology, True)
            else:
                default_ids.append(ei)
        if default_ids:
            c = conn[np.array(default_ids)]
            accumulate(mesh.nodes[c], np.asarray(d)[c], mesh.weights[c],
                       pts, wts, blk.technology, False)
    return float(np.sqrt(err2)), float(np.sqrt(ref2))
