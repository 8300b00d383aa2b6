"""Vector fields and frames on a ball in R^r x C^n.

A :class:`VectorField` stores series coefficients over the complex frame
basis (d/dt_1..d/dt_r, d/dz_1..d/dz_n, d/dzbar_1..d/dzbar_n); conversion
to the real coordinate basis (d/dt, d/dx) uses

    d/dz_j    = (1/2)(d/dx_j - i d/dx_{j+n})
    d/dzbar_j = (1/2)(d/dx_j + i d/dx_{j+n})

Contents: commutators, pullbacks/pushforwards, pointwise structure
checking (spans, intersection dimensions, integrability residuals),
point normalization to the model frame at a point, the linear-algebra
reduction to pure (E,F) perturbation blocks, and anisotropic frame
scaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .errors import (
    DomainShrinkError,
    PreconditionError,
    ShapeError,
    SingularityError,
)
from .series import (
    PowerSeries,
    SeriesMap,
    compose,
    differentiate,
    invert_map,
    mul,
    smat_apply,
    smat_identity,
    smat_inv,
    smat_mul,
    wirtinger,
)


class VectorField:
    """A vector field with PowerSeries coefficients in the complex frame basis."""

    __slots__ = ("r", "n", "comps")

    def __init__(self, r, n, comps):
        comps = list(comps)
        if len(comps) != r + 2 * n:
            raise ShapeError(f"need r+2n = {r + 2 * n} components, got {len(comps)}")
        d = r + 2 * n
        for c in comps:
            if c.dim != d:
                raise ShapeError("component dimension must equal r+2n")
        self.r = r
        self.n = n
        self.comps = comps

    def __repr__(self):
        return f"VectorField(r={self.r}, n={self.n}, dmax={self.dmax})"

    @property
    def dim(self):
        return self.r + 2 * self.n

    @property
    def dmax(self):
        return self.comps[0].dmax

    def t_comp(self, k):
        return self.comps[k]

    def z_comp(self, j):
        return self.comps[self.r + j]

    def zbar_comp(self, j):
        return self.comps[self.r + self.n + j]

    @staticmethod
    def model(r, n, dmax, i):
        """The i-th model field: d/dt_i for i < r, d/dzbar_{i-r} for i >= r."""
        d = r + 2 * n
        comps = [PowerSeries.zero(d, dmax) for _ in range(r + 2 * n)]
        if i < r:
            comps[i] = PowerSeries.constant(d, dmax, 1.0)
        else:
            comps[r + n + (i - r)] = PowerSeries.constant(d, dmax, 1.0)
        return VectorField(r, n, comps)

    def with_cap(self, dmax):
        return VectorField(self.r, self.n, [c.with_cap(dmax) for c in self.comps])

    def scale(self, c):
        return VectorField(self.r, self.n, [comp.scale(c) for comp in self.comps])

    def __add__(self, other):
        return VectorField(self.r, self.n, [a + b for a, b in zip(self.comps, other.comps)])

    def __sub__(self, other):
        return VectorField(self.r, self.n, [a - b for a, b in zip(self.comps, other.comps)])

    def apply_to(self, f, keep_cap=True):
        """Apply the field as a derivation to a scalar series."""
        r, n = self.r, self.n
        out = PowerSeries.zero(f.dim, f.dmax)
        for k in range(r):
            out = out + mul(self.comps[k].with_cap(f.dmax),
                            differentiate(f, k, keep_cap=keep_cap).with_cap(f.dmax))
        for j in range(n):
            out = out + mul(self.comps[r + j].with_cap(f.dmax),
                            wirtinger(f, j, "d_z", r, n, keep_cap=keep_cap).with_cap(f.dmax))
            out = out + mul(self.comps[r + n + j].with_cap(f.dmax),
                            wirtinger(f, j, "d_zbar", r, n, keep_cap=keep_cap).with_cap(f.dmax))
        return out

    def coordinate_comps(self):
        """Coefficients over the real coordinate basis (d/dt, d/dx), length r+2n."""
        r, n = self.r, self.n
        out = [self.comps[k] for k in range(r)]
        for j in range(n):
            b = self.comps[r + j]
            c = self.comps[r + n + j]
            out.append((b + c).scale(0.5))
        for j in range(n):
            b = self.comps[r + j]
            c = self.comps[r + n + j]
            out.append((c - b).scale(0.5j))
        return out

    @staticmethod
    def from_coordinate_comps(r, n, comps):
        """Inverse of :meth:`coordinate_comps`."""
        out = [comps[k] for k in range(r)]
        for j in range(n):
            ax = comps[r + j]
            ay = comps[r + n + j]
            out.append(ax + ay.scale(1j))
        for j in range(n):
            ax = comps[r + j]
            ay = comps[r + n + j]
            out.append(ax - ay.scale(1j))
        return VectorField(r, n, out)

    def value_at(self, point):
        """Coordinate-basis value of the field at a point (complex vector)."""
        return np.array([c.evaluate(point) for c in self.coordinate_comps()])

    def conjugate_field(self):
        """The conjugate field (real slice): swap dz/dzbar roles, conjugate coefficients."""
        r, n = self.r, self.n
        comps = [self.comps[k].conjugate() for k in range(r)]
        comps += [self.comps[r + n + j].conjugate() for j in range(n)]
        comps += [self.comps[r + j].conjugate() for j in range(n)]
        return VectorField(r, n, comps)


def commutator(V, W, keep_cap=False):
    """Series commutator [V, W] = V(W-coeffs) - W(V-coeffs)."""
    if (V.r, V.n) != (W.r, W.n):
        raise ShapeError("commutator requires matching (r, n)")
    comps = [
        V.apply_to(w, keep_cap=True) - W.apply_to(v, keep_cap=True)
        for v, w in zip(V.comps, W.comps)
    ]
    if not keep_cap:
        cap = max(V.dmax - 1, 0)
        comps = [c.with_cap(cap) for c in comps]
    return VectorField(V.r, V.n, comps)


def pullback(phi, Z, sv_threshold=1e-10):
    """Pullback of a vector field through a series map phi.

    (phi^* Z)(xi) = d phi(xi)^{-1} Z(phi(xi)), computed at series level.
    Requires phi(0)=0 and an invertible Jacobian at 0.
    """
    if phi.d_in != phi.d_out or phi.d_out != Z.dim:
        raise ShapeError("pullback needs a square map matching the field dimension")
    if np.max(np.abs(phi.value_at_zero())) > 1e-12:
        raise PreconditionError("pullback requires phi(0) = 0")
    cap = min(phi.dmax, Z.dmax)
    phi_c = phi.with_cap(cap)
    coord = [compose(c.with_cap(cap), phi_c) for c in Z.coordinate_comps()]
    J = phi_c.jacobian(keep_cap=True)
    Jinv = smat_inv(J, sv_threshold=sv_threshold)
    new_coord = smat_apply(Jinv, coord)
    return VectorField.from_coordinate_comps(Z.r, Z.n, new_coord)


def pushforward(phi, Z, sv_threshold=1e-10):
    """Pushforward phi_* Z = (phi^{-1})^* Z."""
    return pullback(invert_map(phi, sv_threshold=sv_threshold), Z, sv_threshold)


# ----------------------------------------------------------------------
# probe points
# ----------------------------------------------------------------------

def ball_probes(d, radius, count=64, seed=0):
    """Scrambled low-discrepancy points in the ball of the given radius."""
    sampler = qmc.Sobol(d=d, scramble=True, seed=seed)
    pts = []
    while len(pts) < count:
        block = sampler.random(128)
        cand = radius * (2.0 * block - 1.0)
        inside = cand[np.linalg.norm(cand, axis=1) < radius]
        pts.extend(inside.tolist())
    return np.array(pts[:count])


# ----------------------------------------------------------------------
# structure checking
# ----------------------------------------------------------------------

_RANK_CUTOFF = 1e-8


def _rank(mat, cutoff=_RANK_CUTOFF):
    if mat.size == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > cutoff * s[0]))


def _orthonormal_basis(rows, cutoff=_RANK_CUTOFF):
    """Orthonormal columns spanning the row span of ``rows``."""
    if rows.size == 0:
        return np.zeros((rows.shape[1] if rows.ndim == 2 else 0, 0))
    u, s, vh = np.linalg.svd(rows, full_matrices=False)
    k = int(np.sum(s > cutoff * s[0])) if s.size and s[0] > 0 else 0
    return vh[:k].conj().T


def _intersection_basis(Qa, Qb, tol=1e-6):
    """Orthonormal basis of span(Qa) ∩ span(Qb) via principal angles."""
    if Qa.shape[1] == 0 or Qb.shape[1] == 0:
        return np.zeros((Qa.shape[0], 0), dtype=complex)
    M = Qa.conj().T @ Qb
    u, s, vh = np.linalg.svd(M)
    k = int(np.sum(s > 1 - tol))
    return Qa @ u[:, :k]


@dataclass
class StructureReport:
    """Per-probe span/intersection dimensions and integrability residuals."""

    r: int
    n: int
    probes: np.ndarray
    span_dims: list = field(default_factory=list)
    sum_dims: list = field(default_factory=list)
    intersection_dims: list = field(default_factory=list)
    commutator_residuals: list = field(default_factory=list)
    dim_formula_ok: bool = True
    checks: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(self.checks.values())


def check_structure(fields, probes, tol=1e-6):
    """Check the elliptic-structure hypotheses on a probe set.

    At each probe: the fields must span an (r+n)-dimensional space whose
    sum with its conjugate is everything; dimensions must be constant;
    commutators must lie in the pointwise span (residual below ``tol``);
    and dim(L+Lbar) + dim(L∩Lbar) = 2 dim(L) must hold.
    """
    if len(probes) == 0:
        raise PreconditionError("need at least one probe point")
    r, n = fields[0].r, fields[0].n
    d = r + 2 * n
    rep = StructureReport(r=r, n=n, probes=np.asarray(probes))
    brackets = []
    for i in range(len(fields)):
        for j in range(i + 1, len(fields)):
            brackets.append(commutator(fields[i], fields[j], keep_cap=True))
    for p in rep.probes:
        V = np.array([f.value_at(p) for f in fields])
        Vb = V.conj()
        Qa = _orthonormal_basis(V)
        Qb = _orthonormal_basis(Vb)
        dim_l = Qa.shape[1]
        dim_sum = _rank(np.vstack([V, Vb]))
        dim_int = _intersection_basis(Qa, Qb).shape[1]
        rep.span_dims.append(dim_l)
        rep.sum_dims.append(dim_sum)
        rep.intersection_dims.append(dim_int)
        if dim_sum + dim_int != 2 * dim_l:
            rep.dim_formula_ok = False
        # commutator membership: component outside span{fields(p)}
        res = 0.0
        P = Qa @ Qa.conj().T
        for br in brackets:
            c = br.value_at(p)
            res = max(res, float(np.linalg.norm(c - P @ c)))
        rep.commutator_residuals.append(res)
    rep.checks = {
        "field_count": len(fields) == r + n,
        "span_dim": all(sd == r + n for sd in rep.span_dims),
        "sum_spans_everything": all(sd == d for sd in rep.sum_dims),
        "intersection_dim": all(di == r for di in rep.intersection_dims),
        "dims_constant": len(set(rep.span_dims)) <= 1
        and len(set(rep.sum_dims)) <= 1
        and len(set(rep.intersection_dims)) <= 1,
        "integrable": max(rep.commutator_residuals) < tol,
        "dim_formula": rep.dim_formula_ok,
    }
    return rep


def real_basis(vectors, cutoff=_RANK_CUTOFF):
    """Real vectors spanning a conjugation-closed complex span.

    Input: rows spanning a subspace X with conj(X) = X (verified by a
    rank test).  Output: rank-many real vectors chosen from
    {Re v_i, Im v_i} by pivoted greedy elimination (largest residual
    first, lowest index on ties).
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=complex))
    rk = _rank(V)
    if _rank(np.vstack([V, V.conj()])) != rk:
        raise PreconditionError("span is not closed under conjugation")
    cands = []
    for v in V:
        cands.append(np.real(v))
        cands.append(np.imag(v))
    cands = np.array(cands)
    chosen = []
    basis = np.zeros((0, V.shape[1]))
    scale = max(np.linalg.norm(cands, axis=1).max(), 1e-30)
    while len(chosen) < rk:
        resid = cands.copy()
        if basis.shape[0]:
            q = _orthonormal_basis(basis)
            resid = resid - (resid @ q.conj()) @ q.T
        norms = np.linalg.norm(resid, axis=1)
        idx = int(np.argmax(norms))
        if norms[idx] <= cutoff * scale:
            raise SingularityError("could not extract a real basis (rank deficiency)")
        chosen.append(cands[idx])
        basis = np.vstack([basis, cands[idx]])
    return [np.array(c) for c in chosen]


# ----------------------------------------------------------------------
# point normalization
# ----------------------------------------------------------------------

def affine_pullback(A, shift, Z, dmax=None):
    """Pullback of a field through the affine map xi -> shift + A xi."""
    A = np.asarray(A, dtype=complex)
    d = Z.dim
    cap = Z.dmax if dmax is None else dmax
    aff = SeriesMap(
        [
            PowerSeries(
                d,
                cap,
                {**{(0,) * d: shift[i]}, **{
                    tuple(1 if k == j else 0 for k in range(d)): A[i, j]
                    for j in range(d)
                }},
            )
            for i in range(d)
        ]
    )
    coord = [compose(c.with_cap(cap), aff, allow_recenter=True) for c in Z.coordinate_comps()]
    Ainv = np.linalg.inv(A)
    new_coord = []
    for i in range(d):
        acc = PowerSeries.zero(d, cap)
        for j in range(d):
            acc = acc + coord[j].scale(Ainv[i, j])
        new_coord.append(acc)
    return VectorField.from_coordinate_comps(Z.r, Z.n, new_coord), aff


def point_normalize(fields, zeta0, tol=1e-6):
    """Affine chart + constant recombination making fields the model frame at 0.

    Returns ``(chart, recomb, new_fields)`` where chart is the affine
    SeriesMap Psi0(xi) = zeta0 + A xi, ``recomb`` is the constant
    (n+r)x(n+r) matrix mixing the input fields, and the new fields
    satisfy X_k(0) = d/dt_k and L_j(0) = d/dzbar_j exactly (up to
    floating point).
    """
    r, n = fields[0].r, fields[0].n
    d = r + 2 * n
    if len(fields) != r + n:
        raise PreconditionError(f"exactly n+r = {r + n} fields required, got {len(fields)}")
    zeta0 = np.asarray(zeta0, dtype=float)
    V = np.array([f.value_at(zeta0) for f in fields])
    Qa = _orthonormal_basis(V)
    if Qa.shape[1] != r + n:
        raise SingularityError("fields do not span an (n+r)-dimensional space at the point")
    Qb = _orthonormal_basis(V.conj())
    inter = _intersection_basis(Qa, Qb)
    if inter.shape[1] != r:
        raise SingularityError(
            f"intersection with the conjugate span has dimension {inter.shape[1]}, expected {r}"
        )
    ys = real_basis(inter.T) if r > 0 else []
    # extend {y} to a basis of the span by greedy pivoting over the field values
    sel = list(ys)
    ls = []
    for _ in range(n):
        basis = np.array(sel + ls) if (sel or ls) else np.zeros((0, d))
        best, best_norm = None, -1.0
        for v in V:
            resid = v.copy()
            if basis.shape[0]:
                q = _orthonormal_basis(basis)
                resid = resid - q @ (q.conj().T @ resid)
            nr = float(np.linalg.norm(resid))
            if nr > best_norm + 1e-15:
                best, best_norm = v, nr
        if best_norm <= _RANK_CUTOFF:
            raise SingularityError("could not extend real basis to the full span")
        # normalize to the model field's norm (|d/dzbar| = 1/sqrt(2)) so a
        # pure rescaling of an input lands in the recombination matrix,
        # leaving the chart as close to the identity as possible
        ls.append(best / (np.sqrt(2.0) * np.linalg.norm(best)))
    targets = np.array(list(ys) + ls)
    # recombination: targets = recomb @ V (row-wise), exact since targets in rowspan
    recomb, *_ = np.linalg.lstsq(V.T, targets.T, rcond=None)
    recomb = recomb.T
    # chart matrix: rows y_k, 2 Re l_j, 2 Im l_j; A = C^T
    C = np.zeros((d, d))
    for k in range(r):
        C[k] = np.real(ys[k])
    for j in range(n):
        C[r + j] = 2.0 * np.real(ls[j])
        C[r + n + j] = 2.0 * np.imag(ls[j])
    svals = np.linalg.svd(C, compute_uv=False)
    if svals[-1] <= 1e-10 * svals[0]:
        raise SingularityError(
            "assembled chart matrix is singular", singular_value=float(svals[-1])
        )
    A = C.T
    mixed = []
    for i in range(r + n):
        comps = [PowerSeries.zero(d, fields[0].dmax) for _ in range(d)]
        acc = VectorField(r, n, comps)
        for j, f in enumerate(fields):
            acc = acc + f.scale(recomb[i, j])
        mixed.append(acc)
    out_fields = []
    chart = None
    for f in mixed:
        nf, chart = affine_pullback(A, zeta0, f)
        out_fields.append(nf)
    return chart, recomb, out_fields


# ----------------------------------------------------------------------
# frames and the reduction to (E, F) blocks
# ----------------------------------------------------------------------

class Frame:
    """Block representation X = dt + A dt + B dz + E dzbar, L = dzbar + C dt + D dz + F dzbar."""

    __slots__ = ("r", "n", "A", "B", "C", "D", "E", "F")

    def __init__(self, r, n, A, B, C, D, E, F):
        self.r, self.n = r, n
        self.A, self.B, self.C, self.D, self.E, self.F = A, B, C, D, E, F

    @staticmethod
    def _zeros(rows, cols, d, dmax):
        return [[PowerSeries.zero(d, dmax) for _ in range(cols)] for _ in range(rows)]

    @staticmethod
    def from_fields(fields, r, n):
        """Extract blocks from n+r fields ordered X_1..X_r, L_1..L_n."""
        d = r + 2 * n
        dmax = fields[0].dmax
        A = [[None] * r for _ in range(r)]
        B = [[None] * n for _ in range(r)]
        E = [[None] * n for _ in range(r)]
        C = [[None] * r for _ in range(n)]
        D = [[None] * n for _ in range(n)]
        F = [[None] * n for _ in range(n)]
        for k in range(r):
            X = fields[k]
            for kk in range(r):
                A[k][kk] = X.t_comp(kk) - (1.0 if kk == k else 0.0)
            for j in range(n):
                B[k][j] = X.z_comp(j)
                E[k][j] = X.zbar_comp(j)
        for j in range(n):
            L = fields[r + j]
            for kk in range(r):
                C[j][kk] = L.t_comp(kk)
            for jj in range(n):
                D[j][jj] = L.z_comp(jj)
                F[j][jj] = L.zbar_comp(jj) - (1.0 if jj == j else 0.0)
        return Frame(r, n, A, B, C, D, E, F)

    def fields(self):
        """Reassemble the n+r vector fields X_1..X_r, L_1..L_n."""
        r, n = self.r, self.n
        d = r + 2 * n
        dmax = (self.A[0][0] if r else self.D[0][0]).dmax
        out = []
        for k in range(r):
            comps = []
            for kk in range(r):
                comps.append(self.A[k][kk] + (1.0 if kk == k else 0.0))
            comps += [self.B[k][j] for j in range(n)]
            comps += [self.E[k][j] for j in range(n)]
            out.append(VectorField(r, n, comps))
        for j in range(n):
            comps = [self.C[j][kk] for kk in range(r)]
            comps += [self.D[j][jj] for jj in range(n)]
            comps += [self.F[j][jj] + (1.0 if jj == j else 0.0) for jj in range(n)]
            out.append(VectorField(r, n, comps))
        return out

    def perturbation_matrix(self):
        """The (r+n)x(r+n) series matrix M = [[A, E], [C, F]]."""
        r, n = self.r, self.n
        M = []
        for k in range(r):
            M.append(list(self.A[k]) + list(self.E[k]))
        for j in range(n):
            M.append(list(self.C[j]) + list(self.F[j]))
        return M


def frame_dmax(frame):
    """Degree cap shared by the frame's blocks."""
    for name in ("A", "B", "C", "D", "E", "F"):
        for row in getattr(frame, name):
            for e in row:
                return e.dmax
    raise ShapeError("frame has no blocks")


def reduce_to_EF(frame, probe_seed=0, det_floor=0.5, min_radius=2.0**-12,
                 radius_search=True):
    """Invertible recombination eliminating all blocks except B and D.

    With M = [[A, E], [C, F]], the stack (I+M)^{-1} [X; L] equals
    [dt; dzbar] + (I+M)^{-1} [B; D] dz, i.e. a frame with only (E, F)
    perturbations (named Ehat, Fhat below).  Returns
    ``(reduced_frame, multiplier, eta0)`` where multiplier is the series
    matrix (I+M)^{-1} and eta0 is the largest dyadic radius <= 1 at which
    probe-sampled |det(I+M)| stays >= ``det_floor``.
    """
    r, n = frame.r, frame.n
    m = r + n
    M = frame.perturbation_matrix()
    d = r + 2 * n
    dmax = M[0][0].dmax if m else 0
    val0 = np.array([[M[i][j].at_zero() for j in range(m)] for i in range(m)])
    if np.max(np.abs(val0)) > 1e-10:
        raise PreconditionError("reduction requires perturbation blocks vanishing at 0")
    IM = [[M[i][j] + (1.0 if i == j else 0.0) for j in range(m)] for i in range(m)]
    # radius search: largest dyadic radius <= 1 with |det(I+M)| >= det_floor on probes
    eta0 = 1.0
    if radius_search:
        found = False
        while eta0 >= min_radius:
            pts = ball_probes(d, eta0, count=32, seed=probe_seed)
            dets = []
            for p in pts:
                mat = np.array(
                    [[IM[i][j].evaluate(p) for j in range(m)] for i in range(m)]
                )
                dets.append(abs(np.linalg.det(mat)))
            if min(dets, default=1.0) >= det_floor:
                found = True
                break
            eta0 /= 2.0
        if not found:
            raise DomainShrinkError(
                "no admissible radius found for the reduction", feasible_radius=None
            )
    multiplier = smat_inv(IM)
    BD = [[frame.B[k][j] for j in range(n)] for k in range(r)] + [
        [frame.D[jj][j] for j in range(n)] for jj in range(n)
    ]
    hatBD = smat_mul(multiplier, BD) if n else [[] for _ in range(m)]
    Ehat = [[hatBD[k][j] for j in range(n)] for k in range(r)]
    Fhat = [[hatBD[r + jj][j] for j in range(n)] for jj in range(n)]
    # in the reduced frame the dz coefficients sit in the B/D slots
    # (X = dt + Ehat dz, L = dzbar + Fhat dz)
    reduced = Frame(
        r, n,
        Frame._zeros(r, r, d, dmax), Ehat,
        Frame._zeros(n, r, d, dmax), Fhat,
        Frame._zeros(r, n, d, dmax), Frame._zeros(n, n, d, dmax),
    )
    return reduced, multiplier, eta0


def scale_frame(frame, gamma, eta0=1.0):
    """Anisotropic rescaling of a reduced frame: E_gamma(p) = E(gamma p).

    Valid for 0 < gamma <= min(eta0/2, 1); the dz-coefficient blocks are
    substituted, all other blocks must already vanish.
    """
    from .funcspaces import substitute_scale

    if not 0 < gamma <= min(eta0 / 2.0, 1.0):
        raise PreconditionError(
            f"gamma={gamma} outside (0, min(eta0/2, 1)] = (0, {min(eta0 / 2.0, 1.0)}]"
        )
    r, n = frame.r, frame.n
    for name in ("A", "C", "E", "F"):
        for row in getattr(frame, name):
            for e in row:
                if not e.is_zero(1e-13):
                    raise PreconditionError("scale_frame expects a reduced (E,F-only) frame")
    for block in (frame.B, frame.D):
        for row in block:
            for e in row:
                if abs(e.at_zero()) > 1e-12:
                    raise PreconditionError("scale_frame requires blocks vanishing at 0")
    B = [[substitute_scale(e, gamma) for e in row] for row in frame.B]
    D = [[substitute_scale(e, gamma) for e in row] for row in frame.D]
    d = r + 2 * n
    dmax = frame_dmax(frame)
    return Frame(
        frame.r,
        frame.n,
        Frame._zeros(r, r, d, dmax),
        B,
        Frame._zeros(n, r, d, dmax),
        D,
        Frame._zeros(r, n, d, dmax),
        Frame._zeros(n, n, d, dmax),
    )


# ----------------------------------------------------------------------
# serialization
# ----------------------------------------------------------------------

def frame_to_dict(frame):
    from .series import series_to_dict

    return {
        "r": frame.r,
        "n": frame.n,
        "blocks": {
            name: [[series_to_dict(e) for e in row] for row in getattr(frame, name)]
            for name in ("A", "B", "C", "D", "E", "F")
        },
    }


def frame_from_dict(obj):
    from .series import series_from_dict

    blocks = {
        name: [[series_from_dict(e) for e in row] for row in obj["blocks"][name]]
        for name in ("A", "B", "C", "D", "E", "F")
    }
    return Frame(obj["r"], obj["n"], **blocks)
