"""Sub-Riemannian structure (M, V0, g): frames, metric, brackets, projections.

Index conventions used throughout the package:

* frame index a runs over all n frame fields, horizontal ones first
  (i, j, k, h < ell horizontal; vertical offsets b = a - ell);
* ``E[m, a]`` is the m-th coordinate component of frame field a, so the
  columns of E are the frame fields evaluated at the point;
* derivative axes come last: for any tensor T, ``T_g[..., r]`` holds the
  coordinate derivative d T / d x_r;
* ``Omega[i, j, k]``: horizontal part of [e_i, e_j] in the frame,
  ``Mcoef[i, j, b]``: vertical part, ``Lambda[b, k, h]``: horizontal part
  of [e_{ell+b}, e_k].

The projection onto V0 splits along the user-supplied frame (coefficients
in the frame after inverting E), not metric-orthogonally; the engine never
builds an ambient metric.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, MetricNotSPD, SingularFrame, ValidationError
from .jets import (Expression, ScalarField, VectorField, coordinate_indices,
                   directional_derivative, jet_eval)

DEFAULT_BOX = (-1.0, 1.0)
SINGULAR_DET_FACTOR = 1e-12
CONDITION_WARN = 1e8
CONDITION_FAIL = 1e12


@dataclass(frozen=True)
class VectorFieldSpec:
    """Coordinate components X^k of a vector field, as expressions."""

    components: tuple[Expression, ...]

    @property
    def n(self) -> int:
        return len(self.components)

    def as_field(self) -> VectorField:
        return VectorField.from_expressions(self.components, self.n)


@dataclass(frozen=True)
class ManifoldSpec:
    """Immutable description of (M, V0, g) on a single global chart.

    ``hframe`` spans the horizontal bundle V0 (rank ell), ``vframe`` a
    transverse complement, ``metric`` is the ell x ell horizontal Gram in
    the hframe, ``oneform`` optional horizontal coframe components of pi.
    """

    name: str
    coords: tuple[str, ...]
    ell: int
    hframe: tuple[VectorFieldSpec, ...]
    vframe: tuple[VectorFieldSpec, ...]
    metric: tuple[tuple[Expression, ...], ...]
    oneform: tuple[Expression, ...] | None = None
    box: tuple[tuple[float, float], ...] | None = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def n(self) -> int:
        return len(self.coords)

    def __post_init__(self):
        n, ell = self.n, self.ell
        if not 2 <= ell < n:
            raise ValidationError(f"need 2 <= hdim < dim, got hdim={ell}, dim={n}")
        if len(set(self.coords)) != n:
            raise ValidationError("coordinate names must be distinct")
        for c in self.coords:
            if not c.isidentifier():
                raise ValidationError(f"coordinate name {c!r} is not an identifier")
            if c[0] == "d" and c[1:] in self.coords:
                raise ValidationError(
                    f"coordinate {c!r} is ambiguous with the frame token d{c[1:]}")
        if len(self.hframe) != ell:
            raise ValidationError(f"expected {ell} horizontal fields, got {len(self.hframe)}")
        if len(self.vframe) != n - ell:
            raise ValidationError(f"expected {n - ell} vertical fields, got {len(self.vframe)}")
        for vf in self.hframe + self.vframe:
            if vf.n != n:
                raise ValidationError("vector field component count must equal dim")
        if len(self.metric) != ell or any(len(row) != ell for row in self.metric):
            raise ValidationError("metric must be an hdim x hdim array")
        for i in range(ell):
            for j in range(i):
                if self.metric[i][j] != self.metric[j][i]:
                    raise ValidationError(f"metric entry ({i},{j}) is not symmetric")
        if self.oneform is not None and len(self.oneform) != ell:
            raise ValidationError("oneform needs hdim components")
        if self.box is not None:
            if len(self.box) != n:
                raise ValidationError("sampling box needs one (lo, hi) pair per coordinate")
            for lo, hi in self.box:
                if not lo < hi:
                    raise ValidationError("sampling box bounds must satisfy lo < hi")
        for expr in self._all_expressions():
            bad = {k for k in coordinate_indices(expr) if k >= n}
            if bad:
                raise ValidationError(f"expression uses coordinate index {max(bad)} >= dim {n}")

    def _all_expressions(self):
        for vf in self.hframe + self.vframe:
            yield from vf.components
        for row in self.metric:
            yield from row
        if self.oneform is not None:
            yield from self.oneform

    def frame_fields(self) -> tuple[VectorField, ...]:
        return tuple(vf.as_field() for vf in self.hframe + self.vframe)

    def sample_box(self) -> np.ndarray:
        if self.box is None:
            return np.array([DEFAULT_BOX] * self.n)
        return np.asarray(self.box, dtype=float)


def sample_points(spec: ManifoldSpec, count: int, seed: int) -> np.ndarray:
    """Seeded uniform samples; a longer run extends a shorter one point-for-point."""
    rng = np.random.default_rng(seed)
    u = rng.uniform(size=(count, spec.n))
    box = spec.sample_box()
    return box[:, 0] + u * (box[:, 1] - box[:, 0])


class _BracketComponent(ScalarField):
    def __init__(self, Xf, Yf, k):
        self.n = Xf.n
        self._xy = directional_derivative(Yf.components[k], Xf)
        self._yx = directional_derivative(Xf.components[k], Yf)
        self.max_order = min(self._xy.max_order, self._yx.max_order)

    def jet(self, point, order):
        return self._xy.jet(point, order) - self._yx.jet(point, order)


def lie_bracket(X, Y) -> VectorField:
    """[X, Y]^k = X(Y^k) - Y(X^k), assembled from directional derivatives.

    Accepts VectorFieldSpec or any evaluable VectorField, so brackets nest
    (each nesting consumes one jet order).
    """
    Xf = X.as_field() if isinstance(X, VectorFieldSpec) else X
    Yf = Y.as_field() if isinstance(Y, VectorFieldSpec) else Y
    if Xf.n != Yf.n:
        raise DimensionMismatch("bracket operands live on different R^n")
    return VectorField(tuple(_BracketComponent(Xf, Yf, k) for k in range(Xf.n)))


# --------------------------------------------------------------------------
# Pointwise frame data
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FrameSnapshot:
    """Pointwise frame data: frame matrix, Gram, structure constants."""

    point: np.ndarray
    E: np.ndarray            # (n, n) columns e_1..e_ell, e_{ell+1}..e_n
    Einv: np.ndarray
    g: np.ndarray            # (ell, ell)
    ginv: np.ndarray
    Omega: np.ndarray        # (ell, ell, ell), antisymmetric in (i, j)
    Mcoef: np.ndarray        # (ell, ell, n-ell), antisymmetric in (i, j)
    Lambda: np.ndarray       # (n-ell, ell, ell)


@dataclass(frozen=True)
class FramePointData:
    """FrameSnapshot plus first derivatives of everything the connections need."""

    point: np.ndarray
    Ev: np.ndarray
    Eg: np.ndarray
    Eh: np.ndarray
    Einv: np.ndarray
    cond: float
    gv: np.ndarray
    gg: np.ndarray
    gh: np.ndarray
    ginv: np.ndarray
    ginv_g: np.ndarray
    Om: np.ndarray
    Om_g: np.ndarray
    Mc: np.ndarray
    Mc_g: np.ndarray
    Lam: np.ndarray
    fdg: np.ndarray          # fdg[k, i, j] = e_k(g_ij), k horizontal
    fdg_g: np.ndarray
    warnings: tuple[str, ...]

    def snapshot(self) -> FrameSnapshot:
        return FrameSnapshot(self.point, self.Ev, self.Einv, self.gv, self.ginv,
                             self.Om, self.Mc, self.Lam)


def _mirror_pair_antisym(arr, arr_g, ell):
    """Overwrite (j, i) slices with the exact negation of (i, j), zero the diagonal."""
    for i in range(ell):
        arr[..., i, i] = 0.0
        if arr_g is not None:
            arr_g[..., i, i, :] = 0.0
        for j in range(i + 1, ell):
            arr[..., j, i] = -arr[..., i, j]
            if arr_g is not None:
                arr_g[..., j, i, :] = -arr_g[..., i, j, :]


def _frame_data(spec: ManifoldSpec, point) -> FramePointData:
    p = np.asarray(point, dtype=float)
    if p.shape != (spec.n,):
        raise DimensionMismatch(f"point must have {spec.n} coordinates")
    key = p.tobytes()
    cached = spec._cache.get(key)
    if cached is not None:
        return cached

    n, ell = spec.n, spec.ell
    nv = n - ell
    warnings: list[str] = []

    frame = spec.hframe + spec.vframe
    Ev = np.empty((n, n))
    Eg = np.empty((n, n, n))
    Eh = np.empty((n, n, n, n))
    for a, vf in enumerate(frame):
        for m, expr in enumerate(vf.components):
            j = jet_eval(expr, p, 2)
            Ev[m, a] = j.value
            Eg[m, a] = j.grad
            Eh[m, a] = j.hess

    col_scale = np.prod(np.maximum(np.linalg.norm(Ev, axis=0), 1e-300))
    det = np.linalg.det(Ev)
    if abs(det) <= SINGULAR_DET_FACTOR * col_scale:
        raise SingularFrame(f"frame determinant {det:.3e} below threshold at {p.tolist()}")
    cond = float(np.linalg.cond(Ev))
    if cond > CONDITION_FAIL:
        raise SingularFrame(f"frame condition number {cond:.3e} at {p.tolist()}")
    if cond > CONDITION_WARN:
        warnings.append(f"frame condition number {cond:.3e} at {p.tolist()}")
    Einv = np.linalg.inv(Ev)

    gv = np.empty((ell, ell))
    gg = np.empty((ell, ell, n))
    gh = np.empty((ell, ell, n, n))
    for i in range(ell):
        for j in range(i, ell):
            jt = jet_eval(spec.metric[i][j], p, 2)
            gv[i, j] = gv[j, i] = jt.value
            gg[i, j] = gg[j, i] = jt.grad
            gh[i, j] = gh[j, i] = jt.hess
    try:
        np.linalg.cholesky(gv)
    except np.linalg.LinAlgError:
        raise MetricNotSPD(f"Gram matrix not positive definite at {p.tolist()}") from None
    ginv = np.linalg.inv(gv)
    ginv_g = -np.einsum("ia,abr,bj->ijr", ginv, gg, ginv)

    # horizontal-horizontal brackets and their derivatives
    br = np.einsum("qa,mbq->mab", Ev[:, :ell], Eg[:, :ell, :]) \
        - np.einsum("qb,maq->mab", Ev[:, :ell], Eg[:, :ell, :])
    br_g = (np.einsum("qar,mbq->mabr", Eg[:, :ell, :], Eg[:, :ell, :])
            + np.einsum("qa,mbqr->mabr", Ev[:, :ell], Eh[:, :ell, :, :])
            - np.einsum("qbr,maq->mabr", Eg[:, :ell, :], Eg[:, :ell, :])
            - np.einsum("qb,maqr->mabr", Ev[:, :ell], Eh[:, :ell, :, :]))
    c = np.einsum("mq,qab->mab", Einv, br)
    c_g = np.einsum("mq,qabr->mabr", Einv,
                    br_g - np.einsum("mqr,qab->mabr", Eg, c))
    Om = np.ascontiguousarray(c[:ell].transpose(1, 2, 0))
    Om_g = np.ascontiguousarray(c_g[:ell].transpose(1, 2, 0, 3))
    Mc = np.ascontiguousarray(c[ell:].transpose(1, 2, 0))
    Mc_g = np.ascontiguousarray(c_g[ell:].transpose(1, 2, 0, 3))
    _mirror_pair_antisym(Om.transpose(2, 0, 1), Om_g.transpose(2, 0, 1, 3), ell)
    _mirror_pair_antisym(Mc.transpose(2, 0, 1), Mc_g.transpose(2, 0, 1, 3), ell)

    # vertical-horizontal brackets: Lambda only needs values
    if nv:
        brv = np.einsum("qb,mkq->mbk", Ev[:, ell:], Eg[:, :ell, :]) \
            - np.einsum("qk,mbq->mbk", Ev[:, :ell], Eg[:, ell:, :])
        cv = np.einsum("mq,qbk->mbk", Einv, brv)
        Lam = np.ascontiguousarray(cv[:ell].transpose(1, 2, 0))
    else:
        Lam = np.zeros((0, ell, ell))

    fdg = np.einsum("mk,ijm->kij", Ev[:, :ell], gg)
    fdg_g = np.einsum("mkr,ijm->kijr", Eg[:, :ell, :], gg) \
        + np.einsum("mk,ijmr->kijr", Ev[:, :ell], gh)

    data = FramePointData(p, Ev, Eg, Eh, Einv, cond, gv, gg, gh, ginv, ginv_g,
                          Om, Om_g, Mc, Mc_g, Lam, fdg, fdg_g, tuple(warnings))
    if len(spec._cache) > 8192:
        spec._cache.clear()
    spec._cache[key] = data
    return data


def snapshot(spec: ManifoldSpec, point) -> FrameSnapshot:
    """Frame matrix, Gram and structure constants at one point.

    Omega/Mcoef come from solving E c = [e_i, e_j](point) (first ell entries
    horizontal), Lambda from the solves for [e_alpha, e_k].
    """
    return _frame_data(spec, point).snapshot()


def project_h(spec: ManifoldSpec, point, v) -> np.ndarray:
    """Horizontal coefficients of v in the frame splitting (along V1)."""
    data = _frame_data(spec, point)
    vv = np.asarray(v, dtype=float)
    if vv.shape != (spec.n,):
        raise DimensionMismatch(f"vector must have {spec.n} components")
    return (data.Einv @ vv)[: spec.ell]
