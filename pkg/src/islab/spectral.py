"""Eigenvalues, resolvent norms, vertical-line scans and spectral bounds."""
from __future__ import annotations

import math
import os
import weakref
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import svdvals

from .errors import InvalidArgument, NumericFailure, SingularResolvent, UnsupportedModel
from .linalg import sv2x2
from .operators import (DENSE, DIAGONAL, SCALED_IDENTITY, WAVE_BLOCKS, WEIGHTED_SHIFT,
                        OperatorModel)

SINGULAR_TOL = 1e-12
LINE_TOL = 1e-8
DEFAULT_CUTOFF = 8
RESIDUAL_TOL = 1e-8


def max_dim():
    return int(os.environ.get("ISLAB_MAX_DIM", "4096"))


def _sort_key(z):
    return np.lexsort((np.round(z.imag, 12), np.round(z.real, 12)))


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    residuals: np.ndarray
    method: str
    partial: bool = False

    def within_line(self, a, tol=LINE_TOL):
        return int(np.count_nonzero(np.abs(self.eigenvalues.real - a) <= tol))


def _block_roots(blocks):
    tr = blocks[:, 0, 0] + blocks[:, 1, 1]
    det = blocks[:, 0, 0] * blocks[:, 1, 1] - blocks[:, 0, 1] * blocks[:, 1, 0]
    disc = tr * tr / 4 - det
    root = np.sqrt(disc.astype(complex))
    # for real blocks with complex roots keep Re exactly tr/2
    return tr / 2 + root, tr / 2 - root


_EIG_CACHE = weakref.WeakKeyDictionary()


def eigen(a: OperatorModel) -> SpectrumReport:
    """All ``dim`` eigenvalues of the model with backward-error residuals."""
    hit = _EIG_CACHE.get(a)
    if hit is not None:
        return hit
    rep = _eigen(a)
    _EIG_CACHE[a] = rep
    return rep


def _eigen(a: OperatorModel) -> SpectrumReport:
    if a.dim > max_dim():
        raise InvalidArgument(f"dim {a.dim} exceeds the configured maximum {max_dim()}")
    nrm = max(operator_norm(a), 1e-300)
    if a.kind in (DIAGONAL, SCALED_IDENTITY):
        lam = np.array(a.diagonal(), dtype=complex)
        res = np.zeros(a.dim)
        method = "closed-form-diagonal"
    elif a.kind == WEIGHTED_SHIFT:
        # a truncated weighted shift is nilpotent; e_dim spans its kernel
        lam = np.zeros(a.dim, dtype=complex)
        e = np.zeros(a.dim, dtype=complex)
        e[-1] = 1
        res = np.full(a.dim, np.linalg.norm(a.apply(e)) / nrm)
        method = "closed-form-nilpotent"
    elif a.kind == WAVE_BLOCKS:
        blocks = a.data["blocks"]
        l1, l2 = _block_roots(blocks)
        lam = np.concatenate([l1, l2])
        res = np.concatenate([_block_residuals(blocks, l1), _block_residuals(blocks, l2)]) / nrm
        method = "closed-form-quadratic"
    else:
        m = a.matrix()
        try:
            lam, vec = np.linalg.eig(m)
        except np.linalg.LinAlgError as exc:
            raise NumericFailure(f"eigensolver did not converge: {exc}", partial=None) from exc
        vec = vec / np.linalg.norm(vec, axis=0)
        res = np.linalg.norm(m @ vec - vec * lam, axis=0) / nrm
        method = "hessenberg-qr"
    order = _sort_key(lam)
    lam, res = lam[order], res[order]
    bad = res > RESIDUAL_TOL
    if np.any(bad):
        raise NumericFailure(f"{int(bad.sum())} eigenvalues fail the residual certificate",
                             partial=SpectrumReport(lam, res, method, partial=True))
    return SpectrumReport(lam, res, method)


def _block_residuals(blocks, lam):
    # eigenvector of [[p, q], [r, s]] for lam: (q, lam - p) or (lam - s, r)
    p, q, r, s = blocks[:, 0, 0], blocks[:, 0, 1], blocks[:, 1, 0], blocks[:, 1, 1]
    v1 = np.stack([q, lam - p], axis=-1).astype(complex)
    v2 = np.stack([lam - s, r], axis=-1).astype(complex)
    pick = np.linalg.norm(v1, axis=-1) >= np.linalg.norm(v2, axis=-1)
    v = np.where(pick[:, None], v1, v2)
    nv = np.linalg.norm(v, axis=-1)
    nv[nv == 0] = 1.0
    v = v / nv[:, None]
    av = np.einsum("nij,nj->ni", blocks, v)
    return np.linalg.norm(av - lam[:, None] * v, axis=-1)


def operator_norm(a: OperatorModel) -> float:
    if a.kind in (DIAGONAL, SCALED_IDENTITY):
        return float(np.max(np.abs(a.diagonal())))
    if a.kind == WEIGHTED_SHIFT:
        w = np.abs(a.data["weights"][:-1])
        return float(w.max()) if w.size else 0.0
    if a.kind == WAVE_BLOCKS:
        return float(np.max(sv2x2(a.data["blocks"])[0]))
    return float(np.linalg.norm(a.matrix(), 2))


# -- resolvent norms -----------------------------------------------------------

def _sigma_min(a: OperatorModel, lams):
    """Smallest singular value of lam*I - A for each lam (vectorized for
    structured kinds)."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    if a.kind in (DIAGONAL, SCALED_IDENTITY):
        d = a.diagonal()
        return np.min(np.abs(lams[:, None] - d[None, :]), axis=1)
    if a.kind == WAVE_BLOCKS:
        blocks = a.data["blocks"]
        out = np.empty(lams.size)
        eye = np.eye(2)
        for i0 in range(0, lams.size, 256):
            chunk = lams[i0:i0 + 256]
            m = chunk[:, None, None, None] * eye - blocks[None]
            out[i0:i0 + 256] = sv2x2(m)[1].min(axis=1)
        return out
    m = a.matrix()
    eye = np.eye(a.dim)
    return np.array([svdvals(lam * eye - m, check_finite=False)[-1] for lam in lams])


def resolvent_norm(a: OperatorModel, lam) -> float:
    """||(lam - A)^{-1}|| as the reciprocal smallest singular value."""
    s = float(_sigma_min(a, lam)[0])
    if s <= SINGULAR_TOL:
        raise SingularResolvent(f"lambda = {complex(lam)} is within {SINGULAR_TOL} of the spectrum")
    return 1.0 / s


def resolvent_norm_dense(a: OperatorModel, lam) -> float:
    """Independent route: spectral norm of the explicitly inverted matrix."""
    m = complex(lam) * np.eye(a.dim) - a.matrix()
    return float(np.linalg.norm(np.linalg.inv(m), 2))


@dataclass
class ResolventScan:
    a: float
    grid: np.ndarray
    norms: np.ndarray
    sup_estimate: float
    unbounded_flag: bool
    skipped: list = field(default_factory=list)
    edge_flag: bool = False
    doubling_ratio: float | None = None
    crosscheck_rel: float = 0.0

    def rows(self):
        return [(self.a, b, r) for b, r in zip(self.grid, self.norms)]


EDGE_RISE = 1.05
DOUBLING_GROWTH = 1.25


def _edge_rising(grid, norms, skipped, b_max):
    """Norms still rising at the grid edge: the outer decile beats the
    adjacent band [0.8, 0.9)*b_max, or eigenvalue collisions sit there."""
    ab = np.abs(grid)
    outer = ab >= 0.9 * b_max
    inner = (ab >= 0.8 * b_max) & ~outer
    if any(abs(b) >= 0.9 * b_max for b in skipped):
        return True
    if not outer.any() or not inner.any():
        return False
    return bool(norms[outer].max() > EDGE_RISE * norms[inner].max())


def _scan_points(a, b_max, n_grid, extra_b=()):
    g = np.linspace(-b_max, b_max, n_grid)
    extra = np.asarray([b for b in extra_b if abs(b) <= b_max], dtype=float)
    return np.unique(np.concatenate([g, extra]))


def _eig_imag(a: OperatorModel):
    if a.kind in (DIAGONAL, SCALED_IDENTITY):
        return a.diagonal().imag
    if a.kind == WAVE_BLOCKS:
        l1, l2 = _block_roots(a.data["blocks"])
        return np.concatenate([l1, l2]).imag
    if a.kind == WEIGHTED_SHIFT:
        return np.zeros(1)
    return eigen(a).eigenvalues.imag


def _scan_core(a, re, b_max, n_grid):
    grid = _scan_points(re, b_max, n_grid, _eig_imag(a))
    s = _sigma_min(a, re + 1j * grid)
    keep = s > SINGULAR_TOL
    skipped = [float(b) for b in grid[~keep]]
    grid, s = grid[keep], s[keep]
    norms = 1.0 / s
    return grid, norms, skipped


def scan_vertical(a: OperatorModel, re: float, b_max: float, n_grid: int = 2001,
                  doubling: bool = True, seed: int = 0) -> ResolventScan:
    """Resolvent norms along re + i[-b_max, b_max].

    The grid is uniform plus the imaginary parts of the eigenvalues (so
    peaks are sampled); points within 1e-12 of the spectrum are skipped and
    recorded. ``unbounded_flag`` combines the edge test with a
    dimension-doubling sweep against the leading half truncation.
    """
    if b_max <= 0 or n_grid < 11:
        raise InvalidArgument("need b_max > 0 and n_grid >= 11")
    grid, norms, skipped = _scan_core(a, re, b_max, n_grid)
    sup = float(norms.max()) if norms.size else math.inf
    edge = _edge_rising(grid, norms, skipped, b_max)
    ratio = None
    if doubling and a.dim >= 4:
        half = a.leading(a.dim // 2)
        hg, hn, hs = _scan_core(half, re, b_max, n_grid)
        hsup = float(hn.max()) if hn.size else math.inf
        if math.isfinite(hsup) and hsup > 0 and math.isfinite(sup):
            ratio = sup / hsup
    grows = ratio is not None and ratio >= DOUBLING_GROWTH
    flag = bool(edge or grows or skipped and not norms.size)
    # independent cross-check on 3 grid points
    rel = 0.0
    if norms.size and a.dim <= 1024:
        rng = np.random.default_rng(seed)
        for j in rng.choice(norms.size, size=min(3, norms.size), replace=False):
            ref = resolvent_norm_dense(a, re + 1j * grid[j])
            rel = max(rel, abs(ref - norms[j]) / ref)
    return ResolventScan(float(re), grid, norms, sup, flag, skipped, edge, ratio, rel)


@dataclass
class SpectralBounds:
    r_e_estimate: float | None
    s_e_estimate: float
    s_R_estimate: float
    provenance: dict
    bracket: tuple = (None, None)
    cutoff: int = DEFAULT_CUTOFF
    per_a: list = field(default_factory=list)

    def to_dict(self):
        def num(x):
            if x is None:
                return None
            return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")
        return {
            "r_e_estimate": num(self.r_e_estimate),
            "s_e_estimate": num(self.s_e_estimate),
            "s_R_estimate": num(self.s_R_estimate),
            "provenance": self.provenance,
            "bracket": [num(self.bracket[0]), num(self.bracket[1])],
            "cutoff": self.cutoff,
            "per_a": self.per_a,
        }


def s_e_estimate(a: OperatorModel, report: SpectrumReport | None = None, cutoff=DEFAULT_CUTOFF):
    """s_e from metadata when declared, else the largest real part carrying
    more than ``cutoff`` eigenvalues within LINE_TOL (an essential cluster)."""
    meta = a.tail_meta or {}
    if "s_e" in meta:
        return float(meta["s_e"]), "analytic-metadata"
    if a.kind == SCALED_IDENTITY and meta.get("essential") == "kernel_block":
        return float(np.real(a.data["mu"])), "analytic-metadata"
    if a.kind == DIAGONAL and "limit" in meta:
        lim = meta["limit"]
        return float(lim[0] if isinstance(lim, (list, tuple)) else np.real(lim)), "analytic-metadata"
    report = report or eigen(a)
    re = np.sort(report.eigenvalues.real)[::-1]
    for x in re:
        if np.count_nonzero(np.abs(re - x) <= LINE_TOL) > cutoff:
            return float(x), "scan-numeric"
    return -math.inf, "scan-numeric"


def r_e_estimate(a: OperatorModel, n=40):
    meta = a.tail_meta or {}
    if "r_e" in meta:
        return float(meta["r_e"]), "analytic-metadata"
    try:
        v = mu_norm_estimate(a, n)
    except UnsupportedModel:
        return None, "unavailable"
    return float(v ** (1.0 / n)), "nussbaum-numeric"


def estimate_sR(a: OperatorModel, a_grid, b_max=None, n_grid=2001, cutoff=DEFAULT_CUTOFF,
                doubling=True, scans=None) -> SpectralBounds:
    """Scan-based estimate of s_R.

    A grid abscissa a > s_e passes when at most ``cutoff`` eigenvalues lie
    within LINE_TOL of a + iR and the scan's unbounded flag is down. The set
    of admissible abscissas is read as upward closed, so the estimate is the
    midpoint of the bracket (last failing a, or s_e; first a from which every
    larger grid value passes). Scans are appended to ``scans`` if given.
    """
    a_grid = [float(x) for x in a_grid]
    if not a_grid:
        raise InvalidArgument("a_grid must be non-empty")
    if any(y < x for x, y in zip(a_grid, a_grid[1:])):
        raise InvalidArgument("a_grid must be sorted ascending")
    rep = eigen(a)
    se, se_prov = s_e_estimate(a, rep, cutoff)
    if b_max is None:
        b_max = 1.1 * float(np.max(np.abs(rep.eigenvalues.imag))) + 1.0
    per_a = []
    passes = []
    for x in a_grid:
        if x <= se:
            per_a.append({"a": x, "considered": False})
            passes.append(None)
            continue
        count = rep.within_line(x)
        sc = scan_vertical(a, x, b_max, n_grid, doubling=doubling)
        if scans is not None:
            scans.append(sc)
        ok = count <= cutoff and not sc.unbounded_flag
        passes.append(ok)
        per_a.append({"a": x, "considered": True, "line_eigs": count,
                      "sup": sc.sup_estimate if math.isfinite(sc.sup_estimate) else "inf",
                      "edge_flag": sc.edge_flag, "doubling_ratio": sc.doubling_ratio,
                      "unbounded_flag": sc.unbounded_flag, "pass": ok})
    considered = [(x, p) for x, p in zip(a_grid, passes) if p is not None]
    first = None
    lower = se
    for x, p in considered:
        if p:
            if first is None:
                first = x
        else:
            first = None
            lower = x
    if first is None:
        est, bracket = math.inf, (lower, None)
    else:
        lo = lower
        if not math.isfinite(lo):
            # no failing abscissa and no finite s_e: the grid does not
            # resolve a lower end; report the first considered point
            est, bracket = first, (lo, first)
        else:
            est, bracket = 0.5 * (lo + first), (lo, first)
    r_e, r_prov = r_e_estimate(a)
    prov = {"r_e_estimate": r_prov, "s_e_estimate": se_prov, "s_R_estimate": "scan-numeric"}
    return SpectralBounds(r_e, se, est, prov, bracket, cutoff, per_a)


def estimate_s0(a: OperatorModel, a_grid, b_max=None, n_grid=2001) -> float:
    """Half-plane version of the scan: the smallest grid abscissa from which
    every larger one has no eigenvalue to its right and a bounded scan."""
    rep = eigen(a)
    if b_max is None:
        b_max = 1.1 * float(np.max(np.abs(rep.eigenvalues.imag))) + 1.0
    smax = float(np.max(rep.eigenvalues.real))
    best = math.inf
    for x in sorted(a_grid, reverse=True):
        if x <= smax + LINE_TOL:
            break
        if scan_vertical(a, x, b_max, n_grid).unbounded_flag:
            break
        best = x
    return best


# -- measure of non-compactness ---------------------------------------------

def _tail_inf_sup(vals, limit_abs=None):
    """inf over k of sup_{j >= k} vals[j], with a declared tail limit."""
    suf = np.maximum.accumulate(vals[::-1])[::-1]
    if limit_abs is not None:
        suf = np.maximum(suf, limit_abs)
        return float(min(suf.min(), limit_abs))
    return float(suf.min())


def _meta_abs(meta, key):
    if key not in meta:
        return None
    v = meta[key]
    if isinstance(v, (list, tuple)):
        v = complex(v[0], v[1])
    return abs(v)


def mu_norm_estimate(a: OperatorModel, n: int) -> float:
    """Estimate of ||A^n||_mu from restrictions to tail subspaces
    span{e_k, e_{k+1}, ...}, combined with the declared tail metadata."""
    if n < 1:
        raise InvalidArgument("n must be >= 1")
    meta = a.tail_meta or {}
    if a.kind == SCALED_IDENTITY and meta.get("essential") == "kernel_block":
        # every finite-codimension subspace meets the (infinite) kernel block
        return abs(a.data["mu"]) ** n
    if a.kind in (DIAGONAL, SCALED_IDENTITY):
        return _tail_inf_sup(np.abs(a.diagonal()) ** n,
                             None if _meta_abs(meta, "limit") is None else _meta_abs(meta, "limit") ** n)
    if a.kind == WEIGHTED_SHIFT:
        w = np.abs(a.data["weights"])
        d = a.dim
        prods = np.zeros(d)
        for j in range(d):
            if j + n <= d - 1:  # A^n e_j = w_j...w_{j+n-1} e_{j+n}
                prods[j] = np.prod(w[j:j + n])
        winf = _meta_abs(meta, "w_inf")
        return _tail_inf_sup(prods, None if winf is None else winf ** n)
    if a.kind == DENSE and "essential_split" in meta:
        k = int(meta["essential_split"])
        p = np.linalg.matrix_power(a.matrix(), n)
        return float(np.linalg.norm(p[:, k:], 2))
    raise UnsupportedModel(f"no essential split declared for a {a.kind} model")


def nussbaum_re(a: OperatorModel, n: int) -> float:
    return mu_norm_estimate(a, n) ** (1.0 / n)


def det_newton_oracle(matrix, lam0, iters=50, tol=1e-13):
    """Polish an eigenvalue by Newton's method on det(lam - A):
    lam <- lam - 1/tr((lam - A)^{-1}). Independent of any eigensolver."""
    m = np.asarray(matrix, dtype=complex)
    eye = np.eye(m.shape[0])
    lam = complex(lam0)
    for _ in range(iters):
        try:
            tr = np.trace(np.linalg.solve(lam * eye - m, eye))
        except np.linalg.LinAlgError:
            return lam
        step = 1.0 / tr
        lam -= step
        if abs(step) <= tol * max(1.0, abs(lam)):
            break
    return lam
