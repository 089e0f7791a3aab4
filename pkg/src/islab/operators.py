"""Concrete operator families with analytic spectral metadata.

States are plain 1-D complex numpy arrays of coefficients in the model's
basis; the norm is always the Euclidean one (every model is a truncation of
a Hilbert space operator).

Wave operators use *energy coordinates*: for the Dirichlet sine basis
phi_n(x) = sqrt(2) sin(n pi x) on [0, 1], a state (u, v) is stored mode by
mode as (p_n, q_n) = (n pi <u, phi_n>, <v, phi_n>), interleaved as
``[p_1, q_1, p_2, q_2, ...]``. Then ||w||^2 = ||grad u||^2 + ||v||^2 = 2 E0(w)
and the undamped wave block is skew-symmetric.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidArgument, UnsupportedModel
from .linalg import expm_eig, expm_pade

DENSE = "dense"
DIAGONAL = "diagonal"
WEIGHTED_SHIFT = "weighted_shift"
SCALED_IDENTITY = "scaled_identity"
WAVE_BLOCKS = "wave_blocks"
KINDS = (DENSE, DIAGONAL, WEIGHTED_SHIFT, SCALED_IDENTITY, WAVE_BLOCKS)

# declared tail contraction of a scaled-identity block, as a fraction of |mu|
TAIL_CONTRACTION = 0.5


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class OperatorModel:
    """A bounded linear operator on C^dim with optional analytic metadata.

    ``data`` is kind specific:

    * dense: ``matrix`` (dim x dim)
    * diagonal: ``entries``
    * weighted_shift: ``weights`` (e_k -> w_k e_{k+1}; the last weight falls
      off the truncation)
    * scaled_identity: ``mu``, ``multiplicity``, ``tail`` (diagonal entries
      acting on the remaining basis vectors)
    * wave_blocks: ``blocks`` of shape (n_modes, 2, 2) in energy coordinates
    """

    kind: str
    dim: int
    data: dict
    tail_meta: dict | None = None
    spectral_meta: str | None = None
    group: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown operator kind {self.kind!r}")
        if self.dim < 1:
            raise InvalidArgument("dim must be positive")

    # -- action -----------------------------------------------------------
    def apply(self, x):
        x = np.asarray(x, dtype=complex)
        if x.shape[-1] != self.dim:
            raise InvalidArgument(f"state has length {x.shape[-1]}, model dim is {self.dim}")
        k = self.kind
        if k == DENSE:
            return x @ self.data["matrix"].T
        if k == DIAGONAL:
            return self.data["entries"] * x
        if k == SCALED_IDENTITY:
            return self.diagonal() * x
        if k == WEIGHTED_SHIFT:
            out = np.zeros_like(x)
            out[..., 1:] = self.data["weights"][:-1] * x[..., :-1]
            return out
        # wave blocks
        n = self.dim // 2
        xb = x.reshape(x.shape[:-1] + (n, 2))
        yb = np.einsum("nij,...nj->...ni", self.data["blocks"], xb)
        return yb.reshape(x.shape)

    __call__ = apply

    def diagonal(self):
        """Diagonal entries for the diagonal-like kinds."""
        if self.kind == DIAGONAL:
            return self.data["entries"]
        if self.kind == SCALED_IDENTITY:
            m = self.data["multiplicity"]
            return np.concatenate([np.full(m, self.data["mu"], dtype=complex), self.data["tail"]])
        raise UnsupportedModel(f"{self.kind} model has no diagonal representation")

    def matrix(self):
        """Dense matrix of the model."""
        k = self.kind
        if k == DENSE:
            return np.array(self.data["matrix"])
        if k in (DIAGONAL, SCALED_IDENTITY):
            return np.diag(self.diagonal())
        if k == WEIGHTED_SHIFT:
            return np.diag(self.data["weights"][:-1], -1).astype(complex)
        n = self.dim // 2
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for j in range(n):
            out[2 * j:2 * j + 2, 2 * j:2 * j + 2] = self.data["blocks"][j]
        return out

    def kernel_basis(self, mu=None):
        """Orthonormal basis (columns) of Ker(A - mu) for a scaled-identity
        block: the first ``multiplicity`` standard basis vectors."""
        if self.kind != SCALED_IDENTITY:
            raise UnsupportedModel("kernel supply is only declared for scaled_identity models")
        if mu is not None and mu != self.data["mu"]:
            raise InvalidArgument("mu does not match the model's scaled block")
        m = self.data["multiplicity"]
        return np.eye(self.dim, m, dtype=complex)

    # -- derived models ----------------------------------------------------
    def scaled(self, c):
        """The model c*A (metadata is dropped unless it stays meaningful)."""
        c = complex(c)
        k = self.kind
        if k == DENSE:
            return OperatorModel(DENSE, self.dim, {"matrix": _frozen(c * self.data["matrix"])},
                                 None, None, self.group)
        if k == DIAGONAL:
            return make_diagonal(c * self.data["entries"])
        if k == WEIGHTED_SHIFT:
            return make_weighted_shift(c * self.data["weights"])
        if k == SCALED_IDENTITY:
            d = self.data
            meta = dict(self.tail_meta or {})
            if "r_e" in meta:
                meta["r_e"] = abs(c) * meta["r_e"]
            return OperatorModel(SCALED_IDENTITY, self.dim,
                                 {"mu": c * d["mu"], "multiplicity": d["multiplicity"],
                                  "tail": _frozen(c * d["tail"])}, meta, self.spectral_meta)
        meta = None
        if c.imag == 0 and c.real != 0 and (self.tail_meta or {}).get("s_e") == float("-inf"):
            # an empty essential spectrum stays empty under real scaling
            meta = {"s_e": float("-inf")}
        return OperatorModel(WAVE_BLOCKS, self.dim, {"blocks": _frozen(c * self.data["blocks"])},
                             meta, "wave-blocks", self.group)

    def leading(self, n):
        """Leading truncation to the first ``n`` basis vectors (for wave
        blocks ``n`` counts coordinates and is rounded down to whole modes)."""
        if n < 1 or n > self.dim:
            raise InvalidArgument("truncation size out of range")
        if n == self.dim:
            return self
        k = self.kind
        if k == DIAGONAL:
            return OperatorModel(DIAGONAL, n, {"entries": _frozen(self.data["entries"][:n])},
                                 self.tail_meta, self.spectral_meta, self.group)
        if k == WEIGHTED_SHIFT:
            return OperatorModel(WEIGHTED_SHIFT, n, {"weights": _frozen(self.data["weights"][:n])},
                                 self.tail_meta, self.spectral_meta, self.group)
        if k == SCALED_IDENTITY:
            d = self.data
            m = min(d["multiplicity"], n)
            return OperatorModel(SCALED_IDENTITY, n,
                                 {"mu": d["mu"], "multiplicity": m,
                                  "tail": _frozen(d["tail"][:n - m])},
                                 self.tail_meta, self.spectral_meta, self.group)
        if k == WAVE_BLOCKS:
            nm = max(1, n // 2)
            return OperatorModel(WAVE_BLOCKS, 2 * nm, {"blocks": _frozen(self.data["blocks"][:nm])},
                                 self.tail_meta, self.spectral_meta, self.group)
        if self.spectral_meta == "wave-dense":
            n = max(2, 2 * (n // 2))
        return OperatorModel(DENSE, n, {"matrix": _frozen(self.data["matrix"][:n, :n])},
                             self.tail_meta, self.spectral_meta, self.group)

    # -- serialization -----------------------------------------------------
    def to_dict(self):
        return {
            "kind": self.kind,
            "dim": self.dim,
            "data": {key: _encode(val) for key, val in self.data.items()},
            "tail_meta": self.tail_meta,
            "spectral_meta": self.spectral_meta,
            "group": self.group,
        }

    @classmethod
    def from_dict(cls, d):
        data = {}
        for key, val in d["data"].items():
            if key == "multiplicity":
                data[key] = int(val)
            elif key == "mu":
                data[key] = complex(val[0], val[1])
            else:
                data[key] = _frozen(_decode_array(val))
        return cls(d["kind"], int(d["dim"]), data, d.get("tail_meta"), d.get("spectral_meta"),
                   bool(d.get("group", False)))

    def dumps(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text):
        return cls.from_dict(json.loads(text))

    def same_as(self, other):
        """Exact structural equality (used for round-trip checks)."""
        if (self.kind, self.dim, self.tail_meta, self.spectral_meta, self.group) != \
                (other.kind, other.dim, other.tail_meta, other.spectral_meta, other.group):
            return False
        if self.data.keys() != other.data.keys():
            return False
        for key in self.data:
            a, b = self.data[key], other.data[key]
            if isinstance(a, np.ndarray):
                if a.shape != b.shape or not np.array_equal(a, b):
                    return False
            elif a != b:
                return False
        return True


def _encode(val):
    if isinstance(val, (int, np.integer)) and not isinstance(val, bool):
        return int(val)
    if isinstance(val, (complex, float, np.complexfloating, np.floating)):
        val = complex(val)
        return [val.real, val.imag]
    arr = np.asarray(val, dtype=complex)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def _decode_array(val):
    arr = np.asarray(val, dtype=float)
    out = np.empty(arr.shape[:-1], dtype=complex)
    out.real, out.imag = arr[..., 0], arr[..., 1]   # keeps signed zeros
    return out


# -- constructors -----------------------------------------------------------

def make_dense(matrix, tail_meta=None, spectral_meta=None, group=False):
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise InvalidArgument("dense data must be a non-empty square matrix")
    return OperatorModel(DENSE, m.shape[0], {"matrix": _frozen(m)}, tail_meta, spectral_meta, group)


def make_diagonal(entries, tail_meta=None):
    """Diagonal operator diag(entries). ``tail_meta`` may declare e.g.
    ``{"limit": L}`` for the untruncated entries."""
    e = np.asarray(entries, dtype=complex).ravel()
    if e.size == 0:
        raise InvalidArgument("diagonal entries must be non-empty")
    return OperatorModel(DIAGONAL, e.size, {"entries": _frozen(e)}, tail_meta, "diagonal")


def make_weighted_shift(weights, tail_meta=None):
    w = np.asarray(weights, dtype=complex).ravel()
    if w.size == 0:
        raise InvalidArgument("shift weights must be non-empty")
    return OperatorModel(WEIGHTED_SHIFT, w.size, {"weights": _frozen(w)}, tail_meta, "weighted-shift")


def make_scaled_identity_block(mu, multiplicity, ambient_dim, tail=None):
    """mu*I on the first ``multiplicity`` basis vectors and a contraction on
    the rest (default entries TAIL_CONTRACTION*|mu|, strictly below |mu|).

    The block stands in for an infinite-dimensional kernel of A - mu, so it
    is declared essential and r_e = |mu|.
    """
    if not 1 <= multiplicity <= ambient_dim:
        raise InvalidArgument("need 1 <= multiplicity <= ambient_dim")
    mu = complex(mu)
    rest = ambient_dim - multiplicity
    if tail is None:
        tail = np.full(rest, TAIL_CONTRACTION * abs(mu), dtype=complex)
    tail = np.asarray(tail, dtype=complex).ravel()
    if tail.size != rest:
        raise InvalidArgument("tail must have ambient_dim - multiplicity entries")
    if rest and abs(mu) > 0 and np.max(np.abs(tail)) >= abs(mu):
        raise InvalidArgument("tail entries must have modulus < |mu|")
    meta = {"essential": "kernel_block", "r_e": abs(mu)}
    return OperatorModel(SCALED_IDENTITY, ambient_dim,
                         {"mu": mu, "multiplicity": int(multiplicity), "tail": _frozen(tail)},
                         meta, "scaled-identity")


# -- wave operators ---------------------------------------------------------

@dataclass(frozen=True)
class StepDamping:
    """Piecewise-constant damping: ``values[i]`` on [breaks[i], breaks[i+1])."""

    breaks: tuple
    values: tuple

    def __post_init__(self):
        if len(self.breaks) != len(self.values) + 1:
            raise InvalidArgument("step damping needs len(breaks) == len(values) + 1")
        if self.breaks[0] != 0.0 or self.breaks[-1] != 1.0 or \
                any(b1 <= b0 for b0, b1 in zip(self.breaks, self.breaks[1:])):
            raise InvalidArgument("step breaks must increase from 0 to 1")

    @classmethod
    def equal_pieces(cls, values):
        values = tuple(float(v) for v in values)
        k = len(values)
        return cls(tuple(i / k for i in range(k + 1)), values)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.breaks, x, side="right") - 1, 0, len(self.values) - 1)
        return np.asarray(self.values)[idx]

    def integral(self):
        return float(sum(v * (b1 - b0) for v, b0, b1 in zip(self.values, self.breaks, self.breaks[1:])))


def mode_frequencies(n_modes):
    return np.pi * np.arange(1, n_modes + 1)


def _cos_integral(k, lo, hi):
    # int_lo^hi cos(k pi x) dx, elementwise in integer k
    k = np.asarray(k)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (np.sin(k * np.pi * hi) - np.sin(k * np.pi * lo)) / (k * np.pi)
    return np.where(k == 0, hi - lo, r)


def damping_matrix(damping, n_modes, quad_points=512):
    """Matrix B_nm = int_0^1 b(x) 2 sin(n pi x) sin(m pi x) dx of the
    multiplication operator by b in the orthonormal sine basis.

    Step dampings are integrated exactly piece by piece; other callables use
    a composite trapezoid rule with max(quad_points, 8*n_modes) panels.
    """
    n = np.arange(1, n_modes + 1)
    diff = n[:, None] - n[None, :]
    tot = n[:, None] + n[None, :]
    if isinstance(damping, StepDamping):
        out = np.zeros((n_modes, n_modes))
        for v, lo, hi in zip(damping.values, damping.breaks, damping.breaks[1:]):
            if v:
                out += v * (_cos_integral(diff, lo, hi) - _cos_integral(tot, lo, hi))
        return out
    if callable(damping):
        panels = max(quad_points, 8 * n_modes)
        x = np.linspace(0.0, 1.0, panels + 1)
        wts = np.full(panels + 1, 1.0 / panels)
        wts[0] = wts[-1] = 0.5 / panels
        s = np.sqrt(2.0) * np.sin(np.pi * np.outer(n, x))
        bx = np.asarray(damping(x), dtype=float) * np.ones_like(x)
        return (s * (wts * bx)) @ s.T
    raise InvalidArgument("damping must be a constant, per-mode samples, StepDamping or a callable")


def physical_block(n, b, sign=-1):
    """Mode-n block [[0, 1], [-n^2 pi^2, sign*b]] in (u_n, u_n') coordinates."""
    return np.array([[0.0, 1.0], [-(n * np.pi) ** 2, sign * b]])


def make_wave_blocks(damping_b, n_modes, sign=-1, boundary="dirichlet"):
    """Galerkin wave operator A = (0 I; Delta sign*b) on [0, 1].

    ``sign=-1`` gives the damped operator A_-, ``sign=+1`` the excited A_+.
    A constant damping or per-mode samples give a block-diagonal model; a
    StepDamping or callable couples the modes and gives a dense model in the
    same interleaved energy coordinates.
    """
    if boundary != "dirichlet":
        raise InvalidArgument("only Dirichlet boundary conditions on [0, 1] are supported")
    if n_modes < 1:
        raise InvalidArgument("n_modes must be >= 1")
    if sign not in (-1, 1):
        raise InvalidArgument("sign must be +1 (excited) or -1 (damped)")
    w = mode_frequencies(n_modes)
    if isinstance(damping_b, (int, float, np.floating, np.integer)) or \
            (isinstance(damping_b, np.ndarray) and damping_b.ndim == 0):
        bvec = np.full(n_modes, float(damping_b))
        meta = {"sign": sign, "b_const": float(damping_b), "beta": float(damping_b)}
    elif isinstance(damping_b, (StepDamping,)) or callable(damping_b):
        bmat = damping_matrix(damping_b, n_modes)
        m = np.zeros((2 * n_modes, 2 * n_modes))
        m[0::2, 1::2] = np.diag(w)
        m[1::2, 0::2] = -np.diag(w)
        m[1::2, 1::2] = sign * bmat
        beta = damping_b.integral() if isinstance(damping_b, StepDamping) else float(np.trapezoid(
            damping_b(np.linspace(0, 1, 2049)), dx=1 / 2048))
        return make_dense(m, tail_meta={"sign": sign, "beta": beta, "s_e": float("-inf")},
                          spectral_meta="wave-dense", group=True)
    else:
        bvec = np.asarray(damping_b, dtype=float).ravel()
        if bvec.size != n_modes:
            raise InvalidArgument(f"damping samples have length {bvec.size}, expected {n_modes}")
        meta = {"sign": sign}
    blocks = np.zeros((n_modes, 2, 2))
    blocks[:, 0, 1] = w
    blocks[:, 1, 0] = -w
    blocks[:, 1, 1] = sign * bvec
    meta["s_e"] = float("-inf")
    return OperatorModel(WAVE_BLOCKS, 2 * n_modes, {"blocks": _frozen(blocks)}, meta,
                         "wave-blocks", group=True)


def conjugation_J(dim):
    """J(u, v) = (u, -v) in interleaved coordinates, as a diagonal of +-1."""
    j = np.ones(dim)
    j[1::2] = -1.0
    return j


# -- left shift ---------------------------------------------------------------

def make_left_shift(n_cells, h):
    """Upwind truncation of the generator d/ds of the left-shift semigroup
    (T(t)f)(s) = f(s+t) on L^2(0, n_cells*h), zero inflow at the right end.

    Coordinates are cell values scaled by sqrt(h) so the Euclidean norm is
    the L^2 norm. The exact translation T(k h) is the k-th power of the
    nilpotent shift (see :func:`translate_cells`).
    """
    if n_cells < 2 or h <= 0:
        raise InvalidArgument("need n_cells >= 2 and h > 0")
    m = (np.eye(n_cells, k=1) - np.eye(n_cells)) / h
    meta = {"s_e": 0.0, "s_0": 0.0, "h": float(h), "length": float(n_cells * h)}
    return make_dense(m, tail_meta=meta, spectral_meta="left-shift")


def translate_cells(x, k):
    """Exact left translation by ``k`` cells: (T(k h) x)_i = x_{i+k}."""
    x = np.asarray(x, dtype=complex)
    out = np.zeros_like(x)
    if k < x.shape[-1]:
        out[..., :x.shape[-1] - k] = x[..., k:]
    return out


# -- semigroups -------------------------------------------------------------

EIG = "eig"
PADE = "pade"


@dataclass(frozen=True, eq=False)
class SemigroupModel:
    """The semigroup exp(tA) generated by a bounded model.

    ``alpha`` is fixed to 1: every model here is a Hilbert truncation.
    """

    generator: OperatorModel
    alpha: float = 1.0
    method: str = EIG
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.method not in (EIG, PADE):
            raise InvalidArgument(f"unknown propagator method {self.method!r}")

    def propagator(self, t):
        """Matrix (or stacked 2x2 blocks for wave models) of exp(tA)."""
        key = float(t)
        if key in self._cache:
            return self._cache[key]
        a = self.generator
        expm = expm_eig if self.method == EIG else expm_pade
        if a.kind in (DIAGONAL, SCALED_IDENTITY):
            p = np.exp(t * a.diagonal())
        elif a.kind == WAVE_BLOCKS:
            p = expm(t * a.data["blocks"])
        else:
            p = expm(t * a.matrix())
        if len(self._cache) < 64:
            self._cache[key] = p
        return p


def propagate(sg: SemigroupModel, t, x):
    """exp(tA) x. Negative times are allowed only for group generators."""
    if t < 0 and not sg.generator.group:
        raise DomainError("negative time requested for a model that only generates a semigroup")
    x = np.asarray(x, dtype=complex)
    if t == 0:
        return x.copy()
    a = sg.generator
    p = sg.propagator(t)
    if a.kind in (DIAGONAL, SCALED_IDENTITY):
        return p * x
    if a.kind == WAVE_BLOCKS:
        n = a.dim // 2
        xb = x.reshape(x.shape[:-1] + (n, 2))
        return np.einsum("nij,...nj->...ni", p, xb).reshape(x.shape)
    return x @ p.T
