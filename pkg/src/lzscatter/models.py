"""Catalog of linear-sweep Hamiltonian families ``H(t, eps) = A(eps) + t B``.

Each family fixes a Hermitian ``A`` (possibly depending on a flat-level
splitting parameter ``eps``), a real diagonal slope matrix ``B``, and,
where one exists, a commuting-flow partner ``E(t, eps) = E0(eps) + t E1``
used by the zero-curvature verifier and the path-deformation engine.

Families
--------
lz2       two levels, slopes +-a, coupling delta
spin      k levels built from the spin-(k-1)/2 ladder matrices,
          H = 2 (a t Z_k + delta X_k); k = 2 reproduces lz2
adjoint3  the 3-level member of the spin family in the basis that puts
          the two sweeping levels first (a permutation of spin k=3)
bowtie3   two flat levels at +-eps coupled through one sweeping level
bowtieN   k-2 sweeping levels, each coupled to both flat levels
su3six    6-level bow-tie companion with slopes (0, 0, 0, a, a, 2a)
su3adj8   8-level bow-tie companion with slopes (0, 0, 0, 0, -b, -b, b, b)
          and imaginary couplings

All parameters are plain reals in units with hbar = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

FAMILIES = ("lz2", "spin", "adjoint3", "bowtie3", "bowtieN", "su3six", "su3adj8")

_SQRT2 = math.sqrt(2.0)
_SQRT32 = math.sqrt(1.5)


class UnknownFamilyError(ValueError):
    """Family tag not in the catalog."""


class MissingPartnerError(ValueError):
    """The family defines no flow partner E."""


class SingularPartnerError(ValueError):
    """The partner has 1/eps entries and eps is at the pole."""


@dataclass(frozen=True)
class SpinRep:
    """Spin matrices (X, Y, Z) for dimension k, basis ordered by descending m."""

    k: int
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray


def ladder_amplitude(k: int, m: float) -> float:
    """Raising amplitude attached to the (m-1 -> m) transition."""
    j = 0.5 * (k - 1)
    return math.sqrt((j + m) * (j - m + 1.0))


def build_spin_rep(k: int) -> SpinRep:
    """Construct the k-dimensional spin matrices from ladder amplitudes.

    Basis index i holds m = (k-1)/2 - i, so Z = diag((k-1)/2, ..., -(k-1)/2).
    """
    if k < 2:
        raise ValueError(f"spin representation needs k >= 2, got {k}")
    j = 0.5 * (k - 1)
    ms = [j - i for i in range(k)]
    z = np.diag(ms).astype(complex)
    t_plus = np.zeros((k, k), dtype=complex)
    for i, m in enumerate(ms):
        if i + 1 < k:
            # column i+1 holds m-1; raising lands on row i
            t_plus[i, i + 1] = ladder_amplitude(k, m)
    t_minus = t_plus.conj().T
    x = 0.5 * (t_plus + t_minus)
    y = -0.5j * (t_plus - t_minus)
    return SpinRep(k=k, x=x, y=y, z=z)


@dataclass(frozen=True)
class AffineModel:
    """One catalog instance: H(t, eps) = A(eps) + t B, optional partner E.

    ``a_of``/``da_of`` evaluate A and its exact eps-derivative; ``e0_of``/
    ``de0_of`` do the same for the partner's constant part when a partner
    exists.  ``eps`` stores the nominal parameter value used when a call
    does not override it.
    """

    family: str
    k: int
    delta: object
    slope: object
    eps: Optional[float]
    b: np.ndarray
    a_of: Callable[[float], np.ndarray]
    da_of: Callable[[float], np.ndarray]
    e1: Optional[np.ndarray] = None
    e0_of: Optional[Callable[[float], np.ndarray]] = None
    de0_of: Optional[Callable[[float], np.ndarray]] = None
    spin_basis_permutation: Optional[tuple] = None
    extras: dict = field(default_factory=dict)

    @property
    def has_partner(self) -> bool:
        return self.e1 is not None

    def _eps_value(self, eps):
        if eps is not None:
            return float(eps)
        if self.eps is not None:
            return float(self.eps)
        return 0.0

    def hamiltonian(self, t: float, eps: Optional[float] = None) -> np.ndarray:
        return self.a_of(self._eps_value(eps)) + t * self.b

    def partner(self, t: float, eps: Optional[float] = None) -> np.ndarray:
        self._check_partner(eps)
        return self.e0_of(self._eps_value(eps)) + t * self.e1

    def partner_constant(self, eps: Optional[float] = None) -> np.ndarray:
        self._check_partner(eps)
        return self.e0_of(self._eps_value(eps))

    def _check_partner(self, eps):
        if not self.has_partner:
            raise MissingPartnerError(f"family {self.family!r} has no partner E")
        if self._eps_value(eps) == 0.0:
            raise SingularPartnerError(
                f"partner of {self.family!r} is singular at eps = 0 (1/eps entries)"
            )

    def descriptor(self) -> dict:
        d = {"family": self.family, "delta": _plain(self.delta), "slope": _plain(self.slope)}
        if self.family == "spin":
            d["k"] = self.k
        if self.eps is not None:
            d["eps"] = self.eps
        return d


def _plain(value):
    if isinstance(value, (tuple, list)):
        return [float(v) for v in value]
    return float(value)


def _hermitize(upper: np.ndarray) -> np.ndarray:
    # fill the lower triangle from the upper one; diagonal must be real
    return upper + upper.conj().T - np.diag(np.diag(upper).real).astype(complex)


def _require_positive(name, value):
    value = float(value)
    if not value > 0.0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def _scalar(name, value):
    if isinstance(value, (tuple, list, np.ndarray)):
        raise ValueError(f"{name} must be a scalar for this family")
    return float(value)


def _build_lz2(delta, slope):
    d = _scalar("delta", delta)
    a = _require_positive("slope", _scalar("slope", slope))
    a_mat = np.array([[0.0, d], [d, 0.0]], dtype=complex)
    zero = np.zeros((2, 2), dtype=complex)
    return AffineModel(
        family="lz2", k=2, delta=d, slope=a, eps=None,
        b=np.diag([a, -a]).astype(complex),
        a_of=lambda e, m=a_mat: m.copy(),
        da_of=lambda e, z=zero: z.copy(),
    )


def _build_spin(k, delta, slope, family="spin", permute=None):
    if k is None or int(k) < 2:
        raise ValueError(f"spin family needs k >= 2, got {k}")
    k = int(k)
    d = _scalar("delta", delta)
    a = _require_positive("slope", _scalar("slope", slope))
    rep = build_spin_rep(k)
    a_mat = 2.0 * d * rep.x
    b_mat = 2.0 * a * rep.z
    if permute is not None:
        p = list(permute)
        a_mat = a_mat[np.ix_(p, p)]
        b_mat = b_mat[np.ix_(p, p)]
    zero = np.zeros((k, k), dtype=complex)
    return AffineModel(
        family=family, k=k, delta=d, slope=a, eps=None,
        b=b_mat,
        a_of=lambda e, m=a_mat: m.copy(),
        da_of=lambda e, z=zero: z.copy(),
        spin_basis_permutation=tuple(permute) if permute is not None else None,
    )


def _build_bowtie3(delta, slope, eps):
    d = _scalar("delta", delta)
    a = _require_positive("slope", _scalar("slope", slope))
    e0 = _scalar("eps", eps)

    def a_of(e):
        return np.array(
            [[e, 0.0, d], [0.0, -e, d], [d, d, 0.0]], dtype=complex
        )

    def da_of(e):
        return np.diag([1.0, -1.0, 0.0]).astype(complex)

    def e0_of(e):
        c = d / a
        w = d * d / (a * e)
        return np.array(
            [[0.0, -w, -c], [-w, 0.0, c], [-c, c, e / a - w]], dtype=complex
        )

    def de0_of(e):
        w2 = d * d / (a * e * e)
        return np.array(
            [[0.0, w2, 0.0], [w2, 0.0, 0.0], [0.0, 0.0, 1.0 / a + w2]],
            dtype=complex,
        )

    return AffineModel(
        family="bowtie3", k=3, delta=d, slope=a, eps=e0,
        b=np.diag([0.0, 0.0, a]).astype(complex),
        a_of=a_of, da_of=da_of,
        e1=np.diag([1.0, -1.0, 0.0]).astype(complex),
        e0_of=e0_of, de0_of=de0_of,
    )


def _build_bowtieN(deltas, slopes, eps):
    deltas = tuple(float(v) for v in np.atleast_1d(deltas))
    slopes = tuple(float(v) for v in np.atleast_1d(slopes))
    if len(deltas) != len(slopes) or not deltas:
        raise ValueError("delta and slope lists must have equal nonzero length")
    if any(s == 0.0 for s in slopes):
        raise ValueError("bowtieN slopes must be nonzero")
    mags = [abs(s) for s in slopes]
    for lo, hi in zip(mags, mags[1:]):
        if not lo < hi:
            raise ValueError(
                f"bowtieN slope magnitudes must be strictly increasing, got {mags}"
            )
    e0val = _scalar("eps", eps)
    n = len(slopes)
    k = n + 2

    def a_of(e):
        m = np.zeros((k, k), dtype=complex)
        m[0, 0] = e
        m[1, 1] = -e
        for i, d in enumerate(deltas):
            m[0, 2 + i] = m[2 + i, 0] = d
            m[1, 2 + i] = m[2 + i, 1] = d
        return m

    def da_of(e):
        m = np.zeros((k, k), dtype=complex)
        m[0, 0] = 1.0
        m[1, 1] = -1.0
        return m

    hsum = sum(d * d / s for d, s in zip(deltas, slopes))

    def e0_of(e):
        h = -hsum / e
        m = np.zeros((k, k), dtype=complex)
        m[0, 1] = m[1, 0] = h
        for i, (d, s) in enumerate(zip(deltas, slopes)):
            m[0, 2 + i] = m[2 + i, 0] = -d / s
            m[1, 2 + i] = m[2 + i, 1] = d / s
            m[2 + i, 2 + i] = h + e / s
        return m

    def de0_of(e):
        dh = hsum / (e * e)
        m = np.zeros((k, k), dtype=complex)
        m[0, 1] = m[1, 0] = dh
        for i, s in enumerate(slopes):
            m[2 + i, 2 + i] = dh + 1.0 / s
        return m

    b = np.diag([0.0, 0.0] + list(slopes)).astype(complex)
    e1 = np.diag([1.0, -1.0] + [0.0] * n).astype(complex)
    return AffineModel(
        family="bowtieN", k=k, delta=deltas, slope=slopes, eps=e0val,
        b=b, a_of=a_of, da_of=da_of, e1=e1, e0_of=e0_of, de0_of=de0_of,
    )


def _build_su3six(delta, slope, eps, partner_b=None):
    d = _scalar("delta", delta)
    a = _require_positive("slope", _scalar("slope", slope))
    e0val = _scalar("eps", eps)
    # one partner coupling is conventionally written with an independent
    # symbol; zero curvature pins it to the sweep rate a.  Passing a
    # different partner_b builds a deliberately inconsistent partner so
    # the verifier's detection path can be exercised.
    bsym = a if partner_b is None else float(partner_b)
    s2d = _SQRT2 * d

    def a_of(e):
        m = np.zeros((6, 6), dtype=complex)
        m[0, 0] = 2 * e
        m[2, 2] = -2 * e
        m[3, 3] = e
        m[4, 4] = -e
        m[0, 3] = s2d
        m[1, 3] = d
        m[1, 4] = d
        m[2, 4] = s2d
        m[3, 5] = s2d
        m[4, 5] = s2d
        return _hermitize(m)

    def da_of(e):
        return np.diag([2.0, 0.0, -2.0, 1.0, -1.0, 0.0]).astype(complex)

    def e0_of(e):
        kk = -_SQRT2 * d * d / (a * e)
        # the slot coupling the two equal-slope sweeping levels must carry
        # the plain 1/eps weight (kk / sqrt(2)); anything else breaks the
        # commutation residual away from zero
        ww = -d * d / (a * e)
        ll = ww + e / a
        m = np.zeros((6, 6), dtype=complex)
        m[0, 1] = kk
        m[1, 2] = kk
        m[3, 4] = ww
        m[0, 3] = -s2d / a
        m[1, 3] = d / a
        m[1, 4] = -d / bsym
        m[2, 4] = s2d / a
        m[3, 5] = -s2d / a
        m[4, 5] = s2d / a
        m[3, 3] = ll
        m[4, 4] = ll
        m[5, 5] = 2 * ll
        return _hermitize(m)

    def de0_of(e):
        dk = _SQRT2 * d * d / (a * e * e)
        dw = d * d / (a * e * e)
        dl = dw + 1.0 / a
        m = np.zeros((6, 6), dtype=complex)
        m[0, 1] = dk
        m[1, 2] = dk
        m[3, 4] = dw
        m[3, 3] = dl
        m[4, 4] = dl
        m[5, 5] = 2 * dl
        return _hermitize(m)

    return AffineModel(
        family="su3six", k=6, delta=d, slope=a, eps=e0val,
        b=np.diag([0.0, 0.0, 0.0, a, a, 2 * a]).astype(complex),
        a_of=a_of, da_of=da_of,
        e1=np.diag([2.0, 0.0, -2.0, 1.0, -1.0, 0.0]).astype(complex),
        e0_of=e0_of, de0_of=de0_of,
        extras={"partner_b": bsym},
    )


def _build_su3adj8(delta, slope, eps):
    d = _scalar("delta", delta)
    b = _require_positive("slope", _scalar("slope", slope))
    e0val = _scalar("eps", eps)
    s2d = _SQRT2 * d
    s32d = _SQRT32 * d

    def a_of(e):
        m = np.zeros((8, 8), dtype=complex)
        m[2, 2] = -2 * e
        m[3, 3] = 2 * e
        m[4, 4] = -e
        m[5, 5] = e
        m[6, 6] = -e
        m[7, 7] = e
        m[0, 5] = -1j * s32d
        m[0, 6] = -1j * s32d
        m[1, 4] = 1j * s2d
        m[1, 5] = 1j * d / _SQRT2
        m[1, 6] = 1j * d / _SQRT2
        m[1, 7] = 1j * s2d
        m[2, 4] = d
        m[2, 6] = d
        m[3, 5] = -d
        m[3, 7] = -d
        return _hermitize(m)

    def da_of(e):
        return np.diag([0.0, 0.0, -2.0, 2.0, -1.0, 1.0, -1.0, 1.0]).astype(complex)

    # The two flat zero-weight levels admit a basis rotation that leaves H
    # unchanged only together with a matching rotation of E; the partner
    # below is the unique one (up to adding c(eps) * I) that satisfies the
    # zero-curvature identity in the same basis as a_of.
    def e0_of(e):
        g = (d * d - e * e) / (b * e)
        w = d * d / (b * e)
        m = np.zeros((8, 8), dtype=complex)
        m[4, 4] = g
        m[5, 5] = g
        m[6, 6] = -g
        m[7, 7] = -g
        m[0, 2] = 1j * _SQRT32 * w
        m[0, 3] = 1j * _SQRT32 * w
        m[0, 5] = 1j * s32d / b
        m[0, 6] = 1j * s32d / b
        m[1, 2] = 1j * w / _SQRT2
        m[1, 3] = 1j * w / _SQRT2
        m[1, 4] = 1j * s2d / b
        m[1, 5] = -1j * d / (_SQRT2 * b)
        m[1, 6] = -1j * d / (_SQRT2 * b)
        m[1, 7] = 1j * s2d / b
        m[2, 4] = -d / b
        m[2, 6] = d / b
        m[3, 5] = -d / b
        m[3, 7] = d / b
        m[4, 5] = -w
        m[6, 7] = w
        return _hermitize(m)

    def de0_of(e):
        dg = -d * d / (b * e * e) - 1.0 / b
        dw = -d * d / (b * e * e)
        m = np.zeros((8, 8), dtype=complex)
        m[4, 4] = dg
        m[5, 5] = dg
        m[6, 6] = -dg
        m[7, 7] = -dg
        m[0, 2] = 1j * _SQRT32 * dw
        m[0, 3] = 1j * _SQRT32 * dw
        m[1, 2] = 1j * dw / _SQRT2
        m[1, 3] = 1j * dw / _SQRT2
        m[4, 5] = -dw
        m[6, 7] = dw
        return _hermitize(m)

    return AffineModel(
        family="su3adj8", k=8, delta=d, slope=b, eps=e0val,
        b=np.diag([0.0, 0.0, 0.0, 0.0, -b, -b, b, b]).astype(complex),
        a_of=a_of, da_of=da_of,
        e1=np.diag([0.0, 0.0, -2.0, 2.0, -1.0, 1.0, -1.0, 1.0]).astype(complex),
        e0_of=e0_of, de0_of=de0_of,
    )


def build_model(family, delta=None, slope=None, eps=None, k=None, **kwargs):
    """Build a catalog model by family tag.

    ``delta``/``slope`` are scalars except for bowtieN, which takes equal
    length lists; ``eps`` is required for the bow-tie-type families; ``k``
    only applies to the spin family.
    """
    if family not in FAMILIES:
        raise UnknownFamilyError(
            f"unknown family {family!r}; valid families: {', '.join(FAMILIES)}"
        )
    if delta is None or slope is None:
        raise ValueError("delta and slope are required")
    if family in ("bowtie3", "bowtieN", "su3six", "su3adj8") and eps is None:
        raise ValueError(f"family {family!r} requires eps")

    if family == "lz2":
        return _build_lz2(delta, slope)
    if family == "spin":
        return _build_spin(k, delta, slope)
    if family == "adjoint3":
        # basis ordered (m=+1, m=-1, m=0) relative to the spin k=3 ladder
        return _build_spin(3, delta, slope, family="adjoint3", permute=(0, 2, 1))
    if family == "bowtie3":
        return _build_bowtie3(delta, slope, eps)
    if family == "bowtieN":
        return _build_bowtieN(delta, slope, eps)
    if family == "su3six":
        return _build_su3six(delta, slope, eps, partner_b=kwargs.get("partner_b"))
    return _build_su3adj8(delta, slope, eps)


def hamiltonian_at(model: AffineModel, t: float, eps: Optional[float] = None) -> np.ndarray:
    """Evaluate H(t, eps) = A(eps) + t B."""
    return model.hamiltonian(t, eps)


def partner_at(model: AffineModel, t: float, eps: Optional[float] = None) -> np.ndarray:
    """Evaluate the partner E(t, eps) = E0(eps) + t E1."""
    return model.partner(t, eps)


def model_from_descriptor(descriptor: dict) -> AffineModel:
    """Rebuild a model from its JSON descriptor (exact round trip)."""
    if not isinstance(descriptor, dict) or "family" not in descriptor:
        raise ValueError("descriptor must be a mapping with a 'family' key")
    extra = set(descriptor) - {"family", "k", "delta", "slope", "eps"}
    if extra:
        raise ValueError(f"unknown descriptor keys: {sorted(extra)}")
    return build_model(
        descriptor["family"],
        delta=descriptor.get("delta"),
        slope=descriptor.get("slope"),
        eps=descriptor.get("eps"),
        k=descriptor.get("k"),
    )
