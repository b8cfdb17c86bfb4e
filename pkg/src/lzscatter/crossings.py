"""Crossing-schedule scattering: localized level crossings on a deformed path.

With a valid flow partner E, the sweep can be rerouted through a
three-segment rectangular detour in the (t, eps) plane whose corners sit
at |t| = R with R formally infinite.  Along the detour every level
crossing is localized and pairwise (or reduces to the standard three-level
pattern), so the full scattering matrix factorizes into a product of
elementary blocks: latest crossing leftmost, matching the composition of
probability flows ``S[i, j] = P(j -> i)``.

No relative phases survive between crossings separated by path length of
order R, with one exception: levels whose diagonal entries coincide
identically (a degenerate flat pair).  Such a pair enters a crossing only
through one combined "bright" direction while the orthogonal "dark"
direction passes untouched, and the flat-level survival amplitude of the
three-level pattern is real, so the pair's local block is still an
ordinary probability matrix parametrized by the bright weights.  For the
shipped families the flat-pair state stays diagonal in every such event's
eigenframe, which keeps the plain probability product exact; the oracle
validates this.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .laxflow import clamp_probabilities
from .models import AffineModel, SingularPartnerError

# samples per path segment used to bracket gap sign changes
_SEGMENT_SAMPLES = 4096
# relative width for grouping simultaneous crossings into one cluster
_CLUSTER_TOL = 1e-6
# couplings below this (relative to the cluster scale) count as absent
_COUPLING_TOL = 1e-12
# relative tolerance for the structural pattern checks
_PATTERN_TOL = 1e-6

DEFAULT_R_SCALE = 1e8
# detour height in units of (max diagonal slope) * R
RAIL_FACTOR = 4.0


class UnsupportedCrossingError(RuntimeError):
    """A crossing cluster does not reduce to the supported block kinds."""


@dataclass(frozen=True)
class CrossingEvent:
    """One localized crossing: participating levels and its block data.

    ``levels`` are 1-based diabatic indices.  For two-level and trivial
    kinds they are the crossing pair (flatter level first); for the
    three-level kind they are (sloped, sloped, flat) or, when the flat
    role is carried by a degenerate pair, (sloped, sloped, flat, flat)
    with ``flat_levels``/``bright_weights`` filled in.
    """

    index: int
    t_over_r: float
    eps_over_r: float
    levels: tuple
    delta_eff: float
    slope_eff: float
    kind: str
    flat_levels: Optional[tuple] = None
    bright_weights: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in ("trivial", "two-level", "three-level"):
            raise ValueError(f"unknown event kind {self.kind!r}")
        if (self.kind == "trivial") != (self.delta_eff == 0.0):
            raise ValueError("kind is trivial exactly when delta_eff == 0")
        if not self.slope_eff > 0.0:
            raise ValueError("slope_eff must be positive")
        if self.delta_eff < 0.0:
            raise ValueError("delta_eff must be nonnegative")

    @property
    def exponent(self) -> float:
        return math.pi * self.delta_eff ** 2 / self.slope_eff

    @property
    def u_eff(self) -> float:
        return math.exp(-self.exponent)

    def to_json_dict(self) -> dict:
        out = {
            "index": self.index,
            "t_over_R": self.t_over_r,
            "eps_over_R": self.eps_over_r,
            "levels": list(self.levels),
            "delta_eff": self.delta_eff,
            "slope_eff": self.slope_eff,
            "kind": self.kind,
        }
        if self.flat_levels is not None:
            out["flat_levels"] = list(self.flat_levels)
            out["bright_weights"] = list(self.bright_weights)
        return out


@dataclass(frozen=True)
class PathSpec:
    """Straight segments of the detour in the (t, eps) plane, in units of R.

    Endpoints must match the undeformed sweep: start at (-1, eps0/R) and
    end at (+1, eps0/R) so the composite path only reroutes the interior.
    """

    segments: tuple
    r_scale: float

    def __post_init__(self):
        if len(self.segments) < 1:
            raise ValueError("path needs at least one segment")
        for (p0, p1) in self.segments:
            if p0 == p1:
                raise ValueError("zero-length path segment")
        for prev, nxt in zip(self.segments, self.segments[1:]):
            if prev[1] != nxt[0]:
                raise ValueError("path segments must be contiguous")
        (t_start, e_start) = self.segments[0][0]
        (t_end, e_end) = self.segments[-1][1]
        if e_start != e_end or t_start != -t_end or not t_end > 0:
            raise ValueError(
                "path endpoints must match the undeformed sweep: from (-R, eps0) "
                "to (+R, eps0)"
            )


def default_path(model: AffineModel, r_scale: float = DEFAULT_R_SCALE) -> PathSpec:
    """Rectangular detour: up at t = -R, across, down at t = +R.

    The rail height is RAIL_FACTOR * max|B_ii| * R on the side of the
    model's nominal eps (the partner pole at eps = 0 is never crossed).
    """
    eps0 = model._eps_value(None)
    if eps0 == 0.0:
        raise SingularPartnerError(
            "path deformation needs eps != 0 (partner pole at eps = 0)"
        )
    smax = float(np.abs(np.diag(model.b).real).max())
    if smax == 0.0:
        raise ValueError("model has no sweeping level")
    rail = math.copysign(RAIL_FACTOR * smax * r_scale, eps0)
    r = r_scale
    segs = (
        ((-r, eps0), (-r, rail)),
        ((-r, rail), (r, rail)),
        ((r, rail), (r, eps0)),
    )
    return PathSpec(segments=segs, r_scale=r_scale)


def _two_level_u(exponent: float) -> float:
    return math.exp(-exponent)


def _three_level_block(u: float) -> np.ndarray:
    v = 1.0 - u
    return np.array(
        [
            [u * u, v * v, 2 * u * v],
            [v * v, u * u, 2 * u * v],
            [2 * u * v, 2 * u * v, (1.0 - 2.0 * u) ** 2],
        ]
    )


def local_smatrix(event: CrossingEvent, k: int) -> np.ndarray:
    """Embed the event's elementary block into a k x k probability matrix."""
    levels = [int(l) for l in event.levels]
    if len(set(levels)) != len(levels) or any(not 1 <= l <= k for l in levels):
        raise ValueError(f"malformed level list {event.levels} for dimension {k}")
    s = np.eye(k)
    if event.kind == "trivial":
        return s
    u = event.u_eff
    if event.kind == "two-level":
        i, j = (l - 1 for l in levels)
        v = 1.0 - u
        s[i, i] = s[j, j] = u
        s[i, j] = s[j, i] = v
        return s
    if event.flat_levels is None:
        s1, s2, f = (l - 1 for l in levels)
        block = _three_level_block(u)
        idx = [s1, s2, f]
        for a in range(3):
            for b in range(3):
                s[idx[a], idx[b]] = block[a, b]
        return s
    # degenerate flat pair: the bright combination takes the flat role,
    # the dark combination passes; the flat-level survival amplitude of
    # the three-level pattern is (2u - 1), real, which makes this block
    # an ordinary probability matrix over the four participating levels
    s1, s2 = (l - 1 for l in levels[:2])
    f1, f2 = (l - 1 for l in event.flat_levels)
    w1, w2 = event.bright_weights
    v = 1.0 - u
    s[s1, s1] = s[s2, s2] = u * u
    s[s1, s2] = s[s2, s1] = v * v
    for f, w in ((f1, w1), (f2, w2)):
        s[s1, f] = s[f, s1] = 2 * u * v * w
        s[s2, f] = s[f, s2] = 2 * u * v * w
    s[f1, f1] = (1.0 - 2.0 * v * w1) ** 2
    s[f2, f2] = (1.0 - 2.0 * v * w2) ** 2
    s[f1, f2] = s[f2, f1] = 4.0 * v * v * w1 * w2
    return s


def compose(schedule, k: int) -> np.ndarray:
    """Total scattering matrix: product of local blocks, latest leftmost.

    An empty schedule composes to the identity.
    """
    total = np.eye(k)
    for event in schedule:
        total = local_smatrix(event, k) @ total
    return clamp_probabilities(total)


def _pair_event(index, t_over_r, eps_over_r, level_pair, coupling, slope_eff):
    flat_first = tuple(level_pair)
    kind = "two-level" if coupling != 0.0 else "trivial"
    return CrossingEvent(
        index=index,
        t_over_r=float(t_over_r),
        eps_over_r=float(eps_over_r),
        levels=flat_first,
        delta_eff=float(abs(coupling)),
        slope_eff=float(slope_eff),
        kind=kind,
    )


def schedule_bowtie3(delta: float, a: float, eps: float):
    """Two crossings of the 3-level bow tie, ordered along the detour.

    For eps > 0 the sweeping level meets level 2 first (at t = -R) and
    level 1 second (at t = +R); for eps < 0 levels 1 and 2 swap roles.
    eps = 0 has a singular partner and no schedule (the numerical engine
    covers that case).
    """
    if not a > 0:
        raise ValueError(f"slope a must be positive, got {a}")
    eps = float(eps)
    if eps == 0.0:
        raise SingularPartnerError("bowtie3 schedule undefined at eps = 0")
    coupling = abs(float(delta)) / a
    slope_eff = 0.5 / a
    rail = math.copysign(a, eps)
    if eps > 0:
        pairs = [(2, 3), (1, 3)]
    else:
        pairs = [(1, 3), (2, 3)]
    return [
        _pair_event(1, -1.0, rail, pairs[0], coupling, slope_eff),
        _pair_event(2, 1.0, rail, pairs[1], coupling, slope_eff),
    ]


def schedule_bowtieN(deltas, slopes, eps: float):
    """Crossing schedule of the k-level bow tie (eps > 0).

    First pass at t = -R in ascending |slope| order: sweeping level i+2
    meets flat level 2 when its slope is positive, flat level 1 when
    negative.  Second pass at t = +R in descending order with the flat
    roles exchanged.
    """
    deltas = [float(v) for v in np.atleast_1d(deltas)]
    slopes = [float(v) for v in np.atleast_1d(slopes)]
    if len(deltas) != len(slopes) or not deltas:
        raise ValueError("delta and slope lists must have equal nonzero length")
    if any(s == 0.0 for s in slopes):
        raise ValueError("slopes must be nonzero")
    mags = [abs(s) for s in slopes]
    for lo, hi in zip(mags, mags[1:]):
        if not lo < hi:
            raise ValueError(f"slope magnitudes must be strictly increasing, got {mags}")
    if not float(eps) > 0.0:
        raise ValueError("bowtieN schedule requires eps > 0")
    events = []
    for i, (d, s) in enumerate(zip(deltas, slopes)):
        flat = 2 if s > 0 else 1
        events.append(
            _pair_event(len(events) + 1, -1.0, mags[i], (flat, i + 3), abs(d / s), 0.5 / mags[i])
        )
    for i in reversed(range(len(slopes))):
        d, s = deltas[i], slopes[i]
        flat = 1 if s > 0 else 2
        events.append(
            _pair_event(len(events) + 1, 1.0, mags[i], (flat, i + 3), abs(d / s), 0.5 / mags[i])
        )
    return events


def schedule_su3six(delta: float, a: float, eps: float):
    """The seven-crossing schedule of the 6-level family (eps > 0 only).

    Non-trivial crossings: two pairwise ones between the inner flat level
    and the two equal-slope sweeping levels, and two three-level ones
    where the double-rate level meets an outer flat level and a sweeping
    level simultaneously.  The middle rail crossing and the two outer
    ones carry no coupling.
    """
    if not a > 0:
        raise ValueError(f"slope a must be positive, got {a}")
    if not float(eps) > 0.0:
        raise ValueError("su3six schedule is only defined for eps > 0")
    d = abs(float(delta))
    pair_kind = "two-level" if d != 0.0 else "trivial"
    tri_kind = "three-level" if d != 0.0 else "trivial"
    rail = RAIL_FACTOR * 2.0 * a
    events = [
        CrossingEvent(1, -1.0, a, (2, 4), d / a, 0.5 / a, pair_kind),
        CrossingEvent(2, -1.0, a, (6, 3, 5), math.sqrt(2.0) * d / a, 1.0 / a, tri_kind),
        CrossingEvent(3, -1.0, 3.0 * a, (3, 4), 0.0, 0.5 / a, "trivial"),
        CrossingEvent(4, 0.0, rail, (2, 6), 0.0, a, "trivial"),
        CrossingEvent(5, 1.0, 3.0 * a, (1, 5), 0.0, 0.5 / a, "trivial"),
        CrossingEvent(6, 1.0, a, (2, 5), d / a, 0.5 / a, pair_kind),
        CrossingEvent(7, 1.0, a, (1, 6, 4), math.sqrt(2.0) * d / a, 1.0 / a, tri_kind),
    ]
    return events


def schedule_json(schedule) -> list:
    """JSON-ready export of an ordered schedule."""
    return [event.to_json_dict() for event in schedule]


# --- generic derivation -----------------------------------------------------


class _Segment:
    """One straight piece of the detour with unit-speed parametrization."""

    def __init__(self, model, p0, p1):
        t0, e0 = p0
        t1, e1 = p1
        self.model = model
        self.t0, self.e0 = float(t0), float(e0)
        dt, de = t1 - self.t0, e1 - self.e0
        self.length = abs(dt) + abs(de)
        self.rate_t = dt / self.length
        self.rate_e = de / self.length

    def point(self, tau):
        return self.t0 + self.rate_t * tau, self.e0 + self.rate_e * tau

    def generator(self, tau):
        t, e = self.point(tau)
        g = np.zeros((self.model.k, self.model.k), dtype=complex)
        if self.rate_t != 0.0:
            g += self.rate_t * self.model.hamiltonian(t, e)
        if self.rate_e != 0.0:
            g += self.rate_e * self.model.partner(t, e)
        return g

    def diag(self, tau):
        return np.diag(self.generator(tau)).real

    def diag_slope(self, tau):
        t, e = self.point(tau)
        m = self.model
        out = np.zeros(m.k)
        if self.rate_t != 0.0:
            out += self.rate_t * (
                self.rate_t * np.diag(m.b).real
                + self.rate_e * np.diag(m.da_of(e)).real
            )
        if self.rate_e != 0.0:
            out += self.rate_e * (
                self.rate_t * np.diag(m.e1).real
                + self.rate_e * np.diag(m.de0_of(e)).real
            )
        return out


def _degenerate_pairs(samples):
    """Level pairs whose diagonals coincide along the whole segment."""
    scale = max(float(np.abs(samples).max()), 1.0)
    k = samples.shape[1]
    pairs = set()
    for i in range(k):
        for j in range(i + 1, k):
            if np.abs(samples[:, i] - samples[:, j]).max() <= 1e-9 * scale:
                pairs.add((i, j))
    return pairs


def _find_pair_crossings(segment, taus, samples, degenerate):
    """Transversal zero crossings of every diagonal gap on the segment."""
    k = samples.shape[1]
    crossings = []
    for i in range(k):
        for j in range(i + 1, k):
            if (i, j) in degenerate:
                continue

            def gap_at(tau, i=i, j=j):
                d = segment.diag(tau)
                return float(d[i] - d[j])

            gap = samples[:, i] - samples[:, j]
            signs = np.sign(gap)
            for n in range(len(taus) - 1):
                if signs[n] == 0.0:
                    # crossing sitting exactly on a grid sample
                    crossings.append((i, j, float(taus[n])))
                    continue
                if signs[n] * signs[n + 1] >= 0.0:
                    continue
                root = brentq(
                    gap_at, taus[n], taus[n + 1], xtol=1e-9 * segment.length
                )
                crossings.append((i, j, float(root)))
            if signs[-1] == 0.0:
                crossings.append((i, j, float(taus[-1])))
    return crossings


def _cluster_crossings(crossings, segment_length):
    """Group crossings that share a level at the same path position."""
    tol = _CLUSTER_TOL * segment_length
    clusters = []
    for i, j, tau in crossings:
        merged = None
        for cluster in clusters:
            if abs(cluster["tau"] - tau) <= tol and (
                i in cluster["levels"] or j in cluster["levels"]
            ):
                merged = cluster
                break
        if merged is None:
            clusters.append({"tau": tau, "levels": {i, j}, "pairs": {(i, j)}})
        else:
            merged["levels"] |= {i, j}
            merged["pairs"].add((i, j))
            merged["tau"] = min(merged["tau"], tau)
    # transitive merge in case separate seeds turn out to touch
    changed = True
    while changed:
        changed = False
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                ca, cb = clusters[a], clusters[b]
                if abs(ca["tau"] - cb["tau"]) <= tol and ca["levels"] & cb["levels"]:
                    ca["levels"] |= cb["levels"]
                    ca["pairs"] |= cb["pairs"]
                    ca["tau"] = min(ca["tau"], cb["tau"])
                    del clusters[b]
                    changed = True
                    break
            if changed:
                break
    return clusters


def _components(levels, edges):
    levels = sorted(levels)
    parent = {l: l for l in levels}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
    groups = {}
    for l in levels:
        groups.setdefault(find(l), []).append(l)
    return [sorted(g) for g in groups.values()]


def _classify_cluster(cluster, segment, degenerate, r_scale, counter):
    """Turn one crossing cluster into events (coupled blocks + trivial pairs)."""
    tau = cluster["tau"]
    levels = set(cluster["levels"])
    # degenerate companions ride along with any member they shadow
    changed = True
    while changed:
        changed = False
        for (i, j) in degenerate:
            if (i in levels) != (j in levels):
                levels |= {i, j}
                changed = True
    levels = sorted(levels)
    gmat = segment.generator(tau)
    slopes = segment.diag_slope(tau)
    t_star, e_star = segment.point(tau)
    loc = (t_star / r_scale, e_star / r_scale)

    couplings = {}
    cscale = 1.0
    for a in range(len(levels)):
        for b in range(a + 1, len(levels)):
            value = abs(gmat[levels[a], levels[b]])
            couplings[(levels[a], levels[b])] = value
            cscale = max(cscale, value)
    coupled_edges = [p for p, v in couplings.items() if v > _COUPLING_TOL * cscale]
    comps = [c for c in _components(levels, coupled_edges) if len(c) > 1]

    events = []
    for comp in comps:
        events.append(
            _component_event(comp, gmat, slopes, loc, degenerate, counter)
        )
    # crossing pairs not absorbed into a coupled block pass through freely
    comp_sets = [set(c) for c in comps]
    for (i, j) in sorted(cluster["pairs"]):
        if any(i in cs and j in cs for cs in comp_sets):
            continue
        pair = sorted((i, j), key=lambda l: (abs(slopes[l]), l))
        events.append(
            CrossingEvent(
                index=next(counter),
                t_over_r=loc[0],
                eps_over_r=loc[1],
                levels=(pair[0] + 1, pair[1] + 1),
                delta_eff=0.0,
                slope_eff=0.5 * abs(slopes[i] - slopes[j]),
                kind="trivial",
            )
        )
    return events


def _component_event(comp, gmat, slopes, loc, degenerate, counter):
    if len(comp) == 2:
        i, j = comp
        pair = sorted(comp, key=lambda l: (abs(slopes[l]), l))
        return CrossingEvent(
            index=next(counter),
            t_over_r=loc[0],
            eps_over_r=loc[1],
            levels=(pair[0] + 1, pair[1] + 1),
            delta_eff=float(abs(gmat[i, j])),
            slope_eff=0.5 * abs(slopes[i] - slopes[j]),
            kind="two-level",
        )
    if len(comp) == 3:
        return _three_level_event(comp, gmat, slopes, loc, counter)
    if len(comp) == 4:
        return _reduced_event(comp, gmat, slopes, loc, degenerate, counter)
    raise UnsupportedCrossingError(
        f"{len(comp)} mutually coupled crossing levels {sorted(l + 1 for l in comp)}"
    )


def _three_level_event(comp, gmat, slopes, loc, counter):
    # the sloped pair is the one uncoupled pair of the component
    cvals = {
        (a, b): abs(gmat[a, b]) for a in comp for b in comp if a < b
    }
    cscale = max(cvals.values())
    zero_pairs = [p for p, v in cvals.items() if v <= _PATTERN_TOL * cscale]
    if len(zero_pairs) != 1:
        raise UnsupportedCrossingError(
            f"three-level cluster {sorted(l + 1 for l in comp)} lacks the "
            "sloped-pair/flat structure"
        )
    s_a, s_b = zero_pairs[0]
    flat = next(l for l in comp if l not in zero_pairs[0])
    c1, c2 = abs(gmat[s_a, flat]), abs(gmat[s_b, flat])
    span = abs(slopes[s_a] - slopes[s_b])
    if abs(c1 - c2) > _PATTERN_TOL * cscale or span == 0.0:
        raise UnsupportedCrossingError("asymmetric three-level cluster")
    mid = 0.5 * (slopes[s_a] + slopes[s_b])
    if abs(slopes[flat] - mid) > _PATTERN_TOL * span:
        raise UnsupportedCrossingError("flat level off-center in three-level cluster")
    return CrossingEvent(
        index=next(counter),
        t_over_r=loc[0],
        eps_over_r=loc[1],
        levels=(min(s_a, s_b) + 1, max(s_a, s_b) + 1, flat + 1),
        delta_eff=0.5 * (c1 + c2),
        slope_eff=0.5 * span,
        kind="three-level",
    )


def _reduced_event(comp, gmat, slopes, loc, degenerate, counter):
    flat_pair = next(
        ((i, j) for (i, j) in degenerate if i in comp and j in comp), None
    )
    if flat_pair is None:
        raise UnsupportedCrossingError(
            f"4-level cluster {sorted(l + 1 for l in comp)} has no degenerate flat pair"
        )
    f1, f2 = flat_pair
    sloped = [l for l in comp if l not in flat_pair]
    s_a, s_b = sorted(sloped)
    cscale = max(abs(gmat[a, b]) for a in comp for b in comp if a < b)
    if abs(gmat[s_a, s_b]) > _PATTERN_TOL * cscale or abs(gmat[f1, f2]) > _PATTERN_TOL * cscale:
        raise UnsupportedCrossingError("coupled sloped pair in reduced cluster")
    v_a = np.array([gmat[f1, s_a], gmat[f2, s_a]])
    v_b = np.array([gmat[f1, s_b], gmat[f2, s_b]])
    na, nb = np.linalg.norm(v_a), np.linalg.norm(v_b)
    if abs(na - nb) > _PATTERN_TOL * cscale:
        raise UnsupportedCrossingError("unequal coupling strengths in reduced cluster")
    alignment = abs(np.vdot(v_a, v_b)) / (na * nb)
    if 1.0 - alignment > _PATTERN_TOL:
        # the two sloped levels couple to different flat directions: no
        # common dark state, genuinely four coupled levels
        raise UnsupportedCrossingError(
            f"4 mutually coupled crossing levels {sorted(l + 1 for l in comp)}"
        )
    span = abs(slopes[s_a] - slopes[s_b])
    mid = 0.5 * (slopes[s_a] + slopes[s_b])
    if span == 0.0 or abs(slopes[f1] - mid) > _PATTERN_TOL * span:
        raise UnsupportedCrossingError("flat pair off-center in reduced cluster")
    weights = (np.abs(v_a) / na) ** 2
    return CrossingEvent(
        index=next(counter),
        t_over_r=loc[0],
        eps_over_r=loc[1],
        levels=(s_a + 1, s_b + 1, f1 + 1, f2 + 1),
        delta_eff=float(na),
        slope_eff=0.5 * span,
        kind="three-level",
        flat_levels=(f1 + 1, f2 + 1),
        bright_weights=(float(weights[0]), float(weights[1])),
    )


def derive_schedule_generic(model: AffineModel, path: Optional[PathSpec] = None,
                            r_scale: float = DEFAULT_R_SCALE):
    """Derive the ordered crossing schedule of a partnered model.

    Scans each path segment's generator for intersections of its diagonal
    entries, groups simultaneous intersections into clusters, classifies
    every cluster into the supported block kinds and returns the events in
    path order (ties: smaller blocks first, then lowest level).
    """
    if not model.has_partner:
        model.partner(0.0)  # raises MissingPartnerError
    if path is None:
        path = default_path(model, r_scale)
    else:
        r_scale = path.r_scale
    raw = []
    index_iter = iter(range(1, 10 ** 9))
    for p0, p1 in path.segments:
        segment = _Segment(model, p0, p1)
        taus = np.linspace(0.0, segment.length, _SEGMENT_SAMPLES)
        samples = np.array([segment.diag(tau) for tau in taus])
        degenerate = _degenerate_pairs(samples)
        crossings = _find_pair_crossings(segment, taus, samples, degenerate)
        clusters = _cluster_crossings(crossings, segment.length)
        cluster_events = []
        for cluster in clusters:
            events = _classify_cluster(cluster, segment, degenerate, r_scale, index_iter)
            quantum = _CLUSTER_TOL * segment.length
            tau_key = round(cluster["tau"] / quantum)
            for event in events:
                cluster_events.append((tau_key, len(event.levels), min(event.levels), event))
        cluster_events.sort(key=lambda item: item[:3])
        raw.extend(event for *_key, event in cluster_events)
    # reassign contiguous indices in final path order
    ordered = []
    for n, event in enumerate(raw, start=1):
        ordered.append(
            CrossingEvent(
                index=n,
                t_over_r=event.t_over_r,
                eps_over_r=event.eps_over_r,
                levels=event.levels,
                delta_eff=event.delta_eff,
                slope_eff=event.slope_eff,
                kind=event.kind,
                flat_levels=event.flat_levels,
                bright_weights=event.bright_weights,
            )
        )
    return ordered
