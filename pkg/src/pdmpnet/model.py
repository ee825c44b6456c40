"""Controlled switched dynamics on a star network.

A model bundles, for every mode gamma of a finite mode set, a controlled
drift f_gamma, a switching intensity lambda_gamma, a switching kernel
row Q_gamma and a running cost l_gamma, together with the admissible
control description per (mode, edge) and declared structural constants.
Coefficients are evaluated edge-wise at scalar coordinates; the ambient
vector form of the drift is only needed at the junction (to decide which
edge the motion continues on) and in the structural audit.

Two wrappers implement the standard constructions on top of a base
model: `extend_dynamics` prolongs every coefficient onto the extended
network (mirror rule on fictive edges for modes where the edge is
inactive, freezing at the junction and at the tips elsewhere), and
`shake` perturbs a coefficient's spatial argument by rho*b along the
current edge, where b in [-1,1] is an extra control component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (BadEpsilon, BadRho, InadmissibleControl,
                     MissingPrecondition, OffNetwork)
from .network import (JUNCTION, ExtendedNetwork, NetworkPoint, StarNetwork,
                      canonical_point, extend, make_network)

ADMISS_TOL = 1e-9


@dataclass(frozen=True)
class ControlSegment:
    """Closed segment {t*direction : lo <= t <= hi} in control space."""
    direction: tuple
    lo: float
    hi: float

    def contains(self, a, tol: float = ADMISS_TOL) -> bool:
        d = np.asarray(self.direction)
        a = np.asarray(a, dtype=float)
        t = float(a @ d)
        if t < self.lo - tol or t > self.hi + tol:
            return False
        return float(np.linalg.norm(a - t * d)) <= tol

    def sample(self, n: int):
        d = np.asarray(self.direction)
        return [tuple(t * d) for t in np.linspace(self.lo, self.hi, n)]


@dataclass(frozen=True)
class Distinguished:
    """Named controls attached to a (mode, edge) pair.

    outward/inward move away from / toward the junction with speed margin
    beta near it (outward exists only on active edges); null freezes the
    state at the junction; tip points strictly inward at the far endpoint
    and is None when every admissible control already does.
    """
    outward: Optional[tuple]
    inward: tuple
    null: Optional[tuple]
    tip: Optional[tuple]
    tip_all_admissible: bool


@dataclass(frozen=True)
class ModelConstants:
    """Declared structural constants; the audit cross-checks them."""
    f_bound: float      # sup |f|
    lam_bound: float    # sup lambda
    l_bound: float      # sup l
    lip_f: float        # one-sided Lipschitz constant of the drift
    lip_lam: float
    lip_l: float
    lip_q: float
    beta: float         # junction speed margin
    eta: float          # radius on which the junction inequalities hold
    kappa: float        # inward speed exponent on inactive edges


class PdmpModel:
    """Base class; concrete models override the coefficient methods."""

    def __init__(self, network: StarNetwork, modes, delta: float,
                 constants: ModelConstants, name: str = ""):
        self.network = network
        self.modes = tuple(modes)
        self.delta = float(delta)
        self.constants = constants
        self.name = name
        self._mode_index = {m: i for i, m in enumerate(self.modes)}

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def mode_index(self, mode) -> int:
        return self._mode_index[mode]

    # --- to be overridden -------------------------------------------------
    def active(self, edge: int, mode) -> bool:
        raise NotImplementedError

    def control_segments(self, mode, edge: int):
        raise NotImplementedError

    def drift_vec(self, x_vec, mode, a, edge: int = 0) -> np.ndarray:
        raise NotImplementedError

    def rate(self, edge: int, r: float, mode, a) -> float:
        raise NotImplementedError

    def cost(self, edge: int, r: float, mode, a) -> float:
        raise NotImplementedError

    def qrow(self, edge: int, r: float, mode, a) -> np.ndarray:
        raise NotImplementedError

    def distinguished(self, mode, edge: int) -> Distinguished:
        raise NotImplementedError

    # --- generic derived operations ----------------------------------------
    def drift(self, edge: int, r: float, mode, a) -> float:
        """Drift component along the edge direction at r*e_edge."""
        e = self.network.direction(edge)
        return float(self.drift_vec(r * e, mode, a, edge=edge) @ e)

    def admissible_on_edge(self, mode, edge: int, a) -> bool:
        return any(s.contains(a) for s in self.control_segments(mode, edge))

    def control_edges(self, mode, a):
        """Edges on whose control description a is admissible."""
        return [j for j in self.network.edge_ids()
                if self.admissible_on_edge(mode, j, a)]

    def admissible_at(self, p: NetworkPoint, mode, a) -> bool:
        """Membership in the state-constrained control set at p."""
        if p.is_junction():
            edges = self.control_edges(mode, a)
            if not edges:
                return False
            v = self.drift_vec(np.zeros(self.network.ambient_dim), mode, a,
                               edge=edges[0])
            return self._junction_drift_legal(v)
        if not self.admissible_on_edge(mode, p.edge, a):
            return False
        if p.coord >= self.network.edge_length(p.edge) - 1e-12:
            return self.drift(p.edge, p.coord, mode, a) <= ADMISS_TOL
        return True

    def _junction_drift_legal(self, v) -> bool:
        n = float(np.linalg.norm(v))
        if n <= ADMISS_TOL:
            return True
        for k in self.network.edge_ids():
            e = self.network.direction(k)
            c = float(v @ e)
            if c > ADMISS_TOL and float(np.linalg.norm(v - c * e)) <= 1e-9 * max(1.0, n):
                return True
        return False

    def junction_exit_edge(self, mode, a):
        """Edge along which the drift leaves the junction, or None to stay.

        Staying covers a vanishing junction drift, a drift aligned with no
        edge, and an aligned edge whose own drift at 0 immediately pulls
        back (coefficients read at shifted or frozen arguments can reverse
        just inside the exit edge); in each case the state is pinned.
        """
        edges = self.control_edges(mode, a)
        if not edges:
            raise InadmissibleControl(f"control {a} admissible on no edge")
        v = self.drift_vec(np.zeros(self.network.ambient_dim), mode, a,
                           edge=edges[0])
        n = float(np.linalg.norm(v))
        if n <= ADMISS_TOL:
            return None
        for k in self.network.edge_ids():
            e = self.network.direction(k)
            c = float(v @ e)
            if c > ADMISS_TOL and float(np.linalg.norm(v - c * e)) <= 1e-9 * max(1.0, n):
                if self.drift(k, 0.0, mode, a) > ADMISS_TOL:
                    return k
                return None
        return None


@dataclass(frozen=True)
class EvalResult:
    drift: np.ndarray
    rate: float
    qrow: np.ndarray
    cost: float


def evaluate(model: PdmpModel, p: NetworkPoint, mode, a) -> EvalResult:
    """All four coefficients at a network point, with admissibility checks."""
    if mode not in model._mode_index:
        raise InadmissibleControl(f"unknown mode {mode}")
    if not model.admissible_at(p, mode, a):
        raise InadmissibleControl(f"control {a} not admissible at {p} in mode {mode}")
    if p.is_junction():
        edge, r = model.control_edges(mode, a)[0], 0.0
    else:
        edge, r = p.edge, p.coord
    x = model.network.embed(p)
    drift = np.asarray(model.drift_vec(x, mode, a, edge=edge), dtype=float)
    rate = float(model.rate(edge, r, mode, a))
    row = np.asarray(model.qrow(edge, r, mode, a), dtype=float)
    cost = float(model.cost(edge, r, mode, a))
    if rate < 0:
        raise OffNetwork(f"negative intensity {rate}")
    if rate > 1e-15:
        if abs(float(row.sum()) - 1.0) > 1e-12 or abs(float(row[model.mode_index(mode)])) > 1e-12:
            raise OffNetwork(f"switch row {row} is not a proper off-diagonal distribution")
    return EvalResult(drift=drift, rate=rate, qrow=row, cost=cost)


# ---------------------------------------------------------------------------
# built-in three-road junction model
# ---------------------------------------------------------------------------

class Traffic3Model(PdmpModel):
    """Two crossing roads: a vertical half-line and a horizontal full line.

    Edge 1 is the vertical branch, edges 2 and 3 the two horizontal
    half-lines (an antipodal pair).  A mode is a triple of lights
    (g1, g2, g3); g1 gates the vertical branch, g2 (= g3 on the mode set)
    gates the horizontal line.  On a green branch the control moves the
    state directly; on a red branch traffic drains toward the junction
    at speed sqrt(distance).  Costs penalise distance from the far ends,
    switching intensities are proportional to the total cost over the
    other modes, and the switch kernel picks the next mode proportionally
    to its own cost level.
    """

    def __init__(self, l0: float, lambda0: float, delta: float):
        net = make_network([(0.0, 1.0), (1.0, 0.0), (-1.0, 0.0)])
        modes = ((0, 0, 0), (0, 1, 1), (1, 0, 0), (1, 1, 1))
        self.l0 = float(l0)
        self.lambda0 = float(lambda0)
        self._den = {m: m[0] + m[1] + 1 for m in modes}
        self._sum_inv_den = {m: sum(1.0 / self._den[mm] for mm in modes if mm != m)
                             for m in modes}
        lam_bound = lambda0 * (3.0 * l0 + 2.0)
        lam_min = 3.0 * lambda0 * l0
        lip_q = (3.0 * lambda0 * lam_bound + lambda0 * (l0 + 1.0) * 7.0 * lambda0) / lam_min ** 2
        constants = ModelConstants(
            f_bound=1.0, lam_bound=lam_bound, l_bound=l0 + 1.0,
            lip_f=0.0, lip_lam=7.0 * lambda0, lip_l=3.0, lip_q=lip_q,
            beta=0.95, eta=0.9, kappa=0.5)
        super().__init__(net, modes, delta, constants, name="traffic3")
        self._seg_vert = (ControlSegment((0.0, 1.0), -1.0, 1.0),)
        self._seg_horiz = (ControlSegment((1.0, 0.0), -1.0, 1.0),)

    def active(self, edge: int, mode) -> bool:
        return mode[0] == 1 if edge == 1 else mode[1] == 1

    def control_segments(self, mode, edge: int):
        return self._seg_vert if edge == 1 else self._seg_horiz

    def drift_vec(self, x_vec, mode, a, edge: int = 0) -> np.ndarray:
        g1, g2, _ = mode
        a1, a2 = a
        x1, x2 = float(x_vec[0]), float(x_vec[1])
        na = math.hypot(a1, a2)
        fx = g2 * a1 - na * (1 - g2) * (math.sqrt(max(x1, 0.0)) - math.sqrt(max(-x1, 0.0)))
        fy = g1 * a2 - na * (1 - g1) * math.sqrt(max(x2, 0.0))
        return np.array([fx, fy])

    def drift(self, edge: int, r: float, mode, a) -> float:
        g1, g2, _ = mode
        a1, a2 = a
        na = math.hypot(a1, a2)
        rr = math.sqrt(max(r, 0.0))
        if edge == 1:
            return g1 * a2 - na * (1 - g1) * rr
        if edge == 2:
            return g2 * a1 - na * (1 - g2) * rr
        return -g2 * a1 - na * (1 - g2) * rr

    def cost(self, edge: int, r: float, mode, a) -> float:
        a1, a2 = a
        u = min(max(r, 0.0), 1.0)
        return self.l0 + (1.0 - u) ** 2 / self._den[mode] \
            + math.hypot(a1, a2) * (u - u * u)

    def rate(self, edge: int, r: float, mode, a) -> float:
        a1, a2 = a
        u = min(max(r, 0.0), 1.0)
        return self.lambda0 * (3.0 * self.l0
                               + (1.0 - u) ** 2 * self._sum_inv_den[mode]
                               + 3.0 * math.hypot(a1, a2) * (u - u * u))

    def qrow(self, edge: int, r: float, mode, a) -> np.ndarray:
        a1, a2 = a
        u = min(max(r, 0.0), 1.0)
        na = math.hypot(a1, a2)
        lam = self.rate(edge, r, mode, a)
        row = np.zeros(len(self.modes))
        for i, m in enumerate(self.modes):
            if m == mode:
                continue
            prop = self.lambda0 * (self.l0 + (1.0 - u) ** 2 / self._den[m]
                                   + na * (u - u * u))
            row[i] = prop / lam
        return row

    def distinguished(self, mode, edge: int) -> Distinguished:
        act = self.active(edge, mode)
        if edge == 1:
            out, inw = (0.0, 1.0), (0.0, -1.0)
        elif edge == 2:
            out, inw = (1.0, 0.0), (-1.0, 0.0)
        else:
            out, inw = (-1.0, 0.0), (1.0, 0.0)
        null = (0.0, 0.0)
        if act:
            return Distinguished(outward=out, inward=inw, null=null,
                                 tip=inw, tip_all_admissible=False)
        return Distinguished(outward=None, inward=inw, null=null,
                             tip=None, tip_all_admissible=True)


def traffic3_model(l0: float = 0.1, lambda0: float = 1.0,
                   delta: float = 1.0) -> Traffic3Model:
    if l0 <= 0 or lambda0 <= 0 or delta <= 0:
        raise BadEpsilon("l0, lambda0, delta must be positive")
    return Traffic3Model(l0, lambda0, delta)


MODEL_REGISTRY = {"traffic3": traffic3_model}


# ---------------------------------------------------------------------------
# extension to the enlarged network
# ---------------------------------------------------------------------------

class ExtendedPdmpModel(PdmpModel):
    """Coefficients prolonged to the extended network.

    Beyond a tip every coefficient freezes at its tip value.  On a
    fictive edge (the short far-side continuation of an antipode-free
    edge j): when j is inactive in the current mode the drift mirrors the
    base edge, f(x,a) = -f(-x,a), so the junction acts like a reflecting
    wall seen from either side; when j is active all coefficients freeze
    at their junction values.  lambda, Q and l freeze at the junction on
    fictive edges in both cases.
    """

    def __init__(self, base: PdmpModel, epsilon: float):
        xnet = extend(base.network, epsilon)
        super().__init__(xnet, base.modes, base.delta, base.constants,
                         name=base.name + "+ext")
        self.base_model = base
        self.epsilon = float(epsilon)

    # fictive edges inherit everything from their base edge
    def _base_edge(self, edge: int) -> int:
        return self.network.base_edge(edge)

    def is_fictive(self, edge: int) -> bool:
        return self.network.is_fictive(edge)

    def active(self, edge: int, mode) -> bool:
        return self.base_model.active(self._base_edge(edge), mode)

    def control_segments(self, mode, edge: int):
        return self.base_model.control_segments(mode, self._base_edge(edge))

    def distinguished(self, mode, edge: int) -> Distinguished:
        return self.base_model.distinguished(mode, self._base_edge(edge))

    def drift(self, edge: int, r: float, mode, a) -> float:
        b = self._base_edge(edge)
        if not self.is_fictive(edge):
            return self.base_model.drift(edge, min(r, 1.0), mode, a)
        if self.active(b, mode):
            return -self.base_model.drift(b, 0.0, mode, a)
        return self.base_model.drift(b, min(r, 1.0), mode, a)

    def drift_vec(self, x_vec, mode, a, edge: int = 0) -> np.ndarray:
        if edge == 0:
            raise OffNetwork("extended drift needs the edge context")
        b = self._base_edge(edge)
        e = self.base_model.network.direction(b)
        if not self.is_fictive(edge):
            r = float(np.asarray(x_vec) @ e)
            return self.base_model.drift_vec(min(r, 1.0) * e, mode, a, edge=b)
        r = -float(np.asarray(x_vec) @ e)
        if self.active(b, mode):
            return self.base_model.drift_vec(0.0 * e, mode, a, edge=b)
        return -self.base_model.drift_vec(min(r, 1.0) * e, mode, a, edge=b)

    def _frozen_args(self, edge: int, r: float):
        if self.is_fictive(edge):
            return self._base_edge(edge), 0.0
        return edge, min(r, 1.0)

    def rate(self, edge: int, r: float, mode, a) -> float:
        return self.base_model.rate(*self._frozen_args(edge, r), mode, a)

    def cost(self, edge: int, r: float, mode, a) -> float:
        return self.base_model.cost(*self._frozen_args(edge, r), mode, a)

    def qrow(self, edge: int, r: float, mode, a) -> np.ndarray:
        return self.base_model.qrow(*self._frozen_args(edge, r), mode, a)


def extend_dynamics(model: PdmpModel, epsilon: float) -> ExtendedPdmpModel:
    """Extended model on the epsilon-enlarged network.

    Preconditions (checked): for every antipode-free edge j and every
    mode in which j is inactive, the junction drift vanishes for all
    admissible controls (so the mirror rule glues continuously); for
    every antipodal pair the two control descriptions coincide.
    """
    if isinstance(model, ExtendedPdmpModel):
        raise BadEpsilon("model is already extended")
    net = model.network
    for j in range(1, net.n_free + 1):
        for mode in model.modes:
            if model.active(j, mode):
                continue
            for seg in model.control_segments(mode, j):
                for a in seg.sample(7):
                    v = model.drift_vec(np.zeros(net.ambient_dim), mode, a, edge=j)
                    if float(np.linalg.norm(v)) > 1e-10:
                        raise MissingPrecondition(
                            f"edge {j}, mode {mode}: junction drift {v} nonzero "
                            f"for control {a}; mirror extension needs a pinned junction")
    for j, jp in net.antipode.items():
        for mode in model.modes:
            if model.control_segments(mode, j) != model.control_segments(mode, jp):
                raise MissingPrecondition(
                    f"edges {j},{jp}: antipodal pair with different control sets")
    return ExtendedPdmpModel(model, epsilon)


# ---------------------------------------------------------------------------
# shaking
# ---------------------------------------------------------------------------

class ShakenPdmpModel(PdmpModel):
    """Coefficients evaluated at a control-shifted argument.

    Controls are pairs (a, b), |b| <= 1; every coefficient is read at the
    point shifted by rho*b along the current edge's direction, crossing
    the junction onto the continuation edge when the shift overshoots.
    rho = 0 reproduces the underlying extended model exactly.
    """

    def __init__(self, xmodel: ExtendedPdmpModel, rho: float):
        super().__init__(xmodel.network, xmodel.modes, xmodel.delta,
                         xmodel.constants, name=xmodel.name + "+shake")
        self.xmodel = xmodel
        self.rho = float(rho)
        self.epsilon = xmodel.epsilon

    def _split(self, a):
        if not (isinstance(a, tuple) and len(a) == 2 and np.isscalar(a[1])
                and not np.isscalar(a[0])):
            raise InadmissibleControl(f"shaken control must be (a, b), got {a}")
        return a[0], float(a[1])

    def _shifted(self, edge: int, r: float, b: float):
        rs = r + self.rho * b
        if rs >= 0.0:
            return edge, rs, +1.0
        if r < 0.0:
            # integrator stage probe below the junction, not a shift
            # crossing; read the junction value like the unshaken model
            return edge, 0.0, +1.0
        cont = self.network.continuation(edge)
        return cont, -rs, -1.0

    def active(self, edge: int, mode) -> bool:
        return self.xmodel.active(edge, mode)

    def control_segments(self, mode, edge: int):
        return self.xmodel.control_segments(mode, edge)

    def distinguished(self, mode, edge: int) -> Distinguished:
        d = self.xmodel.distinguished(mode, edge)
        wrap = lambda c: None if c is None else (c, 0.0)
        return Distinguished(outward=wrap(d.outward), inward=wrap(d.inward),
                             null=wrap(d.null), tip=wrap(d.tip),
                             tip_all_admissible=d.tip_all_admissible)

    def admissible_on_edge(self, mode, edge: int, a) -> bool:
        base, b = self._split(a)
        if abs(b) > 1.0 + ADMISS_TOL:
            return False
        return self.xmodel.admissible_on_edge(mode, edge, base)

    def drift(self, edge: int, r: float, mode, a) -> float:
        base, b = self._split(a)
        e2, r2, sgn = self._shifted(edge, r, b)
        return sgn * self.xmodel.drift(e2, r2, mode, base)

    def drift_vec(self, x_vec, mode, a, edge: int = 0) -> np.ndarray:
        base, b = self._split(a)
        if edge == 0:
            raise OffNetwork("shaken drift needs the edge context")
        e = self.network.direction(edge)
        r = float(np.asarray(x_vec) @ e)
        e2, r2, _ = self._shifted(edge, r, b)
        return self.xmodel.drift_vec(r2 * self.network.direction(e2), mode, base,
                                     edge=e2)

    def rate(self, edge: int, r: float, mode, a) -> float:
        base, b = self._split(a)
        e2, r2, _ = self._shifted(edge, r, b)
        return self.xmodel.rate(e2, r2, mode, base)

    def cost(self, edge: int, r: float, mode, a) -> float:
        base, b = self._split(a)
        e2, r2, _ = self._shifted(edge, r, b)
        return self.xmodel.cost(e2, r2, mode, base)

    def qrow(self, edge: int, r: float, mode, a) -> np.ndarray:
        base, b = self._split(a)
        e2, r2, _ = self._shifted(edge, r, b)
        return self.xmodel.qrow(e2, r2, mode, base)


def shake(xmodel: ExtendedPdmpModel, rho: float) -> ShakenPdmpModel:
    if not isinstance(xmodel, ExtendedPdmpModel):
        raise BadRho("shake applies to an extended model")
    if not (0.0 <= rho <= xmodel.epsilon):
        raise BadRho(f"need 0 <= rho <= epsilon={xmodel.epsilon}, got {rho}")
    return ShakenPdmpModel(xmodel, rho)


# ---------------------------------------------------------------------------
# scales used by the tracking constructions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProjectionScales:
    """Derived scales for a given epsilon.

    horizon: time after which the discounted tail costs less than eps/2.
    near_radius: junction scale of the single-edge tracking lemma.
    shake_radius: coefficient shake amplitude used on the extended network.
    track_radius: renewal radius of the follower construction (= shake/2).
    deviation_budget: guaranteed bound on the tracking deviation at
    renewal times; growth(t, r) propagates a radius r over a time t.
    """
    epsilon: float
    horizon: float
    near_radius: float
    shake_radius: float
    track_radius: float
    deviation_budget: float

    lip_f: float
    _shift_scale: float

    def growth(self, t: float, r: float) -> float:
        return math.exp(self.lip_f * t) * (r + self._shift_scale * self.lip_f * t)

    def guarantee(self) -> float:
        return self.growth(self.horizon, self.deviation_budget)


def shaking_scales(model: PdmpModel, epsilon: float) -> ProjectionScales:
    """All tracking scales for a model and a given epsilon."""
    c = model.constants
    delta = model.delta
    if not (0.0 < epsilon < 1.0):
        raise BadEpsilon(f"epsilon must lie in (0,1), got {epsilon}")
    arg = epsilon * delta / (2.0 * c.f_bound)
    if arg >= 1.0:
        raise BadEpsilon(
            f"epsilon*delta/(2|f|) = {arg} >= 1: horizon would be negative")
    horizon = -math.log(arg) / delta
    near_radius = (c.eta / 4.0) * math.exp(-c.lip_f * horizon)
    shake_radius = -epsilon ** (1.0 + 2.0 * c.lip_f / ((1.0 - c.kappa) * delta)) \
        / math.log(epsilon)
    track_radius = shake_radius / 2.0
    shift_scale = max(2.0 * shake_radius, 4.0 * track_radius)
    growth_at_track = math.exp(c.lip_f * horizon) * \
        (track_radius + shift_scale * c.lip_f * horizon)
    budget = (c.f_bound / ((1.0 - c.kappa) * c.beta) + 1.0) \
        * growth_at_track ** (1.0 - c.kappa)
    return ProjectionScales(
        epsilon=epsilon, horizon=horizon, near_radius=near_radius,
        shake_radius=shake_radius, track_radius=track_radius,
        deviation_budget=budget, lip_f=c.lip_f, _shift_scale=shift_scale)


# ---------------------------------------------------------------------------
# structural audit
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    margin: float      # worst slack observed; negative means violated
    witness: Optional[dict]

    def as_dict(self):
        return {"name": self.name, "passed": bool(self.passed),
                "margin": float(self.margin), "witness": self.witness}


@dataclass
class AuditReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self):
        return {"passed": self.passed,
                "checks": [c.as_dict() for c in self.checks]}

    def failures(self):
        return [c for c in self.checks if not c.passed]


def _sample_controls(model, mode, edge, n):
    out = []
    for seg in model.control_segments(mode, edge):
        out.extend(seg.sample(n))
    d = model.distinguished(mode, edge)
    for c in (d.outward, d.inward, d.null, d.tip):
        if c is not None and c not in out:
            out.append(c)
    return out


def audit_assumptions(model: PdmpModel, n_samples: int = 200,
                      seed: int = 0) -> AuditReport:
    """Sampled verification of the declared structural assumptions.

    Reports, never raises: each check carries its worst margin and a
    witness for the worst (or first violating) sample.  Lipschitz checks
    use difference quotients, so they validate the declared constants
    from below; bounds and sign conditions are checked directly.
    """
    rng = np.random.default_rng(seed)
    net = model.network
    c = model.constants
    tol = 1e-9
    n_pts = max(8, n_samples // (4 * net.n_edges))
    checks = []

    def record(name, margin, witness):
        checks.append(CheckResult(name, margin >= -tol, float(margin), witness))

    def edge_points(j):
        pts = list(rng.uniform(0.0, 1.0, n_pts))
        pts += list(rng.uniform(0.0, min(c.eta, 1.0), n_pts))
        pts += [0.0, 1.0, min(c.eta, 1.0)]
        return pts

    # (1) drift bound, evaluated in vector form over all sampled states
    worst, wit = math.inf, None
    for mode in model.modes:
        for j in net.edge_ids():
            ctrls = _sample_controls(model, mode, j, 5)
            for r in edge_points(j):
                x = r * net.direction(j)
                for a in ctrls:
                    m = c.f_bound - float(np.linalg.norm(
                        model.drift_vec(x, mode, a, edge=j)))
                    if m < worst:
                        worst, wit = m, {"mode": mode, "edge": j, "r": r, "a": a}
    record("drift_bound", worst, wit)

    # (2) one-sided monotonicity of the drift along shared control lines
    worst, wit = math.inf, None
    for mode in model.modes:
        for j in net.edge_ids():
            ctrls = _sample_controls(model, mode, j, 5)
            others = [j] + ([net.continuation(j)] if net.continuation(j) else [])
            for _ in range(n_pts):
                j2 = others[int(rng.integers(len(others)))]
                r1, r2 = rng.uniform(0.0, 1.0, 2)
                x = r1 * net.direction(j)
                y = r2 * net.direction(j2)
                d2 = float((x - y) @ (x - y))
                if d2 < 1e-8:
                    continue
                for a in ctrls:
                    if not model.admissible_on_edge(mode, j2, a):
                        continue
                    gap = float((model.drift_vec(x, mode, a, edge=j)
                                 - model.drift_vec(y, mode, a, edge=j2)) @ (x - y))
                    m = c.lip_f * d2 - gap
                    if m / d2 < worst:
                        worst, wit = m / d2, {"mode": mode, "x": (j, r1),
                                              "y": (j2, r2), "a": a}
    record("drift_one_sided", worst, wit)

    # (3)-(5) bounds and Lipschitz quotients for rate, cost, kernel rows
    def scan(fn, bound, lip, label):
        worst_b, wit_b = math.inf, None
        worst_l, wit_l = math.inf, None
        for mode in model.modes:
            for j in net.edge_ids():
                ctrls = _sample_controls(model, mode, j, 5)
                pts = edge_points(j)
                for a in ctrls:
                    vals = [fn(j, r, mode, a) for r in pts]
                    for r, v in zip(pts, vals):
                        m = bound - abs(v)
                        if m < worst_b:
                            worst_b, wit_b = m, {"mode": mode, "edge": j,
                                                 "r": r, "a": a, "value": v}
                    for (r1, v1), (r2, v2) in zip(list(zip(pts, vals))[:-1],
                                                  list(zip(pts, vals))[1:]):
                        dist = abs(r1 - r2)
                        if dist < 1e-8:
                            continue
                        m = lip - abs(v1 - v2) / dist
                        if m < worst_l:
                            worst_l, wit_l = m, {"mode": mode, "edge": j,
                                                 "r1": r1, "r2": r2, "a": a}
        record(label + "_bound", worst_b, wit_b)
        record(label + "_lipschitz", worst_l, wit_l)

    scan(model.rate, c.lam_bound, c.lip_lam, "rate")
    scan(model.cost, c.l_bound, c.lip_l, "cost")
    scan(lambda j, r, mode, a: float(np.max(np.abs(model.qrow(j, r, mode, a)))),
         1.0, c.lip_q, "qrow")

    # (6) kernel rows: nonnegative, zero diagonal, total mass one
    worst, wit = math.inf, None
    for mode in model.modes:
        i = model.mode_index(mode)
        for j in net.edge_ids():
            for a in _sample_controls(model, mode, j, 3):
                for r in [0.0, 0.37, 1.0]:
                    row = np.asarray(model.qrow(j, r, mode, a))
                    m = min(1e-12 - abs(float(row.sum()) - 1.0),
                            1e-12 - abs(float(row[i])),
                            float(row.min()))
                    if m < worst:
                        worst, wit = m, {"mode": mode, "edge": j, "r": r, "a": a,
                                         "row": [float(v) for v in row]}
    record("qrow_stochastic", worst + tol, wit)

    # (7) tips: the inward-or-null control set is nonempty with the
    # declared margin, or every control is admissible there
    worst, wit = math.inf, None
    for mode in model.modes:
        for j in net.edge_ids():
            d = model.distinguished(mode, j)
            drifts = [model.drift(j, 1.0, mode, a)
                      for a in _sample_controls(model, mode, j, 7)]
            if d.tip_all_admissible:
                m = -max(drifts)
            else:
                if d.tip is None:
                    m = -math.inf
                else:
                    m = -c.beta - model.drift(j, 1.0, mode, d.tip)
            if m < worst:
                worst, wit = m, {"mode": mode, "edge": j}
    record("tip_admissible", worst, wit)

    # (8) junction controls on active edges: declared outward/inward keep
    # a speed margin beta on the whole eta-neighbourhood
    worst, wit = math.inf, None
    for mode in model.modes:
        for j in net.edge_ids():
            if not model.active(j, mode):
                continue
            d = model.distinguished(mode, j)
            if d.outward is None:
                worst, wit = -math.inf, {"mode": mode, "edge": j}
                continue
            for r in [0.0] + list(rng.uniform(0.0, c.eta, n_pts)):
                m = min(model.drift(j, r, mode, d.outward) - c.beta,
                        -c.beta - model.drift(j, r, mode, d.inward))
                if m < worst:
                    worst, wit = m, {"mode": mode, "edge": j, "r": r}
    record("active_junction_margin", worst, wit)

    # (9) inactive edges near the junction: nothing moves outward, and the
    # declared inward control drains at speed beta*r^kappa
    worst, wit = math.inf, None
    for mode in model.modes:
        for j in net.edge_ids():
            if model.active(j, mode):
                continue
            d = model.distinguished(mode, j)
            ctrls = _sample_controls(model, mode, j, 5)
            for r in [0.0] + list(rng.uniform(0.0, c.eta, n_pts)):
                m = min(-model.drift(j, r, mode, a) for a in ctrls)
                m = min(m, -model.drift(j, r, mode, d.inward)
                        - c.beta * r ** c.kappa)
                if m < worst:
                    worst, wit = m, {"mode": mode, "edge": j, "r": r}
            if d.null is None:
                worst, wit = -math.inf, {"mode": mode, "edge": j, "missing": "null"}
            else:
                m = 1e-12 - abs(model.drift(j, 0.0, mode, d.null))
                if m < worst:
                    worst, wit = m, {"mode": mode, "edge": j}
    record("inactive_junction_drain", worst + tol, wit)

    # (10) mirror readiness: on antipode-free edges, inactive modes pin
    # the junction for every control
    worst, wit = math.inf, None
    for j in range(1, net.n_free + 1):
        for mode in model.modes:
            if model.active(j, mode):
                continue
            for a in _sample_controls(model, mode, j, 7):
                v = model.drift_vec(np.zeros(net.ambient_dim), mode, a, edge=j)
                m = 1e-12 - float(np.linalg.norm(v))
                if m < worst:
                    worst, wit = m, {"mode": mode, "edge": j, "a": a}
    record("mirror_junction_pinned", worst + tol, wit)

    # (11) control independence of l at the junction and the tips, and of
    # (lambda, Q) at the junction
    worst, wit = math.inf, None
    for mode in model.modes:
        for j in net.edge_ids():
            ctrls = _sample_controls(model, mode, j, 7)
            for r, label in ((0.0, "junction"), (1.0, "tip")):
                vals = [model.cost(j, r, mode, a) for a in ctrls]
                m = 1e-12 - (max(vals) - min(vals))
                if m < worst:
                    worst, wit = m, {"mode": mode, "edge": j, "where": label}
            lams = [model.rate(j, 0.0, mode, a) for a in ctrls]
            rows = [np.asarray(model.qrow(j, 0.0, mode, a)) for a in ctrls]
            m = 1e-12 - (max(lams) - min(lams))
            spread = max(float(np.max(np.abs(r1 - rows[0]))) for r1 in rows)
            m = min(m, 1e-12 - spread)
            if m < worst:
                worst, wit = m, {"mode": mode, "edge": j, "where": "junction rate"}
    record("junction_coefficients_control_free", worst + tol, wit)

    # (12) antipodal pairs use identical control descriptions
    worst, wit = math.inf, None
    for j, jp in net.antipode.items():
        for mode in model.modes:
            same = model.control_segments(mode, j) == model.control_segments(mode, jp)
            m = 0.0 if same else -1.0
            if m < worst:
                worst, wit = m, {"mode": mode, "edges": (j, jp)}
    if net.antipode:
        record("antipodal_control_symmetry", worst, wit)

    return AuditReport(checks=checks)
