"""Trajectory simulation for controlled switched dynamics.

The deterministic flow integrates the scalar edge coordinate with a
classical fourth-order Runge-Kutta step.  Two refinements keep events
sharp: the step size is capped by a fraction of the distance to the
nearest boundary over the local speed (so the inward sqrt-type drifts
that reach the junction tangentially are resolved to full accuracy),
and transversal boundary crossings are localised by bisection in time.
Arrival at the junction hands control to the junction rule: the drift
there either vanishes (the state parks), points along some edge (the
flow continues on that edge, seamlessly crossing onto antipodal or
fictive continuations), or points off the network (the policy was
inadmissible).

Jumps ride on top of deterministic arcs by thinning against the declared
intensity bound; the post-jump mode is drawn from the switch kernel row.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (InadmissibleControl, LeftNetwork, NoJumpWithinArc,
                     OffNetwork, RateBoundViolated, StalledEvent)
from .model import PdmpModel
from .network import JUNCTION, NetworkPoint

CONTACT_TOL = 1e-13   # snap-to-boundary radius
EVENT_TIME_TOL = 1e-12
DRIFT_TOL = 1e-11     # |scalar drift| below this counts as parked


class RngStream:
    """Reproducible random stream: counter-based generator keyed by
    (seed, stream_id); distinct ids give statistically independent
    streams, identical ids reproduce the same draws."""

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        bitgen = np.random.Philox(np.random.SeedSequence((self.seed, self.stream_id)))
        self.gen = np.random.Generator(bitgen)

    def uniform(self, low=0.0, high=1.0):
        return float(self.gen.uniform(low, high))

    def exponential(self, scale=1.0):
        return float(self.gen.exponential(scale))

    def integers(self, low, high):
        return int(self.gen.integers(low, high))

    def pick_from_row(self, row) -> int:
        """Index drawn from a probability row by inverse transform."""
        cdf = np.cumsum(np.asarray(row, dtype=float))
        u = self.uniform(0.0, cdf[-1])
        return int(np.searchsorted(cdf, u, side="right").clip(0, len(cdf) - 1))


# ---------------------------------------------------------------------------
# policies
# ---------------------------------------------------------------------------

@dataclass
class Policy:
    """Control selection rule.

    open-loop: `schedule(x, mode)` returns (duration, control) segments,
    restarted from zero at every jump; the final segment lasts forever.
    feedback: `choose(x, mode)` is re-evaluated at every integration step.
    """
    kind: str
    schedule: Optional[Callable] = None
    choose: Optional[Callable] = None
    label: str = ""

    def segments_for(self, x: NetworkPoint, mode):
        segs = list(self.schedule(x, mode))
        if not segs:
            raise InadmissibleControl("empty control schedule")
        return segs


def constant_policy(control, label="const") -> Policy:
    return Policy(kind="open_loop", schedule=lambda x, m: [(math.inf, control)],
                  label=label)


def schedule_policy(segments, label="schedule") -> Policy:
    segs = [(float(d), c) for d, c in segments]
    return Policy(kind="open_loop", schedule=lambda x, m: segs, label=label)


def state_schedule_policy(fn, label="per-start schedule") -> Policy:
    return Policy(kind="open_loop", schedule=fn, label=label)


def feedback_policy(fn, label="feedback") -> Policy:
    return Policy(kind="feedback", choose=fn, label=label)


# ---------------------------------------------------------------------------
# deterministic arcs
# ---------------------------------------------------------------------------

@dataclass
class Arc:
    """One deterministic leg of motion in a fixed mode.

    Samples are stored per accepted integrator step: absolute time, edge
    id (JUNCTION while parked at O) and coordinate, plus the index of the
    control active on the interval starting at that sample.  v0s/v1s hold
    the scalar drift at the endpoints of each inter-sample interval (both
    under that interval's control), so states between samples come from
    cubic Hermite interpolation rather than chords.
    """
    mode: object
    t0: float
    t1: float
    times: np.ndarray
    edges: np.ndarray
    coords: np.ndarray
    ctrl_idx: np.ndarray
    controls: list
    v0s: np.ndarray = None
    v1s: np.ndarray = None
    events: list = field(default_factory=list)
    status: str = "completed"

    def _interval(self, t: float) -> int:
        k = int(np.searchsorted(self.times, t, side="right") - 1)
        return max(0, min(k, len(self.times) - 2)) if len(self.times) > 1 else 0

    def _interp(self, k: int, t: float):
        """(coord, speed) inside interval k by cubic Hermite."""
        t0, t1 = self.times[k], self.times[k + 1]
        dt = t1 - t0
        r0, r1 = float(self.coords[k]), float(self.coords[k + 1])
        if dt <= 0.0:
            return r1, 0.0
        v0, v1 = float(self.v0s[k]), float(self.v1s[k])
        s = (t - t0) / dt
        h00 = (2 * s - 3) * s * s + 1
        h10 = ((s - 2) * s + 1) * s
        h01 = (3 - 2 * s) * s * s
        h11 = (s - 1) * s * s
        r = h00 * r0 + h10 * dt * v0 + h01 * r1 + h11 * dt * v1
        d00 = 6 * s * (s - 1)
        d10 = (3 * s - 4) * s + 1
        d01 = -d00
        d11 = (3 * s - 2) * s
        v = d00 * r0 / dt + d10 * v0 + d01 * r1 / dt + d11 * v1
        return r, v

    def state_at(self, t: float) -> NetworkPoint:
        if len(self.times) == 1:
            e, r = int(self.edges[0]), float(self.coords[0])
        else:
            k = self._interval(t)
            if self.times[k + 1] == self.times[k] or self.edges[k] != self.edges[k + 1]:
                # zero-length or crossing interval: snap to nearest endpoint
                w = 0.0 if self.times[k + 1] == self.times[k] else \
                    (t - self.times[k]) / (self.times[k + 1] - self.times[k])
                j = k if w < 0.5 else k + 1
                e, r = int(self.edges[j]), float(self.coords[j])
            else:
                e = int(self.edges[k])
                r, _ = self._interp(k, t)
        if e == JUNCTION:
            return NetworkPoint(JUNCTION, 0.0)
        return NetworkPoint(e, max(r, 0.0))

    def control_at(self, t: float):
        k = int(np.searchsorted(self.times, t, side="right") - 1)
        k = max(0, min(k, len(self.ctrl_idx) - 1))
        return self.controls[int(self.ctrl_idx[k])]

    def truncate(self, t: float) -> "Arc":
        """Arc restricted to [t0, t] with an exact sample at t."""
        if t >= self.t1:
            return self
        keep = self.times <= t + 1e-15
        n = int(keep.sum())
        k = self._interval(t)
        if int(self.edges[k]) == int(self.edges[k + 1]) and self.times[k + 1] > self.times[k]:
            r_t, v_t = self._interp(k, t)
            e_t = int(self.edges[k])
        else:
            p = self.state_at(t)
            e_t, r_t, v_t = p.edge, p.coord, 0.0
        times = np.append(self.times[:n], t)
        edges = np.append(self.edges[:n], e_t).astype(np.int32)
        coords = np.append(self.coords[:n], max(r_t, 0.0))
        ctrl = np.append(self.ctrl_idx[:n],
                         self.ctrl_idx[min(k, len(self.ctrl_idx) - 1)]).astype(np.int32)
        v0 = np.append(self.v0s[:max(n - 1, 0)], self.v0s[k] if n >= 1 else 0.0)
        v1 = np.append(self.v1s[:max(n - 1, 0)], v_t)
        return Arc(mode=self.mode, t0=self.t0, t1=t, times=times, edges=edges,
                   coords=coords, ctrl_idx=ctrl, controls=self.controls,
                   v0s=v0, v1s=v1,
                   events=[e for e in self.events if e[1] <= t + 1e-15],
                   status="jump")


@dataclass
class Trajectory:
    x0: NetworkPoint
    mode0: object
    T: float
    arcs: list
    jumps: list            # (time, pre_mode, post_mode, NetworkPoint)
    truncated: bool = False

    @property
    def n_jumps(self) -> int:
        return len(self.jumps)

    def final_state(self):
        a = self.arcs[-1]
        return a.state_at(a.t1), a.mode

    def state_at(self, t: float):
        for a in self.arcs:
            if t <= a.t1 or a is self.arcs[-1]:
                return a.state_at(min(t, a.t1)), a.mode
        raise ValueError(f"time {t} beyond trajectory horizon")

    def to_csv(self) -> str:
        """Sample table: t, edge, coord, mode, control per row."""
        lines = ["t,edge,coord,mode,control"]
        for a in self.arcs:
            for i in range(len(a.times)):
                c = a.controls[int(a.ctrl_idx[i])]
                lines.append(f"{a.times[i]:.12g},{int(a.edges[i])},"
                             f"{a.coords[i]:.12g},{a.mode},\"{c}\"")
        return "\n".join(lines) + "\n"

    def discounted_cost(self, model: PdmpModel, horizon: float = None) -> float:
        """Integral of e^(-delta t) l along the path.

        The cost trace is taken piecewise linear between samples and the
        discount factor is integrated exactly per interval, so a constant
        cost c yields c(1-e^(-delta T))/delta to rounding regardless of
        the sampling step.
        """
        delta = model.delta
        T = self.T if horizon is None else horizon
        total = 0.0
        for a in self.arcs:
            if a.t0 >= T:
                break
            tsel = a.times <= T + 1e-15
            ts = a.times[tsel]
            if len(ts) < 2:
                continue
            vals = np.empty(len(ts))
            for i in range(len(ts)):
                e, r = int(a.edges[tsel][i]), float(a.coords[tsel][i])
                c = a.controls[int(a.ctrl_idx[tsel][i])]
                ee = e if e != JUNCTION else _any_control_edge(model, a.mode, c)
                vals[i] = model.cost(ee, r, a.mode, c)
            dt = np.diff(ts)
            live = dt > 0.0
            ea, eb = np.exp(-delta * ts[:-1]), np.exp(-delta * ts[1:])
            i0 = (ea - eb) / delta
            i1 = (i0 - dt * eb) / delta
            w1 = np.divide(i1, dt, out=np.zeros_like(dt), where=live)
            total += float(np.sum((vals[:-1] * (i0 - w1) + vals[1:] * w1)[live]))
        return total


def _any_control_edge(model, mode, a):
    for j in model.network.edge_ids():
        if model.admissible_on_edge(mode, j, a):
            return j
    raise InadmissibleControl(f"control {a} on no edge")


# ---------------------------------------------------------------------------
# the flow
# ---------------------------------------------------------------------------

def _rk4(model, edge, r, mode, a, dt):
    k1 = model.drift(edge, r, mode, a)
    k2 = model.drift(edge, r + 0.5 * dt * k1, mode, a)
    k3 = model.drift(edge, r + 0.5 * dt * k2, mode, a)
    k4 = model.drift(edge, r + dt * k3, mode, a)
    return r + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


def _bisect_hit(model, edge, r, mode, a, dt, target):
    """Time in (0, dt] at which the RK4 step from r reaches target."""
    lo, hi = 0.0, dt
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = _rk4(model, edge, r, mode, a, mid)
        if abs(val - target) < 1e-14:
            return mid
        crossed_lo = (val - target) * (r - target) <= 0.0
        if crossed_lo:
            hi = mid
        else:
            lo = mid
        if hi - lo < EVENT_TIME_TOL * max(1.0, dt):
            return hi
    raise StalledEvent(f"boundary localisation failed on edge {edge} at r={r}")


def flow(model: PdmpModel, x: NetworkPoint, mode, policy: Policy, T: float,
         h: float = 1e-3, stop_events=(), t0: float = 0.0) -> Arc:
    """Deterministic trajectory under a policy, from x over [t0, t0+T].

    stop_events may contain "junction" and/or "tip"; hitting such a
    boundary then ends the arc (status "hit_junction"/"hit_tip") instead
    of entering the junction rule or raising LeftNetwork.  Raises
    LeftNetwork when the policy pushes the state off the network and
    InadmissibleControl when a scheduled control is not admissible on the
    current edge.
    """
    if h <= 0:
        raise StalledEvent("step size must be positive")
    net = model.network
    t_end = t0 + T
    edge, r = x.edge, x.coord
    t = t0

    open_loop = policy.kind != "feedback"
    if open_loop:
        segs = policy.segments_for(x, mode)
        seg_bounds = []
        acc = t0
        for i, (dur, _) in enumerate(segs):
            acc = math.inf if i == len(segs) - 1 else acc + dur
            seg_bounds.append(acc)
        seg_i = 0

    controls, events = [], []
    times, edges, coords, ctrls = [], [], [], []
    iv0, iv1 = [], []
    current = None
    status = "completed"

    def point():
        return NetworkPoint(edge, r) if edge != JUNCTION else NetworkPoint(JUNCTION, 0.0)

    def set_control(c):
        nonlocal current
        if not controls or c != controls[-1]:
            controls.append(c)
        current = c
        if ctrls:
            # ctrl_idx labels the interval that STARTS at each sample; the
            # last pushed sample opens the step about to run under c
            ctrls[-1] = len(controls) - 1
        if edge != JUNCTION and not model.admissible_on_edge(mode, edge, c):
            raise InadmissibleControl(
                f"control {c} not admissible on edge {edge} (mode {mode})")

    def push(tt, ee, rr, v0=None, v1=None):
        # every sample after the first closes an interval
        if times:
            iv0.append(0.0 if v0 is None else float(v0))
            iv1.append(0.0 if v1 is None else float(v1))
        times.append(tt)
        edges.append(ee)
        coords.append(rr)
        ctrls.append(len(controls) - 1)

    if open_loop:
        set_control(segs[0][1])
    else:
        set_control(policy.choose(point(), mode))
    push(t, edge, r)

    guard, max_iter = 0, int(80 * (T / h + 10)) + 20000
    while t < t_end - 1e-15:
        guard += 1
        if guard > max_iter:
            raise StalledEvent("flow exceeded its iteration budget")

        if open_loop:
            while t >= seg_bounds[seg_i] - 1e-15:
                seg_i += 1
                set_control(segs[seg_i][1])
            seg_end = seg_bounds[seg_i]
        else:
            set_control(policy.choose(point(), mode))
            seg_end = t + h
        step_end = min(t_end, seg_end)

        if edge == JUNCTION:
            exit_edge = model.junction_exit_edge(mode, current)
            if exit_edge is None:
                t = step_end
                push(t, JUNCTION, 0.0, 0.0, 0.0)
            else:
                edge, r = exit_edge, 0.0
                events.append(("enter_edge", t, exit_edge))
                push(t, edge, 0.0, 0.0, 0.0)
            continue

        length = net.edge_length(edge)
        speed = model.drift(edge, r, mode, current)
        if abs(speed) <= DRIFT_TOL and (r <= CONTACT_TOL or r >= length - CONTACT_TOL):
            # parked on a boundary point with vanishing drift
            t = step_end
            push(t, edge, r, speed, speed)
            continue

        dist = r if speed < 0 else length - r
        cap = max(0.25 * dist / max(abs(speed), 1e-30), h / 32.0)
        dt = min(h, step_end - t, cap)
        r2 = _rk4(model, edge, r, mode, current, dt)

        if r2 < -1e-15 or r2 <= CONTACT_TOL:
            if r2 < -1e-15:
                dt = _bisect_hit(model, edge, r, mode, current, dt, 0.0)
            t += dt
            push(t, edge, 0.0, speed, model.drift(edge, 0.0, mode, current))
            events.append(("junction", t, edge))
            if "junction" in stop_events:
                status = "hit_junction"
                break
            edge, r = JUNCTION, 0.0
        elif r2 > length + 1e-15 or r2 >= length - CONTACT_TOL:
            if r2 > length + 1e-15:
                dt = _bisect_hit(model, edge, r, mode, current, dt, length)
            t += dt
            r = length
            out_speed = model.drift(edge, r, mode, current)
            push(t, edge, r, speed, out_speed)
            events.append(("tip", t, edge))
            if "tip" in stop_events:
                status = "hit_tip"
                break
            if out_speed > DRIFT_TOL:
                raise LeftNetwork(
                    f"drift {out_speed} points past the tip of edge {edge}")
        else:
            t += dt
            r = float(r2)
            push(t, edge, r, speed, model.drift(edge, r, mode, current))

    return Arc(mode=mode, t0=t0, t1=min(t, t_end), times=np.asarray(times),
               edges=np.asarray(edges, dtype=np.int32),
               coords=np.asarray(coords),
               ctrl_idx=np.asarray(ctrls, dtype=np.int32),
               controls=controls, v0s=np.asarray(iv0), v1s=np.asarray(iv1),
               events=events, status=status)


# ---------------------------------------------------------------------------
# jumps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JumpDraw:
    time: float
    point: NetworkPoint
    pre_mode: object
    post_mode: object


def sample_jump(model: PdmpModel, arc: Arc, rng: RngStream, *,
                bound: float = None, init_clock: float = 0.0):
    """First switching time along a deterministic arc, by thinning.

    Candidate times arrive as a Poisson stream of the declared intensity
    bound; each is accepted with probability rate/bound evaluated on the
    arc.  Returns a JumpDraw, or NoJumpWithinArc carrying the leftover
    candidate-clock overshoot so the stream continues across arcs without
    extra draws (keeps the draw sequence aligned when arcs are split).
    """
    lam_bar = model.constants.lam_bound if bound is None else float(bound)
    if lam_bar <= 0:
        return NoJumpWithinArc(0.0)
    t = arc.t0 + float(init_clock)
    pending = init_clock > 0.0   # candidate carried over from the previous arc
    while True:
        if not pending:
            t += rng.exponential(1.0 / lam_bar)
        pending = False
        if t >= arc.t1:
            return NoJumpWithinArc(t - arc.t1)
        p = arc.state_at(t)
        a = arc.control_at(t)
        edge = p.edge if not p.is_junction() else _any_control_edge(model, arc.mode, a)
        lam = model.rate(edge, p.coord, arc.mode, a)
        if lam > lam_bar * (1.0 + 1e-9):
            raise RateBoundViolated(
                f"rate {lam} exceeds declared bound {lam_bar} at {p}")
        if rng.uniform() * lam_bar <= lam:
            row = model.qrow(edge, p.coord, arc.mode, a)
            new_mode = model.modes[rng.pick_from_row(row)]
            return JumpDraw(time=t, point=p, pre_mode=arc.mode,
                            post_mode=new_mode)


def simulate(model: PdmpModel, x: NetworkPoint, mode, policy: Policy, T: float,
             rng: RngStream, h: float = 1e-3, max_jumps: int = 10000) -> Trajectory:
    """Switched trajectory on [0, T]: deterministic arcs glued at jumps.

    Open-loop schedules restart at each post-jump state.  When the jump
    cap is reached the remaining horizon is integrated deterministically
    (no further switches sampled) and the trajectory is flagged truncated.
    """
    arcs, jumps = [], []
    t, xx, mm = 0.0, x, mode
    truncated = False
    while t < T - 1e-15:
        arc = flow(model, xx, mm, policy, T - t, h=h, t0=t)
        if len(jumps) >= max_jumps:
            arcs.append(arc)
            truncated = True
            break
        d = sample_jump(model, arc, rng)
        if isinstance(d, NoJumpWithinArc):
            arcs.append(arc)
            break
        arcs.append(arc.truncate(d.time))
        jumps.append((d.time, d.pre_mode, d.post_mode, d.point))
        t, xx, mm = d.time, d.point, d.post_mode
    return Trajectory(x0=x, mode0=mode, T=T, arcs=arcs, jumps=jumps,
                      truncated=truncated)


# ---------------------------------------------------------------------------
# Monte Carlo estimators
# ---------------------------------------------------------------------------

@dataclass
class McResult:
    """Monte Carlo cost estimate over [0, T]; tail_bound dominates the
    discounted cost ignored beyond the truncation horizon."""
    mean: float
    stderr: float
    tail_bound: float
    n: int
    values: np.ndarray


def mc_cost(model: PdmpModel, x: NetworkPoint, mode, policy: Policy, T: float,
            n_paths: int, seed: int = 0, h: float = 1e-3,
            max_jumps: int = 10000) -> McResult:
    """Sample mean of the discounted cost over independent trajectories."""
    vals = np.empty(n_paths)
    for i in range(n_paths):
        rng = RngStream(seed, i)
        tr = simulate(model, x, mode, policy, T, rng, h=h, max_jumps=max_jumps)
        vals[i] = tr.discounted_cost(model)
    tail = model.constants.l_bound * math.exp(-model.delta * T) / model.delta
    return McResult(mean=float(vals.mean()),
                    stderr=float(vals.std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else math.inf,
                    tail_bound=tail, n=n_paths, values=vals)


@dataclass
class OccupationEstimate:
    """Discounted empirical occupation measure binned to a grid.

    atoms maps (node_index, mode_index, control_key) to a weight; the
    weights of a single path sum to 1 - e^(-delta T) before averaging
    (the measure is normalised by delta).  path_weights holds the
    per-path atom vectors so functional standard errors can be formed.
    """
    atoms: dict
    n_paths: int
    delta: float
    T: float
    path_values: list  # list of per-path {key: weight}

    def total_mass(self) -> float:
        return float(sum(self.atoms.values()))

    @property
    def mass_deficit(self) -> float:
        """Mass pushed beyond the truncation horizon: 1 - total as T grows."""
        return math.exp(-self.delta * self.T)

    def functional(self, coeff) -> tuple:
        """Mean and stderr of sum_k coeff(k) * mu(k) over paths."""
        per = np.array([sum(coeff(k) * w for k, w in pv.items())
                        for pv in self.path_values])
        return float(per.mean()), float(per.std(ddof=1) / math.sqrt(len(per)))

    def to_json(self) -> str:
        rows = [{"node": int(k[0]), "mode": int(k[1]), "control": str(k[2]),
                 "weight": w} for k, w in sorted(self.atoms.items(), key=str)]
        return json.dumps({"atoms": rows, "n_paths": self.n_paths,
                           "delta": self.delta, "horizon": self.T,
                           "mass_deficit": self.mass_deficit}, indent=1)


def mc_occupation(model: PdmpModel, x: NetworkPoint, mode, policy: Policy,
                  T: float, n_paths: int, grid, control_lookup,
                  seed: int = 0, h: float = 1e-3) -> OccupationEstimate:
    """Discounted occupation measure estimate binned to grid atoms.

    grid must provide nearest_node(edge, coord) -> node index (junction
    included); control_lookup(mode, edge, control) -> hashable key of the
    nearest discrete control.  Each sample interval [t, t+dt) contributes
    delta * int e^(-delta s) ds to its (node, mode, control) atom.
    """
    delta = model.delta
    atoms = {}
    path_values = []
    for i in range(n_paths):
        rng = RngStream(seed, i)
        tr = simulate(model, x, mode, policy, T, rng, h=h)
        mine = {}
        for a in tr.arcs:
            mi = model.mode_index(a.mode)
            ts = a.times
            if len(ts) < 2:
                continue
            wts = (np.exp(-delta * ts[:-1]) - np.exp(-delta * ts[1:]))
            for k in range(len(ts) - 1):
                if wts[k] <= 0.0:
                    continue
                e, r = int(a.edges[k]), float(a.coords[k])
                c = a.controls[int(a.ctrl_idx[k])]
                if e == JUNCTION:
                    e2, r2 = 0, 0.0
                    node = grid.nearest_node(0, 0.0)
                else:
                    node = grid.nearest_node(e, r)
                ck = control_lookup(a.mode, e, c)
                key = (node, mi, ck)
                mine[key] = mine.get(key, 0.0) + float(wts[k])
        path_values.append(mine)
        for k, w in mine.items():
            atoms[k] = atoms.get(k, 0.0) + w / n_paths
    return OccupationEstimate(atoms=atoms, n_paths=n_paths, delta=delta, T=T,
                              path_values=path_values)


# ---------------------------------------------------------------------------
# helpers used by tests and the projection machinery
# ---------------------------------------------------------------------------

def sample_states(arc: Arc, ts) -> list:
    return [arc.state_at(float(t)) for t in ts]


def random_open_loop(model: PdmpModel, x: NetworkPoint, mode, rng: RngStream,
                     n_segments: int = 4, mean_duration: float = 0.8,
                     horizon: float = None, h: float = 2e-3,
                     max_tries: int = 60) -> Policy:
    """Random admissible open-loop schedule from (x, mode).

    Controls are drawn from the admissible segments of the start edge (at
    the junction: of every edge); admissibility of the whole schedule is
    checked by replaying the deterministic flow, resampling on failure.
    """
    edges = [x.edge] if not x.is_junction() else list(model.network.edge_ids())
    pool = []
    for j in edges:
        for seg in model.control_segments(mode, j):
            pool.extend(seg.sample(9))
    pool = list(dict.fromkeys(pool))
    T = horizon if horizon is not None else n_segments * mean_duration
    for _ in range(max_tries):
        segs = []
        for _ in range(n_segments):
            dur = rng.exponential(mean_duration) + 0.05
            segs.append((dur, pool[rng.integers(0, len(pool))]))
        pol = schedule_policy(segs, label="random")
        try:
            flow(model, x, mode, pol, T, h=h)
            return pol
        except (LeftNetwork, InadmissibleControl, OffNetwork):
            continue
    raise StalledEvent("could not draw an admissible random schedule")
