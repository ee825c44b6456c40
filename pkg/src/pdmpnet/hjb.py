"""Value iteration for the discounted control problem on the network.

The state space is discretized into a grid of nodes per edge sharing a
single junction node, and the control sets into finite grids per declared
segment.  Everything rests on one explicit one-step scheme.  The residual
and duality checks elsewhere in the package are stated against the same
conventions, so they are frozen here:

    U(v, w)(x_i, gamma, a) = (1 - e^(-delta h))/delta * l(x_i, gamma, a)
        + e^(-delta h) * [ (1 - h lam) * I(v)(x_i + h f, gamma)
                           + h * sum_g' lam q(g') w(x_i, g') ]

where I interpolates linearly along the edge of the foot point and jumps
relocate mass across modes at the node itself.  At the junction an action
is a convex mixture of at most two edge-directed controls; the mixture
replaces the triple (f, l, lam q) by its convex combination and the foot
spreads additively over the first node of each participating edge,

    I(v)(O + h fbar) = v(O) + sum_j (h fbar_j / dx_j) * (v(n_j) - v(O)),

which is monotone as long as h |f|_0 <= dx_j / 2.  The inner fixed point
v = min_a U(v, w) is solved by policy iteration; the outer iteration
v_m = fix U(., v_{m-1}) contracts at rate lam/(lam + delta).

Steps must satisfy h * lam_bound < 1 and h * f_bound <= min dx / 2
(StepTooLarge otherwise).  Any solve stays below l_bound/delta + 1e-9 in
absolute value; ScaleViolated would mean a scheme bug, since the operator
only averages quantities below that level.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .errors import (MissingPrecondition, NoAdmissibleControl, ScaleViolated,
                     SchemeMismatch, StalledEvent, StepTooLarge)
from .model import ExtendedPdmpModel, PdmpModel, ShakenPdmpModel
from .network import JUNCTION, ExtendedNetwork, NetworkPoint, StarNetwork
from .simulate import RngStream, feedback_policy, random_open_loop, simulate

DX_DEFAULT = 0.02
MIX_WEIGHTS = (0.25, 0.5, 0.75)     # interior mixture weights; pures are separate
B_GRID = (-1.0, -0.5, 0.0, 0.5, 1.0)
TOL_INNER = 1e-8
TOL_OUTER = 1e-7
TIP_TOL = 1e-9          # admissibility margin for controls kept at an edge tip
POOL_TOL = 1e-12        # junction actions need outward speed above -POOL_TOL


# ---------------------------------------------------------------------------
# spatial grid
# ---------------------------------------------------------------------------

class Grid:
    """Nodes on the network: one shared junction node plus a ladder per edge.

    edge_coords maps edge id to the strictly increasing coordinates of its
    nodes, junction excluded, last one at the edge length.  Node 0 is the
    junction; edge nodes are numbered contiguously edge by edge.
    """

    def __init__(self, network: StarNetwork, edge_coords):
        self.network = network
        self.edge_coords = {}
        self.edge_nodes = {}
        self._c0 = {}
        self._n0 = {}
        node_edge = [JUNCTION]
        node_coord = [0.0]
        for j in sorted(edge_coords):
            c = np.asarray(edge_coords[j], dtype=float)
            if len(c) < 2:
                raise SchemeMismatch(f"edge {j}: need at least 2 nodes, got {len(c)}")
            if c[0] <= 0.0 or np.any(np.diff(c) <= 0.0):
                raise SchemeMismatch(f"edge {j}: coordinates must increase from above 0")
            if abs(c[-1] - network.edge_length(j)) > 1e-9:
                raise SchemeMismatch(
                    f"edge {j}: last node {c[-1]} misses the edge length "
                    f"{network.edge_length(j)}")
            ids = np.arange(len(node_coord), len(node_coord) + len(c))
            self.edge_coords[j] = c
            self.edge_nodes[j] = ids
            self._c0[j] = np.concatenate(([0.0], c))
            self._n0[j] = np.concatenate(([0], ids))
            node_edge.extend([j] * len(c))
            node_coord.extend(c.tolist())
        self.node_edge = np.array(node_edge, dtype=np.int64)
        self.node_coord = np.array(node_coord)
        self.n_nodes = len(node_edge)
        self.min_spacing = min(float(np.min(np.diff(self._c0[j])))
                               for j in self.edge_coords)

    def point(self, i: int) -> NetworkPoint:
        if i == 0:
            return NetworkPoint(JUNCTION, 0.0)
        return NetworkPoint(int(self.node_edge[i]), float(self.node_coord[i]))

    def first_node(self, edge: int) -> int:
        return int(self.edge_nodes[edge][0])

    def tip_node(self, edge: int) -> int:
        return int(self.edge_nodes[edge][-1])

    def spacing_at_junction(self, edge: int) -> float:
        return float(self.edge_coords[edge][0])

    def interp(self, edge: int, r: float):
        """Nodes and weights representing coordinate r on the given edge.

        Returns ((i0, i1), (w0, w1)); beyond the ladder the nearest end
        node carries all the weight.
        """
        c, n = self._c0[edge], self._n0[edge]
        if r <= 0.0:
            return (0, 0), (1.0, 0.0)
        if r >= c[-1]:
            return (int(n[-1]), int(n[-1])), (1.0, 0.0)
        k = int(np.searchsorted(c, r, side="right")) - 1
        w = (r - c[k]) / (c[k + 1] - c[k])
        return (int(n[k]), int(n[k + 1])), (1.0 - w, w)

    def nearest_node(self, edge: int, r: float) -> int:
        if edge == JUNCTION or r <= 0.0:
            return 0
        (i0, i1), (w0, w1) = self.interp(edge, r)
        return i0 if w0 >= w1 else i1

    def matches(self, other) -> bool:
        if self is other:
            return True
        if set(self.edge_coords) != set(other.edge_coords):
            return False
        return all(np.array_equal(self.edge_coords[j], other.edge_coords[j])
                   for j in self.edge_coords)


def make_grid(network: StarNetwork, dx: float = DX_DEFAULT) -> Grid:
    """Uniform ladder of spacing ~dx per edge.

    On an extended network the prolonged part of a real edge gets its own
    uniform ladder so that a node sits exactly at coordinate 1; the base
    restriction of an extended solve is then a plain subset of nodes.
    """
    if dx <= 0:
        raise SchemeMismatch(f"dx must be positive, got {dx}")
    coords = {}
    for j in network.edge_ids():
        length = network.edge_length(j)
        if isinstance(network, ExtendedNetwork) and not network.is_fictive(j):
            n1 = max(2, round(1.0 / dx))
            n2 = max(1, round((length - 1.0) / dx))
            coords[j] = np.concatenate([
                np.linspace(0.0, 1.0, n1 + 1)[1:],
                1.0 + np.linspace(0.0, length - 1.0, n2 + 1)[1:]])
        else:
            n = max(2, round(length / dx))
            coords[j] = np.linspace(0.0, length, n + 1)[1:]
    return Grid(network, coords)


# ---------------------------------------------------------------------------
# discrete control sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JunctionMove:
    """Admissible junction action: a convex mixture of at most two
    edge-directed controls with nonnegative outward speeds.

    weight applies to the first member; a single-member move is a pure
    branch (speed > 0) or a hold (speed 0).
    """
    edges: tuple
    controls: tuple
    speeds: tuple
    weight: float = 1.0

    @property
    def pure(self) -> bool:
        return len(self.edges) == 1

    def members(self):
        if self.pure:
            return ((self.edges[0], self.controls[0], self.speeds[0], 1.0),)
        return ((self.edges[0], self.controls[0], self.speeds[0], self.weight),
                (self.edges[1], self.controls[1], self.speeds[1], 1.0 - self.weight))


class DiscreteControlSet:
    """Finite control grid per (mode, edge) plus the junction action pool."""

    def __init__(self, on_edge, at_junction, label=""):
        self.on_edge = on_edge
        self.at_junction = at_junction
        self.label = label

    def edge_controls(self, mode, edge):
        return self.on_edge[(mode, edge)]

    def junction_moves(self, mode):
        return self.at_junction[mode]


def _junction_pool(model, mode, on_edge, mix_weights, mix_filter):
    pures = []
    seen_holds = set()
    for j in model.network.edge_ids():
        for a in on_edge[(mode, j)]:
            s = model.drift(j, 0.0, mode, a)
            if s < -POOL_TOL:
                continue
            s = max(s, 0.0)
            if s == 0.0:
                # a hold is its frozen coefficient triple; collapse repeats
                # no matter which control or edge produced them
                key = (model.cost(j, 0.0, mode, a), model.rate(j, 0.0, mode, a),
                       np.asarray(model.qrow(j, 0.0, mode, a)).tobytes())
                if key in seen_holds:
                    continue
                seen_holds.add(key)
            pures.append((j, a, s))
    if not pures:
        raise NoAdmissibleControl(f"mode {mode}: no junction action")
    moves = [JunctionMove((j,), (a,), (s,)) for j, a, s in pures]
    members = [m for m in pures if mix_filter(m[1])]
    for i, (j1, a1, s1) in enumerate(members):
        for j2, a2, s2 in members[i + 1:]:
            if j1 == j2:
                continue
            for w in mix_weights:
                moves.append(JunctionMove((j1, j2), (a1, a2), (s1, s2), w))
    return tuple(moves)


def discretize_controls(model: PdmpModel, n_per_segment: int = 9,
                        mix_weights=MIX_WEIGHTS, b_grid=None) -> DiscreteControlSet:
    """Finite control grids: n uniform samples per declared segment plus
    the distinguished controls, deduplicated in declaration order.

    For a shaken model every base control is paired with each displacement
    in b_grid (default B_GRID).  Junction mixtures only combine members
    with b in {-1, 0, 1}; intermediate displacements add nothing new at
    the junction but would square the pool size.
    """
    shaken = isinstance(model, ShakenPdmpModel)
    if b_grid is not None and not shaken:
        raise MissingPrecondition("b_grid only applies to a shaken model")
    if shaken and b_grid is None:
        b_grid = B_GRID
    on_edge = {}
    for mode in model.modes:
        for j in model.network.edge_ids():
            base = []
            for seg in model.control_segments(mode, j):
                base.extend(seg.sample(n_per_segment))
            d = model.distinguished(mode, j)
            for c in (d.outward, d.inward, d.null, d.tip):
                if c is None:
                    continue
                base.append(c[0] if shaken else c)
            uniq, seen = [], set()
            for a in base:
                if a not in seen:
                    seen.add(a)
                    uniq.append(a)
            if shaken:
                on_edge[(mode, j)] = tuple((a, b) for a in uniq for b in b_grid)
            else:
                on_edge[(mode, j)] = tuple(uniq)
    b_ends = (-1.0, 0.0, 1.0)
    mix_filter = (lambda a: a[1] in b_ends) if shaken else (lambda a: True)
    at_junction = {mode: _junction_pool(model, mode, on_edge, mix_weights, mix_filter)
                   for mode in model.modes}
    label = f"{model.name}:n{n_per_segment}:w{len(mix_weights)}"
    if shaken:
        label += f":b{len(b_grid)}"
    return DiscreteControlSet(on_edge, at_junction, label)


# ---------------------------------------------------------------------------
# the scheme
# ---------------------------------------------------------------------------

class Scheme:
    """Assembled one-step operator on a (grid, control set) pair.

    Rows are (state, action) pairs grouped by state s = mode_index *
    n_nodes + node; starts[s]:starts[s+1] delimits the block of state s.
    foot_state/foot_w hold up to three interpolation targets within the
    row's own mode, jump_w holds the lam*q vector applied at the same
    node across modes.
    """

    def __init__(self, model, grid, controls, h, modes, include_jumps):
        self.model = model
        self.grid = grid
        self.controls = controls
        self.h = float(h)
        self.modes = tuple(modes)
        self.include_jumps = include_jumps
        self.n_nodes = grid.n_nodes
        self.n_states = len(self.modes) * grid.n_nodes
        cs = model.constants
        if self.h * cs.lam_bound >= 1.0 and include_jumps:
            raise StepTooLarge(f"h*lam_bound = {self.h * cs.lam_bound:.3g} >= 1")
        if self.h * cs.f_bound > grid.min_spacing / 2.0 + 1e-12:
            raise StepTooLarge(
                f"h*f_bound = {self.h * cs.f_bound:.3g} exceeds half the grid "
                f"spacing {grid.min_spacing / 2.0:.3g}")
        self.beta_h = math.exp(-model.delta * self.h)
        self.c_run = (1.0 - self.beta_h) / model.delta
        self._assemble()

    # -- assembly ----------------------------------------------------------

    def _assemble(self):
        model, grid, h = self.model, self.grid, self.h
        n_modes = len(self.modes)
        starts = [0]
        cost, rate, drift = [], [], []
        foot_state, foot_w, jump_w, actions = [], [], [], []

        def edge_row(mi, node, j, r, a):
            s = model.drift(j, r, self.modes[mi], a)
            (i0, i1), (w0, w1) = grid.interp(j, min(max(r + h * s, 0.0), grid._c0[j][-1]))
            base = mi * self.n_nodes
            foot_state.append((base + i0, base + i1, base + i0))
            foot_w.append((w0, w1, 0.0))
            cost.append(model.cost(j, r, self.modes[mi], a))
            if self.include_jumps:
                lam = model.rate(j, r, self.modes[mi], a)
                jump_w.append(lam * self._qrow(j, r, mi, a))
            else:
                lam = 0.0
                jump_w.append(np.zeros(n_modes))
            rate.append(lam)
            drift.append(s)
            actions.append(("edge", j, a))

        def junction_row(mi, move):
            base = mi * self.n_nodes
            fs, fw = [base], [1.0]
            lbar, lam = 0.0, 0.0
            jrow = np.zeros(n_modes)
            for j, a, s, w in move.members():
                dxj = grid.spacing_at_junction(j)
                fs.append(base + grid.first_node(j))
                fw.append(w * h * s / dxj)
                fw[0] -= w * h * s / dxj
                lbar += w * model.cost(j, 0.0, self.modes[mi], a)
                if self.include_jumps:
                    lj = model.rate(j, 0.0, self.modes[mi], a)
                    lam += w * lj
                    jrow += w * lj * self._qrow(j, 0.0, mi, a)
            while len(fs) < 3:
                fs.append(base)
                fw.append(0.0)
            foot_state.append(tuple(fs))
            foot_w.append(tuple(fw))
            cost.append(lbar)
            rate.append(lam)
            jump_w.append(jrow)
            drift.append(0.0)
            actions.append(("junction", move))

        for mi, mode in enumerate(self.modes):
            for node in range(self.n_nodes):
                if node == 0:
                    for move in self.controls.junction_moves(mode):
                        junction_row(mi, move)
                else:
                    j = int(grid.node_edge[node])
                    r = float(grid.node_coord[node])
                    pool = self.controls.edge_controls(mode, j)
                    if node == grid.tip_node(j):
                        pool = [a for a in pool
                                if model.drift(j, r, mode, a) <= TIP_TOL]
                        if not pool:
                            raise NoAdmissibleControl(
                                f"edge {j}, mode {mode}: no admissible control "
                                f"at the tip")
                    for a in pool:
                        edge_row(mi, node, j, r, a)
                if len(cost) == starts[-1]:
                    raise NoAdmissibleControl(
                        f"state (node {node}, mode {mode}) has no action")
                starts.append(len(cost))

        self.starts = np.array(starts, dtype=np.int64)
        self.cost = np.array(cost)
        self.rate = np.array(rate)
        self.row_drift = np.array(drift)
        self.foot_state = np.array(foot_state, dtype=np.int64)
        self.foot_w = np.array(foot_w)
        self.jump_w = np.array(jump_w)
        self.actions = actions
        self.node_of_row = np.repeat(
            np.tile(np.arange(self.n_nodes), len(self.modes)), np.diff(self.starts))
        self.n_rows = len(cost)

    def _qrow(self, j, r, mi, a):
        q = np.asarray(self.model.qrow(j, r, self.modes[mi], a), dtype=float)
        if len(q) != len(self.modes):
            # single-mode slices still consult the full q matrix
            full = {m: k for k, m in enumerate(self.model.modes)}
            q = q[[full[m] for m in self.modes]]
        return q

    # -- sweeps --------------------------------------------------------------

    def jump_extra(self, v_prev_flat):
        """Row vector beta*h*(lam q . v_prev) evaluated at each row's node."""
        vmat = v_prev_flat.reshape(len(self.modes), self.n_nodes)
        at_node = vmat[:, self.node_of_row]            # (n_modes, n_rows)
        return self.beta_h * self.h * np.einsum("rm,mr->r", self.jump_w, at_node)

    def row_values(self, v_flat, jump_term):
        iv = (self.foot_w * v_flat[self.foot_state]).sum(axis=1)
        return (self.c_run * self.cost
                + self.beta_h * (1.0 - self.h * self.rate) * iv + jump_term)

    def block_min(self, u):
        return np.minimum.reduceat(u, self.starts[:-1])

    def block_argmin(self, u):
        rows = np.empty(self.n_states, dtype=np.int64)
        s = self.starts
        for k in range(self.n_states):
            rows[k] = s[k] + int(np.argmin(u[s[k]:s[k + 1]]))
        return rows

    def policy_value(self, rows, jump_term):
        """Exact value of a stationary row choice for the inner problem."""
        n = self.n_states
        w = self.beta_h * (1.0 - self.h * self.rate[rows])
        data = (w[:, None] * self.foot_w[rows]).ravel()
        cols = self.foot_state[rows].ravel()
        rix = np.repeat(np.arange(n), 3)
        a = sparse.identity(n, format="csr") \
            - sparse.coo_matrix((data, (rix, cols)), shape=(n, n)).tocsr()
        rhs = self.c_run * self.cost[rows] + jump_term[rows]
        return spsolve(a, rhs)


_SCHEME_CACHE = {}


def build_scheme(model, grid, controls, h, modes=None, include_jumps=True) -> Scheme:
    modes = tuple(model.modes if modes is None else modes)
    key = (id(model), id(grid), id(controls), float(h), modes, include_jumps)
    sc = _SCHEME_CACHE.get(key)
    if sc is not None and sc.model is model and sc.grid is grid \
            and sc.controls is controls:
        return sc
    sc = Scheme(model, grid, controls, h, modes, include_jumps)
    if len(_SCHEME_CACHE) >= 24:
        _SCHEME_CACHE.clear()
    _SCHEME_CACHE[key] = sc
    return sc


# ---------------------------------------------------------------------------
# value fields
# ---------------------------------------------------------------------------

@dataclass
class ValueField:
    """Values on (grid node, mode) pairs with edgewise linear interpolation."""
    grid: Grid
    modes: tuple
    values: np.ndarray                  # (n_nodes, n_modes)
    meta: dict = field(default_factory=dict)

    def mode_pos(self, mode) -> int:
        return self.modes.index(mode)

    def flat(self) -> np.ndarray:
        return self.values.T.ravel()

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def value_at(self, point: NetworkPoint, mode) -> float:
        mi = self.mode_pos(mode)
        if point.is_junction():
            return float(self.values[0, mi])
        (i0, i1), (w0, w1) = self.grid.interp(point.edge, point.coord)
        return float(w0 * self.values[i0, mi] + w1 * self.values[i1, mi])

    def on_edge(self, edge: int, mode) -> np.ndarray:
        """Values along one edge, junction node first."""
        mi = self.mode_pos(mode)
        return self.values[self.grid._n0[edge], mi]

    def to_csv(self) -> str:
        lines = ["edge,coord,mode,value"]
        for i in range(self.grid.n_nodes):
            for mi, m in enumerate(self.modes):
                lines.append(f"{int(self.grid.node_edge[i])},"
                             f"{float(self.grid.node_coord[i]):.12g},"
                             f"\"{m}\",{self.values[i, mi]:.12g}")
        return "\n".join(lines) + "\n"


def _from_flat(grid, modes, v_flat, meta) -> ValueField:
    vals = v_flat.reshape(len(modes), grid.n_nodes).T.copy()
    return ValueField(grid, tuple(modes), vals, meta)


def _check_scale(model, v_flat):
    lim = model.constants.l_bound / model.delta + 1e-9
    top = float(np.max(np.abs(v_flat)))
    if top > lim:
        raise ScaleViolated(f"|v| = {top:.6g} exceeds l_bound/delta = {lim:.6g}")


def _default_h(model, grid):
    return grid.min_spacing / (2.0 * max(model.constants.f_bound, 1e-12))


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------

def _solve_inner(scheme, jump_term, v0, tol):
    """Fixed point of v = min_a [run cost + beta (1-lam h) I(v) + jump_term]."""
    v = v0
    rows_prev = None
    for _ in range(80):
        rows = scheme.block_argmin(scheme.row_values(v, jump_term))
        v = scheme.policy_value(rows, jump_term)
        if rows_prev is not None and np.array_equal(rows, rows_prev):
            break
        rows_prev = rows
    for _ in range(200000):
        m = scheme.block_min(scheme.row_values(v, jump_term))
        if float(np.max(np.abs(m - v))) <= tol:
            return m
        v = m
    raise StalledEvent("inner value iteration failed to reach tolerance")


def solve_deterministic(model: PdmpModel, mode, grid: Grid = None,
                        controls: DiscreteControlSet = None, h: float = None,
                        tol: float = TOL_INNER) -> ValueField:
    """Value of the jump-free problem frozen in one mode (lam forced to 0)."""
    grid = make_grid(model.network) if grid is None else grid
    controls = discretize_controls(model) if controls is None else controls
    h = _default_h(model, grid) if h is None else h
    scheme = build_scheme(model, grid, controls, h, modes=(mode,),
                          include_jumps=False)
    v = _solve_inner(scheme, np.zeros(scheme.n_rows), np.zeros(scheme.n_states), tol)
    _check_scale(model, v)
    meta = {"h": h, "dx": grid.min_spacing, "controls": controls.label,
            "mode": mode, "deterministic": True}
    return _from_flat(grid, (mode,), v, meta)


def bellman_jump_operator(model: PdmpModel, v_prev: ValueField, grid: Grid = None,
                          controls: DiscreteControlSet = None, h: float = None,
                          tol: float = TOL_INNER) -> ValueField:
    """One outer step: the value with jump targets frozen at v_prev."""
    grid = v_prev.grid if grid is None else grid
    if not v_prev.grid.matches(grid):
        raise SchemeMismatch("v_prev lives on a different grid")
    if tuple(v_prev.modes) != tuple(model.modes):
        raise SchemeMismatch("v_prev modes do not match the model")
    controls = discretize_controls(model) if controls is None else controls
    h = _default_h(model, grid) if h is None else h
    scheme = build_scheme(model, grid, controls, h)
    vp = v_prev.flat()
    v = _solve_inner(scheme, scheme.jump_extra(vp), vp.copy(), tol)
    _check_scale(model, v)
    meta = {"h": h, "dx": grid.min_spacing, "controls": controls.label}
    return _from_flat(grid, model.modes, v, meta)


def solve_value(model: PdmpModel, grid: Grid = None,
                controls: DiscreteControlSet = None, h: float = None,
                tol_outer: float = TOL_OUTER, inner_tol: float = TOL_INNER,
                max_outer: int = 600, v0: np.ndarray = None) -> ValueField:
    """Iterate the jump operator from v = 0 until the sup increment
    falls below tol_outer.  meta records the increment history."""
    grid = make_grid(model.network) if grid is None else grid
    controls = discretize_controls(model) if controls is None else controls
    h = _default_h(model, grid) if h is None else h
    scheme = build_scheme(model, grid, controls, h)
    v_prev = np.zeros(scheme.n_states) if v0 is None else np.asarray(v0, dtype=float)
    increments = []
    for _ in range(max_outer):
        v = _solve_inner(scheme, scheme.jump_extra(v_prev), v_prev.copy(), inner_tol)
        inc = float(np.max(np.abs(v - v_prev)))
        increments.append(inc)
        v_prev = v
        if inc < tol_outer:
            break
    else:
        raise StalledEvent(
            f"outer iteration still above {tol_outer} after {max_outer} steps")
    _check_scale(model, v_prev)
    meta = {"h": h, "dx": grid.min_spacing, "controls": controls.label,
            "model": model.name, "outer_iterations": len(increments),
            "increments": increments, "tol_outer": tol_outer}
    return _from_flat(grid, model.modes, v_prev, meta)


@dataclass(frozen=True)
class ExtendedSolution:
    extended: ValueField
    restricted: ValueField


def solve_value_extended(model, grid: Grid = None,
                         controls: DiscreteControlSet = None, h: float = None,
                         tol_outer: float = TOL_OUTER,
                         inner_tol: float = TOL_INNER) -> ExtendedSolution:
    """Solve on the extended network and restrict to the base edges.

    Works for an extended model or any of its shaken variants; the base
    ladder is a leading subset of the extended one, so the restriction
    copies node values without interpolation.
    """
    if isinstance(model, ShakenPdmpModel):
        base_net = model.xmodel.base_model.network
    elif isinstance(model, ExtendedPdmpModel):
        base_net = model.base_model.network
    else:
        raise MissingPrecondition("needs a model on the extended network")
    fld = solve_value(model, grid=grid, controls=controls, h=h,
                      tol_outer=tol_outer, inner_tol=inner_tol)
    xg = fld.grid
    bgrid = make_grid(base_net, dx=float(xg.edge_coords[1][0]))
    vals = np.empty((bgrid.n_nodes, len(fld.modes)))
    vals[0] = fld.values[0]
    for j in base_net.edge_ids():
        bc = bgrid.edge_coords[j]
        if not np.array_equal(xg.edge_coords[j][:len(bc)], bc):
            raise SchemeMismatch(
                f"edge {j}: extended ladder does not refine the base ladder")
        vals[bgrid.edge_nodes[j]] = fld.values[xg.edge_nodes[j][:len(bc)]]
    meta = dict(fld.meta)
    meta["epsilon"] = getattr(model, "epsilon", None)
    meta["rho"] = getattr(model, "rho", 0.0)
    restricted = ValueField(bgrid, fld.modes, vals, meta)
    return ExtendedSolution(fld, restricted)


# ---------------------------------------------------------------------------
# greedy feedback
# ---------------------------------------------------------------------------

def greedy_feedback_policy(model: PdmpModel, fld: ValueField,
                           controls: DiscreteControlSet = None, h: float = None,
                           label: str = "greedy"):
    """Feedback policy reading the argmin row of the scheme at the nearest
    node.  Junction states are restricted to pure moves so the choice is
    realizable pathwise; interior points never snap onto the junction."""
    grid = fld.grid
    controls = discretize_controls(model) if controls is None else controls
    h = _default_h(model, grid) if h is None else h
    scheme = build_scheme(model, grid, controls, h)
    if tuple(fld.modes) != scheme.modes:
        raise SchemeMismatch("field modes do not match the model")
    v = fld.flat()
    u = scheme.row_values(v, scheme.jump_extra(v))
    table = []
    for s in range(scheme.n_states):
        lo, hi = scheme.starts[s], scheme.starts[s + 1]
        best, best_a = math.inf, None
        for r in range(lo, hi):
            kind = scheme.actions[r][0]
            if kind == "junction" and not scheme.actions[r][1].pure:
                continue
            if u[r] < best:
                best = u[r]
                act = scheme.actions[r]
                best_a = act[2] if kind == "edge" else act[1].controls[0]
        table.append(best_a)
    n_nodes = grid.n_nodes
    mode_pos = {m: i for i, m in enumerate(scheme.modes)}

    def choose(p, mode):
        if p.is_junction():
            i = 0
        else:
            i = grid.nearest_node(p.edge, p.coord)
            if i == 0:
                i = grid.first_node(p.edge)
        return table[mode_pos[mode] * n_nodes + i]

    return feedback_policy(choose, label=label)


# ---------------------------------------------------------------------------
# dynamic programming residual
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DppPoint:
    point: NetworkPoint
    mode: object
    value: float
    rhs: float
    residual: float
    stderr: float
    policy: str


def dpp_residual(model: PdmpModel, fld: ValueField, points, T: float = 0.5,
                 n_paths: int = 60, n_policies: int = 4, seed: int = 0,
                 h: float = 2e-3, controls: DiscreteControlSet = None,
                 step: float = None):
    """Monte Carlo check of the one-jump programming identity.

    For each (point, mode) the right side is the best sampled policy's
    estimate of the cost up to T or the first jump plus the discounted
    field value there.  The candidate pool is the greedy feedback policy
    of the field plus n_policies random open-loop controls; residuals are
    |v - rhs| with the standard error of the winning estimate.
    """
    controls = discretize_controls(model) if controls is None else controls
    greedy = greedy_feedback_policy(model, fld, controls=controls, h=step)
    delta = model.delta
    out = []
    ctr = 0
    for p, mode in points:
        cands = [greedy]
        for _ in range(n_policies):
            ctr += 1
            try:
                cands.append(random_open_loop(
                    model, p, mode, RngStream(seed, 900000 + ctr),
                    n_segments=3, mean_duration=max(T / 2.0, 0.1), horizon=T, h=h))
            except NoAdmissibleControl:
                continue
        best = None
        for pol in cands:
            vals = np.empty(n_paths)
            for k in range(n_paths):
                ctr += 1
                tr = simulate(model, p, mode, pol, T, RngStream(seed, ctr),
                              h=h, max_jumps=1)
                if tr.n_jumps:
                    t1, _, post, pt = tr.jumps[0]
                    vals[k] = (tr.discounted_cost(model, horizon=t1)
                               + math.exp(-delta * t1) * fld.value_at(pt, post))
                else:
                    xT, mT = tr.final_state()
                    vals[k] = (tr.discounted_cost(model)
                               + math.exp(-delta * T) * fld.value_at(xT, mT))
            m = float(vals.mean())
            se = float(vals.std(ddof=1) / math.sqrt(n_paths))
            if best is None or m < best[0]:
                best = (m, se, pol.label)
        lhs = fld.value_at(p, mode)
        out.append(DppPoint(point=p, mode=mode, value=lhs, rhs=best[0],
                            residual=abs(lhs - best[0]), stderr=best[1],
                            policy=best[2]))
    return out


# ---------------------------------------------------------------------------
# equation residual
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResidualReport:
    """Upwind residual R = delta v + sup_a { -f.Dv - l - lam q.(v' - v) }.

    A subsolution needs R <= 0 everywhere, a supersolution R >= 0 away
    from the junction; the junction's negative part is reported separately
    because the relaxed dynamics only requires the subsolution half there.
    """
    residuals: np.ndarray           # (n_nodes, n_modes)
    sub_violation: float
    super_violation: float
    junction_super: float
    sub_witness: tuple
    super_witness: tuple

    @property
    def max_violation(self) -> float:
        return max(self.sub_violation, self.super_violation)


def hjb_residual(model: PdmpModel, fld: ValueField,
                 controls: DiscreteControlSet = None,
                 h: float = None) -> ResidualReport:
    grid = fld.grid
    controls = discretize_controls(model) if controls is None else controls
    h = _default_h(model, grid) if h is None else h
    scheme = build_scheme(model, grid, controls, h)
    if tuple(fld.modes) != scheme.modes:
        raise SchemeMismatch("field modes do not match the model")
    vals = fld.values
    n_modes = len(scheme.modes)
    # one-sided slopes per (edge, mode): slope[k] spans local nodes k..k+1
    slopes = {}
    local_of = {}
    for j in grid.edge_coords:
        n0 = grid._n0[j]
        dc = np.diff(grid._c0[j])
        slopes[j] = {mi: np.diff(vals[n0, mi]) / dc for mi in range(n_modes)}
        for k, i in enumerate(n0):
            local_of[int(i)] = (j, k)

    res = np.empty((grid.n_nodes, n_modes))
    for s in range(scheme.n_states):
        node = s % grid.n_nodes
        mi = s // grid.n_nodes
        vhere = vals[node, mi]
        jump_base = vals[node, :]
        best = -math.inf
        for r in range(scheme.starts[s], scheme.starts[s + 1]):
            act = scheme.actions[r]
            if act[0] == "edge":
                j, k = local_of[node]
                sl = slopes[j][mi]
                sd = scheme.row_drift[r]
                if sd > 0.0 and k < len(sl):
                    adv = sd * sl[k]
                else:
                    adv = sd * sl[k - 1]
            else:
                adv = 0.0
                for j, _, sp, w in act[1].members():
                    adv += w * sp * slopes[j][mi][0]
            jdiff = float(scheme.jump_w[r] @ jump_base) - scheme.rate[r] * vhere
            term = -adv - scheme.cost[r] - jdiff
            if term > best:
                best = term
        res[node, mi] = model.delta * vhere + best

    sub_i = int(np.argmax(res))
    sub_witness = (int(sub_i // n_modes), int(sub_i % n_modes))
    sub_violation = max(0.0, float(res.max()))
    off = res[1:, :]
    sup_i = int(np.argmin(off))
    super_witness = (1 + int(sup_i // n_modes), int(sup_i % n_modes))
    super_violation = max(0.0, -float(off.min()))
    junction_super = max(0.0, -float(res[0, :].min()))
    return ResidualReport(res, sub_violation, super_violation, junction_super,
                          sub_witness, super_witness)
