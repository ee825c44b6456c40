"""Star-shaped networks of unit segments glued at a common junction.

A network is a finite union of segments [0,1]·e_j in R^m sharing the
origin O.  Points are stored edge-wise as (edge index, scalar coordinate);
embedding into R^m happens only when a model has to evaluate coefficients.
Edges whose opposite direction is also an edge ("antipodal pairs") form
straight lines through the junction; trajectories cross O seamlessly
along them.  The extension operation appends, for every edge without an
antipode, a short fictive edge in the opposite direction, and prolongs
every edge a little beyond its tip.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadDimension, BadEpsilon, DuplicateDirection, OffNetwork

JUNCTION = 0          # reserved edge tag for the junction point O
COORD_TOL = 1e-12     # canonicalisation tolerance for coordinates
DIRECTION_TOL = 1e-9  # tolerance for comparing unit directions


@dataclass(frozen=True)
class NetworkPoint:
    """A point on the network: edge index (1-based) and coordinate r >= 0.

    The junction is the unique point with edge == JUNCTION and coord 0.
    """
    edge: int
    coord: float

    def is_junction(self) -> bool:
        return self.edge == JUNCTION


O = NetworkPoint(JUNCTION, 0.0)


@dataclass(frozen=True)
class StarNetwork:
    """Union of N unit segments [0,1]e_j glued at the origin.

    directions has shape (N, m), row j-1 holding the unit vector e_j.
    Edges are ordered so that the M antipode-free ones come first.
    antipode maps edge index -> opposite edge index (symmetric, partial).
    """
    directions: np.ndarray
    antipode: dict
    n_free: int           # M, number of edges with no antipodal partner

    @property
    def n_edges(self) -> int:
        return self.directions.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.directions.shape[1]

    def edge_ids(self):
        return range(1, self.n_edges + 1)

    def direction(self, edge: int) -> np.ndarray:
        return self.directions[edge - 1]

    def edge_length(self, edge: int) -> float:
        return 1.0

    def continuation(self, edge: int):
        """Edge carrying the continuation of edge's line through O, or None."""
        return self.antipode.get(edge)

    def embed(self, p: NetworkPoint) -> np.ndarray:
        if p.is_junction():
            return np.zeros(self.ambient_dim)
        return p.coord * self.direction(p.edge)


@dataclass(frozen=True)
class ExtendedNetwork(StarNetwork):
    """Extension of a star network by epsilon.

    Base edges keep their indices and are prolonged to length 1+epsilon.
    Every antipode-free base edge j <= M gains a fictive edge with index
    j + N, direction -e_j and length epsilon; the fictive edge continues
    edge j's line through O on the far side.
    """
    base: StarNetwork = None
    epsilon: float = 0.0

    @property
    def n_base_edges(self) -> int:
        return self.base.n_edges

    def is_fictive(self, edge: int) -> bool:
        return edge > self.base.n_edges

    def edge_length(self, edge: int) -> float:
        if self.is_fictive(edge):
            return self.epsilon
        return 1.0 + self.epsilon

    def base_edge(self, edge: int) -> int:
        """Base edge whose line this edge lies on (identity for real edges)."""
        if self.is_fictive(edge):
            return edge - self.base.n_edges
        return edge


def make_network(directions) -> StarNetwork:
    """Build a star network from a list of direction vectors.

    Directions are normalised to unit length.  Vectors shorter than the
    direction tolerance, duplicate directions, or mixed ambient dimensions
    are rejected.  Edges are reordered (stably) so that all antipode-free
    edges come first; within each group the input order is kept.
    """
    vecs = [np.asarray(d, dtype=float) for d in directions]
    if not vecs:
        raise BadDimension("need at least one edge direction")
    m = vecs[0].shape
    if len(m) != 1:
        raise BadDimension("directions must be 1-d vectors")
    for v in vecs:
        if v.shape != m:
            raise BadDimension(f"mixed ambient dimensions: {v.shape} vs {m}")
    units = []
    for v in vecs:
        norm = float(np.linalg.norm(v))
        if norm < DIRECTION_TOL:
            raise DuplicateDirection("zero-length direction vector")
        units.append(v / norm)
    for i in range(len(units)):
        for k in range(i + 1, len(units)):
            if np.linalg.norm(units[i] - units[k]) < DIRECTION_TOL:
                raise DuplicateDirection(
                    f"directions {i} and {k} coincide after normalisation")

    # pair up antipodes on the raw ordering, then stably reorder
    n = len(units)
    raw_partner = [None] * n
    for i in range(n):
        for k in range(n):
            if k != i and np.linalg.norm(units[i] + units[k]) < DIRECTION_TOL:
                raw_partner[i] = k
    free = [i for i in range(n) if raw_partner[i] is None]
    paired = [i for i in range(n) if raw_partner[i] is not None]
    order = free + paired
    pos = {raw: new for new, raw in enumerate(order)}  # raw idx -> 0-based new idx
    arr = np.vstack([units[i] for i in order])
    antipode = {}
    for raw in paired:
        antipode[pos[raw] + 1] = pos[raw_partner[raw]] + 1
    net = StarNetwork(directions=arr, antipode=antipode, n_free=len(free))
    arr.setflags(write=False)
    return net


def extend(net: StarNetwork, epsilon: float) -> ExtendedNetwork:
    """Extended network with fictive edges and prolonged tips."""
    if isinstance(net, ExtendedNetwork):
        raise BadEpsilon("network is already extended")
    if not (0.0 < epsilon < 1.0):
        raise BadEpsilon(f"epsilon must lie in (0,1), got {epsilon}")
    n = net.n_edges
    fict = [-net.direction(j) for j in range(1, net.n_free + 1)]
    if fict:
        dirs = np.vstack([net.directions, np.vstack(fict)])
    else:
        dirs = net.directions.copy()
    antipode = dict(net.antipode)
    for j in range(1, net.n_free + 1):
        antipode[j] = j + n
        antipode[j + n] = j
    dirs.setflags(write=False)
    return ExtendedNetwork(directions=dirs, antipode=antipode,
                           n_free=net.n_free, base=net, epsilon=epsilon)


def canonical_point(net: StarNetwork, edge: int, coord: float) -> NetworkPoint:
    """Canonical representative of a point given in signed edge coordinates.

    Coordinates within the junction tolerance collapse to O.  Negative
    coordinates are re-expressed on the continuation edge when the line
    continues through O; otherwise they are off the network.  Coordinates
    beyond the edge length (within tolerance) snap to the tip.
    """
    if edge == JUNCTION:
        if abs(coord) > COORD_TOL:
            raise OffNetwork("junction point with nonzero coordinate")
        return O
    if not (1 <= edge <= net.n_edges):
        raise OffNetwork(f"no edge {edge}")
    if abs(coord) <= COORD_TOL:
        return O
    if coord < 0.0:
        cont = net.continuation(edge)
        if cont is None:
            raise OffNetwork(
                f"negative coordinate {coord} on edge {edge} with no continuation")
        return canonical_point(net, cont, -coord)
    length = net.edge_length(edge)
    if coord > length:
        if coord <= length + COORD_TOL:
            return NetworkPoint(edge, length)
        raise OffNetwork(f"coordinate {coord} beyond edge {edge} of length {length}")
    return NetworkPoint(edge, float(coord))


def geodesic_distance(net: StarNetwork, p: NetworkPoint, q: NetworkPoint) -> float:
    """Shortest path length along the network between p and q."""
    if p.is_junction():
        return q.coord
    if q.is_junction():
        return p.coord
    if p.edge == q.edge:
        return abs(p.coord - q.coord)
    return p.coord + q.coord


def project_to_network(net: StarNetwork, y) -> NetworkPoint:
    """Metric projection of y in R^m onto the network.

    Ties within 1e-12 in squared distance are broken by lowest edge
    index, then by the coordinate closest to 0.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (net.ambient_dim,):
        raise BadDimension(f"point has shape {y.shape}, ambient dim {net.ambient_dim}")
    yy = float(y @ y)
    best = None  # (dist2, edge, t)
    for j in net.edge_ids():
        raw = float(y @ net.direction(j))
        t = min(max(raw, 0.0), net.edge_length(j))
        d2 = yy - 2.0 * t * raw + t * t
        # ascending edge order + strict-improvement threshold implements the
        # tie-break: on a tie (within 1e-12) the first, i.e. lowest, edge is
        # kept.  The secondary coordinate rule never bites: a projection is
        # unique per edge, so tied candidates always differ in edge index.
        if best is None or d2 < best[0] - 1e-12:
            best = (d2, j, t)
    return canonical_point(net, best[1], best[2])


def tangent_cone(net: StarNetwork, p: NetworkPoint):
    """Directions (as unit vectors) in which one can move from p.

    At the junction: every +e_j.  At a tip: -e_j only.  Inside an edge:
    both +e_j and -e_j.
    """
    if p.is_junction():
        return [net.direction(j).copy() for j in net.edge_ids()]
    e = net.direction(p.edge)
    if p.coord >= net.edge_length(p.edge) - COORD_TOL:
        return [-e.copy()]
    return [e.copy(), -e.copy()]


def locate(net: StarNetwork, y, tol: float = 1e-9) -> NetworkPoint:
    """Inverse of embed for points lying on the network (within tol)."""
    p = project_to_network(net, y)
    if float(np.linalg.norm(net.embed(p) - np.asarray(y, dtype=float))) > tol:
        raise OffNetwork(f"point {y} is not on the network")
    return p
