"""Tiny hand-solvable models shared by the solver tests."""

import numpy as np

from pdmpnet.model import ControlSegment, Distinguished, ModelConstants, PdmpModel
from pdmpnet.network import make_network


class DrainModel(PdmpModel):
    """One edge, one mode, no jumps: drift -r, running cost r.

    The value is r/(1 + delta) exactly, and the scheme's fixed point is
    kappa*r with kappa = c_run / (1 - beta(1-h)), so both the O(h) gap and
    the zero interpolation error are checkable in closed form.
    """

    def __init__(self, delta=1.0, drift_sign=-1.0):
        net = make_network([(1.0, 0.0)])
        consts = ModelConstants(f_bound=1.0, lam_bound=0.0, l_bound=1.0,
                                lip_f=1.0, lip_lam=0.0, lip_l=1.0, lip_q=0.0,
                                beta=1.0, eta=1.0, kappa=1.0)
        super().__init__(net, ("run",), delta, consts, name="drain")
        self._seg = (ControlSegment((1.0,), -1.0, 1.0),)
        self.drift_sign = float(drift_sign)

    def active(self, edge, mode):
        return self.drift_sign > 0

    def control_segments(self, mode, edge):
        return self._seg

    def drift(self, edge, r, mode, a):
        return self.drift_sign * r if self.drift_sign < 0 else self.drift_sign

    def cost(self, edge, r, mode, a):
        return r

    def rate(self, edge, r, mode, a):
        return 0.0

    def qrow(self, edge, r, mode, a):
        return np.zeros(1)

    def distinguished(self, mode, edge):
        return Distinguished(outward=None, inward=(-1.0,), null=(0.0,),
                             tip=None, tip_all_admissible=True)


class OneWayModel(PdmpModel):
    """One edge, one mode: controls at or above zero freeze the state,
    negative controls drain inward at speed |a|.

    Two flows under the same schedule keep their separation constant until
    one of them parks at the junction, after which it can only shrink, so
    the worst-case projection deviation equals the anchor separation at
    every radius and the fitted exponent is exactly one.
    """

    def __init__(self, delta=1.0, run_cost=0.3):
        net = make_network([(1.0, 0.0)])
        consts = ModelConstants(f_bound=1.0, lam_bound=0.0, l_bound=run_cost,
                                lip_f=0.0, lip_lam=0.0, lip_l=0.0, lip_q=0.0,
                                beta=1.0, eta=1.0, kappa=0.0)
        super().__init__(net, ("run",), delta, consts, name="oneway")
        self._seg = (ControlSegment((1.0,), -1.0, 1.0),)
        self.run_cost = float(run_cost)

    def active(self, edge, mode):
        return False

    def control_segments(self, mode, edge):
        return self._seg

    def drift_vec(self, x_vec, mode, a, edge=0):
        e = self.network.direction(edge if edge else 1)
        return min(float(a[0]), 0.0) * e

    def cost(self, edge, r, mode, a):
        return self.run_cost

    def rate(self, edge, r, mode, a):
        return 0.0

    def qrow(self, edge, r, mode, a):
        return np.zeros(1)

    def distinguished(self, mode, edge):
        return Distinguished(outward=None, inward=(-1.0,), null=(0.0,),
                             tip=None, tip_all_admissible=True)


class ShuttleModel(PdmpModel):
    """One edge, one mode, drift equal to the control, which cannot vanish:
    the admissible set is [-1,-0.2] united with [0.2,1].

    Nothing freezes anywhere, so holding constructions must fall back to
    small out-and-back trips, and parking at the junction works only
    because an inward control pins the state there.
    """

    def __init__(self, delta=1.0, run_cost=0.5):
        net = make_network([(1.0, 0.0)])
        consts = ModelConstants(f_bound=1.0, lam_bound=0.0, l_bound=run_cost,
                                lip_f=0.0, lip_lam=0.0, lip_l=0.0, lip_q=0.0,
                                beta=0.2, eta=0.9, kappa=0.0)
        super().__init__(net, ("run",), delta, consts, name="shuttle")
        self._segs = (ControlSegment((1.0,), -1.0, -0.2),
                      ControlSegment((1.0,), 0.2, 1.0))
        self.run_cost = float(run_cost)

    def active(self, edge, mode):
        return True

    def control_segments(self, mode, edge):
        return self._segs

    def drift_vec(self, x_vec, mode, a, edge=0):
        e = self.network.direction(edge if edge else 1)
        return float(a[0]) * e

    def cost(self, edge, r, mode, a):
        return self.run_cost

    def rate(self, edge, r, mode, a):
        return 0.0

    def qrow(self, edge, r, mode, a):
        return np.zeros(1)

    def distinguished(self, mode, edge):
        return Distinguished(outward=(1.0,), inward=(-1.0,), null=None,
                             tip=(-1.0,), tip_all_admissible=False)


class TwoModeConstModel(PdmpModel):
    """One edge, two modes, zero drift, constant cost and swap rate.

    With l = c in both modes the value is c/delta exactly; one outer step
    from zero is c (1-e^[-delta h])/delta / (1 - e^[-delta h](1 - mu h)).
    """

    def __init__(self, cost=0.7, mu=0.8, delta=1.0):
        net = make_network([(1.0, 0.0)])
        consts = ModelConstants(f_bound=0.0, lam_bound=mu, l_bound=cost,
                                lip_f=0.0, lip_lam=0.0, lip_l=0.0, lip_q=0.0,
                                beta=1.0, eta=1.0, kappa=1.0)
        super().__init__(net, ("A", "B"), delta, consts, name="twomode")
        self._seg = (ControlSegment((1.0,), -1.0, 1.0),)
        self.c = float(cost)
        self.mu = float(mu)

    def active(self, edge, mode):
        return False

    def control_segments(self, mode, edge):
        return self._seg

    def drift(self, edge, r, mode, a):
        return 0.0

    def cost(self, edge, r, mode, a):
        return self.c

    def rate(self, edge, r, mode, a):
        return self.mu

    def qrow(self, edge, r, mode, a):
        return np.array([0.0, 1.0]) if mode == "A" else np.array([1.0, 0.0])

    def distinguished(self, mode, edge):
        return Distinguished(outward=None, inward=(-1.0,), null=(0.0,),
                             tip=None, tip_all_admissible=True)
