"""Schedule transport: anchor projection, shift removal, network restriction."""

import math

import pytest

from pdmpnet import (NetworkPoint, O, RngStream, cost_is_junction_uniform,
                     cycling_segments, extend_dynamics, flow, project_control,
                     project_control_extended, random_shaken_policy,
                     restrict_to_network, schedule_policy, shake,
                     shaking_scales, traffic3_model, verify_projection_exponent)
from pdmpnet.errors import (InadmissibleControl, MissingPrecondition,
                            ScaleViolated)
from pdmpnet.model import Traffic3Model

from _toys import OneWayModel, ShuttleModel

INACTIVE = (0, 0, 0)
ALL_ACTIVE = (1, 1, 1)
ONE_ACTIVE = (1, 0, 0)
IDLE = (0.0, 0.0)


def segs(*pairs):
    return schedule_policy(list(pairs))


@pytest.fixture(scope="module")
def m3():
    return traffic3_model()


@pytest.fixture(scope="module")
def xm(m3):
    return extend_dynamics(m3, 0.2)


@pytest.fixture(scope="module")
def sc(xm):
    return shaking_scales(xm, 0.2)


@pytest.fixture(scope="module")
def sh(xm, sc):
    return shake(xm, sc.shake_radius)


# ---------------------------------------------------------------------------
# projection between anchors on one edge
# ---------------------------------------------------------------------------

def test_identity_returns_the_schedule_unchanged(m3):
    al = segs((math.inf, IDLE))
    res = project_control(m3, ALL_ACTIVE, NetworkPoint(2, 0.5),
                          NetworkPoint(2, 0.5), al, 0.2)
    assert res.case_trace == ["identity"]
    assert res.splice_times == []
    assert res.projected_policy is al
    assert res.meta["deviation_sup"] == 0.0
    assert res.meta["cost_gap_sup"] == 0.0


def test_junction_anchor_active_lead_in(m3):
    # x sits at the junction; y drives inward first, then copies
    al = segs((1.0, (0.8, 0.0)), (math.inf, IDLE))
    res = project_control(m3, ALL_ACTIVE, O, NetworkPoint(2, 1e-3), al, 0.2)
    assert res.case_trace == ["(a)"]
    assert res.splice_times == [pytest.approx(1e-3, abs=1e-12)]
    m = res.meta
    # unit inward speed on an active edge: the lead-in takes exactly d0
    assert m["lead_in_time"] == pytest.approx(1e-3, abs=1e-12)
    assert m["lead_in_time"] <= m["lead_in_bound"]
    assert m["lead_in_bound"] == pytest.approx(1e-3 / 0.95, rel=1e-12)
    assert m["deviation_sup"] == pytest.approx(1e-3, rel=1e-9)
    assert m["deviation_sup"] <= m["deviation_bound"]
    assert m["cost_gap_sup"] == pytest.approx(9.271767105206719e-05, rel=1e-6)
    assert m["cost_gap_sup"] <= m["cost_gap_bound"]


def test_junction_anchor_inactive_lead_in(m3):
    # inward drive against the sqrt drain: 2*sqrt(d0) to reach the junction
    al = segs((math.inf, IDLE))
    res = project_control(m3, INACTIVE, O, NetworkPoint(2, 1e-3), al, 0.2)
    assert res.case_trace == ["(a)"]
    m = res.meta
    assert m["lead_in_time"] == pytest.approx(2.0 * math.sqrt(1e-3), abs=1e-5)
    assert m["lead_in_time"] <= m["lead_in_bound"]
    # bound exponent is 1 - kappa = 1/2 here
    assert m["lead_in_bound"] == pytest.approx(math.sqrt(1e-3) / 0.475,
                                               rel=1e-12)
    assert m["deviation_sup"] == pytest.approx(1e-3, rel=1e-9)
    assert m["deviation_sup"] <= m["deviation_bound"]
    assert m["cost_gap_sup"] <= m["cost_gap_bound"]


def test_junction_target_inactive_waits_parked(m3):
    # y = O on a draining edge: park and splice where the original arrives
    al = segs((math.inf, (-0.6, 0.0)))
    res = project_control(m3, INACTIVE, NetworkPoint(2, 1e-3), O, al, 0.2)
    assert res.case_trace == ["(b1)"]
    assert res.splice_times == [pytest.approx(2.0 * math.sqrt(1e-3) / 0.6,
                                              abs=1e-5)]
    assert res.meta["deviation_sup"] == pytest.approx(1e-3, rel=1e-9)

    # a frozen original never arrives; the follower stays parked for good
    res = project_control(m3, INACTIVE, NetworkPoint(2, 1e-3), O,
                          segs((math.inf, IDLE)), 0.2)
    assert res.case_trace == ["(b1)"]
    assert res.splice_times == []
    assert res.meta["deviation_sup"] == pytest.approx(1e-3, rel=1e-9)
    assert res.meta["cost_gap_sup"] == pytest.approx(0.0017991121289969714,
                                                     rel=1e-6)


def test_junction_target_active_chases_outward(m3):
    al = segs((math.inf, (0.3, 0.0)))
    res = project_control(m3, ALL_ACTIVE, NetworkPoint(2, 5e-4), O, al, 0.2)
    assert res.case_trace == ["(b2)"]
    # outward drive at unit speed covers the gap in time d0
    assert res.splice_times == [pytest.approx(5e-4, abs=1e-9)]
    assert res.meta["deviation_sup"] == pytest.approx(5e-4, rel=1e-9)


def test_tip_anchor_every_control_admissible(m3):
    # inactive edges admit everything at the tip: the schedule carries over
    al = segs((math.inf, (-0.4, 0.0)))
    res = project_control(m3, INACTIVE, NetworkPoint(2, 1.0 - 5e-4),
                          NetworkPoint(2, 1.0), al, 0.2)
    assert res.case_trace == ["(d)"]
    assert res.splice_times == []
    assert res.projected_policy is al
    assert res.meta["deviation_sup"] == pytest.approx(5e-4, rel=1e-6)


def test_tip_anchor_needs_inward_drive(m3):
    res = project_control(m3, ALL_ACTIVE, NetworkPoint(2, 1.0 - 1e-3),
                          NetworkPoint(2, 1.0), segs((math.inf, IDLE)), 0.2)
    assert res.case_trace == ["(d)"]
    assert res.splice_times == [pytest.approx(1e-3, abs=1e-9)]
    assert res.meta["deviation_sup"] == pytest.approx(1e-3, rel=1e-9)


def test_interior_pair_copies_through_the_horizon(m3, sc):
    res = project_control(m3, ALL_ACTIVE, NetworkPoint(2, 0.5),
                          NetworkPoint(2, 0.5005), segs((math.inf, IDLE)), 0.2)
    assert res.case_trace == ["(c1)"]
    assert res.splice_times == [pytest.approx(sc.horizon, abs=1e-9)]
    assert res.meta["deviation_sup"] == pytest.approx(5e-4, rel=1e-6)
    assert res.meta["cost_gap_sup"] == pytest.approx(1.499260107499234e-04,
                                                     rel=1e-6)


def test_follower_pushed_past_the_tip_is_repaired(m3):
    # the copy would leave through the far end; truncate just before the
    # crossing, drive back to the leader's level, then resume
    al = segs((0.0015, (0.9, 0.0)), (math.inf, IDLE))
    res = project_control(m3, ALL_ACTIVE, NetworkPoint(2, 0.998),
                          NetworkPoint(2, 0.999), al, 0.2)
    assert res.case_trace == ["(c2)"]
    t_cross = 1e-3 / 0.9
    assert res.splice_times[0] == pytest.approx(t_cross - 1e-7, abs=1e-6)
    assert res.splice_times[1] == pytest.approx(t_cross - 1e-7 + 1e-3,
                                                abs=1e-6)
    assert res.meta["deviation_sup"] == pytest.approx(1e-3, rel=1e-6)


def test_follower_reaches_junction_first_active(m3):
    al = segs((0.05, (-0.9, 0.0)), (math.inf, IDLE))
    res = project_control(m3, ALL_ACTIVE, NetworkPoint(2, 2e-3),
                          NetworkPoint(2, 1e-3), al, 0.2)
    assert res.case_trace == ["(c3.1)"]
    t_star = 1e-3 / 0.9
    assert res.splice_times[0] == pytest.approx(t_star, abs=1e-9)
    # outward repair retakes the leader's level, another d0 at unit speed
    assert res.splice_times[1] == pytest.approx(t_star + 1e-3, abs=1e-9)
    assert res.meta["deviation_sup"] == pytest.approx(1e-3, rel=1e-9)


def test_follower_reaches_junction_first_inactive(m3):
    al = segs((math.inf, (-0.6, 0.0)))
    res = project_control(m3, INACTIVE, NetworkPoint(2, 2.4e-3),
                          NetworkPoint(2, 4e-4), al, 0.2)
    assert res.case_trace == ["(c3.2)"]
    assert res.splice_times[0] == pytest.approx(2.0 * math.sqrt(4e-4) / 0.6,
                                                abs=1e-4)
    assert res.splice_times[1] == pytest.approx(2.0 * math.sqrt(2.4e-3) / 0.6,
                                                abs=1e-4)
    assert res.meta["deviation_sup"] == pytest.approx(2e-3, rel=1e-9)


def test_leader_reaches_junction_first(m3):
    al = segs((math.inf, (-0.6, 0.0)))
    res = project_control(m3, INACTIVE, NetworkPoint(2, 4e-4),
                          NetworkPoint(2, 2.4e-3), al, 0.2)
    assert res.case_trace == ["(c4)"]
    assert res.splice_times[0] == pytest.approx(0.066670472476, rel=1e-6)
    assert res.splice_times[1] == pytest.approx(0.124643276845, rel=1e-6)
    assert res.meta["deviation_sup"] == pytest.approx(2e-3, rel=1e-9)
    assert res.meta["cost_gap_sup"] == pytest.approx(1.441456257629259e-04,
                                                     rel=1e-6)


def test_projection_is_deterministic(m3):
    al = segs((math.inf, (-0.6, 0.0)))
    args = (m3, INACTIVE, NetworkPoint(2, 2.4e-3), NetworkPoint(2, 4e-4),
            al, 0.2)
    r1 = project_control(*args)
    r2 = project_control(*args)
    assert r1.splice_times == r2.splice_times
    assert r1.meta == r2.meta


def test_projection_rejects_anchors_on_distinct_edges(m3):
    with pytest.raises(ScaleViolated):
        project_control(m3, ALL_ACTIVE, NetworkPoint(2, 0.5),
                        NetworkPoint(3, 0.5), segs((math.inf, IDLE)), 0.2)


def test_projection_rejects_separation_over_the_gate(m3, sc):
    # inactive exponent halves: the radius gate is near_radius ** 4
    gate = sc.near_radius ** 4
    with pytest.raises(ScaleViolated):
        project_control(m3, INACTIVE, NetworkPoint(2, 0.5),
                        NetworkPoint(2, 0.5 + 2.0 * gate),
                        segs((math.inf, IDLE)), 0.2)
    # the same separation passes on an active edge
    res = project_control(m3, ALL_ACTIVE, NetworkPoint(2, 0.5),
                          NetworkPoint(2, 0.5 + 2.0 * gate),
                          segs((math.inf, IDLE)), 0.2)
    assert res.case_trace == ["(c1)"]


def test_projection_rejects_schedule_inadmissible_from_anchor(m3):
    # pushing outward from next to the tip leaves the network
    with pytest.raises(InadmissibleControl):
        project_control(m3, ALL_ACTIVE, NetworkPoint(2, 0.999),
                        NetworkPoint(2, 0.998),
                        segs((math.inf, (0.9, 0.0))), 0.2)


# ---------------------------------------------------------------------------
# deviation exponent audit
# ---------------------------------------------------------------------------

def test_oneway_exponent_is_exactly_one():
    # separation is conserved until one flow parks, so sup deviation equals
    # the anchor radius and the log-log fit has unit slope
    fit = verify_projection_exponent(OneWayModel(), edge=1, mode="run",
                                     n_pairs=8, seeds=3)
    assert fit.slope == pytest.approx(1.0, abs=1e-10)
    assert fit.residual < 1e-12
    assert fit.case_a_violations == 0
    assert fit.case_counts == {"(a)": 2, "(c1)": 7, "(c3.2)": 4, "(b1)": 5,
                               "(d)": 4, "(c4)": 2}
    for row in fit.rows:
        assert row["sup_deviation"] == pytest.approx(row["radius"], rel=1e-9)
    lines = fit.to_csv().splitlines()
    assert lines[0] == "radius,sup_deviation,cost_gap,cases"
    assert len(lines) == 1 + len(fit.rows) == 4


def test_traffic3_exponents_clear_their_floors(m3):
    fa = verify_projection_exponent(m3, edge=2, mode=ALL_ACTIVE,
                                    n_pairs=8, seeds=11)
    assert fa.slope >= 0.45
    assert fa.case_a_violations == 0
    assert fa.case_counts == {"(c1)": 5, "(b2)": 3, "(a)": 3, "(d)": 8,
                              "(c3.1)": 1, "(c4)": 4}
    fi = verify_projection_exponent(m3, edge=2, mode=INACTIVE,
                                    n_pairs=8, seeds=11)
    assert fi.slope >= 0.20
    assert fi.case_a_violations == 0
    assert fi.case_counts == {"(c1)": 6, "(b1)": 3, "(a)": 3, "(d)": 8,
                              "(c4)": 3, "(c3.2)": 1}
    # junction pinning keeps the separation from ever growing, so both
    # fits actually sit at the conservative end of their guarantees
    assert fa.slope == pytest.approx(1.0, abs=1e-10)
    assert fi.slope == pytest.approx(1.0, abs=1e-10)


# ---------------------------------------------------------------------------
# junction cost uniformity
# ---------------------------------------------------------------------------

def test_cost_uniformity_flags_control_dependence(m3):
    assert cost_is_junction_uniform(m3)

    class Doctored(Traffic3Model):
        def cost(self, edge, r, mode, a):
            u = min(max(r, 0.0), 1.0)
            return super().cost(edge, r, mode, a) + 0.1 * abs(a[0]) * (1.0 - u)

    assert not cost_is_junction_uniform(Doctored(0.1, 1.0, 1.0))


# ---------------------------------------------------------------------------
# holding constructions
# ---------------------------------------------------------------------------

def test_cycling_parks_when_a_null_control_exists():
    ow = OneWayModel()
    cyc = cycling_segments(ow, "run", NetworkPoint(1, 0.5), cover=2.0)
    assert cyc[0] == (pytest.approx(0.5, abs=1e-12), (-1.0,))
    assert cyc[-1][0] == math.inf
    assert cyc[-1][1] == (-1.0,)


def test_cycling_trips_when_nothing_freezes():
    # no admissible control vanishes, so the cover is tiled with an
    # out-and-back excursion before the inward control pins at the junction
    shm = ShuttleModel()
    cyc = cycling_segments(shm, "run", NetworkPoint(1, 0.5), cover=2.0)
    assert cyc[0] == (pytest.approx(0.5, abs=1e-12), (-1.0,))
    assert cyc[-1][0] == math.inf
    arc = flow(shm, NetworkPoint(1, 0.5), "run", schedule_policy(cyc),
               T=6.0, h=2e-3)
    assert arc.state_at(6.0).is_junction()


# ---------------------------------------------------------------------------
# removing the shaking shift
# ---------------------------------------------------------------------------

def test_shift_removal_copies_an_unshifted_schedule(sh):
    al = segs((math.inf, ((-0.2, 0.0), 0.0)))
    res = project_control_extended(sh, ONE_ACTIVE, NetworkPoint(2, 0.3),
                                   al, 0.2)
    assert res.case_trace == ["case1"]
    assert res.splice_times == []
    assert res.meta["deviation_sup"] == 0.0
    assert res.meta["cost_gap_sup"] == 0.0


def test_shift_removal_repairs_a_branch_divergence(sh, sc):
    # the shifted drain lands the target on a different branch at t = 1.3;
    # the follower drives to the junction and renews contact there
    al = segs((1.3, ((-0.8, 0.0), 0.6)), (math.inf, ((0.0, 0.9), 0.0)))
    res = project_control_extended(sh, ONE_ACTIVE, NetworkPoint(2, 0.3),
                                   al, 0.2)
    assert res.case_trace == ["case1", "case3", "case1"]
    assert res.splice_times == [pytest.approx(1.3, abs=1e-9)]
    assert res.meta["deviation_sup"] == pytest.approx(0.051699676894436,
                                                      rel=1e-6)
    assert res.meta["deviation_sup"] <= sc.guarantee()
    assert res.meta["deviation_sup"] <= res.meta["deviation_bound"]
    assert set(res.meta) == {"case", "cost_gap_sup", "deviation_bound",
                             "deviation_sup", "epsilon", "horizon", "rho"}


def test_shift_removal_follows_through_the_fictive_leg(sh):
    # constant drift on the vertical line: the shift reads the same
    # coefficients, so the copy tracks exactly through the dip below O
    al = segs((0.25, ((0.0, -0.9), 0.5)), (math.inf, ((0.0, 0.2), 0.0)))
    res = project_control_extended(sh, ONE_ACTIVE, NetworkPoint(1, 0.05),
                                   al, 0.2)
    assert res.case_trace == ["case1"]
    assert res.meta["deviation_sup"] == 0.0


def test_shift_removal_output_carries_zero_shift(sh, xm, sc):
    al = segs((1.3, ((-0.8, 0.0), 0.6)), (math.inf, ((0.0, 0.3), 0.0)))
    res = project_control_extended(sh, ONE_ACTIVE, NetworkPoint(2, 0.3),
                                   al, 0.2)
    rep = flow(sh, NetworkPoint(2, 0.3), ONE_ACTIVE, res.projected_policy,
               T=sc.horizon, h=2e-3)
    for t in (0.0, 0.5, 1.0, 1.5, 2.0, sc.horizon):
        _, b = rep.control_at(min(t, rep.t1))
        assert b == 0.0


def test_shift_removal_tracks_random_schedules(xm, sc, sh):
    modes = [INACTIVE, (0, 1, 1), ONE_ACTIVE, ALL_ACTIVE]
    bound = sc.guarantee()
    for k in range(6):
        mode = modes[k % len(modes)]
        x = NetworkPoint(1 + (k % 3), 0.2 + 0.05 * (k % 5))
        al = random_shaken_policy(sh, x, mode, RngStream(7, stream_id=k))
        res = project_control_extended(sh, mode, x, al, 0.2)
        assert res.meta["deviation_sup"] <= bound
        assert res.meta["deviation_sup"] <= res.meta["deviation_bound"]


def test_shift_removal_gap_shrinks_with_epsilon(m3):
    al = segs((1.3, ((-0.8, 0.0), 0.6)), (math.inf, ((0.0, 0.3), 0.0)))
    gaps, devs = [], []
    for eps in (0.2, 0.1, 0.05):
        xme = extend_dynamics(m3, eps)
        sce = shaking_scales(xme, eps)
        res = project_control_extended(shake(xme, sce.shake_radius),
                                       ONE_ACTIVE, NetworkPoint(2, 0.3),
                                       al, eps)
        assert res.meta["deviation_sup"] <= sce.guarantee()
        gaps.append(res.meta["cost_gap_sup"])
        devs.append(res.meta["deviation_sup"])
    assert gaps[0] > gaps[1] > gaps[2]
    assert devs[0] >= devs[1] * 0.9 and devs[1] >= devs[2] * 0.9


def test_shift_removal_validates_its_inputs(xm, sh, sc):
    al = segs((math.inf, (IDLE, 0.0)))
    with pytest.raises(ScaleViolated):
        project_control_extended(shake(xm, 0.2), ONE_ACTIVE,
                                 NetworkPoint(2, 0.3), al, 0.2)
    with pytest.raises(ScaleViolated):
        project_control_extended(sh, ONE_ACTIVE, NetworkPoint(2, 0.3),
                                 al, 0.1)
    with pytest.raises(MissingPrecondition):
        project_control_extended(xm, ONE_ACTIVE, NetworkPoint(2, 0.3),
                                 al, 0.2)


# ---------------------------------------------------------------------------
# restricting extended schedules to the retained network
# ---------------------------------------------------------------------------

def test_restriction_is_identity_for_interior_paths(xm):
    al = segs((0.3, (-0.8, 0.0)), (math.inf, IDLE))
    res = restrict_to_network(xm, ONE_ACTIVE, NetworkPoint(2, 0.5), al, 2.0)
    assert res.case_trace == ["identity"]
    assert res.splice_times == []
    for key in ("gap_trajectory", "gap_cost", "gap_rate", "gap_qrow"):
        assert res.meta[key] == 0.0
    assert res.meta["omega"] == 0.0


def test_restriction_holds_at_junction_during_a_dip(xm):
    # the extended path dives 0.09 below O; the restricted one waits there
    al = segs((0.1, (0.0, -0.9)), (0.5, (0.0, 0.9)), (math.inf, IDLE))
    res = restrict_to_network(xm, ONE_ACTIVE, O, al, 2.0)
    assert res.case_trace == ["hold-junction", "copy"]
    assert res.meta["gap_trajectory"] == pytest.approx(0.08859375, rel=1e-9)
    assert res.meta["gap_cost"] == 0.0
    assert res.meta["gap_rate"] == 0.0
    assert res.meta["gap_qrow"] == 0.0
    assert res.meta["omega"] == res.meta["gap_trajectory"]


def test_restriction_holds_at_the_base_tip(xm):
    # the extended path climbs to 1.15 on the long edge; the restricted one
    # saturates at the tip of the retained edge
    al = segs((0.25, (0.0, 1.0)), (math.inf, IDLE))
    res = restrict_to_network(xm, ONE_ACTIVE, NetworkPoint(1, 0.9), al, 2.0)
    assert res.case_trace == ["copy", "hold-tip"]
    assert res.splice_times == [pytest.approx(0.1, abs=1e-6)]
    assert res.meta["gap_trajectory"] == pytest.approx(0.15, abs=1e-6)
    assert res.meta["gap_cost"] < 1e-12
    assert res.meta["gap_rate"] < 1e-12


def test_restriction_trips_when_nothing_holds():
    # the shuttle admits no vanishing control: junction stays pinned through
    # the inward drive, but the tip phase needs micro round trips
    xs = extend_dynamics(ShuttleModel(), 0.2)
    al = segs((0.12, (-0.5,)), (0.4, (0.5,)), (math.inf, (-0.2,)))
    res = restrict_to_network(xs, "run", O, al, 1.5)
    assert res.case_trace == ["hold-junction", "copy", "hold-junction"]
    assert res.splice_times == [pytest.approx(0.24, abs=1e-9),
                                pytest.approx(1.22, abs=1e-9)]
    assert res.meta["gap_trajectory"] == pytest.approx(0.05859375, rel=1e-9)

    al = segs((0.35, (1.0,)), (math.inf, (-0.3,)))
    res = restrict_to_network(xs, "run", NetworkPoint(1, 0.8), al, 1.5)
    assert res.case_trace == ["copy", "trips-tip", "copy"]
    assert res.splice_times == [pytest.approx(0.2, abs=1e-6),
                                pytest.approx(0.85, abs=1e-6)]
    assert res.meta["gap_trajectory"] == pytest.approx(0.17682736308482427,
                                                       rel=1e-6)
    assert res.meta["gap_cost"] == 0.0


def test_restriction_gap_scales_with_the_extension_width(m3):
    omegas = []
    for eps in (0.2, 0.1, 0.05):
        xme = extend_dynamics(m3, eps)
        al = segs((eps / 4.0, (0.0, -0.9)), (0.5, (0.0, 0.9)),
                  (math.inf, IDLE))
        res = restrict_to_network(xme, ONE_ACTIVE, O, al, 2.0)
        assert res.case_trace == ["hold-junction", "copy"]
        omegas.append(res.meta["omega"])
    assert omegas[0] > omegas[1] > omegas[2]
    # dip depth is proportional to eps, and so is the trajectory gap
    assert omegas[0] == pytest.approx(2.0 * omegas[1], rel=1e-9)


def test_restriction_validates_its_inputs(m3, xm):
    al = segs((math.inf, IDLE))
    with pytest.raises(ScaleViolated):
        restrict_to_network(xm, ONE_ACTIVE, O, al, math.inf)
    with pytest.raises(ScaleViolated):
        restrict_to_network(xm, ONE_ACTIVE, NetworkPoint(4, 0.1), al, 1.0)
    with pytest.raises(MissingPrecondition):
        restrict_to_network(m3, ALL_ACTIVE, O, al, 1.0)


# ---------------------------------------------------------------------------
# random shaken schedules
# ---------------------------------------------------------------------------

def test_random_shaken_policy_reproducible_and_admissible(sh, sc):
    x = NetworkPoint(2, 0.35)
    p1 = random_shaken_policy(sh, x, ONE_ACTIVE, RngStream(5, stream_id=1))
    p2 = random_shaken_policy(sh, x, ONE_ACTIVE, RngStream(5, stream_id=1))
    p3 = random_shaken_policy(sh, x, ONE_ACTIVE, RngStream(6, stream_id=1))
    assert p1.schedule(x, ONE_ACTIVE) == p2.schedule(x, ONE_ACTIVE)
    assert p1.schedule(x, ONE_ACTIVE) != p3.schedule(x, ONE_ACTIVE)
    arc = flow(sh, x, ONE_ACTIVE, p1, T=sc.horizon, h=2e-3)
    assert arc.status == "completed"
    assert arc.t1 == pytest.approx(sc.horizon, abs=1e-9)


def test_random_shaken_policy_needs_a_shaken_model(xm):
    with pytest.raises(MissingPrecondition):
        random_shaken_policy(xm, NetworkPoint(2, 0.35), ONE_ACTIVE,
                             RngStream(5, stream_id=1))
