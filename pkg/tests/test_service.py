import math

import numpy as np
import pytest

from saginsim import channel
from saginsim.actions import DecodedAction
from saginsim.errors import LinkDown
from saginsim.scenario import RadioParams, Scenario
from saginsim.service import (SlotOutcome, WorldState, completion_rates,
                              run_slot, sat_distance, task_delay)
from saginsim.workload import Counters, GdState, MecTask


def make_scenario(n_aavs=1, n_gds=1, **radio_kw):
    return Scenario(
        n_aavs=n_aavs,
        n_gds=n_gds,
        max_served=2,
        initial_aav_positions=tuple((0.0, 0.0) for _ in range(n_aavs)),
        area_bounds=(-500.0, -500.0, 500.0, 500.0),
        radio=RadioParams(**radio_kw),
    )


def make_world(sc, aav_pos, gd_pos, tasks=(), stored=0.0):
    gd_states = [GdState(g) for g in range(sc.n_gds)]
    for task in tasks:
        gd_states[task.gd].pending.append(task)
    for gd in gd_states:
        gd.stored_bits = stored
    return WorldState(
        aav_pos=np.asarray(aav_pos, float),
        gd_pos=np.asarray(gd_pos, float),
        gd_states=gd_states,
        dc_buffers=np.zeros(sc.n_aavs),
    )


def make_task(gd=0, size=6e5, ratio=0.2, max_delay=2.0):
    return MecTask(gd=gd, task_id=0, size_bits=size, max_delay=max_delay,
                   deadline_slot=100, result_ratio=ratio, created_slot=0)


def full_service_decision(sc, offload=False):
    offl, bw = {}, {}
    for v in range(sc.n_aavs):
        for g in range(sc.n_gds):
            offl[(v, g)] = offload
            bw[(v, g)] = sc.radio.bandwidth_aav
    return DecodedAction(
        displacements=np.zeros((sc.n_aavs, 2)),
        distances=np.zeros(sc.n_aavs),
        directions=np.zeros(sc.n_aavs),
        offload=offl, bandwidth=bw)


def everyone_assoc(sc):
    assoc = np.zeros((sc.n_aavs, sc.n_gds), dtype=np.int8)
    for g in range(sc.n_gds):
        assoc[g % sc.n_aavs, g] = 1
    return assoc


def test_sat_distance_at_center_and_corner():
    sc = make_scenario()
    d0 = sat_distance([0.0, 0.0], sc)
    assert math.isclose(d0, sc.sat_altitude - sc.aav_altitude, rel_tol=1e-12)
    d1 = sat_distance([300.0, 400.0], sc)
    assert math.isclose(d1, math.hypot(500.0, sc.sat_altitude - sc.aav_altitude),
                        rel_tol=1e-12)
    assert d1 > d0


def test_task_delay_local_components():
    sc = make_scenario()
    rates = {"g2a": 1e6, "a2g": 2e6}
    comps = task_delay(6e5, 0.2, False, rates, 8e5, sc.compute)
    assert math.isclose(comps["t_up_g2a"], 0.6, rel_tol=1e-12)
    assert math.isclose(comps["t_comp"], 1000 * 6e5 / 8e9, rel_tol=1e-12)
    assert math.isclose(comps["t_down_a2g"], 0.2 * 6e5 / 2e6, rel_tol=1e-12)
    assert comps["t_up_a2s"] == 0.0
    assert comps["t_down_s2a"] == 0.0
    assert comps["t_prop"] == 0.0
    assert math.isclose(sum(comps.values()), 0.6 + 0.075 + 0.06, rel_tol=1e-12)


def test_task_delay_satellite_components():
    sc = make_scenario()
    rates = {"g2a": 1e6, "a2g": 2e6, "a2s": 4e6, "s2a": 8e6}
    comps = task_delay(6e5, 0.2, True, rates, 8e5, sc.compute)
    assert math.isclose(comps["t_up_a2s"], 6e5 / 4e6, rel_tol=1e-12)
    assert math.isclose(comps["t_comp"], 1000 * 6e5 / 2e10, rel_tol=1e-12)
    assert math.isclose(comps["t_down_s2a"], 0.2 * 6e5 / 8e6, rel_tol=1e-12)
    # 800 km hop: round trip at light speed is 16/3 ms
    assert math.isclose(comps["t_prop"], 2 * 8e5 / 3e8, rel_tol=1e-12)
    assert math.isclose(comps["t_prop"], 5.3333e-3, rel_tol=1e-4)


def test_task_delay_rejects_dead_links():
    sc = make_scenario()
    with pytest.raises(LinkDown):
        task_delay(6e5, 0.2, False, {"g2a": 0.0, "a2g": 1e6}, 8e5, sc.compute)
    with pytest.raises(LinkDown):
        task_delay(6e5, 0.2, True,
                   {"g2a": 1e6, "a2g": 1e6, "a2s": -1.0, "s2a": 1e6},
                   8e5, sc.compute)
    # satellite legs are not consulted on the local path
    comps = task_delay(6e5, 0.2, False,
                       {"g2a": 1e6, "a2g": 1e6, "a2s": 0.0, "s2a": 0.0},
                       8e5, sc.compute)
    assert comps["t_up_a2s"] == 0.0


def test_run_slot_local_task_bookkeeping():
    sc = make_scenario()
    task = make_task(size=2e5, max_delay=5.0)
    world = make_world(sc, [[0.0, 0.0]], [[0.0, 0.0]], tasks=[task])
    counters = Counters(tasks_generated=1)
    out = run_slot(world, full_service_decision(sc), everyone_assoc(sc),
                   sc, counters)
    assert len(out.tasks) == 1
    rec = out.tasks[0]
    assert rec.success and not rec.offloaded
    assert counters.tasks_completed == 1 and counters.tasks_failed == 0
    assert world.gd_states[0].pending == []
    comps = rec.components
    assert math.isclose(out.busy_tx[0],
                        comps["t_up_g2a"] + comps["t_down_a2g"], rel_tol=1e-12)
    assert math.isclose(out.dc_time[0], 1.0 - out.busy_tx[0], rel_tol=1e-9)
    # no stored data: GD energy is the task uplink only
    assert math.isclose(out.gd_tx_energy,
                        sc.radio.power_gd * comps["t_up_g2a"], rel_tol=1e-12)
    assert math.isclose(out.aav_compute_energy[0],
                        sc.compute.energy_per_cycle
                        * sc.compute.cycles_per_bit * 2e5, rel_tol=1e-12)
    assert out.sat_tx_energy == 0.0 and out.sat_compute_energy == 0.0


def test_run_slot_offloaded_task_bookkeeping():
    sc = make_scenario()
    task = make_task(size=2e5, max_delay=5.0)
    world = make_world(sc, [[0.0, 0.0]], [[0.0, 0.0]], tasks=[task])
    counters = Counters(tasks_generated=1)
    out = run_slot(world, full_service_decision(sc, offload=True),
                   everyone_assoc(sc), sc, counters)
    rec = out.tasks[0]
    assert rec.offloaded
    comps = rec.components
    assert comps["t_up_a2s"] > 0.0 and comps["t_down_s2a"] > 0.0
    d = sat_distance([0.0, 0.0], sc)
    assert math.isclose(comps["t_prop"], 2 * d / channel.LIGHT_SPEED,
                        rel_tol=1e-12)
    assert out.aav_compute_energy[0] == 0.0
    assert math.isclose(out.sat_compute_energy,
                        sc.energy.sat_energy_per_cycle
                        * sc.compute.cycles_per_bit * 2e5, rel_tol=1e-12)
    assert math.isclose(out.sat_tx_energy,
                        sc.radio.power_sat * comps["t_down_s2a"], rel_tol=1e-12)
    # the satellite round trip only adds delay relative to local service
    assert rec.delay > sum((comps["t_up_g2a"], comps["t_down_a2g"]))


def test_rate_floor_skips_task_but_not_collection():
    sc = make_scenario(rate_floor=1e12)
    task = make_task()
    world = make_world(sc, [[0.0, 0.0]], [[0.0, 0.0]], tasks=[task],
                       stored=5e3)
    counters = Counters(tasks_generated=1)
    out = run_slot(world, full_service_decision(sc), everyone_assoc(sc),
                   sc, counters)
    assert out.skipped_low_rate == 1
    assert out.tasks == []
    assert len(world.gd_states[0].pending) == 1
    assert counters.tasks_completed == 0 and counters.tasks_failed == 0
    # the radio stayed free, so the whole slot went to data collection
    assert out.dc_time[0] == sc.slot_length
    assert out.collected[0] == pytest.approx(5e3)
    assert world.gd_states[0].stored_bits == pytest.approx(0.0)


def test_over_tolerance_task_fails_but_leaves_queue():
    sc = make_scenario()
    task = make_task(size=2e5, max_delay=1e-9)
    world = make_world(sc, [[0.0, 0.0]], [[0.0, 0.0]], tasks=[task])
    counters = Counters(tasks_generated=1)
    out = run_slot(world, full_service_decision(sc), everyone_assoc(sc),
                   sc, counters)
    assert counters.tasks_failed == 1 and counters.tasks_completed == 0
    assert not out.tasks[0].success
    assert world.gd_states[0].pending == []


def test_dc_conservation_with_busy_radio():
    sc = make_scenario()
    stored = 1e9  # far more than one slot can drain
    world = make_world(sc, [[0.0, 0.0]], [[0.0, 0.0]],
                       tasks=[make_task(size=2e5, max_delay=5.0)],
                       stored=stored)
    counters = Counters(tasks_generated=1)
    out = run_slot(world, full_service_decision(sc), everyone_assoc(sc),
                   sc, counters)
    gd = world.gd_states[0]
    assert math.isclose(stored - gd.stored_bits, out.collected[0],
                        rel_tol=1e-12)
    # buffer keeps whatever the satellite uplink could not forward
    assert math.isclose(world.dc_buffers[0],
                        out.collected[0] - out.delivered[0], rel_tol=1e-9)
    assert out.delivered[0] <= out.collected[0] + 1e-9
    assert counters.dc_bits_collected == pytest.approx(out.collected[0])
    assert counters.dc_bits_delivered == pytest.approx(out.delivered[0])
    assert out.satellite_received() == pytest.approx(out.delivered.sum())


def test_no_collection_when_radio_saturated():
    # a giant task eats the whole slot in uplink time
    sc = make_scenario()
    task = make_task(size=1e12, max_delay=1e9)
    world = make_world(sc, [[0.0, 0.0]], [[0.0, 0.0]], tasks=[task],
                       stored=1e6)
    counters = Counters(tasks_generated=1)
    out = run_slot(world, full_service_decision(sc), everyone_assoc(sc),
                   sc, counters)
    assert out.busy_tx[0] > sc.slot_length
    assert out.dc_time[0] == 0.0
    assert out.collected[0] == 0.0
    assert world.gd_states[0].stored_bits == pytest.approx(1e6)


def test_buffer_drains_without_new_collection():
    sc = make_scenario()
    world = make_world(sc, [[0.0, 0.0]], [[0.0, 0.0]])
    world.dc_buffers[0] = 3e3
    counters = Counters()
    out = run_slot(world, full_service_decision(sc), everyone_assoc(sc),
                   sc, counters)
    assert out.collected[0] == 0.0
    assert out.delivered[0] == pytest.approx(3e3)
    assert world.dc_buffers[0] == pytest.approx(0.0)


def test_unserved_gd_keeps_its_data():
    sc = make_scenario(n_aavs=1, n_gds=2)
    world = make_world(sc, [[0.0, 0.0]], [[0.0, 0.0], [400.0, 400.0]],
                       stored=1e3)
    assoc = np.zeros((1, 2), dtype=np.int8)
    assoc[0, 0] = 1
    counters = Counters()
    out = run_slot(world, full_service_decision(sc), assoc, sc, counters)
    assert out.collected_from_gds[0] == pytest.approx(1e3)
    assert out.collected_from_gds[1] == 0.0
    assert world.gd_states[1].stored_bits == pytest.approx(1e3)


def test_cross_cell_interference_slows_service():
    sc2 = make_scenario(n_aavs=2, n_gds=2)
    pos_a = [[-100.0, 0.0], [100.0, 0.0]]
    pos_g = [[-100.0, 0.0], [100.0, 0.0]]
    tasks = [make_task(gd=0, size=6e5, max_delay=50.0),
             make_task(gd=1, size=6e5, max_delay=50.0)]
    world2 = make_world(sc2, pos_a, pos_g, tasks=tasks)
    assoc2 = np.zeros((2, 2), dtype=np.int8)
    assoc2[0, 0] = 1
    assoc2[1, 1] = 1
    out2 = run_slot(world2, full_service_decision(sc2), assoc2, sc2,
                    Counters(tasks_generated=2))

    sc1 = make_scenario(n_aavs=1, n_gds=1)
    world1 = make_world(sc1, [pos_a[0]], [pos_g[0]],
                        tasks=[make_task(gd=0, size=6e5, max_delay=50.0)])
    assoc1 = np.ones((1, 1), dtype=np.int8)
    out1 = run_slot(world1, full_service_decision(sc1), assoc1, sc1,
                    Counters(tasks_generated=1))
    assert out2.tasks[0].delay > out1.tasks[0].delay


def test_rain_extra_db_slows_satellite_path():
    sc = make_scenario()
    kw = dict(tasks=[make_task(size=2e5, max_delay=50.0)])
    world_dry = make_world(sc, [[0.0, 0.0]], [[0.0, 0.0]], **kw)
    out_dry = run_slot(world_dry, full_service_decision(sc, offload=True),
                       everyone_assoc(sc), sc, Counters(tasks_generated=1))
    world_wet = make_world(sc, [[0.0, 0.0]], [[0.0, 0.0]], **kw)
    out_wet = run_slot(world_wet, full_service_decision(sc, offload=True),
                       everyone_assoc(sc), sc, Counters(tasks_generated=1),
                       rain_extra_db=10.0)
    assert out_wet.tasks[0].delay > out_dry.tasks[0].delay


def test_completion_rates():
    c = Counters(tasks_generated=4, tasks_completed=3,
                 dc_bits_generated=200.0, dc_bits_delivered=50.0)
    mec, dc = completion_rates(c)
    assert math.isclose(mec, 75.0)
    assert math.isclose(dc, 25.0)
    mec0, dc0 = completion_rates(Counters())
    assert math.isnan(mec0) and math.isnan(dc0)
