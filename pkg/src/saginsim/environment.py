"""Episode MDP over the joint service network.

One step runs one slot: expire overdue tasks, spawn workload, associate
GDs to AAVs on the pre-move positions, decode the raw action, move and
clamp the AAVs, serve tasks and collect data on the moved positions, then
score the slot.  The observation is a flat float vector

    [aav xy pairs | gd xy pairs | per-GD urgency | per-GD stored | t_left]

with positions scaled to [-1, 1] against the area bounds, urgency scaled
by the largest deadline-tolerance product, stored data by a fixed
half-horizon accumulation scale (it may exceed 1 under heavy backlog),
and t_left the fraction of the episode remaining.

Reward: r = r_task + w_dc * delivered_bits - w_energy * aav_joules
            - penalty * boundary_and_collision_events,
with r_task the summed slack (tolerance - delay) over served tasks.
Modes: "joint" keeps all terms, "mec_only" drops the delivered-bits term,
"dc_only" drops the task term.
"""

import numpy as np

from . import actions, association, energy, service, workload
from .errors import EpisodeFinished
from .scenario import SeededRng, sample_gd_positions
from .workload import Counters


def state_dim(scenario):
    return 2 * scenario.n_aavs + 4 * scenario.n_gds + 1


def objectives(records):
    """(f1, f2, f3) recounted from an episode's slot records.

    f1: mean task delay over generated tasks, seconds (served tasks
    contribute their delay; expired and still-pending tasks only enlarge
    the denominator).  f2: bits delivered to the satellite.  f3: joules
    drawn from AAV batteries.
    """
    delay_sum = 0.0
    generated = 0
    delivered = 0.0
    joules = 0.0
    for rec in records:
        generated += rec["generated"]
        for task in rec["tasks"]:
            delay_sum += task["delay"]
        delivered += sum(rec["dc"]["delivered"])
        joules += sum(rec["energy"]["aav_move"]) + sum(rec["energy"]["aav_compute"])
    f1 = delay_sum / generated if generated else float("nan")
    return f1, delivered, joules


class SaginEnv:
    """Deterministic, seedable environment over one scenario."""

    def __init__(self, scenario, seed=None):
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else int(seed)
        self.rng = SeededRng(self.seed)
        if scenario.gd_positions is not None:
            self.gd_pos = np.asarray(scenario.gd_positions, dtype=float)
        else:
            self.gd_pos = sample_gd_positions(scenario, self.rng.stream("init"))
        self.action_dim = actions.action_dim(scenario.n_aavs, scenario.max_served)
        self.state_dim = state_dim(scenario)
        self.world = None
        self.done = True
        self.records = []
        self.counters = Counters()
        self.ledger = energy.EnergyLedger(scenario.n_aavs)
        self._episode_rain_extra = 0.0

    def reset(self, seed=None):
        """Start a fresh episode; with a seed the episode streams are
        re-derived so two resets from the same seed replay identically.
        GD positions are part of the world and never resampled."""
        if seed is not None:
            self.rng = SeededRng(int(seed))
        sc = self.scenario
        self.world = service.WorldState(
            aav_pos=np.asarray(sc.initial_aav_positions, dtype=float).copy(),
            gd_pos=self.gd_pos,
            gd_states=[workload.GdState(g) for g in range(sc.n_gds)],
            dc_buffers=np.zeros(sc.n_aavs),
            slot=0,
        )
        self.done = False
        self.records = []
        self.counters = Counters()
        self.ledger = energy.EnergyLedger(sc.n_aavs)
        if sc.radio.rain_model == "weibull":
            draw = self.rng.stream("channel").weibull(2.0) * sc.radio.rain_atten
            self._episode_rain_extra = draw - sc.radio.rain_atten
        else:
            self._episode_rain_extra = 0.0
        return self._state()

    def step(self, raw_action):
        """Advance one slot.  Returns (state, reward, done, info)."""
        if self.done:
            raise EpisodeFinished("call reset() before stepping again")
        sc = self.scenario
        world = self.world
        t = world.slot
        wl_rng = self.rng.stream("workload")

        expired = 0
        generated = 0
        dc_generated = 0.0
        for gd in world.gd_states:
            expired += workload.expire_overdue(gd, t)
            if workload.maybe_generate_task(gd, t, sc.workload,
                                            sc.slot_length, wl_rng):
                generated += 1
            dc_generated += workload.accrue_dc_data(gd, sc.workload, wl_rng)
        self.counters.dc_bits_generated += dc_generated
        self.counters.tasks_failed += expired
        self.counters.tasks_generated += generated

        assoc = association.gs_associate(world.aav_pos, self.gd_pos,
                                         sc.max_served, sc.aav_altitude)
        decoded = actions.decode(raw_action, assoc, sc)
        commanded = world.aav_pos + decoded.displacements
        clamped, events = actions.clamp_and_penalize(commanded, sc)
        moved = np.linalg.norm(clamped - world.aav_pos, axis=1)
        move_energy = [energy.propulsion_energy(float(d), sc.slot_length,
                                                sc.max_speed, sc.energy)
                       for d in moved]
        world.aav_pos = clamped

        outcome = service.run_slot(world, decoded, assoc, sc, self.counters,
                                   self._episode_rain_extra)

        slot_energy = energy.SlotEnergy(
            aav_move=move_energy,
            aav_compute=list(outcome.aav_compute_energy),
            gd_tx=outcome.gd_tx_energy,
            sat_tx=outcome.sat_tx_energy,
            sat_compute=outcome.sat_compute_energy,
        )
        self.ledger.add(slot_energy)

        r_task = sum(task.max_delay - task.delay for task in outcome.tasks)
        delivered = outcome.satellite_received()
        aav_joules = slot_energy.aav_total()
        rw = sc.reward
        value = -rw.energy_weight * aav_joules - rw.penalty * events.total()
        if rw.mode != "dc_only":
            value += r_task
        if rw.mode != "mec_only":
            value += rw.dc_weight * delivered
        reward_parts = {
            "task": r_task,
            "dc_bits": delivered,
            "energy_j": aav_joules,
            "events": events.total(),
            "value": value,
        }

        record = self._record(t, generated, expired, dc_generated, assoc,
                              outcome, slot_energy, events, reward_parts)
        self.records.append(record)

        world.slot = t + 1
        self.done = world.slot >= sc.horizon
        info = {
            "outcome": outcome,
            "events": events,
            "reward": reward_parts,
            "record": record,
        }
        return self._state(), value, self.done, info

    def objectives(self):
        return objectives(self.records)

    def _record(self, t, generated, expired, dc_generated, assoc, outcome,
                slot_energy, events, reward_parts):
        task_rows = []
        for task in outcome.tasks:
            task_rows.append({
                "aav": task.aav, "gd": task.gd, "task_id": task.task_id,
                "size_bits": task.size_bits, "result_ratio": task.result_ratio,
                "max_delay": task.max_delay, "offloaded": task.offloaded,
                "success": task.success, "delay": task.delay,
                "components": {k: float(x) for k, x in task.components.items()},
            })
        served = [[int(g) for g in np.nonzero(assoc[v])[0]]
                  for v in range(self.scenario.n_aavs)]
        return {
            "slot": int(t),
            "generated": int(generated),
            "expired": int(expired),
            "skipped": int(outcome.skipped_low_rate),
            "aav_pos": [[float(x), float(y)] for x, y in self.world.aav_pos],
            "assoc": served,
            "tasks": task_rows,
            "dc": {
                "generated": float(dc_generated),
                "dc_time": [float(x) for x in outcome.dc_time],
                "collected": [float(x) for x in outcome.collected],
                "delivered": [float(x) for x in outcome.delivered],
                "from_gds": [float(x) for x in outcome.collected_from_gds],
                "buffers": [float(x) for x in self.world.dc_buffers],
            },
            "energy": {
                "aav_move": [float(x) for x in slot_energy.aav_move],
                "aav_compute": [float(x) for x in slot_energy.aav_compute],
                "gd_tx": float(slot_energy.gd_tx),
                "sat_tx": float(slot_energy.sat_tx),
                "sat_compute": float(slot_energy.sat_compute),
            },
            "events": {"boundary": int(events.boundary),
                       "collision": int(events.collision)},
            "reward": {k: (float(x) if k != "events" else int(x))
                       for k, x in reward_parts.items()},
        }

    def _state(self):
        sc = self.scenario
        x_min, y_min, x_max, y_max = sc.area_bounds

        def norm_x(x):
            return 2.0 * (x - x_min) / (x_max - x_min) - 1.0

        def norm_y(y):
            return 2.0 * (y - y_min) / (y_max - y_min) - 1.0

        parts = []
        for x, y in self.world.aav_pos:
            parts.extend((norm_x(x), norm_y(y)))
        for x, y in self.gd_pos:
            parts.extend((norm_x(x), norm_y(y)))
        wl = sc.workload
        urgency_scale = (wl.deadline_range[1] / sc.slot_length) \
            * wl.tolerance_range[1]
        t = self.world.slot
        for gd in self.world.gd_states:
            task = gd.earliest_pending()
            if task is None:
                parts.append(0.0)
            else:
                remaining = max(0, task.deadline_slot - t)
                parts.append(remaining * task.max_delay / urgency_scale)
        stored_scale = 50.0 * wl.dc_poisson_rate * workload.DC_SIZE_UNIT
        for gd in self.world.gd_states:
            parts.append(gd.stored_bits / stored_scale)
        parts.append((sc.horizon - t) / sc.horizon)
        state = np.asarray(parts, dtype=float)
        assert state.shape == (self.state_dim,)
        return state
