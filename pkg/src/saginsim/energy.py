"""AAV propulsion and computation energy.

Rotary-wing propulsion power at forward speed V:

    P(V) = P0 (1 + 3 V^2 / U_tip^2)
         + Pi (sqrt(1 + V^4 / (4 v0^4)) - V^2 / (2 v0^2))^(1/2)
         + 0.5 d0 rho s A V^3

The induced-power radicand sqrt(1 + x^2) - x cancels badly at high speed,
so it is evaluated as 1 / (sqrt(1 + x^2) + x) which stays positive.

Per-slot movement is modeled as flight at max speed for distance/max_speed
seconds followed by hovering for the rest of the slot.  Computation energy
is energy_per_cycle * cycles_per_bit * task_bits.
"""

import dataclasses
import math

from .errors import InvalidAction


def propulsion_power(speed, params):
    """Propulsion power at the given forward speed, watts."""
    if speed < 0.0:
        raise InvalidAction("negative speed")
    v2 = speed * speed
    blade = params.blade_power * (1.0 + 3.0 * v2 / params.tip_speed ** 2)
    x = v2 / (2.0 * params.rotor_velocity ** 2)
    induced = params.induced_power * math.sqrt(1.0 / (math.sqrt(1.0 + x * x) + x))
    parasite = 0.5 * params.drag_ratio * params.air_density \
        * params.rotor_solidity * params.rotor_area * speed ** 3
    return blade + induced + parasite


def propulsion_energy(distance, slot_length, max_speed, params):
    """Energy to cover `distance` meters within one slot, joules.

    The AAV flies at max_speed for distance / max_speed seconds and hovers
    for the remainder.  distance must fit in the slot.
    """
    if distance < -1e-12:
        raise InvalidAction("negative distance")
    distance = max(distance, 0.0)
    move_time = distance / max_speed
    if move_time > slot_length * (1.0 + 1e-9):
        raise InvalidAction("distance %r exceeds the per-slot envelope" % distance)
    move_time = min(move_time, slot_length)
    hover_time = slot_length - move_time
    return propulsion_power(max_speed, params) * move_time \
        + propulsion_power(0.0, params) * hover_time


def compute_energy(task_bits, cycles_per_bit, energy_per_cycle):
    """Energy to process a task on an edge server, joules."""
    if task_bits < 0.0:
        raise InvalidAction("negative task size")
    return energy_per_cycle * cycles_per_bit * task_bits


@dataclasses.dataclass
class SlotEnergy:
    """Energy spent during one slot, joules, split by source."""
    aav_move: list            # per AAV
    aav_compute: list         # per AAV
    gd_tx: float = 0.0        # all GD uplink transmissions
    sat_tx: float = 0.0       # satellite result downlinks
    sat_compute: float = 0.0  # satellite-side task processing

    def aav_total(self):
        return sum(self.aav_move) + sum(self.aav_compute)


class EnergyLedger:
    """Cumulative per-episode energy accounting."""

    def __init__(self, n_aavs):
        self.n_aavs = n_aavs
        self.aav_move = [0.0] * n_aavs
        self.aav_compute = [0.0] * n_aavs
        self.gd_tx = 0.0
        self.sat_tx = 0.0
        self.sat_compute = 0.0

    def add(self, slot_energy):
        for v in range(self.n_aavs):
            self.aav_move[v] += slot_energy.aav_move[v]
            self.aav_compute[v] += slot_energy.aav_compute[v]
        self.gd_tx += slot_energy.gd_tx
        self.sat_tx += slot_energy.sat_tx
        self.sat_compute += slot_energy.sat_compute

    def aav_total(self):
        """Total energy drawn from AAV batteries, joules."""
        return sum(self.aav_move) + sum(self.aav_compute)

    def breakdown(self):
        return {
            "gd_tx": self.gd_tx,
            "aav_move": sum(self.aav_move),
            "aav_compute": sum(self.aav_compute),
            "sat_tx": self.sat_tx,
            "sat_compute": self.sat_compute,
        }
