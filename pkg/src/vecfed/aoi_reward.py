"""FIFO task queues, age-of-information bookkeeping, and the per-vehicle reward.

Ages are in seconds.  A queued task ages by exactly one slot per slot; the
head task instead ages by its own transmission time in the slot it is
delivered.  Only the head can transmit, and only whole tasks are delivered:
a slot whose rate budget falls short of the head size transmits nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Task:
    size: float        # bits
    remaining: float   # bits, equals size (no partial transmission)
    aoi: float         # s since generation


@dataclass
class TaskQueue:
    tasks: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.tasks)

    @property
    def head(self):
        return self.tasks[0] if self.tasks else None


def step_queue_aoi(queue: TaskQueue, rate: float, config) -> float:
    """Advance one slot of queue aging; deliver the head if the rate allows.

    Returns the bits delivered this slot (the head size or 0).
    """
    if not queue.tasks:
        return 0.0
    for task in queue.tasks[1:]:
        task.aoi += config.slot
    head = queue.tasks[0]
    if rate > 0 and rate * config.slot >= head.size:
        head.aoi += head.size / rate
        queue.tasks.pop(0)
        return head.size
    head.aoi += config.slot
    return 0.0


def vehicle_avg_aoi(queue: TaskQueue) -> float:
    """Mean age over the queued tasks; 0 for an empty queue."""
    if not queue.tasks:
        return 0.0
    return sum(t.aoi for t in queue.tasks) / len(queue.tasks)


def system_avg_aoi(vehicle_averages) -> float:
    """Mean of the per-vehicle averages; 0 when no vehicles are present."""
    values = list(vehicle_averages)
    if not values:
        return 0.0
    return sum(values) / len(values)


@dataclass
class PenaltyState:
    xi: float = 0.0    # s, accumulated departure penalty


def step_xi(state: PenaltyState, departed_vehicle_averages, n_vehicles: int, config) -> float:
    """Charge departing vehicles' leftover age, or decay in quiet slots."""
    departed = list(departed_vehicle_averages)
    if departed:
        state.xi += sum(departed) / n_vehicles
    else:
        state.xi *= config.penalty_decay
    return state.xi


def reward(system_aoi: float, head_aoi: float, power: float, task_count: int,
           xi: float, config) -> float:
    """Per-vehicle cost signal: negative, scaled by config.reward_scale.

    A backlogged vehicle pays for power in proportion to how fresh its head
    task is relative to the system average; an idle vehicle pays for power
    in proportion to the system average itself.
    """
    if task_count > 0:
        power_weight = 1.0 + system_aoi / max(head_aoi, config.slot)
    else:
        power_weight = 1.0 + system_aoi
    return -(system_aoi + power * power_weight + xi * config.penalty_weight) * config.reward_scale
