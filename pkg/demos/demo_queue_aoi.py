"""Age-of-information bookkeeping on a single vehicle's task queue.

Run:  python demos/demo_queue_aoi.py

Builds a queue by hand, steps it under different rates, and shows how the
departure penalty and the reward react.
"""

from vecfed.aoi_reward import (PenaltyState, Task, TaskQueue, reward,
                               step_queue_aoi, step_xi, system_avg_aoi,
                               vehicle_avg_aoi)
from vecfed.scenario import ScenarioConfig

cfg = ScenarioConfig()

queue = TaskQueue()
for size in (8e5, 2e6, 4e7):
    queue.tasks.append(Task(size=size, remaining=size, aoi=0.0))

print("== queue under a 1e8 bit/s uplink ==")
print(f"  start: sizes {[t.size for t in queue.tasks]}")
for step in range(4):
    delivered = step_queue_aoi(queue, rate=1e8, config=cfg)
    ages = [round(t.aoi, 4) for t in queue.tasks]
    print(f"  slot {step}: delivered {delivered:10.3g} bits, ages now {ages}")
print("  the 4e7-bit task needs 4e9 bit/s to fit in one slot, so it waits\n")

print("== per-vehicle and system averages ==")
v1 = vehicle_avg_aoi(queue)
print(f"  this vehicle: {v1:.4f} s; system of [v1, 0.5]: "
      f"{system_avg_aoi([v1, 0.5]):.4f} s\n")

print("== departure penalty ==")
xi = PenaltyState()
step_xi(xi, [4.0], n_vehicles=5, config=cfg)        # someone left with backlog
print(f"  one departure with mean age 4 among 5 vehicles: xi = {xi.xi:.3f}")
for _ in range(3):
    step_xi(xi, [], n_vehicles=5, config=cfg)
print(f"  after three quiet slots (decay {cfg.penalty_decay}): xi = {xi.xi:.6f}\n")

print("== reward shape ==")
print("  backlogged, stale head (cheap to transmit):",
      f"{reward(10.0, 30.0, 20.0, 5, 0.0, cfg):+.3f}")
print("  backlogged, fresh head (expensive to transmit):",
      f"{reward(10.0, 0.1, 20.0, 5, 0.0, cfg):+.3f}")
print("  idle queue, same power:",
      f"{reward(10.0, 0.0, 20.0, 0, 0.0, cfg):+.3f}")
print("  idle queue, silent:",
      f"{reward(10.0, 0.0, 0.0, 0, 0.0, cfg):+.3f}")
print("\nthe weighting steers power toward vehicles whose head task is stale "
      "relative to the system.")
