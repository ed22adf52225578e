"""Road-segment graph construction and GNN-generated aggregation weights.

Run:  python demos/demo_road_graph.py

Places a handful of vehicles on two lanes, prints the segment features and
edges their V2V links induce, and shows the softmax weights a vehicle would
use to blend its neighbors' critics.
"""

import numpy as np

from vecfed.road_graph import (aggregation_weights, build_graph, gnn_forward,
                               new_gnn_model)
from vecfed.scenario import VehicleState, desk_config

cfg = desk_config()
rng = np.random.default_rng(4)

vehicles = []
for vid, (lane, x) in enumerate([(0, -180.0), (0, -140.0), (1, -150.0),
                                 (1, 40.0), (0, 45.0), (1, 230.0)]):
    v = VehicleState(id=vid, lane=lane, x=x, y=cfg.lane_spacing * lane,
                     speed=cfg.lane_speeds[lane], next_task_time=0.0)
    v.local_agg_count = int(rng.integers(0, 30))
    v.last_losses = tuple(rng.uniform(0, 2, 3))
    vehicles.append(v)

graph = build_graph(vehicles, cfg)
print(f"== graph: {graph.n_nodes} nodes "
      f"({cfg.segments_per_lane} segments x {cfg.lanes} lanes) ==")
for v in vehicles:
    print(f"  vehicle {v.id} lane {v.lane} x={v.x:+7.1f} -> node "
          f"{graph.node_of_vehicle[v.id]}")

occupied = np.flatnonzero(graph.features[:, 0])
print("\nnode features [count, mean aggregations, mean losses...] on occupied nodes:")
for n in occupied:
    print(f"  node {n:2d}: {np.round(graph.features[n], 3)}")

edges = np.argwhere(np.triu(graph.adjacency))
print(f"\nedges from V2V range {cfg.v2v_range} m: {[tuple(e) for e in edges]}")

model = new_gnn_model(cfg, rng)
embeddings = gnn_forward(model, graph)
print(f"\nembeddings on occupied nodes: "
      f"{np.round(embeddings[occupied], 4)}")

target = vehicles[0]
weights = aggregation_weights(embeddings, target, vehicles, graph, cfg)
print(f"\naggregation weights for vehicle {target.id} "
      f"(itself plus everyone within {cfg.v2v_range} m):")
for vid, w in weights.items():
    print(f"  vehicle {vid}: {w:.4f}")
print(f"  sum = {sum(weights.values()):.12f}")
