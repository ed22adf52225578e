"""Arrival-rate sweep producing the long-format comparison table.

Run:  python demos/demo_sweep.py          (a few minutes)

Sweeps the total vehicle arrival rate for two schemes at heavily reduced
scale and writes sweep.csv plus per-metric plot files under demo_results/.
"""

from vecfed import desk_config, sweep

cfg = desk_config()
cfg.train_slots = 6_000
cfg.test_slots = 2_500

rows = sweep(cfg, axis="lambda", values=[1 / 16, 1 / 8, 1 / 4],
             schemes=["fgnn", "gdbr"], seeds=[0], out_dir="demo_results")

print(f"{'rate':>8} {'scheme':>6} {'age (s)':>9} {'power (W)':>10} {'bit/s':>12}")
for row in rows:
    print(f"{row['axis_value']:8.4f} {row['scheme']:>6} {row['avg_aoi']:9.3f} "
          f"{row['avg_power']:10.2f} {row['throughput']:12.3e}")
print("\nfiles written under demo_results/: sweep.csv, plot_avg_aoi.csv, "
      "plot_avg_power.csv, plot_throughput.csv")
