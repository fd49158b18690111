"""How much does one weak shortcut shrink space?

Two antipodal points on a ring of 100 get joined by a single chord of
conductance w.  Hop distance collapses to 1 at once.  Resistance distance
moves by about 25 w, so a faint relation leaves the geometry almost intact.
"""
from relsim import build_lattice, shortcut_impact

ring = build_lattice([100], periodic=True)
print("       w   hops  resistance  relative change   25/(1+25w)")
for w in (0.0, 1e-4, 1e-3, 1e-2, 0.1, 1.0):
    rep = shortcut_impact(ring, 0, 50, (0, 50), w)
    print(f"{w:8.0e} {rep.d_sp_after:6d} {rep.d_res_after:11.6f} {rep.rel_change:16.4%} "
          f"{25 / (1 + 25 * w):12.6f}")

rep = shortcut_impact(ring, 0, 50, (0, 50), 0.002, mode="two_hop")
print("\nvia two particle links of conductance 0.002:",
      f"hops {rep.d_sp_after}, resistance change {rep.rel_change:.4%}")
