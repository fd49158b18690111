"""An apparatus measures one electron of a singlet.

The relation between the electrons is handed to the apparatus through the
measured electron, one tick later, and disappears at read-out.  Mutual
information tracks the relations; negativity only sees the first one.
"""
from relsim.entangle import locality_check, related_pairs
from relsim.experiments import outcome_frequency, run_epr_scenario

result = run_epr_scenario(seed=2024)
print(result.artifacts["epr_measures.csv"])
print(result.artifacts["epr_events.csv"])

s0 = result.extras["states"][0]
verdict = locality_check(result.extras["log"], initial=related_pairs(s0))
print("locality check:", "pass" if verdict else verdict.reason)
print("read-out:", result.report["outcome"])
print("fraction of '+' over 100000 runs:", outcome_frequency(100_000, seed=2024))
