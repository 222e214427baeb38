"""
Two tiny graphs where adding a seed hurts, or helps more than it should.

Coverage in the full diffusion model is neither monotone nor submodular:

* bridge gadget (tau=1): seeding {a} converts 7 nodes, seeding {a, b} only 5.
  b's faint signal makes the hub c believe and leave early, before a's strong
  message reaches it, so c's leaves only ever hear the faint version.
* query gadget (tau=10): {a} and {b} convert one node each, {a, b} converts
  k+4, so b's marginal gain jumps once a is seeded.

Run:  python demos/01_non_monotone_gadgets.py
"""

from trustdiff.diffusion import format_trace, run
from trustdiff.gadgets import bridge_gadget, query_gadget
from trustdiff.model import Seeding

k = 3

inst, nm = bridge_gadget(k=k, tau=1)
a, b = nm["a"], nm["b"]
print("bridge gadget, tau=1")
for seeds in ([a], [a, b]):
    out = run(inst, Seeding([seeds]), trace_states=True)
    names = [x for x in nm if nm[x] in seeds]
    print(f"  seeds {names}: {out.believers} believers")
print("  trace for {a}:")
print("   " + format_trace(run(inst, Seeding([[a]]), trace_states=True)).replace("\n", "\n   "))

inst, nm = query_gadget(k=k, tau=10)
a, b = nm["a"], nm["b"]
print(f"\nquery gadget, tau=10, k={k}")
vals = {}
for label, seeds in (("{}", []), ("{a}", [a]), ("{b}", [b]), ("{a,b}", [a, b])):
    vals[label] = run(inst, Seeding([seeds])).believers
    print(f"  seeds {label:6s}: {vals[label]} believers")
print(f"  gain of b alone: {vals['{b}'] - vals['{}']},  gain of b after a: {vals['{a,b}'] - vals['{a}']}")
