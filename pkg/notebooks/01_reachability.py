"""
Reachability of the three-line case study
=========================================

Explore the state space at the nominal marking and with the unreliable
resource p12 partly or fully out of service.
"""

# %%
from s4pr import case_study
from s4pr.io import fmt_marking
from s4pr.reachability import bounds, build_graph, deadlocks, liveness

doc = case_study()
print(doc.net.place_ids)
print("M0 =", fmt_marking(doc.m0))

# %%
# the place invariants of each resource
s = doc.structure()
for r, flow in s.semiflows.items():
    print(r, flow.as_dict())

# %%
for units in (2, 1, 0):
    d = doc.with_marking(p12=units)
    g = build_graph(d.net, d.m0)
    dead = deadlocks(g, d.net)
    live = liveness(g, d.net)
    print(f"p12={units}: {len(g)} markings, {len(g.edges)} edges, "
          f"deadlocks={[fmt_marking(m) for m in dead]}, dead transitions={live.dead()}")

# %%
# per-place bounds at M0
print(bounds(build_graph(doc.net, doc.m0)))
