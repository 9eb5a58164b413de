"""
Robust and non-robust markings
==============================

A marking is robust when line 3 (which never uses p12) can keep cycling
after every unit of p12 breaks down there.
"""

# %%
from s4pr import case_study, classify
from s4pr.io import fmt_marking
from s4pr.reachability import build_graph
from s4pr.robustness import reduce, select_projection_places

doc = case_study()
net, s = doc.net, doc.structure()
c = classify(net, s, build_graph(net, doc.m0), "p12")
print(len(c.robust), "robust,", len(c.unrobust), "non-robust")

# %%
for m in sorted(c.unrobust):
    print(fmt_marking(m))

# %%
# project onto the observed places and keep the extreme vectors only
pe = select_projection_places(net, s, c, "p12")
rs = reduce(net, c.robust, c.unrobust, pe)
print("P_E:", pe)
print("maximal admissible:", rs.admissible_reduced)
print("minimal forbidden: ", rs.forbidden_reduced)
