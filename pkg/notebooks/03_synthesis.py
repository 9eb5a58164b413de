"""
Monitor synthesis for one failed unit
=====================================
"""

# %%
from s4pr import case_study
from s4pr.controller import Pipeline
from s4pr.gmec import build_supervisor, verify_supervisor
from s4pr.net import incidence_matrix

doc = case_study()
ctx = Pipeline(doc.net, doc.structure(), doc.m0, "p12")
out = ctx.run(1)
print(len(out.candidates), "separating candidates")
for g in out.plan.constraints:
    print("constraint:", g)

# %%
ctl, m_ctl = build_supervisor(doc.net, out.plan, doc.m0)
row = incidence_matrix(ctl)[-1]
print("monitor row:", {t: int(v) for t, v in zip(ctl.transition_ids, row) if v})
print("monitor tokens:", m_ctl[-1])

# %%
rep = verify_supervisor(ctl, m_ctl, ctx.classification.robust, out.forbidden)
print("reachable:", len(rep.reachable), "ok:", rep.ok)

# %%
# the literal threshold policy forbids fewer markings but yields the same monitor
thr = Pipeline(doc.net, doc.structure(), doc.m0, "p12", policy="threshold").run(1)
print(len(thr.forbidden), "forbidden ->", [str(g) for g in thr.plan.constraints])
