"""
Failures and repairs under the multi-model controller
=====================================================
"""

# %%
from s4pr import case_study
from s4pr.controller import (
    FailureScenario,
    independent_activity,
    simulate,
    synthesize_controller,
)
from s4pr.io import fmt_marking

doc = case_study()
mmc = synthesize_controller(doc.net, doc.structure(), doc.m0, "p12")

# %%
# both units fail: only line 3 keeps working
tr = simulate(mmc, doc.m0, FailureScenario.of("FAIL", "FAIL", ("AUTO", 20, 7)))
for st in tr.steps[:6]:
    print(st.step, st.event, st.transition, "model", st.model, fmt_marking(st.marking))
print(independent_activity(tr, mmc))

# %%
# a failure is refused once two parts sit in line 1
tr = simulate(mmc, doc.m0, FailureScenario.of(("FIRE", "t1"), ("FIRE", "t1"), "FAIL"))
print([(s.event, s.reason) for s in tr.rejected])

# %%
tr = simulate(mmc, doc.m0, FailureScenario.of("FAIL", ("AUTO", 50), "REPAIR", ("AUTO", 50), seed=3))
print("final model", tr.model, fmt_marking(tr.final))
