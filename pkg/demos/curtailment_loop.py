"""
When gas-fired units run out of gas
===================================

In the decoupled design the electricity balancing market calls on a
gas-fired unit without knowing whether the gas network can deliver the
fuel. If residential gas load is shed as a result, the unit's upward
regulation is capped and both balancing markets are cleared again.
"""
from gaslight import cases
from gaslight.policies import gfpp_caused_shed, run_seq_coup, run_seq_dec

system, scenarios = cases.tight_gas()
dec = run_seq_dec(system, scenarios)

for step in dec.trace:
    caps = {f"{u}@{t + 1}": round(v, 2) for (u, t), v in sorted(step.caps.items())}
    print(f"scenario {step.scenario:5s} pass {step.iteration}: gas shed {step.gas_shed:8.3f} kcf  caps {caps}")

print("gas shed caused by gas-fired units after the loop:", gfpp_caused_shed(dec, system))

# clearing both systems together never schedules fuel the network cannot bring
seq = run_seq_coup(system, scenarios)
print("coupled design, total gas shed:", sum(sum(oc.shed_g.values()) for oc in seq.outcomes.values()))
print(f"expected cost: decoupled {dec.report.total:.2f}, coupled {seq.report.total:.2f}")
