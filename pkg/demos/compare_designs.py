"""
Three ways to clear coupled power and gas markets
=================================================

Clear the bundled three-bus, three-node system with the decoupled
sequential design, the coupled sequential design and the two-stage
stochastic design, then compare expected costs.
"""
from gaslight import cases
from gaslight.evaluation import performance_ratio
from gaslight.experiments import ideal_storage_baseline
from gaslight.policies import run_seq_coup, run_seq_dec, run_stoch_coup

system, scenarios = cases.case3x3()
print(f"{system.name}: T={system.T}, {len(scenarios)} wind scenarios")

runs = [run_seq_dec(system, scenarios), run_seq_coup(system, scenarios), run_stoch_coup(system, scenarios)]
for run in runs:
    r = run.report
    print(f"{run.label:12s} total {r.total:10.2f}  day-ahead {r.day_ahead:10.2f}  balancing {r.balancing:9.2f}")

# negative balancing is possible: the stochastic design may book more wind than forecast
stoch = runs[-1]
print("day-ahead wind, stochastic:", [round(stoch.schedule.w["W1", t], 1) for t in system.periods])
print("wind forecast:             ", list(system.wind[0].forecast))

# how much of the value of a perfect electric storage does linepack recover?
steady = run_stoch_coup(system.with_config(steady_state=True), scenarios).report.total
ideal = ideal_storage_baseline(system, scenarios).report.total
ratio = performance_ratio(steady, stoch.report.total, ideal)
print(f"steady-state {steady:.2f}, linepack {stoch.report.total:.2f}, ideal storage {ideal:.2f}")
print(f"linepack recovers {ratio.value:.1f}% of the ideal-storage saving")
