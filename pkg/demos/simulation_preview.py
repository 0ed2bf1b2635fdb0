"""Small-scale look at how MSP separates null, weak and strong effects.

Run with ``python3 demos/simulation_preview.py``. The full-size blocks are
available through ``msp simulate``.
"""
from msp.simulation import decision_metrics, run_power_study

reps, summary = run_power_study(R=12, n=400, B=60, seed=0)
print(f"{'tau':>5} {'P(MSP=inf)':>11} {'median MSP':>11} {'share sig':>10}")
for row in summary:
    print(f"{row['tau']:>5g} {row['p_msp_inf']:>11.2f} {row['median_finite_msp']:>11g} "
          f"{row['share_sig_any']:>10.2f}")

m = decision_metrics(reps)
print("\nAUC for separating tau in {0.7, 1.5} from tau in {0, 0.3}:")
for name, value in sorted(m["auc"].items(), key=lambda kv: -kv[1]):
    print(f"  {name:>18}: {value:.3f}")
