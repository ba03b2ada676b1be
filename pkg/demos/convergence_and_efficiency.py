"""Convergence orders and work-precision curves on the outer solar system.

First the global error at 2000 days is measured for a handful of schemes
against an eighth-order Runge-Kutta reference, and the fitted slope is
compared with the nominal order.  Then the error after 200,000 days is set
against the number of force evaluations spent: the force-gradient schemes
buy an order of magnitude in accuracy at the same cost.

    python demos/convergence_and_efficiency.py
"""

from hfgi.engine import error_ratio_at_equal_work, global_error, integrate, measure_order, reference_solution
from hfgi.models.solar import default_initial_data
from hfgi.schemes import get_scheme

model, state = default_initial_data()

print("convergence at t = 2000 days")
ref = reference_solution(model, state, 2000.0)
for name in ("BAB", "BABABAB", "BADAB", "ABADABADABA", "BADADADAB"):
    s = get_scheme(name)
    hs = [100.0, 50.0, 25.0] if s.order_p >= 6 else [40.0, 20.0, 10.0]
    fit = measure_order(s, model, state, 2000.0, hs, reference=ref)
    errs = "  ".join(f"{e:.2e}" for e in fit.errors)
    print(f"  {name:<14} p={s.order_p}  fitted {fit.slope:5.2f}   errors {errs}")

print("\nwork vs error at t = 200,000 days")
t_end = 200000.0
ref = reference_solution(model, state, t_end)
curves = {}
for name in ("BABABABABAB", "BADAB", "ABADABADABA"):
    work, err = [], []
    for n in range(1000, 10001, 1000):
        out, counter = integrate(get_scheme(name), model, state, t_end / n, n)
        work.append(counter.work)
        err.append(global_error(out, ref))
    curves[name] = (work, err)
    print(f"  {name:<12} " + "  ".join(f"{w}:{e:.1e}" for w, e in zip(work[::3], err[::3])))

for other in ("BADAB", "ABADABADABA"):
    r = error_ratio_at_equal_work(curves["BABABABABAB"], curves[other], 1e-4)
    print(f"\nat equal force evaluations (error <= 1e-4) {other} is at least {r:.1f}x more accurate"
          " than BABABABABAB")
