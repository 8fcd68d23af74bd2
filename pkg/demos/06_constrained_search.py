"""Constrained hyperparameter search with mid-training grid extension.

Step 1 screens candidate designs against hardware budgets; step 2 trains,
extending the spline grid while validation loss keeps improving and the
extended design still fits. The trace records every boundary decision.
"""

from kanedge.datasets import sine_regression
from kanedge.kan import TrainConfig
from kanedge.search import Constraints, SearchConfig, feasible, optimize

dataset = sine_regression(n_train=240, n_val=80, seed=3)

print("feasibility screen for a 1-in-1-out regressor:")
for G in (5, 10, 15, 20, 25):
    ok, report = feasible((1, 1), 3, G, Constraints(area_max=640.0))
    print(f"  G={G:2d}: area {report.area:7.1f}  fits 640.0 budget: {ok}")

cfg = SearchConfig(
    candidates=((1, 1),),
    g_init=5,
    g_step=5,
    g_max=30,
    epochs_per_round=8,
    train_cfg=TrainConfig(learning_rate=0.3, epochs=8, batch_size=32, seed=0),
    seed=42,
)
outcome = optimize(dataset, Constraints(area_max=640.0), cfg)
print("\nsearch trace (area budget 640.0):")
for step, entry in enumerate(outcome.trace):
    print(
        f"  step {step}: G={entry['G']:2d}  val loss {entry['val_loss']:.5f}  "
        f"area {entry['cost']['area']:7.1f}  -> {entry['decision']}"
    )
print(f"\nfinal grid size: {outcome.final_g} "
      f"({outcome.best_net.n_params} parameters, within budget by construction)")

unbounded = optimize(dataset, Constraints(), cfg)
print(f"without budgets the same run reaches G={unbounded.final_g}")
