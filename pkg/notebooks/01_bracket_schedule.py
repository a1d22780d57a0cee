# %% [markdown]
# # Hyperband brackets and budget units
#
# A budget unit is 1% of the training rows. Hyperband with maximum budget
# R = 100 and reduction factor eta = 3 runs five brackets; the most aggressive
# one starts 81 configurations on 1.23% of the data and promotes a third of
# them at every rung.

# %%
from fractions import Fraction

from fairhpo.tuners import bracket_schedule

sched = bracket_schedule(100, 3)
print(sched.table())

# %% [markdown]
# Rung budgets stay real-valued, so the slices used for training are
# 1.23%, 3.70%, 11.1%, 33.3% and 100% of the training set.

# %%
for frac in sched.fractions():
    print(f"{frac:8.5f}  = {Fraction(frac).limit_denominator(1000)}")

# %% [markdown]
# One full pass costs the sum of n_i * r_i over every rung. That is the
# budget a Fairband run consumes; random search with 2400 units gets 24
# full-budget trials instead.

# %%
for b in sched.brackets:
    print(f"bracket s={b.s}: {b.n:3d} configs, cost {b.cost:8.2f}")
print("one pass:", round(sched.total_budget, 6))
print("random search trials for 2400 units:", 2400 // 100)

# %% [markdown]
# Smaller settings behave as expected: R = 9 gives three brackets.

# %%
print(bracket_schedule(9, 3).table())
