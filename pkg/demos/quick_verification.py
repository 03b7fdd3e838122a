"""Run the self-contained verification suites and read their ledgers."""

# %%
from nsdiag.report import summary_csv
from nsdiag.suites import run_suite

# %% [markdown]
# Each report stores lhs / rhs per case, with the unknown constant left out.
# A check passes when every ratio is finite and under its cap.

# %%
reports = []
for name in ("iteration", "embedding", "lemma21"):
    reports.extend(run_suite(name, quick=True))
print(summary_csv(reports))

# %%
emb = reports[1]
print(f"embedding ratios: median {emb.median_ratio:.3f}, max {emb.max_ratio:.3f}, cap {emb.cap:.3f}")
