"""Segmentation metrics from pixel confusion counts, step by step.

All six reported metrics derive from per-image TP/FP/TN/FN pixel counts.
This script builds a tiny example by hand, checks the classic identities,
and shows why per-image averaging and pooled ('global') counting disagree.

Run:  python3 demos/metrics_demo.py
"""

import numpy as np

from polypgan.metrics import (
    REPORTED_TEST_METRICS,
    accuracy,
    confusion,
    dsc,
    f_beta,
    jaccard,
    precision,
    recall,
    report_from_counts,
)

# a 4x4 prediction that overlaps the truth but spills over on one side
pred = np.array([[0, 1, 1, 0],
                 [0, 1, 1, 0],
                 [0, 1, 1, 0],
                 [0, 0, 0, 0]])
truth = np.array([[0, 0, 1, 1],
                  [0, 0, 1, 1],
                  [0, 0, 0, 0],
                  [0, 0, 0, 0]])

c = confusion(pred, truth)
print(f"counts: tp={c.tp} fp={c.fp} tn={c.tn} fn={c.fn}")
print(f"jaccard   = {jaccard(c):.4f}   (tp / (tp+fp+fn))")
print(f"dsc       = {dsc(c):.4f}   (2tp / (2tp+fp+fn))")
print(f"precision = {precision(c):.4f}")
print(f"recall    = {recall(c):.4f}")
print(f"accuracy  = {accuracy(c):.4f}")
print(f"f2        = {f_beta(precision(c), recall(c), 2.0):.4f}")

# identity: DSC = 2J / (1 + J) holds per image, exactly
j = jaccard(c)
assert abs(dsc(c) - 2 * j / (1 + j)) < 1e-12
print("\nidentity DSC = 2J/(1+J) holds to 1e-12")

# aggregation: a perfect image and a disjoint image
perfect = confusion(truth, truth)
per_image = report_from_counts([c, perfect], "per_image_mean")
pooled = report_from_counts([c, perfect], "global_counts")
print(f"\nper-image mean Jaccard = {per_image.jaccard:.4f}")
print(f"pooled-count  Jaccard  = {pooled.jaccard:.4f}")
print("the two aggregations differ; per-image mean is the default")

# the published test-set numbers violate DSC = 2J/(1+J) under pooling,
# which is how we know they were per-image means on a hidden test set
j_pub = REPORTED_TEST_METRICS["jaccard"]
print(f"\npublished: J={j_pub}, DSC={REPORTED_TEST_METRICS['dsc']}, "
      f"but 2J/(1+J)={2 * j_pub / (1 + j_pub):.4f}")
