"""Full-scale protocol on the public Kvasir-SEG polyp dataset (optional).

Trains the full network pair (f=64, 256x256) on an 80/20 split of the
1000 Kvasir-SEG image/mask pairs and reports validation metrics. The
output is informational only: the published reference numbers (see
polypgan.metrics.REPORTED_TEST_METRICS) were computed by challenge
organizers on a hidden 160-image test set and cannot be reproduced from
the public data.

Expects the extracted dataset layout:
    <root>/images/*.jpg
    <root>/masks/*.jpg

Run:  python3 demos/kvasir_protocol.py /path/to/Kvasir-SEG [out_dir]
(hours on CPU; a fraction of that per epoch — checkpoints land every epoch)
"""

import os
import sys
import tempfile

from polypgan import cli
from polypgan.core_types import DatasetRecord, write_manifest

if len(sys.argv) < 2:
    print(__doc__)
    sys.exit(2)

root = sys.argv[1]
out_dir = sys.argv[2] if len(sys.argv) > 2 else tempfile.mkdtemp(prefix="kvasir_")
image_dir = os.path.join(root, "images")
mask_dir = os.path.join(root, "masks")
if not (os.path.isdir(image_dir) and os.path.isdir(mask_dir)):
    print(f"expected {root}/images and {root}/masks")
    sys.exit(2)

records = []
for name in sorted(os.listdir(image_dir)):
    stem, ext = os.path.splitext(name)
    if ext.lower() not in (".jpg", ".jpeg", ".png"):
        continue
    mask = os.path.join(mask_dir, name)
    if not os.path.exists(mask):
        print(f"skipping {name}: no matching mask")
        continue
    records.append(DatasetRecord(
        id=stem,
        image_path=os.path.join(image_dir, name),
        mask_path=mask,
    ))

manifest = os.path.join(out_dir, "kvasir_manifest.tsv")
os.makedirs(out_dir, exist_ok=True)
write_manifest(manifest, records)
print(f"{len(records)} pairs; manifest at {manifest}")

rc = cli.main([
    "train",
    "--data", manifest,
    "--out", out_dir,
    "--epochs", "12",
    "--batch", "4",
    "--lr", "0.002",
    "--f", "64",
    "--size", "256",
    "--split", "0.8",
    "--seed", "0",
])
sys.exit(rc)
