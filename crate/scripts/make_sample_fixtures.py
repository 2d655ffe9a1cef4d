#!/usr/bin/env python3
"""Writes the small synthetic audit fixture under fixtures/sample/.

8 image rows (4 "male", 4 "female"), 6 statements in 2 categories with
2 templates each, dim 6. Groups are offset along one axis so the audit has
visible structure; values are rounded to 5 decimals for readability.
"""
import json
from pathlib import Path

import numpy as np

DIM = 6
rng = np.random.default_rng(20240607)
out = Path(__file__).resolve().parent.parent / "fixtures" / "sample"
out.mkdir(parents=True, exist_ok=True)

axis = np.zeros(DIM)
axis[0] = 1.0
base = np.full(DIM, 0.4)

def unit(x):
    return x / np.linalg.norm(x, axis=-1, keepdims=True)

header = ",".join(f"d{i}" for i in range(DIM))
lines = [f"id,group,{header}"]
for i in range(8):
    group = "male" if i % 2 == 0 else "female"
    sign = 1.0 if group == "male" else -1.0
    v = unit(base + 0.35 * sign * axis + 0.25 * rng.normal(size=DIM))
    lines.append(f"img{i:02d},{group}," + ",".join(f"{x:.5f}" for x in v))
(out / "images.csv").write_text("\n".join(lines) + "\n")

statements = [
    ("firefighter", "firefighter", "Physical labor", 0.8),
    ("carpenter", "carpenter", "Physical labor", 0.5),
    ("truck-driver", "truck driver", "Physical labor", 0.2),
    ("nurse", "nurse", "Emotional labor", -0.7),
    ("teacher", "teacher", "Emotional labor", -0.3),
    ("caregiver", "caregiver", "Emotional labor", -0.5),
]
templates = ["A person performing {x}", "An occupation that involves {x}"]
lines = [f"id,statement_id,template_index,{header}"]
for sid, _, _, lean in statements:
    direction = base + lean * axis + 0.3 * rng.normal(size=DIM)
    for t in range(len(templates)):
        v = unit(direction + 0.05 * rng.normal(size=DIM))
        lines.append(f"{sid}-t{t},{sid},{t}," + ",".join(f"{x:.5f}" for x in v))
(out / "texts.csv").write_text("\n".join(lines) + "\n")

taxonomy = {
    "version": "taxonomy/1",
    "description": "Six-statement fixture for end-to-end tests.",
    "categories": ["Physical labor", "Emotional labor"],
    "templates": templates,
    "statements": [
        {"id": sid, "text": text, "category": cat, "kind": "occupation"}
        for sid, text, cat, _ in statements
    ],
}
(out / "taxonomy.json").write_text(json.dumps(taxonomy, indent=2) + "\n")
