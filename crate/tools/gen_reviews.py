#!/usr/bin/env python3
"""Generate the 12-profile clinician review fixture and freeze its summary.

The summary is computed here with pandas, independently of the Rust
aggregation, and checked in as fixtures/reviews/summary.csv.
"""

import json
import random
from pathlib import Path

import pandas as pd

ROOT = Path(__file__).resolve().parent.parent
SEED = 5150
PATIENTS = [f"P{i:03d}" for i in range(1, 13)]
MODELS = ["sim-alpha", "sim-beta"]
REVIEWERS = ["rev-a", "rev-b"]
METRICS = ["msa", "did", "psda", "pss", "ga"]


def main():
    rng = random.Random(SEED)
    rows = []
    minute = 0
    for model in MODELS:
        base = 3.9 if model == "sim-alpha" else 3.4
        for rag in (False, True):
            for patient in PATIENTS:
                for reviewer in REVIEWERS:
                    centre = base + (0.7 if rag else 0.0)
                    scores = {m: max(1, min(5, round(rng.gauss(centre, 0.6)))) for m in METRICS}
                    minute += 1
                    rows.append({
                        "reviewer_id": reviewer,
                        "patient_id": patient,
                        "model_id": model,
                        "rag_enabled": rag,
                        **scores,
                        "notes": None,
                        "created_at": f"2024-09-02T{9 + minute // 60:02d}:{minute % 60:02d}:00Z",
                    })
    out = ROOT / "fixtures" / "reviews"
    out.mkdir(parents=True, exist_ok=True)
    (out / "reviews.json").write_text(json.dumps(rows, indent=2) + "\n")

    df = pd.DataFrame(rows)
    g = df.groupby(["model_id", "rag_enabled"])
    summary = g[METRICS].mean()
    summary["count"] = g.size()
    summary["overall"] = df.assign(total=df[METRICS].sum(axis=1)).groupby(["model_id", "rag_enabled"])["total"].sum() / (5 * summary["count"])
    summary = summary.reset_index().rename(columns={"model_id": "model", "rag_enabled": "rag"})
    summary["rag"] = summary["rag"].map({False: "false", True: "true"})
    summary = summary[["model", "rag", "count", *METRICS, "overall"]]
    summary.to_csv(out / "summary.csv", index=False, float_format="%.17g")
    print(summary.to_string(index=False))


if __name__ == "__main__":
    main()
