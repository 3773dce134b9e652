#!/usr/bin/env python3
"""Compute the golden metrics table from the recorded fixtures.

This is an independent oracle: it re-parses every recorded answer with its
own reading of the answer rules and scores it with scikit-learn, without
touching the Rust code. The output is frozen as fixtures/golden/metrics.csv.

Answer rules: parse the whole text as a JSON object, else the first
balanced {...} substring (string-aware); keys match case-insensitively
after trimming; all eight classes and "Overall Suitability" (or
"OverallSuitability") exactly once; results Suitable / Risky / N/A
(N/A also as NA, n/a, Not Applicable); non-N/A results need a non-blank
reason; score a number or numeric string in [0, 100].
"""

import csv
import json
import math
from collections import defaultdict
from pathlib import Path

from sklearn.metrics import accuracy_score, precision_recall_fscore_support

ROOT = Path(__file__).resolve().parent.parent
CLASSES = ["Age", "Comorbidities", "Contraindications", "Dose", "Genetics", "Lactation", "Pregnancy", "Warnings"]
NA_WORDS = {"n/a", "na", "not applicable"}


def first_balanced(text):
    start = text.find("{")
    while start != -1:
        depth, in_str, esc = 0, False, False
        for i in range(start, len(text)):
            ch = text[i]
            if in_str:
                if esc:
                    esc = False
                elif ch == "\\":
                    esc = True
                elif ch == '"':
                    in_str = False
            elif ch == '"':
                in_str = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    return text[start:i + 1]
        start = text.find("{", start + 1)
    return None


def load_pairs(text):
    def hook(pairs):
        return pairs
    try:
        obj = json.loads(text.strip(), object_pairs_hook=hook)
        if isinstance(obj, list) and all(isinstance(p, tuple) for p in obj):
            return obj
    except ValueError:
        pass
    cand = first_balanced(text)
    if cand is None:
        return None
    try:
        obj = json.loads(cand, object_pairs_hook=hook)
    except ValueError:
        return None
    return obj


def verdict(s):
    t = s.strip().lower()
    if t == "suitable":
        return "Suitable"
    if t == "risky":
        return "Risky"
    if t in NA_WORDS:
        return "N/A"
    return None


def parse(text):
    """Per-class verdicts, or None when the answer is invalid."""
    pairs = load_pairs(text)
    if pairs is None:
        return None
    found, overall = {}, []
    for k, v in pairs:
        key = k.strip().lower()
        cls = next((c for c in CLASSES if c.lower() == key), None)
        if cls:
            if cls in found:
                return None
            found[cls] = v
        elif key in ("overall suitability", "overallsuitability"):
            overall.append(v)
    if len(found) != 8 or len(overall) != 1:
        return None
    out = {}
    for cls, v in found.items():
        d = {k.strip().lower(): val for k, val in v} if isinstance(v, list) else None
        if d is None or not isinstance(d.get("result"), str):
            return None
        r = verdict(d["result"])
        if r is None:
            return None
        reason = d.get("reason")
        reason = "" if reason is None else (reason if isinstance(reason, str) else json.dumps(reason))
        if r != "N/A" and not reason.strip():
            return None
        out[cls] = r
    o = overall[0]
    if not isinstance(o, list):
        return None
    od = {k.strip().lower(): val for k, val in o}
    score = od.get("score")
    if isinstance(score, bool):
        return None
    if isinstance(score, str):
        try:
            score = float(score.strip())
        except ValueError:
            return None
    if not isinstance(score, (int, float)) or not math.isfinite(score) or not 0 <= score <= 100:
        return None
    return out


def main():
    truth = {}
    for e in json.loads((ROOT / "fixtures/truth/truth.json").read_text()):
        truth[(e["patient_id"], e["medication_id"], e["class"])] = e["label"]
    responses = {}
    for model_file in sorted((ROOT / "fixtures/recorded").glob("*.jsonl")):
        for line in model_file.read_text().splitlines():
            r = json.loads(line)
            responses[(r["model_id"], r["prompt_hash"])] = r["response_text"]

    pairs = defaultdict(lambda: ([], []))
    invalid = defaultdict(int)
    cells = set()
    with open(ROOT / "fixtures/recorded/manifest.csv") as f:
        for row in csv.DictReader(f):
            cell = (row["model"], row["rag"] == "true")
            cells.add(cell)
            parsed = parse(responses[(row["model"], row["prompt_hash"])])
            if parsed is None:
                invalid[cell] += 1
                continue
            for cls in CLASSES:
                expected = truth.get((row["patient"], row["medication"], cls))
                if expected is None or expected == "N/A":
                    continue
                pairs[(cell, cls)][0].append(expected)
                pairs[(cell, cls)][1].append(parsed[cls])

    out = ROOT / "fixtures/golden/metrics.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["model", "rag", "class", "accuracy", "precision", "recall", "f1", "support", "invalid_count"])
        for cell in sorted(cells):
            for cls in CLASSES:
                y_true, y_pred = pairs.get((cell, cls), ([], []))
                rag = "true" if cell[1] else "false"
                if not y_true:
                    w.writerow([cell[0], rag, cls, "", "", "", "", 0, invalid[cell]])
                    continue
                p, r, f1, _ = precision_recall_fscore_support(
                    y_true, y_pred, labels=["Suitable", "Risky"], average="weighted", zero_division=0)
                acc = accuracy_score(y_true, y_pred)
                w.writerow([cell[0], rag, cls, repr(float(acc)), repr(float(p)), repr(float(r)), repr(float(f1)),
                            len(y_true), invalid[cell]])
    print(out.read_text())


if __name__ == "__main__":
    main()
