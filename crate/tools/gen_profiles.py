#!/usr/bin/env python3
"""Generate the 25 synthetic patient profiles and their ground-truth labels.

Profiles are drawn from a seeded RNG so reruns are byte-identical. Truth
labels come from explicit per-medication rules over the profile, written
against the label text in fixtures/smpc/.

    python3 tools/gen_profiles.py            # writes fixtures/profiles/*.json, fixtures/truth/truth.json
"""

import json
import random
from datetime import datetime, timedelta, timezone
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
SEED = 20240617
N = 25

FIRST = ["Avery", "Jordan", "Morgan", "Riley", "Casey", "Quinn", "Rowan", "Sage", "Emerson", "Harper",
         "Skyler", "Reese", "Dakota", "Finley", "Hayden", "Kendall", "Logan", "Parker", "Taylor", "Blake",
         "Cameron", "Drew", "Elliot", "Jamie", "Kai"]
LAST = ["Ashford", "Brennan", "Calloway", "Dunmore", "Ellery", "Fairbanks", "Galloway", "Hollis", "Irving",
        "Jessup", "Kincaid", "Lockhart", "Merriman", "Norwood", "Oakley", "Prescott", "Quimby", "Radcliffe",
        "Stanton", "Thorne", "Underhill", "Vance", "Whitlock", "Yardley", "Zeller"]
RACES = ["white", "black", "asian", "hispanic", "other"]
BLOOD = ["A+", "A-", "B+", "B-", "AB+", "AB-", "O+", "O-"]

COMORBIDITIES = [
    "atrial fibrillation", "type 2 diabetes", "hypertension", "chronic kidney disease",
    "heart failure", "hypothyroidism", "gastro-oesophageal reflux disease", "asthma", "osteoporosis",
    "peptic ulcer", "liver cirrhosis", "coronary artery disease", "aortic stenosis", "hereditary angioedema",
]
DIAG_CODES = {
    "atrial fibrillation": "I48.91", "type 2 diabetes": "E11.9", "hypertension": "I10",
    "chronic kidney disease": "N18.4", "heart failure": "I50.9", "hypothyroidism": "E03.9",
    "gastro-oesophageal reflux disease": "K21.9", "asthma": "J45.909", "osteoporosis": "M81.0",
    "peptic ulcer": "K27.9", "liver cirrhosis": "K74.60", "coronary artery disease": "I25.10",
    "aortic stenosis": "I35.0", "hereditary angioedema": "D84.1",
}
GENETIC = {
    "CYP2C9 poor metaboliser": "Z15.89",
    "VKORC1 -1639A carrier": "Z15.89",
    "CYP2C19 poor metaboliser": "Z15.89",
}
ALLERGIES = ["penicillin", "sulfonamides", "latex", "ace inhibitors", "benzimidazoles", "codeine", "warfarin"]
OTHER_DRUGS = [
    ("amiodarone", 200, "mg"), ("aspirin", 75, "mg"), ("ibuprofen", 400, "mg"), ("clopidogrel", 75, "mg"),
    ("atorvastatin", 20, "mg"), ("spironolactone", 25, "mg"), ("furosemide", 40, "mg"),
    ("lithium", 400, "mg"), ("methotrexate", 10, "mg"), ("calcium carbonate", 1250, "mg"),
]
STUDY_DRUGS = [("warfarin", 5, "mg"), ("metformin", 500, "mg"), ("levothyroxine", 50, "microgram"),
               ("lisinopril", 10, "mg"), ("omeprazole", 20, "mg")]
SCHEDULES = ["once daily", "twice daily", "three times daily", "once weekly"]
MEDICATIONS = ["warfarin", "metformin", "levothyroxine", "lisinopril", "omeprazole"]


def iso(dt):
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


def make_profile(i, rng):
    pid = f"P{i:03d}"
    gender = "female" if i % 2 == 1 else "male"
    age = rng.choice([rng.randint(19, 44), rng.randint(45, 74), rng.randint(75, 92)])
    pregnancy, lactation = "not_pregnant", "not_lactating"
    if gender == "female" and i % 4 == 1:
        age = rng.randint(22, 40)
        pregnancy, lactation = {1: ("pregnant", "not_lactating"), 5: ("not_pregnant", "lactating"),
                                9: ("pregnant", "not_lactating"), 13: ("not_pregnant", "lactating"),
                                17: ("pregnant", "not_lactating"), 21: ("unknown", "unknown"),
                                25: ("not_pregnant", "lactating")}[i]
    comorbidities = sorted(rng.sample(COMORBIDITIES, rng.randint(0, 3)))
    genetics = sorted(rng.sample(list(GENETIC), 1)) if rng.random() < 0.3 else []
    diagnoses = [{"code": DIAG_CODES[c], "label": c} for c in comorbidities]
    diagnoses += [{"code": GENETIC[g], "label": g} for g in genetics]
    allergies = sorted(rng.sample(ALLERGIES, rng.randint(0, 2)))

    admitted = datetime(2024, 1, 1, 8, tzinfo=timezone.utc) + timedelta(days=rng.randint(0, 300), hours=rng.randint(0, 12))
    courses = []
    for name, dose, unit in rng.sample(OTHER_DRUGS, rng.randint(0, 3)) + rng.sample(STUDY_DRUGS, rng.randint(0, 1)):
        start = admitted.date() - timedelta(days=rng.randint(30, 900))
        end = None
        if rng.random() < 0.25:
            end = start + timedelta(days=rng.randint(7, 25))
        course = {"drug_name": name, "dose_value": float(dose), "dose_unit": unit,
                  "schedule": rng.choice(SCHEDULES), "start": start.isoformat()}
        if end:
            course["end"] = end.isoformat()
        courses.append(course)

    egfr = 95 - max(0, age - 40) * 0.7 + rng.uniform(-8, 8)
    if "chronic kidney disease" in comorbidities:
        egfr = rng.uniform(18, 42)
    taken = iso(admitted + timedelta(hours=2))
    labs = [
        {"name": "eGFR", "value": round(egfr, 1), "unit": "mL/min/1.73m2", "taken_at": taken},
        {"name": "INR", "value": round(rng.uniform(0.9, 1.3), 2), "unit": "ratio", "taken_at": taken},
        {"name": "TSH", "value": round(rng.uniform(0.4, 4.5) if "hypothyroidism" not in comorbidities else rng.uniform(5, 12), 2), "unit": "mIU/L", "taken_at": taken},
        {"name": "HbA1c", "value": round(rng.uniform(5.0, 6.2) if "type 2 diabetes" not in comorbidities else rng.uniform(6.8, 9.5), 1), "unit": "%", "taken_at": taken},
        {"name": "potassium", "value": round(rng.uniform(3.6, 5.2), 1), "unit": "mmol/L", "taken_at": taken},
    ]
    vitals = [
        {"name": "systolic blood pressure", "value": float(rng.randint(105, 165)), "unit": "mmHg", "taken_at": iso(admitted)},
        {"name": "heart rate", "value": float(rng.randint(55, 110)), "unit": "bpm", "taken_at": iso(admitted)},
        {"name": "weight", "value": float(rng.randint(48, 115)), "unit": "kg", "taken_at": iso(admitted)},
    ]
    admission = {"urgency": rng.choice(["elective", "urgent", "emergency"]), "admitted_at": iso(admitted)}
    if rng.random() < 0.6:
        admission["discharged_at"] = iso(admitted + timedelta(days=rng.randint(1, 12)))
    surgical = sorted(rng.sample(["appendectomy", "cholecystectomy", "hip replacement", "caesarean section", "CABG"], rng.randint(0, 1)))
    if gender == "male":
        surgical = [s for s in surgical if s != "caesarean section"]
    return {
        "id": pid,
        "synthetic_name": f"{FIRST[i - 1]} {LAST[(i * 7) % len(LAST)]}",
        "age": age,
        "gender": gender,
        "race": rng.choice(RACES),
        "blood_type": rng.choice(BLOOD),
        "allergies": allergies,
        "diagnoses": diagnoses,
        "comorbidities": comorbidities,
        "medication_courses": courses,
        "lab_results": labs,
        "vitals": vitals,
        "admission": admission,
        "pregnancy_status": pregnancy,
        "lactation_status": lactation,
        "surgical_history": surgical,
        "verified": True,
    }


# ---------------------------------------------------------------------------
# Ground-truth rules
# ---------------------------------------------------------------------------

def lab(p, name):
    return next(m["value"] for m in p["lab_results"] if m["name"] == name)


def current(p):
    return {c["drug_name"] for c in p["medication_courses"] if "end" not in c}


def has(p, *conditions):
    return any(c in p["comorbidities"] for c in conditions)


def gene(p, prefix):
    return any(d["label"].startswith(prefix) for d in p["diagnoses"])


def r(flag):
    return "Risky" if flag else "Suitable"


def truth_for(p, med):
    age, egfr, drugs = p["age"], lab(p, "eGFR"), current(p)
    male = p["gender"] == "male"
    pregnant = p["pregnancy_status"] == "pregnant"
    lactating = p["lactation_status"] == "lactating"
    allergic = med in p["allergies"] or (med == "lisinopril" and "ace inhibitors" in p["allergies"]) \
        or (med == "omeprazole" and "benzimidazoles" in p["allergies"])
    t = {}
    if med == "warfarin":
        t["Age"] = r(age >= 75)
        t["Comorbidities"] = r(has(p, "peptic ulcer", "liver cirrhosis", "chronic kidney disease"))
        t["Contraindications"] = r(allergic or pregnant or has(p, "peptic ulcer"))
        t["Dose"] = r(age >= 75 or gene(p, "CYP2C9") or gene(p, "VKORC1") or has(p, "liver cirrhosis", "heart failure"))
        t["Genetics"] = r(gene(p, "CYP2C9") or gene(p, "VKORC1"))
        t["Lactation"] = "Suitable"
        t["Pregnancy"] = r(pregnant)
        t["Warnings"] = r(bool(drugs & {"amiodarone", "aspirin", "ibuprofen", "clopidogrel", "omeprazole", "levothyroxine"}))
    elif med == "metformin":
        t["Age"] = r(age >= 75)
        t["Comorbidities"] = r(has(p, "chronic kidney disease", "heart failure", "liver cirrhosis"))
        t["Contraindications"] = r(allergic or egfr < 30 or has(p, "liver cirrhosis", "heart failure"))
        t["Dose"] = r(egfr < 60)
        t["Genetics"] = "N/A"
        t["Lactation"] = r(lactating)
        t["Pregnancy"] = r(pregnant)
        t["Warnings"] = r(bool(drugs & {"ibuprofen", "furosemide", "lisinopril"}) or egfr < 45)
    elif med == "levothyroxine":
        t["Age"] = r(age >= 75)
        t["Comorbidities"] = r(has(p, "atrial fibrillation", "coronary artery disease", "heart failure"))
        t["Contraindications"] = r(allergic)
        t["Dose"] = r(age > 50 or has(p, "atrial fibrillation", "coronary artery disease"))
        t["Genetics"] = "N/A"
        t["Lactation"] = "Suitable"
        t["Pregnancy"] = "Suitable"
        t["Warnings"] = r(bool(drugs & {"warfarin", "omeprazole", "calcium carbonate", "metformin"}) or has(p, "type 2 diabetes", "osteoporosis"))
    elif med == "lisinopril":
        t["Age"] = "Suitable"
        t["Comorbidities"] = r(has(p, "chronic kidney disease", "aortic stenosis", "hereditary angioedema"))
        t["Contraindications"] = r(allergic or pregnant or has(p, "hereditary angioedema"))
        t["Dose"] = r(egfr < 30 or has(p, "heart failure"))
        t["Genetics"] = "N/A"
        t["Lactation"] = r(lactating)
        t["Pregnancy"] = r(pregnant)
        t["Warnings"] = r(bool(drugs & {"spironolactone", "lithium", "ibuprofen", "furosemide"}))
    elif med == "omeprazole":
        t["Age"] = "Suitable"
        t["Comorbidities"] = r(has(p, "osteoporosis", "liver cirrhosis"))
        t["Contraindications"] = r(allergic)
        t["Dose"] = r(has(p, "liver cirrhosis") or gene(p, "CYP2C19"))
        t["Genetics"] = r(gene(p, "CYP2C19"))
        t["Lactation"] = "Suitable"
        t["Pregnancy"] = "Suitable"
        t["Warnings"] = r(bool(drugs & {"clopidogrel", "warfarin", "methotrexate", "levothyroxine"}))
    if male:
        t["Pregnancy"] = "N/A"
        t["Lactation"] = "N/A"
    return t


def main():
    rng = random.Random(SEED)
    profiles = [make_profile(i, rng) for i in range(1, N + 1)]
    out = ROOT / "fixtures" / "profiles"
    out.mkdir(parents=True, exist_ok=True)
    for p in profiles:
        (out / f"{p['id']}.json").write_text(json.dumps(p, indent=2) + "\n")
    truth = []
    for p in profiles:
        for med in MEDICATIONS:
            for cls, label in sorted(truth_for(p, med).items()):
                truth.append({"patient_id": p["id"], "medication_id": med, "class": cls, "label": label})
    tdir = ROOT / "fixtures" / "truth"
    tdir.mkdir(parents=True, exist_ok=True)
    (tdir / "truth.json").write_text(json.dumps(truth, indent=2) + "\n")
    print(f"{len(profiles)} profiles, {len(truth)} truth entries")


if __name__ == "__main__":
    main()
