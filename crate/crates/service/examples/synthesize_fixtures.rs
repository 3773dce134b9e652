//! Regenerates the recorded-completion fixtures for the simulated models.
//!
//!     cargo run -p rxguard --example synthesize_fixtures -- <repo-root>
//!
//! Builds a scratch store from `fixtures/` (SmPCs, profiles, truth), renders
//! every prompt of the full experiment exactly as an evaluation run would,
//! and writes one seeded synthetic answer per prompt to
//! `fixtures/recorded/<model>.jsonl`, plus `manifest.csv` mapping each prompt
//! hash to its (model, rag, patient, medication) cell. Answers agree with
//! the ground truth with a per-model, per-setting probability; a few are
//! reformatted (fences, prose, key-case drift) and a few are broken.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rxguard::{Config, Engine};
use rxguard_core::domain::{GroundTruthSet, InteractionClass, Verdict};
use rxguard_core::gateway::{prompt_hash, CompletionRecord};
use rxguard_core::hash::fnv1a64;
use rxguard_core::prompt::DEFAULT_K;
use rxguard_core::store::Store;
use serde_json::{json, Value};

const MEDICATIONS: [(&str, &str); 5] = [
    ("Warfarin", "warfarin.txt"),
    ("Metformin", "metformin.txt"),
    ("Levothyroxine", "levothyroxine.txt"),
    ("Lisinopril", "lisinopril.txt"),
    ("Omeprazole", "omeprazole.txt"),
];

struct Model {
    id: &'static str,
    accuracy_norag: f64,
    accuracy_rag: f64,
}

const MODELS: [Model; 2] = [
    Model {
        id: "sim-alpha",
        accuracy_norag: 0.80,
        accuracy_rag: 0.92,
    },
    Model {
        id: "sim-beta",
        accuracy_norag: 0.70,
        accuracy_rag: 0.86,
    },
];

fn flip(v: Verdict) -> Verdict {
    match v {
        Verdict::Suitable => Verdict::Risky,
        _ => Verdict::Suitable,
    }
}

fn reason(class: InteractionClass, med: &str, v: Verdict) -> String {
    match v {
        Verdict::Suitable => format!("No {} concern identified for {med} in this patient.", class.name().to_lowercase()),
        Verdict::Risky => format!("The {med} label flags a {} concern relevant to this patient.", class.name().to_lowercase()),
        Verdict::NA => String::new(),
    }
}

fn render(entries: &[(String, Value)], indent: bool) -> String {
    let sep = if indent { ",\n  " } else { ", " };
    let body: Vec<String> = entries
        .iter()
        .map(|(k, v)| format!("{}: {}", serde_json::to_string(k).unwrap(), v))
        .collect();
    if indent {
        format!("{{\n  {}\n}}", body.join(sep))
    } else {
        format!("{{{}}}", body.join(sep))
    }
}

fn synthesize(rng: &mut ChaCha8Rng, truth: &[(InteractionClass, Verdict)], med: &str, accuracy: f64) -> String {
    let mut entries: Vec<(String, Value)> = Vec::new();
    let mut risky = 0;
    for class in InteractionClass::PROMPT_ORDER {
        let expected = truth
            .iter()
            .find(|(c, _)| *c == class)
            .map(|(_, v)| *v)
            .unwrap_or(Verdict::NA);
        let predicted = if expected == Verdict::NA {
            if rng.random::<f64>() < 0.9 {
                Verdict::NA
            } else {
                Verdict::Suitable
            }
        } else if rng.random::<f64>() < accuracy {
            expected
        } else if rng.random::<f64>() < 0.85 {
            flip(expected)
        } else {
            Verdict::NA
        };
        if predicted == Verdict::Risky {
            risky += 1;
        }
        entries.push((
            class.name().to_string(),
            json!({"result": predicted.as_str(), "reason": reason(class, med, predicted)}),
        ));
    }
    let score = (100 - 12 * risky + rng.random_range(-5i64..=5)).clamp(0, 100);
    let overall = json!({"score": score, "reason": format!("{risky} of 8 checks flagged for {med}.")});

    let roll = rng.random::<f64>();
    if roll < 0.03 {
        return match rng.random_range(0..5) {
            0 => {
                entries.retain(|(k, _)| k != "Genetics");
                entries.push(("Overall Suitability".into(), overall));
                render(&entries, true)
            }
            1 => {
                entries.push(("Overall Suitability".into(), json!({"score": 130, "reason": "very suitable"})));
                render(&entries, true)
            }
            2 => {
                entries.push(("Overall Suitability".into(), overall));
                let full = render(&entries, true);
                full[..full.len() * 2 / 3].to_string()
            }
            3 => format!("I am unable to provide a definitive assessment for {med} without further clinical review."),
            _ => {
                entries[0].1 = json!({"result": "Caution", "reason": "borderline"});
                entries.push(("Overall Suitability".into(), overall));
                render(&entries, true)
            }
        };
    }
    if roll < 0.12 {
        return match rng.random_range(0..5) {
            0 => {
                entries.push(("Overall Suitability".into(), overall));
                format!("```json\n{}\n```", render(&entries, true))
            }
            1 => {
                entries.push(("Overall Suitability".into(), overall));
                format!("Here is my assessment of {med}:\n\n{}\n\nPlease confirm with a pharmacist.", render(&entries, true))
            }
            2 => {
                for e in &mut entries {
                    e.0 = e.0.to_lowercase();
                }
                entries.push(("overall suitability".into(), overall));
                render(&entries, false)
            }
            3 => {
                entries.push(("OverallSuitability".into(), overall));
                render(&entries, true)
            }
            _ => {
                entries.push(("Overall Suitability".into(), json!({"score": score.to_string(), "reason": "see checks"})));
                render(&entries, false)
            }
        };
    }
    entries.push(("Overall Suitability".into(), overall));
    render(&entries, true)
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    let fixtures = root.join("fixtures");
    let scratch = tempfile::tempdir()?;
    Store::init(scratch.path())?;
    let engine = Engine::open(scratch.path(), Config::default())?;
    for (name, file) in MEDICATIONS {
        engine.ingest_smpc(&fixtures.join("smpc").join(file), name)?;
    }
    engine.index(None).await?;
    engine.import_profiles(&fixtures.join("profiles"))?;
    engine.import_truth(&fixtures.join("truth").join("truth.json"))?;
    let truth: GroundTruthSet = engine.ground_truth()?;
    let mut patients: Vec<String> = engine.profiles()?.into_iter().map(|p| p.id).collect();
    patients.sort();

    let out_dir = fixtures.join("recorded");
    std::fs::create_dir_all(&out_dir)?;
    let mut manifest = String::from("prompt_hash,model,rag,patient,medication\n");
    for model in &MODELS {
        let mut lines = String::new();
        for rag in [false, true] {
            for patient in &patients {
                for (name, _) in MEDICATIONS {
                    let med = rxguard_core::domain::slug(name);
                    let (prompt, _) = engine.prompt_for(patient, &med, rag, DEFAULT_K).await?;
                    let key = format!("{}|{rag}|{patient}|{med}", model.id);
                    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a64(key.as_bytes()));
                    let accuracy = if rag { model.accuracy_rag } else { model.accuracy_norag };
                    let text = synthesize(&mut rng, &truth.for_pair(patient, &med), name, accuracy);
                    let record = CompletionRecord {
                        prompt_hash: prompt_hash(&prompt),
                        response_text: text,
                        model_id: model.id.to_string(),
                        latency: rng.random_range(800..4000),
                    };
                    writeln!(lines, "{}", serde_json::to_string(&record)?)?;
                    writeln!(manifest, "{},{},{rag},{patient},{med}", record.prompt_hash, model.id)?;
                }
            }
        }
        let path: &Path = &out_dir.join(format!("{}.jsonl", model.id));
        std::fs::write(path, lines)?;
        println!("wrote {}", path.display());
    }
    std::fs::write(out_dir.join("manifest.csv"), manifest)?;
    println!("wrote {}", out_dir.join("manifest.csv").display());
    Ok(())
}
