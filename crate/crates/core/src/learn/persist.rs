//! Plain-text model files and external score tables.
//!
//! ```text
//! steiner-prune-model 1
//! kind logistic
//! seed 7
//! epochs 5000
//! l2 0.001
//! ...
//! bias -0.25
//! feature lp_value <mean> <std> <weight>
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so reading a file
//! back reproduces the model bit for bit.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{ClassifierKind, Hyperparams, TrainedModel, TrainingMeta};
use crate::error::{Error, Result};

const MAGIC: &str = "steiner-prune-model";
const VERSION: u32 = 1;

pub fn write_model(model: &TrainedModel) -> String {
    let h = &model.meta.hyperparams;
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    let _ = writeln!(out, "kind {}", model.kind.as_str());
    let _ = writeln!(out, "seed {}", model.meta.seed);
    let _ = writeln!(out, "epochs {}", model.meta.epochs);
    let _ = writeln!(out, "l2 {}", h.l2);
    let _ = writeln!(out, "learning_rate {}", h.learning_rate);
    let _ = writeln!(out, "lr_decay {}", h.lr_decay);
    let _ = writeln!(out, "max_epochs {}", h.max_epochs);
    let _ = writeln!(out, "tol {}", h.tol);
    let _ = writeln!(out, "batch_size {}", h.batch_size);
    let _ = writeln!(out, "balance_classes {}", h.balance_classes);
    let _ = writeln!(
        out,
        "class_weights {} {}",
        model.meta.class_weights[0], model.meta.class_weights[1]
    );
    let _ = writeln!(out, "bias {}", model.bias);
    for i in 0..model.feature_count() {
        let _ = writeln!(
            out,
            "feature {} {} {} {}",
            model.feature_names[i], model.means[i], model.stds[i], model.weights[i]
        );
    }
    out
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::ModelFormat(format!("line {line}: {msg}"))
}

fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| bad(line, format!("cannot parse {s:?}")))
}

pub fn read_model(text: &str) -> Result<TrainedModel> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty model file"))?;
    match header.split_whitespace().collect::<Vec<_>>().as_slice() {
        [MAGIC, v] if *v == VERSION.to_string() => {}
        _ => return Err(bad(1, format!("expected `{MAGIC} {VERSION}`"))),
    }
    let mut kind = None;
    let mut seed = 0;
    let mut epochs = 0;
    let mut h = Hyperparams::default();
    let mut class_weights = [1.0, 1.0];
    let mut bias = None;
    let (mut names, mut means, mut stds, mut weights) = (vec![], vec![], vec![], vec![]);
    for (ln, line) in lines {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let arg = |i: usize| parts.get(i).copied().ok_or_else(|| bad(ln, "missing value"));
        match parts[0] {
            "kind" => kind = Some(arg(1)?.parse::<ClassifierKind>()?),
            "seed" => seed = num(ln, arg(1)?)?,
            "epochs" => epochs = num(ln, arg(1)?)?,
            "l2" => h.l2 = num(ln, arg(1)?)?,
            "learning_rate" => h.learning_rate = num(ln, arg(1)?)?,
            "lr_decay" => h.lr_decay = num(ln, arg(1)?)?,
            "max_epochs" => h.max_epochs = num(ln, arg(1)?)?,
            "tol" => h.tol = num(ln, arg(1)?)?,
            "batch_size" => h.batch_size = num(ln, arg(1)?)?,
            "balance_classes" => h.balance_classes = num(ln, arg(1)?)?,
            "class_weights" => class_weights = [num(ln, arg(1)?)?, num(ln, arg(2)?)?],
            "bias" => bias = Some(num(ln, arg(1)?)?),
            "feature" => {
                if parts.len() != 5 {
                    return Err(bad(ln, "feature line needs name, mean, std, weight"));
                }
                names.push(parts[1].to_string());
                means.push(num(ln, parts[2])?);
                let s: f64 = num(ln, parts[3])?;
                if s < 0.0 {
                    return Err(bad(ln, "negative stddev"));
                }
                stds.push(s);
                weights.push(num(ln, parts[4])?);
            }
            other => return Err(bad(ln, format!("unknown key {other:?}"))),
        }
    }
    let kind = kind.ok_or_else(|| Error::ModelFormat("missing `kind`".into()))?;
    let bias = bias.ok_or_else(|| Error::ModelFormat("missing `bias`".into()))?;
    if weights.is_empty() {
        return Err(Error::ModelFormat("no feature lines".into()));
    }
    Ok(TrainedModel {
        kind,
        feature_names: names,
        means,
        stds,
        weights,
        bias,
        meta: TrainingMeta {
            seed,
            epochs,
            hyperparams: h,
            class_weights,
        },
    })
}

impl TrainedModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, write_model(self)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        read_model(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Edge scores produced outside this crate, keyed by instance name and
/// 0-based edge id.
pub type ScoreTable = HashMap<String, HashMap<usize, f64>>;

/// Reads `instance,edge_id,score` CSV (1-based edge ids, scores in [0, 1]).
pub fn read_scores_csv<R: std::io::Read>(reader: R) -> Result<ScoreTable> {
    let mut r = csv::Reader::from_reader(reader);
    let mut table = ScoreTable::new();
    for rec in r.records() {
        let rec = rec?;
        let bad = || Error::ModelFormat(format!("bad score row {:?}", rec.position()));
        if rec.len() < 3 {
            return Err(bad());
        }
        let edge: usize = rec[1].parse().map_err(|_| bad())?;
        let score: f64 = rec[2].parse().map_err(|_| bad())?;
        if edge == 0 || !(0.0..=1.0).contains(&score) {
            return Err(bad());
        }
        table
            .entry(rec[0].to_string())
            .or_default()
            .insert(edge - 1, score);
    }
    Ok(table)
}
