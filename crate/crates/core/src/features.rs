//! Per-edge feature vectors and labelled training rows.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{CentralityTable, DirectedInstance};
use crate::instance::{EdgeId, SteinerInstance};
use crate::milp::{Mode, SolveResult};

pub const FEATURE_COUNT: usize = 12;

/// Column order of [`EdgeFeatureRow::features`].
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "lp_value",
    "weight_norm",
    "weight_std",
    "weight_chi2",
    "local_rank_min",
    "local_rank_max",
    "degree_min",
    "degree_max",
    "betweenness_min",
    "betweenness_max",
    "eigen_min",
    "eigen_max",
];

pub const LP_VALUE: usize = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFeatureRow {
    pub instance: String,
    pub edge_id: EdgeId,
    pub features: [f64; FEATURE_COUNT],
    pub label: Option<u8>,
}

/// Weight-derived features of one edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightFeatures {
    pub norm: f64,
    pub std: f64,
    pub chi2: f64,
}

/// LP value of each undirected edge: the larger of its two arc values.
pub fn lp_feature(inst: &SteinerInstance, relaxed: &SolveResult) -> Result<Vec<f64>> {
    if relaxed.mode != Mode::Relaxed {
        return Err(Error::NotRelaxed);
    }
    if inst.terminals().len() == 1 {
        return Ok(vec![0.0; inst.edge_count()]);
    }
    if relaxed.y_values.len() != 2 * inst.edge_count() {
        return Err(Error::MissingFeature(format!(
            "LP result has {} arc values, instance has {} edges",
            relaxed.y_values.len(),
            inst.edge_count()
        )));
    }
    Ok((0..inst.edge_count())
        .map(|e| {
            let [a, b] = DirectedInstance::arcs_of(e);
            relaxed.y_values[a].max(relaxed.y_values[b]).clamp(0.0, 1.0)
        })
        .collect())
}

/// Min-max normalised weight, z-score (population stddev) and the per-edge
/// chi-square term `(norm - mean_norm)^2 / mean_norm`.
///
/// Any statistic whose denominator vanishes (all weights equal) is 0.
pub fn weight_features(inst: &SteinerInstance) -> Vec<WeightFeatures> {
    let w: Vec<f64> = inst.edges().iter().map(|e| e.weight.as_f64()).collect();
    if w.is_empty() {
        return Vec::new();
    }
    let m = w.len() as f64;
    let (min, max) = w
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let mean = w.iter().sum::<f64>() / m;
    let stddev = (w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m).sqrt();
    let range = max - min;
    let norm: Vec<f64> = w
        .iter()
        .map(|x| if range > 0.0 { (x - min) / range } else { 0.0 })
        .collect();
    let mean_norm = norm.iter().sum::<f64>() / m;
    w.iter()
        .zip(&norm)
        .map(|(x, &n)| WeightFeatures {
            norm: n,
            std: if stddev > 0.0 { (x - mean) / stddev } else { 0.0 },
            chi2: if mean_norm > 0.0 {
                (n - mean_norm).powi(2) / mean_norm
            } else {
                0.0
            },
        })
        .collect()
}

/// Rank of each edge among the edges incident to each endpoint, sorted by
/// weight: `1 + #(strictly lighter incident edges)`. Returns `(min, max)`
/// over the two endpoints.
pub fn local_rank(inst: &SteinerInstance) -> Vec<(u32, u32)> {
    let sorted: Vec<Vec<i64>> = (0..inst.node_count())
        .map(|v| {
            let mut ws: Vec<i64> = inst
                .incident(v)
                .iter()
                .map(|&e| inst.edge(e).weight.units())
                .collect();
            ws.sort_unstable();
            ws
        })
        .collect();
    let rank_at = |v: usize, w: i64| 1 + sorted[v].partition_point(|&x| x < w) as u32;
    inst.edges()
        .iter()
        .map(|e| {
            let w = e.weight.units();
            let (a, b) = (rank_at(e.u, w), rank_at(e.v, w));
            (a.min(b), a.max(b))
        })
        .collect()
}

/// Joins all feature sources into one row per edge, in edge order. With an
/// optimal tree, `label = 1` exactly for its edges.
pub fn assemble_rows(
    inst: &SteinerInstance,
    lp: &[f64],
    weights: &[WeightFeatures],
    ranks: &[(u32, u32)],
    centralities: &CentralityTable,
    optimal_tree: Option<&[EdgeId]>,
) -> Result<Vec<EdgeFeatureRow>> {
    let m = inst.edge_count();
    for (what, len) in [("lp_value", lp.len()), ("weight", weights.len()), ("local_rank", ranks.len())] {
        if len != m {
            return Err(Error::MissingFeature(format!("{what} covers {len} of {m} edges")));
        }
    }
    let n = inst.node_count();
    for (what, len) in [
        ("degree", centralities.degree.len()),
        ("betweenness", centralities.betweenness.len()),
        ("eigenvector", centralities.eigenvector.len()),
    ] {
        if len != n {
            return Err(Error::MissingFeature(format!("{what} covers {len} of {n} nodes")));
        }
    }
    let mut in_tree = vec![false; m];
    if let Some(tree) = optimal_tree {
        for &e in tree {
            in_tree[e] = true;
        }
    }
    let pair = |values: &[f64], u: usize, v: usize| (values[u].min(values[v]), values[u].max(values[v]));
    Ok(inst
        .edges()
        .iter()
        .enumerate()
        .map(|(id, e)| {
            let (dmin, dmax) = pair(&centralities.degree, e.u, e.v);
            let (bmin, bmax) = pair(&centralities.betweenness, e.u, e.v);
            let (emin, emax) = pair(&centralities.eigenvector, e.u, e.v);
            let wf = weights[id];
            EdgeFeatureRow {
                instance: inst.name().to_string(),
                edge_id: id,
                features: [
                    lp[id],
                    wf.norm,
                    wf.std,
                    wf.chi2,
                    f64::from(ranks[id].0),
                    f64::from(ranks[id].1),
                    dmin,
                    dmax,
                    bmin,
                    bmax,
                    emin,
                    emax,
                ],
                label: optimal_tree.map(|_| u8::from(in_tree[id])),
            }
        })
        .collect())
}

/// Formats `x` with 9 significant digits, without trailing zeros.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..=15).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        format!("{x:.8e}")
    }
}

pub fn csv_header() -> Vec<&'static str> {
    let mut h = vec!["instance", "edge_id"];
    h.extend(FEATURE_NAMES);
    h.push("label");
    h
}

/// Writes rows as CSV: `instance,edge_id,<features>,label`. Edge ids are
/// 1-based (file order of `E` lines); an absent label is an empty field.
pub fn write_rows_csv<W: Write>(writer: W, rows: &[EdgeFeatureRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(csv_header())?;
    for row in rows {
        let mut rec = vec![row.instance.clone(), (row.edge_id + 1).to_string()];
        rec.extend(row.features.iter().map(|&x| format_sig9(x)));
        rec.push(row.label.map(|l| l.to_string()).unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_rows_file(path: impl AsRef<Path>, rows: &[EdgeFeatureRow]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_rows_csv(std::io::BufWriter::new(file), rows)
}

pub fn read_rows_csv<R: std::io::Read>(reader: R) -> Result<Vec<EdgeFeatureRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    let expected = csv_header();
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::MissingFeature(format!(
            "unexpected CSV header: {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let bad = |what: &str| Error::MissingFeature(format!("bad {what} in row {:?}", rec.position()));
        let edge_id: usize = rec[1].parse().map_err(|_| bad("edge_id"))?;
        if edge_id == 0 {
            return Err(bad("edge_id"));
        }
        let mut features = [0.0; FEATURE_COUNT];
        for (i, f) in features.iter_mut().enumerate() {
            *f = rec[2 + i].parse().map_err(|_| bad(FEATURE_NAMES[i]))?;
        }
        let label = match &rec[2 + FEATURE_COUNT] {
            "" => None,
            "0" => Some(0),
            "1" => Some(1),
            _ => return Err(bad("label")),
        };
        rows.push(EdgeFeatureRow {
            instance: rec[0].to_string(),
            edge_id: edge_id - 1,
            features,
            label,
        });
    }
    Ok(rows)
}

pub fn read_rows_file(path: impl AsRef<Path>) -> Result<Vec<EdgeFeatureRow>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_rows_csv(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::g1;
    use crate::graph::CentralityOptions;
    use crate::instance::Edge;
    use crate::weight::Weight;

    #[test]
    fn weight_features_g1() {
        let wf = weight_features(&g1());
        assert_eq!(wf[0].norm, 0.0);
        assert_eq!(wf[3].norm, 1.0);
        assert_eq!(wf[0].std, -1.0);
        assert_eq!(wf[3].std, 1.0);
        // mean_norm = 0.5, so chi2 = 0.25 / 0.5 for every edge.
        assert!(wf.iter().all(|f| (f.chi2 - 0.5).abs() < 1e-15));
    }

    #[test]
    fn uniform_weights_are_degenerate() {
        let inst = crate::fixtures::star();
        for f in weight_features(&inst) {
            assert_eq!((f.norm, f.std, f.chi2), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn local_rank_g1() {
        let ranks = local_rank(&g1());
        assert_eq!(ranks[0], (1, 1));
        assert_eq!(ranks[3], (2, 2));
    }

    #[test]
    fn local_rank_leaf_endpoint() {
        let inst = SteinerInstance::new(
            "p",
            3,
            vec![Edge::new(0, 1, Weight::from_int(9)), Edge::new(1, 2, Weight::from_int(1))],
            [0, 2],
        )
        .unwrap();
        // Edge {1,2} is lightest at node 2 and at node 1; edge {0,1} is rank 1
        // at leaf 0 but rank 2 at node 1.
        assert_eq!(local_rank(&inst), vec![(1, 2), (1, 1)]);
    }

    #[test]
    fn lp_feature_requires_relaxed() {
        let r = SolveResult {
            status: crate::milp::SolveStatus::Optimal,
            mode: Mode::Integral,
            objective: 0.0,
            y_values: vec![0.0; 12],
            wall_time: 0.0,
            best_bound: 0.0,
        };
        assert!(matches!(lp_feature(&g1(), &r), Err(Error::NotRelaxed)));
        let relaxed = SolveResult {
            mode: Mode::Relaxed,
            y_values: vec![0.2, 0.7, 0.0, 1.3, 0., 0., 0., 0., 0., 0., 0., 0.],
            ..r
        };
        let lp = lp_feature(&g1(), &relaxed).unwrap();
        assert_eq!(&lp[..2], &[0.7, 1.0]);
    }

    #[test]
    fn assemble_g1_labels() {
        let inst = g1();
        let lp = vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0];
        let cent = CentralityTable::compute(&inst, &CentralityOptions::default()).unwrap();
        let rows = assemble_rows(
            &inst,
            &lp,
            &weight_features(&inst),
            &local_rank(&inst),
            &cent,
            Some(&[0, 1, 2]),
        )
        .unwrap();
        assert_eq!(rows.len(), 6);
        let labels: Vec<u8> = rows.iter().map(|r| r.label.unwrap()).collect();
        assert_eq!(labels, vec![1, 1, 1, 0, 0, 0]);
        for r in &rows {
            for pair in [(4, 5), (6, 7), (8, 9), (10, 11)] {
                assert!(r.features[pair.0] <= r.features[pair.1]);
            }
        }
        let unlabeled = assemble_rows(&inst, &lp, &weight_features(&inst), &local_rank(&inst), &cent, None).unwrap();
        assert!(unlabeled.iter().all(|r| r.label.is_none()));
        assert!(assemble_rows(&inst, &lp[..5], &weight_features(&inst), &local_rank(&inst), &cent, None).is_err());
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(-1.0), "-1");
        assert_eq!(format_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig9(123456.789012), "123456.789");
        assert_eq!(format_sig9(2.5e-9), "2.50000000e-9");
    }

    #[test]
    fn csv_round_trip() {
        let row = EdgeFeatureRow {
            instance: "b01".into(),
            edge_id: 4,
            features: [0.5, 0.25, -1.0, 0.125, 1.0, 2.0, 0.1, 0.2, 0.0, 0.3, 0.4, 0.5],
            label: Some(1),
        };
        let mut buf = Vec::new();
        write_rows_csv(&mut buf, std::slice::from_ref(&row)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("instance,edge_id,lp_value,"));
        assert!(text.contains("b01,5,0.5,"));
        assert_eq!(read_rows_csv(&buf[..]).unwrap(), vec![row]);
    }
}
