//! Evaluation of labelled predictions: confusion matrix, per-class precision,
//! sensitivity (recall) and F1, and overall accuracy.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::domain::{ActionClass, NUM_CLASSES};
use crate::error::{Error, Result};

/// Rows are the true class, columns the predicted class, both by wire id.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub m: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn get(&self, truth: ActionClass, predicted: ActionClass) -> u64 {
        self.m[truth.index()][predicted.index()]
    }

    pub fn add(&mut self, truth: ActionClass, predicted: ActionClass) {
        self.m[truth.index()][predicted.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.m.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..NUM_CLASSES).map(|i| self.m[i][i]).sum()
    }

    pub fn row_sum(&self, class: ActionClass) -> u64 {
        self.m[class.index()].iter().sum()
    }

    pub fn column_sum(&self, class: ActionClass) -> u64 {
        self.m.iter().map(|row| row[class.index()]).sum()
    }
}

pub fn confusion(samples: &[(ActionClass, ActionClass)]) -> ConfusionMatrix {
    let mut matrix = ConfusionMatrix::default();
    for &(t, p) in samples {
        matrix.add(t, p);
    }
    matrix
}

/// Harmonic mean of precision and recall; zero when both are zero.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub sensitivity: f64,
    pub f1: f64,
    /// Number of samples whose true class is this one.
    pub support: u64,
    /// A zero denominator was replaced by a zero score.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class: BTreeMap<ActionClass, ClassScores>,
    pub accuracy: f64,
    pub matrix: ConfusionMatrix,
}

pub fn report(matrix: &ConfusionMatrix) -> Result<EvalReport> {
    let total = matrix.total();
    if total == 0 {
        return Err(Error::invalid("cannot evaluate an empty confusion matrix"));
    }
    let per_class = ActionClass::ALL
        .iter()
        .map(|&c| {
            let tp = matrix.get(c, c) as f64;
            let predicted = matrix.column_sum(c);
            let actual = matrix.row_sum(c);
            let precision = if predicted > 0 { tp / predicted as f64 } else { 0.0 };
            let sensitivity = if actual > 0 { tp / actual as f64 } else { 0.0 };
            let scores = ClassScores {
                precision,
                sensitivity,
                f1: f1_score(precision, sensitivity),
                support: actual,
                degenerate: predicted == 0 || actual == 0,
            };
            (c, scores)
        })
        .collect();
    Ok(EvalReport {
        per_class,
        accuracy: matrix.trace() as f64 / total as f64,
        matrix: *matrix,
    })
}

impl EvalReport {
    /// Plain-text table in the layout of a model-performance table.
    pub fn render_table(&self, model: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:<10} {:>9} {:>9} {:>11} {:>9}",
            "Model", "Action", "Precision", "F1", "Sensitivity", "Accuracy"
        );
        for (i, (class, s)) in self.per_class.iter().enumerate() {
            let name = if i == 0 { model } else { "" };
            let acc = if i == 0 {
                format!("{:.4}", self.accuracy)
            } else {
                String::new()
            };
            let flag = if s.degenerate { "*" } else { "" };
            let _ = writeln!(
                out,
                "{:<16} {:<10} {:>9.4} {:>9.4} {:>11.4} {:>9}{flag}",
                name,
                class.name(),
                s.precision,
                s.f1,
                s.sensitivity,
                acc
            );
        }
        out
    }

    pub fn render_matrix(&self) -> String {
        let mut out = format!("{:<10}", "true\\pred");
        for c in ActionClass::ALL {
            let _ = write!(out, " {:>9}", c.name());
        }
        out.push('\n');
        for t in ActionClass::ALL {
            let _ = write!(out, "{:<10}", t.name());
            for p in ActionClass::ALL {
                let _ = write!(out, " {:>9}", self.matrix.get(t, p));
            }
            out.push('\n');
        }
        out
    }
}

/// One row of a labelled-pairs CSV. `model` is optional and defaults to
/// `model`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelPair {
    pub true_label: String,
    pub predicted_label: String,
    #[serde(default)]
    pub model: Option<String>,
}

/// A model name and its `(true, predicted)` pairs.
pub type LabelledGroup = (String, Vec<(ActionClass, ActionClass)>);

/// Reads `true_label,predicted_label[,model]` rows, grouped by model in
/// first-seen order. Labels may be names or wire ids.
pub fn read_pairs<R: Read>(reader: R) -> Result<Vec<LabelledGroup>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut groups: Vec<LabelledGroup> = Vec::new();
    for (line, row) in rdr.deserialize::<LabelPair>().enumerate() {
        let row = row?;
        let truth: ActionClass = row
            .true_label
            .parse()
            .map_err(|e| Error::invalid(format!("row {}: {e}", line + 1)))?;
        let predicted: ActionClass = row
            .predicted_label
            .parse()
            .map_err(|e| Error::invalid(format!("row {}: {e}", line + 1)))?;
        let model = row.model.filter(|m| !m.is_empty()).unwrap_or_else(|| "model".into());
        match groups.iter_mut().find(|(m, _)| *m == model) {
            Some((_, pairs)) => pairs.push((truth, predicted)),
            None => groups.push((model, vec![(truth, predicted)])),
        }
    }
    Ok(groups)
}

/// Evaluation of several models on the same kind of data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEvaluation {
    pub model: String,
    pub report: EvalReport,
}

pub fn evaluate_groups(groups: &[LabelledGroup]) -> Result<Vec<ModelEvaluation>> {
    groups
        .iter()
        .map(|(model, pairs)| {
            let report = report(&confusion(pairs))
                .map_err(|e| Error::invalid(format!("model {model}: {e}")))?;
            Ok(ModelEvaluation {
                model: model.clone(),
                report,
            })
        })
        .collect()
}

/// Writes a per-model accuracy bar chart. `.svg` paths get a labelled vector
/// chart; anything else is written as a PNG raster (bars only).
pub fn write_accuracy_plot(evals: &[ModelEvaluation], path: &Path) -> Result<()> {
    let is_svg = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("svg"));
    if is_svg {
        std::fs::write(path, accuracy_svg(evals)).map_err(|e| Error::io(path, e))
    } else {
        accuracy_png(evals)
            .save(path)
            .map_err(|source| Error::Image {
                path: path.to_path_buf(),
                source,
            })
    }
}

const PLOT_W: u32 = 640;
const PLOT_H: u32 = 360;
const MARGIN: u32 = 40;

fn bar_geometry(n: usize, i: usize) -> (u32, u32) {
    let slot = (PLOT_W - 2 * MARGIN) / n.max(1) as u32;
    let x = MARGIN + slot * i as u32 + slot / 8;
    (x, slot * 3 / 4)
}

pub fn accuracy_svg(evals: &[ModelEvaluation]) -> String {
    let plot_h = f64::from(PLOT_H - 2 * MARGIN);
    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PLOT_W}" height="{PLOT_H}" font-family="sans-serif" font-size="11">"#
    );
    svg.push('\n');
    let _ = writeln!(
        svg,
        r#"<line x1="{MARGIN}" y1="{y}" x2="{x2}" y2="{y}" stroke="black"/>"#,
        y = PLOT_H - MARGIN,
        x2 = PLOT_W - MARGIN
    );
    for (i, e) in evals.iter().enumerate() {
        let (x, w) = bar_geometry(evals.len(), i);
        let h = (e.report.accuracy * plot_h).round();
        let y = f64::from(PLOT_H - MARGIN) - h;
        let _ = writeln!(
            svg,
            r##"<rect x="{x}" y="{y}" width="{w}" height="{h}" fill="#4878a8"/>"##
        );
        let cx = x + w / 2;
        let _ = writeln!(
            svg,
            r#"<text x="{cx}" y="{ty}" text-anchor="middle">{:.2}%</text>"#,
            e.report.accuracy * 100.0,
            ty = y - 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{cx}" y="{ly}" text-anchor="middle">{}</text>"#,
            xml_escape(&e.model),
            ly = PLOT_H - MARGIN + 16
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn accuracy_png(evals: &[ModelEvaluation]) -> RgbImage {
    let mut img = RgbImage::from_pixel(PLOT_W, PLOT_H, Rgb([255, 255, 255]));
    let base = PLOT_H - MARGIN;
    for x in MARGIN..PLOT_W - MARGIN {
        img.put_pixel(x, base, Rgb([0, 0, 0]));
    }
    let plot_h = f64::from(PLOT_H - 2 * MARGIN);
    for (i, e) in evals.iter().enumerate() {
        let (x0, w) = bar_geometry(evals.len(), i);
        let h = (e.report.accuracy * plot_h).round() as u32;
        for x in x0..x0 + w {
            for y in base - h..base {
                img.put_pixel(x, y, Rgb([72, 120, 168]));
            }
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use ActionClass::*;

    #[test]
    fn perfect_smoke_set() {
        let m = confusion(&[(Smoke, Smoke); 20]);
        assert_eq!(m.get(Smoke, Smoke), 20);
        assert_eq!(m.total(), 20);
    }

    #[test]
    fn empty_input() {
        let m = confusion(&[]);
        assert_eq!(m, ConfusionMatrix::default());
        assert!(matches!(report(&m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn f1_from_published_precision_and_sensitivity() {
        assert!((f1_score(1.00, 0.80) - 0.8889).abs() < 1e-4);
        assert!((f1_score(1.00, 0.95) - 0.9744).abs() < 1e-4);
        assert!((f1_score(0.95, 0.9047) - 0.9268).abs() < 1e-4);
        assert_eq!(f1_score(0.0, 0.0), 0.0);
    }

    #[test]
    fn report_formulas() {
        // 3 kills: 2 right, 1 called death; 2 deaths both right
        let m = confusion(&[(Kill, Kill), (Kill, Kill), (Kill, Death), (Death, Death), (Death, Death)]);
        let r = report(&m).unwrap();
        let k = r.per_class[&Kill];
        assert_eq!(k.precision, 1.0);
        assert!((k.sensitivity - 2.0 / 3.0).abs() < 1e-12);
        let d = r.per_class[&Death];
        assert!((d.precision - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(d.sensitivity, 1.0);
        assert!((r.accuracy - 0.8).abs() < 1e-12);
        let s = r.per_class[&Smoke];
        assert!(s.degenerate);
        assert_eq!((s.precision, s.sensitivity, s.f1), (0.0, 0.0, 0.0));
        assert!(!k.degenerate);
    }

    #[test]
    fn diagonal_is_perfect() {
        let pairs: Vec<_> = ActionClass::ALL.iter().flat_map(|&c| vec![(c, c); 3]).collect();
        let r = report(&confusion(&pairs)).unwrap();
        assert_eq!(r.accuracy, 1.0);
        for s in r.per_class.values() {
            assert_eq!((s.precision, s.sensitivity, s.f1), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn table_shows_four_decimals() {
        let pairs: Vec<_> = (0..81)
            .map(|i| if i < 75 { (Kill, Kill) } else { (Kill, Death) })
            .collect();
        let table = report(&confusion(&pairs)).unwrap().render_table("majority");
        assert!(table.contains("0.9259"), "{table}");
    }

    #[test]
    fn pairs_csv_grouping() {
        let csv = "true_label,predicted_label,model\nkill,kill,vgg16\n1,0,vgg16\nsmoke,smoke,xception\n";
        let groups = read_pairs(csv.as_bytes()).unwrap();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].0, "vgg16");
        assert_eq!(groups[0].1, vec![(Kill, Kill), (Death, Kill)]);

        let no_model = "true_label,predicted_label\nkill,death\n";
        assert_eq!(read_pairs(no_model.as_bytes()).unwrap()[0].0, "model");
        assert!(read_pairs("true_label,predicted_label\nkill,grenade\n".as_bytes()).is_err());
    }

    #[test]
    fn plots_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let evals = evaluate_groups(&[
            ("a".into(), vec![(Kill, Kill), (Kill, Death)]),
            ("b".into(), vec![(Kill, Kill)]),
        ])
        .unwrap();
        let svg = dir.path().join("acc.svg");
        write_accuracy_plot(&evals, &svg).unwrap();
        let text = std::fs::read_to_string(&svg).unwrap();
        assert!(text.contains("50.00%") && text.contains("100.00%"));
        let png = dir.path().join("acc.png");
        write_accuracy_plot(&evals, &png).unwrap();
        assert_eq!(image::open(&png).unwrap().width(), PLOT_W);
    }

    fn arb_pairs() -> impl Strategy<Value = Vec<(ActionClass, ActionClass)>> {
        prop::collection::vec(
            (0usize..4, 0usize..4).prop_map(|(t, p)| (ActionClass::ALL[t], ActionClass::ALL[p])),
            1..80,
        )
    }

    proptest! {
        #[test]
        fn report_invariants(pairs in arb_pairs()) {
            let r = report(&confusion(&pairs)).unwrap();
            let m = &r.matrix;
            prop_assert!((r.accuracy - m.trace() as f64 / m.total() as f64).abs() < 1e-9);
            for s in r.per_class.values() {
                if s.precision + s.sensitivity > 0.0 {
                    let f1 = 2.0 * s.precision * s.sensitivity / (s.precision + s.sensitivity);
                    prop_assert!((s.f1 - f1).abs() < 1e-9);
                }
                for v in [s.precision, s.sensitivity, s.f1] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
        }

        #[test]
        fn sample_order_is_irrelevant(pairs in arb_pairs()) {
            let mut rev = pairs.clone();
            rev.reverse();
            prop_assert_eq!(report(&confusion(&pairs)).unwrap(), report(&confusion(&rev)).unwrap());
        }
    }
}
