//! Evaluation suite: per-class one-vs-rest confusion counts, the derived
//! rate metrics, top-k error, macro averaging, and ROC/AUC analysis.
//!
//! The predicted class is always the row argmax with ties broken toward the
//! lowest class index, matching the poolers. Zero-denominator metrics return
//! 0 together with a degenerate flag instead of NaN; flagged classes stay in
//! the macro average so reports are deterministic and auditable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{LabelVector, PredictionMatrix};

/// One-vs-rest counts for a single class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Per-class one-vs-rest confusion counts over a prediction matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    per_class: Vec<ClassCounts>,
    sample_count: usize,
}

impl ConfusionCounts {
    pub fn class(&self, c: usize) -> &ClassCounts {
        &self.per_class[c]
    }

    pub fn class_count(&self) -> usize {
        self.per_class.len()
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    /// Correctly classified samples: the true positives summed over classes.
    pub fn correct(&self) -> usize {
        self.per_class.iter().map(|c| c.tp).sum()
    }
}

/// A rate together with a flag marking a zero denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flagged {
    pub value: f64,
    pub degenerate: bool,
}

impl Flagged {
    fn ratio(num: f64, den: f64) -> Self {
        if den == 0.0 {
            Flagged {
                value: 0.0,
                degenerate: true,
            }
        } else {
            Flagged {
                value: num / den,
                degenerate: false,
            }
        }
    }
}

/// Builds one-vs-rest confusion counts; ids must match in order.
pub fn confusion(predictions: &PredictionMatrix, labels: &LabelVector) -> Result<ConfusionCounts> {
    if predictions.sample_ids() != labels.sample_ids() {
        return Err(Error::Alignment(
            "prediction and label sample ids differ".into(),
        ));
    }
    let class_count = predictions.class_count();
    for (&label, id) in labels.labels().iter().zip(labels.sample_ids()) {
        if label >= class_count {
            return Err(Error::Alignment(format!(
                "label {label} of sample `{id}` exceeds class count {class_count}"
            )));
        }
    }
    let predicted = predictions.argmax_classes();
    let n = predicted.len();
    let mut per_class = vec![
        ClassCounts {
            tp: 0,
            fp: 0,
            tn: 0,
            fn_: 0
        };
        class_count
    ];
    for (&pred, &truth) in predicted.iter().zip(labels.labels()) {
        for (c, counts) in per_class.iter_mut().enumerate() {
            match (pred == c, truth == c) {
                (true, true) => counts.tp += 1,
                (true, false) => counts.fp += 1,
                (false, true) => counts.fn_ += 1,
                (false, false) => counts.tn += 1,
            }
        }
    }
    Ok(ConfusionCounts {
        per_class,
        sample_count: n,
    })
}

/// (TP + TN) / N for one class.
pub fn accuracy(counts: &ConfusionCounts, class: usize) -> f64 {
    let c = counts.class(class);
    (c.tp + c.tn) as f64 / c.total() as f64
}

/// 2TP / (2TP + FP + FN); flagged 0 when the class never occurs nor gets
/// predicted.
pub fn f1(counts: &ConfusionCounts, class: usize) -> Flagged {
    let c = counts.class(class);
    Flagged::ratio(2.0 * c.tp as f64, (2 * c.tp + c.fp + c.fn_) as f64)
}

/// TP / (TP + FN), the true positive rate.
pub fn sensitivity(counts: &ConfusionCounts, class: usize) -> Flagged {
    let c = counts.class(class);
    Flagged::ratio(c.tp as f64, (c.tp + c.fn_) as f64)
}

/// FP / (FP + TN), the false positive rate.
pub fn fpr(counts: &ConfusionCounts, class: usize) -> Flagged {
    let c = counts.class(class);
    Flagged::ratio(c.fp as f64, (c.fp + c.tn) as f64)
}

/// 1 − FPR, carrying the same degenerate flag.
pub fn specificity(counts: &ConfusionCounts, class: usize) -> Flagged {
    let f = fpr(counts, class);
    Flagged {
        value: 1.0 - f.value,
        degenerate: f.degenerate,
    }
}

/// Fraction of samples whose true class is not among the `k` top-ranked
/// classes. Rank ties are resolved toward the lowest class index.
pub fn top_k_error(
    predictions: &PredictionMatrix,
    labels: &LabelVector,
    k: usize,
) -> Result<f64> {
    let class_count = predictions.class_count();
    if k == 0 || k > class_count {
        return Err(Error::Parameter(format!(
            "top-k requires 1 <= k <= {class_count}, got {k}"
        )));
    }
    if predictions.sample_ids() != labels.sample_ids() {
        return Err(Error::Alignment(
            "prediction and label sample ids differ".into(),
        ));
    }
    let mut misses = 0usize;
    for (row, &truth) in predictions.rows().iter().zip(labels.labels()) {
        let values = row.values();
        let p_true = values[truth];
        // Classes ranked ahead of the true class: strictly larger
        // probability, or equal probability at a lower index.
        let ahead = values
            .iter()
            .enumerate()
            .filter(|&(c, &v)| v > p_true || (v == p_true && c < truth))
            .count();
        if ahead >= k {
            misses += 1;
        }
    }
    Ok(misses as f64 / predictions.len() as f64)
}

/// Unweighted mean over per-class values.
pub fn macro_average(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// One point of an ROC curve. The threshold is the score at or above which
/// samples count as positive; the initial point carries +infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve by descending-score threshold sweep and AUC by trapezoidal
/// integration. Tied scores collapse into a single point.
pub fn roc_auc(scores: &[f64], positives: &[bool]) -> Result<(Vec<RocPoint>, f64)> {
    if scores.len() != positives.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} scores but {} labels",
            scores.len(),
            positives.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Parameter("NaN score".into()));
    }
    let pos = positives.iter().filter(|&&p| p).count();
    let neg = positives.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::OneClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let (pos_f, neg_f) = (pos as f64, neg as f64);
    let mut points = Vec::new();
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut prev = f64::INFINITY;
    for &i in &order {
        if scores[i] != prev {
            points.push(RocPoint {
                threshold: prev,
                fpr: fp as f64 / neg_f,
                tpr: tp as f64 / pos_f,
            });
            prev = scores[i];
        }
        if positives[i] {
            tp += 1;
        } else {
            fp += 1;
        }
    }
    points.push(RocPoint {
        threshold: prev,
        fpr: 1.0,
        tpr: 1.0,
    });

    let mut auc = 0.0;
    for pair in points.windows(2) {
        auc += (pair[1].fpr - pair[0].fpr) * (pair[1].tpr + pair[0].tpr) / 2.0;
    }
    Ok((points, auc))
}

/// Per-class slice of a [`MetricReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub accuracy: f64,
    pub f1: f64,
    pub sensitivity: f64,
    pub fpr: f64,
    pub specificity: f64,
    /// Set when some one-vs-rest denominator was zero for this class.
    pub degenerate: bool,
    /// Absent when the class has no positives or no negatives.
    pub auc: Option<f64>,
    pub roc: Vec<RocPoint>,
}

/// Macro (unweighted class mean) slice of a [`MetricReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroMetrics {
    pub accuracy: f64,
    pub f1: f64,
    pub sensitivity: f64,
    pub fpr: f64,
    pub specificity: f64,
    /// Mean over the classes where AUC is defined; absent if none is.
    pub auc: Option<f64>,
}

/// Full evaluation of one prediction matrix against ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub sample_count: usize,
    pub class_count: usize,
    pub per_class: Vec<ClassMetrics>,
    #[serde(rename = "macro")]
    pub macro_avg: MacroMetrics,
    pub top1_error: f64,
    /// Absent when there are fewer than three classes.
    pub top3_error: Option<f64>,
}

/// Computes the whole metric suite for one prediction matrix.
pub fn evaluate(predictions: &PredictionMatrix, labels: &LabelVector) -> Result<MetricReport> {
    let counts = confusion(predictions, labels)?;
    let class_count = counts.class_count();
    let mut per_class = Vec::with_capacity(class_count);
    for c in 0..class_count {
        let f1c = f1(&counts, c);
        let sens = sensitivity(&counts, c);
        let fprc = fpr(&counts, c);
        let spec = specificity(&counts, c);
        let scores: Vec<f64> = predictions.rows().iter().map(|r| r.values()[c]).collect();
        let positives: Vec<bool> = labels.labels().iter().map(|&l| l == c).collect();
        let (roc, auc) = match roc_auc(&scores, &positives) {
            Ok((points, auc)) => (points, Some(auc)),
            Err(Error::OneClass) => (Vec::new(), None),
            Err(e) => return Err(e),
        };
        per_class.push(ClassMetrics {
            accuracy: accuracy(&counts, c),
            f1: f1c.value,
            sensitivity: sens.value,
            fpr: fprc.value,
            specificity: spec.value,
            degenerate: f1c.degenerate || sens.degenerate || fprc.degenerate,
            auc,
            roc,
        });
    }
    let aucs: Vec<f64> = per_class.iter().filter_map(|m| m.auc).collect();
    let macro_avg = MacroMetrics {
        accuracy: macro_average(&per_class.iter().map(|m| m.accuracy).collect::<Vec<_>>()),
        f1: macro_average(&per_class.iter().map(|m| m.f1).collect::<Vec<_>>()),
        sensitivity: macro_average(&per_class.iter().map(|m| m.sensitivity).collect::<Vec<_>>()),
        fpr: macro_average(&per_class.iter().map(|m| m.fpr).collect::<Vec<_>>()),
        specificity: macro_average(&per_class.iter().map(|m| m.specificity).collect::<Vec<_>>()),
        auc: if aucs.is_empty() {
            None
        } else {
            Some(macro_average(&aucs))
        },
    };
    let top1_error = top_k_error(predictions, labels, 1)?;
    let top3_error = if class_count >= 3 {
        Some(top_k_error(predictions, labels, 3)?)
    } else {
        None
    };
    Ok(MetricReport {
        sample_count: counts.sample_count(),
        class_count,
        per_class,
        macro_avg,
        top1_error,
        top3_error,
    })
}

/// Macro-F1 straight from predictions; the fitness score used by the
/// Best Model and Weighted Mean poolers.
pub fn macro_f1(predictions: &PredictionMatrix, labels: &LabelVector) -> Result<f64> {
    let counts = confusion(predictions, labels)?;
    let values: Vec<f64> = (0..counts.class_count())
        .map(|c| f1(&counts, c).value)
        .collect();
    Ok(macro_average(&values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ClassProbabilities;

    fn one_hot_matrix(ids: &[&str], preds: &[usize], class_count: usize) -> PredictionMatrix {
        let rows = preds
            .iter()
            .map(|&p| {
                let mut v = vec![0.0; class_count];
                v[p] = 1.0;
                ClassProbabilities::new(v).unwrap()
            })
            .collect();
        PredictionMatrix::new(ids.iter().map(|s| s.to_string()).collect(), rows).unwrap()
    }

    fn labels(ids: &[&str], values: &[usize]) -> LabelVector {
        LabelVector::new(ids.iter().map(|s| s.to_string()).collect(), values.to_vec()).unwrap()
    }

    /// 10 samples, 2 classes, chosen so class 0 sees TP=2, FP=1, TN=5, FN=2.
    fn fixture() -> (PredictionMatrix, LabelVector) {
        let ids: Vec<&str> = vec!["s0", "s1", "s2", "s3", "s4", "s5", "s6", "s7", "s8", "s9"];
        let truth = [0, 0, 0, 0, 1, 1, 1, 1, 1, 1];
        let preds = [0, 0, 1, 1, 0, 1, 1, 1, 1, 1];
        (one_hot_matrix(&ids, &preds, 2), labels(&ids, &truth))
    }

    #[test]
    fn confusion_perfect_classifier() {
        let ids = ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"];
        let truth = [0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let m = one_hot_matrix(&ids, &truth, 2);
        let l = labels(&ids, &truth);
        let c = confusion(&m, &l).unwrap();
        for class in 0..2 {
            let cc = c.class(class);
            assert_eq!(cc.tp + cc.tn, 10);
            assert_eq!(cc.fp, 0);
            assert_eq!(cc.fn_, 0);
        }
        assert_eq!(c.correct(), 10);
    }

    #[test]
    fn confusion_constant_classifier() {
        let ids = ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"];
        let truth = [0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        let m = one_hot_matrix(&ids, &[0; 10], 2);
        let l = labels(&ids, &truth);
        let c = confusion(&m, &l).unwrap();
        let c0 = c.class(0);
        assert_eq!((c0.tp, c0.fp, c0.tn, c0.fn_), (5, 5, 0, 0));
    }

    #[test]
    fn confusion_fixture_counts() {
        let (m, l) = fixture();
        let c = confusion(&m, &l).unwrap();
        let c0 = c.class(0);
        assert_eq!((c0.tp, c0.fp, c0.tn, c0.fn_), (2, 1, 5, 2));
    }

    #[test]
    fn confusion_rejects_misaligned_ids() {
        let (m, _) = fixture();
        let l = labels(&["x0", "x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8", "x9"], &[0; 10]);
        assert!(matches!(confusion(&m, &l), Err(Error::Alignment(_))));
    }

    #[test]
    fn rate_metrics_on_fixture() {
        let (m, l) = fixture();
        let c = confusion(&m, &l).unwrap();
        assert!((accuracy(&c, 0) - 0.7).abs() < 1e-15);
        assert!((f1(&c, 0).value - 4.0 / 7.0).abs() < 1e-15);
        assert!((sensitivity(&c, 0).value - 0.5).abs() < 1e-15);
        assert!((fpr(&c, 0).value - 1.0 / 6.0).abs() < 1e-15);
        assert!((specificity(&c, 0).value - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn rate_metrics_perfect_and_degenerate() {
        let ids = ["a", "b"];
        let m = one_hot_matrix(&ids, &[0, 1], 2);
        let l = labels(&ids, &[0, 1]);
        let c = confusion(&m, &l).unwrap();
        assert_eq!(accuracy(&c, 0), 1.0);
        assert_eq!(f1(&c, 0).value, 1.0);
        assert_eq!(sensitivity(&c, 0).value, 1.0);
        assert_eq!(fpr(&c, 0).value, 0.0);

        // Class 2 never occurs and is never predicted in a 3-class setup.
        let m = one_hot_matrix(&ids, &[0, 1], 3);
        let c = confusion(&m, &l).unwrap();
        let f = f1(&c, 2);
        assert_eq!(f.value, 0.0);
        assert!(f.degenerate);
        let s = sensitivity(&c, 2);
        assert_eq!(s.value, 0.0);
        assert!(s.degenerate);
    }

    #[test]
    fn fpr_all_positive_is_flagged() {
        let ids = ["a", "b"];
        let m = one_hot_matrix(&ids, &[0, 0], 2);
        let l = labels(&ids, &[0, 0]);
        let c = confusion(&m, &l).unwrap();
        let f = fpr(&c, 0);
        assert!(f.degenerate);
        assert_eq!(f.value, 0.0);
        // Specificity + FPR = 1 holds even for flagged classes.
        assert_eq!(specificity(&c, 0).value + f.value, 1.0);
    }

    #[test]
    fn top_k_covers_all_classes() {
        let (m, l) = fixture();
        assert_eq!(top_k_error(&m, &l, 2).unwrap(), 0.0);
    }

    #[test]
    fn top_k_perfect_argmax() {
        let ids = ["a", "b"];
        let m = one_hot_matrix(&ids, &[0, 1], 2);
        let l = labels(&ids, &[0, 1]);
        assert_eq!(top_k_error(&m, &l, 1).unwrap(), 0.0);
    }

    #[test]
    fn top_k_ranked_enumeration() {
        // True class ranks 1st, 2nd, and 4th in the three rows.
        let ids = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let rows = vec![
            ClassProbabilities::new(vec![0.7, 0.1, 0.1, 0.1]).unwrap(),
            ClassProbabilities::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap(),
            ClassProbabilities::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap(),
        ];
        let m = PredictionMatrix::new(ids.clone(), rows).unwrap();
        let l = LabelVector::new(ids, vec![0, 1, 3]).unwrap();
        let err = top_k_error(&m, &l, 3).unwrap();
        assert!((err - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn top_k_tie_resolves_to_lowest_class() {
        // Probabilities tie across all 3 classes; class 2 loses the tie at
        // every rank boundary, so k=2 misses it.
        let ids = vec!["a".to_string()];
        let third = 1.0 / 3.0;
        let rows = vec![ClassProbabilities::new(vec![third, third, third]).unwrap()];
        let m = PredictionMatrix::new(ids.clone(), rows).unwrap();
        let l = LabelVector::new(ids, vec![2]).unwrap();
        assert_eq!(top_k_error(&m, &l, 2).unwrap(), 1.0);
        assert_eq!(top_k_error(&m, &l, 3).unwrap(), 0.0);
    }

    #[test]
    fn macro_average_examples() {
        assert_eq!(macro_average(&[1.0, 0.5]), 0.75);
        assert_eq!(macro_average(&[0.4, 0.4, 0.4]), 0.4000000000000001);
        assert_eq!(macro_average(&[0.0, 0.0, 1.0, 1.0]), 0.5);
    }

    #[test]
    fn roc_perfect_ranking() {
        let scores = [0.9, 0.8, 0.3, 0.1];
        let pos = [true, true, false, false];
        let (_, auc) = roc_auc(&scores, &pos).unwrap();
        assert!((auc - 1.0).abs() < 1e-15);
    }

    #[test]
    fn roc_constant_scores() {
        let scores = [0.5, 0.5, 0.5, 0.5];
        let pos = [true, false, true, false];
        let (points, auc) = roc_auc(&scores, &pos).unwrap();
        assert!((auc - 0.5).abs() < 1e-15);
        // Single diagonal segment: (0,0) then (1,1).
        assert_eq!(points.len(), 2);
        assert_eq!((points[0].fpr, points[0].tpr), (0.0, 0.0));
        assert_eq!((points[1].fpr, points[1].tpr), (1.0, 1.0));
    }

    #[test]
    fn roc_interleaved_example() {
        let scores = [0.9, 0.8, 0.7, 0.6];
        let pos = [true, false, true, false];
        let (_, auc) = roc_auc(&scores, &pos).unwrap();
        assert!((auc - 0.75).abs() < 1e-15);
    }

    #[test]
    fn roc_one_class_errors() {
        let scores = [0.9, 0.8];
        assert!(matches!(
            roc_auc(&scores, &[true, true]),
            Err(Error::OneClass)
        ));
        assert!(matches!(
            roc_auc(&scores, &[false, false]),
            Err(Error::OneClass)
        ));
    }

    #[test]
    fn evaluate_aggregates_fixture() {
        let (m, l) = fixture();
        let report = evaluate(&m, &l).unwrap();
        assert_eq!(report.sample_count, 10);
        assert!((report.per_class[0].accuracy - 0.7).abs() < 1e-15);
        assert!((report.per_class[0].f1 - 4.0 / 7.0).abs() < 1e-15);
        assert!((report.top1_error - 0.3).abs() < 1e-15);
        assert!(report.top3_error.is_none());
        // Specificity = 1 - FPR exactly, per class.
        for cm in &report.per_class {
            assert_eq!(cm.specificity, 1.0 - cm.fpr);
        }
    }

    #[test]
    fn evaluate_single_class_labels() {
        let ids = ["a", "b"];
        let m = one_hot_matrix(&ids, &[0, 0], 2);
        let l = labels(&ids, &[0, 0]);
        let report = evaluate(&m, &l).unwrap();
        assert!(report.per_class[0].auc.is_none());
        assert!(report.per_class[1].auc.is_none());
        assert!(report.macro_avg.auc.is_none());
        assert!(report.per_class[1].degenerate);
    }
}
