use std::fmt::Write as _;

use super::{mean_std, EvalError};
use crate::augment::Method;
use crate::clf::ClassifierKind;
use crate::featx::FeatureKind;

const CSV_HEADER: &str = "method,classifier,feature,count,folds,mean,std,accuracies,status";

/// Coordinates of one cell; the count-0 baseline has no method.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub method: Option<Method>,
    pub classifier: ClassifierKind,
    pub count: usize,
}

impl CellKey {
    pub fn id(&self) -> String {
        let m = self.method.map_or("baseline", Method::as_str);
        format!("{m}-{}-{}", self.classifier.as_str(), self.count)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellRow {
    pub method: Method,
    pub classifier: ClassifierKind,
    pub feature: FeatureKind,
    pub count: usize,
    pub fold: usize,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub method: Method,
    pub classifier: ClassifierKind,
    pub feature: FeatureKind,
    pub count: usize,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

/// Per method and classifier: baseline, best count and gain over baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub method: Method,
    pub classifier: ClassifierKind,
    pub feature: FeatureKind,
    pub baseline: f64,
    pub peak_count: usize,
    pub peak_mean: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub key: CellKey,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub feature: FeatureKind,
    pub folds: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub classifiers: Vec<ClassifierKind>,
    pub counts: Vec<usize>,
    pub rows: Vec<CellRow>,
    pub aggregates: Vec<Aggregate>,
    pub summaries: Vec<Summary>,
    pub failures: Vec<Failure>,
}

impl SweepReport {
    /// Builds aggregates and summaries from per-fold results listed in
    /// method, classifier, count order.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        feature: FeatureKind,
        folds: usize,
        seed: u64,
        methods: &[Method],
        classifiers: &[ClassifierKind],
        counts: &[usize],
        cells: Vec<(Method, ClassifierKind, usize, Vec<f64>)>,
        failures: Vec<Failure>,
    ) -> Self {
        let mut rows = Vec::new();
        let mut aggregates = Vec::new();
        for (method, classifier, count, acc) in cells {
            for (fold, &a) in acc.iter().enumerate() {
                rows.push(CellRow {
                    method,
                    classifier,
                    feature,
                    count,
                    fold,
                    accuracy: a,
                });
            }
            let (mean, std) = mean_std(&acc);
            aggregates.push(Aggregate {
                method,
                classifier,
                feature,
                count,
                accuracies: acc,
                mean,
                std,
            });
        }
        let mut summaries = Vec::new();
        for &method in methods {
            for &classifier in classifiers {
                let mut group: Vec<&Aggregate> = aggregates.iter().filter(|a| a.method == method && a.classifier == classifier).collect();
                group.sort_by_key(|a| a.count);
                let Some(base) = group.iter().find(|a| a.count == 0) else { continue };
                let mut peak = base;
                for a in &group {
                    if a.mean > peak.mean {
                        peak = a;
                    }
                }
                summaries.push(Summary {
                    method,
                    classifier,
                    feature,
                    baseline: base.mean,
                    peak_count: peak.count,
                    peak_mean: peak.mean,
                    delta: peak.mean - base.mean,
                });
            }
        }
        Self {
            feature,
            folds,
            seed,
            methods: methods.to_vec(),
            classifiers: classifiers.to_vec(),
            counts: counts.to_vec(),
            rows,
            aggregates,
            summaries,
            failures,
        }
    }

    pub fn aggregate(&self, method: Method, classifier: ClassifierKind, count: usize) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.method == method && a.classifier == classifier && a.count == count)
    }

    pub fn summary(&self, method: Method, classifier: ClassifierKind) -> Option<&Summary> {
        self.summaries.iter().find(|s| s.method == method && s.classifier == classifier)
    }

    /// One line per cell: coordinates, fold accuracies, mean, std and status.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for a in &self.aggregates {
            let accs: Vec<String> = a.accuracies.iter().map(|v| format!("{v:.10}")).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.10},{:.10},{},ok",
                a.method,
                a.classifier.as_str(),
                a.feature.as_str(),
                a.count,
                a.accuracies.len(),
                a.mean,
                a.std,
                accs.join(";")
            );
        }
        for f in &self.failures {
            let methods: Vec<Method> = match f.key.method {
                Some(m) => vec![m],
                None => self.methods.clone(),
            };
            for m in methods {
                let reason = f.reason.replace(['\n', ','], " ").replace('"', "'");
                let _ = writeln!(out, "{m},{},{},{},0,,,,failed: {reason}", f.key.classifier.as_str(), self.feature.as_str(), f.key.count);
            }
        }
        out
    }

    /// Rebuilds a report from [`to_csv`](Self::to_csv) output. Means are
    /// recomputed from the printed fold accuracies.
    pub fn from_csv(text: &str, seed: u64) -> Result<Self, EvalError> {
        let bad = |line: usize, msg: &str| EvalError::Config(format!("report line {line}: {msg}"));
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            _ => return Err(bad(1, "unexpected header")),
        }
        let (mut methods, mut classifiers, mut counts) = (Vec::new(), Vec::new(), Vec::new());
        let (mut cells, mut failures) = (Vec::new(), Vec::new());
        let mut feature = None;
        let mut folds = 0;
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.splitn(9, ',').collect();
            if f.len() != 9 {
                return Err(bad(i + 1, "expected 9 fields"));
            }
            let method: Method = f[0].parse().map_err(|e: String| bad(i + 1, &e))?;
            let classifier: ClassifierKind = f[1].parse().map_err(|e: String| bad(i + 1, &e))?;
            let kind: FeatureKind = f[2].parse().map_err(|e: String| bad(i + 1, &e))?;
            let count: usize = f[3].parse().map_err(|_| bad(i + 1, "bad count"))?;
            if *feature.get_or_insert(kind) != kind {
                return Err(bad(i + 1, "mixed feature kinds"));
            }
            if !methods.contains(&method) {
                methods.push(method);
            }
            if !classifiers.contains(&classifier) {
                classifiers.push(classifier);
            }
            if !counts.contains(&count) {
                counts.push(count);
            }
            if let Some(reason) = f[8].strip_prefix("failed: ") {
                failures.push(Failure {
                    key: CellKey {
                        method: Some(method),
                        classifier,
                        count,
                    },
                    reason: reason.to_string(),
                });
                continue;
            }
            let acc = f[7]
                .split(';')
                .map(|v| v.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad(i + 1, "bad accuracy list"))?;
            folds = folds.max(acc.len());
            cells.push((method, classifier, count, acc));
        }
        counts.sort_unstable();
        cells.sort_by_key(|c| (methods.iter().position(|m| *m == c.0), classifiers.iter().position(|k| *k == c.1), c.2));
        let feature = feature.ok_or_else(|| bad(2, "report has no cells"))?;
        Ok(Self::assemble(feature, folds, seed, &methods, &classifiers, &counts, cells, failures))
    }

    /// Tables of `mean/std` in percent, one per classifier, with the gain
    /// over the count-0 baseline in the last column.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        for &clf in &self.classifiers {
            let _ = writeln!(out, "### {} / {}\n", self.feature.as_str().to_uppercase(), clf.as_str().to_uppercase());
            let header: Vec<String> = self.counts.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(out, "| method | {} | ↑ |", header.join(" | "));
            let _ = writeln!(out, "|---|{}---|", "---|".repeat(self.counts.len()));
            for &m in &self.methods {
                let cells: Vec<String> = self
                    .counts
                    .iter()
                    .map(|&c| match self.aggregate(m, clf, c) {
                        Some(a) => format!("{:.2}/{:.2}", 100.0 * a.mean, 100.0 * a.std),
                        None => "n/a".into(),
                    })
                    .collect();
                let gain = self.summary(m, clf).map_or("n/a".into(), |s| format!("{:.2}", 100.0 * s.delta));
                let _ = writeln!(out, "| {} | {} | {gain} |", m.as_str(), cells.join(" | "));
            }
            out.push('\n');
        }
        if !self.failures.is_empty() {
            out.push_str("Failed cells:\n\n");
            for f in &self.failures {
                let _ = writeln!(out, "- {}: {}", f.key.id(), f.reason);
            }
        }
        out
    }

    /// Mean accuracy against append count, one line per method, one panel
    /// per classifier. Counts are spaced evenly.
    pub fn to_svg(&self) -> String {
        const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f"];
        let (pw, ph, margin) = (420.0, 280.0, 50.0);
        let width = margin + self.classifiers.len().max(1) as f64 * (pw + margin);
        let height = ph + 2.0 * margin + 20.0 * self.methods.len() as f64;
        let mut s = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" font-family=\"sans-serif\" font-size=\"11\">\n");
        let means: Vec<f64> = self.aggregates.iter().map(|a| a.mean).filter(|m| m.is_finite()).collect();
        let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (0.0, 1.0) };
        let n = self.counts.len().max(2) - 1;
        for (p, &clf) in self.classifiers.iter().enumerate() {
            let x0 = margin + p as f64 * (pw + margin);
            let y0 = margin;
            let _ = writeln!(s, "<rect x=\"{x0:.1}\" y=\"{y0:.1}\" width=\"{pw:.1}\" height=\"{ph:.1}\" fill=\"none\" stroke=\"#444\"/>");
            let _ = writeln!(
                s,
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
                x0 + pw / 2.0,
                y0 - 10.0,
                clf.as_str().to_uppercase()
            );
            let px = |i: usize| x0 + pw * i as f64 / n as f64;
            let py = |v: f64| y0 + ph - ph * (v - lo) / (hi - lo);
            for (i, c) in self.counts.iter().enumerate() {
                let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{c}</text>", px(i), y0 + ph + 15.0);
            }
            for v in [lo, hi] {
                let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{:.1}</text>", x0 - 4.0, py(v) + 4.0, 100.0 * v);
            }
            for (mi, &m) in self.methods.iter().enumerate() {
                let color = COLORS[mi % COLORS.len()];
                let pts: Vec<String> = self
                    .counts
                    .iter()
                    .enumerate()
                    .filter_map(|(i, &c)| self.aggregate(m, clf, c).map(|a| format!("{:.1},{:.1}", px(i), py(a.mean))))
                    .collect();
                let _ = writeln!(s, "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>", pts.join(" "));
                if p == 0 {
                    let ly = y0 + ph + 35.0 + 20.0 * mi as f64;
                    let _ = writeln!(
                        s,
                        "<line x1=\"{x0:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>",
                        x0 + 20.0
                    );
                    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>", x0 + 26.0, ly + 4.0, m.as_str());
                }
            }
        }
        s.push_str("</svg>\n");
        s
    }
}
