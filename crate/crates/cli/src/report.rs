//! Confusion matrices, per-class scores and ablation rows.

use std::fmt::Write as _;

use timbre_core::Domain;

/// Counts indexed `[true][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    class_names: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(class_names: Vec<String>) -> Self {
        let k = class_names.len();
        Self {
            class_names,
            counts: vec![vec![0; k]; k],
        }
    }

    /// Panics if a label is outside the class list.
    pub fn from_predictions(class_names: Vec<String>, truth: &[usize], predicted: &[usize]) -> Self {
        assert_eq!(truth.len(), predicted.len(), "truth and prediction lengths differ");
        let mut m = Self::new(class_names);
        for (&t, &p) in truth.iter().zip(predicted) {
            m.add(t, p);
        }
        m
    }

    pub fn add(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    /// `trace / total`; 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.trace() as f64 / n as f64,
        }
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<u64> {
        (0..self.counts.len())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }

    /// `None` when nothing was predicted as `class`.
    pub fn precision(&self, class: usize) -> Option<f64> {
        let col = self.column_sums()[class];
        (col > 0).then(|| self.counts[class][class] as f64 / col as f64)
    }

    /// `None` when `class` has no true instances.
    pub fn recall(&self, class: usize) -> Option<f64> {
        let row = self.row_sums()[class];
        (row > 0).then(|| self.counts[class][class] as f64 / row as f64)
    }

    /// Header of predicted-class names; one row per true class.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for name in &self.class_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (name, row) in self.class_names.iter().zip(&self.counts) {
            out.push_str(name);
            for c in row {
                write!(out, ",{c}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// `class,precision,recall,support`, with empty cells where a score is
    /// undefined.
    pub fn per_class_csv(&self) -> String {
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let support = self.row_sums();
        let mut out = String::from("class,precision,recall,support\n");
        for (i, name) in self.class_names.iter().enumerate() {
            writeln!(
                out,
                "{name},{},{},{}",
                fmt(self.precision(i)),
                fmt(self.recall(i)),
                support[i]
            )
            .unwrap();
        }
        out
    }
}

/// Percent with two decimals, e.g. `97.65%`.
pub fn percent(accuracy: f64) -> String {
    format!("{:.2}%", accuracy * 100.0)
}

/// One feature combination in the ablation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Combination {
    pub id: char,
    pub domains: &'static [Domain],
}

pub const COMBINATIONS: [Combination; 8] = {
    use Domain::*;
    [
        Combination { id: 'A', domains: &[Time] },
        Combination { id: 'B', domains: &[Frequency] },
        Combination { id: 'C', domains: &[Cepstral] },
        Combination { id: 'D', domains: &[Time, Frequency] },
        Combination { id: 'E', domains: &[Time, Cepstral] },
        Combination { id: 'F', domains: &[Frequency, Cepstral] },
        Combination { id: 'G', domains: &[Time, Frequency, Cepstral] },
        Combination { id: 'H', domains: &[Time, Frequency, Cepstral, Autocorrelation] },
    ]
};

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub combo_id: char,
    pub domains: Vec<Domain>,
    pub dimension: usize,
    /// Test accuracy, or the error that stopped this combination.
    pub accuracy: Result<f64, String>,
}

pub fn domains_label(domains: &[Domain]) -> String {
    domains.iter().map(|d| d.name()).collect::<Vec<_>>().join("+")
}

/// Ablation table with the split and hyperparameters echoed on every row.
pub fn ablation_csv(rows: &[AblationRow], seed: u64, ratio: f64, echo: &[(&str, String)]) -> String {
    let mut out = String::from("combo,domains,dimension,accuracy,error,split_seed,split_ratio");
    for (k, _) in echo {
        write!(out, ",{k}").unwrap();
    }
    out.push('\n');
    for r in rows {
        let (acc, err) = match &r.accuracy {
            Ok(a) => (a.to_string(), String::new()),
            Err(e) => (String::new(), e.replace([',', '\n'], ";")),
        };
        write!(
            out,
            "{},{},{},{acc},{err},{seed},{ratio}",
            r.combo_id,
            domains_label(&r.domains),
            r.dimension
        )
        .unwrap();
        for (_, v) in echo {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}
