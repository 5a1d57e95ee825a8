//! JSON file formats and machine/human reports.
//!
//! Experiments and POVMs travel as UTF-8 JSON with row-major matrices
//! whose complex entries are `[re, im]` pairs. Reports echo the command,
//! the tolerances, and the seed, then carry a command-specific payload,
//! verdicts, and residuals; numbers print in shortest round-trip form so
//! a report re-parses to the bit-identical value.

use crate::experiment::StatisticalExperiment;
use crate::numerics::{ComplexMatrix, Complex64, Tolerances};
use crate::povm::DiscretePovm;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Row-major complex matrix as nested `[re, im]` arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixData(pub Vec<Vec<(f64, f64)>>);

impl MatrixData {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        MatrixData(
            (0..m.rows())
                .map(|i| (0..m.cols()).map(|j| (m[(i, j)].re, m[(i, j)].im)).collect())
                .collect(),
        )
    }

    /// Convert into a matrix; `context` names the field in diagnostics.
    pub fn to_matrix(&self, context: &str) -> Result<ComplexMatrix> {
        let rows = self.0.len();
        if rows == 0 {
            return Err(Error::InvalidInput(format!("{context}: matrix is empty")));
        }
        let cols = self.0[0].len();
        for (i, row) in self.0.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::InvalidInput(format!(
                    "{context}: row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
        }
        Ok(ComplexMatrix::from_fn(rows, cols, |i, j| {
            Complex64::new(self.0[i][j].0, self.0[i][j].1)
        }))
    }

    fn to_square_matrix(&self, context: &str, dim: usize) -> Result<ComplexMatrix> {
        let m = self.to_matrix(context)?;
        if m.rows() != dim || m.cols() != dim {
            return Err(Error::InvalidInput(format!(
                "{context}: matrix is {}x{}, expected {dim}x{dim}",
                m.rows(),
                m.cols()
            )));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledMatrix {
    pub label: String,
    pub matrix: MatrixData,
}

/// On-disk form of a statistical experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentFile {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_dims: Option<Vec<usize>>,
    pub states: Vec<LabeledMatrix>,
}

impl ExperimentFile {
    pub fn parse(text: &str) -> Result<StatisticalExperiment> {
        let file: ExperimentFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("experiment file: {e}")))?;
        file.into_experiment(&Tolerances::default())
    }

    pub fn into_experiment(self, tols: &Tolerances) -> Result<StatisticalExperiment> {
        let states = self
            .states
            .iter()
            .enumerate()
            .map(|(k, lm)| {
                let m = lm
                    .matrix
                    .to_square_matrix(&format!("states[{k}].matrix"), self.dim)?;
                Ok((lm.label.clone(), m))
            })
            .collect::<Result<Vec<_>>>()?;
        StatisticalExperiment::new(self.dim, states, self.block_dims, tols)
    }

    pub fn from_experiment(exp: &StatisticalExperiment) -> Self {
        ExperimentFile {
            dim: exp.dim(),
            block_dims: exp.block_dims().map(|b| b.to_vec()),
            states: exp
                .states()
                .iter()
                .map(|(label, m)| LabeledMatrix {
                    label: label.clone(),
                    matrix: MatrixData::from_matrix(m),
                })
                .collect(),
        }
    }
}

/// On-disk form of a discrete POVM.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovmFile {
    pub dim: usize,
    pub effects: Vec<LabeledMatrix>,
}

impl PovmFile {
    pub fn parse(text: &str) -> Result<DiscretePovm> {
        let file: PovmFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("povm file: {e}")))?;
        file.into_povm(&Tolerances::default())
    }

    pub fn into_povm(self, tols: &Tolerances) -> Result<DiscretePovm> {
        let effects = self
            .effects
            .iter()
            .enumerate()
            .map(|(k, lm)| {
                let m = lm
                    .matrix
                    .to_square_matrix(&format!("effects[{k}].matrix"), self.dim)?;
                Ok((lm.label.clone(), m))
            })
            .collect::<Result<Vec<_>>>()?;
        DiscretePovm::new(self.dim, effects, tols)
    }

    pub fn from_povm(povm: &DiscretePovm) -> Self {
        PovmFile {
            dim: povm.dim(),
            effects: povm
                .effects()
                .iter()
                .map(|(label, m)| LabeledMatrix {
                    label: label.clone(),
                    matrix: MatrixData::from_matrix(m),
                })
                .collect(),
        }
    }
}

/// Structured command report. Serialized to stdout; timings go to
/// stderr so identical inputs and seed produce byte-identical reports.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: Vec<String>,
    pub tolerances: Tolerances,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    pub residuals: BTreeMap<String, f64>,
    pub payload: serde_json::Value,
}

impl Report {
    pub fn new(command: &str, inputs: &[&str], tols: &Tolerances, seed: u64) -> Self {
        Report {
            command: command.to_string(),
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            tolerances: *tols,
            seed,
            verdict: None,
            residuals: BTreeMap::new(),
            payload: serde_json::Value::Null,
        }
    }

    pub fn with_verdict(mut self, verdict: &str) -> Self {
        self.verdict = Some(verdict.to_string());
        self
    }

    pub fn push_residual(&mut self, name: &str, value: f64) {
        self.residuals.insert(name.to_string(), value);
    }

    pub fn render_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("command: {}\n", self.command));
        out.push_str(&format!("inputs: {}\n", self.inputs.join(", ")));
        out.push_str(&format!(
            "tolerances: eq={:e} cluster={:e} feas={:e}\n",
            self.tolerances.eq_tol, self.tolerances.eig_cluster_tol, self.tolerances.feas_tol
        ));
        out.push_str(&format!("seed: {}\n", self.seed));
        if let Some(v) = &self.verdict {
            out.push_str(&format!("verdict: {v}\n"));
        }
        if !self.residuals.is_empty() {
            out.push_str("residuals:\n");
            for (name, value) in &self.residuals {
                out.push_str(&format!("  {name}: {value:.16e}\n"));
            }
        }
        out.push_str("payload:\n");
        out.push_str(&render_value(&self.payload, 1));
        out
    }
}

fn render_value(v: &serde_json::Value, indent: usize) -> String {
    let pad = "  ".repeat(indent);
    match v {
        serde_json::Value::Object(map) => {
            let mut out = String::new();
            for (k, val) in map {
                match val {
                    serde_json::Value::Object(_) | serde_json::Value::Array(_) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        out.push_str(&render_value(val, indent + 1));
                    }
                    _ => out.push_str(&format!("{pad}{k}: {val}\n")),
                }
            }
            out
        }
        serde_json::Value::Array(items) => {
            let mut out = String::new();
            for item in items {
                match item {
                    serde_json::Value::Object(_) | serde_json::Value::Array(_) => {
                        out.push_str(&format!("{pad}-\n"));
                        out.push_str(&render_value(item, indent + 1));
                    }
                    _ => out.push_str(&format!("{pad}- {item}\n")),
                }
            }
            out
        }
        other => format!("{pad}{other}\n"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rand::random_density;
    use ::rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn experiment_round_trip_is_exact() {
        let t = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let states = vec![
            ("a".to_string(), random_density(3, 3, &mut rng)),
            ("b".to_string(), random_density(3, 2, &mut rng)),
        ];
        let exp = StatisticalExperiment::new(3, states, None, &t).unwrap();
        let text = serde_json::to_string(&ExperimentFile::from_experiment(&exp)).unwrap();
        let back = ExperimentFile::parse(&text).unwrap();
        for (orig, parsed) in exp.states().iter().zip(back.states()) {
            assert_eq!(orig.0, parsed.0);
            // shortest round-trip float printing reproduces bits
            assert!(orig.1.fro_dist(&parsed.1) == 0.0);
        }
    }

    #[test]
    fn malformed_matrix_reports_field_path() {
        let text = r#"{
            "dim": 2,
            "states": [
                {"label": "a", "matrix": [[[1.0,0.0],[0.0,0.0]],[[0.0,0.0]]]}
            ]
        }"#;
        let err = ExperimentFile::parse(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("states[0].matrix"), "got: {msg}");
    }

    #[test]
    fn non_square_matrix_rejected_with_path() {
        let text = r#"{
            "dim": 2,
            "states": [
                {"label": "a", "matrix": [[[0.5,0.0],[0.0,0.0],[0.0,0.0]],[[0.0,0.0],[0.5,0.0],[0.0,0.0]]]}
            ]
        }"#;
        let err = ExperimentFile::parse(text).unwrap_err();
        assert!(err.to_string().contains("expected 2x2"));
    }

    #[test]
    fn povm_file_round_trip() {
        let t = Tolerances::default();
        let povm = crate::povm::random_povm(2, 3, &mut ChaCha8Rng::seed_from_u64(2));
        let text = serde_json::to_string(&PovmFile::from_povm(&povm)).unwrap();
        let back = PovmFile::parse(&text).unwrap();
        for (orig, parsed) in povm.effects().iter().zip(back.effects()) {
            assert!(orig.1.fro_dist(&parsed.1) == 0.0);
        }
        let _ = t;
    }

    #[test]
    fn report_renders_both_modes() {
        let t = Tolerances::default();
        let mut report = Report::new("minimize", &["exp.json"], &t, 7)
            .with_verdict("ok");
        report.push_residual("reconstruction", 1.25e-12);
        report.payload = serde_json::json!({"blocks": [{"d": 1, "m": 2}]});
        let json = report.render_json();
        assert!(json.contains("\"command\": \"minimize\""));
        let text = report.render_text();
        assert!(text.contains("verdict: ok"));
        assert!(text.contains("reconstruction"));
    }
}
