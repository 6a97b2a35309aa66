//! Machine-readable trace files. JSON is the default; the schema is
//! versioned and round-trips losslessly (f64 values print in shortest
//! round-trip form). Wall time is recorded only when timing is requested, so
//! default runs with a fixed seed are byte-identical.

use serde::{Deserialize, Serialize};
use stiefel_jd::newton::SolveTrace;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub schema_version: u32,
    pub config: TraceConfig,
    pub iterations: Vec<IterationRow>,
    pub summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub family: Option<String>,
    pub n: usize,
    pub p: usize,
    pub num_matrices: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trial: Option<u64>,
    pub metric: String,
    pub max_iters: usize,
    pub grad_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub perturbation_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub jacobi_sweep_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub k: usize,
    pub f: f64,
    pub grad_norm: f64,
    pub step_norm: Option<f64>,
    pub orth_defect: f64,
    /// `f(Y_k) - f(Y_opt)` when the instance has a known optimum.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub f_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub termination: String,
    pub steps: usize,
    pub final_f: f64,
    pub final_grad_norm: f64,
    pub final_orth_defect: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub convergence_order: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub f_opt_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub jacobi: Option<JacobiSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ica: Option<IcaSummary>,
}

/// Warm-start statistics and the improvement Newton achieved over it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobiSummary {
    pub sweeps: usize,
    pub f: f64,
    pub grad_norm: f64,
    pub orth_defect: f64,
    pub f_minus_newton: f64,
    pub grad_norm_minus_newton: f64,
    pub orth_defect_minus_newton: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcaSummary {
    pub channels: usize,
    pub samples: usize,
    pub contrast_norm: f64,
    pub fell_back: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alignment_permutation: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alignment_scales: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alignment_correlations: Option<Vec<f64>>,
}

/// Converts a solver trace into rows, attaching `f - f_opt` when known.
pub fn rows_from_trace(trace: &SolveTrace<f64>, f_opt: Option<f64>) -> Vec<IterationRow> {
    trace
        .records
        .iter()
        .map(|r| IterationRow {
            k: r.k,
            f: r.f,
            grad_norm: r.grad_norm,
            step_norm: r.step_norm,
            orth_defect: r.orth_defect,
            f_gap: f_opt.map(|fo| r.f - fo),
        })
        .collect()
}

impl TraceFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serialization cannot fail")
    }

    #[cfg(test)]
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Iterations table as CSV (used by `--format csv`).
    pub fn iterations_csv(&self) -> String {
        let mut out = String::from("k,f,grad_norm,step_norm,orth_defect,f_gap\n");
        for r in &self.iterations {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.k,
                r.f,
                r.grad_norm,
                r.step_norm.map_or(String::new(), |v| v.to_string()),
                r.orth_defect,
                r.f_gap.map_or(String::new(), |v| v.to_string()),
            ));
        }
        out
    }

    /// Summary as `key,value` CSV (used by `--format csv`).
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("key,value\n");
        out.push_str(&format!("termination,{}\n", self.summary.termination));
        out.push_str(&format!("steps,{}\n", self.summary.steps));
        out.push_str(&format!("final_f,{}\n", self.summary.final_f));
        out.push_str(&format!(
            "final_grad_norm,{}\n",
            self.summary.final_grad_norm
        ));
        out.push_str(&format!(
            "final_orth_defect,{}\n",
            self.summary.final_orth_defect
        ));
        if let Some(q) = self.summary.convergence_order {
            out.push_str(&format!("convergence_order,{q}\n"));
        }
        if let Some(g) = self.summary.f_opt_gap {
            out.push_str(&format!("f_opt_gap,{g}\n"));
        }
        if let Some(j) = &self.summary.jacobi {
            out.push_str(&format!("jacobi_sweeps,{}\n", j.sweeps));
            out.push_str(&format!("jacobi_f,{}\n", j.f));
            out.push_str(&format!("jacobi_grad_norm,{}\n", j.grad_norm));
            out.push_str(&format!("jacobi_f_minus_newton,{}\n", j.f_minus_newton));
            out.push_str(&format!(
                "jacobi_grad_norm_minus_newton,{}\n",
                j.grad_norm_minus_newton
            ));
        }
        out
    }
}
