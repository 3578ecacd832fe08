//! Trapdoor solve: read the RSA key out of a sample formula, factor it,
//! relabel the examples, learn the minimized prefix-tree DFA and read a
//! coloring off its states. The ILP variant inverts the model back to its
//! formula first and lifts the coloring to an assignment.
//!
//! Every success has passed the coloring, label and (for ILP) assignment
//! verifiers; a failing check is an error, never a silent result.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::Bits;
use crate::fc::{
    coloring_from_dfa, infer_strings, tau4, tau4_from_strings, verify_coloring, Coloring, ColoringVerdict, FcError,
    FcInstance,
};
use crate::ilp::{
    assignment_from_coloring, g2, reconstruct_fc, tau5, verify_assignment, write_lp, AssignmentFile,
    AssignmentVerdict, IlpAssignment, IlpError, IlpModel,
};
use crate::instances::{decode_example, generate_sample, make_layout, InstanceError, LabeledSample};
use crate::numtheory::{
    decrypt_lsb, factor_semiprime, keygen, recover_secret_exponent, to_hex, NumError, RsaKey,
};
use crate::representations::{build_prefix_tree_dfa, minimize_dfa, ReprError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Keygen,
    Sample,
    Reduce,
    Reconstruct,
    InferStrings,
    DecodeKey,
    Factor,
    SecretExponent,
    Label,
    BuildDfa,
    Minimize,
    Color,
    Verify,
    Lift,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = serde_json::to_value(self).expect("unit variant");
        f.write_str(text.as_str().expect("string"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Coloring,
    Labels,
    Assignment,
    Objective,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = serde_json::to_value(self).expect("unit variant");
        f.write_str(text.as_str().expect("string"))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("occam parameter {name} = {value} is out of range")]
    OccamParam { name: &'static str, value: f64 },
    #[error("occam sample size overflows")]
    OccamOverflow,
    #[error("{stage}: {source}")]
    Fc { stage: Stage, source: FcError },
    #[error("{stage}: {source}")]
    Ilp { stage: Stage, source: IlpError },
    #[error("{stage}: {source}")]
    Num { stage: Stage, source: NumError },
    #[error("{stage}: {source}")]
    Instance { stage: Stage, source: InstanceError },
    #[error("{stage}: {source}")]
    Repr { stage: Stage, source: ReprError },
    #[error("{check} check failed: {detail}")]
    Verification { check: Check, detail: String },
}

impl PipelineError {
    /// Whether the failure is a verifier rejecting a result, as opposed to
    /// a stage being unable to run.
    pub fn is_verification(&self) -> bool {
        matches!(self, PipelineError::Verification { .. })
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T>;
}

macro_rules! at_stage {
    ($err:ty, $variant:ident) => {
        impl<T> AtStage<T> for std::result::Result<T, $err> {
            fn at(self, stage: Stage) -> Result<T> {
                self.map_err(|source| PipelineError::$variant { stage, source })
            }
        }
    };
}

at_stage!(FcError, Fc);
at_stage!(IlpError, Ilp);
at_stage!(NumError, Num);
at_stage!(InstanceError, Instance);
at_stage!(ReprError, Repr);

// ---------------------------------------------------------------------------
// Occam bound

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccamParams {
    pub epsilon: f64,
    pub delta: f64,
    pub n: u64,
    pub alpha: f64,
    pub beta: f64,
}

impl OccamParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, value| Err(PipelineError::OccamParam { name, value });
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon", self.epsilon);
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return bad("delta", self.delta);
        }
        if self.n == 0 {
            return bad("n", 0.0);
        }
        if !(self.alpha >= 1.0 && self.alpha.is_finite()) {
            return bad("alpha", self.alpha);
        }
        if !(0.0..1.0).contains(&self.beta) {
            return bad("beta", self.beta);
        }
        Ok(())
    }
}

/// Sample size sufficient for an Occam learner, with every hidden constant
/// set to 1: `ceil((1/eps) ln(1/delta) + ((n^a/eps) log2(n^a/eps))^(1/(1-b)))`.
pub fn occam_sample_size(p: &OccamParams) -> Result<u64> {
    p.validate()?;
    let confidence = (1.0 / p.delta).ln() / p.epsilon;
    let size = (p.n as f64).powf(p.alpha) / p.epsilon;
    let complexity = (size * size.log2()).powf(1.0 / (1.0 - p.beta));
    let m = (confidence + complexity).ceil();
    if !m.is_finite() || m >= u64::MAX as f64 {
        return Err(PipelineError::OccamOverflow);
    }
    Ok(m as u64)
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: Stage,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdicts {
    pub coloring: bool,
    pub labels: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// `"fc"` or `"ilp"`.
    pub instance: String,
    /// Digest of the formula that was colored (reconstructed, for ILP).
    pub digest: String,
    /// Recovered key, hex.
    #[serde(rename = "N")]
    pub modulus: String,
    pub e: String,
    pub p: String,
    pub q: String,
    pub d: String,
    pub examples: usize,
    pub positives: usize,
    pub prefix_tree_states: usize,
    pub dfa_states: usize,
    pub k: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<i64>,
    pub verdicts: Verdicts,
    /// Wall clock per stage; the only nondeterministic field.
    #[serde(default)]
    pub timings: Vec<StageTiming>,
}

impl SolveReport {
    pub fn without_timings(&self) -> SolveReport {
        SolveReport { timings: Vec::new(), ..self.clone() }
    }

    pub fn seconds(&self, stage: Stage) -> Option<f64> {
        self.timings.iter().find(|t| t.stage == stage).map(|t| t.seconds)
    }
}

#[derive(Default)]
struct Clock(Vec<StageTiming>);

impl Clock {
    fn run<T>(&mut self, stage: Stage, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f();
        self.0.push(StageTiming { stage, seconds: start.elapsed().as_secs_f64() });
        out
    }
}

fn verification(check: Check, detail: impl Into<String>) -> PipelineError {
    PipelineError::Verification { check, detail: detail.into() }
}

// ---------------------------------------------------------------------------
// Solvers

/// Colors a sample formula through its RSA trapdoor.
pub fn trapdoor_solve_fc(f: &FcInstance) -> Result<(Coloring, SolveReport)> {
    let mut clock = Clock::default();
    let provenance = *f.provenance().ok_or(FcError::MissingProvenance).at(Stage::InferStrings)?;
    let layout = provenance.layout;
    let strings = clock.run(Stage::InferStrings, || infer_strings(f).at(Stage::InferStrings))?;

    let (modulus, e) = clock.run(Stage::DecodeKey, || {
        let (_, modulus, e) = decode_example(&strings[0], &layout).at(Stage::DecodeKey)?;
        if make_layout(&modulus, &e).at(Stage::DecodeKey)? != layout {
            return Err(InstanceError::LayoutMismatch).at(Stage::DecodeKey);
        }
        Ok((modulus, e))
    })?;
    let (p, q) = clock.run(Stage::Factor, || factor_semiprime(&modulus).at(Stage::Factor))?;
    let d = clock.run(Stage::SecretExponent, || recover_secret_exponent(&e, &p, &q).at(Stage::SecretExponent))?;

    let labels = clock.run(Stage::Label, || {
        strings
            .iter()
            .enumerate()
            .map(|(index, w)| {
                let (ps, n_i, e_i) = decode_example(w, &layout).at(Stage::Label)?;
                if n_i != modulus || e_i != e {
                    return Err(InstanceError::ForeignKey { index }).at(Stage::Label);
                }
                decrypt_lsb(&ps, &modulus, &d).at(Stage::Label)
            })
            .collect::<Result<Vec<bool>>>()
    })?;

    let labeled: Vec<(Bits, bool)> = strings.iter().cloned().zip(labels.iter().copied()).collect();
    let pta = clock.run(Stage::BuildDfa, || build_prefix_tree_dfa(&labeled).at(Stage::BuildDfa))?;
    let t = clock.run(Stage::Minimize, || Ok(minimize_dfa(&pta)))?;
    let coloring = clock.run(Stage::Color, || coloring_from_dfa(f, &strings, &t).at(Stage::Color))?;

    clock.run(Stage::Verify, || {
        if let ColoringVerdict::Violated { index, clause } = verify_coloring(f, &coloring).at(Stage::Verify)? {
            return Err(verification(Check::Coloring, format!("clause {index} ({clause:?}) is violated")));
        }
        if let Some(i) = labeled.iter().position(|(w, b)| t.accepts(w.as_slice()) != *b) {
            return Err(verification(Check::Labels, format!("DFA mislabels example {}", i + 1)));
        }
        let rebuilt = tau4_from_strings(&strings, &labels, Some(provenance))
            .map_err(|err| verification(Check::Labels, err.to_string()))?;
        if !rebuilt.same_clauses(f) {
            return Err(verification(Check::Labels, "decrypted labels do not reproduce the formula"));
        }
        Ok(())
    })?;

    let report = SolveReport {
        instance: "fc".into(),
        digest: f.digest(),
        modulus: to_hex(&modulus),
        e: to_hex(&e),
        p: to_hex(&p),
        q: to_hex(&q),
        d: to_hex(&d),
        examples: strings.len(),
        positives: labels.iter().filter(|&&b| b).count(),
        prefix_tree_states: pta.state_count(),
        dfa_states: t.state_count(),
        k: coloring.k(),
        objective: None,
        verdicts: Verdicts { coloring: true, labels: true, assignment: None },
        timings: clock.0,
    };
    Ok((coloring, report))
}

/// Recovers the formula behind a model, solves it, and lifts the coloring
/// to an optimal assignment whose objective is the number of colors.
pub fn trapdoor_solve_ilp(model: &IlpModel) -> Result<(IlpAssignment, SolveReport)> {
    let mut clock = Clock::default();
    let f = clock.run(Stage::Reconstruct, || reconstruct_fc(model).at(Stage::Reconstruct))?;
    let (coloring, mut report) = trapdoor_solve_fc(&f)?;
    let a = clock.run(Stage::Lift, || assignment_from_coloring(model, &f, &coloring).at(Stage::Lift))?;

    let objective = clock.run(Stage::Verify, || {
        match verify_assignment(model, &a).at(Stage::Verify)? {
            AssignmentVerdict::Feasible => {}
            verdict => return Err(verification(Check::Assignment, format!("{verdict:?}"))),
        }
        if g2(&a, model).at(Stage::Verify)? != coloring {
            return Err(verification(Check::Assignment, "back-mapped coloring differs"));
        }
        let objective = model.objective(&a);
        if objective != i64::from(coloring.k()) {
            return Err(verification(Check::Objective, format!("objective {objective} but {} colors", coloring.k())));
        }
        Ok(objective)
    })?;

    let mut timings = clock.0;
    timings.splice(1..1, report.timings.drain(..));
    report.instance = "ilp".into();
    report.objective = Some(objective);
    report.verdicts.assignment = Some(true);
    report.timings = timings;
    Ok((a, report))
}

// ---------------------------------------------------------------------------
// Full chain

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub bits_per_prime: u32,
    pub key_seed: u64,
    pub m: usize,
    pub sample_seed: u64,
}

/// Everything one run of the chain produces.
#[derive(Debug, Clone)]
pub struct ChainArtifacts {
    pub key: RsaKey,
    pub sample: LabeledSample,
    pub fc: FcInstance,
    pub model: IlpModel,
    pub coloring: Coloring,
    pub fc_report: SolveReport,
    pub assignment: IlpAssignment,
    pub ilp_report: SolveReport,
}

/// keygen, sample, both reductions, and both trapdoor solves. The solvers
/// only see the public formula and model.
pub fn run_chain(config: &ChainConfig) -> Result<ChainArtifacts> {
    let key = keygen(config.bits_per_prime, config.key_seed).at(Stage::Keygen)?;
    let sample = generate_sample(&key, config.m, config.sample_seed).at(Stage::Sample)?;
    let fc = tau4(&sample.public()).at(Stage::Reduce)?;
    let model = tau5(&fc).at(Stage::Reduce)?;
    let (coloring, fc_report) = trapdoor_solve_fc(&fc)?;
    let (assignment, ilp_report) = trapdoor_solve_ilp(&model)?;
    Ok(ChainArtifacts { key, sample, fc, model, coloring, fc_report, assignment, ilp_report })
}

impl ChainArtifacts {
    /// The serialized artifacts as the CLI would write them, reports
    /// without their timings.
    pub fn files(&self) -> Vec<(&'static str, Vec<u8>)> {
        let json = |value: &dyn erased::Json| value.to_bytes();
        let mut lp = Vec::new();
        write_lp(&self.model, &mut lp).expect("writing to memory");
        vec![
            ("key.json", json(&self.key.to_file())),
            ("sample.json", json(&self.sample.to_file())),
            ("fc.json", json(&self.fc)),
            ("model.lp", lp),
            ("coloring.json", json(&self.coloring.to_file(self.fc.vars()))),
            ("fc_report.json", json(&self.fc_report.without_timings())),
            ("assignment.json", json(&AssignmentFile::from_assignment(&self.model, &self.assignment))),
            ("ilp_report.json", json(&self.ilp_report.without_timings())),
        ]
    }
}

mod erased {
    pub trait Json {
        fn to_bytes(&self) -> Vec<u8>;
    }

    impl<T: serde::Serialize> Json for T {
        fn to_bytes(&self) -> Vec<u8> {
            let mut out = serde_json::to_vec_pretty(self).expect("serializable");
            out.push(b'\n');
            out
        }
    }
}
