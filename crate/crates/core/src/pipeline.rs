//! The end-to-end pipeline: check the conditions, build the cone complex,
//! find a feasible angle assignment, maximize the volume, develop the
//! pattern and verify it. Framed instances are solved on their double and
//! restricted back to one half.

use crate::complex::{ComplexError, Doubled, ExtendedComplex};
use crate::conditions::{check_conditions, AngleData, CheckOptions, ConditionsError, Verdict};
use crate::io::{EdgeLength, Instance, SolutionFile, TetAngles};
use crate::reconstruct::{
    develop, restrict_symmetric, verify_pattern, DevelopOptions, FramedPattern, Pattern, ReconstructError, VerifyReport,
};
use crate::solver::{
    build_tet_complex, initial_feasible_point, maximize, random_feasible_point, target_edge_sums, AngleAssignment,
    EdgeTargets, FanOptions, SolveReport, SolverError, SolverOptions, TetComplex,
};
use crate::complex::CellComplex;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("the angle data is rejected: {}", .0.rejection().map(|r| r.name()).unwrap_or("?"))]
    Rejected(Box<Verdict>),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Conditions(#[from] ConditionsError),
    #[error("{error}")]
    Solver { error: SolverError, partial: Option<Box<(AngleAssignment, SolveReport)>> },
    #[error(transparent)]
    Reconstruct(#[from] ReconstructError),
}

impl PipelineError {
    /// Name of the module-level error.
    pub fn name(&self) -> &'static str {
        match self {
            PipelineError::Rejected(v) => v.rejection().map(|r| r.name()).unwrap_or("Rejected"),
            PipelineError::Complex(e) => complex_error_name(e),
            PipelineError::Conditions(ConditionsError::Complex(e)) => complex_error_name(e),
            PipelineError::Conditions(ConditionsError::BudgetExceeded { .. }) => "BudgetExceeded",
            PipelineError::Conditions(ConditionsError::Unsupported(_)) => "Unsupported",
            PipelineError::Conditions(ConditionsError::Mismatch(_)) => "Mismatch",
            PipelineError::Solver { error, .. } => error.name(),
            PipelineError::Reconstruct(e) => e.name(),
        }
    }
}

pub fn complex_error_name(e: &ComplexError) -> &'static str {
    match e {
        ComplexError::IndexOutOfRange { .. } => "IndexOutOfRange",
        ComplexError::MalformedTwin { .. } => "MalformedTwin",
        ComplexError::MalformedNext { .. } => "MalformedNext",
        ComplexError::NonOrientable { .. } => "NonOrientable",
        ComplexError::Disconnected { .. } => "Disconnected",
        ComplexError::IsolatedVertex { .. } => "IsolatedVertex",
        ComplexError::NonManifoldVertex { .. } => "NonManifoldVertex",
        ComplexError::SurfaceMismatch { .. } => "SurfaceMismatch",
        ComplexError::AngleOutOfRange { .. } => "AngleOutOfRange",
        ComplexError::MissingAngle { .. } => "MissingAngle",
        ComplexError::Empty => "Empty",
        ComplexError::HasBoundary => "HasBoundary",
        ComplexError::NoBoundary => "NoBoundary",
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub check: CheckOptions,
    pub solver: SolverOptions,
    pub fan: FanOptions,
    pub develop: DevelopOptions,
    /// Start from a random feasible point instead of the analytic center.
    pub seed: Option<u64>,
    /// Largest acceptable asymmetry of a solution on a double.
    pub symmetry_tol: f64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            check: CheckOptions::default(),
            solver: SolverOptions::default(),
            fan: FanOptions::default(),
            develop: DevelopOptions::default(),
            seed: None,
            symmetry_tol: 1e-6,
        }
    }
}

/// The closed problem actually solved: the instance itself, or its double.
#[derive(Clone, Debug)]
pub struct ClosedProblem {
    pub complex: CellComplex,
    pub data: AngleData,
    pub doubling: Option<(ExtendedComplex, Doubled)>,
}

/// Doubles a framed instance along its boundary; closed instances pass
/// through unchanged.
pub fn closed_problem(inst: &Instance) -> Result<ClosedProblem, PipelineError> {
    if !inst.data.framed {
        return Ok(ClosedProblem { complex: inst.complex.clone(), data: inst.data.clone(), doubling: None });
    }
    let ext = inst.complex.extended_graph()?;
    let theta = inst.data.extended_theta(&ext)?;
    let doubled = ext.double(&theta, &inst.data.kappa)?;
    let mut forced = BTreeSet::new();
    for &f in &inst.data.forced_ideal {
        forced.insert(f);
        forced.insert(doubled.mirror_face(f));
    }
    let data = AngleData {
        theta: doubled.theta.clone(),
        kappa: doubled.kappa.clone(),
        geometry: inst.data.geometry,
        forced_ideal: forced,
        ..Default::default()
    };
    Ok(ClosedProblem { complex: doubled.complex.clone(), data, doubling: Some((ext, doubled)) })
}

/// A doubled instance as a plain closed instance.
pub fn doubled_instance(inst: &Instance) -> Result<Instance, PipelineError> {
    let closed = closed_problem(inst)?;
    if closed.doubling.is_none() {
        return Err(ComplexError::NoBoundary.into());
    }
    let name = inst.name.as_ref().map(|n| format!("{n}-doubled"));
    Ok(Instance { name, complex: closed.complex, data: closed.data })
}

/// Checks the existence conditions on the instance as given.
pub fn validate(inst: &Instance, opts: &CheckOptions) -> Result<Verdict, PipelineError> {
    Ok(check_conditions(&inst.complex, &inst.data, opts)?)
}

/// A solved instance.
#[derive(Clone, Debug)]
pub struct Solution {
    pub verdict: Verdict,
    pub closed: ClosedProblem,
    pub tet_complex: TetComplex,
    pub targets: EdgeTargets,
    pub theta: AngleAssignment,
    pub report: SolveReport,
    pub pattern: Pattern,
    pub verification: VerifyReport,
    pub framed: Option<FramedPattern>,
}

impl Solution {
    /// Whether the solver converged and every verification residual is at
    /// most `tol`.
    pub fn within_tolerance(&self, tol: f64) -> bool {
        self.report.converged
            && self.verification.max_residual() <= tol
            && self.verification.bouquet_ok
            && self.verification.min_dual_gap >= -tol
    }

    pub fn to_file(&self, name: Option<String>) -> SolutionFile {
        let tc = &self.tet_complex;
        let theta_star = tc
            .tets
            .iter()
            .zip(&self.theta.angles)
            .map(|(t, a)| TetAngles { pyramid: t.pyramid, faces: t.faces, edges: t.edges, angles: *a })
            .collect();
        let edge_lengths = tc
            .edges
            .iter()
            .enumerate()
            .map(|(id, class)| EdgeLength { id, class: *class, length: self.report.residuals.edge_lengths[id] })
            .collect();
        SolutionFile {
            name,
            ideal_faces: tc.ideal_faces.clone(),
            theta_star,
            edge_lengths,
            solver: self.report.clone(),
            pattern: self.pattern.clone(),
            verification: self.verification.clone(),
            framed: self.framed.clone(),
        }
    }
}

/// Builds the cone complex and the edge targets for an accepted closed
/// problem.
pub fn prepare(
    closed: &ClosedProblem,
    verdict: &Verdict,
    fan: FanOptions,
) -> Result<(TetComplex, EdgeTargets), PipelineError> {
    let ideal = verdict.ideal_faces().ok_or_else(|| PipelineError::Rejected(Box::new(verdict.clone())))?;
    let solver_err = |error| PipelineError::Solver { error, partial: None };
    let tc = build_tet_complex(&closed.complex, ideal, closed.data.geometry, fan).map_err(solver_err)?;
    let targets = target_edge_sums(&tc, &closed.data, verdict).map_err(solver_err)?;
    Ok((tc, targets))
}

/// Runs the whole pipeline.
pub fn solve(inst: &Instance, opts: &PipelineOptions) -> Result<Solution, PipelineError> {
    if inst.data.framed {
        let framed_verdict = validate(inst, &opts.check)?;
        if !framed_verdict.is_accepted() {
            return Err(PipelineError::Rejected(Box::new(framed_verdict)));
        }
    }
    let closed = closed_problem(inst)?;
    let verdict = check_conditions(&closed.complex, &closed.data, &opts.check)?;
    if !verdict.is_accepted() {
        return Err(PipelineError::Rejected(Box::new(verdict)));
    }
    solve_closed(closed, verdict, opts)
}

/// Runs the pipeline past the conditions check, for an accepted verdict.
pub fn solve_closed(closed: ClosedProblem, verdict: Verdict, opts: &PipelineOptions) -> Result<Solution, PipelineError> {
    let (tc, targets) = prepare(&closed, &verdict, opts.fan)?;
    let solver_err = |error| PipelineError::Solver { error, partial: None };
    let start = match opts.seed {
        Some(seed) => random_feasible_point(&tc, &targets, seed).map_err(solver_err)?,
        None => initial_feasible_point(&tc, &targets).map_err(solver_err)?,
    };
    let (theta, report) =
        maximize(&tc, &targets, &start, &opts.solver).map_err(|(error, partial)| PipelineError::Solver { error, partial })?;
    let pattern = develop(&closed.complex, &tc, &theta, &opts.develop)?;
    let verification = verify_pattern(&pattern, &closed.data);
    let framed = match &closed.doubling {
        Some((ext, doubled)) => Some(restrict_symmetric(&pattern, ext, doubled, opts.symmetry_tol)?),
        None => None,
    };
    Ok(Solution { verdict, closed, tet_complex: tc, targets, theta, report, pattern, verification, framed })
}
