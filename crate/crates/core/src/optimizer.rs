//! Communication-energy objective over the CE count `k` and its minimizer.
//!
//! The objective adds an intra-CE term, whose per-bit energy grows with the
//! square root of the nodes per CE, and an inter-CE term, whose per-bit
//! energy grows with the square root of the CE count. `N/k` is treated as a
//! real number throughout.
//!
//! With uniform probabilities the objective collapses to
//!
//! ```text
//! E(k) / A = p1 (N^{5/2} k^{-3/2} - N^{3/2} k^{-1/2}) + p2 N^2 (k^{1/2} - k^{-1/2})
//! ```
//!
//! `k^{5/2} E'(k)` is a quadratic in `k` with a positive leading coefficient
//! and a negative constant term, so `E` has exactly one stationary point on
//! `k > 0`. That unimodality is what the golden-section search relies on.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{contiguous_assignment, count_edges, Graph};

#[derive(Debug, Error, PartialEq)]
pub enum OptError {
    #[error("node count must be at least 2, got {0}")]
    TooFewNodes(u64),
    #[error("activation-bit sum must be positive and finite, got {0}")]
    ActivationSum(f64),
    #[error("probability {name} = {value} is outside [0, 1]")]
    Probability { name: &'static str, value: f64 },
    #[error("invalid k bounds [{k_min}, {k_max}]")]
    Bounds { k_min: u32, k_max: u32 },
    #[error("k = {k} exceeds the {nodes} graph nodes")]
    KExceedsNodes { k: u32, nodes: u64 },
    #[error("measured probabilities cover {len} CEs, objective evaluated at k = {k}")]
    ProbabilityShape { len: usize, k: u32 },
    #[error("objective is not finite at k = {k}")]
    NonFinite { k: f64 },
    #[error("continuous search picked k = {continuous}, enumeration picked k = {enumerated}")]
    OracleMismatch { continuous: u32, enumerated: u32 },
}

/// Where the connection probabilities at a given `k` come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ConnectionModel {
    /// Same `p1` for every CE and same `p2` for every CE pair.
    Uniform { p1: f64, p2: f64 },
    /// Per-CE / per-pair values measured at one fixed `k = p1.len()`.
    Measured { p1: Vec<f64>, p2: Vec<Vec<f64>> },
    /// Re-estimated from the graph under a contiguous partition at each `k`.
    Graph(Arc<Graph>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveParams {
    pub nodes: u64,
    /// `Σ_{l=1}^{L-1} a(l+1)` in bits.
    pub act_sum_bits: f64,
    pub model: ConnectionModel,
    pub k_min: u32,
    pub k_max: u32,
}

pub const DEFAULT_K_MIN: u32 = 4;
pub const DEFAULT_K_MAX: u32 = 100;

impl ObjectiveParams {
    pub fn uniform(nodes: u64, act_sum_bits: f64, p1: f64, p2: f64) -> Self {
        Self {
            nodes,
            act_sum_bits,
            model: ConnectionModel::Uniform { p1, p2 },
            k_min: DEFAULT_K_MIN,
            k_max: DEFAULT_K_MAX,
        }
    }

    pub fn from_graph(graph: Arc<Graph>, act_sum_bits: f64) -> Self {
        Self {
            nodes: graph.num_nodes() as u64,
            act_sum_bits,
            model: ConnectionModel::Graph(graph),
            k_min: DEFAULT_K_MIN,
            k_max: DEFAULT_K_MAX,
        }
    }

    pub fn with_bounds(mut self, k_min: u32, k_max: u32) -> Self {
        self.k_min = k_min;
        self.k_max = k_max;
        self
    }

    pub fn validate(&self) -> Result<(), OptError> {
        if self.nodes < 2 {
            return Err(OptError::TooFewNodes(self.nodes));
        }
        if !(self.act_sum_bits.is_finite() && self.act_sum_bits > 0.0) {
            return Err(OptError::ActivationSum(self.act_sum_bits));
        }
        if self.k_min < 1 || self.k_min > self.k_max {
            return Err(OptError::Bounds {
                k_min: self.k_min,
                k_max: self.k_max,
            });
        }
        let check = |name: &'static str, value: f64| {
            if (0.0..=1.0).contains(&value) {
                Ok(())
            } else {
                Err(OptError::Probability { name, value })
            }
        };
        match &self.model {
            ConnectionModel::Uniform { p1, p2 } => {
                check("p1", *p1)?;
                check("p2", *p2)?;
            }
            ConnectionModel::Measured { p1, p2 } => {
                for &p in p1 {
                    check("p1", p)?;
                }
                for &p in p2.iter().flatten() {
                    check("p2", p)?;
                }
                if p2.len() != p1.len() || p2.iter().any(|row| row.len() != p1.len()) {
                    return Err(OptError::ProbabilityShape {
                        len: p1.len(),
                        k: p2.len() as u32,
                    });
                }
            }
            ConnectionModel::Graph(_) => {
                if u64::from(self.k_max) > self.nodes {
                    return Err(OptError::KExceedsNodes {
                        k: self.k_max,
                        nodes: self.nodes,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn uniform_objective(&self) -> Option<UniformObjective> {
        match self.model {
            ConnectionModel::Uniform { p1, p2 } => Some(UniformObjective {
                nodes: self.nodes as f64,
                act_sum_bits: self.act_sum_bits,
                p1,
                p2,
            }),
            _ => None,
        }
    }

    /// `(Σ_m p1_m, Σ_i Σ_{j≠i} p2_ij)` at integer `k`.
    fn probability_sums(&self, k: u32) -> Result<(f64, f64), OptError> {
        let kf = f64::from(k);
        match &self.model {
            ConnectionModel::Uniform { p1, p2 } => Ok((kf * p1, kf * (kf - 1.0) * p2)),
            ConnectionModel::Measured { p1, p2 } => {
                if p1.len() != k as usize {
                    return Err(OptError::ProbabilityShape { len: p1.len(), k });
                }
                let inter = p2
                    .iter()
                    .enumerate()
                    .flat_map(|(i, row)| row.iter().enumerate().filter(move |(j, _)| *j != i))
                    .map(|(_, p)| p)
                    .sum();
                Ok((p1.iter().sum(), inter))
            }
            ConnectionModel::Graph(graph) => {
                if k == 0 || u64::from(k) > self.nodes {
                    return Err(OptError::KExceedsNodes { k, nodes: self.nodes });
                }
                Ok(graph_probability_sums(graph, k as usize))
            }
        }
    }
}

fn graph_probability_sums(graph: &Graph, k: usize) -> (f64, f64) {
    let assignment = contiguous_assignment(graph.num_nodes(), k);
    let counts = count_edges(graph, &assignment, k);
    let mut sizes = vec![0usize; k];
    for &ce in &assignment {
        sizes[ce as usize] += 1;
    }
    let mut intra = 0.0;
    let mut inter = 0.0;
    for i in 0..k {
        let n = sizes[i] as f64;
        if sizes[i] > 1 {
            intra += 2.0 * counts.intra[i] as f64 / (n * (n - 1.0));
        }
        for j in 0..k {
            if i != j {
                inter += counts.inter[i][j] as f64 / (n * sizes[j] as f64);
            }
        }
    }
    (intra, inter)
}

/// Intra-CE communication energy at integer `k` (abstract units).
pub fn energy_intra(k: u32, params: &ObjectiveParams) -> Result<f64, OptError> {
    let (p1_sum, _) = params.probability_sums(k)?;
    let per_ce = params.nodes as f64 / f64::from(k);
    Ok(per_ce * (per_ce - 1.0) * p1_sum * params.act_sum_bits * per_ce.sqrt())
}

/// Inter-CE communication energy at integer `k` (abstract units).
pub fn energy_inter(k: u32, params: &ObjectiveParams) -> Result<f64, OptError> {
    let (_, p2_sum) = params.probability_sums(k)?;
    let per_ce = params.nodes as f64 / f64::from(k);
    Ok(per_ce * per_ce * p2_sum * params.act_sum_bits * f64::from(k).sqrt())
}

/// `(intra, inter, intra + inter)` at integer `k`.
pub fn energy_total(k: u32, params: &ObjectiveParams) -> Result<(f64, f64, f64), OptError> {
    let intra = energy_intra(k, params)?;
    let inter = energy_inter(k, params)?;
    Ok((intra, inter, intra + inter))
}

/// Second derivative of the objective with the rounded coefficients the
/// convexity argument was published with (valid for `p1 = 0.25`, `p2 = 0.22`).
pub fn second_derivative_published(k: f64, nodes: f64, act_sum_bits: f64) -> f64 {
    (0.94 * nodes.powf(2.5) / k.powf(3.5)
        - 0.06 * nodes.powi(2) / k.powf(1.5)
        - (0.17 * nodes.powi(2) + 0.19 * nodes.powf(1.5)) / k.powf(2.5))
        * act_sum_bits
}

/// `coef · N^{n_exp} · k^{k_exp}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub coef: f64,
    pub n_exp: f64,
    pub k_exp: f64,
}

impl PowerTerm {
    pub fn eval(&self, nodes: f64, k: f64) -> f64 {
        self.coef * nodes.powf(self.n_exp) * k.powf(self.k_exp)
    }

    pub fn d_dk(&self) -> Self {
        Self {
            coef: self.coef * self.k_exp,
            n_exp: self.n_exp,
            k_exp: self.k_exp - 1.0,
        }
    }
}

/// Coefficients of `E''(k)/A` in the published arrangement
/// `c1 N^{5/2}/k^{7/2} - c2 N^2/k^{3/2} - (c3 N^2 + c4 N^{3/2})/k^{5/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureCoefficients {
    pub n52_k72: f64,
    pub n2_k32: f64,
    pub n2_k52: f64,
    pub n32_k52: f64,
}

/// The uniform closed form, continuous in `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformObjective {
    pub nodes: f64,
    pub act_sum_bits: f64,
    pub p1: f64,
    pub p2: f64,
}

impl UniformObjective {
    /// `E(k)/A` as a sum of power terms.
    pub fn terms(&self) -> [PowerTerm; 4] {
        [
            PowerTerm { coef: self.p1, n_exp: 2.5, k_exp: -1.5 },
            PowerTerm { coef: -self.p1, n_exp: 1.5, k_exp: -0.5 },
            PowerTerm { coef: self.p2, n_exp: 2.0, k_exp: 0.5 },
            PowerTerm { coef: -self.p2, n_exp: 2.0, k_exp: -0.5 },
        ]
    }

    pub fn intra(&self, k: f64) -> f64 {
        let per_ce = self.nodes / k;
        k * per_ce * (per_ce - 1.0) * self.p1 * self.act_sum_bits * per_ce.sqrt()
    }

    pub fn inter(&self, k: f64) -> f64 {
        self.p2 * self.act_sum_bits * self.nodes * self.nodes * (k.sqrt() - 1.0 / k.sqrt())
    }

    pub fn total(&self, k: f64) -> f64 {
        self.intra(k) + self.inter(k)
    }

    pub fn second_derivative_terms(&self) -> Vec<PowerTerm> {
        self.terms().iter().map(|t| t.d_dk().d_dk()).collect()
    }

    /// Exact `E''(k)` from term-wise differentiation.
    pub fn second_derivative(&self, k: f64) -> f64 {
        self.second_derivative_terms()
            .iter()
            .map(|t| t.eval(self.nodes, k))
            .sum::<f64>()
            * self.act_sum_bits
    }

    pub fn curvature_coefficients(&self) -> CurvatureCoefficients {
        let find = |n_exp: f64, k_exp: f64| -> f64 {
            self.second_derivative_terms()
                .iter()
                .filter(|t| t.n_exp == n_exp && t.k_exp == k_exp)
                .map(|t| t.coef)
                .sum()
        };
        CurvatureCoefficients {
            n52_k72: find(2.5, -3.5),
            n2_k32: -find(2.0, -1.5),
            n2_k52: -find(2.0, -2.5),
            n32_k52: -find(1.5, -2.5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSample {
    pub k: u32,
    pub published: f64,
    pub analytic: f64,
    pub finite_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub samples: Vec<CurvatureSample>,
    /// Published second derivative positive at every grid point.
    pub published_positive: bool,
    /// Finite differences match the analytic second derivative's sign and,
    /// where it is not negligible, its value within the relative tolerance.
    pub finite_difference_agrees: bool,
    /// First `k` where the published second derivative is not positive.
    pub first_nonpositive_k: Option<u32>,
}

impl ConvexityReport {
    pub fn is_convex(&self) -> bool {
        self.published_positive && self.finite_difference_agrees
    }
}

pub const FD_RELATIVE_TOLERANCE: f64 = 1e-3;
const FD_MAGNITUDE_FLOOR: f64 = 1e-9;

/// Central second difference with a step proportional to `k`.
pub fn finite_difference_second(f: impl Fn(f64) -> f64, k: f64) -> f64 {
    let h = 1e-3 * k;
    (f(k + h) - 2.0 * f(k) + f(k - h)) / (h * h)
}

pub fn verify_convexity(params: &ObjectiveParams) -> Result<ConvexityReport, OptError> {
    params.validate()?;
    let obj = params
        .uniform_objective()
        .ok_or(OptError::ProbabilityShape { len: 0, k: 0 })?;
    let samples: Vec<CurvatureSample> = (params.k_min..=params.k_max)
        .map(|k| {
            let kf = f64::from(k);
            CurvatureSample {
                k,
                published: second_derivative_published(kf, obj.nodes, obj.act_sum_bits),
                analytic: obj.second_derivative(kf),
                finite_difference: finite_difference_second(|x| obj.total(x), kf),
            }
        })
        .collect();
    let first_nonpositive_k = samples.iter().find(|s| s.published <= 0.0).map(|s| s.k);
    let finite_difference_agrees = samples.iter().all(|s| {
        if s.analytic.abs() <= FD_MAGNITUDE_FLOOR {
            return true;
        }
        s.finite_difference.signum() == s.analytic.signum()
            && (s.finite_difference - s.analytic).abs() / s.analytic.abs() < FD_RELATIVE_TOLERANCE
    });
    Ok(ConvexityReport {
        published_positive: first_nonpositive_k.is_none(),
        finite_difference_agrees,
        first_nonpositive_k,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: u32,
    pub intra: f64,
    pub inter: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub k_star: u32,
    pub energy_at_k_star: f64,
    /// Minimizer of the continuous relaxation, when one was solved.
    pub continuous_k: Option<f64>,
    pub energy_curve: Vec<CurvePoint>,
    pub convex_verified: bool,
}

/// Exhaustive integer enumeration of the objective over `[k_min, k_max]`.
pub fn energy_curve(params: &ObjectiveParams) -> Result<Vec<CurvePoint>, OptError> {
    (params.k_min..=params.k_max)
        .into_par_iter()
        .map(|k| {
            let (intra, inter, total) = energy_total(k, params)?;
            if !total.is_finite() {
                return Err(OptError::NonFinite { k: f64::from(k) });
            }
            Ok(CurvePoint { k, intra, inter, total })
        })
        .collect()
}

/// Smallest `k` attaining the minimum total of an enumerated curve.
pub fn argmin_curve(curve: &[CurvePoint]) -> Option<&CurvePoint> {
    curve.iter().fold(None, |best: Option<&CurvePoint>, p| match best {
        Some(b) if b.total <= p.total => Some(b),
        _ => Some(p),
    })
}

/// Golden-section search for the minimizer of a unimodal function on `[lo, hi]`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol * (1.0 + lo.abs()) {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    if fc <= fd {
        c
    } else {
        d
    }
}

/// Minimizes the objective over integer `k` in `[k_min, k_max]`.
///
/// Uniform probabilities are solved on the continuous relaxation and then
/// rounded to the better of floor/ceil; the result is cross-checked against
/// exhaustive enumeration. Other models fall back to enumeration alone.
pub fn minimize(params: &ObjectiveParams) -> Result<OptResult, OptError> {
    params.validate()?;
    let curve = energy_curve(params)?;
    let oracle = *argmin_curve(&curve).expect("k range is non-empty");

    let Some(obj) = params.uniform_objective() else {
        return Ok(OptResult {
            k_star: oracle.k,
            energy_at_k_star: oracle.total,
            continuous_k: None,
            energy_curve: curve,
            convex_verified: false,
        });
    };

    let (lo, hi) = (f64::from(params.k_min), f64::from(params.k_max));
    let k_cont = golden_section_min(|k| obj.total(k), lo, hi, 1e-10);
    if !obj.total(k_cont).is_finite() {
        return Err(OptError::NonFinite { k: k_cont });
    }
    let floor = (k_cont.floor() as u32).clamp(params.k_min, params.k_max);
    let ceil = (k_cont.ceil() as u32).clamp(params.k_min, params.k_max);
    let pick = |k: u32| curve[(k - params.k_min) as usize];
    let (a, b) = (pick(floor), pick(ceil));
    let best = if b.total < a.total { b } else { a };
    let k_star = if best.k == oracle.k || best.total == oracle.total {
        best.k.min(oracle.k)
    } else {
        return Err(OptError::OracleMismatch {
            continuous: best.k,
            enumerated: oracle.k,
        });
    };
    let convex_verified = verify_convexity(params)?.is_convex();
    Ok(OptResult {
        k_star,
        energy_at_k_star: pick(k_star).total,
        continuous_k: Some(k_cont),
        energy_curve: curve,
        convex_verified,
    })
}
