//! Combined evidence for or against amenability from volume growth,
//! isoperimetric ratios of balls, Dirichlet spectral radii of nets and
//! Rayleigh upper bounds for λ₁.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::rayleigh::{lambda1_upper_estimate, RayleighGridPoint};
use super::{spectral_radius, MarkovSystem, SPECTRAL_MAX_ITER, SPECTRAL_TOL};
use crate::convex_body::ConvexBody;
use crate::discretization::{build_graph, build_net, default_rho};
use crate::error::{Error, Result};
use crate::hilbert_measure::{folner_ratio, growth_curve, linear_fit, FolnerPoint, GrowthClass, GrowthCurve};
use crate::point::Point;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictConfig {
    /// Base point; the body's interior point when absent.
    pub x0: Option<Point>,
    pub growth_radii: Vec<f64>,
    pub folner_radii: Vec<f64>,
    pub spectral_radii: Vec<f64>,
    pub epsilon: f64,
    pub seed: u64,
    pub lambda_radii: Vec<f64>,
    pub lambda_eps: Vec<f64>,
}

impl Default for VerdictConfig {
    fn default() -> Self {
        VerdictConfig {
            x0: None,
            growth_radii: (1..=12).map(|r| r as f64).collect(),
            folner_radii: vec![2.0, 4.0, 6.0, 8.0, 10.0],
            spectral_radii: vec![4.0, 6.0, 8.0],
            epsilon: 0.5,
            seed: 1,
            lambda_radii: vec![4.0, 8.0, 12.0],
            lambda_eps: vec![-0.9, -0.5, 0.0, 0.1, 0.5],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    AmenableEvidence,
    NonAmenableEvidence,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::AmenableEvidence => "amenable-evidence",
            Verdict::NonAmenableEvidence => "non-amenable-evidence",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Indicator {
    pub name: String,
    pub vote: Verdict,
    /// Extrapolated limit (or fitted rate) the vote is based on.
    pub summary: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralRow {
    pub radius: f64,
    pub interior: usize,
    pub rho: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub body: String,
    pub seed: u64,
    pub verdict: Verdict,
    pub indicators: Vec<Indicator>,
    pub growth: GrowthCurve,
    pub folner: Vec<FolnerPoint>,
    pub net_points: usize,
    pub spectral: Vec<SpectralRow>,
    /// Best Rayleigh value per radius.
    pub lambda: Vec<RayleighGridPoint>,
}

/// Least-squares fit `y ≈ a + b·x`; returns a.
fn intercept(x: &[f64], y: &[f64]) -> f64 {
    if x.len() < 2 {
        return y.first().cloned().unwrap_or(f64::NAN);
    }
    let (_, a, _) = linear_fit(x, y);
    a
}

fn vote(limit: f64, amenable_below: f64, non_amenable_above: f64) -> Verdict {
    if limit <= amenable_below {
        Verdict::AmenableEvidence
    } else if limit >= non_amenable_above {
        Verdict::NonAmenableEvidence
    } else {
        Verdict::Inconclusive
    }
}

pub fn amenability_verdict(body: &ConvexBody, config: &VerdictConfig) -> Result<VerdictReport> {
    if body.dim() != 2 {
        return Err(Error::InvalidParameter("the verdict pipeline is 2D".into()));
    }
    if config.spectral_radii.len() < 2 || config.folner_radii.len() < 2 || config.lambda_radii.len() < 2 {
        return Err(Error::InvalidParameter("need at least two radii per indicator".into()));
    }
    let x0 = config.x0.clone().unwrap_or_else(|| body.interior_point().clone());
    let mut indicators = Vec::new();

    let growth = growth_curve(body, &x0, &config.growth_radii)?;
    indicators.push(Indicator {
        name: "volume_growth".into(),
        vote: match growth.classification {
            GrowthClass::Polynomial => Verdict::AmenableEvidence,
            GrowthClass::Exponential => Verdict::NonAmenableEvidence,
            GrowthClass::Undetermined => Verdict::Inconclusive,
        },
        summary: growth.fit_poly_exponent,
    });

    let folner: Vec<FolnerPoint> = config.folner_radii.iter().map(|&r| folner_ratio(body, &x0, r)).collect::<Result<_>>()?;
    // ratio ≈ a + b/R
    let inv: Vec<f64> = folner.iter().map(|f| 1.0 / f.radius).collect();
    let ratios: Vec<f64> = folner.iter().map(|f| f.ratio).collect();
    let a = intercept(&inv, &ratios);
    let last = *ratios.last().unwrap();
    indicators.push(Indicator {
        name: "folner_ratio".into(),
        vote: if a <= 0.2 * ratios[0] {
            Verdict::AmenableEvidence
        } else if a >= 0.5 * last {
            Verdict::NonAmenableEvidence
        } else {
            Verdict::Inconclusive
        },
        summary: a,
    });

    let r_max = config.spectral_radii.iter().cloned().fold(0.0, f64::max);
    let eps = config.epsilon;
    let net = build_net(body, &x0, r_max + 3.0 * eps, eps, config.seed)?;
    let rho_graph = default_rho(&net);
    let dg = build_graph(net, rho_graph)?;
    let mut spectral = Vec::new();
    for &r in &config.spectral_radii {
        let mask = super::ball_dirichlet_mask(&dg, r);
        let sys = MarkovSystem::from_mask(&dg.graph, mask)?;
        let rep = spectral_radius(&sys, SPECTRAL_TOL, SPECTRAL_MAX_ITER)?;
        spectral.push(SpectralRow {
            radius: r,
            interior: rep.interior,
            rho: rep.rho,
            residual: rep.residual,
            iterations: rep.iterations,
            converged: rep.converged,
        });
    }
    // 1 - ρ_R ≈ a + b/R²
    let inv2: Vec<f64> = spectral.iter().map(|s| 1.0 / (s.radius * s.radius)).collect();
    let gaps: Vec<f64> = spectral.iter().map(|s| 1.0 - s.rho).collect();
    let a = intercept(&inv2, &gaps);
    indicators.push(Indicator { name: "spectral_radius".into(), vote: vote(a, 0.01, 0.02), summary: 1.0 - a });

    let lam = lambda1_upper_estimate(body, &x0, &config.lambda_eps, &config.lambda_radii)?;
    let mut lambda = Vec::new();
    for &r in &config.lambda_radii {
        let best = lam
            .grid
            .iter()
            .filter(|g| g.radius == r)
            .min_by(|a, b| a.value.partial_cmp(&b.value).unwrap())
            .cloned()
            .expect("grid covers every radius");
        lambda.push(best);
    }
    let inv2: Vec<f64> = lambda.iter().map(|g| 1.0 / (g.radius * g.radius)).collect();
    let vals: Vec<f64> = lambda.iter().map(|g| g.value).collect();
    let a = intercept(&inv2, &vals);
    indicators.push(Indicator { name: "lambda1_upper".into(), vote: vote(a, 0.02, 0.1), summary: a });

    let count = |v: Verdict| indicators.iter().filter(|i| i.vote == v).count();
    let (am, non) = (count(Verdict::AmenableEvidence), count(Verdict::NonAmenableEvidence));
    let verdict = if am >= 3 && non == 0 {
        Verdict::AmenableEvidence
    } else if non >= 3 && am == 0 {
        Verdict::NonAmenableEvidence
    } else {
        Verdict::Inconclusive
    };
    Ok(VerdictReport {
        body: body.describe(),
        seed: config.seed,
        verdict,
        indicators,
        growth,
        folner,
        net_points: dg.len(),
        spectral,
        lambda,
    })
}

impl VerdictReport {
    pub fn growth_csv(&self) -> String {
        let mut s = String::from("radius,volume,std_error\n");
        for (r, v) in self.growth.radii.iter().zip(&self.growth.volumes) {
            let _ = writeln!(s, "{r},{:.12e},{:.3e}", v.value, v.std_error);
        }
        s
    }

    pub fn folner_csv(&self) -> String {
        let mut s = String::from("radius,boundary_length,volume,ratio\n");
        for f in &self.folner {
            let _ = writeln!(s, "{},{:.12e},{:.12e},{:.12e}", f.radius, f.boundary_length, f.volume, f.ratio);
        }
        s
    }

    pub fn spectral_csv(&self) -> String {
        let mut s = String::from("radius,interior,rho,residual,iterations,converged\n");
        for r in &self.spectral {
            let _ = writeln!(s, "{},{},{:.12e},{:.3e},{},{}", r.radius, r.interior, r.rho, r.residual, r.iterations, r.converged);
        }
        s
    }

    pub fn lambda_csv(&self) -> String {
        let mut s = String::from("radius,epsilon,estimate,quadrature_error\n");
        for g in &self.lambda {
            let _ = writeln!(s, "{},{},{:.12e},{:.3e}", g.radius, g.epsilon, g.value, g.quadrature_error);
        }
        s
    }

    /// All trend tables, concatenated with section headers.
    pub fn csv(&self) -> String {
        format!(
            "# verdict,{}\n# growth\n{}# folner\n{}# spectral\n{}# lambda\n{}",
            self.verdict.as_str(),
            self.growth_csv(),
            self.folner_csv(),
            self.spectral_csv(),
            self.lambda_csv()
        )
    }
}
