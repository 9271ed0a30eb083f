//! Browser bindings for the demo page in `www/`. Each binding returns JSON;
//! the plain functions behind them are usable natively.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use wasm_bindgen::prelude::*;

use rydlink::classical::ClassicalStringModel;
use rydlink::fit::{FitEnsemble, FitEstimate, Model, N_MIN};
use rydlink::gauge::{gauss_residual, snapshot_of_config};
use rydlink::{resonance_points, Lattice, Sector, SpinConfiguration, TransversePosition, Truncation};

#[derive(Serialize)]
pub struct AtomView {
    pub x: f64,
    pub y: f64,
    pub rydberg: bool,
    pub removed: bool,
}

#[derive(Serialize)]
pub struct LinkView {
    pub x: f64,
    pub y: f64,
    pub e: f64,
    pub frozen: bool,
}

#[derive(Serialize)]
pub struct SiteView {
    pub x: f64,
    pub y: f64,
    pub charge: f64,
    pub static_charge: i8,
    pub gauss_residual: f64,
}

#[derive(Serialize)]
pub struct LatticeView {
    pub atoms: Vec<AtomView>,
    pub links: Vec<LinkView>,
    pub sites: Vec<SiteView>,
    pub gauss_violations: usize,
}

/// A lattice sector with an editable spin configuration.
#[wasm_bindgen]
pub struct GaugeView {
    sector: Sector,
    config: SpinConfiguration,
}

impl GaugeView {
    /// `d = 0` gives the vacuum sector, otherwise a charge pair at separation `d`.
    pub fn build(n_cols: usize, n_rows: usize, d: usize) -> Result<Self, String> {
        let lattice = Lattice::new(n_cols, n_rows).map_err(|e| e.to_string())?;
        let sector = if d == 0 {
            Sector::vacuum(lattice)
        } else {
            Sector::charged(lattice, d, TransversePosition::Boundary).map_err(|e| e.to_string())?
        };
        let config = sector.reference().clone();
        Ok(Self { sector, config })
    }

    pub fn view(&self) -> LatticeView {
        let lat = self.sector.lattice();
        let dual = self.sector.dual();
        let snap = snapshot_of_config(&self.sector, &self.config);
        let resid = gauss_residual(&self.sector, &snap);
        let atoms = (0..lat.len())
            .map(|i| AtomView {
                x: lat.site(i).x,
                y: lat.site(i).y,
                rydberg: self.config.is_rydberg(i),
                removed: self.sector.is_removed(i),
            })
            .collect();
        let links = dual
            .links
            .iter()
            .zip(snap.e_field.iter().zip(&snap.frozen))
            .map(|(l, (&e, &frozen))| LinkView { x: l.x, y: l.y, e, frozen })
            .collect();
        let sites = dual
            .sites
            .iter()
            .enumerate()
            .map(|(k, s)| SiteView {
                x: s.x,
                y: s.y,
                charge: snap.charge[k],
                static_charge: self.sector.static_charge(k),
                gauss_residual: resid[k],
            })
            .collect();
        LatticeView {
            atoms,
            links,
            sites,
            gauss_violations: resid.iter().filter(|r| r.abs() > 1e-9).count(),
        }
    }
}

#[wasm_bindgen]
impl GaugeView {
    #[wasm_bindgen(constructor)]
    pub fn new(n_cols: usize, n_rows: usize, d: usize) -> Result<GaugeView, JsError> {
        Self::build(n_cols, n_rows, d).map_err(|e| JsError::new(&e))
    }

    /// Flip one atom; removed atoms are left alone. Returns whether it flipped.
    pub fn flip(&mut self, atom: usize) -> bool {
        if atom >= self.config.len() || self.sector.is_removed(atom) {
            return false;
        }
        self.config.flip(atom);
        true
    }

    pub fn reset(&mut self) {
        self.config = self.sector.reference().clone();
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.view()).expect("view serialises")
    }
}

#[derive(Serialize)]
pub struct PotentialCurve {
    pub delta: f64,
    pub sigma: f64,
    pub separations: Vec<f64>,
    pub potential: Vec<f64>,
    pub breaking_distance: Option<f64>,
    pub tension_root: f64,
    pub mass_root: f64,
    pub string_loop: f64,
    pub charged_loop: f64,
}

/// `V(R)` at `Ω = 0` on `points` separations up to `r_max`.
pub fn potential_curve(delta: f64, r_max: f64, points: usize) -> PotentialCurve {
    let model = ClassicalStringModel::new(delta);
    let n = points.max(2);
    let separations: Vec<f64> = (0..n).map(|i| r_max * i as f64 / (n - 1) as f64).collect();
    let potential = separations.iter().map(|&r| model.potential(r)).collect();
    let res = resonance_points(Truncation::Three);
    PotentialCurve {
        delta,
        sigma: model.sigma,
        separations,
        potential,
        breaking_distance: model.breaking_distance().ok(),
        tension_root: ClassicalStringModel::tension_root(),
        mass_root: ClassicalStringModel::mass_root(),
        string_loop: res.string_loop,
        charged_loop: res.charged_loop,
    }
}

#[wasm_bindgen(js_name = potentialCurve)]
pub fn potential_curve_json(delta: f64, r_max: f64, points: usize) -> String {
    serde_json::to_string(&potential_curve(delta, r_max, points)).expect("curve serialises")
}

#[derive(Serialize)]
pub struct FitDemo {
    pub r: Vec<f64>,
    pub v: Vec<f64>,
    pub windows: usize,
    pub sigma: FitEstimate,
    pub gamma: FitEstimate,
    pub c: FitEstimate,
    /// `(σ, γ)` of every window, for a scatter plot.
    pub scatter: Vec<(f64, f64)>,
}

/// Fit `σR − γ/R + c` to planted noisy data on the charge-separation grid.
pub fn fit_demo(sigma: f64, gamma: f64, c: f64, noise: f64, points: usize, seed: u64) -> Result<FitDemo, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Normal::new(0.0, noise.max(0.0)).map_err(|e| e.to_string())?;
    let r: Vec<f64> = (0..points)
        .map(|k| 3f64.sqrt() * (k as f64 + 3.0 + 1.0 / 3.0))
        .collect();
    let v: Vec<f64> = r.iter().map(|&x| sigma * x - gamma / x + c + dist.sample(&mut rng)).collect();
    let ens = FitEnsemble::build("demo", &r, &v, Model::Potential, N_MIN).map_err(|e| e.to_string())?;
    let est = |i| ens.estimate(i).map_err(|e| e.to_string());
    Ok(FitDemo {
        windows: ens.fits.len(),
        sigma: est(0)?,
        gamma: est(1)?,
        c: est(2)?,
        scatter: ens.fits.iter().map(|f| (f.params[0], f.params[1])).collect(),
        r,
        v,
    })
}

#[wasm_bindgen(js_name = fitDemo)]
pub fn fit_demo_json(sigma: f64, gamma: f64, c: f64, noise: f64, points: usize, seed: u64) -> Result<String, JsError> {
    let demo = fit_demo(sigma, gamma, c, noise, points, seed).map_err(|e| JsError::new(&e))?;
    Ok(serde_json::to_string(&demo).expect("fit serialises"))
}
