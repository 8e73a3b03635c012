use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::hamiltonian::{kepler_field, SeparableHamiltonian};
use crate::integrator::{integrate_endpoint, PhaseState, Trajectory};
use crate::tableau::{ExplicitSprk, TableauKind};

pub const CLASSIFICATION_TRAIN: usize = 400;
pub const CLASSIFICATION_TEST: usize = 200;
pub const INNER_RADIUS: f64 = 1.0;
pub const OUTER_RADIUS: f64 = 2.0;
pub const RADIAL_NOISE: f64 = 0.1;

/// Two noisy concentric circles; label 0 is the inner circle.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationDataset {
    pub features: Vec<[f64; 2]>,
    pub labels: Vec<u8>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

pub fn gen_classification(seed: u64) -> ClassificationDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, RADIAL_NOISE).expect("positive std");
    let total = CLASSIFICATION_TRAIN + CLASSIFICATION_TEST;
    let mut features = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for i in 0..total {
        let label = (i % 2) as u8;
        let radius = if label == 0 { INNER_RADIUS } else { OUTER_RADIUS } + noise.sample(&mut rng);
        let angle = rng.random_range(0.0..2.0 * PI);
        features.push([radius * angle.cos(), radius * angle.sin()]);
        labels.push(label);
    }
    ClassificationDataset {
        features,
        labels,
        train: (0..CLASSIFICATION_TRAIN).collect(),
        test: (CLASSIFICATION_TRAIN..total).collect(),
        seed,
    }
}

impl ClassificationDataset {
    /// `x1,x2,label` rows for the given indices.
    pub fn write_csv<W: Write>(&self, mut w: W, indices: &[usize]) -> Result<()> {
        writeln!(w, "x1,x2,label")?;
        for &i in indices {
            let [a, b] = self.features[i];
            writeln!(w, "{a:.17e},{b:.17e},{}", self.labels[i])?;
        }
        Ok(())
    }

    /// Parses `x1,x2,label` rows; all rows land in the test split.
    pub fn from_csv_str(s: &str) -> Result<Self> {
        let mut lines = s.lines();
        match lines.next() {
            Some(h) if h.trim() == "x1,x2,label" => {}
            other => return Err(Error::Parse(format!("expected header x1,x2,label, got {other:?}"))),
        }
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::Parse(format!("line {}: malformed row {line:?}", k + 2));
            if cols.len() != 3 {
                return Err(bad());
            }
            let a: f64 = cols[0].parse().map_err(|_| bad())?;
            let b: f64 = cols[1].parse().map_err(|_| bad())?;
            let y: u8 = cols[2].parse().map_err(|_| bad())?;
            if y > 1 {
                return Err(bad());
            }
            features.push([a, b]);
            labels.push(y);
        }
        let test = (0..features.len()).collect();
        Ok(Self {
            features,
            labels,
            train: Vec::new(),
            test,
            seed: 0,
        })
    }
}

pub const KEPLER_TRAJECTORIES: usize = 27;
pub const KEPLER_POINTS: usize = 2000;
pub const KEPLER_HORIZON: f64 = 2.0;
/// Upper bound on the reference integrator step.
pub const KEPLER_REFERENCE_STEP: f64 = 1e-4;
/// Largest energy deviation tolerated along a generated trajectory.
pub const KEPLER_ENERGY_GATE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct KeplerDataset {
    pub trajectories: Vec<Trajectory>,
    /// Starts from the first training initial condition, twice as long.
    pub test: Trajectory,
    pub seed: u64,
}

impl KeplerDataset {
    pub fn point_count(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }
}

/// Point counts per trajectory: 2000 split as evenly as possible, remainder
/// going to the first trajectories.
pub fn kepler_point_counts() -> Vec<usize> {
    let base = KEPLER_POINTS / KEPLER_TRAJECTORIES;
    let extra = KEPLER_POINTS % KEPLER_TRAJECTORIES;
    (0..KEPLER_TRAJECTORIES).map(|i| base + usize::from(i < extra)).collect()
}

/// Speed of the circular orbit of radius `r` under the force
/// `−π/(4‖q‖^{3/2}) q`.
pub fn circular_speed(r: f64) -> f64 {
    (PI / (4.0 * r.sqrt())).sqrt()
}

/// Samples `points` states spaced `dt` apart, integrating with sprk4 at a step
/// no larger than [`KEPLER_REFERENCE_STEP`].
pub fn kepler_reference(state0: &PhaseState, dt: f64, points: usize) -> Result<Trajectory> {
    let system = kepler_field();
    let scheme = ExplicitSprk::builtin(TableauKind::Sprk4);
    let sub = (dt / KEPLER_REFERENCE_STEP).ceil().max(1.0) as usize;
    let h = dt / sub as f64;
    let mut times = Vec::with_capacity(points);
    let mut states = Vec::with_capacity(points);
    let mut state = state0.clone();
    let e0 = system.energy(&state.q, &state.p, 0.0).expect("kepler has an energy");
    for k in 0..points {
        if k > 0 {
            state = integrate_endpoint(&system, &state, 0.0, h, sub, &scheme)?;
            let e = system.energy(&state.q, &state.p, 0.0).expect("kepler has an energy");
            if (e - e0).abs() > KEPLER_ENERGY_GATE {
                return Err(Error::QualityGate(format!(
                    "reference energy drift {:e} exceeds {KEPLER_ENERGY_GATE:e}",
                    (e - e0).abs()
                )));
            }
        }
        times.push(k as f64 * dt);
        states.push(state.clone());
    }
    Ok(Trajectory { times, states })
}

fn sample_initial_condition<R: Rng>(rng: &mut R) -> PhaseState {
    let r = rng.random_range(0.8..=1.2);
    let theta = rng.random_range(0.0..2.0 * PI);
    let v = circular_speed(r) * rng.random_range(0.9..=1.1);
    let (s, c) = theta.sin_cos();
    PhaseState {
        q: vec![r * c, r * s],
        p: vec![-v * s, v * c],
    }
}

/// 27 perturbed circular orbits on `[0, 2]` (2000 points in total) and a test
/// trajectory from the first initial condition on `[0, 4]`.
pub fn gen_kepler(seed: u64) -> Result<KeplerDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trajectories = Vec::with_capacity(KEPLER_TRAJECTORIES);
    let mut first: Option<(PhaseState, f64, usize)> = None;
    for points in kepler_point_counts() {
        let dt = KEPLER_HORIZON / (points - 1) as f64;
        let traj = loop {
            let z0 = sample_initial_condition(&mut rng);
            match kepler_reference(&z0, dt, points) {
                Ok(t) => break t,
                Err(Error::StepFailed { .. }) => continue,
                Err(e) => return Err(e),
            }
        };
        if first.is_none() {
            first = Some((traj.states[0].clone(), dt, points));
        }
        trajectories.push(traj);
    }
    let (z0, dt, points) = first.expect("at least one trajectory");
    let test = kepler_reference(&z0, dt, 2 * (points - 1) + 1)?;
    Ok(KeplerDataset {
        trajectories,
        test,
        seed,
    })
}
