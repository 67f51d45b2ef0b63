//! Sampling of Boolean-model realizations and the replication runner.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arrangement;
use crate::error::{Error, Result};
use crate::geometry::{self, build_complex, Domain, FunctionalVector, PlacedGrain, WindowBoundary};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    Aligned,
    Isotropic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundaryMode {
    /// Centers uniform in `[0, L)^2`, grains wrapped around the torus.
    TorusPeriodic,
    /// Centers uniform in `[-margin, L + margin]^2`, functionals measured in
    /// `[0, L]^2`.
    MinusSampling { margin: f64, frame: WindowBoundary },
}

/// Complete description of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    pub orientation: Orientation,
    /// Side `L` of the window or torus.
    pub side: f64,
    pub boundary: BoundaryMode,
    pub replications: usize,
    pub master_seed: u64,
}

impl ModelSpec {
    /// Aligned grains on the torus.
    pub fn torus(a: f64, b: f64, gamma: f64, side: f64, replications: usize, master_seed: u64) -> Self {
        Self {
            a,
            b,
            gamma,
            orientation: Orientation::Aligned,
            side,
            boundary: BoundaryMode::TorusPeriodic,
            replications,
            master_seed,
        }
    }

    /// Minus sampling with the smallest admissible margin (the grain
    /// circumradius) and window-frame boundary excluded from `v1`.
    pub fn minus_sampling(
        a: f64,
        b: f64,
        gamma: f64,
        orientation: Orientation,
        side: f64,
        replications: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            a,
            b,
            gamma,
            orientation,
            side,
            boundary: BoundaryMode::MinusSampling {
                margin: (0.5 * a).hypot(0.5 * b),
                frame: WindowBoundary::Exclude,
            },
            replications,
            master_seed,
        }
    }

    /// Matches [`PlacedGrain::circumradius`] bit for bit.
    pub fn circumradius(&self) -> f64 {
        (0.5 * self.a).hypot(0.5 * self.b)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("gamma", self.gamma), ("side", self.side)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidModel(format!("{name} must be positive and finite, got {v}")));
            }
        }
        match self.boundary {
            BoundaryMode::TorusPeriodic => {
                if self.orientation != Orientation::Aligned {
                    return Err(Error::InvalidModel(
                        "periodic boundaries are only supported for aligned grains".into(),
                    ));
                }
                let grain = PlacedGrain::aligned(0.0, 0.0, 0.5 * self.a, 0.5 * self.b);
                Domain::torus(self.side).check_torus_exactness(&[grain])
            }
            BoundaryMode::MinusSampling { margin, .. } => {
                if !(margin.is_finite() && margin >= self.circumradius()) {
                    return Err(Error::MarginTooSmall {
                        index: 0,
                        circumradius: self.circumradius(),
                        margin,
                    });
                }
                Ok(())
            }
        }
    }

    /// `(origin, width)` of the square in which centers are sampled.
    pub fn sampling_box(&self) -> (f64, f64) {
        match self.boundary {
            BoundaryMode::TorusPeriodic => (0.0, self.side),
            BoundaryMode::MinusSampling { margin, .. } => (-margin, self.side + 2.0 * margin),
        }
    }

    /// Area of the observation window, the normalization of covariances.
    pub fn window_area(&self) -> f64 {
        self.side * self.side
    }
}

/// Outcome of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub index: u64,
    pub functionals: FunctionalVector,
    pub grain_count: usize,
}

/// Grains of replication `index`, a pure function of `(spec, index)`.
pub fn sample_grains(spec: &ModelSpec, index: u64) -> Vec<PlacedGrain> {
    let mut rng = rng::stream(spec.master_seed, index);
    let (origin, width) = spec.sampling_box();
    let mean = spec.gamma * width * width;
    let count = if mean > 0.0 {
        Poisson::new(mean).map_or(0, |p| p.sample(&mut rng) as usize)
    } else {
        0
    };
    let (hx, hy) = (0.5 * spec.a, 0.5 * spec.b);
    (0..count)
        .map(|_| {
            let cx = origin + width * rng.random::<f64>();
            let cy = origin + width * rng.random::<f64>();
            let theta = match spec.orientation {
                Orientation::Aligned => 0.0,
                Orientation::Isotropic => std::f64::consts::PI * rng.random::<f64>(),
            };
            PlacedGrain::new(cx, cy, hx, hy, theta)
        })
        .collect()
}

/// Measures one realization according to the spec's boundary mode.
pub fn measure(spec: &ModelSpec, grains: &[PlacedGrain]) -> Result<FunctionalVector> {
    match (spec.boundary, spec.orientation) {
        (BoundaryMode::TorusPeriodic, _) => Ok(build_complex(grains, Domain::torus(spec.side))?.functionals()),
        (BoundaryMode::MinusSampling { margin, frame }, Orientation::Aligned) => {
            geometry::clip_to_window(grains, spec.side, margin, frame)
        }
        (BoundaryMode::MinusSampling { margin, frame }, Orientation::Isotropic) => {
            arrangement::clip_to_window(grains, spec.side, margin, frame)
        }
    }
}

pub fn run_one(spec: &ModelSpec, index: u64) -> Result<SampleResult> {
    let grains = sample_grains(spec, index);
    Ok(SampleResult {
        index,
        functionals: measure(spec, &grains)?,
        grain_count: grains.len(),
    })
}

/// Runs all replications, in parallel on `workers` threads (`None` for the
/// global pool). Output is ordered by index and independent of `workers`.
pub fn run(spec: &ModelSpec, workers: Option<usize>) -> Result<Vec<SampleResult>> {
    spec.validate()?;
    let job = || {
        (0..spec.replications as u64)
            .into_par_iter()
            .map(|i| run_one(spec, i))
            .collect::<Result<Vec<_>>>()
    };
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?
            .install(job),
        None => job(),
    }
}
