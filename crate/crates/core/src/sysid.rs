//! Test-bench identification of the actuator coefficients.
//!
//! Synthetic bench data comes from the forward actuator models plus seeded
//! Gaussian noise on the measured channels; speeds and servo angles are
//! taken as exact. Coefficients are recovered by ordinary least squares.

use std::io::{Read, Write};

use nalgebra::{Matrix2, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actuation::{propeller_wrench, vane_moment};
use crate::params::VehicleParams;

/// Regressor condition number above which a fit is rejected.
pub const MAX_CONDITION: f64 = 1e8;

pub const BENCH_COLUMNS: [&str; 11] = [
    "time", "omega1", "omega2", "delta1", "delta2", "delta3", "delta4", "force_z", "moment_z", "moment_x",
    "moment_y",
];

#[derive(Debug, Error)]
pub enum SysIdError {
    #[error("rank-deficient regressor: {0}")]
    RankDeficient(String),
    #[error("noise standard deviation must be non-negative and finite")]
    BadNoise,
    #[error("invalid bench sample at row {row}: {reason}")]
    BadSample { row: usize, reason: String },
    #[error("bench csv: {0}")]
    Csv(#[from] csv::Error),
}

/// One row of force/torque sensor data.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BenchSample {
    pub time: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub delta: [f64; 4],
    pub force_z: f64,
    pub moment_z: f64,
    pub moment_x: f64,
    pub moment_y: f64,
}

/// Commanded bench set-point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BenchCommand {
    pub time: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub delta: [f64; 4],
}

/// Per-channel additive noise standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseStd {
    pub force_z: f64,
    pub moment_z: f64,
    pub moment_x: f64,
    pub moment_y: f64,
}

impl NoiseStd {
    /// Noise at `fraction` of each channel's noise-free peak magnitude over
    /// the schedule.
    pub fn relative(truth: &VehicleParams, schedule: &[BenchCommand], fraction: f64) -> Self {
        let clean =
            generate_bench_data(truth, schedule, &NoiseStd::default(), 0).expect("zero noise is valid");
        let peak = |f: fn(&BenchSample) -> f64| clean.iter().map(f).fold(0.0f64, |a, v| a.max(v.abs()));
        Self {
            force_z: fraction * peak(|s| s.force_z),
            moment_z: fraction * peak(|s| s.moment_z),
            moment_x: fraction * peak(|s| s.moment_x),
            moment_y: fraction * peak(|s| s.moment_y),
        }
    }
}

/// Triangle sweep of servos 1 and 3 out to `±limit` and back, with both
/// motors held at `speed`. The pair moves anti-symmetrically.
pub fn vane_sweep(samples: usize, speed: f64, limit: f64, dt: f64) -> Vec<BenchCommand> {
    (0..samples)
        .map(|i| {
            let phase = i as f64 / samples as f64;
            // 0 → +1 → -1 → 0
            let tri = if phase < 0.25 {
                4.0 * phase
            } else if phase < 0.75 {
                2.0 - 4.0 * phase
            } else {
                4.0 * phase - 4.0
            };
            let d = tri * limit;
            BenchCommand {
                time: i as f64 * dt,
                omega1: speed,
                omega2: speed,
                delta: [-d, 0.0, d, 0.0],
            }
        })
        .collect()
}

/// Ramps each motor separately from zero to `max_speed` while the other holds
/// `other_speed`. Half the samples sweep motor 1, half motor 2.
pub fn separate_motor_sweeps(samples: usize, max_speed: f64, other_speed: f64, dt: f64) -> Vec<BenchCommand> {
    let half = samples / 2;
    (0..samples)
        .map(|i| {
            let (k, n) = if i < half {
                (i, half)
            } else {
                (i - half, samples - half)
            };
            let ramp = max_speed * k as f64 / (n.max(2) - 1) as f64;
            let (omega1, omega2) = if i < half {
                (ramp, other_speed)
            } else {
                (other_speed, ramp)
            };
            BenchCommand {
                time: i as f64 * dt,
                omega1,
                omega2,
                delta: [0.0; 4],
            }
        })
        .collect()
}

/// Evaluates the forward actuator models on `schedule` and adds zero-mean
/// Gaussian noise drawn from a ChaCha stream seeded with `seed`.
pub fn generate_bench_data(
    truth: &VehicleParams,
    schedule: &[BenchCommand],
    noise: &NoiseStd,
    seed: u64,
) -> Result<Vec<BenchSample>, SysIdError> {
    let channel = |std: f64| {
        if std.is_finite() && std >= 0.0 {
            Normal::new(0.0, std).map_err(|_| SysIdError::BadNoise)
        } else {
            Err(SysIdError::BadNoise)
        }
    };
    let nf = channel(noise.force_z)?;
    let nmz = channel(noise.moment_z)?;
    let nmx = channel(noise.moment_x)?;
    let nmy = channel(noise.moment_y)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    Ok(schedule
        .iter()
        .map(|c| {
            let w = propeller_wrench(c.omega1, c.omega2, truth) + vane_moment(&c.delta, truth);
            BenchSample {
                time: c.time,
                omega1: c.omega1,
                omega2: c.omega2,
                delta: c.delta,
                force_z: w.force.z + nf.sample(&mut rng),
                moment_z: w.moment.z + nmz.sample(&mut rng),
                moment_x: w.moment.x + nmx.sample(&mut rng),
                moment_y: w.moment.y + nmy.sample(&mut rng),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VaneFit {
    pub c_m_delta: f64,
    pub residual_rms: f64,
    pub samples: usize,
}

/// Least-squares slope of the roll moment on the differential deflection
/// `δ3 - δ1`, through the origin.
pub fn fit_vane_coefficient(samples: &[BenchSample]) -> Result<VaneFit, SysIdError> {
    let xs: Vec<f64> = samples.iter().map(|s| s.delta[2] - s.delta[0]).collect();
    let distinct = xs.iter().any(|&x| x != xs[0]);
    if samples.len() < 2 || !distinct {
        return Err(SysIdError::RankDeficient(
            "need at least two distinct differential deflections".into(),
        ));
    }
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(samples).map(|(x, s)| x * s.moment_x).sum();
    let slope = sxy / sxx;
    let rss: f64 = xs
        .iter()
        .zip(samples)
        .map(|(x, s)| (s.moment_x - slope * x).powi(2))
        .sum();
    Ok(VaneFit {
        c_m_delta: slope,
        residual_rms: (rss / samples.len() as f64).sqrt(),
        samples: samples.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropellerFit {
    pub c_tz1: f64,
    pub c_tz2: f64,
    pub c_mz1: f64,
    pub c_mz2: f64,
    pub thrust_rms: f64,
    pub moment_rms: f64,
    /// Condition number of the `[Ω1², Ω2²]` regressor.
    pub condition_number: f64,
    pub samples: usize,
}

/// Least squares of thrust (`-force_z`) and yaw moment on `(Ω1², Ω2²)`.
pub fn fit_propeller_coefficients(samples: &[BenchSample]) -> Result<PropellerFit, SysIdError> {
    let mut gram = Matrix2::zeros();
    let mut rhs_thrust = Vector2::zeros();
    let mut rhs_moment = Vector2::zeros();
    for s in samples {
        let x = Vector2::new(s.omega1 * s.omega1, s.omega2 * s.omega2);
        gram += x * x.transpose();
        rhs_thrust += x * -s.force_z;
        rhs_moment += x * s.moment_z;
    }
    let eig = gram.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 0.0) || !(hi / lo < MAX_CONDITION * MAX_CONDITION) {
        return Err(SysIdError::RankDeficient(
            "motor speeds are collinear; sweep each motor separately".into(),
        ));
    }
    let condition_number = (hi / lo).sqrt();
    let chol = gram
        .cholesky()
        .ok_or_else(|| SysIdError::RankDeficient("normal matrix not positive definite".into()))?;
    let ct = chol.solve(&rhs_thrust);
    let cm = chol.solve(&rhs_moment);

    let n = samples.len() as f64;
    let (mut rss_t, mut rss_m) = (0.0, 0.0);
    for s in samples {
        let x = Vector2::new(s.omega1 * s.omega1, s.omega2 * s.omega2);
        rss_t += (-s.force_z - ct.dot(&x)).powi(2);
        rss_m += (s.moment_z - cm.dot(&x)).powi(2);
    }
    Ok(PropellerFit {
        c_tz1: ct.x,
        c_tz2: ct.y,
        c_mz1: cm.x,
        c_mz2: cm.y,
        thrust_rms: (rss_t / n).sqrt(),
        moment_rms: (rss_m / n).sqrt(),
        condition_number,
        samples: samples.len(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct BenchRow {
    time: f64,
    omega1: f64,
    omega2: f64,
    delta1: f64,
    delta2: f64,
    delta3: f64,
    delta4: f64,
    force_z: f64,
    moment_z: f64,
    moment_x: f64,
    moment_y: f64,
}

/// Writes samples as CSV with a header row in [`BENCH_COLUMNS`] order.
pub fn write_bench_csv<W: Write>(writer: W, samples: &[BenchSample]) -> Result<(), SysIdError> {
    let mut w = csv::Writer::from_writer(writer);
    for s in samples {
        let [delta1, delta2, delta3, delta4] = s.delta;
        w.serialize(BenchRow {
            time: s.time,
            omega1: s.omega1,
            omega2: s.omega2,
            delta1,
            delta2,
            delta3,
            delta4,
            force_z: s.force_z,
            moment_z: s.moment_z,
            moment_x: s.moment_x,
            moment_y: s.moment_y,
        })?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads bench CSV. The header row is required and must match
/// [`BENCH_COLUMNS`] exactly.
pub fn read_bench_csv<R: Read>(reader: R) -> Result<Vec<BenchSample>, SysIdError> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    if header.iter().ne(BENCH_COLUMNS.iter().copied()) {
        return Err(SysIdError::BadSample {
            row: 0,
            reason: format!("expected header {}", BENCH_COLUMNS.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, row) in r.deserialize::<BenchRow>().enumerate() {
        let row = row?;
        let s = BenchSample {
            time: row.time,
            omega1: row.omega1,
            omega2: row.omega2,
            delta: [row.delta1, row.delta2, row.delta3, row.delta4],
            force_z: row.force_z,
            moment_z: row.moment_z,
            moment_x: row.moment_x,
            moment_y: row.moment_y,
        };
        let values = [
            s.time, s.omega1, s.omega2, s.force_z, s.moment_z, s.moment_x, s.moment_y,
        ];
        if !values.iter().chain(s.delta.iter()).all(|v| v.is_finite()) {
            return Err(SysIdError::BadSample {
                row: i + 1,
                reason: "non-finite value".into(),
            });
        }
        if s.omega1 < 0.0 || s.omega2 < 0.0 {
            return Err(SysIdError::BadSample {
                row: i + 1,
                reason: "negative motor speed".into(),
            });
        }
        out.push(s);
    }
    Ok(out)
}
