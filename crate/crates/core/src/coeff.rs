//! Rough diffusion coefficients.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mesh::Rect;

/// Scales of the multiscale trigonometric coefficient.
pub const TRIG_EPSILONS: [f64; 5] = [1.0 / 5.0, 1.0 / 13.0, 1.0 / 17.0, 1.0 / 31.0, 1.0 / 65.0];

/// Piecewise-constant cell values over a rectangle.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterGrid {
    pub nx: usize,
    pub ny: usize,
    /// Row-major, bottom row first.
    pub values: Vec<f64>,
    pub extent: Rect,
}

impl RasterGrid {
    pub fn new(nx: usize, ny: usize, values: Vec<f64>, extent: Rect) -> Result<Self> {
        let bad = |reason: String| Error::Raster {
            path: Default::default(),
            reason,
        };
        if nx == 0 || ny == 0 {
            return Err(bad(format!("empty grid {nx} x {ny}")));
        }
        if values.len() != nx * ny {
            return Err(bad(format!(
                "expected {} values for {nx} x {ny}, found {}",
                nx * ny,
                values.len()
            )));
        }
        if let Some((k, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
        {
            return Err(bad(format!("cell {k} has nonpositive value {v}")));
        }
        Ok(Self {
            nx,
            ny,
            values,
            extent,
        })
    }

    /// Value of the cell containing `(x, y)`, clamped at the extent edges.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let fx = (x - self.extent.x0) / self.extent.width() * self.nx as f64;
        let fy = (y - self.extent.y0) / self.extent.height() * self.ny as f64;
        let ix = (fx.floor().max(0.0) as usize).min(self.nx - 1);
        let iy = (fy.floor().max(0.0) as usize).min(self.ny - 1);
        self.values[iy * self.nx + ix]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `nx ny` header, then one value per line using shortest round-trip formatting.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.nx, self.ny)?;
        for v in &self.values {
            writeln!(out, "{v:?}")?;
        }
        Ok(())
    }

    pub fn parse(text: &str, extent: Rect) -> std::result::Result<Self, String> {
        let mut tokens = text.split_whitespace();
        let mut dim = |name: &str| -> std::result::Result<usize, String> {
            tokens
                .next()
                .ok_or_else(|| format!("missing {name} in header"))?
                .parse::<usize>()
                .map_err(|e| format!("bad {name}: {e}"))
        };
        let nx = dim("nx")?;
        let ny = dim("ny")?;
        let values = tokens
            .enumerate()
            .map(|(k, t)| {
                t.parse::<f64>()
                    .map_err(|e| format!("value {k} ({t:?}): {e}"))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::new(nx, ny, values, extent).map_err(|e| match e {
            Error::Raster { reason, .. } => reason,
            other => other.to_string(),
        })
    }
}

#[derive(Clone)]
enum Source {
    Trig,
    Constant(f64),
    Raster(RasterGrid),
    Channel(RasterGrid),
    Function(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoeffKind {
    AnalyticTrig,
    Raster,
    Constant,
    SyntheticChannel,
    Function,
}

/// Scalar coefficient `a(x)` with recorded bounds.
#[derive(Clone)]
pub struct CoefficientField {
    source: Source,
    a_min: f64,
    a_max: f64,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("kind", &self.kind())
            .field("a_min", &self.a_min)
            .field("a_max", &self.a_max)
            .finish()
    }
}

/// Multiscale trigonometric coefficient with five non-separated scales.
pub fn trig_value(x: f64, y: f64) -> f64 {
    let [e1, e2, e3, e4, e5] = TRIG_EPSILONS;
    let s = |t: f64, e: f64| (2.0 * PI * t / e).sin();
    let c = |t: f64, e: f64| (2.0 * PI * t / e).cos();
    ((1.1 + s(x, e1)) / (1.1 + s(y, e1))
        + (1.1 + s(y, e2)) / (1.1 + c(x, e2))
        + (1.1 + c(x, e3)) / (1.1 + s(y, e3))
        + (1.1 + s(y, e4)) / (1.1 + c(x, e4))
        + (1.1 + c(x, e5)) / (1.1 + s(y, e5))
        + (4.0 * x * x * y * y).sin()
        + 1.0)
        / 6.0
}

/// Multiscale trigonometric coefficient on the unit square; bounds from a
/// 1025 x 1025 vertex sampling.
pub fn trig_coefficient() -> CoefficientField {
    let n = 1024;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for j in 0..=n {
        let y = j as f64 / n as f64;
        for i in 0..=n {
            let v = trig_value(i as f64 / n as f64, y);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    CoefficientField {
        source: Source::Trig,
        a_min: lo,
        a_max: hi,
    }
}

pub fn constant(value: f64) -> Result<CoefficientField> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(Error::NonPositiveCoefficient {
            value,
            x: f64::NAN,
            y: f64::NAN,
        });
    }
    Ok(CoefficientField {
        source: Source::Constant(value),
        a_min: value,
        a_max: value,
    })
}

/// Wraps an arbitrary positive function with caller-supplied bounds.
pub fn from_fn(
    a_min: f64,
    a_max: f64,
    f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
) -> CoefficientField {
    CoefficientField {
        source: Source::Function(Arc::new(f)),
        a_min,
        a_max,
    }
}

pub fn from_raster(grid: RasterGrid) -> CoefficientField {
    CoefficientField {
        a_min: grid.min(),
        a_max: grid.max(),
        source: Source::Raster(grid),
    }
}

/// Reads a raster file (see [`RasterGrid::write`]) spanning `extent`.
pub fn load_raster(path: impl AsRef<Path>, extent: Rect) -> Result<CoefficientField> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Raster {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let grid = RasterGrid::parse(&text, extent).map_err(|reason| Error::Raster {
        path: path.to_path_buf(),
        reason,
    })?;
    Ok(from_raster(grid))
}

/// High-contrast stand-in for a reservoir layer: a 64 x 64 log-random
/// background crossed by `channels` meandering horizontal high-value channels.
pub fn synthetic_channel(kappa: f64, channels: usize, seed: u64) -> Result<CoefficientField> {
    synthetic_channel_on(Rect::UNIT, 64, 64, kappa, channels, seed)
}

pub fn synthetic_channel_on(
    extent: Rect,
    nx: usize,
    ny: usize,
    kappa: f64,
    channels: usize,
    seed: u64,
) -> Result<CoefficientField> {
    if !(kappa >= 1.0 && kappa.is_finite()) {
        return Err(Error::config("kappa", format!("contrast must be >= 1, got {kappa}")));
    }
    if nx == 0 || ny == 0 {
        return Err(Error::config("channel", "empty grid"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Log-scale values: background in [0, 0.4], channels in [0.8, 1].
    let mut logs: Vec<f64> = (0..nx * ny).map(|_| rng.random_range(0.0..0.4)).collect();
    for _ in 0..channels {
        let mut row = rng.random_range(0..ny) as isize;
        let width = rng.random_range(1..=2usize.max(ny / 32));
        for i in 0..nx {
            if rng.random_bool(0.15) {
                row += if rng.random_bool(0.5) { 1 } else { -1 };
                row = row.clamp(0, ny as isize - 1);
            }
            for w in 0..width {
                let j = (row as usize + w).min(ny - 1);
                logs[j * nx + i] = rng.random_range(0.8..1.0);
            }
        }
    }

    let values = if kappa == 1.0 {
        vec![1.0; nx * ny]
    } else {
        let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = (hi - lo).max(f64::MIN_POSITIVE);
        let ln_kappa = kappa.ln();
        let mut values: Vec<f64> = logs
            .iter()
            .map(|&l| (ln_kappa * (l - lo) / span).exp())
            .collect();
        // Pin the extremes so max / min is exactly kappa.
        for v in &mut values {
            *v = v.clamp(1.0, kappa);
        }
        let arg = |pick: fn(f64, f64) -> bool| {
            let mut best = 0;
            for (k, &l) in logs.iter().enumerate() {
                if pick(l, logs[best]) {
                    best = k;
                }
            }
            best
        };
        values[arg(|a, b| a < b)] = 1.0;
        values[arg(|a, b| a > b)] = kappa;
        values
    };
    let grid = RasterGrid::new(nx, ny, values, extent)?;
    Ok(CoefficientField {
        a_min: grid.min(),
        a_max: grid.max(),
        source: Source::Channel(grid),
    })
}

impl CoefficientField {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match &self.source {
            Source::Trig => trig_value(x, y),
            Source::Constant(v) => *v,
            Source::Raster(g) | Source::Channel(g) => g.eval(x, y),
            Source::Function(f) => f(x, y),
        }
    }

    pub fn kind(&self) -> CoeffKind {
        match self.source {
            Source::Trig => CoeffKind::AnalyticTrig,
            Source::Constant(_) => CoeffKind::Constant,
            Source::Raster(_) => CoeffKind::Raster,
            Source::Channel(_) => CoeffKind::SyntheticChannel,
            Source::Function(_) => CoeffKind::Function,
        }
    }

    pub fn a_min(&self) -> f64 {
        self.a_min
    }

    pub fn a_max(&self) -> f64 {
        self.a_max
    }

    /// Contrast `a_max / a_min`.
    pub fn kappa(&self) -> f64 {
        self.a_max / self.a_min
    }

    /// Underlying cell grid for raster and channel fields.
    pub fn raster(&self) -> Option<&RasterGrid> {
        match &self.source {
            Source::Raster(g) | Source::Channel(g) => Some(g),
            _ => None,
        }
    }

    /// Evaluates at `p`, rejecting nonpositive or non-finite values.
    pub fn sample(&self, p: [f64; 2]) -> Result<f64> {
        let v = self.eval(p[0], p[1]);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonPositiveCoefficient {
                value: v,
                x: p[0],
                y: p[1],
            })
        }
    }
}
