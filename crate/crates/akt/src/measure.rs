//! Discrete empirical measures, the sample generators used by the
//! experiments, and heat-kernel-smoothed sampling.
//!
//! Every sampler is a pure function of its `RngStream`, so identical
//! specs produce identical samples and distinct streams can be consumed from
//! concurrent workers without coordination.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::torus::{wrap, Frame, Point};

/// Finitely supported probability measure with uniform weights `1/n`.
///
/// Points are stored row-major (`n` rows of `dim` coordinates) and all share
/// one frame. Repeated points are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    data: Vec<f64>,
    dim: usize,
    frame: Frame,
}

impl DiscreteMeasure {
    /// Builds a measure from row-major coordinates, validating the frame
    /// range of every coordinate.
    pub fn new(data: Vec<f64>, dim: usize, frame: Frame) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidParameter(format!(
                "coordinate buffer of length {} is not a nonempty multiple of dim {}",
                data.len(),
                dim
            )));
        }
        for &x in &data {
            frame.check(x)?;
        }
        Ok(DiscreteMeasure { data, dim, frame })
    }

    pub fn from_points(points: &[Point]) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty point list".into()))?;
        let (dim, frame) = (first.dim(), first.frame());
        let mut data = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch(dim, p.dim()));
            }
            if p.frame() != frame {
                return Err(Error::FrameMismatch {
                    expected: frame,
                    got: p.frame(),
                });
            }
            data.extend_from_slice(p.coords());
        }
        // Coordinates were validated by `Point::new`.
        Ok(DiscreteMeasure { data, dim, frame })
    }

    pub fn n(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    /// Uniform weight of each atom.
    pub fn weight(&self) -> f64 {
        1.0 / self.n() as f64
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Scales a unit-cube measure by `pi` into the half torus.
    pub fn to_half_torus(&self) -> Result<DiscreteMeasure> {
        if self.frame != Frame::UnitCube {
            return Err(Error::FrameMismatch {
                expected: Frame::UnitCube,
                got: self.frame,
            });
        }
        Ok(DiscreteMeasure {
            data: self.data.iter().map(|x| x * std::f64::consts::PI).collect(),
            dim: self.dim,
            frame: Frame::HalfTorus,
        })
    }

    /// Reframes a half-torus measure as a full-torus one (points unchanged:
    /// `[0, pi]^d` is a subset of `(-pi, pi]^d`).
    pub fn to_full_torus(&self) -> Result<DiscreteMeasure> {
        if !self.frame.is_torus_valued() {
            return Err(Error::FrameMismatch {
                expected: Frame::HalfTorus,
                got: self.frame,
            });
        }
        Ok(DiscreteMeasure {
            data: self.data.clone(),
            dim: self.dim,
            frame: Frame::FullTorus,
        })
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seedable, splittable random stream: a root seed plus a stream index
/// selecting one of 2^64 independent ChaCha8 keystreams.
///
/// `substream` derives child streams through a splitmix chain, so per-trial
/// streams `root.substream(n).substream(trial)` are reproducible and
/// independent of execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    stream: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream { seed, stream: 0 }
    }

    pub fn substream(&self, index: u64) -> Self {
        RngStream {
            seed: self.seed,
            stream: splitmix64(self.stream.wrapping_add(splitmix64(index ^ 0xA0761D64))),
        }
    }

    /// Instantiates the generator for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

fn uniform_block(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n * d).map(|_| rng.random::<f64>()).collect()
}

/// Two independent `n`-point iid-uniform empirical measures on `[0,1]^d`.
pub fn sample_iid_uniform(
    n: usize,
    d: usize,
    stream: &RngStream,
) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let mut rng = stream.rng();
    let mu = DiscreteMeasure::new(uniform_block(n, d, &mut rng), d, Frame::UnitCube)?;
    let nu = DiscreteMeasure::new(uniform_block(n, d, &mut rng), d, Frame::UnitCube)?;
    Ok((mu, nu))
}

/// Fractional part, mapping the line onto `[0,1)` (addition mod 1).
pub fn frac(x: f64) -> f64 {
    x - x.floor()
}

/// Stationary pairwise-independent pair of sequences driven by the circle
/// rotation `s_k = frac(k*w1 + w2)` with `(w1, w2)` uniform on the square:
/// `X_k = u(s_k)`, `Y_k = v(s_k)` for `k = 1..=n`.
///
/// The maps must send `[0,1]` into `[0,1]^d`; if they have equal pushforward
/// distributions the two empirical measures converge to each other at the
/// same rates as in the independent case.
pub fn sample_rotation_pair<U, V>(
    n: usize,
    d: usize,
    u_map: U,
    v_map: V,
    stream: &RngStream,
) -> Result<(DiscreteMeasure, DiscreteMeasure)>
where
    U: Fn(f64) -> Vec<f64>,
    V: Fn(f64) -> Vec<f64>,
{
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let mut rng = stream.rng();
    let w1: f64 = rng.random();
    let w2: f64 = rng.random();
    let mut xs = Vec::with_capacity(n * d);
    let mut ys = Vec::with_capacity(n * d);
    for k in 1..=n {
        let s = frac(k as f64 * w1 + w2);
        let x = u_map(s);
        let y = v_map(s);
        if x.len() != d || y.len() != d {
            return Err(Error::DimensionMismatch(d, x.len().max(y.len())));
        }
        xs.extend_from_slice(&x);
        ys.extend_from_slice(&y);
    }
    Ok((
        DiscreteMeasure::new(xs, d, Frame::UnitCube)?,
        DiscreteMeasure::new(ys, d, Frame::UnitCube)?,
    ))
}

/// Default rotation maps used by the CLI, one pair per dimension.
///
/// These are an arbitrary demonstration choice: `v` is `u` composed with the
/// measure-preserving shift `s -> frac(s + 1/2)`, which guarantees equal
/// pushforward distributions. Defined for `d <= 2`; callers with other needs
/// supply their own maps to [`sample_rotation_pair`].
pub type CurveMap = Box<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

pub fn default_rotation_maps(d: usize) -> Result<(CurveMap, CurveMap)> {
    match d {
        1 => Ok((Box::new(|s| vec![s]), Box::new(|s| vec![frac(s + 0.5)]))),
        2 => Ok((
            Box::new(|s| vec![s, frac(2.0 * s)]),
            Box::new(|s| vec![frac(s + 0.5), frac(2.0 * s)]),
        )),
        _ => Err(Error::InvalidParameter(format!(
            "default rotation maps are defined for d <= 2, got d = {d}; supply custom maps"
        ))),
    }
}

/// Stationary renewal-replacement chain of pairs: `Z_1` fresh; for `k > 1`
/// the pair is copied from `Z_(k-1)` with probability `rho_mix`, else drawn
/// fresh with both coordinates independent uniform on `[0,1]^d`.
///
/// An explicit coupling shows its strong-mixing coefficients satisfy
/// `alpha(l) <= rho_mix^l`, so the mixing sequence is summable.
pub fn sample_renewal_pair(
    n: usize,
    d: usize,
    rho_mix: f64,
    stream: &RngStream,
) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if !(rho_mix > 0.0 && rho_mix < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "rho_mix must lie in the open interval (0,1), got {rho_mix}"
        )));
    }
    let mut rng = stream.rng();
    let mut xs = Vec::with_capacity(n * d);
    let mut ys = Vec::with_capacity(n * d);
    let draw = |xs: &mut Vec<f64>, ys: &mut Vec<f64>, rng: &mut ChaCha8Rng| {
        for _ in 0..d {
            xs.push(rng.random::<f64>());
        }
        for _ in 0..d {
            ys.push(rng.random::<f64>());
        }
    };
    draw(&mut xs, &mut ys, &mut rng);
    for k in 1..n {
        if rng.random::<f64>() < rho_mix {
            let prev = (k - 1) * d;
            xs.extend_from_within(prev..prev + d);
            ys.extend_from_within(prev..prev + d);
        } else {
            draw(&mut xs, &mut ys, &mut rng);
        }
    }
    Ok((
        DiscreteMeasure::new(xs, d, Frame::UnitCube)?,
        DiscreteMeasure::new(ys, d, Frame::UnitCube)?,
    ))
}

/// Sorted indices of a uniformly random `k`-subset of `{0, ..., total-1}`
/// (partial Fisher-Yates, uniform over all binomial(total, k) subsets).
pub(crate) fn subset_indices(total: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    debug_assert!(k <= total);
    let mut pool: Vec<usize> = (0..total).collect();
    for i in 0..k {
        let j = i + rng.random_range(0..total - i);
        pool.swap(i, j);
    }
    let mut chosen = pool[..k].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Uniform measure on a uniformly random `n`-subset of the given atoms.
pub fn subset_empirical(atoms: &[Point], n: usize, stream: &RngStream) -> Result<DiscreteMeasure> {
    let total = atoms.len();
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if n > total {
        return Err(Error::InvalidParameter(format!(
            "subset size {n} exceeds atom count {total}"
        )));
    }
    let mut rng = stream.rng();
    let idx = subset_indices(total, n, &mut rng);
    let chosen: Vec<Point> = idx.into_iter().map(|i| atoms[i].clone()).collect();
    DiscreteMeasure::from_points(&chosen)
}

/// The average measure `(1/N) * sum of point masses` over all atoms.
pub fn average_measure(atoms: &[Point]) -> Result<DiscreteMeasure> {
    DiscreteMeasure::from_points(atoms)
}

/// Replaces each point by a wrapped-Gaussian perturbation: every coordinate
/// gains an independent centered normal of variance `2t` and is folded back
/// into `(-pi, pi]`. The result is an `n`-point sample from the heat-kernel
/// smoothing of the input at time `t`.
pub fn smooth_sample(mu: &DiscreteMeasure, t: f64, stream: &RngStream) -> Result<DiscreteMeasure> {
    crate::error::ensure_positive(t, "smoothing time")?;
    if !mu.frame().is_torus_valued() {
        return Err(Error::FrameMismatch {
            expected: Frame::FullTorus,
            got: mu.frame(),
        });
    }
    let sigma = (2.0 * t).sqrt();
    let mut rng = stream.rng();
    let mut data = Vec::with_capacity(mu.n() * mu.dim());
    for p in mu.points() {
        for &x in p {
            let g: f64 = StandardNormal.sample(&mut rng);
            data.push(wrap(x + sigma * g)?);
        }
    }
    Ok(DiscreteMeasure {
        data,
        dim: mu.dim(),
        frame: Frame::FullTorus,
    })
}

/// Reads a point list from CSV: no header, one point per row, `d` float
/// columns, all values in `[0,1]`. The measure is ingested in the unit-cube
/// frame.
pub fn read_points_csv(path: &Path) -> Result<DiscreteMeasure> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::parse(path, e.to_string()))?;
    let mut data = Vec::new();
    let mut dim = None;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, e.to_string()))?;
        let d = *dim.get_or_insert(record.len());
        if record.len() != d {
            return Err(Error::parse(
                path,
                format!(
                    "row {} has {} columns, expected {}",
                    row + 1,
                    record.len(),
                    d
                ),
            ));
        }
        for field in record.iter() {
            let x: f64 = field.parse().map_err(|_| {
                Error::parse(path, format!("row {}: invalid float {:?}", row + 1, field))
            })?;
            data.push(x);
        }
    }
    let dim = dim.ok_or_else(|| Error::parse(path, "empty point file"))?;
    DiscreteMeasure::new(data, dim, Frame::UnitCube).map_err(|e| Error::parse(path, e.to_string()))
}
