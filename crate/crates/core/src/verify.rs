//! Numerical verification suites. Every check compares a library quantity against an
//! independent oracle (quadrature, SVD, spatial rotation, finite differences) or a
//! measured outcome, and records the value, threshold and verdict.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::conv::spherical::{sh_real_entries, spherical_conv, SphericalSignal};
use crate::conv::{conv_b3, conv_s2, B3Options, DirectionGrid, Kernel, ShellDecomposition};
use crate::error::{Error, Result};
use crate::geometry::{pole_to_axis, random_rotation, rotate_direction, rotate_point, uniform_ball_points};
use crate::moments::{
    fit_moments, norm_constant, pinv_newton_schulz, pinv_residual, quadrature_moments, real_to_complex, reconstruct,
    reconstruct_complex, reconstruction_error, MomentLayout, MomentVector, PinvConfig, SampleSet,
};
use crate::net::{labeled_features, train, FeatureMode, Model, Params, PipelineConfig};
use crate::quadrature::{BallRule, SphereRule};
use crate::shape::{drop_points, synth_bandlimited, synth_classes, SynthConfig};
use crate::special::{BallPoint, RadialTable, ZernikeBasis};
use crate::symmetry::{normalized_symmetry, symmetry_power, Axis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = ">")]
    Above,
}

impl Relation {
    fn holds(self, measured: f64, threshold: f64) -> bool {
        match self {
            Relation::Below => measured < threshold,
            Relation::AtLeast => measured >= threshold,
            Relation::Above => measured > threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Below => "<",
            Relation::AtLeast => ">=",
            Relation::Above => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: &str, measured: f64, relation: Relation, threshold: f64) -> Self {
        // NaN never passes
        let passed = measured.is_finite() && relation.holds(measured, threshold);
        Self { name: name.to_string(), measured, relation, threshold, passed }
    }

    pub fn below(name: &str, measured: f64, threshold: f64) -> Self {
        Self::new(name, measured, Relation::Below, threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub c_norm: f64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn new(seed: u64, checks: Vec<Check>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self { seed, c_norm: norm_constant(), checks, passed }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed {}  c_norm {:.15}", self.seed, self.c_norm)?;
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        writeln!(f, "{:<width$}  {:>14}  {:>2} {:<12}  result", "check", "measured", "", "threshold")?;
        for c in &self.checks {
            writeln!(
                f,
                "{:<width$}  {:>14.6e}  {:>2} {:<12.3e}  {}",
                c.name,
                c.measured,
                c.relation.symbol(),
                c.threshold,
                if c.passed { "PASS" } else { "FAIL" }
            )?;
        }
        write!(f, "overall: {}", if self.passed { "PASS" } else { "FAIL" })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Orthogonality,
    Moments,
    Pinv,
    Equivariance,
    Conv,
    Radial,
    Symmetry,
    Gradcheck,
    Spherical,
    Classification,
    All,
}

impl Suite {
    pub const EACH: [Suite; 10] = [
        Suite::Orthogonality,
        Suite::Moments,
        Suite::Pinv,
        Suite::Equivariance,
        Suite::Conv,
        Suite::Radial,
        Suite::Symmetry,
        Suite::Gradcheck,
        Suite::Spherical,
        Suite::Classification,
    ];
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "orthogonality" => Suite::Orthogonality,
            "moments" => Suite::Moments,
            "pinv" => Suite::Pinv,
            "equivariance" => Suite::Equivariance,
            "conv" => Suite::Conv,
            "radial" => Suite::Radial,
            "symmetry" => Suite::Symmetry,
            "gradcheck" => Suite::Gradcheck,
            "spherical" => Suite::Spherical,
            "classification" => Suite::Classification,
            "all" => Suite::All,
            _ => return Err(Error::Config(format!("unknown verification suite '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Perturbs one radial coefficient so the orthogonality suite must fail.
    pub corrupt_q: bool,
}

pub fn run_suite(suite: Suite, options: &VerifyOptions) -> Result<VerifyReport> {
    let suites: Vec<Suite> = if suite == Suite::All { Suite::EACH.to_vec() } else { vec![suite] };
    let mut checks = Vec::new();
    for s in suites {
        let seed = options.seed;
        checks.extend(match s {
            Suite::Orthogonality => {
                let mut table = RadialTable::new(6);
                if options.corrupt_q {
                    corrupt_radial_table(&mut table);
                }
                check_orthogonality(&ZernikeBasis::with_radial_table(table))?
            }
            Suite::Moments => check_moment_fitting(seed)?,
            Suite::Pinv => check_pinv(seed)?,
            Suite::Equivariance => check_rotation_equivariance(seed)?,
            Suite::Conv => check_conv_correctness(seed)?,
            Suite::Radial => check_radial_equivariance(seed)?,
            Suite::Symmetry => check_symmetry(seed)?,
            Suite::Gradcheck => check_gradients(seed)?,
            Suite::Spherical => check_spherical_baseline(seed)?,
            Suite::Classification => check_classification(seed)?,
            Suite::All => unreachable!("expanded above"),
        });
    }
    Ok(VerifyReport::new(options.seed, checks))
}

/// Scales `q^1_{4,2}` by 1.01.
pub fn corrupt_radial_table(table: &mut RadialTable) {
    let q = table.coefficient(4, 2, 1);
    table.set_coefficient(4, 2, 1, q * 1.01);
}

fn random_moments<R: Rng + ?Sized>(rng: &mut R, order: usize) -> MomentVector {
    let layout = MomentLayout::new(order);
    let mut c: Vec<f64> = (0..layout.dim()).map(|_| rng.sample(StandardNormal)).collect();
    for i in layout.zonal_positions() {
        c[layout.len() + i] = 0.0;
    }
    MomentVector::from_coeffs(order, c).expect("layout-sized vector")
}

fn random_kernel<R: Rng + ?Sized>(rng: &mut R, order: usize) -> Kernel {
    let n = MomentLayout::new(order).zonal_positions().len();
    let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    Kernel::from_zonal(order, &z).expect("zonal count matches")
}

fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let z: f64 = rng.random_range(-1.0..1.0);
    (rng.random_range(0.0..2.0 * PI), z.acos())
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Gram matrix of all order-6 basis functions under a 64³ Gauss product rule, computed
/// single-threaded.
pub fn check_orthogonality(basis: &ZernikeBasis) -> Result<Vec<Check>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| Error::Config(e.to_string()))?;
    let start = Instant::now();
    let gram = pool.install(|| complex_gram(basis, 64));
    let elapsed = start.elapsed().as_secs_f64();
    let n = gram.0.nrows();
    let diag: Vec<f64> = (0..n).map(|i| gram.0[(i, i)]).collect();
    let min_diag = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean_diag = diag.iter().sum::<f64>() / n as f64;
    let mut off = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let im = gram.1[(i, j)];
            let re = if i == j { 0.0 } else { gram.0[(i, j)] };
            off = off.max((re * re + im * im).sqrt());
        }
    }
    let spread = diag.iter().fold(0.0f64, |m, d| m.max((d - mean_diag).abs())) / mean_diag;
    Ok(vec![
        Check::below("orthogonality.off_diagonal_ratio", off / min_diag, 1e-6),
        Check::below("orthogonality.diagonal_spread", spread, 1e-6),
        Check::below("orthogonality.c_norm_agreement", (mean_diag - norm_constant()).abs() / norm_constant(), 1e-6),
        Check::below("orthogonality.seconds_single_thread", elapsed, 60.0),
    ])
}

/// Real and imaginary parts of `G_ij = Σ w Z_i conj(Z_j)` over the full complex basis.
fn complex_gram(basis: &ZernikeBasis, nodes: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let layout = MomentLayout::new(basis.order());
    let indices = layout.complex_entries();
    let n = indices.len();
    let rule = BallRule::product(nodes, nodes, nodes);
    let chunk = nodes * nodes;
    let mut acc = DMatrix::zeros(2 * n, 2 * n);
    for (pts, ws) in rule.points.chunks(chunk).zip(rule.weights.chunks(chunk)) {
        let z = basis.evaluate(indices, pts);
        // S = [U V], weighted copy Sw = diag(w) S
        let s = DMatrix::from_fn(pts.len(), 2 * n, |r, c| if c < n { z[(r, c)].re } else { z[(r, c - n)].im });
        let mut sw = s.clone();
        for (mut row, w) in sw.row_iter_mut().zip(ws) {
            row *= *w;
        }
        acc.gemm_tr(1.0, &s, &sw, 1.0);
    }
    let uu = acc.view((0, 0), (n, n));
    let vv = acc.view((n, n), (n, n));
    let uv = acc.view((0, n), (n, n));
    let vu = acc.view((n, 0), (n, n));
    // Z_i conj(Z_j) = (U_i U_j + V_i V_j) + i (V_i U_j - U_i V_j)
    (uu + vv, vu - uv)
}

fn gaussian_bumps<R: Rng + ?Sized>(rng: &mut R) -> impl Fn(&BallPoint) -> f64 {
    let bumps: Vec<(nalgebra::Vector3<f64>, f64, f64)> = (0..3)
        .map(|_| {
            let c = uniform_ball_points(rng, 1)[0].to_cartesian() * 0.7;
            (c, rng.random_range(0.5..1.5), rng.random_range(0.25..0.5))
        })
        .collect();
    move |p: &BallPoint| {
        let x = p.to_cartesian();
        bumps.iter().map(|(c, a, s)| a * (-(x - c).norm_squared() / (2.0 * s * s)).exp()).sum()
    }
}

/// Band-limited recovery and the least-squares versus quadrature reconstruction ordering.
pub fn check_moment_fitting(seed: u64) -> Result<Vec<Check>> {
    let mut worst = 0.0f64;
    for i in 0..5 {
        let (truth, samples) = synth_bandlimited(seed.wrapping_add(i), 6)?;
        let fit = fit_moments(&samples, 6, &PinvConfig::offline_auto())?;
        let err: f64 = fit.coeffs().iter().zip(truth.coeffs()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(err / truth.norm());
    }
    let mut checks = vec![Check::below("moments.bandlimited_relative_error", worst, 1e-6)];
    for p in reconstruction_series(seed, &[2, 4, 6, 8], 10)? {
        checks.push(Check::below(&format!("moments.lsq_over_quadrature_n{}", p.order), p.lsq / p.quadrature, 1.0));
    }
    Ok(checks)
}

/// Mean absolute reconstruction error at one order, averaged over a shape suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionPoint {
    pub order: usize,
    pub lsq: f64,
    pub quadrature: f64,
}

/// Least-squares versus quadrature moments on `shapes` non-band-limited functions, each a sum
/// of three Gaussian bumps sampled at 4096 uniform points with Monte Carlo weights.
pub fn reconstruction_series(seed: u64, orders: &[usize], shapes: usize) -> Result<Vec<ReconstructionPoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d6f_6d65);
    let suite: Vec<SampleSet> = (0..shapes)
        .map(|_| {
            let f = gaussian_bumps(&mut rng);
            let points = uniform_ball_points(&mut rng, 4096);
            let values = points.iter().map(&f).collect();
            SampleSet::new(points, values).map(SampleSet::with_monte_carlo_weights)
        })
        .collect::<Result<_>>()?;
    if suite.is_empty() {
        return Err(Error::Empty("reconstruction series needs at least one shape".into()));
    }
    let count = suite.len() as f64;
    orders
        .iter()
        .map(|&n| {
            let (mut lsq, mut quad) = (0.0, 0.0);
            for s in &suite {
                lsq += reconstruction_error(&fit_moments(s, n, &PinvConfig::offline_auto())?, s)?.mean_abs;
                let approx = reconstruct_complex(&quadrature_moments(s, n)?, s.points())?;
                quad += s.values().iter().zip(&approx).map(|(a, b)| (a - b).abs()).sum::<f64>() / s.len() as f64;
            }
            Ok(ReconstructionPoint { order: n, lsq: lsq / count, quadrature: quad / count })
        })
        .collect()
}

/// Newton–Schulz (α = 0.001, 30 iterations) on random 500×100 matrices against the SVD pseudo-inverse.
pub fn check_pinv(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7069_6e76);
    let (mut residual, mut oracle) = (0.0f64, 0.0f64);
    for _ in 0..5 {
        let x = DMatrix::from_fn(500, 100, |_, _| rng.sample::<f64, _>(StandardNormal));
        let p = pinv_newton_schulz(&x, 0.001, 30)?;
        residual = residual.max(pinv_residual(&x, &p));
        let svd = x.clone().pseudo_inverse(1e-12).map_err(|e| Error::Domain(e.to_string()))?;
        oracle = oracle.max((&p - &svd).norm() / svd.norm());
    }
    Ok(vec![Check::below("pinv.residual", residual, 1e-3), Check::below("pinv.svd_relative_error", oracle, 1e-3)])
}

/// Response of a refitted rotated input versus the original response at rotated directions.
pub fn check_rotation_equivariance(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x726f_7461);
    let grid = DirectionGrid::default();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let c = random_moments(&mut rng, 6);
        let g = random_kernel(&mut rng, 6);
        let eta = random_rotation(&mut rng);
        let inv = eta.inverse();
        let points = uniform_ball_points(&mut rng, 8192);
        let pulled: Vec<BallPoint> = points.iter().map(|p| rotate_point(&inv, p)).collect();
        let rotated = SampleSet::new(points, reconstruct(&c, &pulled)?)?;
        let fitted = fit_moments(&rotated, 6, &PinvConfig::offline_auto())?;
        let lhs = conv_s2(&real_to_complex(&fitted), &g, &grid)?.values;
        let moved = DirectionGrid::from_directions(
            grid.directions().iter().map(|&(a, b)| rotate_direction(&inv, a, b)).collect(),
        )?;
        let rhs = conv_s2(&real_to_complex(&c), &g, &moved)?.values;
        worst = worst.max(max_diff(&lhs, &rhs) / max_abs(&rhs));
    }
    Ok(vec![Check::below("equivariance.max_relative_error", worst, 1e-3)])
}

/// Spectral response against `Σ w f(x) g(τ⁻¹x)` over a Gauss product rule exact for the integrand.
pub fn check_conv_correctness(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x636f_6e76);
    let rule = BallRule::product(12, 12, 24);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let c = random_moments(&mut rng, 6);
        let g = random_kernel(&mut rng, 6);
        let fx = reconstruct(&c, &rule.points)?;
        let dirs: Vec<(f64, f64)> = (0..50).map(|_| random_direction(&mut rng)).collect();
        let oracle: Vec<f64> = dirs
            .iter()
            .map(|&(a, b)| {
                let inv = pole_to_axis(a, b).inverse();
                let pulled: Vec<BallPoint> = rule.points.iter().map(|p| rotate_point(&inv, p)).collect();
                let gx = reconstruct(g.base(), &pulled)?;
                Ok(rule.weights.iter().zip(&fx).zip(&gx).map(|((w, f), g)| w * f * g).sum())
            })
            .collect::<Result<_>>()?;
        let got = conv_s2(&real_to_complex(&c), &g, &DirectionGrid::from_directions(dirs)?)?.values;
        worst = worst.max(max_diff(&got, &oracle) / max_abs(&oracle));
    }
    Ok(vec![Check::below("conv.max_relative_error", worst, 1e-4)])
}

/// A pattern inside shell 3 and its copy shifted by one shell width.
pub fn check_radial_equivariance(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7261_6469);
    let shells = ShellDecomposition::new(10)?;
    let g = random_kernel(&mut rng, 6);
    let mut base = Vec::new();
    let mut shifted = Vec::new();
    let mut values = Vec::new();
    for _ in 0..4096 {
        let (theta, phi) = random_direction(&mut rng);
        let s: f64 = rng.random_range(0.01..0.09);
        let x = BallPoint::new_unchecked(theta, phi, 1.0).to_cartesian();
        values.push((1.0 + x.x - 0.5 * x.z * x.y) * (8.0 * s).cos() + 3.0 * s);
        base.push(BallPoint::new_unchecked(theta, phi, 0.3 + s));
        shifted.push(BallPoint::new_unchecked(theta, phi, 0.4 + s));
    }
    let grid = DirectionGrid::default();
    let options = B3Options::default();
    let a = conv_b3(&SampleSet::new(base, values.clone())?, &g, &grid, &shells, &options)?;
    let b = conv_b3(&SampleSet::new(shifted, values)?, &g, &grid, &shells, &options)?;
    let mut worst = max_diff(&a.slices[3], &b.slices[4]);
    // every other slice must be empty in both maps
    for k in 0..10 {
        if k != 3 {
            worst = worst.max(max_abs(&a.slices[k]));
        }
        if k != 4 {
            worst = worst.max(max_abs(&b.slices[k]));
        }
    }
    Ok(vec![
        Check::below("radial.slice_shift_error", worst, 1e-6),
        Check::new("radial.response_magnitude", max_abs(&a.slices[3]), Relation::Above, 0.0),
    ])
}

/// Closed-form symmetry power against rotating to the pole, projecting by quadrature and
/// summing the zonal energy.
pub fn check_symmetry(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7379_6d6d);
    let rule = BallRule::product(8, 8, 16);
    let layout = MomentLayout::new(6);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let c = random_moments(&mut rng, 6);
        let (alpha, beta) = random_direction(&mut rng);
        let axis = Axis::new(alpha, beta)?;
        let tau = pole_to_axis(alpha, beta);
        let pushed: Vec<BallPoint> = rule.points.iter().map(|p| rotate_point(&tau, p)).collect();
        let aligned =
            SampleSet::new(rule.points.clone(), reconstruct(&c, &pushed)?)?.with_weights(rule.weights.clone())?;
        let omega = quadrature_moments(&aligned, 6)?;
        let oracle: f64 = layout
            .entries()
            .iter()
            .filter(|e| e.m == 0)
            .map(|e| omega.get(&layout, e.n, e.l, 0).expect("zonal entry").norm_sqr())
            .sum();
        let got = symmetry_power(&real_to_complex(&c), axis);
        worst = worst.max((got - oracle).abs() / oracle);
    }
    let mut zonal_worst = 0.0f64;
    for _ in 0..20 {
        let mut c = MomentVector::zeros(6);
        for e in layout.entries().iter().filter(|e| e.m == 0) {
            c.set_a(&layout, e.n, e.l, 0, rng.sample(StandardNormal))?;
        }
        zonal_worst = zonal_worst.max((normalized_symmetry(&real_to_complex(&c), Axis::NORTH_POLE)? - 1.0).abs());
    }
    Ok(vec![
        Check::below("symmetry.power_relative_error", worst, 1e-4),
        Check::below("symmetry.zonal_normalized_deviation", zonal_worst, 1e-9),
    ])
}

/// Central differences (h = 1e-4) on 20 random coordinates per parameter group of the
/// default pipeline, with features from synthetic shapes.
pub fn check_gradients(seed: u64) -> Result<Vec<Check>> {
    let config = PipelineConfig { seed, ..Default::default() };
    let data = synth_classes(seed, &SynthConfig { train_per_class: 1, test_per_class: 0, ..Default::default() })?;
    let examples = labeled_features(&data.train, &config)?;
    let batch: Vec<_> = examples.iter().map(|(f, l)| (f, *l)).collect();
    let model = Model::new(config, data.n_classes())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6772_6164);
    let params = model.init_params(&mut rng);
    let (_, grads) = model.loss_and_grads(&params, &batch)?;
    let h = 1e-4;
    let loss_at = |p: &Params| model.loss_and_grads(p, &batch).map(|r| r.0);
    let mask: Vec<usize> = model.kernel_mask().iter().enumerate().filter(|(_, k)| **k).map(|(i, _)| i).collect();
    let mut checks = Vec::new();
    for group in ["kernels", "w1", "w2", "fc"] {
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let nk = params.kernels.len();
            let (t, i) = match group {
                "kernels" => (rng.random_range(0..nk), mask[rng.random_range(0..mask.len())]),
                "w1" => (nk, rng.random_range(0..params.pool.w1.len())),
                "w2" => (nk + 1, rng.random_range(0..params.pool.w2.len())),
                _ => (nk + 2, rng.random_range(0..params.fc.len())),
            };
            let analytic = grads.tensors()[t][i];
            let mut plus = params.clone();
            plus.tensors_mut()[t][i] += h;
            let mut minus = params.clone();
            minus.tensors_mut()[t][i] -= h;
            let fd = (loss_at(&plus)? - loss_at(&minus)?) / (2.0 * h);
            let scale = analytic.abs().max(fd.abs());
            if scale > 0.0 {
                worst = worst.max((analytic - fd).abs() / scale);
            }
        }
        checks.push(Check::below(&format!("gradcheck.{group}_relative_error"), worst, 1e-4));
    }
    Ok(checks)
}

/// Spherical convolution against `∫ f(x) g(τ⁻¹x) dS` by a Gauss product rule on the sphere.
pub fn check_spherical_baseline(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7370_6872);
    let lmax = 6;
    let half = sh_real_entries(lmax).len();
    let rule = SphereRule::product(16, 32);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let fc: Vec<f64> = (0..2 * half).map(|_| rng.sample(StandardNormal)).collect();
        let f = SphericalSignal::from_real(lmax, &fc)?;
        let gc: Vec<f64> = sh_real_entries(lmax)
            .iter()
            .map(|&(_, m)| if m == 0 { rng.sample(StandardNormal) } else { 0.0 })
            .chain(std::iter::repeat_n(0.0, half))
            .collect();
        let g = SphericalSignal::from_real(lmax, &gc)?;
        let conv = spherical_conv(&f, &g)?;
        let fx: Vec<f64> = rule.directions.iter().map(|&(t, p)| f.eval(t, p).re).collect();
        let mut got = Vec::new();
        let mut oracle = Vec::new();
        for _ in 0..50 {
            let (a, b) = random_direction(&mut rng);
            let inv = pole_to_axis(a, b).inverse();
            oracle.push(
                rule.directions
                    .iter()
                    .zip(&rule.weights)
                    .zip(&fx)
                    .map(|((&(t, p), w), fv)| {
                        let (t2, p2) = rotate_direction(&inv, t, p);
                        w * fv * g.eval(t2, p2).re
                    })
                    .sum::<f64>(),
            );
            got.push(conv.eval(a, b).re);
        }
        worst = worst.max(max_diff(&got, &oracle) / max_abs(&oracle));
    }
    Ok(vec![Check::below("spherical.max_relative_error", worst, 1e-4)])
}

/// Outcome of training the toy pipeline on the synthetic three-class dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRun {
    pub volumetric_accuracy: f64,
    pub spherical_accuracy: f64,
    pub removal_accuracy: f64,
    pub seconds: f64,
}

/// Trains the volumetric pipeline and the spherical ablation on the same data and seed,
/// then re-scores the volumetric model with 20% of every test shape's points removed.
pub fn classification_run(seed: u64) -> Result<ClassificationRun> {
    let start = Instant::now();
    let data = synth_classes(seed, &SynthConfig::default())?;
    let volumetric = PipelineConfig { seed, ..Default::default() };
    let train_set = labeled_features(&data.train, &volumetric)?;
    let test_set = labeled_features(&data.test, &volumetric)?;
    let outcome = train(&volumetric, &data.class_names, &train_set, &test_set)?;
    let volumetric_accuracy = crate::net::accuracy(&outcome.model, &outcome.params, &test_set)?;
    let seconds = start.elapsed().as_secs_f64();

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6c6f_7373);
    let mut reduced = data.test.clone();
    for s in reduced.iter_mut() {
        s.samples = drop_points(&s.samples, 0.2, &mut rng)?;
    }
    let reduced_set = labeled_features(&reduced, &volumetric)?;
    let removal_accuracy = crate::net::accuracy(&outcome.model, &outcome.params, &reduced_set)?;

    let spherical = PipelineConfig { mode: FeatureMode::Spherical, ..volumetric };
    let sph_train = labeled_features(&data.train, &spherical)?;
    let sph_test = labeled_features(&data.test, &spherical)?;
    let sph = train(&spherical, &data.class_names, &sph_train, &sph_test)?;
    let spherical_accuracy = crate::net::accuracy(&sph.model, &sph.params, &sph_test)?;
    Ok(ClassificationRun { volumetric_accuracy, spherical_accuracy, removal_accuracy, seconds })
}

pub fn check_classification(seed: u64) -> Result<Vec<Check>> {
    let run = classification_run(seed)?;
    Ok(classification_checks(&run))
}

pub fn classification_checks(run: &ClassificationRun) -> Vec<Check> {
    vec![
        Check::new("classification.test_accuracy", run.volumetric_accuracy, Relation::AtLeast, 0.90),
        Check::below("classification.seconds", run.seconds, 300.0),
        Check::new(
            "classification.volumetric_minus_spherical",
            run.volumetric_accuracy - run.spherical_accuracy,
            Relation::Above,
            0.0,
        ),
        Check::below("robustness.accuracy_drop_20pct", run.volumetric_accuracy - run.removal_accuracy, 0.05),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_verdicts() {
        assert!(Check::below("a", 0.5, 1.0).passed);
        assert!(!Check::below("a", 1.0, 1.0).passed);
        assert!(!Check::below("a", f64::NAN, 1.0).passed);
        assert!(Check::new("b", 0.9, Relation::AtLeast, 0.9).passed);
        assert!(!Check::new("c", 0.0, Relation::Above, 0.0).passed);
    }

    #[test]
    fn report_json_round_trips() {
        let r = VerifyReport::new(7, vec![Check::below("x", 1e-9, 1e-6), Check::new("y", 2.0, Relation::Above, 1.0)]);
        assert!(r.passed);
        let back = VerifyReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_json().unwrap().contains("\"relation\": \"<\""));
        assert!(r.to_string().contains("overall: PASS"));
    }

    #[test]
    fn suite_names_parse() {
        for s in [
            "orthogonality",
            "moments",
            "pinv",
            "equivariance",
            "conv",
            "radial",
            "symmetry",
            "gradcheck",
            "spherical",
            "classification",
            "all",
        ] {
            assert!(s.parse::<Suite>().is_ok());
        }
        assert!("bogus".parse::<Suite>().is_err());
    }
}
