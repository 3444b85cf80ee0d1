//! Coupled-mode propagation in the waveguide array:
//!
//!   i dA_n/dz = dbeta_n(z) A_n + sum_m K_nm A_m
//!
//! with dbeta piecewise-constant over segments. Within a segment the
//! generator is constant, so the propagator is an exact matrix exponential:
//! a Hermitian eigendecomposition when lossless, a general expm when maze
//! losses make it non-Hermitian. No step-size error anywhere.

use crate::couplings::CouplingMatrix;
use crate::error::{Result, SimError};
use crate::expm::expm;
use crate::qsw::{self, EfficiencyTrace, EvolveOptions, SinkSpec};
use crate::rng::{self, uniform_symmetric};
use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthConvention {
    /// dbeta_max is the peak-to-peak width: draws on [-max/2, +max/2].
    FullWidth,
    /// dbeta_max is the half width: draws on [-max, +max].
    HalfWidth,
}

#[derive(Debug, Clone)]
pub struct PhotonicParams {
    /// Nearest-neighbor coupling, 1/mm.
    pub kappa: f64,
    pub nnn_ratio: f64,
    /// Noise amplitude, 1/mm; meaning fixed by `width`.
    pub dbeta_max: f64,
    /// Segment length, mm.
    pub segment_length: f64,
    pub sink_length: usize,
    /// Extra maze loss in dB accumulated over `reference_length`.
    pub maze_loss_db: f64,
    pub reference_length: f64,
    pub width: WidthConvention,
}

impl Default for PhotonicParams {
    fn default() -> Self {
        PhotonicParams {
            kappa: 0.4,
            nnn_ratio: 0.2,
            dbeta_max: 0.4,
            segment_length: 3.0,
            sink_length: 62,
            maze_loss_db: 0.0,
            reference_length: 60.0,
            width: WidthConvention::FullWidth,
        }
    }
}

impl PhotonicParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) || !(self.segment_length > 0.0) {
            return Err(SimError::BadParameter("need kappa > 0 and segment_length > 0".into()));
        }
        if self.dbeta_max < 0.0 || self.nnn_ratio < 0.0 || self.maze_loss_db < 0.0 {
            return Err(SimError::BadParameter(
                "dbeta_max, nnn_ratio and maze_loss_db must be nonnegative".into(),
            ));
        }
        if self.maze_loss_db > 0.0 && !(self.reference_length > 0.0) {
            return Err(SimError::BadParameter("loss needs reference_length > 0".into()));
        }
        Ok(())
    }

    fn half_width(&self) -> f64 {
        match self.width {
            WidthConvention::FullWidth => 0.5 * self.dbeta_max,
            WidthConvention::HalfWidth => self.dbeta_max,
        }
    }
}

/// Per-waveguide, per-segment detunings. Sink rows are identically zero:
/// those waveguides are uniform and unsegmented.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseMap {
    pub seed: u64,
    pub segment_length_mm: f64,
    pub dbeta: Vec<Vec<f64>>,
}

impl NoiseMap {
    pub fn segments(&self) -> usize {
        self.dbeta.first().map_or(0, Vec::len)
    }

    pub fn coverage(&self) -> f64 {
        self.segments() as f64 * self.segment_length_mm
    }

    pub fn waveguides(&self) -> usize {
        self.dbeta.len()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<NoiseMap> {
        let map: NoiseMap = serde_json::from_str(text)?;
        let segs = map.segments();
        if map.dbeta.iter().any(|row| row.len() != segs) {
            return Err(SimError::Parse("ragged dbeta rows in noise map".into()));
        }
        Ok(map)
    }
}

/// i.i.d. uniform draws per maze waveguide and segment, rows in waveguide
/// order, segments inner; sink rows consume no draws. Deterministic per
/// seed.
pub fn sample_noise_map(
    params: &PhotonicParams,
    total_length: f64,
    waveguide_count: usize,
    sink_indices: &[usize],
    seed: u64,
) -> Result<NoiseMap> {
    params.validate()?;
    if !(total_length > 0.0) {
        return Err(SimError::BadParameter("total_length must be positive".into()));
    }
    if let Some(&bad) = sink_indices.iter().find(|&&i| i >= waveguide_count) {
        return Err(SimError::NodeOutOfRange { node: bad, count: waveguide_count });
    }
    let segments = (total_length / params.segment_length).ceil() as usize;
    let half_width = params.half_width();
    let mut rng = rng::seeded(seed);
    let is_sink: Vec<bool> = {
        let mut v = vec![false; waveguide_count];
        for &i in sink_indices {
            v[i] = true;
        }
        v
    };
    let dbeta = is_sink
        .iter()
        .map(|&sink| {
            if sink || half_width == 0.0 {
                vec![0.0; segments]
            } else {
                (0..segments).map(|_| uniform_symmetric(&mut rng, half_width)).collect()
            }
        })
        .collect();
    Ok(NoiseMap { seed, segment_length_mm: params.segment_length, dbeta })
}

/// Amplitude loss coefficients alpha (per mm, applied as -alpha/2 on the
/// diagonal) for maze waveguides; sink waveguides stay lossless.
pub fn loss_alphas(
    waveguide_count: usize,
    sink_indices: &[usize],
    loss_db: f64,
    reference_length: f64,
) -> Vec<f64> {
    let alpha = loss_db * std::f64::consts::LN_10 / (10.0 * reference_length);
    let mut v = vec![alpha; waveguide_count];
    for &i in sink_indices {
        v[i] = 0.0;
    }
    v
}

#[derive(Debug, Clone)]
pub struct Propagation {
    pub zs: Vec<f64>,
    /// Amplitudes at each requested z, input normalization preserved.
    pub amplitudes: Vec<DVector<Complex<f64>>>,
}

/// Propagates `a0` to each requested z (ascending). Exact per-segment
/// propagators; alphas (if given) switch the segment exponential to the
/// general non-Hermitian path.
pub fn propagate(
    a0: &DVector<Complex<f64>>,
    couplings: &CouplingMatrix,
    noise: &NoiseMap,
    alphas: Option<&[f64]>,
    z_targets: &[f64],
) -> Result<Propagation> {
    couplings.validate()?;
    let n = couplings.size();
    if a0.len() != n || noise.waveguides() != n || alphas.is_some_and(|a| a.len() != n) {
        return Err(SimError::BadParameter(format!(
            "dimension mismatch: couplings {n}, a0 {}, noise {}",
            a0.len(),
            noise.waveguides()
        )));
    }
    if z_targets.is_empty() {
        return Err(SimError::EmptyInput("no z targets".into()));
    }
    if z_targets.windows(2).any(|w| w[1] < w[0]) || z_targets[0] < 0.0 {
        return Err(SimError::BadParameter("z targets must be ascending and nonnegative".into()));
    }
    let coverage = noise.coverage();
    let z_max = *z_targets.last().unwrap();
    if z_max > coverage + 1e-9 {
        return Err(SimError::NoiseCoverage { z: z_max, coverage });
    }
    let seg_len = noise.segment_length_mm;
    let lossy = alphas.is_some_and(|a| a.iter().any(|&x| x != 0.0));

    let mut amp = a0.clone();
    let mut z = 0.0f64;
    let mut seg = 0usize;
    // (segment index, eigenvectors, eigenvalues) of the current segment's
    // Hermitian generator; rebuilt lazily when the segment changes.
    let mut eig: Option<(usize, DMatrix<f64>, DVector<f64>)> = None;
    let mut out = Propagation { zs: Vec::new(), amplitudes: Vec::new() };

    for &target in z_targets {
        while target - z > 1e-12 {
            let boundary = (seg as f64 + 1.0) * seg_len;
            let stop = target.min(boundary);
            let dz = stop - z;
            if dz > 1e-12 {
                if lossy {
                    amp = lossy_step(couplings, noise, alphas.unwrap(), seg, dz, &amp)?;
                } else {
                    if eig.as_ref().map(|e| e.0) != Some(seg) {
                        let se = segment_generator(couplings, noise, seg).symmetric_eigen();
                        eig = Some((seg, se.eigenvectors, se.eigenvalues));
                    }
                    let (_, u, lam) = eig.as_ref().unwrap();
                    amp = hermitian_step(u, lam, dz, &amp);
                }
            }
            z = stop;
            if boundary - z <= 1e-12 {
                seg += 1;
            }
        }
        out.zs.push(target);
        out.amplitudes.push(amp.clone());
    }
    Ok(out)
}

fn segment_generator(couplings: &CouplingMatrix, noise: &NoiseMap, seg: usize) -> DMatrix<f64> {
    let n = couplings.size();
    let mut m = couplings.entries.clone();
    for i in 0..n {
        m[(i, i)] = noise.dbeta[i][seg];
    }
    m
}

/// amp -> U exp(-i lambda dz) U^T amp, via split real matvecs.
fn hermitian_step(
    u: &DMatrix<f64>,
    lam: &DVector<f64>,
    dz: f64,
    amp: &DVector<Complex<f64>>,
) -> DVector<Complex<f64>> {
    let re = amp.map(|z| z.re);
    let im = amp.map(|z| z.im);
    let mut tre = u.tr_mul(&re);
    let mut tim = u.tr_mul(&im);
    for k in 0..lam.len() {
        let (s, c) = (-lam[k] * dz).sin_cos();
        let (a, b) = (tre[k], tim[k]);
        tre[k] = a * c - b * s;
        tim[k] = a * s + b * c;
    }
    let ore = u * tre;
    let oim = u * tim;
    DVector::from_fn(amp.len(), |i, _| Complex::new(ore[i], oim[i]))
}

fn lossy_step(
    couplings: &CouplingMatrix,
    noise: &NoiseMap,
    alphas: &[f64],
    seg: usize,
    dz: f64,
    amp: &DVector<Complex<f64>>,
) -> Result<DVector<Complex<f64>>> {
    let n = couplings.size();
    let m = segment_generator(couplings, noise, seg);
    let mut a = DMatrix::<Complex<f64>>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            // exp(-i dz (M - i/2 diag(alpha))).
            let herm = Complex::new(0.0, -dz) * Complex::new(m[(i, j)], 0.0);
            let decay = if i == j {
                Complex::new(-0.5 * dz * alphas[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            };
            a[(i, j)] = herm + decay;
        }
    }
    Ok(expm(&a)? * amp)
}

/// Power fraction in the sink, normalized by total output power as the
/// camera measurement is.
pub fn sink_fraction(amp: &DVector<Complex<f64>>, sink_indices: &[usize]) -> f64 {
    let total: f64 = amp.iter().map(|z| z.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let sink: f64 = sink_indices.iter().map(|&i| amp[i].norm_sqr()).sum();
    sink / total
}

#[derive(Debug, Clone)]
pub struct EnsembleTrace {
    pub zs: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub n: usize,
    pub per_realization: Vec<Vec<f64>>,
}

/// Sink fraction vs z, averaged over noise realizations seeded
/// base_seed..base_seed+n. Order-independent: rows are merged by
/// realization index.
pub fn ensemble_efficiency(
    couplings: &CouplingMatrix,
    input: usize,
    sink_indices: &[usize],
    params: &PhotonicParams,
    z_grid: &[f64],
    n_realizations: usize,
    base_seed: u64,
) -> Result<EnsembleTrace> {
    use rayon::prelude::*;
    params.validate()?;
    if n_realizations == 0 {
        return Err(SimError::BadParameter("need at least one realization".into()));
    }
    let n = couplings.size();
    if input >= n {
        return Err(SimError::NodeOutOfRange { node: input, count: n });
    }
    let total_length = z_grid.last().copied().unwrap_or(0.0);
    let alphas = (params.maze_loss_db > 0.0)
        .then(|| loss_alphas(n, sink_indices, params.maze_loss_db, params.reference_length));
    let a0 = unit_input(n, input);

    let per_realization: Vec<Vec<f64>> = (0..n_realizations)
        .into_par_iter()
        .map(|idx| {
            let noise =
                sample_noise_map(params, total_length, n, sink_indices, base_seed + idx as u64)?;
            let prop = propagate(&a0, couplings, &noise, alphas.as_deref(), z_grid)?;
            Ok(prop.amplitudes.iter().map(|a| sink_fraction(a, sink_indices)).collect())
        })
        .collect::<Result<_>>()?;

    let mut mean = vec![0.0; z_grid.len()];
    let mut std = vec![0.0; z_grid.len()];
    for (zi, m) in mean.iter_mut().enumerate() {
        *m = per_realization.iter().map(|r| r[zi]).sum::<f64>() / n_realizations as f64;
    }
    if n_realizations > 1 {
        for (zi, s) in std.iter_mut().enumerate() {
            let var = per_realization.iter().map(|r| (r[zi] - mean[zi]).powi(2)).sum::<f64>()
                / (n_realizations - 1) as f64;
            *s = var.sqrt();
        }
    }
    Ok(EnsembleTrace { zs: z_grid.to_vec(), mean, std, n: n_realizations, per_realization })
}

pub fn unit_input(n: usize, input: usize) -> DVector<Complex<f64>> {
    let mut a0 = DVector::from_element(n, Complex::new(0.0, 0.0));
    a0[input] = Complex::new(1.0, 0.0);
    a0
}

#[derive(Debug, Clone)]
pub struct Calibration {
    pub best_p: f64,
    pub residual: f64,
    /// RMS distance per candidate p, in grid order.
    pub table: Vec<(f64, f64)>,
}

/// Finds the Lindblad mixing p whose E(p, t) best matches the ensemble
/// trace in root-mean-square, with z (mm) read directly as t (the coupling
/// rate kappa in 1/mm plays the role of T).
pub fn calibrate_p(
    ensemble: &EfficiencyTrace,
    couplings: &CouplingMatrix,
    attach: usize,
    start: usize,
    gamma: f64,
    p_grid: &[f64],
) -> Result<Calibration> {
    use rayon::prelude::*;
    if ensemble.times.is_empty() || ensemble.times.len() != ensemble.values.len() {
        return Err(SimError::EmptyInput("empty or ragged ensemble trace".into()));
    }
    if p_grid.is_empty() {
        return Err(SimError::EmptyInput("empty p grid".into()));
    }
    let t_end = *ensemble.times.last().unwrap();
    if !(t_end > 0.0) {
        return Err(SimError::BadParameter("ensemble trace must extend past t=0".into()));
    }
    let table: Vec<(f64, f64)> = p_grid
        .par_iter()
        .map(|&p| {
            let gen = qsw::build_generator(couplings, p, Some(SinkSpec { attach, gamma }))?;
            let h = if gen.max_rate() > 0.0 { 0.1 / gen.max_rate() } else { t_end };
            let rho0 = qsw::pure_state(gen.dim(), start);
            let opts = EvolveOptions { sample_count: 400, ..Default::default() };
            let traj = qsw::evolve(&gen, &rho0, t_end, h, &opts)?;
            let e = qsw::transfer_efficiency(&traj)?;
            let mut sq = 0.0;
            for (&t, &v) in ensemble.times.iter().zip(&ensemble.values) {
                let model = interp(&e.times, &e.values, t);
                sq += (model - v).powi(2);
            }
            Ok((p, (sq / ensemble.times.len() as f64).sqrt()))
        })
        .collect::<Result<_>>()?;
    let (best_p, residual) = table.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    Ok(Calibration { best_p, residual, table })
}

/// Linear interpolation on an ascending grid; clamps at the ends.
fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    match xs.binary_search_by(|v| v.total_cmp(&x)) {
        Ok(i) => ys[i],
        Err(0) => ys[0],
        Err(i) if i >= xs.len() => *ys.last().unwrap(),
        Err(i) => {
            let w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            ys[i - 1] * (1.0 - w) + ys[i] * w
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pair(kappa: f64) -> CouplingMatrix {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = kappa;
        m[(1, 0)] = kappa;
        CouplingMatrix { entries: m, nn_value: kappa, nnn_value: 0.0 }
    }

    fn quiet(n: usize, segments: usize, seg_len: f64) -> NoiseMap {
        NoiseMap { seed: 0, segment_length_mm: seg_len, dbeta: vec![vec![0.0; segments]; n] }
    }

    #[test]
    fn directional_coupler_closed_form() {
        let kappa = 0.4;
        let c = pair(kappa);
        let noise = quiet(2, 1, 100.0);
        let a0 = unit_input(2, 0);
        let zs: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let prop = propagate(&a0, &c, &noise, None, &zs).unwrap();
        for (zi, &z) in prop.zs.iter().enumerate() {
            let p2 = prop.amplitudes[zi][1].norm_sqr();
            assert_relative_eq!(p2, (kappa * z).sin().powi(2), epsilon = 1e-10);
        }
        let full = std::f64::consts::FRAC_PI_2 / kappa;
        let prop = propagate(&a0, &c, &noise, None, &[full]).unwrap();
        assert_relative_eq!(prop.amplitudes[0][1].norm_sqr(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn single_guide_noise_is_phase_only() {
        let c = CouplingMatrix { entries: DMatrix::zeros(1, 1), nn_value: 1.0, nnn_value: 0.0 };
        let noise = NoiseMap { seed: 1, segment_length_mm: 2.0, dbeta: vec![vec![0.3, -0.8, 0.5]] };
        let a0 = unit_input(1, 0);
        let prop = propagate(&a0, &c, &noise, None, &[1.0, 3.5, 6.0]).unwrap();
        for a in &prop.amplitudes {
            assert_relative_eq!(a[0].norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn detuned_coupler_max_transfer() {
        // Constant detuning difference 0.8 with kappa 0.4: maximum transfer
        // kappa^2/(kappa^2 + (dbeta/2)^2) = 1/2 at z = pi/(2 Omega).
        let kappa = 0.4;
        let c = pair(kappa);
        let noise =
            NoiseMap { seed: 0, segment_length_mm: 100.0, dbeta: vec![vec![0.4], vec![-0.4]] };
        let omega = (kappa * kappa + 0.4f64 * 0.4).sqrt();
        let z_peak = std::f64::consts::FRAC_PI_2 / omega;
        let prop = propagate(&unit_input(2, 0), &c, &noise, None, &[z_peak]).unwrap();
        assert_relative_eq!(prop.amplitudes[0][1].norm_sqr(), 0.5, epsilon = 1e-10);
        assert_relative_eq!(z_peak, 2.7768018363489784, epsilon = 1e-12);
    }

    #[test]
    fn norm_conservation_and_composition() {
        let params = PhotonicParams::default();
        let mut m = DMatrix::zeros(4, 4);
        for i in 0..3 {
            m[(i, i + 1)] = 0.4;
            m[(i + 1, i)] = 0.4;
        }
        let c = CouplingMatrix { entries: m, nn_value: 0.4, nnn_value: 0.0 };
        let noise = sample_noise_map(&params, 30.0, 4, &[], 42).unwrap();
        let a0 = unit_input(4, 0);
        let zs: Vec<f64> = (0..=30).map(|i| i as f64).collect();
        let prop = propagate(&a0, &c, &noise, None, &zs).unwrap();
        for a in &prop.amplitudes {
            let norm: f64 = a.iter().map(|z| z.norm_sqr()).sum();
            assert!((norm - 1.0).abs() <= 1e-9, "norm drifted: {norm}");
        }
        // Composition: stopping at a segment boundary and restarting with
        // the remaining segments reproduces the direct run.
        let stage1 = propagate(&a0, &c, &noise, None, &[12.0]).unwrap();
        let stage2 =
            propagate(&stage1.amplitudes[0], &c, &shifted(&noise, 12.0), None, &[15.0]).unwrap();
        let direct = propagate(&a0, &c, &noise, None, &[27.0]).unwrap();
        for i in 0..4 {
            assert_relative_eq!(
                stage2.amplitudes[0][i].re,
                direct.amplitudes[0][i].re,
                epsilon = 1e-10
            );
            assert_relative_eq!(
                stage2.amplitudes[0][i].im,
                direct.amplitudes[0][i].im,
                epsilon = 1e-10
            );
        }
    }

    /// Noise map with the first `cut` mm of segments dropped (cut must be a
    /// segment boundary).
    fn shifted(noise: &NoiseMap, cut: f64) -> NoiseMap {
        let skip = (cut / noise.segment_length_mm).round() as usize;
        NoiseMap {
            seed: noise.seed,
            segment_length_mm: noise.segment_length_mm,
            dbeta: noise.dbeta.iter().map(|row| row[skip..].to_vec()).collect(),
        }
    }

    #[test]
    fn coverage_is_enforced() {
        let c = pair(0.4);
        let noise = quiet(2, 3, 3.0);
        let err = propagate(&unit_input(2, 0), &c, &noise, None, &[10.0]);
        assert!(matches!(err, Err(SimError::NoiseCoverage { .. })));
    }

    #[test]
    fn beer_lambert_loss() {
        // One lossy guide, no couplings: 2 dB over 60 mm -> 10^-0.2 power.
        let c = CouplingMatrix { entries: DMatrix::zeros(1, 1), nn_value: 1.0, nnn_value: 0.0 };
        let noise = quiet(1, 1, 60.0);
        let alphas = loss_alphas(1, &[], 2.0, 60.0);
        assert_relative_eq!(alphas[0], 0.007675283643313485, epsilon = 1e-12);
        let prop = propagate(&unit_input(1, 0), &c, &noise, Some(&alphas), &[60.0]).unwrap();
        assert_relative_eq!(prop.amplitudes[0][0].norm_sqr(), 10f64.powf(-0.2), epsilon = 1e-10);
    }

    #[test]
    fn sink_only_excitation_is_lossless() {
        let c = pair(0.4);
        let noise = quiet(2, 1, 60.0);
        let alphas = loss_alphas(2, &[1], 2.0, 60.0);
        // Start fully in guide 1 (the sink); with the coupling removed no
        // power ever reaches the lossy guide, so the norm must hold exactly.
        let mut uncoupled = c.clone();
        uncoupled.entries[(0, 1)] = 0.0;
        uncoupled.entries[(1, 0)] = 0.0;
        let prop =
            propagate(&unit_input(2, 1), &uncoupled, &noise, Some(&alphas), &[60.0]).unwrap();
        let norm: f64 = prop.amplitudes[0].iter().map(|z| z.norm_sqr()).sum();
        assert_relative_eq!(norm, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn measured_fraction_bounds_transferred_fraction() {
        // With maze-only loss, normalizing by output power can only raise
        // the sink fraction above the input-normalized transferred power.
        let mut m = DMatrix::zeros(3, 3);
        for (i, j) in [(0, 1), (1, 2)] {
            m[(i, j)] = 0.4;
            m[(j, i)] = 0.4;
        }
        let c = CouplingMatrix { entries: m, nn_value: 0.4, nnn_value: 0.0 };
        let sink = [2usize];
        let noise = quiet(3, 1, 60.0);
        let alphas = loss_alphas(3, &sink, 2.0, 60.0);
        let prop = propagate(&unit_input(3, 0), &c, &noise, Some(&alphas), &[60.0]).unwrap();
        let amp = &prop.amplitudes[0];
        let measured = sink_fraction(amp, &sink);
        let transferred: f64 = sink.iter().map(|&i| amp[i].norm_sqr()).sum();
        assert!(measured >= transferred);
        assert!(measured > 0.0);
    }

    #[test]
    fn sink_fraction_trivial_cases() {
        let mut a = unit_input(3, 2);
        assert_eq!(sink_fraction(&a, &[2]), 1.0);
        a[2] = Complex::new(0.0, 0.0);
        a[0] = Complex::new(0.7, 0.1);
        assert_eq!(sink_fraction(&a, &[2]), 0.0);
    }

    #[test]
    fn noise_map_shape_and_determinism() {
        let params = PhotonicParams::default();
        let a = sample_noise_map(&params, 60.0, 5, &[3, 4], 7).unwrap();
        assert_eq!(a.segments(), 20);
        assert_eq!(a.waveguides(), 5);
        assert!(a.dbeta[3].iter().all(|&v| v == 0.0));
        assert!(a.dbeta[4].iter().all(|&v| v == 0.0));
        assert!(a.dbeta[0].iter().any(|&v| v != 0.0));
        assert!(a.dbeta[0].iter().all(|&v| v.abs() <= 0.2));
        let b = sample_noise_map(&params, 60.0, 5, &[3, 4], 7).unwrap();
        assert_eq!(a.dbeta, b.dbeta);
        let c = sample_noise_map(&params, 60.0, 5, &[3, 4], 8).unwrap();
        assert_ne!(a.dbeta, c.dbeta);
    }

    #[test]
    fn width_conventions_differ_by_factor_two() {
        let full = PhotonicParams::default();
        let half = PhotonicParams { width: WidthConvention::HalfWidth, ..Default::default() };
        let a = sample_noise_map(&full, 30.0, 2, &[], 3).unwrap();
        let b = sample_noise_map(&half, 30.0, 2, &[], 3).unwrap();
        for (x, y) in a.dbeta[0].iter().zip(&b.dbeta[0]) {
            assert_relative_eq!(2.0 * x, *y, epsilon = 1e-15);
        }
        assert!(b.dbeta[0].iter().any(|&v| v.abs() > 0.2));
    }

    #[test]
    fn zero_noise_ensemble_is_degenerate() {
        let params = PhotonicParams { dbeta_max: 0.0, ..Default::default() };
        let c = pair(0.4);
        let tr = ensemble_efficiency(&c, 0, &[1], &params, &[2.0, 4.0], 3, 11).unwrap();
        assert_eq!(tr.n, 3);
        for zi in 0..2 {
            assert_eq!(tr.std[zi], 0.0);
            for r in &tr.per_realization {
                assert_eq!(r[zi], tr.per_realization[0][zi]);
            }
            assert_relative_eq!(tr.mean[zi], tr.per_realization[0][zi], epsilon = 1e-15);
        }
    }

    #[test]
    fn single_realization_mean_is_the_trace() {
        let params = PhotonicParams::default();
        let c = pair(0.4);
        let tr = ensemble_efficiency(&c, 0, &[1], &params, &[3.0, 6.0], 1, 5).unwrap();
        assert_eq!(tr.per_realization.len(), 1);
        assert_eq!(tr.mean, tr.per_realization[0]);
        assert_eq!(tr.std, vec![0.0, 0.0]);
    }

    #[test]
    fn calibration_self_consistency() {
        // Feed a synthetic Lindblad E(0.1, .) as the "ensemble": the best p
        // on a grid containing 0.1 must be 0.1 with ~zero residual.
        let mut m = DMatrix::zeros(4, 4);
        for i in 0..3 {
            m[(i, i + 1)] = 0.4;
            m[(i + 1, i)] = 0.4;
        }
        let c = CouplingMatrix { entries: m, nn_value: 0.4, nnn_value: 0.0 };
        let gen = qsw::build_generator(&c, 0.1, Some(SinkSpec { attach: 3, gamma: 0.4 })).unwrap();
        let rho0 = qsw::pure_state(5, 0);
        let opts = EvolveOptions { sample_count: 30, ..Default::default() };
        let traj = qsw::evolve(&gen, &rho0, 30.0, 0.05, &opts).unwrap();
        let trace = qsw::transfer_efficiency(&traj).unwrap();
        let cal = calibrate_p(&trace, &c, 3, 0, 0.4, &[0.0, 0.05, 0.1, 0.2, 0.5]).unwrap();
        assert_eq!(cal.best_p, 0.1);
        assert!(cal.residual <= 1e-4, "residual {}", cal.residual);
        assert_eq!(cal.table.len(), 5);
    }

    #[test]
    fn noise_map_json_round_trip() {
        let params = PhotonicParams::default();
        let a = sample_noise_map(&params, 12.0, 3, &[2], 9).unwrap();
        let text = a.to_json().unwrap();
        let b = NoiseMap::from_json(&text).unwrap();
        assert_eq!(a.seed, b.seed);
        assert_eq!(a.dbeta, b.dbeta);
        assert!(NoiseMap::from_json("{\"seed\":1,\"segment_length_mm\":3.0,\"dbeta\":[[1.0],[]]}")
            .is_err());
    }
}
