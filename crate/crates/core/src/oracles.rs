//! Independent reference dynamics for cross-validating both engines:
//! the classical rate walk (p=1 limit), the pure Schrodinger walk (p=0
//! limit), Bessel closed forms for the uniform chain, and the
//! 101-waveguide linear-array decoherence benchmark.

use crate::couplings::CouplingMatrix;
use crate::error::{Result, SimError};
use crate::photonic::{propagate, sample_noise_map, unit_input, PhotonicParams, WidthConvention};
use crate::qsw::{self, EvolveOptions};
use nalgebra::{Complex, DMatrix, DVector};

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(SimError::EmptyInput("no sample times".into()));
    }
    if times[0] < 0.0 || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(SimError::BadParameter("times must be ascending and nonnegative".into()));
    }
    Ok(())
}

/// dP_i/dt = sum_j T_ij^2 (P_j - P_i), solved exactly through the
/// eigendecomposition of the symmetric rate generator.
pub fn classical_rate_walk(
    pop0: &[f64],
    couplings: &CouplingMatrix,
    times: &[f64],
) -> Result<Vec<Vec<f64>>> {
    couplings.validate()?;
    check_times(times)?;
    let n = couplings.size();
    if pop0.len() != n {
        return Err(SimError::BadParameter("pop0 length mismatch".into()));
    }
    if pop0.iter().any(|&p| p < 0.0) || pop0.iter().sum::<f64>() > 1.0 + 1e-9 {
        return Err(SimError::BadParameter("pop0 must be a subnormalized distribution".into()));
    }
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut w = 0.0;
        for j in 0..n {
            let r = couplings.entries[(i, j)].powi(2);
            g[(i, j)] = r;
            w += r;
        }
        g[(i, i)] = -w;
    }
    let eig = g.symmetric_eigen();
    let u = &eig.eigenvectors;
    let p0 = DVector::from_column_slice(pop0);
    let modes = u.tr_mul(&p0);
    Ok(times
        .iter()
        .map(|&t| {
            let scaled = DVector::from_fn(n, |k, _| modes[k] * (eig.eigenvalues[k] * t).exp());
            (u * scaled).iter().copied().collect()
        })
        .collect())
}

/// psi(t) = exp(-i H t) psi0 with H the (real symmetric) coupling matrix.
pub fn schrodinger_walk(
    psi0: &DVector<Complex<f64>>,
    couplings: &CouplingMatrix,
    times: &[f64],
) -> Result<Vec<DVector<Complex<f64>>>> {
    couplings.validate()?;
    check_times(times)?;
    let n = couplings.size();
    if psi0.len() != n {
        return Err(SimError::BadParameter("psi0 length mismatch".into()));
    }
    let eig = couplings.entries.clone().symmetric_eigen();
    let u = &eig.eigenvectors;
    let re = psi0.map(|z| z.re);
    let im = psi0.map(|z| z.im);
    let (mre, mim) = (u.tr_mul(&re), u.tr_mul(&im));
    Ok(times
        .iter()
        .map(|&t| {
            let mut vre = DVector::zeros(n);
            let mut vim = DVector::zeros(n);
            for k in 0..n {
                let (s, c) = (-eig.eigenvalues[k] * t).sin_cos();
                vre[k] = mre[k] * c - mim[k] * s;
                vim[k] = mre[k] * s + mim[k] * c;
            }
            let (ore, oim) = (u * vre, u * vim);
            DVector::from_fn(n, |i, _| Complex::new(ore[i], oim[i]))
        })
        .collect())
}

/// Bessel function of the first kind, integer order.
pub fn bessel_jn(n: i32, x: f64) -> f64 {
    libm::jn(n, x)
}

/// |J_{n-center}(2 kappa z)|^2: the uniform infinite chain's intensity
/// profile, valid away from the array boundary.
pub fn chain_bessel_profile(count: usize, center: usize, kappa: f64, z: f64) -> Vec<f64> {
    (0..count).map(|n| bessel_jn(n as i32 - center as i32, 2.0 * kappa * z).powi(2)).collect()
}

#[derive(Debug, Clone)]
pub struct LinearArraySpec {
    pub count: usize,
    /// Propagation length, mm.
    pub length: f64,
    pub kappa: f64,
    pub segment_length: f64,
    pub n_realizations: usize,
    pub base_seed: u64,
    pub width: WidthConvention,
}

impl Default for LinearArraySpec {
    fn default() -> Self {
        LinearArraySpec {
            count: 101,
            length: 50.0,
            kappa: 0.4,
            segment_length: 3.0,
            n_realizations: 200,
            base_seed: 1,
            width: WidthConvention::FullWidth,
        }
    }
}

impl LinearArraySpec {
    pub fn center(&self) -> usize {
        self.count / 2
    }

    fn couplings(&self) -> CouplingMatrix {
        let mut m = DMatrix::zeros(self.count, self.count);
        for i in 0..self.count - 1 {
            m[(i, i + 1)] = self.kappa;
            m[(i + 1, i)] = self.kappa;
        }
        CouplingMatrix { entries: m, nn_value: self.kappa, nnn_value: 0.0 }
    }

    fn params(&self, dbeta_max: f64) -> PhotonicParams {
        PhotonicParams {
            kappa: self.kappa,
            nnn_ratio: 0.0,
            dbeta_max,
            segment_length: self.segment_length,
            sink_length: 0,
            maze_loss_db: 0.0,
            reference_length: self.length,
            width: self.width,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ArrayProfile {
    pub dbeta_max: f64,
    /// Ensemble-mean intensity per waveguide at the final length.
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Ensemble-mean output intensity at spec.length for each noise amplitude,
/// center-waveguide excitation.
pub fn linear_array_profiles(
    spec: &LinearArraySpec,
    dbeta_list: &[f64],
) -> Result<Vec<ArrayProfile>> {
    dbeta_list
        .iter()
        .map(|&db| {
            let ens = array_ensemble(spec, db, &[spec.length])?;
            let profiles: Vec<&Vec<f64>> = ens.iter().map(|r| &r[0]).collect();
            let n = spec.n_realizations as f64;
            let mean: Vec<f64> =
                (0..spec.count).map(|w| profiles.iter().map(|p| p[w]).sum::<f64>() / n).collect();
            let std: Vec<f64> = (0..spec.count)
                .map(|w| {
                    if spec.n_realizations < 2 {
                        return 0.0;
                    }
                    let var =
                        profiles.iter().map(|p| (p[w] - mean[w]).powi(2)).sum::<f64>() / (n - 1.0);
                    var.sqrt()
                })
                .collect();
            Ok(ArrayProfile { dbeta_max: db, mean, std })
        })
        .collect()
}

/// Per-realization intensity profiles at each z: result[r][zi][waveguide].
fn array_ensemble(
    spec: &LinearArraySpec,
    dbeta_max: f64,
    zs: &[f64],
) -> Result<Vec<Vec<Vec<f64>>>> {
    use rayon::prelude::*;
    if spec.n_realizations == 0 {
        return Err(SimError::BadParameter("need at least one realization".into()));
    }
    let couplings = spec.couplings();
    let params = spec.params(dbeta_max);
    let a0 = unit_input(spec.count, spec.center());
    let total = zs.last().copied().unwrap_or(spec.length);
    (0..spec.n_realizations)
        .into_par_iter()
        .map(|idx| {
            let noise =
                sample_noise_map(&params, total, spec.count, &[], spec.base_seed + idx as u64)?;
            let prop = propagate(&a0, &couplings, &noise, None, zs)?;
            Ok(prop
                .amplitudes
                .iter()
                .map(|amp| amp.iter().map(|z| z.norm_sqr()).collect())
                .collect())
        })
        .collect()
}

/// Lindblad populations on the same chain at t = z (Gamma = 0): the p-grid
/// side of the SI comparison.
pub fn lindblad_chain_profiles(
    spec: &LinearArraySpec,
    p_grid: &[f64],
) -> Result<Vec<(f64, Vec<f64>)>> {
    use rayon::prelude::*;
    let couplings = spec.couplings();
    p_grid
        .par_iter()
        .map(|&p| {
            let gen = qsw::build_generator(&couplings, p, None)?;
            let h = (0.1 / gen.max_rate()).min(0.05);
            let rho0 = qsw::pure_state(spec.count, spec.center());
            let opts = EvolveOptions { sample_count: 1, ..Default::default() };
            let traj = qsw::evolve(&gen, &rho0, spec.length, h, &opts)?;
            Ok((p, traj.populations.last().unwrap().clone()))
        })
        .collect()
}

/// RMS distance between every photonic profile and every Lindblad profile;
/// the pairing is left to the data.
pub fn profile_rms_table(
    photonic: &[ArrayProfile],
    lindblad: &[(f64, Vec<f64>)],
) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity(photonic.len() * lindblad.len());
    for ph in photonic {
        for (p, prof) in lindblad {
            let sq: f64 = ph.mean.iter().zip(prof).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
                / ph.mean.len() as f64;
            out.push((ph.dbeta_max, *p, sq.sqrt()));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct VarianceFit {
    pub gamma: f64,
    /// ln-space intercept of the power-law fit.
    pub ln_amplitude: f64,
    pub zs: Vec<f64>,
    pub variances: Vec<f64>,
}

/// Fits sigma^2(z) = a z^gamma on the ensemble-mean profile, least squares
/// in ln-ln space over zs within `fit_window`.
pub fn variance_gamma(
    spec: &LinearArraySpec,
    dbeta_max: f64,
    zs: &[f64],
    fit_window: (f64, f64),
) -> Result<VarianceFit> {
    check_times(zs)?;
    let ens = array_ensemble(spec, dbeta_max, zs)?;
    let n = spec.n_realizations as f64;
    let variances: Vec<f64> = (0..zs.len())
        .map(|zi| {
            let mean_profile: Vec<f64> =
                (0..spec.count).map(|w| ens.iter().map(|r| r[zi][w]).sum::<f64>() / n).collect();
            profile_variance(&mean_profile)
        })
        .collect();
    let pts: Vec<(f64, f64)> = zs
        .iter()
        .zip(&variances)
        .filter(|(&z, &v)| z >= fit_window.0 && z <= fit_window.1 && v > 0.0)
        .map(|(&z, &v)| (z.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(SimError::BadParameter("fit window covers fewer than two samples".into()));
    }
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let gamma = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let ln_amplitude = (sy - gamma * sx) / m;
    Ok(VarianceFit { gamma, ln_amplitude, zs: zs.to_vec(), variances })
}

/// Second moment of the site index about its mean, renormalized so loss of
/// normalization (there is none here) cannot bias it.
pub fn profile_variance(profile: &[f64]) -> f64 {
    let total: f64 = profile.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mu: f64 = profile.iter().enumerate().map(|(n, &p)| n as f64 * p).sum::<f64>() / total;
    profile.iter().enumerate().map(|(n, &p)| (n as f64 - mu).powi(2) * p).sum::<f64>() / total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expm::expm;
    use approx::assert_relative_eq;

    fn uniform(n: usize, edges: &[(usize, usize)], t: f64) -> CouplingMatrix {
        let mut m = DMatrix::zeros(n, n);
        for &(a, b) in edges {
            m[(a, b)] = t;
            m[(b, a)] = t;
        }
        CouplingMatrix { entries: m, nn_value: t, nnn_value: 0.0 }
    }

    #[test]
    fn classical_two_site_closed_form() {
        let c = uniform(2, &[(0, 1)], 1.0);
        let traj = classical_rate_walk(&[1.0, 0.0], &c, &[0.0, 1.0]).unwrap();
        assert_relative_eq!(traj[0][0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(traj[1][0], 0.5676676416183064, epsilon = 1e-12);
        assert_relative_eq!(traj[1][1], 1.0 - 0.5676676416183064, epsilon = 1e-12);
    }

    #[test]
    fn classical_uniform_ring_is_stationary() {
        let c = uniform(4, &[(0, 1), (1, 2), (2, 3), (0, 3)], 0.7);
        let traj = classical_rate_walk(&[0.25; 4], &c, &[5.0]).unwrap();
        for &p in &traj[0] {
            assert_relative_eq!(p, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn classical_star_matches_brute_force_expm() {
        let c = uniform(4, &[(0, 1), (0, 2), (0, 3)], 0.9);
        let t = 1.7;
        let traj = classical_rate_walk(&[1.0, 0.0, 0.0, 0.0], &c, &[t]).unwrap();
        // Brute force: exp(G t) column 0 of the rate generator.
        let mut g = DMatrix::<Complex<f64>>::zeros(4, 4);
        for i in 0..4 {
            let mut w = 0.0;
            for j in 0..4 {
                let r = c.entries[(i, j)].powi(2);
                g[(i, j)] = Complex::new(r * t, 0.0);
                w += r;
            }
            g[(i, i)] = Complex::new(-w * t, 0.0);
        }
        let e = expm(&g).unwrap();
        for i in 0..4 {
            assert_relative_eq!(traj[0][i], e[(i, 0)].re, epsilon = 1e-8);
        }
    }

    #[test]
    fn classical_conservation_and_nonnegativity() {
        let c = uniform(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)], 1.3);
        let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let traj = classical_rate_walk(&[0.0, 1.0, 0.0, 0.0, 0.0], &c, &times).unwrap();
        for pops in &traj {
            let sum: f64 = pops.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-10);
            assert!(pops.iter().all(|&p| p >= -1e-12));
        }
    }

    #[test]
    fn schrodinger_two_site_rabi() {
        let c = uniform(2, &[(0, 1)], 1.0);
        let psi0 = unit_input(2, 0);
        let traj = schrodinger_walk(&psi0, &c, &[0.0, 1.2]).unwrap();
        assert_relative_eq!(traj[0][0].re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(traj[1][1].norm_sqr(), 0.8686968577706229, epsilon = 1e-12);
        for psi in &traj {
            let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
            assert!((norm - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn bessel_reference_values() {
        // Reference values from an independent special-function library.
        for (n, x, v) in [
            (0, 1.0, 0.7651976865579666),
            (1, 1.0, 0.44005058574493355),
            (5, 2.0, 0.007039629755871686),
            (0, 40.0, 0.0073668905842372906),
            (20, 40.0, 0.12779393355084895),
            (39, 40.0, 0.16525394135148366),
            (45, 40.0, 0.0162087734993944),
            (3, 24.0, 0.16127035997227665),
        ] {
            assert_relative_eq!(bessel_jn(n, x), v, epsilon = 1e-14, max_relative = 1e-13);
        }
        // Negative order symmetry J_{-n} = (-1)^n J_n.
        assert_relative_eq!(bessel_jn(-3, 24.0), -bessel_jn(3, 24.0), epsilon = 1e-15);
    }

    #[test]
    fn schrodinger_chain_matches_bessel_inside_light_cone() {
        let count = 201;
        let center = 100;
        let c = {
            let mut m = DMatrix::zeros(count, count);
            for i in 0..count - 1 {
                m[(i, i + 1)] = 1.0;
                m[(i + 1, i)] = 1.0;
            }
            CouplingMatrix { entries: m, nn_value: 1.0, nnn_value: 0.0 }
        };
        let t = 10.0;
        let traj = schrodinger_walk(&unit_input(count, center), &c, &[t]).unwrap();
        let reference = chain_bessel_profile(count, center, 1.0, t);
        for n in center - 30..=center + 30 {
            assert_relative_eq!(traj[0][n].norm_sqr(), reference[n], epsilon = 1e-9);
        }
    }

    #[test]
    fn coherent_array_variance_is_exactly_ballistic() {
        let spec =
            LinearArraySpec { count: 61, length: 20.0, n_realizations: 1, ..Default::default() };
        let zs: Vec<f64> = (1..=10).map(|i| i as f64 * 2.0).collect();
        let fit = variance_gamma(&spec, 0.0, &zs, (2.0, 20.0)).unwrap();
        assert_relative_eq!(fit.gamma, 2.0, epsilon = 1e-6);
        // sigma^2 = 2 (kappa z)^2 in site units.
        for (&z, &v) in zs.iter().zip(&fit.variances) {
            assert_relative_eq!(v, 2.0 * (spec.kappa * z).powi(2), max_relative = 1e-8);
        }
    }

    #[test]
    fn noisy_array_smoke() {
        let spec =
            LinearArraySpec { count: 31, length: 12.0, n_realizations: 8, ..Default::default() };
        let profiles = linear_array_profiles(&spec, &[0.0, 1.6]).unwrap();
        assert_eq!(profiles.len(), 2);
        for p in &profiles {
            let sum: f64 = p.mean.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-9, "profile not normalized: {sum}");
        }
        assert!(profiles[0].std.iter().all(|&s| s <= 1e-12));
        assert!(profiles[1].std.iter().any(|&s| s > 0.0));
        // Noise suppresses the ballistic lobes, pulling weight toward the center.
        let lobes = |prof: &[f64]| prof[2] + prof[28];
        assert!(lobes(&profiles[1].mean) < lobes(&profiles[0].mean));

        let lind = lindblad_chain_profiles(&spec, &[0.0, 1.0]).unwrap();
        let table = profile_rms_table(&profiles, &lind);
        assert_eq!(table.len(), 4);
        // Coherent photonic matches p=0 essentially exactly.
        let coh_p0 = table.iter().find(|r| r.0 == 0.0 && r.1 == 0.0).unwrap().2;
        assert!(coh_p0 <= 1e-6, "coherent/p=0 RMS {coh_p0}");
    }

    #[test]
    fn variance_of_delta_profile_is_zero() {
        let mut prof = vec![0.0; 11];
        prof[5] = 1.0;
        assert_eq!(profile_variance(&prof), 0.0);
        prof[4] = 1.0;
        prof[6] = 1.0;
        assert_relative_eq!(profile_variance(&prof), 2.0 / 3.0, epsilon = 1e-14);
    }
}
