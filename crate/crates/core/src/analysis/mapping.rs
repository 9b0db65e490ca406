//! Boundary regularity diagnostics for a holomorphic map `Phi: D1 -> D2`:
//! preservation of the normal direction, the exponent in
//! `d2(Phi(z)) <= C d1(z)^alpha`, and the Hölder order along normal rays.
//!
//! Normal vectors are unit vectors, so the identity has preservation ratio
//! exactly 1 (the ratios for the `2 sqrt 2` scaled complex normal are twice
//! these).

use serde::Serialize;

use crate::analysis::fit::{fit_blowup_exponent, log_grid};
use crate::cvector::CVector;
use crate::distance::{boundary_projection, boundary_samples_base, signed_distance};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::holomap::HoloMapSpec;
use crate::par;

#[derive(Debug, Clone)]
pub struct MapSampleOptions {
    /// Boundary base points, each giving one inward normal ray.
    pub rays: usize,
    pub seed: u64,
    /// Depths along each ray, decreasing.
    pub deltas: Vec<f64>,
}

impl Default for MapSampleOptions {
    fn default() -> Self {
        MapSampleOptions {
            rays: 16,
            seed: 1,
            deltas: log_grid(1e-1, 1e-4, 7),
        }
    }
}

/// Inward normal ray `p(t) = q - t n(q)` from a boundary point `q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalRay {
    pub base: CVector,
    /// Outward unit normal at `base`.
    pub normal: CVector,
}

impl NormalRay {
    pub fn at(&self, t: f64) -> CVector {
        &self.base - &self.normal.scale_real(t)
    }
}

/// Seeded normal rays of `dom`; base points whose normal cannot be computed
/// are dropped.
pub fn normal_rays(dom: &DomainSpec, count: usize, seed: u64) -> Vec<NormalRay> {
    let bases: Vec<CVector> = boundary_samples_base(dom, count, seed)
        .into_iter()
        .map(|b| dom.frame.from_base(&b))
        .collect();
    par::map(&bases, |q| {
        let proj = boundary_projection(dom, q).ok()?;
        Some(NormalRay {
            base: proj.point,
            normal: proj.normal,
        })
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Preservation ratios at one sample point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalSample {
    pub delta: f64,
    /// `|Phi_* N| / |<Phi_* N, N_2>|`.
    pub complex_ratio: f64,
    /// `|Phi_* n| / |Re <Phi_* n, n_2>|`.
    pub real_ratio: f64,
    /// `|angle(Phi_* n, n_2) - pi / 2|`, the distance of the image of the
    /// normal from the tangent hyperplane.
    pub angle_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalPreservation {
    pub complex_sup: f64,
    pub real_sup: f64,
    pub min_angle_offset: f64,
    /// Samples with a vanishing pairing (infinite ratio).
    pub infinite: usize,
    /// `real_ratio >= complex_ratio` at every sample, so a finite real
    /// constant bounds the complex one.
    pub real_implies_complex: bool,
    pub samples: Vec<NormalSample>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

/// Ratios at `z = p(delta)`, where the normal of `dom1` is the ray
/// direction. Fails when `Phi(z)` is outside the tubular neighbourhood of
/// `dom2`.
fn normal_sample(map: &HoloMapSpec, dom2: &DomainSpec, ray: &NormalRay, delta: f64) -> Result<NormalSample> {
    let z = ray.at(delta);
    let w = map.eval(&z)?;
    let n2 = boundary_projection(dom2, &w)?.normal;
    let v = map.pushforward(&z, &ray.normal)?;
    let len = v.norm();
    let pairing = v.inner(&n2);
    let cos = if len > 0.0 { (pairing.re / len).clamp(-1.0, 1.0) } else { 0.0 };
    Ok(NormalSample {
        delta,
        complex_ratio: ratio(len, pairing.norm()),
        real_ratio: ratio(len, pairing.re.abs()),
        angle_offset: (cos.acos() - std::f64::consts::FRAC_PI_2).abs(),
    })
}

/// Sup of the preservation ratios over the points `p(delta)` of `rays`.
pub fn check_normal_preservation(
    map: &HoloMapSpec,
    dom1: &DomainSpec,
    dom2: &DomainSpec,
    rays: &[NormalRay],
    deltas: &[f64],
) -> Result<NormalPreservation> {
    check_map_dims(map, dom1, dom2)?;
    let jobs: Vec<(&NormalRay, f64)> = rays.iter().flat_map(|r| deltas.iter().map(move |&d| (r, d))).collect();
    if jobs.is_empty() {
        return Err(Error::InvalidArgument("no sample points".into()));
    }
    let samples = par::map(&jobs, |(r, d)| normal_sample(map, dom2, r, *d))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let sup = |f: fn(&NormalSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
    Ok(NormalPreservation {
        complex_sup: sup(|s| s.complex_ratio),
        real_sup: sup(|s| s.real_ratio),
        min_angle_offset: samples.iter().map(|s| s.angle_offset).fold(f64::INFINITY, f64::min),
        infinite: samples.iter().filter(|s| !s.complex_ratio.is_finite()).count(),
        real_implies_complex: samples
            .iter()
            .all(|s| s.real_ratio >= s.complex_ratio * (1.0 - 1e-12)),
        samples,
    })
}

fn check_map_dims(map: &HoloMapSpec, dom1: &DomainSpec, dom2: &DomainSpec) -> Result<()> {
    if map.dim_in != dom1.dim() {
        return Err(Error::DimensionMismatch {
            expected: dom1.dim(),
            got: map.dim_in,
        });
    }
    if map.dim_out() != dom2.dim() {
        return Err(Error::DimensionMismatch {
            expected: dom2.dim(),
            got: map.dim_out(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DfAlpha {
    /// Least per-ray slope of `log d2(Phi(z))` against `log d1(z)`.
    pub alpha: f64,
    /// Smallest `C` with `d2 <= C d1^alpha` on the samples.
    pub constant: f64,
    pub per_ray: Vec<f64>,
    /// Rays without four usable samples.
    pub skipped_rays: usize,
}

/// `(d1(z), d2(Phi(z)))` along one ray, dropping points whose image is not
/// strictly inside `dom2`.
fn ray_distances(map: &HoloMapSpec, dom1: &DomainSpec, dom2: &DomainSpec, ray: &NormalRay, deltas: &[f64]) -> Vec<(f64, f64)> {
    deltas
        .iter()
        .filter_map(|&t| {
            let z = ray.at(t);
            let d1 = -signed_distance(dom1, &z).ok()?;
            let d2 = -signed_distance(dom2, &map.eval(&z).ok()?).ok()?;
            (d1 > 0.0 && d2 > 0.0).then_some((d1, d2))
        })
        .collect()
}

pub fn estimate_df_alpha(
    map: &HoloMapSpec,
    dom1: &DomainSpec,
    dom2: &DomainSpec,
    rays: &[NormalRay],
    deltas: &[f64],
) -> Result<DfAlpha> {
    check_map_dims(map, dom1, dom2)?;
    let per: Vec<Vec<(f64, f64)>> = par::map(rays, |r| ray_distances(map, dom1, dom2, r, deltas));
    let fits: Vec<(f64, &Vec<(f64, f64)>)> = per
        .iter()
        .filter_map(|pts| fit_blowup_exponent(pts).ok().map(|f| (f.slope, pts)))
        .collect();
    if fits.is_empty() {
        return Err(Error::Degenerate(
            "image distances vanish along every ray (map not proper near the samples)".into(),
        ));
    }
    let alpha = fits.iter().map(|f| f.0).fold(f64::INFINITY, f64::min);
    let constant = fits
        .iter()
        .flat_map(|f| f.1.iter())
        .map(|&(d1, d2)| d2 / d1.powf(alpha))
        .fold(0.0, f64::max);
    Ok(DfAlpha {
        alpha,
        constant,
        per_ray: fits.iter().map(|f| f.0).collect(),
        skipped_rays: rays.len() - fits.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderFit {
    /// Least per-ray exponent `gamma` in `|Phi(p(t1)) - Phi(p(t2))| ~ |t1 - t2|^gamma`.
    pub gamma: f64,
    pub per_ray: Vec<f64>,
    /// `alpha / 2`, the order predicted from `d2 <= C d1^alpha`.
    pub predicted: f64,
    /// `2 alpha / 3`, the order predicted when the target is pseudoconvex.
    pub predicted_pseudoconvex: f64,
}

/// Hölder exponent of `Phi` restricted to normal rays, fitted over all pairs
/// `t1 < t2` of `ts` on each ray. Only normal paths are measured.
pub fn holder_exponent_normal_paths(map: &HoloMapSpec, rays: &[NormalRay], ts: &[f64], alpha: f64) -> Result<HolderFit> {
    let per: Vec<Result<f64>> = par::map(rays, |ray| {
        let imgs = ts.iter().map(|&t| map.eval(&ray.at(t))).collect::<Result<Vec<_>>>()?;
        let mut pts = Vec::new();
        for i in 0..ts.len() {
            for j in i + 1..ts.len() {
                let gap = (ts[i] - ts[j]).abs();
                let dist = imgs[i].dist(&imgs[j]);
                if gap > 0.0 && dist > 0.0 {
                    pts.push((gap, dist));
                }
            }
        }
        Ok(fit_blowup_exponent(&pts)?.slope)
    });
    let per_ray = per.into_iter().collect::<Result<Vec<_>>>()?;
    if per_ray.is_empty() {
        return Err(Error::InvalidArgument("no rays".into()));
    }
    Ok(HolderFit {
        gamma: per_ray.iter().copied().fold(f64::INFINITY, f64::min),
        per_ray,
        predicted: alpha / 2.0,
        predicted_pseudoconvex: 2.0 * alpha / 3.0,
    })
}

/// `epsilon / (2n (2 + epsilon))`.
pub fn lempert_alpha(epsilon: f64, n: usize) -> Result<f64> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    Ok(epsilon / (2.0 * n as f64 * (2.0 + epsilon)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapRegularityReport {
    pub normal_preservation_sup_ratio: f64,
    pub real_preservation_sup_ratio: f64,
    pub min_angle_offset: f64,
    pub real_implies_complex: bool,
    pub df_alpha_fit: f64,
    pub df_constant: f64,
    pub holder_exponent_fit: f64,
    pub predicted_holder: f64,
    pub predicted_holder_pseudoconvex: f64,
    pub rays: usize,
    pub skipped_rays: usize,
    pub samples: Vec<NormalSample>,
}

impl MapRegularityReport {
    /// One row per sample point:
    /// `delta,complex_ratio,real_ratio,angle_offset,flags`.
    pub fn to_csv(&self) -> Result<String> {
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["delta", "complex_ratio", "real_ratio", "angle_offset", "flags"])
            .map_err(io)?;
        for s in &self.samples {
            let flag = if s.complex_ratio.is_finite() { "" } else { "zero-pairing" };
            w.write_record([
                format!("{:e}", s.delta),
                format!("{:e}", s.complex_ratio),
                format!("{:e}", s.real_ratio),
                format!("{:e}", s.angle_offset),
                flag.to_string(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
    }
}

/// All three diagnostics on the same seeded rays.
pub fn map_regularity(
    map: &HoloMapSpec,
    dom1: &DomainSpec,
    dom2: &DomainSpec,
    opts: &MapSampleOptions,
) -> Result<MapRegularityReport> {
    let rays = normal_rays(dom1, opts.rays, opts.seed);
    let np = check_normal_preservation(map, dom1, dom2, &rays, &opts.deltas)?;
    let df = estimate_df_alpha(map, dom1, dom2, &rays, &opts.deltas)?;
    let hf = holder_exponent_normal_paths(map, &rays, &opts.deltas, df.alpha)?;
    Ok(MapRegularityReport {
        normal_preservation_sup_ratio: np.complex_sup,
        real_preservation_sup_ratio: np.real_sup,
        min_angle_offset: np.min_angle_offset,
        real_implies_complex: np.real_implies_complex,
        df_alpha_fit: df.alpha,
        df_constant: df.constant,
        holder_exponent_fit: hf.gamma,
        predicted_holder: hf.predicted,
        predicted_holder_pseudoconvex: hf.predicted_pseudoconvex,
        rays: rays.len(),
        skipped_rays: df.skipped_rays,
        samples: np.samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvector::Unitary;
    use crate::models::unit_ball;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_and_unitary_are_exact() {
        let ball = unit_ball(2).unwrap();
        let u = Unitary::random(2, &mut ChaCha8Rng::seed_from_u64(7));
        for map in [HoloMapSpec::identity(2), HoloMapSpec::unitary(&u)] {
            let r = map_regularity(&map, &ball, &ball, &MapSampleOptions::default()).unwrap();
            assert!((r.normal_preservation_sup_ratio - 1.0).abs() < 1e-12, "{r:?}");
            assert!((r.real_preservation_sup_ratio - 1.0).abs() < 1e-12);
            assert!((r.df_alpha_fit - 1.0).abs() < 1e-10, "{}", r.df_alpha_fit);
            assert!((r.holder_exponent_fit - 1.0).abs() < 1e-3, "{}", r.holder_exponent_fit);
            assert!(r.real_implies_complex);
        }
    }

    #[test]
    fn ball_automorphism_is_regular() {
        let ball = unit_ball(2).unwrap();
        let map = HoloMapSpec::ball_automorphism(2, 0.3);
        let r = map_regularity(&map, &ball, &ball, &MapSampleOptions::default()).unwrap();
        assert!(r.normal_preservation_sup_ratio.is_finite() && r.normal_preservation_sup_ratio >= 1.0);
        assert!(r.holder_exponent_fit >= 0.95, "{}", r.holder_exponent_fit);
        assert!((r.df_alpha_fit - 1.0).abs() < 0.05, "{}", r.df_alpha_fit);
        let csv = r.to_csv().unwrap();
        assert_eq!(csv.lines().count(), r.samples.len() + 1);
    }

    #[test]
    fn lempert_values() {
        assert_eq!(lempert_alpha(2.0, 1).unwrap(), 0.25);
        assert!(lempert_alpha(0.0, 1).is_err());
        assert!(lempert_alpha(-1.0, 2).is_err());
        assert!(lempert_alpha(1.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn lempert_monotone(e in 1e-3f64..100.0, de in 1e-3f64..10.0, n in 1usize..20) {
            let a = lempert_alpha(e, n).unwrap();
            prop_assert!(lempert_alpha(e + de, n).unwrap() > a);
            prop_assert!(lempert_alpha(e, n + 1).unwrap() < a);
            prop_assert!(a < 1.0 / (2.0 * n as f64));
        }
    }
}
