use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::cmatrix::CMatrix;
use super::geometry::{EnvironmentGeometry, PathlossModel, Vec3};
use crate::error::{MinnError, Result};

/// Free-space amplitude gain `λ / (4π‖p_i − p_j‖)`.
pub fn pathloss(p_i: Vec3, p_j: Vec3, wavelength: f64) -> Result<f64> {
    let d = p_i.distance(p_j);
    if d == 0.0 {
        return Err(MinnError::Domain(format!(
            "pathloss between coincident points {p_i:?}"
        )));
    }
    Ok(wavelength / (4.0 * PI * d))
}

/// Amplitude gain of the path `a → k → b` through one scatterer.
pub fn scattered_gain(
    model: PathlossModel,
    a: Vec3,
    k: Vec3,
    b: Vec3,
    wavelength: f64,
) -> Result<f64> {
    match model {
        PathlossModel::Product => Ok(pathloss(a, k, wavelength)? * pathloss(k, b, wavelength)?),
        PathlossModel::Unfolded => {
            let (d1, d2) = (a.distance(k), k.distance(b));
            if d1 == 0.0 || d2 == 0.0 {
                return Err(MinnError::Domain(format!(
                    "scatterer {k:?} coincides with an array"
                )));
            }
            Ok(wavelength / (4.0 * PI * (d1 + d2)))
        }
    }
}

/// Unit-norm array response toward `direction`, with phases taken relative
/// to `reference`.
pub fn steering_vector(
    elements: &[Vec3],
    reference: Vec3,
    direction: Vec3,
    wavelength: f64,
) -> Result<Vec<Complex64>> {
    let u = direction.unit()?;
    let k = 2.0 * PI / wavelength;
    let norm = (elements.len() as f64).sqrt();
    Ok(elements
        .iter()
        .map(|&e| Complex64::from_polar(1.0 / norm, k * (e - reference).dot(u)))
        .collect())
}

/// Static point scatterers with complex reflection gains.
#[derive(Clone, Debug, PartialEq)]
pub struct ScattererSet {
    pub positions: Vec<Vec3>,
    pub gains: Vec<Complex64>,
}

impl ScattererSet {
    /// Positions uniform in the user box, gains circularly-symmetric CN(0, 1).
    pub fn sample<R: Rng + ?Sized>(geom: &EnvironmentGeometry, rng: &mut R) -> Self {
        let (lo, hi) = (geom.box_min, geom.box_max);
        let mut positions = Vec::with_capacity(geom.scatterers);
        let mut gains = Vec::with_capacity(geom.scatterers);
        for _ in 0..geom.scatterers {
            positions.push(Vec3::new(
                rng.random_range(lo.x..hi.x),
                rng.random_range(lo.y..hi.y),
                rng.random_range(lo.z..hi.z),
            ));
            gains.push(complex_normal(rng, 1.0));
        }
        ScattererSet { positions, gains }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// One draw of CN(0, variance).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// One end of a link: element positions and the reference element.
#[derive(Clone, Copy, Debug)]
pub struct ArrayEnd<'a> {
    pub elements: &'a [Vec3],
    pub reference: Vec3,
}

/// Multipath channel `scale · Σ_k g_k α_k a_b(k) a_a(k)ᴴ` from array `a`
/// (columns) to array `b` (rows), with `g_k` supplied by `gain`.
pub fn channel_sv_with<G>(
    a: ArrayEnd,
    b: ArrayEnd,
    scatterers: &ScattererSet,
    scale: f64,
    wavelength: f64,
    gain: G,
) -> Result<CMatrix>
where
    G: Fn(Vec3, Vec3, Vec3) -> Result<f64>,
{
    if scatterers.is_empty() {
        return Err(MinnError::Contract(
            "channel needs at least one scatterer".into(),
        ));
    }
    let mut h = CMatrix::zeros(b.elements.len(), a.elements.len());
    for (&pk, &alpha) in scatterers.positions.iter().zip(&scatterers.gains) {
        let g = gain(a.reference, pk, b.reference)?;
        let steer_b = steering_vector(b.elements, b.reference, pk - b.reference, wavelength)?;
        let steer_a = steering_vector(a.elements, a.reference, pk - a.reference, wavelength)?;
        let term = CMatrix::outer_conj(&steer_b, &steer_a);
        let coef = alpha * (g * scale);
        for (hv, tv) in h.data_mut().iter_mut().zip(term.data()) {
            *hv += coef * tv;
        }
    }
    Ok(h)
}

/// [`channel_sv_with`] using the geometry's pathloss model.
pub fn channel_sv(
    geom: &EnvironmentGeometry,
    a: ArrayEnd,
    b: ArrayEnd,
    scatterers: &ScattererSet,
    scale: f64,
) -> Result<CMatrix> {
    let (model, wl) = (geom.pathloss_model, geom.wavelength);
    channel_sv_with(a, b, scatterers, scale, wl, |pa, pk, pb| {
        scattered_gain(model, pa, pk, pb, wl)
    })
}

/// Rank-one line-of-sight channel from the TX array to the first SIM layer,
/// `√(N_t N) · P^L · a_m a_tᴴ`.
pub fn channel_tx_sim(geom: &EnvironmentGeometry) -> Result<CMatrix> {
    let tx = geom.tx_elements();
    let sim = geom.layer_elements(1);
    let (pt, pm) = (geom.p_tx, geom.p_sim_origin);
    let gain = pathloss(pt, pm, geom.wavelength)?;
    let a_m = steering_vector(&sim, pm, pt - pm, geom.wavelength)?;
    let a_t = steering_vector(&tx, pt, pm - pt, geom.wavelength)?;
    let scale = ((geom.n_t * geom.n) as f64).sqrt() * gain;
    Ok(CMatrix::outer_conj(&a_m, &a_t).scale(scale))
}
