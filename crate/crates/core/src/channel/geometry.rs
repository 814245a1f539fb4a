use std::ops::{Add, Mul, Sub};

use crate::error::{MinnError, Result};

/// Cartesian position or direction in meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    /// Unit vector along `self`; zero vectors are a domain error.
    pub fn unit(self) -> Result<Vec3> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(MinnError::Domain(format!(
                "cannot normalize direction {self:?}"
            )));
        }
        Ok(self * (1.0 / n))
    }

    pub fn as_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, c: f64) -> Vec3 {
        Vec3::new(self.x * c, self.y * c, self.z * c)
    }
}

/// How the two hops of a scattered path combine into one amplitude gain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PathlossModel {
    /// Friis gain over the total path length `d_ak + d_kb`.
    #[default]
    Unfolded,
    /// Product of the two single-hop Friis gains.
    Product,
}

impl PathlossModel {
    pub fn name(self) -> &'static str {
        match self {
            PathlossModel::Unfolded => "unfolded",
            PathlossModel::Product => "product",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "unfolded" => Some(PathlossModel::Unfolded),
            "product" => Some(PathlossModel::Product),
            _ => None,
        }
    }
}

/// Physical layout and sizes of the TX, SIM, user region and clutter.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvironmentGeometry {
    pub p_tx: Vec3,
    /// First element of the first SIM layer.
    pub p_sim_origin: Vec3,
    pub box_min: Vec3,
    pub box_max: Vec3,
    pub wavelength: f64,
    pub spacing: f64,
    pub layer_distance: f64,
    pub element_area: f64,
    pub n_t: usize,
    pub n_r: usize,
    /// Elements per SIM layer; must be a perfect square.
    pub n: usize,
    pub layers: usize,
    pub scatterers: usize,
    /// Noise power σ² in W.
    pub noise_power: f64,
    pub pathloss_model: PathlossModel,
    /// Evaluate the inter-layer phase as `exp(j2πd)` with `d` in meters.
    pub paper_literal_psi: bool,
}

impl Default for EnvironmentGeometry {
    fn default() -> Self {
        let wavelength = 1e-2;
        EnvironmentGeometry {
            p_tx: Vec3::new(0.0, 0.0, 4.0),
            p_sim_origin: Vec3::new(0.5, 0.0, 4.0),
            box_min: Vec3::new(1.0, -5.0, 0.5),
            box_max: Vec3::new(25.0, 5.0, 2.5),
            wavelength,
            spacing: wavelength / 2.0,
            layer_distance: 10.0 * wavelength,
            element_area: wavelength * wavelength / 4.0,
            n_t: 16,
            n_r: 8,
            n: 100,
            layers: 4,
            scatterers: 20,
            noise_power: 1e-12,
            pathloss_model: PathlossModel::Unfolded,
            paper_literal_psi: false,
        }
    }
}

impl EnvironmentGeometry {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(MinnError::Contract(what));
        for (axis, lo, hi) in [
            ("x", self.box_min.x, self.box_max.x),
            ("y", self.box_min.y, self.box_max.y),
            ("z", self.box_min.z, self.box_max.z),
        ] {
            if !(lo < hi) {
                return bad(format!("user box {axis} range [{lo}, {hi}] is empty"));
            }
        }
        for (name, v) in [
            ("n_t", self.n_t),
            ("n_r", self.n_r),
            ("n", self.n),
            ("layers", self.layers),
            ("scatterers", self.scatterers),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if self.side() * self.side() != self.n {
            return bad(format!("n = {} is not a perfect square", self.n));
        }
        for (name, v) in [
            ("wavelength", self.wavelength),
            ("spacing", self.spacing),
            ("layer_distance", self.layer_distance),
            ("element_area", self.element_area),
            ("noise_power", self.noise_power),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    /// Elements along one edge of a SIM layer.
    pub fn side(&self) -> usize {
        (self.n as f64).sqrt().round() as usize
    }

    /// Linear array of `count` elements along +y starting at `origin`.
    pub fn linear_array(&self, origin: Vec3, count: usize) -> Vec<Vec3> {
        (0..count)
            .map(|i| origin + Vec3::new(0.0, i as f64 * self.spacing, 0.0))
            .collect()
    }

    pub fn tx_elements(&self) -> Vec<Vec3> {
        self.linear_array(self.p_tx, self.n_t)
    }

    pub fn rx_elements(&self, user: Vec3) -> Vec<Vec3> {
        self.linear_array(user, self.n_r)
    }

    /// Reference (first) element of SIM layer `l`, counted from 1.
    pub fn layer_origin(&self, l: usize) -> Vec3 {
        self.p_sim_origin + Vec3::new((l - 1) as f64 * self.layer_distance, 0.0, 0.0)
    }

    /// Row-major `side × side` lattice of layer `l` in the y–z plane.
    pub fn layer_elements(&self, l: usize) -> Vec<Vec3> {
        let origin = self.layer_origin(l);
        let s = self.side();
        (0..s)
            .flat_map(|r| (0..s).map(move |c| (r, c)))
            .map(|(r, c)| origin + Vec3::new(0.0, c as f64 * self.spacing, r as f64 * self.spacing))
            .collect()
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (self.box_min.x..=self.box_max.x).contains(&p.x)
            && (self.box_min.y..=self.box_max.y).contains(&p.y)
            && (self.box_min.z..=self.box_max.z).contains(&p.z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let g = EnvironmentGeometry::default();
        g.validate().unwrap();
        assert_eq!(g.side(), 10);
        assert!((g.element_area - 2.5e-5).abs() < 1e-20);
        assert!((g.layer_distance - 0.1).abs() < 1e-15);
    }

    #[test]
    fn non_square_layer_is_rejected() {
        let g = EnvironmentGeometry {
            n: 37,
            ..Default::default()
        };
        assert!(g.validate().is_err());
    }

    #[test]
    fn empty_box_and_zero_counts_are_rejected() {
        let mut g = EnvironmentGeometry::default();
        g.box_max.y = g.box_min.y;
        assert!(g.validate().is_err());
        let g = EnvironmentGeometry {
            scatterers: 0,
            ..Default::default()
        };
        assert!(g.validate().is_err());
    }

    #[test]
    fn lattices_are_spaced_and_stacked() {
        let g = EnvironmentGeometry {
            n: 4,
            layers: 3,
            ..Default::default()
        };
        let l3 = g.layer_elements(3);
        assert_eq!(l3.len(), 4);
        assert_eq!(l3[0], Vec3::new(0.5 + 0.2, 0.0, 4.0));
        assert!((l3[1].y - 0.005).abs() < 1e-15);
        assert!((l3[2].z - 4.005).abs() < 1e-15);
    }
}
