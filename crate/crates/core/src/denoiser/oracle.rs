use crate::diffusion::{Denoiser, DenoiserInput, Geometry, Schedules};

/// Returns the exact velocity of a planted clean latent `(h0, w0)`.
///
/// From `z = √ᾱ x + √(1−ᾱ) ε` the noise is `ε = (z − √ᾱ x)/√(1−ᾱ)`, so
/// `v = √ᾱ ε − √(1−ᾱ) x = (√ᾱ z − x)/√(1−ᾱ)`. At `ᾱ = 1` any velocity
/// reconstructs `x = z`; zero is returned there.
#[derive(Debug, Clone)]
pub struct OracleDenoiser {
    geometry: Geometry,
    schedules: Schedules,
    h0: Vec<f64>,
    w0: Vec<f64>,
}

impl OracleDenoiser {
    pub fn new(geometry: Geometry, schedules: Schedules, h0: Vec<f64>, w0: Vec<f64>) -> Self {
        assert_eq!(h0.len(), geometry.h_len());
        assert_eq!(w0.len(), geometry.w_len());
        Self {
            geometry,
            schedules,
            h0,
            w0,
        }
    }
}

fn exact_velocity(z: &[f64], x: &[f64], alpha_bar: f64, out: &mut Vec<f64>) {
    let rest = 1.0 - alpha_bar;
    if rest <= 0.0 {
        out.extend(std::iter::repeat(0.0).take(z.len()));
        return;
    }
    let (a, b) = (alpha_bar.sqrt(), rest.sqrt());
    out.extend(z.iter().zip(x).map(|(z, x)| (a * z - x) / b));
}

impl Denoiser for OracleDenoiser {
    fn geometry(&self) -> Geometry {
        self.geometry
    }

    fn predict(&self, input: &DenoiserInput<'_>) -> (Vec<f64>, Vec<f64>) {
        let (hl, wl) = (self.geometry.h_len(), self.geometry.w_len());
        let mut vh = Vec::with_capacity(input.h.len());
        let mut vw = Vec::with_capacity(input.w.len());
        for r in 0..input.len() {
            let ab_h = self.schedules.h.alpha_bar_at(input.t[r]);
            let ab_w = self.schedules.w.alpha_bar_at(input.t_tilde[r]);
            exact_velocity(&input.h[r * hl..(r + 1) * hl], &self.h0, ab_h, &mut vh);
            exact_velocity(&input.w[r * wl..(r + 1) * wl], &self.w0, ab_w, &mut vw);
        }
        (vh, vw)
    }
}
