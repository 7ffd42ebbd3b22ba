/// Degree-0 real spherical harmonic, `Y_0^0 = 1 / (2 sqrt(pi))`.
pub const SH_C0: f64 = std::f64::consts::FRAC_2_SQRT_PI / 4.0;

pub fn dc_to_rgb(sh_dc: [f64; 3]) -> [f64; 3] {
    sh_dc.map(|c| (c * SH_C0 + 0.5).clamp(0.0, 1.0))
}

pub fn rgb_to_dc(rgb: [f64; 3]) -> [f64; 3] {
    rgb.map(|c| (c - 0.5) / SH_C0)
}
