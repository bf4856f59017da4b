//! Fixed quadrature rules.

/// Abscissae of the 15-point Kronrod rule on `[-1, 1]` (non-negative half,
/// descending). Odd indices are the embedded 7-point Gauss nodes.
pub const GK15_NODES: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

pub const GK15_WEIGHTS_KRONROD: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for nodes `GK15_NODES[1], [3], [5], [7]`.
pub const GK15_WEIGHTS_GAUSS: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// The 15 Kronrod abscissae mapped to `[a, b]`, ascending, with their
/// Kronrod and embedded-Gauss weights (Gauss weight is 0 off the Gauss nodes).
pub fn gk15_panel(a: f64, b: f64) -> [(f64, f64, f64); 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [(0.0, 0.0, 0.0); 15];
    for k in 0..7 {
        let g = if k % 2 == 1 { GK15_WEIGHTS_GAUSS[k / 2] } else { 0.0 };
        out[k] = (c - h * GK15_NODES[k], h * GK15_WEIGHTS_KRONROD[k], h * g);
        out[14 - k] = (c + h * GK15_NODES[k], h * GK15_WEIGHTS_KRONROD[k], h * g);
    }
    out[7] = (c, h * GK15_WEIGHTS_KRONROD[7], h * GK15_WEIGHTS_GAUSS[3]);
    out
}

/// Composite Simpson weights for `n` uniform samples spanning `[0, length]`.
/// An even sample count falls back to Simpson's 3/8 rule on the final panel.
pub fn simpson_weights(n: usize, length: f64) -> Vec<f64> {
    assert!(n >= 2, "need at least two samples");
    let h = length / (n - 1) as f64;
    if n == 2 {
        return vec![0.5 * h, 0.5 * h];
    }
    let mut w = vec![0.0; n];
    let simpson_end = if (n - 1) % 2 == 0 { n - 1 } else { n - 4 };
    let mut i = 0;
    while i + 2 <= simpson_end {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
        i += 2;
    }
    if simpson_end != n - 1 {
        let s = simpson_end;
        let f = 3.0 * h / 8.0;
        w[s] += f;
        w[s + 1] += 3.0 * f;
        w[s + 2] += 3.0 * f;
        w[s + 3] += f;
    }
    w
}
