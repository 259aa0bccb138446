//! sRGB (D65) to CIE L*a*b* conversion.

use libm::{cbrt, pow};

const M_RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

const M_XYZ_TO_RGB: [[f64; 3]; 3] = [
    [3.240_454_2, -1.537_138_5, -0.498_531_4],
    [-0.969_266_0, 1.876_010_8, 0.041_556_0],
    [0.055_643_4, -0.204_025_9, 1.057_225_2],
];

const EPS: f64 = 216.0 / 24389.0;
const DELTA: f64 = 6.0 / 29.0;

/// Reference white: the XYZ image of sRGB (1,1,1).
pub const WHITE: [f64; 3] = [
    M_RGB_TO_XYZ[0][0] + M_RGB_TO_XYZ[0][1] + M_RGB_TO_XYZ[0][2],
    M_RGB_TO_XYZ[1][0] + M_RGB_TO_XYZ[1][1] + M_RGB_TO_XYZ[1][2],
    M_RGB_TO_XYZ[2][0] + M_RGB_TO_XYZ[2][1] + M_RGB_TO_XYZ[2][2],
];

/// sRGB electro-optical transfer: encoded `[0,1]` to linear `[0,1]`.
pub fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.040_45 {
        c / 12.92
    } else {
        pow((c + 0.055) / 1.055, 2.4)
    }
}

pub fn linear_to_srgb(c: f64) -> f64 {
    if c <= 0.003_130_8 {
        12.92 * c
    } else {
        1.055 * pow(c, 1.0 / 2.4) - 0.055
    }
}

fn lab_f(t: f64) -> f64 {
    if t > EPS {
        cbrt(t)
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

fn lab_f_inv(t: f64) -> f64 {
    if t > DELTA {
        t * t * t
    } else {
        3.0 * DELTA * DELTA * (t - 4.0 / 29.0)
    }
}

fn mul3(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// Linear RGB in `[0,1]` to L*a*b*.
pub fn linear_rgb_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let xyz = mul3(&M_RGB_TO_XYZ, rgb);
    let fx = lab_f(xyz[0] / WHITE[0]);
    let fy = lab_f(xyz[1] / WHITE[1]);
    let fz = lab_f(xyz[2] / WHITE[2]);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Encoded sRGB in `[0,1]` to L*a*b*.
pub fn srgb_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    linear_rgb_to_lab([
        srgb_to_linear(rgb[0]),
        srgb_to_linear(rgb[1]),
        srgb_to_linear(rgb[2]),
    ])
}

pub fn srgb8_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    srgb_to_lab([
        rgb[0] as f64 / 255.0,
        rgb[1] as f64 / 255.0,
        rgb[2] as f64 / 255.0,
    ])
}

/// L*a*b* to encoded sRGB in `[0,1]`, unclamped.
pub fn lab_to_srgb(lab: [f64; 3]) -> [f64; 3] {
    let fy = (lab[0] + 16.0) / 116.0;
    let fx = fy + lab[1] / 500.0;
    let fz = fy - lab[2] / 200.0;
    let xyz = [
        WHITE[0] * lab_f_inv(fx),
        WHITE[1] * lab_f_inv(fy),
        WHITE[2] * lab_f_inv(fz),
    ];
    let lin = mul3(&M_XYZ_TO_RGB, xyz);
    [
        linear_to_srgb(lin[0]),
        linear_to_srgb(lin[1]),
        linear_to_srgb(lin[2]),
    ]
}

/// L*a*b* to 8-bit sRGB with clamping.
pub fn lab_to_srgb8(lab: [f64; 3]) -> [u8; 3] {
    let c = lab_to_srgb(lab);
    let q = |v: f64| libm::round(v.clamp(0.0, 1.0) * 255.0) as u8;
    [q(c[0]), q(c[1]), q(c[2])]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        (0..3).all(|i| (a[i] - b[i]).abs() <= tol)
    }

    #[test]
    fn white_and_black() {
        assert!(close(srgb8_to_lab([255, 255, 255]), [100.0, 0.0, 0.0], 1e-9));
        assert!(close(srgb8_to_lab([0, 0, 0]), [0.0, 0.0, 0.0], 1e-12));
    }

    #[test]
    fn primaries_match_reference_table() {
        // reference values from the CIE formulas evaluated in double precision
        assert!(close(srgb8_to_lab([255, 0, 0]), [53.2408, 80.0925, 67.2032], 1e-3));
        assert!(close(srgb8_to_lab([0, 255, 0]), [87.7347, -86.1827, 83.1793], 1e-3));
        assert!(close(srgb8_to_lab([0, 0, 255]), [32.2970, 79.1875, -107.8602], 1e-3));
    }

    #[test]
    fn grey_axis_is_neutral() {
        for v in [1u8, 17, 64, 128, 200] {
            let lab = srgb8_to_lab([v, v, v]);
            assert!(lab[1].abs() < 1e-9 && lab[2].abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn round_trip_within_quantization(r in 0u8..=255, g in 0u8..=255, b in 0u8..=255) {
            let lab = srgb8_to_lab([r, g, b]);
            let back = srgb8_to_lab(lab_to_srgb8(lab));
            prop_assert!(close(lab, back, 0.5));
        }
    }
}
