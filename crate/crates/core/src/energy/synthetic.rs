use core::f64::consts::{FRAC_1_SQRT_2, PI};
use core::fmt;
use core::str::FromStr;

use super::EnergyModel;
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::math::{atan2, cos, exp, ln, sin, sqrt};

/// Analytic 2D landscapes evaluated on `[-2, 2]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Landscape {
    Wave,
    EightGaussian,
    SixteenGaussian { c: f64 },
    Moon,
    TwoMoons,
    Twist,
    Flower,
}

impl Landscape {
    pub fn name(&self) -> &'static str {
        match self {
            Landscape::Wave => "wave",
            Landscape::EightGaussian => "8gaussian",
            Landscape::SixteenGaussian { .. } => "16gaussian",
            Landscape::Moon => "moon",
            Landscape::TwoMoons => "2moons",
            Landscape::Twist => "twist",
            Landscape::Flower => "flower",
        }
    }
}

impl fmt::Display for Landscape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Landscape {
    type Err = Error;

    /// Parses a landscape name; `16gaussian` gets `C = 2.0`.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "wave" => Landscape::Wave,
            "8gaussian" | "8gaussians" | "eight_gaussian" => Landscape::EightGaussian,
            "16gaussian" | "16gaussians" | "sixteen_gaussian" => Landscape::SixteenGaussian { c: 2.0 },
            "moon" => Landscape::Moon,
            "2moons" | "twomoons" | "two_moons" => Landscape::TwoMoons,
            "twist" => Landscape::Twist,
            "flower" => Landscape::Flower,
            _ => return Err(Error::invalid(alloc::format!("unknown landscape `{s}`"))),
        })
    }
}

const EIGHT_CENTERS: [(f64, f64); 8] = [
    (1.0, 0.0),
    (-1.0, 0.0),
    (0.0, 1.0),
    (0.0, -1.0),
    (FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    (FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    (-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    (-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
];
const EIGHT_SIGMA2: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic2D {
    which: Landscape,
    domain: DomainSpec,
}

impl Synthetic2D {
    /// `levels` grid points per axis over `[-2, 2]`.
    pub fn new(which: Landscape, levels: usize) -> Result<Self> {
        Ok(Synthetic2D {
            which,
            domain: DomainSpec::grid(2, levels, -2.0, 2.0)?,
        })
    }

    pub fn landscape(&self) -> Landscape {
        self.which
    }

    /// Value and gradient at `(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> (f64, [f64; 2]) {
        match self.which {
            Landscape::Wave => {
                let (sx, cx, sy, cy) = (sin(3.0 * x), cos(3.0 * x), sin(3.0 * y), cos(3.0 * y));
                (sx * sy, [3.0 * cx * sy, 3.0 * sx * cy])
            }
            Landscape::EightGaussian => {
                let mut logits = [0.0; 8];
                for (l, &(cx, cy)) in logits.iter_mut().zip(&EIGHT_CENTERS) {
                    *l = -((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2.0 * EIGHT_SIGMA2);
                }
                let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut z = 0.0;
                let (mut gx, mut gy) = (0.0, 0.0);
                for (l, &(cx, cy)) in logits.iter().zip(&EIGHT_CENTERS) {
                    let w = exp(l - max);
                    z += w;
                    gx += w * (cx - x);
                    gy += w * (cy - y);
                }
                (max + ln(z), [gx / (z * EIGHT_SIGMA2), gy / (z * EIGHT_SIGMA2)])
            }
            Landscape::SixteenGaussian { c } => {
                let tp = 2.0 * PI;
                let u = (x * x + y * y) / 5.0 - c * (cos(tp * x) + cos(tp * y));
                (
                    u,
                    [
                        2.0 * x / 5.0 + c * tp * sin(tp * x),
                        2.0 * y / 5.0 + c * tp * sin(tp * y),
                    ],
                )
            }
            Landscape::Moon => {
                let s = 4.0 * x - y * y + 24.0 / 5.0;
                let u = -(y * y * y * y) / 10.0 - 0.5 * s * s;
                (u, [-4.0 * s, -0.4 * y * y * y + 2.0 * y * s])
            }
            Landscape::TwoMoons => {
                let r2 = x * x + y * y;
                let ring = -(2.0 / 25.0) * (r2 - 2.0) * (r2 - 2.0);
                let a = (5.0 * x - 4.0) / 4.0;
                let b = (5.0 * x + 4.0) / 4.0;
                let (la, lb) = (-0.5 * a * a, -0.5 * b * b);
                let m = la.max(lb);
                let (ea, eb) = (exp(la - m), exp(lb - m));
                let lse = m + ln(ea + eb);
                let dmix = -(ea * a + eb * b) / (ea + eb) * 1.25;
                let dring = -(8.0 / 25.0) * (r2 - 2.0);
                (ring + lse, [dring * x + dmix, dring * y])
            }
            Landscape::Twist => {
                let s = sin(PI * x / 2.0);
                let r = y - s;
                (-0.5 * r * r, [r * cos(PI * x / 2.0) * PI / 2.0, -r])
            }
            Landscape::Flower => {
                let r = sqrt(x * x + y * y);
                if r == 0.0 {
                    // limit taken along angle 0
                    return (1.0, [0.0, 0.0]);
                }
                let phi = atan2(y, x);
                let u = sin(r) + cos(5.0 * phi);
                let dr = cos(r) / r;
                let dphi = -5.0 * sin(5.0 * phi) / (r * r);
                (u, [dr * x - dphi * y, dr * y + dphi * x])
            }
        }
    }
}

impl EnergyModel for Synthetic2D {
    fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    fn value_at(&self, p: &[f64]) -> f64 {
        self.eval(p[0], p[1]).0
    }

    fn gradient_at(&self, p: &[f64], out: &mut [f64]) {
        let g = self.eval(p[0], p[1]).1;
        out[0] = g[0];
        out[1] = g[1];
    }
}
