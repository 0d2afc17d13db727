//! Two-parameter cubic equations of state in the generic form
//!
//! `P = R T / (v - b) - a(T) / ((v + d1 b)(v + d2 b))`
//!
//! with van der Waals one-fluid mixing and zero binary interaction
//! parameters, so that `a_mix N^2 = (sum_i n_i sqrt(a_i))^2`.

use super::{ComponentData, EosKind, ThermoError, GAS_CONSTANT as R};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub(crate) struct CubicConstants {
    pub d1: f64,
    pub d2: f64,
    /// sqrt(a_c) per component
    pub sqrt_ac: Vec<f64>,
    pub m: Vec<f64>,
    pub tc: Vec<f64>,
    pub b: Vec<f64>,
}

impl CubicConstants {
    pub fn new(kind: EosKind, components: &[ComponentData]) -> Option<Self> {
        let (omega_a, omega_b, d1, d2): (f64, f64, f64, f64) = match kind {
            EosKind::IdealGas => return None,
            EosKind::Srk => (0.42748, 0.08664, 1.0, 0.0),
            EosKind::PengRobinson => (
                0.45724,
                0.07780,
                1.0 + std::f64::consts::SQRT_2,
                1.0 - std::f64::consts::SQRT_2,
            ),
        };
        let m = components
            .iter()
            .map(|c| {
                let w = c.omega;
                match kind {
                    EosKind::Srk => 0.480 + 1.574 * w - 0.176 * w * w,
                    _ => 0.37464 + 1.54226 * w - 0.26992 * w * w,
                }
            })
            .collect();
        Some(Self {
            d1,
            d2,
            sqrt_ac: components
                .iter()
                .map(|c| (omega_a * R * R * c.tc * c.tc / c.pc).sqrt())
                .collect(),
            m,
            tc: components.iter().map(|c| c.tc).collect(),
            b: components
                .iter()
                .map(|c| omega_b * R * c.tc / c.pc)
                .collect(),
        })
    }
}

/// Cubic in Z: `Z^3 + c2 Z^2 + c1 Z + c0`.
fn coefficients<S: Scalar>(a: S, b: S, d1: f64, d2: f64) -> (S, S, S) {
    let s = d1 + d2;
    let p = d1 * d2;
    let c2 = b * (s - 1.0) - 1.0;
    let c1 = a + b * b * p - b * (b + 1.0) * s;
    let c0 = -(a * b + b * b * (b + 1.0) * p);
    (c2, c1, c0)
}

fn eval_cubic(z: f64, c2: f64, c1: f64, c0: f64) -> (f64, f64) {
    let f = ((z + c2) * z + c1) * z + c0;
    let df = (3.0 * z + 2.0 * c2) * z + c1;
    (f, df)
}

/// Largest real root of the monic cubic.
pub(crate) fn largest_root(c2: f64, c1: f64, c0: f64) -> f64 {
    let shift = c2 / 3.0;
    let p = c1 - c2 * shift;
    let q = 2.0 * shift * shift * shift - shift * c1 + c0;
    let disc = 0.25 * q * q + p * p * p / 27.0;
    let t = if disc > 0.0 {
        let sd = disc.sqrt();
        (-0.5 * q + sd).cbrt() + (-0.5 * q - sd).cbrt()
    } else {
        let r = (-p / 3.0).sqrt();
        let arg = if r > 0.0 {
            (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0)
        } else {
            0.0
        };
        2.0 * r * (arg.acos() / 3.0).cos()
    };
    let mut z = t - shift;
    for _ in 0..3 {
        let (f, df) = eval_cubic(z, c2, c1, c0);
        if df == 0.0 {
            break;
        }
        let dz = f / df;
        z -= dz;
        if dz.abs() <= 1e-15 * z.abs() {
            break;
        }
    }
    z
}

/// Mixture-level cubic quantities at one (T, P, n).
#[derive(Clone, Debug)]
pub(crate) struct CubicMixture<S> {
    pub sqrt_a: Vec<S>,
    pub sqrt_a_t: Vec<S>,
    /// sum_i n_i sqrt(a_i)
    pub sa: S,
    /// sum_i n_i d sqrt(a_i)/dT
    pub sa_t: S,
    /// a_mix N^2
    pub d: S,
    pub d_t: S,
    /// b_mix N
    pub bn: S,
}

impl CubicConstants {
    pub fn mixture<S: Scalar>(
        &self,
        t: S,
        p: S,
        n: &[S],
        n_tot: S,
    ) -> Result<(CubicMixture<S>, S), ThermoError> {
        let nc = n.len();
        let sqrt_t = t.sqrt();
        let mut sqrt_a = Vec::with_capacity(nc);
        let mut sqrt_a_t = Vec::with_capacity(nc);
        let mut sa = S::zero();
        let mut sa_t = S::zero();
        let mut bn = S::zero();
        for i in 0..nc {
            let inv_sqrt_tc = 1.0 / self.tc[i].sqrt();
            let s = (S::cst(1.0) - sqrt_t * inv_sqrt_tc) * self.m[i] + 1.0;
            let sq = s * self.sqrt_ac[i];
            // d/dT [1 + m (1 - sqrt(T/Tc))] = -m / (2 sqrt(T Tc))
            let sq_t = (sqrt_t * (2.0 / inv_sqrt_tc)).recip() * (-self.m[i] * self.sqrt_ac[i]);
            sa += n[i] * sq;
            sa_t += n[i] * sq_t;
            bn += n[i] * self.b[i];
            sqrt_a.push(sq);
            sqrt_a_t.push(sq_t);
        }
        let d = sa * sa;
        let d_t = sa * sa_t * 2.0;
        let rt = t * R;
        let a_red = d * p / (rt * rt * n_tot * n_tot);
        let b_red = bn * p / (rt * n_tot);
        let (c2, c1, c0) = coefficients(a_red, b_red, self.d1, self.d2);
        let z0 = largest_root(c2.re(), c1.re(), c0.re());
        let (f0, df0) = eval_cubic(z0, c2.re(), c1.re(), c0.re());
        if !z0.is_finite() || z0 <= b_red.re() || df0 <= 0.0 {
            return Err(ThermoError::NoVaporRoot {
                z: z0,
                b: b_red.re(),
            });
        }
        let scale = 1.0 + c1.re().abs() + c0.re().abs();
        if f0.abs() > 1e-10 * scale {
            return Err(ThermoError::NoVaporRoot {
                z: z0,
                b: b_red.re(),
            });
        }
        // Implicit differentiation: Z = Z0 - f(Z0; A, B) / f'(Z0)
        let zs = S::cst(z0);
        let f = ((zs + c2) * zs + c1) * zs + c0;
        let z = zs - f / df0;
        let v = z * n_tot * rt / p;
        Ok((
            CubicMixture {
                sqrt_a,
                sqrt_a_t,
                sa,
                sa_t,
                d,
                d_t,
                bn,
            },
            v,
        ))
    }

    /// `ln((V + d1 B)/(V + d2 B))` divided by `d1 - d2`, and the two factors.
    fn log_term<S: Scalar>(&self, v: S, bn: S) -> (S, S, S) {
        let f1 = v + bn * self.d1;
        let f2 = v + bn * self.d2;
        ((f1 / f2).ln() / (self.d1 - self.d2), f1, f2)
    }

    /// Residual enthalpy of the whole mixture, J.
    pub fn residual_enthalpy<S: Scalar>(
        &self,
        mix: &CubicMixture<S>,
        t: S,
        p: S,
        v: S,
        n_tot: S,
    ) -> S {
        let g = t * mix.d_t - mix.d;
        let (l, _, _) = self.log_term(v, mix.bn);
        p * v - n_tot * t * R + g * l / mix.bn
    }

    /// Residual partial molar enthalpies at constant (T, P), J/mol.
    pub fn residual_partial_enthalpies<S: Scalar>(
        &self,
        mix: &CubicMixture<S>,
        t: S,
        p: S,
        v: S,
        n_tot: S,
    ) -> Vec<S> {
        let (d1, d2) = (self.d1, self.d2);
        let rt = t * R;
        let g = t * mix.d_t - mix.d;
        let (l, f1, f2) = self.log_term(v, mix.bn);
        let f12 = f1 * f2;
        let vb = v - mix.bn;
        // dP/dV at constant (T, n)
        let p_v = -(n_tot * rt) / (vb * vb) + mix.d * (v * 2.0 + mix.bn * (d1 + d2)) / (f12 * f12);
        // dU_res/dV at constant (T, n)
        let ures_v = -g / f12;
        let kappa = 1.0 / (d1 - d2);
        (0..mix.sqrt_a.len())
            .map(|i| {
                let bi = self.b[i];
                let d_i = mix.sqrt_a[i] * mix.sa * 2.0;
                let dt_i = (mix.sqrt_a_t[i] * mix.sa + mix.sqrt_a[i] * mix.sa_t) * 2.0;
                let g_i = t * dt_i - d_i;
                let l_i = (f1.recip() * d1 - f2.recip() * d2) * bi * kappa;
                let ures_n = g_i * l / mix.bn + g * l_i / mix.bn - g * l * bi / (mix.bn * mix.bn);
                let p_n = rt / vb + n_tot * rt * bi / (vb * vb) - d_i / f12
                    + mix.d * bi * (f2 * d1 + f1 * d2) / (f12 * f12);
                let v_n = -p_n / p_v;
                ures_n + (ures_v + p) * v_n - rt
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bisection oracle on the largest sign change of the cubic.
    fn bisect_largest(c2: f64, c1: f64, c0: f64, lo: f64, hi: f64) -> f64 {
        let f = |z: f64| ((z + c2) * z + c1) * z + c0;
        // scan downward from hi for the first sign change
        let n = 200_000;
        let step = (hi - lo) / n as f64;
        let mut b = hi;
        let mut a = hi - step;
        while a > lo && f(a).signum() == f(b).signum() {
            b = a;
            a -= step;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if f(m).signum() == f(b).signum() {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn largest_root_three_real_roots() {
        // (z-1)(z-2)(z-3)
        let z = largest_root(-6.0, 11.0, -6.0);
        assert!((z - 3.0).abs() < 1e-13);
    }

    #[test]
    fn largest_root_single_real_root() {
        // (z-0.5)(z^2+1)
        let z = largest_root(-0.5, 1.0, -0.5);
        assert!((z - 0.5).abs() < 1e-14);
    }

    #[test]
    fn largest_root_matches_bisection_for_srk_like_coefficients() {
        for &(a, b) in &[(0.05, 0.01), (0.3, 0.05), (0.02, 0.08), (0.1, 0.09)] {
            let (c2, c1, c0) = coefficients(a, b, 1.0, 0.0);
            let z = largest_root(c2, c1, c0);
            let zb = bisect_largest(c2, c1, c0, b, 5.0);
            assert!((z - zb).abs() < 1e-10, "{a} {b}: {z} vs {zb}");
        }
    }
}
