//! Initial-data families and their size measures `δ = TV v0 + TV ũ0` and
//! `σ² = ∫(1+x²)(v0² + ũ0²)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::glimm::MeshConfig;
use crate::linalg::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataFamily {
    /// `v0 = a f(x − s)`, `ũ0 = b f'(x − s)` with `f = (1 + y²)^{−p}`.
    RationalBump,
    /// `v0 = a f'(x − s)`, `ũ0 = b f'(x − s)`; zero mass.
    DerivativeBump,
    /// Constant states left and right of `x = s`.
    RiemannDatum,
    /// Piecewise-linear table of `(x, v, ũ)`, zero outside.
    CustomTable,
}

impl DataFamily {
    pub fn name(self) -> &'static str {
        match self {
            DataFamily::RationalBump => "rational_bump",
            DataFamily::DerivativeBump => "derivative_bump",
            DataFamily::RiemannDatum => "riemann_datum",
            DataFamily::CustomTable => "custom_table",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "rational_bump" => DataFamily::RationalBump,
            "derivative_bump" => DataFamily::DerivativeBump,
            "riemann_datum" => DataFamily::RiemannDatum,
            "custom_table" => DataFamily::CustomTable,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialDataSpec {
    pub family: DataFamily,
    /// Amplitude of `v0`.
    pub a: f64,
    /// Amplitude of `ũ0`.
    pub b: f64,
    pub p: f64,
    pub shift: f64,
    /// If set, overrides `a` so that `∫v0 = mass` (rational bump only).
    pub mass: Option<f64>,
    /// Riemann datum: `(v, ũ)` for `x < shift` and `x > shift`.
    pub left: Vec2,
    pub right: Vec2,
    /// Custom table rows `(x, v, ũ)` with increasing `x`.
    pub table: Vec<[f64; 3]>,
}

impl Default for InitialDataSpec {
    fn default() -> Self {
        InitialDataSpec {
            family: DataFamily::RationalBump,
            a: 0.0,
            b: 0.0,
            p: 1.0,
            shift: 0.0,
            mass: None,
            left: [0.0, 0.0],
            right: [0.0, 0.0],
            table: Vec::new(),
        }
    }
}

/// `∫(1 + y²)^{−p} dy = √π Γ(p − ½) / Γ(p)`.
pub fn bump_integral(p: f64) -> f64 {
    PI.sqrt() * gamma(p - 0.5) / gamma(p)
}

#[inline]
fn f(y: f64, p: f64) -> f64 {
    (1.0 + y * y).powf(-p)
}

#[inline]
fn fprime(y: f64, p: f64) -> f64 {
    -2.0 * p * y * (1.0 + y * y).powf(-p - 1.0)
}

/// `TV f' = 4 max|f'|`, the maximum sitting at `y = 1/√(2p+1)`.
fn tv_fprime(p: f64) -> f64 {
    4.0 * fprime(1.0 / (2.0 * p + 1.0).sqrt(), p).abs()
}

/// Resolved initial datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub spec: InitialDataSpec,
    /// `TV v0 + TV ũ0`.
    pub delta: f64,
    pub sigma: f64,
    /// Analytic `∫v0` where finite.
    pub mass: Option<f64>,
}

impl InitialData {
    /// `(v0, ũ0)` at `x`.
    pub fn primitive(&self, x: f64) -> Vec2 {
        let s = &self.spec;
        let y = x - s.shift;
        match s.family {
            DataFamily::RationalBump => [s.a * f(y, s.p), s.b * fprime(y, s.p)],
            DataFamily::DerivativeBump => [s.a * fprime(y, s.p), s.b * fprime(y, s.p)],
            DataFamily::RiemannDatum => {
                if y < 0.0 {
                    s.left
                } else {
                    s.right
                }
            }
            DataFamily::CustomTable => table_eval(&s.table, x),
        }
    }

    /// Mass of `v0` on the cells the scheme samples at `t = 0`.
    pub fn discrete_mass(&self, mesh: &MeshConfig) -> f64 {
        let n = mesh.n();
        let k_first = if n.rem_euclid(2) == 1 { -n } else { -n + 1 };
        (0..)
            .map(|i| k_first + 2 * i)
            .take_while(|&k| k <= n)
            .map(|k| {
                let w = if k.abs() == n { mesh.h } else { 2.0 * mesh.h };
                w * self.primitive(k as f64 * mesh.h)[0]
            })
            .sum()
    }
}

fn table_eval(table: &[[f64; 3]], x: f64) -> Vec2 {
    if table.is_empty() || x < table[0][0] || x > table[table.len() - 1][0] {
        return [0.0, 0.0];
    }
    let i = table.partition_point(|r| r[0] <= x).clamp(1, table.len() - 1);
    let (l, r) = (table[i - 1], table[i]);
    let dx = r[0] - l[0];
    let s = if dx > 0.0 { (x - l[0]) / dx } else { 0.0 };
    [l[1] + s * (r[1] - l[1]), l[2] + s * (r[2] - l[2])]
}

/// `∫(1+x²) g(x) dx` over the line for a decaying `g`, by the midpoint rule
/// after `x = s + tan φ`.
fn weighted_integral(g: impl Fn(f64) -> f64, s: f64) -> f64 {
    let n = 200_000;
    let d = PI / n as f64;
    (0..n)
        .map(|i| {
            let phi = -0.5 * PI + (i as f64 + 0.5) * d;
            let c = phi.cos();
            let x = s + phi.tan();
            (1.0 + x * x) * g(x) / (c * c) * d
        })
        .sum()
}

pub fn make_initial_data(spec: &InitialDataSpec) -> Result<InitialData> {
    let mut spec = spec.clone();
    let check = |name: &str, v: f64| -> Result<()> {
        if v.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!("data.{name} = {v} is not finite")))
        }
    };
    check("a", spec.a)?;
    check("b", spec.b)?;
    check("p", spec.p)?;
    check("shift", spec.shift)?;
    match spec.family {
        DataFamily::RationalBump | DataFamily::DerivativeBump => {
            let r = 2.0 * spec.p;
            if !(r > 1.5) {
                return Err(Error::DecayHypothesis(r));
            }
            if let Some(m) = spec.mass {
                if spec.family != DataFamily::RationalBump {
                    return Err(Error::Config("data.mass applies to rational_bump only".into()));
                }
                spec.a = m / bump_integral(spec.p);
            }
            let (tv_v, mass) = match spec.family {
                DataFamily::RationalBump => (2.0 * spec.a.abs(), spec.a * bump_integral(spec.p)),
                _ => (spec.a.abs() * tv_fprime(spec.p), 0.0),
            };
            let delta = tv_v + spec.b.abs() * tv_fprime(spec.p);
            let tmp = InitialData {
                spec: spec.clone(),
                delta,
                sigma: 0.0,
                mass: Some(mass),
            };
            let s2 = weighted_integral(
                |x| {
                    let w = tmp.primitive(x);
                    w[0] * w[0] + w[1] * w[1]
                },
                spec.shift,
            );
            Ok(InitialData {
                sigma: s2.sqrt(),
                ..tmp
            })
        }
        DataFamily::RiemannDatum => {
            let d = (spec.right[0] - spec.left[0]).abs() + (spec.right[1] - spec.left[1]).abs();
            let sigma = if spec.left == [0.0, 0.0] && spec.right == [0.0, 0.0] {
                0.0
            } else {
                f64::INFINITY
            };
            let mass = if spec.left[0] == 0.0 && spec.right[0] == 0.0 {
                Some(0.0)
            } else {
                None
            };
            Ok(InitialData {
                spec,
                delta: d,
                sigma,
                mass,
            })
        }
        DataFamily::CustomTable => {
            let t = &spec.table;
            if t.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                return Err(Error::Config("data.table x values must increase".into()));
            }
            if t.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Config("data.table holds a non-finite value".into()));
            }
            // Zero outside the table: the end values jump back to 0.
            let mut delta = 0.0;
            let mut prev = [0.0, 0.0];
            let (mut mass, mut s2) = (0.0, 0.0);
            for (i, r) in t.iter().enumerate() {
                delta += (r[1] - prev[0]).abs() + (r[2] - prev[1]).abs();
                prev = [r[1], r[2]];
                if i > 0 {
                    let l = t[i - 1];
                    let dx = r[0] - l[0];
                    mass += 0.5 * dx * (l[1] + r[1]);
                    // Three-point Gauss is exact for the quartic integrand.
                    let g = (0.6f64).sqrt();
                    for (node, weight) in [(-g, 5.0 / 9.0), (0.0, 8.0 / 9.0), (g, 5.0 / 9.0)] {
                        let s = 0.5 * (1.0 + node);
                        let x = l[0] + s * dx;
                        let v = l[1] + s * (r[1] - l[1]);
                        let u = l[2] + s * (r[2] - l[2]);
                        s2 += 0.5 * dx * weight * (1.0 + x * x) * (v * v + u * u);
                    }
                }
            }
            delta += prev[0].abs() + prev[1].abs();
            Ok(InitialData {
                spec,
                delta,
                sigma: s2.sqrt(),
                mass: Some(mass),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(a: f64, b: f64, p: f64) -> InitialDataSpec {
        InitialDataSpec {
            a,
            b,
            p,
            ..Default::default()
        }
    }

    #[test]
    fn rational_bump_closed_forms() {
        let d = make_initial_data(&bump(0.1, 0.0, 1.0)).unwrap();
        assert!((d.mass.unwrap() - 0.1 * PI).abs() < 1e-12);
        assert!((d.delta - 0.2).abs() < 1e-15);
        assert!((d.sigma * d.sigma - 0.01 * PI).abs() < 1e-7);
    }

    #[test]
    fn zero_amplitude_is_equilibrium() {
        let d = make_initial_data(&bump(0.0, 0.0, 1.0)).unwrap();
        assert_eq!((d.delta, d.sigma, d.mass), (0.0, 0.0, Some(0.0)));
        assert_eq!(d.primitive(0.3), [0.0, 0.0]);
    }

    #[test]
    fn derivative_bump_has_zero_mass() {
        let s = InitialDataSpec {
            family: DataFamily::DerivativeBump,
            a: 0.05,
            b: 0.02,
            ..Default::default()
        };
        let d = make_initial_data(&s).unwrap();
        assert_eq!(d.mass, Some(0.0));
        let mesh = MeshConfig {
            h: 0.01,
            lambda_cfl: 2.0,
            x_half: 60.0,
            t_final: 1.0,
        };
        assert!(d.discrete_mass(&mesh).abs() < 1e-12);
    }

    #[test]
    fn derivative_term_weighted_norm() {
        // ∫(1+x²) f'² = 4p² √π Γ(2p − ½) / (2 Γ(2p + 1)).
        for p in [1.0, 1.5, 2.0] {
            let d = make_initial_data(&bump(0.0, 1.0, p)).unwrap();
            let full = 4.0 * p * p * PI.sqrt() * gamma(2.0 * p - 0.5) / (2.0 * gamma(2.0 * p + 1.0));
            assert!((d.sigma * d.sigma - full).abs() < 1e-6 * full, "{p}: {}", d.sigma * d.sigma);
        }
    }

    #[test]
    fn tv_of_derivative_profile() {
        // Brute-force TV on a fine grid.
        for p in [0.8, 1.0, 2.5] {
            let n = 400_000;
            let mut tv = 0.0;
            let mut prev = fprime(-200.0, p);
            for i in 1..=n {
                let x = -200.0 + 400.0 * i as f64 / n as f64;
                let v = fprime(x, p);
                tv += (v - prev).abs();
                prev = v;
            }
            assert!((tv - tv_fprime(p)).abs() < 1e-5, "{p}");
        }
    }

    #[test]
    fn mass_target_sets_amplitude() {
        let s = InitialDataSpec {
            mass: Some(0.05),
            p: 1.0,
            ..Default::default()
        };
        let d = make_initial_data(&s).unwrap();
        assert!((d.spec.a - 0.05 / PI).abs() < 1e-15);
        assert!((d.mass.unwrap() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn decay_hypothesis_enforced() {
        assert!(matches!(
            make_initial_data(&bump(0.1, 0.0, 0.75)),
            Err(Error::DecayHypothesis(_))
        ));
        assert!(make_initial_data(&bump(0.1, 0.0, 0.76)).is_ok());
    }

    #[test]
    fn riemann_and_table() {
        let s = InitialDataSpec {
            family: DataFamily::RiemannDatum,
            left: [0.0, 0.0],
            right: [0.06, -0.02],
            shift: 0.5,
            ..Default::default()
        };
        let d = make_initial_data(&s).unwrap();
        assert!((d.delta - 0.08).abs() < 1e-15);
        assert_eq!(d.primitive(0.4), [0.0, 0.0]);
        assert_eq!(d.primitive(0.6), [0.06, -0.02]);

        let t = InitialDataSpec {
            family: DataFamily::CustomTable,
            table: vec![[-1.0, 0.0, 0.0], [0.0, 0.1, 0.0], [1.0, 0.0, 0.0]],
            ..Default::default()
        };
        let d = make_initial_data(&t).unwrap();
        assert!((d.mass.unwrap() - 0.1).abs() < 1e-15);
        assert!((d.delta - 0.2).abs() < 1e-15);
        assert!((d.primitive(0.5)[0] - 0.05).abs() < 1e-15);
        assert_eq!(d.primitive(2.0), [0.0, 0.0]);
        // ∫(1+x²)(0.1(1−|x|))² dx = 2·0.01·(1/3 + 1/30).
        assert!((d.sigma * d.sigma - 0.02 * (1.0 / 3.0 + 1.0 / 30.0)).abs() < 1e-15);
    }
}
