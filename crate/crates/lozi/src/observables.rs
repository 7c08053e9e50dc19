//! Named observables `A: R^2 -> R` and vector fields `X: R^2 -> R^2` with their
//! derivatives. Statistics evaluate them in `f64`.

use std::fmt;
use std::sync::Arc;

type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;
type FieldFn = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;
type JacFn = Arc<dyn Fn(f64, f64) -> [[f64; 2]; 2] + Send + Sync>;

/// A scalar observable with its gradient.
#[derive(Clone)]
pub struct Observable {
    name: String,
    value: ScalarFn,
    gradient: GradFn,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Observable({})", self.name)
    }
}

impl Observable {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(f64, f64) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        Observable { name: name.into(), value: Arc::new(value), gradient: Arc::new(gradient) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn value(&self, p: [f64; 2]) -> f64 {
        (self.value)(p[0], p[1])
    }

    #[inline]
    pub fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        (self.gradient)(p[0], p[1])
    }

    /// `c * A`.
    pub fn scaled(&self, c: f64) -> Observable {
        let (v, g) = (self.value.clone(), self.gradient.clone());
        Observable::new(format!("{c}*{}", self.name), move |x, y| c * v(x, y), move |x, y| {
            let d = g(x, y);
            [c * d[0], c * d[1]]
        })
    }

    /// `A ∘ f` for the Lozi map with parameters `(a, b)`, valid off `x = 0`.
    pub fn compose_lozi(&self, a: f64, b: f64) -> Observable {
        let (v, g) = (self.value.clone(), self.gradient.clone());
        Observable::new(
            format!("{}∘f", self.name),
            move |x, y| v(1.0 + y - a * x.abs(), b * x),
            move |x, y| {
                let (u, w) = (1.0 + y - a * x.abs(), b * x);
                let d = g(u, w);
                let s = if x < 0.0 { -1.0 } else { 1.0 };
                [-a * s * d[0] + b * d[1], d[0]]
            },
        )
    }

    pub fn one() -> Self {
        Observable::new("one", |_, _| 1.0, |_, _| [0.0, 0.0])
    }

    pub fn zero() -> Self {
        Observable::new("zero", |_, _| 0.0, |_, _| [0.0, 0.0])
    }

    pub fn x() -> Self {
        Observable::new("x", |x, _| x, |_, _| [1.0, 0.0])
    }

    pub fn y() -> Self {
        Observable::new("y", |_, y| y, |_, _| [0.0, 1.0])
    }

    pub fn x_squared() -> Self {
        Observable::new("x2", |x, _| x * x, |x, _| [2.0 * x, 0.0])
    }

    /// Gaussian bump of width 0.3 centred at (0.5, 0).
    pub fn bump() -> Self {
        const W2: f64 = 0.09;
        let e = |x: f64, y: f64| (-((x - 0.5).powi(2) + y * y) / W2).exp();
        Observable::new("bump", e, move |x, y| {
            let v = e(x, y);
            [-2.0 * (x - 0.5) / W2 * v, -2.0 * y / W2 * v]
        })
    }

    /// Looks up a registered observable by name.
    pub fn by_name(name: &str) -> Option<Observable> {
        Some(match name {
            "one" => Self::one(),
            "zero" => Self::zero(),
            "x" => Self::x(),
            "y" => Self::y(),
            "x2" => Self::x_squared(),
            "bump" => Self::bump(),
            _ => return None,
        })
    }

    pub const NAMES: [&'static str; 6] = ["one", "zero", "x", "y", "x2", "bump"];
}

/// A vector field with its Jacobian.
#[derive(Clone)]
pub struct VectorField {
    name: String,
    value: FieldFn,
    jacobian: JacFn,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorField({})", self.name)
    }
}

impl VectorField {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(f64, f64) -> [f64; 2] + Send + Sync + 'static,
        jacobian: impl Fn(f64, f64) -> [[f64; 2]; 2] + Send + Sync + 'static,
    ) -> Self {
        VectorField { name: name.into(), value: Arc::new(value), jacobian: Arc::new(jacobian) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn value(&self, p: [f64; 2]) -> [f64; 2] {
        (self.value)(p[0], p[1])
    }

    /// Row-major `DX`.
    #[inline]
    pub fn jacobian(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        (self.jacobian)(p[0], p[1])
    }

    pub fn scaled(&self, c: f64) -> VectorField {
        let (v, j) = (self.value.clone(), self.jacobian.clone());
        VectorField::new(
            format!("{c}*{}", self.name),
            move |x, y| {
                let w = v(x, y);
                [c * w[0], c * w[1]]
            },
            move |x, y| {
                let m = j(x, y);
                [[c * m[0][0], c * m[0][1]], [c * m[1][0], c * m[1][1]]]
            },
        )
    }

    pub fn zero() -> Self {
        VectorField::new("zero", |_, _| [0.0, 0.0], |_, _| [[0.0; 2]; 2])
    }

    /// `(0, y)`: the field generated by `b -> b(1 + ε)`.
    pub fn b_scale() -> Self {
        VectorField::new("b-scale", |_, y| [0.0, y], |_, _| [[0.0, 0.0], [0.0, 1.0]])
    }

    /// `(x, 0)`.
    pub fn x_axis() -> Self {
        VectorField::new("x-axis", |x, _| [x, 0.0], |_, _| [[1.0, 0.0], [0.0, 0.0]])
    }

    /// `(-v / b, u)`, the generator of `h_ε = id + ε (0, x)` conjugating the
    /// map to the one with `b(1 + ε)` up to first order.
    pub fn conjugacy(b: f64) -> Self {
        VectorField::new("conjugacy", move |x, y| [-y / b, x], move |_, _| [[0.0, -1.0 / b], [1.0, 0.0]])
    }

    pub fn constant(name: &str, v: [f64; 2]) -> Self {
        VectorField::new(name, move |_, _| v, |_, _| [[0.0; 2]; 2])
    }

    pub fn by_name(name: &str) -> Option<VectorField> {
        Some(match name {
            "zero" => Self::zero(),
            "b-scale" => Self::b_scale(),
            "x-axis" => Self::x_axis(),
            "e1" => Self::constant("e1", [1.0, 0.0]),
            "e2" => Self::constant("e2", [0.0, 1.0]),
            _ => return None,
        })
    }

    /// Like [`VectorField::by_name`], also resolving fields that depend on `b`.
    pub fn by_name_for(name: &str, b: f64) -> Option<VectorField> {
        match name {
            "conjugacy" => Some(Self::conjugacy(b)),
            _ => Self::by_name(name),
        }
    }

    pub const NAMES: [&'static str; 5] = ["zero", "b-scale", "x-axis", "e1", "e2"];
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const H: f64 = 1e-6;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / (1.0 + b.abs())
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for name in Observable::NAMES {
            let a = Observable::by_name(name).unwrap();
            for _ in 0..100 {
                let p = [rng.gen_range(-1.5..1.5), rng.gen_range(-0.6..0.6)];
                let g = a.gradient(p);
                let dx = (a.value([p[0] + H, p[1]]) - a.value([p[0] - H, p[1]])) / (2.0 * H);
                let dy = (a.value([p[0], p[1] + H]) - a.value([p[0], p[1] - H])) / (2.0 * H);
                assert!(rel(g[0], dx) < 1e-4 && rel(g[1], dy) < 1e-4, "{name} at {p:?}");
            }
        }
    }

    #[test]
    fn jacobians_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for name in VectorField::NAMES {
            let x = VectorField::by_name(name).unwrap();
            for _ in 0..100 {
                let p = [rng.gen_range(-1.5..1.5), rng.gen_range(-0.6..0.6)];
                let j = x.jacobian(p);
                for (col, e) in [[H, 0.0], [0.0, H]].iter().enumerate() {
                    let plus = x.value([p[0] + e[0], p[1] + e[1]]);
                    let minus = x.value([p[0] - e[0], p[1] - e[1]]);
                    for row in 0..2 {
                        let fd = (plus[row] - minus[row]) / (2.0 * H);
                        assert!(rel(j[row][col], fd) < 1e-4, "{name}");
                    }
                }
            }
        }
    }

    #[test]
    fn composition_with_the_map() {
        let a = Observable::x_squared().compose_lozi(1.8, 0.35);
        let p = [0.3, 0.1];
        let u = 1.0 + 0.1 - 1.8 * 0.3;
        assert!((a.value(p) - u * u).abs() < 1e-15);
        let g = a.gradient(p);
        let dx = (a.value([p[0] + H, p[1]]) - a.value([p[0] - H, p[1]])) / (2.0 * H);
        assert!(rel(g[0], dx) < 1e-6);
    }
}
