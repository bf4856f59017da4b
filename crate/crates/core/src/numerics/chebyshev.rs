//! Chebyshev interpolation on Lobatto points, refined by doubling.

use std::f64::consts::PI;

use crate::Complex64;

#[derive(Debug, Clone)]
pub struct Chebyshev {
    a: f64,
    b: f64,
    coeffs: Vec<Complex64>,
}

impl Chebyshev {
    /// Interpolates `f` on `[a, b]`. The degree doubles from 8 until the
    /// trailing coefficients drop below `tol` times the largest one, or
    /// `max_degree` is reached. Samples are reused across doublings.
    pub fn fit<E>(
        a: f64,
        b: f64,
        tol: f64,
        max_degree: usize,
        mut f: impl FnMut(f64) -> Result<Complex64, E>,
    ) -> Result<Self, E> {
        if b <= a {
            let v = f(a)?;
            return Ok(Self { a, b: a, coeffs: vec![v] });
        }
        let mut n = 8usize;
        // values[k] = f(x_k), x_k = cos(πk/n) mapped to [a, b].
        let mut values: Vec<Complex64> =
            (0..=n).map(|k| f(map(a, b, (PI * k as f64 / n as f64).cos()))).collect::<Result<_, _>>()?;
        loop {
            let coeffs = lobatto_coefficients(&values);
            let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let tail = coeffs[n.saturating_sub(2)..].iter().map(|c| c.norm()).fold(0.0, f64::max);
            if tail <= tol * scale || scale == 0.0 || n >= max_degree {
                return Ok(Self { a, b, coeffs });
            }
            let m = 2 * n;
            let mut next = vec![Complex64::new(0.0, 0.0); m + 1];
            for k in 0..=m {
                next[k] = if k % 2 == 0 {
                    values[k / 2]
                } else {
                    f(map(a, b, (PI * k as f64 / m as f64).cos()))?
                };
            }
            values = next;
            n = m;
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// Clenshaw evaluation; arguments are clamped to the domain.
    pub fn eval(&self, x: f64) -> Complex64 {
        if self.coeffs.len() == 1 {
            return self.coeffs[0];
        }
        let t = ((2.0 * x - self.a - self.b) / (self.b - self.a)).clamp(-1.0, 1.0);
        let mut b1 = Complex64::new(0.0, 0.0);
        let mut b2 = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().skip(1).rev() {
            let b0 = *c + b1 * (2.0 * t) - b2;
            b2 = b1;
            b1 = b0;
        }
        self.coeffs[0] + b1 * t - b2
    }

    /// Derivative with respect to `x`, from the differentiated series.
    pub fn derivative(&self) -> Chebyshev {
        let n = self.coeffs.len() - 1;
        if n == 0 {
            return Chebyshev { a: self.a, b: self.b, coeffs: vec![Complex64::new(0.0, 0.0)] };
        }
        let mut d = vec![Complex64::new(0.0, 0.0); n + 1];
        for k in (0..n).rev() {
            let next = if k + 2 <= n { d[k + 2] } else { Complex64::new(0.0, 0.0) };
            d[k] = next + self.coeffs[k + 1] * (2.0 * (k + 1) as f64);
        }
        d[0] *= 0.5;
        d.truncate(n);
        let scale = 2.0 / (self.b - self.a);
        for c in &mut d {
            *c *= scale;
        }
        Chebyshev { a: self.a, b: self.b, coeffs: d }
    }
}

fn map(a: f64, b: f64, t: f64) -> f64 {
    0.5 * (a + b) + 0.5 * (b - a) * t
}

/// Chebyshev coefficients of the interpolant through Lobatto samples (DCT-I).
fn lobatto_coefficients(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len() - 1;
    let nf = n as f64;
    (0..=n)
        .map(|j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, v) in values.iter().enumerate() {
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                acc += *v * (w * (PI * (j * k) as f64 / nf).cos());
            }
            let scale = if j == 0 || j == n { 1.0 / nf } else { 2.0 / nf };
            acc * scale
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(x: f64) -> Result<Complex64, ()> {
        Ok(Complex64::new((3.0 * x).sin(), 1.0 / (2.0 + x)))
    }

    #[test]
    fn interpolates_smooth_function() {
        let c = Chebyshev::fit(-0.5, 1.5, 1e-14, 128, ok).unwrap();
        for i in 0..50 {
            let x = -0.5 + 2.0 * i as f64 / 49.0;
            assert!((c.eval(x) - ok(x).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_matches_analytic() {
        let c = Chebyshev::fit(-0.5, 1.5, 1e-15, 128, ok).unwrap();
        let d = c.derivative();
        for x in [-0.4f64, 0.0, 0.7, 1.4] {
            let expected = Complex64::new(3.0 * (3.0 * x).cos(), -1.0 / (2.0 + x).powi(2));
            assert!((d.eval(x) - expected).norm() < 1e-9, "{x}");
        }
    }

    #[test]
    fn degenerate_interval_is_constant() {
        let c = Chebyshev::fit(0.3, 0.3, 1e-12, 64, ok).unwrap();
        assert_eq!(c.degree(), 0);
        assert_eq!(c.eval(0.3), ok(0.3).unwrap());
    }
}
