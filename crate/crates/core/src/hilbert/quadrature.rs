use std::sync::OnceLock;

use num_complex::Complex64;

use super::GridFunction;

pub fn trapezoid(f: &[f64], dx: f64) -> f64 {
    match f.len() {
        0 | 1 => 0.0,
        n => (f.iter().sum::<f64>() - 0.5 * (f[0] + f[n - 1])) * dx,
    }
}

pub(crate) fn trapezoid_complex(f: &[Complex64], dx: f64) -> Complex64 {
    match f.len() {
        0 | 1 => Complex64::new(0.0, 0.0),
        n => (f.iter().sum::<Complex64>() - 0.5 * (f[0] + f[n - 1])) * dx,
    }
}

/// Composite Simpson for an odd number of points, trapezoid otherwise.
pub fn quadrature(f: &GridFunction) -> Complex64 {
    let n = f.grid.n;
    let dx = f.grid.dx();
    if n % 2 == 0 || n < 3 {
        return trapezoid_complex(&f.values, dx);
    }
    let v = &f.values;
    let mut s = v[0] + v[n - 1];
    for (i, x) in v.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * x } else { 2.0 * x };
    }
    s * (dx / 3.0)
}

/// Nodes and weights of the 16-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre_16() -> &'static [(f64, f64); 16] {
    static RULE: OnceLock<[(f64, f64); 16]> = OnceLock::new();
    RULE.get_or_init(|| {
        const N: usize = 16;
        let mut rule = [(0.0, 0.0); N];
        for (i, slot) in rule.iter_mut().enumerate() {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (N as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=N {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = N as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            *slot = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        rule
    })
}

/// Composite 16-point Gauss–Legendre nodes and weights on [a, b].
pub(crate) fn gl_nodes(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let rule = gauss_legendre_16();
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(16 * panels);
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * h;
        for &(x, w) in rule.iter() {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

/// Panels needed so that each panel sees at most ~8 radians of oscillation.
pub(crate) fn gl_panels(length: f64, bandwidth: f64) -> usize {
    ((length * bandwidth) / 8.0).ceil() as usize + 1
}
