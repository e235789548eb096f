//! WebAssembly bindings for the static page in `www/`.
//!
//! Fields are returned row-major, `height` rows of `width` samples, row 0 at
//! `im_max`.

use elliptic_qybe::linalg::{log_det, rank_info_scaled};
use elliptic_qybe::rmatrix::{r_matrix, AlgebraParams};
use elliptic_qybe::tensorops::ChainEvaluator;
use elliptic_qybe::theta::ThetaContext;
use num_complex::Complex64;
use wasm_bindgen::prelude::*;

/// A rectangle in the z-plane sampled on a `width × height` grid.
#[derive(Clone, Copy, Debug)]
pub struct Window {
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub width: usize,
    pub height: usize,
}

impl Window {
    fn points(&self) -> impl Iterator<Item = Complex64> + '_ {
        let step = |lo: f64, hi: f64, m: usize, i: usize| {
            if m < 2 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (m - 1) as f64
            }
        };
        (0..self.height).flat_map(move |r| {
            let y = step(self.im.1, self.im.0, self.height, r);
            (0..self.width).map(move |c| Complex64::new(step(self.re.0, self.re.1, self.width, c), y))
        })
    }

    fn check(&self) -> Result<(), String> {
        if self.width == 0 || self.height == 0 || self.width * self.height > 1 << 20 {
            return Err(format!("bad grid {}x{}", self.width, self.height));
        }
        Ok(())
    }
}

/// `log10 |θ_α(z)|` over the window.
pub fn theta_log_abs(n: usize, alpha: i64, eta: Complex64, w: &Window) -> Result<Vec<f64>, String> {
    w.check()?;
    let ctx = ThetaContext::new(n, eta).map_err(|e| e.to_string())?;
    w.points()
        .map(|z| {
            ctx.theta_alpha(alpha, z)
                .map(|t| t.norm().log10())
                .map_err(|e| e.to_string())
        })
        .collect()
}

/// `log10 |det R(z)|` over the window.
pub fn det_log_abs(n: usize, k: usize, eta: Complex64, tau: Complex64, w: &Window) -> Result<Vec<f64>, String> {
    w.check()?;
    let p = AlgebraParams::new(n, k, eta, tau).map_err(|e| e.to_string())?;
    w.points()
        .map(|z| {
            let r = r_matrix(&p, z).map_err(|e| e.to_string())?;
            Ok(log_det(&r).re / std::f64::consts::LN_10)
        })
        .collect()
}

/// Ranks of `F_d(−τ)` for `d = 0..=d_max`, then of `F_d(τ)` for the same `d`.
pub fn chain_ranks(n: usize, k: usize, eta: Complex64, tau: Complex64, d_max: usize) -> Result<Vec<u32>, String> {
    let p = AlgebraParams::new(n, k, eta, tau).map_err(|e| e.to_string())?;
    if n.checked_pow(d_max as u32).is_none_or(|dim| dim > 1024) {
        return Err(format!("n^d_max = {n}^{d_max} exceeds 1024"));
    }
    let mut ev = ChainEvaluator::new(&p);
    let mut out = Vec::new();
    for z in [-tau, tau] {
        for d in 0..=d_max {
            let f = ev.f_d(z, d).map_err(|e| e.to_string())?;
            out.push(rank_info_scaled(&f.mat, &p.ranks, Some(f.norm_bound)).rank as u32);
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn theta_field(
    n: usize,
    alpha: i32,
    eta_re: f64,
    eta_im: f64,
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
    width: usize,
    height: usize,
) -> Result<Vec<f64>, JsError> {
    let w = Window {
        re: (re_min, re_max),
        im: (im_min, im_max),
        width,
        height,
    };
    theta_log_abs(n, alpha.into(), Complex64::new(eta_re, eta_im), &w).map_err(|e| JsError::new(&e))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn det_field(
    n: usize,
    k: usize,
    eta_re: f64,
    eta_im: f64,
    tau_re: f64,
    tau_im: f64,
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
    width: usize,
    height: usize,
) -> Result<Vec<f64>, JsError> {
    let w = Window {
        re: (re_min, re_max),
        im: (im_min, im_max),
        width,
        height,
    };
    det_log_abs(n, k, Complex64::new(eta_re, eta_im), Complex64::new(tau_re, tau_im), &w).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn hilbert_ranks(
    n: usize,
    k: usize,
    eta_re: f64,
    eta_im: f64,
    tau_re: f64,
    tau_im: f64,
    d_max: usize,
) -> Result<Vec<u32>, JsError> {
    chain_ranks(
        n,
        k,
        Complex64::new(eta_re, eta_im),
        Complex64::new(tau_re, tau_im),
        d_max,
    )
    .map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const ETA: Complex64 = Complex64::new(0.31, 1.37);

    fn tau() -> Complex64 {
        Complex64::new(0.1234, 0.0) + ETA * 0.4321
    }

    #[test]
    fn grid_layout() {
        let w = Window {
            re: (0.0, 1.0),
            im: (-1.0, 1.0),
            width: 3,
            height: 2,
        };
        let pts: Vec<_> = w.points().collect();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], Complex64::new(0.0, 1.0));
        assert_eq!(pts[5], Complex64::new(1.0, -1.0));
    }

    #[test]
    fn theta_is_periodic_in_one() {
        let w = |x0: f64| Window {
            re: (x0, x0 + 0.5),
            im: (-0.3, 0.4),
            width: 4,
            height: 3,
        };
        let a = theta_log_abs(3, 1, ETA, &w(0.1)).unwrap();
        let b = theta_log_abs(3, 1, ETA, &w(1.1)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn det_is_one_at_zero() {
        let w = Window {
            re: (0.0, 0.0),
            im: (0.0, 0.0),
            width: 1,
            height: 1,
        };
        let v = det_log_abs(3, 1, ETA, tau(), &w).unwrap();
        assert!(v[0].abs() < 1e-10);
    }

    #[test]
    fn ranks() {
        assert_eq!(
            chain_ranks(3, 1, ETA, tau(), 4).unwrap(),
            [1, 3, 6, 10, 15, 1, 3, 3, 1, 0]
        );
        assert!(chain_ranks(5, 1, ETA, tau(), 5).is_err());
    }

    #[test]
    fn bad_input() {
        let w = Window {
            re: (0.0, 1.0),
            im: (0.0, 1.0),
            width: 0,
            height: 1,
        };
        assert!(theta_log_abs(3, 0, ETA, &w).is_err());
        assert!(det_log_abs(3, 1, Complex64::new(1.0, -1.0), tau(), &Window { width: 1, ..w }).is_err());
    }
}
