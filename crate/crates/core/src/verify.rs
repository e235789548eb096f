//! Named numerical checks. Every check appends one or more [`CheckResult`]s;
//! [`run`] executes a configured selection and assembles a [`Report`].

use crate::classical::{binomial, classical_w_dim, shuffle_identity_check};
use crate::dd::e;
use crate::error::{Error, Result};
use crate::linalg::{
    image, kernel, kron, log_det, norm2, rank_info, rank_info_scaled, rel_residual, subspace_equal, subspace_intersect,
    subspace_sum, CMatrix, RankInfo, RankPolicy, Subspace,
};
use crate::report::{Report, Summary, VERSION};
use crate::rmatrix::{
    b_fn, basis_ops, belavin_s, belavin_sk, default_eta, default_tau, det_closed_form_ln, det_dd, dual_transpose_check,
    f_fn, mat_pow, odesskii_det_ln, odesskii_prefactor, r_matrix, r_matrix_dd, shift_conjugator, swap, sym_op,
    AlgebraParams, HalfPeriodPoint,
};
use crate::tensorops::{
    antisymmetrizer, embedded_family, f_d_factors, kernel_intersection, m_ab_factors, m_ab_factors_by_columns, pow,
    relation_operator, relation_space, shifted, symmetrizer, t_d_factors, ChainArgs, ChainEvaluator, ChainKind, Factor,
    OperatorVd,
};
use crate::theta::{theta_char_shift_check, Precision, SeriesPolicy, ThetaContext};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::time::Instant;

/// `τ` closer than this to an excluded torsion locus makes a check refuse.
pub const LOCUS_TOL: f64 = 1e-8;

/// Largest `n^d` for which operators on `V^⊗d` are materialised.
pub const MAX_DIM: usize = 1024;

pub const CHECKS: &[&str] = &[
    "theta",
    "qybe",
    "inverse",
    "transforms",
    "det",
    "nullity",
    "twist",
    "hilbert",
    "dual",
    "trank",
    "limits",
    "mult",
    "koszul",
    "frobenius",
    "dualalg",
    "belavin",
    "transpose",
    "shuffle",
    "chains",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Ambiguous,
    Refused,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub params: BTreeMap<String, Value>,
    pub expected: Value,
    pub observed: Value,
    pub residual: f64,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    pub status: Status,
    pub wall_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub n: usize,
    pub k: usize,
    pub eta: [f64; 2],
    /// `None` means the default `0.1234 + 0.4321η`
    pub tau: Option<[f64; 2]>,
    pub d_max: usize,
    pub seed: u64,
    pub precision: Precision,
    pub checks: Vec<String>,
    pub trials: usize,
    pub tol_residual: f64,
    pub tol_transform: f64,
    pub tol_det: f64,
    pub tol_angle: f64,
    pub tol_theta: f64,
    pub tol_limit: f64,
    pub rank_rel_threshold: f64,
    pub rank_min_gap: f64,
    /// record wall times; off gives byte-stable reports
    pub timings: bool,
}

impl Default for Config {
    fn default() -> Self {
        let eta = default_eta();
        Config {
            n: 3,
            k: 1,
            eta: [eta.re, eta.im],
            tau: None,
            d_max: 4,
            seed: 20240917,
            precision: Precision::Double,
            checks: vec!["all".into()],
            trials: 20,
            tol_residual: 1e-8,
            tol_transform: 1e-9,
            tol_det: 1e-6,
            tol_angle: 1e-6,
            tol_theta: 1e-10,
            tol_limit: 1e-2,
            rank_rel_threshold: RankPolicy::default().rel_threshold,
            rank_min_gap: RankPolicy::default().min_gap,
            timings: true,
        }
    }
}

impl Config {
    pub fn eta_c(&self) -> Complex64 {
        Complex64::new(self.eta[0], self.eta[1])
    }

    pub fn tau_c(&self) -> Complex64 {
        match self.tau {
            Some([re, im]) => Complex64::new(re, im),
            None => default_tau(self.eta_c()),
        }
    }

    /// Fills in the default `τ` so the report shows the value used.
    pub fn resolved(&self) -> Config {
        let mut c = self.clone();
        let t = self.tau_c();
        c.tau = Some([t.re, t.im]);
        c
    }

    pub fn policy(&self) -> RankPolicy {
        RankPolicy {
            rel_threshold: self.rank_rel_threshold,
            min_gap: self.rank_min_gap,
        }
    }

    pub fn params(&self) -> Result<AlgebraParams> {
        let theta = ThetaContext::with_policy(self.n, self.eta_c(), SeriesPolicy::default(), self.precision)?;
        AlgebraParams::with_context(self.k, self.tau_c(), theta, self.policy())
    }

    /// The selected check names in canonical order.
    pub fn selected(&self) -> Result<Vec<&'static str>> {
        for c in &self.checks {
            if c != "all" && !CHECKS.contains(&c.as_str()) {
                return Err(Error::InvalidParams(format!(
                    "unknown check '{c}'; known: all, {}",
                    CHECKS.join(", ")
                )));
            }
        }
        let all = self.checks.iter().any(|c| c == "all");
        Ok(CHECKS
            .iter()
            .copied()
            .filter(|c| all || self.checks.iter().any(|x| x == c))
            .collect())
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=5).contains(&self.d_max) {
            return Err(Error::InvalidParams(format!(
                "d_max must be in 2..=5, got {}",
                self.d_max
            )));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParams("trials must be positive".into()));
        }
        let tols = [
            self.tol_residual,
            self.tol_transform,
            self.tol_det,
            self.tol_angle,
            self.tol_theta,
            self.tol_limit,
        ];
        if tols.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::InvalidParams("tolerances must be positive".into()));
        }
        self.selected()?;
        self.params()?;
        Ok(())
    }
}

/// Runs the selected checks.
pub fn run(config: &Config) -> Result<Report> {
    config.validate()?;
    let config = config.resolved();
    let params = config.params()?;
    let mut results = Vec::new();
    for name in config.selected()? {
        let ctx = Ctx {
            cfg: &config,
            params: &params,
        };
        let mut rec = Rec::new(&ctx);
        let mut rng = ctx.rng(name);
        CHECK_FNS[CHECKS.iter().position(|c| *c == name).unwrap()](&ctx, &mut rec, &mut rng);
        results.extend(rec.out);
    }
    Ok(Report::new(config, results))
}

/// Runs a single named check.
pub fn run_check(config: &Config, name: &str) -> Result<Vec<CheckResult>> {
    let mut c = config.clone();
    c.checks = vec![name.to_string()];
    Ok(run(&c)?.results)
}

type CheckFn = fn(&Ctx, &mut Rec, &mut ChaCha8Rng);

const CHECK_FNS: &[CheckFn] = &[
    check_theta,
    check_qybe,
    check_inverse,
    check_transforms,
    check_det,
    check_nullity,
    check_twist,
    check_hilbert,
    check_dual,
    check_trank,
    check_limits,
    check_mult,
    check_koszul,
    check_frobenius,
    check_dualalg,
    check_belavin,
    check_transpose,
    check_shuffle,
    check_chains,
];

pub struct Ctx<'a> {
    pub cfg: &'a Config,
    pub params: &'a AlgebraParams,
}

impl Ctx<'_> {
    /// One ChaCha stream per check, so a check's samples do not depend on
    /// which other checks ran.
    fn rng(&self, name: &str) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(CHECKS.iter().position(|c| *c == name).unwrap_or(0) as u64);
        rng
    }

    fn n(&self) -> usize {
        self.params.n
    }

    fn eta(&self) -> Complex64 {
        self.params.eta()
    }

    fn tau(&self) -> Complex64 {
        self.params.tau
    }

    /// Uniform point of the fundamental parallelogram centred at 0.
    fn sample(&self, rng: &mut ChaCha8Rng) -> Complex64 {
        let (x, y): (f64, f64) = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        self.eta() * y + x
    }

    /// A sample at distance at least 0.05 from `±τ + (1/n)Λ`.
    fn generic(&self, rng: &mut ChaCha8Rng) -> Complex64 {
        let lat = &self.params.theta.lattice;
        loop {
            let z = self.sample(rng);
            if lat.torsion_distance(z - self.tau(), self.n()) > 0.05
                && lat.torsion_distance(z + self.tau(), self.n()) > 0.05
            {
                return z;
            }
        }
    }

    /// Smallest `m ≤ m_max` with `τ` within [`LOCUS_TOL`] of `(1/mn)Λ`.
    fn torsion_locus(&self, m_max: usize) -> Option<usize> {
        (1..=m_max).find(|&m| self.params.torsion_distance(m * self.n()) < LOCUS_TOL)
    }
}

type Params = Vec<(&'static str, Value)>;

pub struct Rec<'a> {
    ctx: &'a Ctx<'a>,
    out: Vec<CheckResult>,
    last: Instant,
}

impl<'a> Rec<'a> {
    fn new(ctx: &'a Ctx<'a>) -> Self {
        Rec {
            ctx,
            out: Vec::new(),
            last: Instant::now(),
        }
    }

    fn base(&self, extra: Params) -> BTreeMap<String, Value> {
        let p = self.ctx.params;
        let mut m = BTreeMap::new();
        m.insert("n".into(), json!(p.n));
        m.insert("k".into(), json!(p.k));
        m.insert("eta".into(), cj(p.eta()));
        m.insert("tau".into(), cj(p.tau));
        for (k, v) in extra {
            m.insert(k.to_string(), v);
        }
        m
    }

    fn push(&mut self, mut r: CheckResult) {
        r.residual = finite(r.residual);
        r.gap = r.gap.map(finite);
        r.wall_time = if self.ctx.cfg.timings {
            self.last.elapsed().as_secs_f64()
        } else {
            0.0
        };
        self.last = Instant::now();
        self.out.push(r);
    }

    fn add(&mut self, name: &str, extra: Params, f: impl FnOnce() -> Result<Outcome>) {
        let params = self.base(extra);
        let r = match f() {
            Ok(o) => o.into_result(name, params),
            Err(err) => error_result(name, params, err),
        };
        self.push(r);
    }

    fn refuse(&mut self, name: &str, extra: Params, note: String) {
        let params = self.base(extra);
        self.push(CheckResult {
            name: name.into(),
            params,
            expected: Value::Null,
            observed: Value::Null,
            residual: 0.0,
            tolerance: 0.0,
            gap: None,
            status: Status::Refused,
            wall_time: 0.0,
            note: Some(note),
        });
    }

    /// Refuses `name` when `τ` is near `(1/mn)Λ` for some `m ≤ m_max`.
    fn guard(&mut self, name: &str, m_max: usize) -> bool {
        match self.ctx.torsion_locus(m_max) {
            Some(m) => {
                self.refuse(
                    name,
                    vec![],
                    format!("tau is within {LOCUS_TOL:e} of (1/{})Lambda", m * self.ctx.n()),
                );
                false
            }
            None => true,
        }
    }
}

/// What a check computed, before it is turned into a [`CheckResult`].
struct Outcome {
    expected: Value,
    observed: Value,
    residual: f64,
    tolerance: f64,
    gap: Option<f64>,
    ambiguous: bool,
    note: Option<String>,
}

impl Outcome {
    fn residual(residual: f64, tolerance: f64) -> Self {
        Outcome {
            expected: json!(0.0),
            observed: json!(finite(residual)),
            residual,
            tolerance,
            gap: None,
            ambiguous: false,
            note: None,
        }
    }

    fn rank(expected: usize, info: &RankInfo, policy: &RankPolicy) -> Self {
        Outcome {
            expected: json!(expected),
            observed: json!(info.rank),
            residual: (info.rank as f64 - expected as f64).abs(),
            tolerance: 0.5,
            gap: Some(info.gap),
            ambiguous: info.ambiguous(policy),
            note: None,
        }
    }

    fn dims(expected: usize, observed: usize) -> Self {
        Outcome {
            expected: json!(expected),
            observed: json!(observed),
            residual: (observed as f64 - expected as f64).abs(),
            tolerance: 0.5,
            gap: None,
            ambiguous: false,
            note: None,
        }
    }

    /// Dimension agreement plus the largest principal angle.
    fn subspaces(a: &Subspace, b: &Subspace, tol: f64) -> Result<Self> {
        let cmp = subspace_equal(a, b, tol)?;
        Ok(Outcome {
            expected: json!({ "dim": b.dim(), "angle": 0.0 }),
            observed: json!({ "dim": a.dim(), "angle": cmp.max_principal_angle }),
            residual: cmp.max_principal_angle,
            tolerance: tol,
            gap: None,
            ambiguous: false,
            note: None,
        })
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    fn into_result(self, name: &str, params: BTreeMap<String, Value>) -> CheckResult {
        let status = if self.ambiguous {
            Status::Ambiguous
        } else if self.residual < self.tolerance {
            Status::Pass
        } else {
            Status::Fail
        };
        CheckResult {
            name: name.into(),
            params,
            expected: self.expected,
            observed: self.observed,
            residual: self.residual,
            tolerance: self.tolerance,
            gap: self.gap,
            status,
            wall_time: 0.0,
            note: self.note,
        }
    }
}

fn error_result(name: &str, params: BTreeMap<String, Value>, err: Error) -> CheckResult {
    let status = match err {
        Error::AmbiguousRank { .. } => Status::Ambiguous,
        Error::TauOnTorsion | Error::SingularLocus(_) | Error::Cap(_) => Status::Refused,
        _ => Status::Fail,
    };
    CheckResult {
        name: name.into(),
        params,
        expected: Value::Null,
        observed: Value::Null,
        residual: f64::MAX,
        tolerance: 0.0,
        gap: None,
        status,
        wall_time: 0.0,
        note: Some(err.to_string()),
    }
}

/// JSON has no infinities.
fn finite(x: f64) -> f64 {
    if x.is_nan() {
        f64::MAX
    } else {
        x.clamp(-f64::MAX, f64::MAX)
    }
}

fn cj(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    let s = a.norm().max(b.norm());
    if s == 0.0 {
        0.0
    } else {
        (a - b).norm() / s
    }
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |a, z| a.max(z.norm()))
}

/// Relative residual of `l = r` where both sides may vanish: relative to the
/// larger side when that side is not negligible against `bound`, otherwise
/// the size of the larger side against `bound`.
fn scaled_residual(l: &CMatrix, r: &CMatrix, bound: f64, rel_threshold: f64) -> f64 {
    let m = l.norm().max(r.norm());
    if m > rel_threshold * bound {
        (l - r).norm() / m
    } else if bound > 0.0 {
        m / bound
    } else {
        0.0
    }
}

fn fits(n: usize, d: usize) -> Result<()> {
    if pow(n, d) > MAX_DIM {
        return Err(Error::Cap(format!("n^d = {} exceeds {MAX_DIM}", pow(n, d))));
    }
    Ok(())
}

fn rank_scaled(m: &CMatrix, policy: &RankPolicy, bound: f64) -> RankInfo {
    rank_info_scaled(m, policy, Some(bound))
}

/// Kernel of a chain product, treating it as zero when negligible against its factor norms.
fn kernel_of(op: &OperatorVd, policy: &RankPolicy) -> Result<Subspace> {
    if rank_scaled(&op.mat, policy, op.norm_bound).rank == 0 {
        return Ok(Subspace::ambient(op.mat.ncols()));
    }
    kernel(&op.mat, policy)
}

fn image_of(op: &OperatorVd, policy: &RankPolicy) -> Result<Subspace> {
    if rank_scaled(&op.mat, policy, op.norm_bound).rank == 0 {
        return Ok(Subspace::zero(op.mat.nrows()));
    }
    image(&op.mat, policy)
}

// ---------------------------------------------------------------- theta

fn check_theta(ctx: &Ctx, rec: &mut Rec, rng: &mut ChaCha8Rng) {
    let th = &ctx.params.theta;
    let eta = ctx.eta();
    let n = ctx.n();
    let nf = n as f64;
    let tol = ctx.cfg.tol_theta;
    let zs: Vec<Complex64> = (0..5).map(|_| ctx.sample(rng)).collect();
    rec.add("theta.period_one", vec![], || {
        let mut worst = 0.0f64;
        for &z in &zs {
            worst = worst.max(rel(th.theta1(z + 1.0)?, th.theta1(z)?));
        }
        Ok(Outcome::residual(worst, tol))
    });
    rec.add("theta.period_eta", vec![], || {
        let mut worst = 0.0f64;
        for &z in &zs {
            worst = worst.max(rel(th.theta1(z + eta)?, -e(-z) * th.theta1(z)?));
        }
        Ok(Outcome::residual(worst, tol))
    });
    rec.add("theta_alpha.shift_one_over_n", vec![], || {
        let mut worst = 0.0f64;
        for &z in &zs {
            for a in 0..n as i64 {
                let lhs = th.theta_alpha(a, z + 1.0 / nf)?;
                worst = worst.max(rel(lhs, e(c(a as f64 / nf)) * th.theta_alpha(a, z)?));
            }
        }
        Ok(Outcome::residual(worst, tol))
    });
    rec.add("theta_alpha.shift_eta_over_n", vec![], || {
        let mut worst = 0.0f64;
        for &z in &zs {
            for a in 0..n as i64 {
                let lhs = th.theta_alpha(a, z + eta / nf)?;
                let rhs = e(-z - 0.5 / nf + eta * ((nf - 1.0) / (2.0 * nf))) * th.theta_alpha(a + 1, z)?;
                worst = worst.max(rel(lhs, rhs));
            }
        }
        Ok(Outcome::residual(worst, tol))
    });
    rec.add("theta_alpha.zeros", vec![], || {
        let mut worst = 0.0f64;
        for a in 0..n as i64 {
            for m in 0..n {
                let z = -eta * (a as f64 / nf) + m as f64 / nf;
                let scale = th.theta_alpha(a, z + 0.5 / nf)?.norm();
                worst = worst.max(th.theta_alpha(a, z)?.norm() / scale);
            }
        }
        Ok(Outcome::residual(worst, tol))
    });
    let chars: Vec<(f64, f64, i64, i64)> = (0..5)
        .map(|_| {
            (
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
                rng.gen_range(-2..=2),
                rng.gen_range(-2..=2),
            )
        })
        .collect();
    rec.add("theta_char.shift", vec![], || {
        let mut worst = 0.0f64;
        for (&z, &(a, b, s, t)) in zs.iter().zip(&chars) {
            worst = worst.max(theta_char_shift_check(a, b, s, t, z, eta, &th.policy)?);
        }
        Ok(Outcome::residual(worst, tol))
    });
}

// ---------------------------------------------------------------- R(z)

fn qybe2_residual(r: impl Fn(Complex64) -> Result<CMatrix>, n: usize, u: Complex64, v: Complex64) -> Result<f64> {
    let id = CMatrix::identity(n, n);
    let (ru, rv, ruv) = (r(u)?, r(v)?, r(u + v)?);
    let l = kron(&ru, &id) * kron(&id, &ruv) * kron(&rv, &id);
    let rr = kron(&id, &rv) * kron(&ruv, &id) * kron(&id, &ru);
    Ok(rel_residual(&l, &rr))
}

/// `X(u)_{12} X(u+v)_{13} X(v)_{23} = X(v)_{23} X(u+v)_{13} X(u)_{12}`.
fn qybe1_residual(x: impl Fn(Complex64) -> Result<CMatrix>, n: usize, u: Complex64, v: Complex64) -> Result<f64> {
    let id = CMatrix::identity(n, n);
    let p23 = kron(&id, &swap(n));
    let x12 = |z| -> Result<CMatrix> { Ok(kron(&x(z)?, &id)) };
    let x23 = |z| -> Result<CMatrix> { Ok(kron(&id, &x(z)?)) };
    let x13 = |z| -> Result<CMatrix> { Ok(&p23 * x12(z)? * &p23) };
    let l = x12(u)? * x13(u + v)? * x23(v)?;
    let r = x23(v)? * x13(u + v)? * x12(u)?;
    Ok(rel_residual(&l, &r))
}

fn check_qybe(ctx: &Ctx, rec: &mut Rec, rng: &mut ChaCha8Rng) {
    if !rec.guard("qybe", 1) {
        return;
    }
    let p = ctx.params;
    let n = ctx.n();
    let tol = ctx.cfg.tol_residual;
    let trials = ctx.cfg.trials;
    let pairs: Vec<(Complex64, Complex64)> = (0..trials).map(|_| (ctx.sample(rng), ctx.sample(rng))).collect();
    let extra = || vec![("trials", json!(trials))];
    rec.add("qybe.qybe2", extra(), || {
        let mut worst = 0.0f64;
        for &(u, v) in &pairs {
            worst = worst.max(qybe2_residual(|z| r_matrix(p, z), n, u, v)?);
        }
        Ok(Outcome::residual(worst, tol))
    });
    rec.add("qybe.qybe1_pr", extra(), || {
        let sw = swap(n);
        let mut worst = 0.0f64;
        for &(u, v) in &pairs {
            worst = worst.max(qybe1_residual(|z| Ok(&sw * r_matrix(p, z)?), n, u, v)?);
        }
        Ok(Outcome::residual(worst, tol))
    });
    rec.add("qybe.at_zero", vec![], || {
        let zero = Complex64::new(0.0, 0.0);
        Ok(Outcome::residual(
            qybe2_residual(|z| r_matrix(p, z), n, zero, zero)?,
            tol,
        ))
    });
}

fn check_inverse(ctx: &Ctx, rec: &mut Rec, rng: &mut ChaCha8Rng) {
    if !rec.guard("inverse", 1) {
        return;
    }
    let p = ctx.params;
    let n2 = ctx.n() * ctx.n();
    let zs: Vec<Complex64> = (0..5).map(|_| ctx.generic(rng)).collect();
    rec.add("inverse.generic", vec![("samples", json!(zs.len()))], || {
        let mut worst = 0.0f64;
        for &z in &zs {
            let m = r_matrix(p, z)? * r_matrix(p, -z)?;
            let cz = m[(0, 0)];
            worst = worst.max(rel_residual(&m, &(CMatrix::identity(n2, n2) * cz)));
        }
        Ok(Outcome::residual(worst, ctx.cfg.tol_transform))
    });
    rec.add("inverse.c_at_zero", vec![], || {
        let zero = Complex64::new(0.0, 0.0);
        let m = r_matrix(p, zero)? * r_matrix(p, zero)?;
        Ok(Outcome::residual((m[(0, 0)] - 1.0).norm(), 1e-10))
    });
    for (label, s) in [("inverse.c_at_tau", 1.0), ("inverse.c_at_minus_tau", -1.0)] {
        rec.add(label, vec![], || {
            let t = ctx.tau() * s;
            let (a, b) = (r_matrix(p, t)?, r_matrix(p, -t)?);
            let m = &a * &b;
            Ok(Outcome::residual(
                m[(0, 0)].norm() / (norm2(&a) * norm2(&b)),
                ctx.cfg.tol_residual,
            ))
        });
    }
}

fn check_transforms(ctx: &Ctx, rec: &mut Rec, rng: &mut ChaCha8Rng) {
    if !rec.guard("transforms", 1) {
        return;
    }
    let p = ctx.params;
    let n = ctx.n();
    let nf = n as f64;
    let k = p.k as i64;
    let kp = p.k_prime() as i64;
    let eta = ctx.eta();
    let o = basis_ops(n);
    let id = CMatrix::identity(n, n);
    let tol = ctx.cfg.tol_transform;
    let zs: Vec<Complex64> = (0..5).map(|_| ctx.sample(rng)).collect();
    let r = |z| r_matrix(p, z);
    let minus = p.with_tau(-p.tau);
    let shift_one = p.with_tau(p.tau + 1.0 / nf);
    let shift_eta = p.with_tau(p.tau + eta / nf);
    let nn = kron(&o.n, &o.n);
    let sign = if n.is_multiple_of(2) { -1.0 } else { 1.0 };
    type Law<'a> = Box<dyn Fn(Complex64) -> Result<(CMatrix, CMatrix)> + 'a>;
    let laws: Vec<(&str, Law)> = vec![
        (
            "transforms.z_plus_one_over_n",
            Box::new(|z| {
                let rhs = kron(&id, &mat_pow(&o.s, -k)) * r(z)? * kron(&mat_pow(&o.s, k), &id) * c(sign);
                Ok((r(z + 1.0 / nf)?, rhs))
            }),
        ),
        (
            "transforms.z_plus_eta_over_n",
            Box::new(|z| {
                let rhs = kron(&id, &mat_pow(&o.t, -1)) * r(z)? * kron(&o.t, &id) * b_fn(p, z);
                Ok((r(z + eta / nf)?, rhs))
            }),
        ),
        (
            "transforms.minus_z",
            Box::new(|z| Ok((r(-z)?, &o.p * r_matrix(&minus, z)? * &o.p * e(z * (nf * nf))))),
        ),
        (
            "transforms.minus_tau_minus_z",
            Box::new(|z| Ok((r(-z)?, &nn * r_matrix(&minus, z)? * &nn * e(z * (nf * nf))))),
        ),
        (
            "transforms.tau_plus_one_over_n",
            Box::new(|z| {
                let rhs = kron(&o.s, &id) * r(z)? * kron(&mat_pow(&o.s, -1), &id);
                Ok((r_matrix(&shift_one, z)?, rhs))
            }),
        ),
        (
            "transforms.tau_plus_eta_over_n",
            Box::new(|z| {
                let rhs = kron(&id, &mat_pow(&o.t, -kp)) * r(z)? * kron(&id, &mat_pow(&o.t, kp)) * e(z);
                Ok((r_matrix(&shift_eta, z)?, rhs))
            }),
        ),
        (
            "transforms.commute_s_s",
            Box::new(|z| {
                let ss = kron(&o.s, &o.s);
                Ok((&ss * r(z)?, r(z)? * &ss))
            }),
        ),
        (
            "transforms.commute_t_t",
            Box::new(|z| {
                let tt = kron(&o.t, &o.t);
                Ok((&tt * r(z)?, r(z)? * &tt))
            }),
        ),
    ];
    for (name, law) in &laws {
        rec.add(name, vec![("samples", json!(zs.len()))], || {
            let mut worst = 0.0f64;
            for &z in &zs {
                let (l, rr) = law(z)?;
                worst = worst.max(rel_residual(&l, &rr));
            }
            Ok(Outcome::residual(worst, tol))
        });
    }
    let random_zeta = HalfPeriodPoint::new(rng.gen_range(0..n as i64), rng.gen_range(0..n as i64));
    for zeta in [HalfPeriodPoint::new(0, 0), HalfPeriodPoint::new(2, 1), random_zeta] {
        rec.add(
            "transforms.zeta_shift",
            vec![("zeta", json!([zeta.a, zeta.b])), ("samples", json!(zs.len()))],
            || {
                let cc = shift_conjugator(n, p.k, zeta);
                let cinv = cc.clone().try_inverse().expect("shift operators are invertible");
                let mut worst = 0.0f64;
                for &z in &zs {
                    let lhs = r(z + zeta.value(n, eta))?;
                    let rhs = kron(&id, &cinv) * r(z)? * kron(&cc, &id) * f_fn(p, z, zeta);
                    worst = worst.max(rel_residual(&lhs, &rhs));
                }
                Ok(Outcome::residual(worst, tol))
            },
        );
    }
}

/// `ln det R(z)`, through double-double LU when the context is extended.
fn ln_det_r(p: &AlgebraParams, z: Complex64) -> Result<Complex64> {
    match p.theta.precision {
        Precision::Double => Ok(log_det(&r_matrix(p, z)?)),
        Precision::Extended => {
            let d = det_dd(p.n * p.n, &r_matrix_dd(p, z)?);
            Ok(Complex64::new(d.re.to_f64(), d.im.to_f64()).ln())
        }
    }
}

/// Winding number of `det R` around a `(1/n)Λ` cell whose edges stay away
/// from the zeros `±τ + (1/n)Λ`.
fn det_winding(p: &AlgebraParams, steps: usize) -> Result<f64> {
    let n = p.n as f64;
    let eta = p.eta();
    let lat = &p.theta.lattice;
    let corner = |coords: [f64; 2]| -> f64 {
        let mut xs: Vec<f64> = coords.iter().map(|x| (n * x).rem_euclid(1.0)).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (a, b) = (xs[0], xs[1]);
        // midpoint of the larger of the two arcs between the zeros
        if b - a > 1.0 - (b - a) {
            (a + b) / 2.0
        } else {
            ((b + a + 1.0) / 2.0).rem_euclid(1.0)
        }
    };
    let (x1, y1) = lat.coords(p.tau);
    let (x2, y2) = lat.coords(-p.tau);
    let cx = corner([x1, x2]);
    let cy = corner([y1, y2]);
    let z0 = (Complex64::new(cx, 0.0) + eta * cy) / n;
    let (ex, ey) = (Complex64::new(1.0 / n, 0.0), eta / n);
    let path = [(z0, ex), (z0 + ex, ey), (z0 + ex + ey, -ex), (z0 + ey, -ey)];
    let mut total = 0.0;
    let mut prev = None;
    for (start, dir) in path {
        for s in 0..steps {
            let z = start + dir * (s as f64 / steps as f64);
            let arg = log_det(&r_matrix(p, z)?).im;
            if let Some(a) = prev {
                let mut d: f64 = arg - a;
                d = (d + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
                total += d;
            }
            prev = Some(arg);
        }
    }
    let arg = log_det(&r_matrix(p, z0)?).im;
    let d = (arg - prev.unwrap() + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
    Ok((total + d) / std::f64::consts::TAU)
}

fn check_det(ctx: &Ctx, rec: &mut Rec, rng: &mut ChaCha8Rng) {
    if !rec.guard("det", 1) {
        return;
    }
    let p = ctx.params;
    let n = ctx.n();
    let tol = ctx.cfg.tol_det;
    let zs: Vec<Complex64> = (0..5).map(|_| ctx.generic(rng)).collect();
    rec.add("det.ratio", vec![("samples", json!(zs.len()))], || {
        let mut worst = 0.0f64;
        for &z in &zs {
            let ratio = (ln_det_r(p, z)? - det_closed_form_ln(p, z)?).exp();
            worst = worst.max((ratio - 1.0).norm());
        }
        Ok(Outcome::residual(worst, tol))
    });
    rec.add("det.ratio_at_zero", vec![], || {
        let z = Complex64::new(0.0, 0.0);
        let ratio = (ln_det_r(p, z)? - det_closed_form_ln(p, z)?).exp();
        Ok(Outcome::residual((ratio - 1.0).norm(), tol))
    });
    if n - p.k != p.k {
        rec.add("det.k_independence", vec![("k_other", json!(n - p.k))], || {
            let q = p.with_k(n - p.k)?;
            let mut worst = 0.0f64;
            for &z in &zs {
                let ratio = (ln_det_r(p, z)? - ln_det_r(&q, z)?).exp();
                worst = worst.max((ratio - 1.0).norm());
            }
            Ok(Outcome::residual(worst, tol))
        });
    }
    rec.add("det.odesskii", vec![("samples", json!(zs.len()))], || {
        let mut worst = 0.0f64;
        for &z in &zs {
            let pre = odesskii_prefactor(p, z)?.ln() * (n * n) as f64;
            let ratio = (ln_det_r(p, z)? - pre - odesskii_det_ln(p, z)?).exp();
            worst = worst.max((ratio - 1.0).norm());
        }
        Ok(Outcome::residual(worst, tol))
    });
    rec.add("det.zero_count", vec![], || {
        let plus = rank_info(&r_matrix(p, p.tau)?, &p.ranks);
        let minus = rank_info(&r_matrix(p, -p.tau)?, &p.ranks);
        let nullity = 2 * n * n - plus.rank - minus.rank;
        let mut o = Outcome::dims(n * n, nullity);
        o.gap = Some(plus.gap.min(minus.gap));
        o.ambiguous = plus.ambiguous(&p.ranks) || minus.ambiguous(&p.ranks);
        Ok(o)
    });
    rec.add("det.winding", vec![("steps_per_edge", json!(400))], || {
        let w = det_winding(p, 400)?;
        Ok(Outcome {
            expected: json!(n * n),
            observed: json!(w),
            residual: (w - (n * n) as f64).abs(),
            tolerance: 1e-6,
            gap: None,
            ambiguous: false,
            note: None,
        })
    });
}

fn cell(n: usize) -> Vec<HalfPeriodPoint> {
    (0..n as i64)
        .flat_map(|a| (0..n as i64).map(move |b| HalfPeriodPoint::new(a, b)))
        .collect()
}

/// Nullities of `R(s·τ + ζ)` over a `(1/n)Λ` cell, aggregated.
fn nullity_grid(p: &AlgebraParams, s: f64, expected: usize, at_least: bool) -> Result<Outcome> {
    let n = p.n;
    let mut lo = usize::MAX;
    let mut hi = 0;
    let mut gap = f64::INFINITY;
    let mut ambiguous = false;
    for zeta in cell(n) {
        let info = rank_info(&r_matrix(p, p.tau * s + zeta.value(n, p.eta()))?, &p.ranks);
        let nullity = n * n - info.rank;
        lo = lo.min(nullity);
        hi = hi.max(nullity);
        gap = gap.min(info.gap);
        ambiguous |= info.ambiguous(&p.ranks);
    }
    let residual = if at_least {
        if lo >= expected {
            0.0
        } else {
            (expected - lo) as f64
        }
    } else {
        (hi - expected).max(expected - lo.min(expected)) as f64
    };
    Ok(Outcome {
        expected: json!(expected),
        observed: json!({ "min": lo, "max": hi }),
        residual,
        tolerance: 0.5,
        gap: Some(gap),
        ambiguous,
        note: None,
    })
}

fn check_nullity(ctx: &Ctx, rec: &mut Rec, rng: &mut ChaCha8Rng) {
    if !rec.guard("nullity", 1) {
        return;
    }
    let p = ctx.params;
    let n = ctx.n();
    let special = ctx.params.torsion_distance(2 * n) < LOCUS_TOL;
    let (plus, minus) = (binomial(n + 1, 2), binomial(n, 2));
    let cells = vec![("points", json!(n * n))];
    if special {
        // only a lower bound is known at (1/2n)Λ
        for (name, s) in [("nullity.plus_tau", 1.0), ("nullity.minus_tau", -1.0)] {
            rec.add(name, cells.clone(), || {
                Ok(nullity_grid(p, s, plus, true)?.with_note("tau in (1/2n)Lambda: lower bound only"))
            });
        }
    } else {
        rec.add("nullity.plus_tau", cells.clone(), || nullity_grid(p, 1.0, plus, false));
        rec.add("nullity.minus_tau", cells, || nullity_grid(p, -1.0, minus, false));
    }
    let zs: Vec<Complex64> = (0..5).map(|_| ctx.generic(rng)).collect();
    rec.add("nullity.generic", vec![("samples", json!(zs.len()))], || {
        let mut worst = 0;
        let mut gap = f64::INFINITY;
        let mut ambiguous = false;
        for &z in &zs {
            let info = rank_info(&r_matrix(p, z)?, &p.ranks);
            worst = worst.max(n * n - info.rank);
            gap = gap.min(info.gap);
            ambiguous |= info.ambiguous(&p.ranks);
        }
        let mut o = Outcome::dims(0, worst);
        o.gap = Some(gap);
        o.ambiguous = ambiguous;
        Ok(o)
    });
}

fn check_twist(ctx: &Ctx, rec: &mut Rec, _rng: &mut ChaCha8Rng) {
    if !rec.guard("twist", 1) {
        return;
    }
    let p = ctx.params;
    let n = ctx.n();
    for zeta in cell(n) {
        rec.add("twist.rank", vec![("zeta", json!([zeta.a, zeta.b]))], || {
            let info = rank_info(&r_matrix(p, p.tau + zeta.value(n, p.eta()))?, &p.ranks);
            Ok(Outcome::rank(binomial(n, 2), &info, &p.ranks))
        });
    }
}

// ---------------------------------------------------------------- V^⊗d

fn check_hilbert(ctx: &Ctx, rec: &mut Rec, _rng: &mut ChaCha8Rng) {
    if !rec.guard("hilbert", ctx.cfg.d_max) {
        return;
    }
    let p = ctx.params;
    let n = ctx.n();
    let tol = ctx.cfg.tol_angle;
    for d in 0..=ctx.cfg.d_max {
        let dp = || vec![("d", json!(d))];
        if let Err(err) = fits(n, d) {
            rec.refuse("hilbert", dp(), err.to_string());
            continue;
        }
        let mut ev = ChainEvaluator::new(p);
        let f = match ev.f_d(-p.tau, d) {
            Ok(f) => f,
            Err(err) => {
                let params = rec.base(dp());
                rec.push(error_result("hilbert.rank", params, err));
                continue;
            }
        };
        rec.add("hilbert.rank", dp(), || {
            let info = rank_scaled(&f.mat, &p.ranks, f.norm_bound);
            Ok(Outcome::rank(binomial(n + d - 1, d), &info, &p.ranks))
        });
        if d < 2 {
            continue;
        }
        rec.add("hilbert.kernel", dp(), || {
            Outcome::subspaces(&kernel_of(&f, &p.ranks)?, &relation_space(p, d)?, tol)
        });
        rec.add("hilbert.image", dp(), || {
            let target = kernel_intersection(&r_matrix(p, p.tau)?, p, d)?;
            Outcome::subspaces(&image_of(&f, &p.ranks)?, &target, tol)
        });
    }
}

fn check_dual(ctx: &Ctx, rec: &mut Rec, _rng: &mut ChaCha8Rng) {
    let n = ctx.n();
    let top = (n + 1).min(5);
    if !rec.guard("dual", top.max(ctx.cfg.d_max)) {
        return;
    }
    let p = ctx.params;
    let tol = ctx.cfg.tol_angle;
    for d in 0..=top.max(ctx.cfg.d_max) {
        let dp = || vec![("d", json!(d))];
        if let Err(err) = fits(n, d) {
            rec.refuse("dual", dp(), err.to_string());
            continue;
        }
        let mut ev = ChainEvaluator::new(p);
        let f = match ev.f_d(p.tau, d) {
            Ok(f) => f,
            Err(err) => {
                let params = rec.base(dp());
                rec.push(error_result("dual.rank", params, err));
                continue;
            }
        };
        rec.add("dual.rank", dp(), || {
            let info = rank_scaled(&f.mat, &p.ranks, f.norm_bound);
            Ok(Outcome::rank(binomial(n, d), &info, &p.ranks))
        });
        if d < 2 || d > ctx.cfg.d_max {
            continue;
        }
        rec.add("dual.kernel", dp(), || {
            let rel = image(&r_matrix(p, -p.tau)?, &p.ranks)?;
            let fam = embedded_family(&rel, n, d);
            let target = subspace_sum(&fam.iter().collect::<Vec<_>>(), &p.ranks)?;
            Outcome::subspaces(&kernel_of(&f, &p.ranks)?, &target, tol)
        });
        rec.add("dual.image", dp(), || {
            let target = kernel_intersection(&r_matrix(p, -p.tau)?, p, d)?;
            Outcome::subspaces(&image_of(&f, &p.ranks)?, &target, tol)
        });
    }
}

/// `(label, z, expected rank)` for `T_d(z, (−τ)^{d−2})`.
fn t_table_left(n: usize, d: usize, tau: Complex64, z_generic: Complex64) -> Vec<(String, Complex64, usize)> {
    let generic = n * binomial(n + d - 2, d - 1);
    let mut out = vec![("-1".to_string(), -tau, binomial(n + d - 1, d))];
    for m in 1..d - 1 {
        out.push((m.to_string(), tau * m as f64, 0));
    }
    out.push((
        (d - 1).to_string(),
        tau * (d - 1) as f64,
        generic - binomial(n + d - 1, d),
    ));
    out.push(("generic".into(), z_generic, generic));
    out
}

/// `(label, z, expected rank)` for `T_d(τ^{d−2}, z)`.
fn t_table_right(n: usize, d: usize, tau: Complex64, z_generic: Complex64) -> Vec<(String, Complex64, usize)> {
    let generic = n * binomial(n, d - 1);
    let mut out = vec![("1".to_string(), tau, binomial(n, d))];
    for m in 1..d - 1 {
        out.push((format!("-{m}"), -tau * m as f64, 0));
    }
    out.push((format!("-{}", d - 1), -tau * (d - 1) as f64, generic - binomial(n, d)));
    out.push(("generic".into(), z_generic, generic));
    out
}

fn check_trank(ctx: &Ctx, rec: &mut Rec, rng: &mut ChaCha8Rng) {
    let top = ctx.cfg.d_max.min(4);
    if !rec.guard("trank", top) {
        return;
    }
    let p = ctx.params;
    let n = ctx.n();
    let t = ctx.tau();
    for d in 3..=top {
        if let Err(err) = fits(n, d) {
            rec.refuse("trank", vec![("d", json!(d))], err.to_string());
            continue;
        }
        let zg = ctx.generic(rng);
        let mut ev = ChainEvaluator::new(p);
        for (side, table) in [
            ("left", t_table_left(n, d, t, zg)),
            ("right", t_table_right(n, d, t, zg)),
        ] {
            for (label, z, expected) in table {
                let name = format!("trank.{side}");
                rec.add(&name, vec![("d", json!(d)), ("z", json!(label))], || {
                    let args: Vec<Complex64> = if side == "left" {
                        std::iter::once(z).chain(std::iter::repeat_n(-t, d - 2)).collect()
                    } else {
                        std::iter::repeat_n(t, d - 2).chain(std::iter::once(z)).collect()
                    };
                    let op = ev.t_d(&args)?;
                    let info = rank_scaled(&op.mat, &p.ranks, op.norm_bound);
                    Ok(Outcome::rank(expected, &info, &p.ranks))
                });
            }
        }
    }
}

pub const LIMIT_EPS: [f64; 4] = [1e-2, 5e-3, 2.5e-3, 1.25e-3];

/// Deviation at the smallest `ε` against `tol`.
fn decay_outcome(devs: &[f64], tol: f64) -> Outcome {
    let mut o = Outcome::residual(*devs.last().unwrap(), tol);
    o.observed = json!(devs);
    o
}

/// Monotone decrease with a fitted order of at least 0.9 in `ε`.
fn rate_outcome(devs: &[f64]) -> Outcome {
    let monotone = devs.windows(2).all(|w| w[1] <= w[0] || w[1] < 1e-13);
    // local order between the two smallest ε
    let k = devs.len() - 1;
    let order = if devs[k] < 1e-13 {
        f64::INFINITY
    } else {
        (devs[k - 1] / devs[k]).ln() / (LIMIT_EPS[k - 1] / LIMIT_EPS[k]).ln()
    };
    let residual = if monotone { (0.9 - order).max(0.0) } else { 1.0 };
    Outcome {
        expected: json!({ "monotone": true, "order_at_least": 0.9 }),
        observed: json!({ "monotone": monotone, "order": finite(order) }),
        residual,
        tolerance: 1e-12,
        gap: None,
        ambiguous: false,
        note: None,
    }
}

fn check_limits(ctx: &Ctx, rec: &mut Rec, _rng: &mut ChaCha8Rng) {
    let base = ctx.params;
    let n = ctx.n();
    let tol = ctx.cfg.tol_limit;
    let at = |eps: f64| base.with_tau(Complex64::new(eps, 0.0));
    let eps = || vec![("eps", json!(LIMIT_EPS))];
    for m in -2i64..=3 {
        let target = sym_op(m, n);
        let devs = LIMIT_EPS
            .iter()
            .map(|&x| {
                Ok(max_abs(
                    &(r_matrix(&at(x), Complex64::new(x * m as f64, 0.0))? - &target),
                ))
            })
            .collect::<Result<Vec<f64>>>();
        let mut ps = eps();
        ps.push(("m", json!(m)));
        rec.add("limits.sym", ps.clone(), || {
            devs.clone().map(|d| decay_outcome(&d, tol))
        });
        rec.add("limits.sym_rate", ps, || devs.map(|d| rate_outcome(&d)));
    }
    let d = 3;
    // Π_{m<d} m!
    let norm: f64 = (1..d).map(|m| (1..=m).product::<usize>() as f64).product();
    for (name, s, target) in [
        ("limits.f_minus_symmetrizer", -1.0, symmetrizer(d, n)),
        ("limits.f_plus_antisymmetrizer", 1.0, antisymmetrizer(d, n)),
    ] {
        let devs = LIMIT_EPS
            .iter()
            .map(|&x| {
                let p = at(x);
                let f = ChainEvaluator::new(&p).f_d(Complex64::new(s * x, 0.0), d)?;
                Ok(max_abs(&(f.value() / c(norm) - &target)))
            })
            .collect::<Result<Vec<f64>>>();
        let mut ps = eps();
        ps.push(("d", json!(d)));
        rec.add(name, ps.clone(), || devs.clone().map(|d| decay_outcome(&d, tol)));
        rec.add(&format!("{name}_rate"), ps, || devs.map(|d| rate_outcome(&d)));
    }
}

fn check_mult(ctx: &Ctx, rec: &mut Rec, rng: &mut ChaCha8Rng) {
    if !rec.guard("mult", 4) {
        return;
    }
    let p = ctx.params;
    let tol = ctx.cfg.tol_residual;
    let rt = p.ranks.rel_threshold;
    let mut ev = ChainEvaluator::new(p);
    for (sign, label) in [(-1.0, "minus"), (1.0, "plus")] {
        let t = ctx.tau() * sign;
        for (a, b) in [(1usize, 1usize), (1, 2), (2, 1), (2, 2)] {
            rec.add(
                "mult.identity",
                vec![("sign", json!(label)), ("a", json!(a)), ("b", json!(b))],
                || {
                    let mut f = m_ab_factors(b, a, t, &vec![t; b - 1], &vec![t; a - 1])?;
                    f.extend(f_d_factors(t, a));
                    f.extend(shifted(&f_d_factors(t, b), a));
                    let lhs = ev.product(&f, a + b)?;
                    let rhs = ev.f_d(t, a + b)?;
                    let (l, r, bound) = lhs.aligned(&rhs);
                    Ok(Outcome::residual(scaled_residual(&l, &r, bound, rt), tol))
                },
            );
        }
        // (xy)z = x(yz) for the product induced on the images of F
        rec.add("mult.associativity", vec![("sign", json!(label))], || {
            let mut l = m_ab_factors(1, 2, t, &[], &[t])?;
            l.extend(f_d_factors(t, 2));
            let mut r = m_ab_factors(2, 1, t, &[t], &[])?;
            r.extend(shifted(&f_d_factors(t, 2), 1));
            let (lo, ro) = (ev.product(&l, 3)?, ev.product(&r, 3)?);
            let (l, r, bound) = lo.aligned(&ro);
            Ok(Outcome::residual(scaled_residual(&l, &r, bound, rt), tol))
        });
    }
    for (a, b) in [(1usize, 2usize), (2, 1), (2, 2)] {
        rec.add("mult.rows_vs_columns", vec![("a", json!(a)), ("b", json!(b))], || {
            let z = ctx.sample(rng) * 0.3;
            let x: Vec<Complex64> = (1..a).map(|_| ctx.sample(rng) * 0.3).collect();
            let y: Vec<Complex64> = (1..b).map(|_| ctx.sample(rng) * 0.3).collect();
            let m1 = ev.product(&m_ab_factors(a, b, z, &x, &y)?, a + b)?;
            let m2 = ev.product(&m_ab_factors_by_columns(a, b, z, &x, &y)?, a + b)?;
            let (l, r, _) = m1.aligned(&m2);
            Ok(Outcome::residual(rel_residual(&l, &r), ctx.cfg.tol_transform))
        });
    }
}

fn check_koszul(ctx: &Ctx, rec: &mut Rec, _rng: &mut ChaCha8Rng) {
    if !rec.guard("koszul", ctx.cfg.d_max) {
        return;
    }
    let p = ctx.params;
    let n = ctx.n();
    let pol = &p.ranks;
    let tol = ctx.cfg.tol_angle;
    let rel = match relation_operator(p).and_then(|m| image(&m, pol)) {
        Ok(r) => r,
        Err(err) => {
            let params = rec.base(vec![]);
            rec.push(error_result("koszul", params, err));
            return;
        }
    };
    for d in 3..=ctx.cfg.d_max {
        if let Err(err) = fits(n, d) {
            rec.refuse("koszul", vec![("d", json!(d))], err.to_string());
            continue;
        }
        let fam = embedded_family(&rel, n, d);
        let sigma = |l: usize| -> Result<Subspace> {
            if l == 0 {
                return Ok(Subspace::zero(pow(n, d)));
            }
            subspace_sum(&fam[..l].iter().collect::<Vec<_>>(), pol)
        };
        let inter = |r: usize| -> Result<Subspace> {
            if r == 0 {
                return Ok(Subspace::ambient(pow(n, d)));
            }
            subspace_intersect(&fam[d - 1 - r..].iter().collect::<Vec<_>>(), pol)
        };
        for ell in 0..d {
            let r = d - 1 - ell;
            rec.add(
                "koszul.w",
                vec![("d", json!(d)), ("l", json!(ell)), ("r", json!(r))],
                || {
                    let w = subspace_intersect(&[&sigma(ell)?, &inter(r)?], pol)?;
                    Ok(Outcome::dims(classical_w_dim(n, d, ell, r)?, w.dim()))
                },
            );
        }
        for ell in 1..d {
            let r = d - 1 - ell;
            rec.add(
                "koszul.wlr",
                vec![("d", json!(d)), ("l", json!(ell)), ("r", json!(r))],
                || {
                    let prev = sigma(ell - 1)?;
                    let lhs = subspace_sum(&[&prev, &inter(r + 1)?], pol)?;
                    let inner = subspace_sum(&[&prev, &inter(r)?], pol)?;
                    let rhs = subspace_intersect(&[&sigma(ell)?, &inner], pol)?;
                    Outcome::subspaces(&lhs, &rhs, tol)
                },
            );
        }
    }
}

fn check_frobenius(ctx: &Ctx, rec: &mut Rec, _rng: &mut ChaCha8Rng) {
    let n = ctx.n();
    if !rec.guard("frobenius", n + 1) {
        return;
    }
    let p = ctx.params;
    let mut ev = ChainEvaluator::new(p);
    if fits(n, n + 1).is_ok() {
        rec.add("frobenius.top_vanishes", vec![("d", json!(n + 1))], || {
            let f = ev.f_d(p.tau, n + 1)?;
            Ok(Outcome::rank(0, &rank_scaled(&f.mat, &p.ranks, f.norm_bound), &p.ranks))
        });
    } else {
        rec.refuse(
            "frobenius.top_vanishes",
            vec![("d", json!(n + 1))],
            format!("n^d exceeds {MAX_DIM}"),
        );
    }
    if let Err(err) = fits(n, n) {
        rec.refuse("frobenius", vec![("d", json!(n))], err.to_string());
        return;
    }
    let f = match ev.f_d(p.tau, n) {
        Ok(f) => f,
        Err(err) => {
            let params = rec.base(vec![]);
            rec.push(error_result("frobenius.top_rank", params, err));
            return;
        }
    };
    rec.add("frobenius.top_rank", vec![("d", json!(n))], || {
        Ok(Outcome::rank(1, &rank_scaled(&f.mat, &p.ranks, f.norm_bound), &p.ranks))
    });
    // coefficients of F_n(τ) e_j against the largest column
    let dim = pow(n, n);
    let best = (0..dim)
        .max_by(|&a, &b| f.mat.column(a).norm().partial_cmp(&f.mat.column(b).norm()).unwrap())
        .unwrap();
    let u = f.mat.column(best).into_owned();
    let uu = u.dotc(&u);
    let coef: Vec<Complex64> = (0..dim).map(|j| u.dotc(&f.mat.column(j)) / uu).collect();
    for i in 0..=n {
        rec.add("frobenius.pairing_rank", vec![("i", json!(i))], || {
            let (rows, cols) = (pow(n, i), pow(n, n - i));
            let m = CMatrix::from_fn(rows, cols, |r, c| coef[r * cols + c]);
            Ok(Outcome::rank(binomial(n, i), &rank_info(&m, &p.ranks), &p.ranks))
        });
    }
}

fn check_dualalg(ctx: &Ctx, rec: &mut Rec, _rng: &mut ChaCha8Rng) {
    if !rec.guard("dualalg", 1) {
        return;
    }
    let p = ctx.params;
    let n = ctx.n();
    rec.add("dualalg.transpose_image", vec![("k_dual", json!(n - p.k))], || {
        let a = image(&r_matrix(p, p.tau)?.transpose(), &p.ranks)?;
        let q = p.with_k(n - p.k)?.with_tau(-p.tau);
        let b = image(&r_matrix(&q, -p.tau)?, &p.ranks)?;
        Outcome::subspaces(&a, &b, ctx.cfg.tol_angle)
    });
    rec.add("dualalg.kernel_dim_k1", vec![], || {
        let q = p.with_k(1)?;
        let m = r_matrix(&q, q.tau)?;
        let info = rank_info(&m, &p.ranks);
        let mut o = Outcome::dims(binomial(n + 1, 2), kernel(&m, &p.ranks)?.dim());
        o.gap = Some(info.gap);
        o.ambiguous = info.ambiguous(&p.ranks);
        Ok(o)
    });
}

fn check_belavin(ctx: &Ctx, rec: &mut Rec, rng: &mut ChaCha8Rng) {
    if !rec.guard("belavin", 1) {
        return;
    }
    let p = ctx.params;
    let n = ctx.n();
    let nf = n as f64;
    let tol = ctx.cfg.tol_residual;
    let zs: Vec<Complex64> = (0..5).map(|_| ctx.sample(rng) * 0.5).collect();
    rec.add("belavin.relation", vec![("samples", json!(zs.len()))], || {
        let sw = swap(n);
        let mut worst = 0.0f64;
        for &z in &zs {
            let lhs = belavin_sk(p, -z * nf)?;
            let rhs = &sw * r_matrix(p, z)? * (e(z * (0.5 * nf * (nf + 1.0))) * nf);
            worst = worst.max(rel_residual(&lhs, &rhs));
        }
        Ok(Outcome::residual(worst, tol))
    });
    let pairs: Vec<(Complex64, Complex64)> = (0..5).map(|_| (ctx.sample(rng), ctx.sample(rng))).collect();
    rec.add("belavin.qybe1", vec![("samples", json!(pairs.len()))], || {
        let mut worst = 0.0f64;
        for &(u, v) in &pairs {
            worst = worst.max(qybe1_residual(|z| belavin_s(p, z), n, u, v)?);
        }
        Ok(Outcome::residual(worst, tol))
    });
}

fn check_transpose(ctx: &Ctx, rec: &mut Rec, rng: &mut ChaCha8Rng) {
    if !rec.guard("transpose", 1) {
        return;
    }
    let p = ctx.params;
    let zs: Vec<Complex64> = (0..5).map(|_| ctx.sample(rng)).collect();
    rec.add("transpose.dual", vec![("samples", json!(zs.len()))], || {
        let mut worst = 0.0f64;
        for &z in &zs {
            worst = worst.max(dual_transpose_check(p, z)?);
        }
        Ok(Outcome::residual(worst, ctx.cfg.tol_transform))
    });
}

fn check_shuffle(_ctx: &Ctx, rec: &mut Rec, _rng: &mut ChaCha8Rng) {
    for (a, b) in [(1, 1), (1, 2), (2, 1), (1, 3), (2, 2), (3, 1)] {
        rec.add("shuffle.decomposition", vec![("a", json!(a)), ("b", json!(b))], || {
            let ok = shuffle_identity_check(a, b)?;
            let mut o = Outcome::residual(if ok { 0.0 } else { 1.0 }, 0.5);
            o.expected = json!(true);
            o.observed = json!(ok);
            Ok(o)
        });
    }
}

/// Chain identities that hold factor by factor or through the Yang–Baxter equation.
fn check_chains(ctx: &Ctx, rec: &mut Rec, rng: &mut ChaCha8Rng) {
    let top = ctx.cfg.d_max;
    if !rec.guard("chains", top) {
        return;
    }
    let p = ctx.params;
    let n = ctx.n();
    let tol = ctx.cfg.tol_transform;
    let mut ev = ChainEvaluator::new(p);
    for d in 3..=top {
        if fits(n, d).is_err() {
            rec.refuse("chains", vec![("d", json!(d))], format!("n^d exceeds {MAX_DIM}"));
            continue;
        }
        let mut small = || ctx.sample(rng) * 0.3;
        // t[q] for q = 1..d−1; t[0] unused
        let t: Vec<Complex64> = (0..d).map(|_| small()).collect();
        let zz: Vec<Complex64> = t[1..].to_vec();
        let rev: Vec<Complex64> = zz.iter().rev().cloned().collect();
        let sum = |a: usize, b: usize| -> Complex64 { (a..=b).map(|q| t[q]).sum() };
        let up = |i, j, args| ChainArgs::new(ChainKind::Up, i, j, args);
        let down = |i, j, args| ChainArgs::new(ChainKind::Down, i, j, args);
        let rup = |i, j, args| ChainArgs::new(ChainKind::RevUp, i, j, args);
        let rdown = |i, j, args| ChainArgs::new(ChainKind::RevDown, i, j, args);
        let seq = |a: usize, b: usize| -> Vec<Complex64> { (a..=b).map(|q| t[q]).collect() };
        let seq_rev = |a: usize, b: usize| -> Vec<Complex64> { (a..=b).rev().map(|q| t[q]).collect() };
        let cat = |parts: &[&ChainArgs]| -> Result<Vec<Factor>> {
            let mut out = Vec::new();
            for c in parts {
                out.extend(c.factors()?);
            }
            Ok(out)
        };
        let mut compare = |name: &str, extra: Params, l: Result<Vec<Factor>>, r: Result<Vec<Factor>>| {
            let mut ps = vec![("d", json!(d))];
            ps.extend(extra);
            rec.add(name, ps, || {
                let (lo, ro) = (ev.product(&l?, d)?, ev.product(&r?, d)?);
                let (l, r, _) = lo.aligned(&ro);
                Ok(Outcome::residual(rel_residual(&l, &r), tol))
            });
        };

        // the four expressions for T_d
        let td = t_d_factors(&zz);
        let mut f1 = t_d_factors(&zz[..d - 2]);
        f1.extend(down(1, d, zz.clone()).factors().unwrap());
        let mut f2 = shifted(&t_d_factors(&zz[1..]), 1);
        f2.extend(up(1, d, rev.clone()).factors().unwrap());
        let mut f3 = rup(1, d, zz.clone()).factors().unwrap();
        f3.extend(t_d_factors(&zz[1..]));
        let mut f4 = rdown(1, d, rev.clone()).factors().unwrap();
        f4.extend(shifted(&t_d_factors(&zz[..d - 2]), 1));
        for (i, f) in [f1, f2, f3, f4].into_iter().enumerate() {
            compare(
                "chains.t_d_expansion",
                vec![("form", json!(i + 1))],
                Ok(td.clone()),
                Ok(f),
            );
        }

        // factorizations at (i, j, k) = (1, j, d)
        let (i, k) = (1, d);
        let j = d.div_ceil(2);
        let mut a1 = seq(i, j - 2);
        a1.push(sum(j - 1, k - 1));
        compare(
            "chains.factorization",
            vec![("form", json!(1))],
            cat(&[&up(i, k, seq(i, k - 1))]),
            cat(&[&up(i, j, a1), &up(j, k, seq(j, k - 1))]),
        );
        let mut a2 = seq_rev(j + 1, k - 1);
        a2.push(sum(i, j));
        compare(
            "chains.factorization",
            vec![("form", json!(2))],
            cat(&[&down(i, k, seq_rev(i, k - 1))]),
            cat(&[&down(j, k, a2), &down(i, j, seq_rev(i, j - 1))]),
        );
        let mut a3 = vec![sum(i, j)];
        a3.extend(seq(j + 1, k - 1));
        compare(
            "chains.factorization",
            vec![("form", json!(3))],
            cat(&[&rup(i, k, seq(i, k - 1))]),
            cat(&[&rup(i, j, seq(i, j - 1)), &rup(j, k, a3)]),
        );
        let mut a4 = vec![sum(j - 1, k - 1)];
        a4.extend(seq_rev(i, j - 2));
        compare(
            "chains.factorization",
            vec![("form", json!(4))],
            cat(&[&rdown(i, k, seq_rev(i, k - 1))]),
            cat(&[&rdown(j, k, seq_rev(j, k - 1)), &rdown(i, j, a4)]),
        );

        // S written through S^rev
        let mut r2 = vec![sum(1, d - 1)];
        r2.extend(seq(1, d - 2).into_iter().map(|x| -x));
        compare(
            "chains.rev_up",
            vec![],
            cat(&[&up(1, d, seq(1, d - 1))]),
            cat(&[&rup(1, d, r2)]),
        );
        let mut r1 = vec![sum(1, d - 1)];
        r1.extend(seq_rev(2, d - 1).into_iter().map(|x| -x));
        compare(
            "chains.rev_down",
            vec![],
            cat(&[&down(1, d, seq_rev(1, d - 1))]),
            cat(&[&rdown(1, d, r1)]),
        );

        // T_{a+b}(x, z, y) = M_{a,b}(z; x^rev; y) T^R_a(x) T^L_b(y) and the two shift identities
        for a in 1..d {
            let b = d - a;
            let x: Vec<Complex64> = (1..a).map(|_| small()).collect();
            let y: Vec<Complex64> = (1..b).map(|_| small()).collect();
            let z = small();
            let xr: Vec<Complex64> = x.iter().rev().cloned().collect();
            let all: Vec<Complex64> = x.iter().chain(std::iter::once(&z)).chain(y.iter()).cloned().collect();
            let ab = || vec![("a", json!(a)), ("b", json!(b))];
            let rhs = m_ab_factors(a, b, z, &xr, &y).map(|mut f| {
                f.extend(shifted(&t_d_factors(&x), b));
                f.extend(t_d_factors(&y));
                f
            });
            compare("chains.tmt", ab(), Ok(t_d_factors(&all)), rhs);

            let sx: Complex64 = x.iter().sum();
            let neg: Vec<Complex64> = x.iter().map(|v| -v).collect();
            let l1 = m_ab_factors(a, b, z + sx, &neg, &y).map(|m| {
                let mut f = t_d_factors(&x);
                f.extend(m);
                f
            });
            let r1 = m_ab_factors(a, b, z, &xr, &y).map(|mut f| {
                f.extend(shifted(&t_d_factors(&x), b));
                f
            });
            compare("chains.tm_mt_left", ab(), l1, r1);

            let sy: Complex64 = y.iter().sum();
            let neg_rev: Vec<Complex64> = y.iter().rev().map(|v| -v).collect();
            let l2 = m_ab_factors(a, b, z + sy, &xr, &neg_rev).map(|m| {
                let mut f = shifted(&t_d_factors(&y), a);
                f.extend(m);
                f
            });
            let r2 = m_ab_factors(a, b, z, &xr, &y).map(|mut f| {
                f.extend(t_d_factors(&y));
                f
            });
            compare("chains.tm_mt_right", ab(), l2, r2);
        }

        // F_d(−τ) is killed by R(τ)_{i,i+1} from either side
        for pos in 1..d {
            rec.add("chains.annihilation", vec![("d", json!(d)), ("i", json!(pos))], || {
                let f = f_d_factors(-p.tau, d);
                let r = Factor { pos, z: p.tau };
                let mut right = f.clone();
                right.push(r);
                let mut left = vec![r];
                left.extend(f);
                let (lo, ro) = (ev.product(&left, d)?, ev.product(&right, d)?);
                let res = (lo.mat.norm() / lo.norm_bound).max(ro.mat.norm() / ro.norm_bound);
                Ok(Outcome::residual(res, ctx.cfg.tol_residual))
            });
        }
    }
}

/// Report header: the parameters in use and the built-in defaults.
pub fn header(config: &Config) -> String {
    let c = config.resolved();
    let t = c.tau_c();
    let e = default_eta();
    format!(
        "elliptic-qybe {VERSION}: n={} k={} eta={}{:+}i tau={}{:+}i d_max={} seed={} precision={} \
         (defaults: eta={}{:+}i, tau=0.1234+0.4321*eta, d_max=4, seed={})",
        c.n,
        c.k,
        c.eta[0],
        c.eta[1],
        t.re,
        t.im,
        c.d_max,
        c.seed,
        serde_json::to_value(c.precision).unwrap().as_str().unwrap_or_default(),
        e.re,
        e.im,
        Config::default().seed,
    )
}

pub fn summarize(results: &[CheckResult]) -> Summary {
    let count = |s: Status| results.iter().filter(|r| r.status == s).count();
    Summary {
        total: results.len(),
        pass: count(Status::Pass),
        fail: count(Status::Fail),
        ambiguous: count(Status::Ambiguous),
        refused: count(Status::Refused),
    }
}
