//! Source terms, the structural hypotheses they must satisfy, and the
//! constants and exponents the a priori estimates are built from.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("logistic source needs a > 0 and b > 0 (got a = {a}, b = {b})")]
    LogisticCoefficients { a: f64, b: f64 },
    #[error("logistic source needs 1 <= alpha < beta (got alpha = {alpha}, beta = {beta})")]
    LogisticExponents { alpha: f64, beta: f64 },
    #[error("gradient sink needs c >= 0 (got {0})")]
    NegativeDamping(f64),
    #[error("gradient exponent must lie in [1, 2] (got {0})")]
    GammaOutOfRange(f64),
    #[error("chemotactic sensitivity must be finite (got {0})")]
    BadChi(f64),
    #[error("constant C2 must be positive (got {0})")]
    BadC2(f64),
    #[error("operation needs a polynomial logistic source")]
    NotPolynomial,
    #[error("sample set is empty")]
    EmptySamples,
    #[error("exponent p must exceed 1 (got {0})")]
    BadP(f64),
    #[error("dimension must be at least {min} (got {got})")]
    BadDimension { min: usize, got: usize },
    #[error("gamma must be at least 1 (got {0})")]
    GammaTooSmall(f64),
    #[error("hypothesis {0} fails for this source")]
    HypothesisFailed(Hypothesis),
}

/// Growth/decay source `f`.
#[derive(Clone)]
pub enum SourceF {
    /// `f(s) = a s^α − b s^β`.
    PolynomialLogistic {
        a: f64,
        b: f64,
        alpha: f64,
        beta: f64,
    },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// Gradient-dependent sink `g`.
#[derive(Clone)]
pub enum SourceG {
    /// `g(z) = c |z|^γ`.
    GradientPower { c: f64, gamma: f64 },
    /// Arbitrary sink with the growth exponent it is claimed to dominate,
    /// used for the lower bound `g(z) ≥ C₃ |z|^γ`.
    Custom {
        eval: Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>,
        gamma: f64,
    },
}

impl fmt::Debug for SourceF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceF::PolynomialLogistic { a, b, alpha, beta } => f
                .debug_struct("PolynomialLogistic")
                .field("a", a)
                .field("b", b)
                .field("alpha", alpha)
                .field("beta", beta)
                .finish(),
            SourceF::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl fmt::Debug for SourceG {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceG::GradientPower { c, gamma } => f
                .debug_struct("GradientPower")
                .field("c", c)
                .field("gamma", gamma)
                .finish(),
            SourceG::Custom { gamma, .. } => {
                f.debug_struct("Custom").field("gamma", gamma).finish()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SourceSpec {
    pub f: SourceF,
    pub g: SourceG,
}

impl SourceSpec {
    pub fn logistic_gradpower(a: f64, b: f64, alpha: f64, beta: f64, c: f64, gamma: f64) -> Self {
        Self {
            f: SourceF::PolynomialLogistic { a, b, alpha, beta },
            g: SourceG::GradientPower { c, gamma },
        }
    }

    /// Growth exponent of the sink.
    pub fn gamma(&self) -> f64 {
        match self.g {
            SourceG::GradientPower { gamma, .. } | SourceG::Custom { gamma, .. } => gamma,
        }
    }

    /// Parameter invariants of the builtin kinds. Custom evaluators are not
    /// inspected here (see [`validate_assumptions`]).
    ///
    /// `c = 0` is accepted: it is the undamped reference system of the
    /// damping study, which simply sits outside the boundedness hypotheses.
    pub fn check(&self) -> Result<(), ModelError> {
        self.check_f()?;
        self.check_g()
    }

    pub fn check_f(&self) -> Result<(), ModelError> {
        if let SourceF::PolynomialLogistic { a, b, alpha, beta } = self.f {
            if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                return Err(ModelError::LogisticCoefficients { a, b });
            }
            if !(alpha >= 1.0 && beta > alpha && beta.is_finite()) {
                return Err(ModelError::LogisticExponents { alpha, beta });
            }
        }
        Ok(())
    }

    pub fn check_g(&self) -> Result<(), ModelError> {
        if let SourceG::GradientPower { c, gamma } = self.g {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(ModelError::NegativeDamping(c));
            }
            if !(1.0..=2.0).contains(&gamma) {
                return Err(ModelError::GammaOutOfRange(gamma));
            }
        }
        Ok(())
    }
}

/// Relaxation of the signal: `τ = 0` is the parabolic-elliptic system, `τ = 1`
/// the fully parabolic one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tau {
    Elliptic,
    Parabolic,
}

impl Tau {
    pub fn from_int(tau: i64) -> Option<Self> {
        match tau {
            0 => Some(Tau::Elliptic),
            1 => Some(Tau::Parabolic),
            _ => None,
        }
    }

    pub fn as_int(self) -> u8 {
        match self {
            Tau::Elliptic => 0,
            Tau::Parabolic => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModelParams {
    pub chi: f64,
    pub tau: Tau,
    pub source: SourceSpec,
    /// Free constant in `f(s) ≤ C₁ − C₂ s`; it sets `C₁` and the mass bound.
    pub c2: f64,
}

impl ModelParams {
    pub fn new(chi: f64, tau: Tau, source: SourceSpec) -> Result<Self, ModelError> {
        let params = Self {
            chi,
            tau,
            source,
            c2: 1.0,
        };
        params.check()?;
        Ok(params)
    }

    pub fn with_c2(mut self, c2: f64) -> Result<Self, ModelError> {
        self.c2 = c2;
        self.check()?;
        Ok(self)
    }

    pub fn check(&self) -> Result<(), ModelError> {
        if !self.chi.is_finite() {
            return Err(ModelError::BadChi(self.chi));
        }
        if !(self.c2 > 0.0 && self.c2.is_finite()) {
            return Err(ModelError::BadC2(self.c2));
        }
        self.source.check()
    }

    /// Whether χ > 0, as the boundedness theorem requires; runs with χ ≤ 0
    /// are allowed but carry no boundedness claim.
    pub fn chi_in_theorem_range(&self) -> bool {
        self.chi > 0.0
    }
}

/// Evaluates `f(s)`; negative arguments are clamped to 0.
pub fn eval_f(source: &SourceSpec, s: f64) -> f64 {
    let s = s.max(0.0);
    match &source.f {
        SourceF::PolynomialLogistic { a, b, alpha, beta } => a * s.powf(*alpha) - b * s.powf(*beta),
        SourceF::Custom(func) => func(s),
    }
}

/// Evaluates `g(z)` for a gradient `z = [z_x, z_y]`.
pub fn eval_g(source: &SourceSpec, z: [f64; 2]) -> f64 {
    match &source.g {
        SourceG::GradientPower { c, gamma } => {
            if *c == 0.0 {
                return 0.0;
            }
            let norm_sq = z[0] * z[0] + z[1] * z[1];
            if norm_sq == 0.0 {
                0.0
            } else {
                c * norm_sq.powf(0.5 * gamma)
            }
        }
        SourceG::Custom { eval, .. } => eval(z),
    }
}

/// `2N/(N+1) < γ ≤ 2`.
pub fn gamma_admissible(n_dim: usize, gamma: f64) -> bool {
    let n = n_dim as f64;
    gamma > 2.0 * n / (n + 1.0) && gamma <= 2.0
}

/// Lower end of the admissible γ range, `2N/(N+1)`.
pub fn gamma_threshold(n_dim: usize) -> f64 {
    let n = n_dim as f64;
    2.0 * n / (n + 1.0)
}

/// `(C₁, C_f)` for a polynomial logistic source with a chosen `C₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticConstants {
    /// `sup_{s≥0} f(s) + C₂ s`.
    pub c1: f64,
    /// `sup_{s≥0} f(s)`.
    pub c_f: f64,
}

pub fn derive_logistic_constants(f: &SourceF, c2: f64) -> Result<LogisticConstants, ModelError> {
    let SourceF::PolynomialLogistic { a, b, alpha, beta } = *f else {
        return Err(ModelError::NotPolynomial);
    };
    if !(c2 > 0.0 && c2.is_finite()) {
        return Err(ModelError::BadC2(c2));
    }
    let c1 = sup_polynomial(a, b, alpha, beta, c2);
    let c_f = sup_polynomial(a, b, alpha, beta, 0.0);
    Ok(LogisticConstants { c1, c_f })
}

/// Maximum over `s ≥ 0` of `a s^α − b s^β + lin s`.
///
/// The derivative changes sign exactly once on `(0, ∞)`, so the function is
/// unimodal there. The bracket end is the first doubling point with a negative
/// derivative; golden-section search then narrows to relative width 1e-10.
fn sup_polynomial(a: f64, b: f64, alpha: f64, beta: f64, lin: f64) -> f64 {
    let value = |s: f64| a * s.powf(alpha) - b * s.powf(beta) + lin * s;
    let slope = |s: f64| {
        a * alpha * s.powf(alpha - 1.0) - b * beta * s.powf(beta - 1.0) + lin
    };
    let mut hi = 1.0;
    while slope(hi) >= 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (value(x1), value(x2));
    while hi - lo > 1e-10 * hi.max(1e-300) {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = value(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = value(x1);
        }
    }
    value(0.5 * (lo + hi)).max(value(0.0))
}

/// One of the structural hypotheses on `f` and `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    /// `f` locally Lipschitz with `f(0) ≥ 0`.
    FLipschitzNonnegativeAtZero,
    /// `f(s) ≤ C_f`.
    FBoundedAbove,
    /// `g(0) = 0`.
    GVanishesAtZero,
    /// `g(z) ≤ C_g (1 + |z|²)`.
    GAtMostQuadratic,
    /// `f(s) ≤ C₁ − C₂ s`.
    FDissipative,
    /// `g(z) ≥ C₃ |z|^γ` with `C₃ > 0`.
    GCoercive,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 6] = [
        Hypothesis::FLipschitzNonnegativeAtZero,
        Hypothesis::FBoundedAbove,
        Hypothesis::GVanishesAtZero,
        Hypothesis::GAtMostQuadratic,
        Hypothesis::FDissipative,
        Hypothesis::GCoercive,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Hypothesis::FLipschitzNonnegativeAtZero => "(4a)",
            Hypothesis::FBoundedAbove => "(4b)",
            Hypothesis::GVanishesAtZero => "(4c)",
            Hypothesis::GAtMostQuadratic => "(4d)",
            Hypothesis::FDissipative => "(7)-f",
            Hypothesis::GCoercive => "(7)-g",
        }
    }

    pub fn statement(self) -> &'static str {
        match self {
            Hypothesis::FLipschitzNonnegativeAtZero => "f locally Lipschitz, f(0) >= 0",
            Hypothesis::FBoundedAbove => "f(s) <= C_f",
            Hypothesis::GVanishesAtZero => "g(0) = 0",
            Hypothesis::GAtMostQuadratic => "g(z) <= C_g (1 + |z|^2)",
            Hypothesis::FDissipative => "f(s) <= C1 - C2 s",
            Hypothesis::GCoercive => "g(z) >= C3 |z|^gamma",
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.label(), self.statement())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisCheck {
    pub hypothesis: Hypothesis,
    pub holds: bool,
    /// Tightest constant found, when the hypothesis holds and has one.
    pub constant: Option<f64>,
    /// True when the verdict comes from samples rather than closed form.
    pub empirical: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub checks: Vec<HypothesisCheck>,
}

impl AssumptionReport {
    pub fn get(&self, hypothesis: Hypothesis) -> &HypothesisCheck {
        self.checks
            .iter()
            .find(|c| c.hypothesis == hypothesis)
            .expect("report covers every hypothesis")
    }

    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn failures(&self) -> impl Iterator<Item = Hypothesis> + '_ {
        self.checks.iter().filter(|c| !c.holds).map(|c| c.hypothesis)
    }

    /// Named constant from the report, if present.
    pub fn constant(&self, hypothesis: Hypothesis) -> Option<f64> {
        self.get(hypothesis).constant
    }
}

/// Checks the hypotheses on `f` and `g`.
///
/// Builtin kinds are decided in closed form. Custom evaluators are probed on
/// the samples and their verdicts flagged `empirical`: an upper bound fails
/// when the sampled maximum sits at the largest sample and is still rising
/// there, and the quadratic growth bound fails when the log-log slope between
/// the two largest sampled `|z|` exceeds 2.
pub fn validate_assumptions(
    source: &SourceSpec,
    c2: f64,
    sample_s: &[f64],
    sample_z: &[[f64; 2]],
) -> Result<AssumptionReport, ModelError> {
    if sample_s.is_empty() || sample_z.is_empty() {
        return Err(ModelError::EmptySamples);
    }
    if !(c2 > 0.0) {
        return Err(ModelError::BadC2(c2));
    }
    let mut checks = Vec::with_capacity(6);
    match &source.f {
        SourceF::PolynomialLogistic { .. } => {
            let valid = source.check_f().is_ok();
            let constants = derive_logistic_constants(&source.f, c2).ok().filter(|_| valid);
            checks.push(analytic(Hypothesis::FLipschitzNonnegativeAtZero, valid, None));
            checks.push(analytic(
                Hypothesis::FBoundedAbove,
                valid,
                constants.map(|k| k.c_f),
            ));
            checks.push(analytic(Hypothesis::FDissipative, valid, constants.map(|k| k.c1)));
        }
        SourceF::Custom(func) => {
            let mut s_sorted: Vec<f64> = sample_s.iter().map(|s| s.max(0.0)).collect();
            s_sorted.sort_by(f64::total_cmp);
            let f_vals: Vec<f64> = s_sorted.iter().map(|&s| func(s)).collect();
            let finite = f_vals.iter().all(|x| x.is_finite());
            let f0 = func(0.0);
            checks.push(empirical(
                Hypothesis::FLipschitzNonnegativeAtZero,
                finite && f0 >= 0.0,
                None,
            ));
            let bounded = finite && !rising_at_tail(&f_vals);
            checks.push(empirical(
                Hypothesis::FBoundedAbove,
                bounded,
                bounded.then(|| f_vals.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            ));
            let shifted: Vec<f64> = s_sorted
                .iter()
                .zip(&f_vals)
                .map(|(s, f)| f + c2 * s)
                .collect();
            let dissipative = finite && !rising_at_tail(&shifted);
            checks.push(empirical(
                Hypothesis::FDissipative,
                dissipative,
                dissipative.then(|| shifted.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            ));
        }
    }
    match &source.g {
        SourceG::GradientPower { c, gamma } => {
            let (c, gamma) = (*c, *gamma);
            checks.push(analytic(Hypothesis::GVanishesAtZero, true, None));
            let quadratic = gamma <= 2.0 && c >= 0.0;
            checks.push(analytic(
                Hypothesis::GAtMostQuadratic,
                quadratic,
                quadratic.then(|| quadratic_growth_constant(c, gamma)),
            ));
            let coercive = c > 0.0;
            checks.push(analytic(Hypothesis::GCoercive, coercive, coercive.then_some(c)));
        }
        SourceG::Custom { eval, gamma } => {
            let g0 = eval([0.0, 0.0]);
            checks.push(empirical(Hypothesis::GVanishesAtZero, g0 == 0.0, None));
            let mut by_norm: Vec<(f64, f64)> = sample_z
                .iter()
                .map(|z| ((z[0] * z[0] + z[1] * z[1]).sqrt(), eval(*z)))
                .collect();
            by_norm.sort_by(|x, y| x.0.total_cmp(&y.0));
            let finite = by_norm.iter().all(|(_, g)| g.is_finite());
            let ratio_max = by_norm
                .iter()
                .map(|(r, g)| g / (1.0 + r * r))
                .fold(f64::NEG_INFINITY, f64::max);
            let quadratic = finite && tail_exponent(&by_norm).map_or(true, |e| e <= 2.0 + 1e-9);
            checks.push(empirical(
                Hypothesis::GAtMostQuadratic,
                quadratic,
                quadratic.then_some(ratio_max.max(0.0)),
            ));
            let c3 = by_norm
                .iter()
                .filter(|(r, _)| *r > 0.0)
                .map(|(r, g)| g / r.powf(*gamma))
                .fold(f64::INFINITY, f64::min);
            let coercive = finite && c3.is_finite() && c3 > 0.0;
            checks.push(empirical(Hypothesis::GCoercive, coercive, coercive.then_some(c3)));
        }
    }
    checks.sort_by_key(|c| Hypothesis::ALL.iter().position(|h| *h == c.hypothesis));
    Ok(AssumptionReport { checks })
}

fn analytic(hypothesis: Hypothesis, holds: bool, constant: Option<f64>) -> HypothesisCheck {
    HypothesisCheck {
        hypothesis,
        holds,
        constant,
        empirical: false,
    }
}

fn empirical(hypothesis: Hypothesis, holds: bool, constant: Option<f64>) -> HypothesisCheck {
    HypothesisCheck {
        hypothesis,
        holds,
        constant,
        empirical: true,
    }
}

/// Whether the maximum of `vals` (ordered by increasing argument) is attained
/// only at the last sample while still increasing into it.
fn rising_at_tail(vals: &[f64]) -> bool {
    match vals {
        [] | [_] => false,
        [.., prev, last] => {
            let max_before = vals[..vals.len() - 1]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            last > prev && *last > max_before
        }
    }
}

/// Log-log slope of `g` between the two largest distinct positive norms.
fn tail_exponent(by_norm: &[(f64, f64)]) -> Option<f64> {
    let mut iter = by_norm.iter().rev().filter(|(r, g)| *r > 0.0 && *g > 0.0);
    let (r2, g2) = *iter.next()?;
    let (r1, g1) = *iter.find(|(r, _)| *r < r2)?;
    Some((g2 / g1).ln() / (r2 / r1).ln())
}

/// `sup_z c|z|^γ / (1 + |z|²)` for `γ ≤ 2`.
fn quadratic_growth_constant(c: f64, gamma: f64) -> f64 {
    if gamma >= 2.0 {
        return c;
    }
    let r2 = gamma / (2.0 - gamma);
    c * r2.powf(0.5 * gamma) / (1.0 + r2)
}

/// Upper bound on the total mass: `max{∫u₀, C₁|Ω|/C₂}`.
pub fn mass_bound(u0_mass: f64, c1: f64, c2: f64, omega_measure: f64) -> f64 {
    u0_mass.max(c1 * omega_measure / c2)
}

/// Interpolation exponent `(p/2 − 1/2) / (p/2 − 1/2 + 1/N)` controlling
/// `∫u^p` by `∫|∇u^{p/2}|²` and the mass.
pub fn theta_check_exponent(p: f64, n_dim: usize) -> Result<f64, ModelError> {
    if !(p > 1.0) {
        return Err(ModelError::BadP(p));
    }
    if n_dim < 1 {
        return Err(ModelError::BadDimension { min: 1, got: n_dim });
    }
    let num = p / 2.0 - 0.5;
    Ok(num / (num + 1.0 / n_dim as f64))
}

/// Interpolation exponent θ used to absorb `∫u^{p+1}` into the damping term:
///
/// ```text
///          ((p−1+γ)/γ) (1 − 1/(p+1))
/// θ = ---------------------------------
///      1/N − 1/γ + (p−1+γ)/γ
/// ```
pub fn theta_exponent(p: f64, n_dim: usize, gamma: f64) -> f64 {
    let w = (p - 1.0 + gamma) / gamma;
    w * (1.0 - 1.0 / (p + 1.0)) / (1.0 / n_dim as f64 - 1.0 / gamma + w)
}

/// Both membership conditions at one `p`, plus the γ-weighted variant of the
/// second condition for comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentCheck {
    pub p: f64,
    pub theta: f64,
    /// `θ (p+1) / (p−1+γ)`.
    pub second: f64,
    /// `θ γ (p+1) / (p−1+γ)`, the reading with an extra factor γ.
    pub second_gamma_weighted: f64,
}

impl ExponentCheck {
    pub fn evaluate(p: f64, n_dim: usize, gamma: f64) -> Self {
        let theta = theta_exponent(p, n_dim, gamma);
        // θ(p+1)/(p−1+γ) simplifies to p / (p + γ(N+1)/N − 2); this form is
        // exactly 1 at γ = 2N/(N+1) instead of rounding to either side.
        let n = n_dim as f64;
        let second = p / (p + (gamma * (n + 1.0) / n - 2.0));
        Self {
            p,
            theta,
            second,
            second_gamma_weighted: gamma * second,
        }
    }

    /// The gate: `p > N/2`, `θ ∈ (0,1)` and `θ(p+1)/(p−1+γ) ∈ (0,1)`.
    pub fn admissible(&self, n_dim: usize) -> bool {
        self.p > n_dim as f64 / 2.0 && in_unit_interval(self.theta) && in_unit_interval(self.second)
    }

    pub fn gamma_weighted_admissible(&self) -> bool {
        in_unit_interval(self.second_gamma_weighted)
    }
}

fn in_unit_interval(x: f64) -> bool {
    x > 0.0 && x < 1.0
}

pub const P_SEARCH_STEP: f64 = 1e-3;
pub const P_SEARCH_POINTS: usize = 10_000;

/// Grid point `k` of the p-scan, `N/2 + k·10⁻³`.
pub fn p_search_point(n_dim: usize, k: usize) -> f64 {
    n_dim as f64 / 2.0 + k as f64 * P_SEARCH_STEP
}

/// Smallest scan point `p = N/2 + k·10⁻³`, `k = 1..=10⁴`, that passes
/// [`ExponentCheck::admissible`]; `Ok(None)` when no point does.
pub fn find_admissible_p(n_dim: usize, gamma: f64) -> Result<Option<ExponentCheck>, ModelError> {
    if n_dim < 2 {
        return Err(ModelError::BadDimension { min: 2, got: n_dim });
    }
    if !(gamma >= 1.0) {
        return Err(ModelError::GammaTooSmall(gamma));
    }
    Ok((1..=P_SEARCH_POINTS)
        .map(|k| ExponentCheck::evaluate(p_search_point(n_dim, k), n_dim, gamma))
        .find(|check| check.admissible(n_dim)))
}

/// `(A + B)^l ≤ max{1, 2^{l−1}} (A^l + B^l)` for `A, B ≥ 0`, `l > 0`, returned as
/// `(lhs, rhs)`.
pub fn power_sum_bound(a: f64, b: f64, l: f64) -> (f64, f64) {
    let lhs = (a + b).powf(l);
    let rhs = 1.0_f64.max(2.0_f64.powf(l - 1.0)) * (a.powf(l) + b.powf(l));
    (lhs, rhs)
}

/// All constants the monitors use, derived in one place.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateConstants {
    pub c_f: f64,
    pub c_g: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub m0: f64,
    /// Admissible exponent and its θ, when the search succeeds.
    pub exponent: Option<ExponentCheck>,
    pub theta_check: Option<f64>,
}

impl EstimateConstants {
    /// Derives the constants for a builtin logistic/gradient-power source.
    /// Fails when a hypothesis other than coercivity of `g` is violated.
    pub fn derive(
        params: &ModelParams,
        n_dim: usize,
        u0_mass: f64,
        omega_measure: f64,
    ) -> Result<Self, ModelError> {
        let SourceG::GradientPower { c, gamma } = params.source.g else {
            return Err(ModelError::NotPolynomial);
        };
        let logistic = derive_logistic_constants(&params.source.f, params.c2)?;
        if gamma > 2.0 {
            return Err(ModelError::HypothesisFailed(Hypothesis::GAtMostQuadratic));
        }
        let exponent = if n_dim >= 2 {
            find_admissible_p(n_dim, gamma)?
        } else {
            None
        };
        let theta_check = exponent.and_then(|e| theta_check_exponent(e.p, n_dim).ok());
        Ok(Self {
            c_f: logistic.c_f,
            c_g: quadratic_growth_constant(c, gamma),
            c1: logistic.c1,
            c2: params.c2,
            c3: c,
            m0: mass_bound(u0_mass, logistic.c1, params.c2, omega_measure),
            exponent,
            theta_check,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistic(a: f64, b: f64, alpha: f64, beta: f64) -> SourceF {
        SourceF::PolynomialLogistic { a, b, alpha, beta }
    }

    /// Independent check: dense scan of `f(s) + c2 s` on `[0, s_max]`.
    fn scan_sup(f: &SourceF, c2: f64, s_max: f64, points: usize) -> f64 {
        let SourceF::PolynomialLogistic { a, b, alpha, beta } = *f else {
            unreachable!()
        };
        (0..=points)
            .map(|k| {
                let s = s_max * k as f64 / points as f64;
                a * s.powf(alpha) - b * s.powf(beta) + c2 * s
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn gamma_admissibility_examples() {
        assert!(gamma_admissible(2, 1.5));
        assert!(!gamma_admissible(2, 4.0 / 3.0));
        assert!(!gamma_admissible(3, 1.5));
        for n in 2..10 {
            assert!(gamma_admissible(n, 2.0));
            assert!(!gamma_admissible(n, 2.0 + 1e-12));
        }
    }

    #[test]
    fn logistic_constants_match_scan() {
        let f = logistic(1.0, 1.0, 1.0, 2.0);
        let k = derive_logistic_constants(&f, 1.0).unwrap();
        let scan = scan_sup(&f, 1.0, 3.0, 1_000_000);
        assert!((k.c1 - scan).abs() < 1e-10);
        assert!((k.c1 - 1.0).abs() < 1e-12);
        assert!((k.c_f - 0.25).abs() < 1e-12);

        let f = logistic(2.0, 1.0, 1.0, 3.0);
        let k = derive_logistic_constants(&f, 1.0).unwrap();
        assert!((k.c1 - scan_sup(&f, 1.0, 3.0, 1_000_000)).abs() < 1e-10);
        assert!((k.c1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn logistic_c1_degenerates_to_sup_f() {
        let f = logistic(1.0, 1.0, 1.0, 2.0);
        let k = derive_logistic_constants(&f, 1e-9).unwrap();
        assert!((k.c1 - 0.25).abs() < 1e-8);
        assert!((k.c1 - k.c_f).abs() < 1e-8);
    }

    #[test]
    fn logistic_constants_reject_custom() {
        let f = SourceF::Custom(Arc::new(|s: f64| -s));
        assert_eq!(derive_logistic_constants(&f, 1.0), Err(ModelError::NotPolynomial));
    }

    #[test]
    fn sublinear_onset_is_handled() {
        // α > 1 gives f'(0) = 0 and a convex start.
        let f = logistic(3.0, 0.5, 1.5, 2.5);
        let k = derive_logistic_constants(&f, 0.7).unwrap();
        let scan = scan_sup(&f, 0.7, 20.0, 2_000_000);
        assert!((k.c1 - scan).abs() <= 1e-7 * (1.0 + scan));
    }

    #[test]
    fn gradpower_report() {
        let src = SourceSpec::logistic_gradpower(1.0, 1.0, 1.0, 2.0, 1.0, 2.0);
        let report = validate_assumptions(&src, 1.0, &[0.0, 1.0], &[[1.0, 0.0]]).unwrap();
        assert!(report.all_hold());
        assert_eq!(report.constant(Hypothesis::GAtMostQuadratic), Some(1.0));
        assert_eq!(report.constant(Hypothesis::GCoercive), Some(1.0));
        assert!(!report.get(Hypothesis::GCoercive).empirical);

        let src = SourceSpec::logistic_gradpower(1.0, 1.0, 1.0, 2.0, 1.0, 2.5);
        let report = validate_assumptions(&src, 1.0, &[0.0, 1.0], &[[1.0, 0.0]]).unwrap();
        assert_eq!(report.failures().collect::<Vec<_>>(), vec![Hypothesis::GAtMostQuadratic]);
        assert_eq!(src.check(), Err(ModelError::GammaOutOfRange(2.5)));
    }

    #[test]
    fn quadratic_growth_constant_matches_scan() {
        for gamma in [1.0, 1.3, 1.5, 1.9] {
            let scan = (1..200_000)
                .map(|k| {
                    let r = k as f64 * 1e-4;
                    2.0 * r.powf(gamma) / (1.0 + r * r)
                })
                .fold(0.0, f64::max);
            assert!((quadratic_growth_constant(2.0, gamma) - scan).abs() < 1e-7);
        }
    }

    #[test]
    fn custom_exponential_source_is_unbounded() {
        let src = SourceSpec {
            f: SourceF::Custom(Arc::new(f64::exp)),
            g: SourceG::GradientPower { c: 1.0, gamma: 2.0 },
        };
        let samples: Vec<f64> = (0..50).map(|k| k as f64 * 0.5).collect();
        let report = validate_assumptions(&src, 1.0, &samples, &[[1.0, 1.0]]).unwrap();
        let check = report.get(Hypothesis::FBoundedAbove);
        assert!(!check.holds);
        assert!(check.empirical);
    }

    #[test]
    fn custom_sources_probe_growth() {
        let src = SourceSpec {
            f: SourceF::Custom(Arc::new(|s: f64| s - s * s)),
            g: SourceG::Custom {
                eval: Arc::new(|z: [f64; 2]| (z[0] * z[0] + z[1] * z[1]).powf(1.5)),
                gamma: 3.0,
            },
        };
        let s: Vec<f64> = (0..40).map(|k| k as f64 * 0.1).collect();
        let z: Vec<[f64; 2]> = (1..40).map(|k| [k as f64 * 0.3, 0.0]).collect();
        let report = validate_assumptions(&src, 1.0, &s, &z).unwrap();
        assert!(report.get(Hypothesis::FBoundedAbove).holds);
        assert!((report.constant(Hypothesis::FBoundedAbove).unwrap() - 0.25).abs() < 1e-12);
        assert!(!report.get(Hypothesis::GAtMostQuadratic).holds);
        assert!(report.get(Hypothesis::GCoercive).holds);
        assert!(validate_assumptions(&src, 1.0, &[], &z).is_err());
    }

    #[test]
    fn mass_bound_examples() {
        assert_eq!(mass_bound(5.0, 1.0, 1.0, 1.0), 5.0);
        assert_eq!(mass_bound(0.0, 2.0, 4.0, 2.0), 1.0);
        assert_eq!(mass_bound(0.3, 1e-300, 1.0, 1.0), 0.3);
    }

    #[test]
    fn theta_check_values() {
        assert_eq!(theta_check_exponent(2.0, 2).unwrap(), 0.5);
        let t3 = theta_check_exponent(3.0, 2).unwrap();
        // second route: (p−1)N / ((p−1)N + 2)
        let alt = (3.0 - 1.0) * 2.0 / ((3.0 - 1.0) * 2.0 + 2.0);
        assert!((t3 - alt).abs() < 1e-15);
        assert!((t3 - 2.0 / 3.0).abs() < 1e-15);
        assert!(theta_check_exponent(1.0 + 1e-12, 3).unwrap() < 1e-11);
        assert_eq!(theta_check_exponent(1.0, 2), Err(ModelError::BadP(1.0)));
    }

    #[test]
    fn exponent_at_p2_gamma2() {
        let check = ExponentCheck::evaluate(2.0, 2, 2.0);
        assert!((check.theta - 2.0 / 3.0).abs() < 1e-15);
        assert!((check.second - 2.0 / 3.0).abs() < 1e-15);
        assert!(check.admissible(2));
        let found = find_admissible_p(2, 2.0).unwrap().unwrap();
        assert!(found.p <= 2.0);
        assert!(found.admissible(2));
    }

    #[test]
    fn p_search_matches_brute_force() {
        // boundary values of γ are covered by the predicate-consistency test
        for (n, gamma) in [(2, 1.2), (3, 1.6), (4, 1.7), (2, 1.0), (2, 1.9), (5, 1.8)] {
            let found = find_admissible_p(n, gamma).unwrap();
            let brute = (1..=P_SEARCH_POINTS).find_map(|k| {
                let p = n as f64 / 2.0 + k as f64 * 1e-3;
                let w = (p - 1.0 + gamma) / gamma;
                let theta = w * (p / (p + 1.0)) / (1.0 / n as f64 - 1.0 / gamma + w);
                let second = theta * (p + 1.0) / (p - 1.0 + gamma);
                (theta > 0.0 && theta < 1.0 && second > 0.0 && second < 1.0).then_some(p)
            });
            match (found, brute) {
                (Some(f), Some(b)) => assert!((f.p - b).abs() < 1e-12, "n={n} gamma={gamma}"),
                (None, None) => {}
                other => panic!("mismatch for n={n} gamma={gamma}: {other:?}"),
            }
        }
        assert!(find_admissible_p(1, 2.0).is_err());
        assert!(find_admissible_p(2, 0.5).is_err());
    }

    #[test]
    fn second_condition_matches_printed_form() {
        for (n, gamma) in [(2, 2.0), (2, 1.5), (3, 1.7), (4, 1.2)] {
            for k in [1, 10, 500, 9999] {
                let p = p_search_point(n, k);
                let check = ExponentCheck::evaluate(p, n, gamma);
                let printed = check.theta * (p + 1.0) / (p - 1.0 + gamma);
                assert!((check.second - printed).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn p_search_consistent_with_predicate_at_threshold() {
        for (n, gamma) in [(2, 4.0 / 3.0), (3, 1.5), (4, 1.6)] {
            let found = find_admissible_p(n, gamma).unwrap();
            let scan = (1..=P_SEARCH_POINTS)
                .map(|k| ExponentCheck::evaluate(p_search_point(n, k), n, gamma))
                .find(|c| c.admissible(n));
            assert_eq!(found, scan);
            // at γ = 2N/(N+1) the second condition sits exactly on 1
            assert!(found.is_none());
        }
    }

    #[test]
    fn eval_examples() {
        let src = SourceSpec::logistic_gradpower(1.0, 1.0, 1.0, 2.0, 2.0, 2.0);
        assert_eq!(eval_f(&src, 1.0), 0.0);
        assert_eq!(eval_f(&src, -3.0), 0.0);
        assert!((eval_g(&src, [3.0, 4.0]) - 50.0).abs() < 1e-12);
        assert_eq!(eval_g(&src, [0.0, 0.0]), 0.0);
    }

    #[test]
    fn power_sum_bound_at_equality_cases() {
        let (l, r) = power_sum_bound(2.0, 3.0, 1.0);
        assert_eq!(l, r);
        let (l, r) = power_sum_bound(0.0, 3.0, 0.5);
        assert!(l <= r);
    }

    #[test]
    fn constants_bundle() {
        let params = ModelParams::new(
            5.0,
            Tau::Elliptic,
            SourceSpec::logistic_gradpower(1.0, 1.0, 1.0, 2.0, 1.0, 2.0),
        )
        .unwrap();
        let k = EstimateConstants::derive(&params, 2, 0.5, 1.0).unwrap();
        assert!((k.c1 - 1.0).abs() < 1e-12);
        assert!((k.m0 - 1.0).abs() < 1e-12);
        let e = k.exponent.unwrap();
        assert!(e.p > 1.0 && e.p <= 2.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn derived_c1_dominates_scan(
                a in 0.1f64..5.0, b in 0.1f64..5.0, alpha in 1.0f64..2.0,
                gap in 0.05f64..2.0, c2 in 0.01f64..5.0,
            ) {
                let beta = alpha + gap;
                let f = SourceF::PolynomialLogistic { a, b, alpha, beta };
                let k = derive_logistic_constants(&f, c2).unwrap();
                let s_top = 10.0 * (a / b).powf(1.0 / (beta - alpha));
                for i in 0..=20_000 {
                    let s = s_top * i as f64 / 20_000.0;
                    let val = a * s.powf(alpha) - b * s.powf(beta) + c2 * s;
                    prop_assert!(val <= k.c1 + 1e-9 * (1.0 + k.c1));
                }
            }

            #[test]
            fn found_p_satisfies_predicate(n in 2usize..6, gamma in 1.0f64..2.0) {
                if let Some(found) = find_admissible_p(n, gamma).unwrap() {
                    prop_assert!(found.admissible(n));
                    prop_assert!(found.p > n as f64 / 2.0);
                }
            }

            #[test]
            fn sink_is_nonnegative(c in 0.0f64..10.0, gamma in 1.0f64..2.0, x in -1e3f64..1e3, y in -1e3f64..1e3) {
                let src = SourceSpec::logistic_gradpower(1.0, 1.0, 1.0, 2.0, c, gamma);
                prop_assert!(eval_g(&src, [x, y]) >= 0.0);
            }

            #[test]
            fn mass_bound_monotone(m in 0.0f64..10.0, c1 in 0.01f64..10.0, c2 in 0.01f64..10.0, w in 0.1f64..10.0, d in 0.0f64..1.0) {
                let base = mass_bound(m, c1, c2, w);
                prop_assert!(mass_bound(m + d, c1, c2, w) >= base);
                prop_assert!(mass_bound(m, c1 + d, c2, w) >= base);
                prop_assert!(mass_bound(m, c1, c2, w + d) >= base);
                prop_assert!(mass_bound(m, c1, c2 + d, w) <= base);
            }
        }
    }
}
