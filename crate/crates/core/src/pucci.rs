//! Pucci extremal operators, problem parameters, and the radial right-hand side.
//!
//! The equation solved throughout the crate is
//!
//! ```text
//!     M(D^2 u) + r^a |u|^{p-1} u = 0,      M in { M_plus, M_minus },
//! ```
//!
//! restricted to radial profiles, where `M_plus`/`M_minus` are the Pucci
//! extremal operators with ellipticity window `[lambda, Lambda]`. For a radial
//! function the Hessian eigenvalues are `u''` (simple) and `u'/r` with
//! multiplicity `N-1`, which collapses the operator to scalar piecewise-linear
//! algebra: `m(s)` scales an eigenvalue by its extremal weight and `m_inv(s)`
//! undoes it with the complementary weights. Both are positively homogeneous,
//! which is what makes the anisotropic rescaling of profiles work.

use thiserror::Error;

/// Which extremal operator the problem uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorVariant {
    /// Maximal operator: largest weighted sum of Hessian eigenvalues.
    Plus,
    /// Minimal operator: smallest weighted sum of Hessian eigenvalues.
    Minus,
}

impl OperatorVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            OperatorVariant::Plus => "plus",
            OperatorVariant::Minus => "minus",
        }
    }
}

/// Exponents and dimension-like numbers derived from the raw parameters.
///
/// `n_plus = (lambda/Lambda)(N-1) + 1` and `n_minus = (Lambda/lambda)(N-1) + 1`
/// play the role of effective dimensions for the two operators. The critical
/// exponents attached to the *selected* operator use `n_effective`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedExponents {
    pub n_plus: f64,
    pub n_minus: f64,
    /// Pseudo-critical exponent `(n_eff + 2a + 2) / (n_eff - 2)`.
    pub p_pseudo: f64,
    /// Serrin-type exponent `(n_eff + a) / (n_eff - 2)`.
    pub p_serrin: f64,
    /// Weighted Laplacian critical exponent `(N + 2 + 2a) / (N - 2)`.
    pub p_laplace: f64,
    /// Scaling exponent `alpha = (2 + a) / (p - 1)`.
    pub alpha: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamsError {
    #[error("ellipticity constants must satisfy 0 < lambda <= Lambda, got lambda={0}, Lambda={1}")]
    EllipticityOrder(f64, f64),
    #[error("dimension must satisfy N >= 3, got N={0}")]
    DimensionTooSmall(u32),
    #[error("exponent must satisfy p > 1, got p={0}")]
    ExponentNotSuperlinear(f64),
    #[error("weight must satisfy a > -1, got a={0}")]
    WeightTooSingular(f64),
    #[error("the maximal operator requires n_plus = (lambda/Lambda)(N-1) + 1 > 2, got n_plus={0}")]
    EffectiveDimensionTooSmall(f64),
    #[error("parameter {0} must be finite")]
    NotFinite(&'static str),
}

/// Validated problem data plus the derived exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    pub variant: OperatorVariant,
    pub lambda: f64,
    pub big_lambda: f64,
    pub dim: u32,
    pub p: f64,
    pub a: f64,
    pub exponents: DerivedExponents,
}

pub fn derive_exponents(
    variant: OperatorVariant,
    lambda: f64,
    big_lambda: f64,
    dim: u32,
    p: f64,
    a: f64,
) -> DerivedExponents {
    let nm1 = f64::from(dim) - 1.0;
    let n_plus = lambda / big_lambda * nm1 + 1.0;
    let n_minus = big_lambda / lambda * nm1 + 1.0;
    let n_eff = match variant {
        OperatorVariant::Plus => n_plus,
        OperatorVariant::Minus => n_minus,
    };
    DerivedExponents {
        n_plus,
        n_minus,
        p_pseudo: (n_eff + 2.0 * a + 2.0) / (n_eff - 2.0),
        p_serrin: (n_eff + a) / (n_eff - 2.0),
        p_laplace: (f64::from(dim) + 2.0 + 2.0 * a) / (f64::from(dim) - 2.0),
        alpha: (2.0 + a) / (p - 1.0),
    }
}

impl ProblemParams {
    /// Validates the raw parameters and caches the derived exponents.
    ///
    /// `n_plus > 2` is required only for the `Plus` variant; the `Minus`
    /// variant only needs `N >= 3` (its effective dimension `n_minus >= N`).
    pub fn new(
        variant: OperatorVariant,
        lambda: f64,
        big_lambda: f64,
        dim: u32,
        p: f64,
        a: f64,
    ) -> Result<Self, ParamsError> {
        for (name, v) in [
            ("lambda", lambda),
            ("Lambda", big_lambda),
            ("p", p),
            ("a", a),
        ] {
            if !v.is_finite() {
                return Err(ParamsError::NotFinite(name));
            }
        }
        if !(lambda > 0.0 && lambda <= big_lambda) {
            return Err(ParamsError::EllipticityOrder(lambda, big_lambda));
        }
        if dim < 3 {
            return Err(ParamsError::DimensionTooSmall(dim));
        }
        if p <= 1.0 {
            return Err(ParamsError::ExponentNotSuperlinear(p));
        }
        if a <= -1.0 {
            return Err(ParamsError::WeightTooSingular(a));
        }
        let exponents = derive_exponents(variant, lambda, big_lambda, dim, p, a);
        if variant == OperatorVariant::Plus && exponents.n_plus <= 2.0 {
            return Err(ParamsError::EffectiveDimensionTooSmall(exponents.n_plus));
        }
        Ok(Self {
            variant,
            lambda,
            big_lambda,
            dim,
            p,
            a,
            exponents,
        })
    }

    /// Effective dimension of the selected operator.
    pub fn n_effective(&self) -> f64 {
        match self.variant {
            OperatorVariant::Plus => self.exponents.n_plus,
            OperatorVariant::Minus => self.exponents.n_minus,
        }
    }

    /// Same problem with the operator variant swapped (used for negative solutions).
    pub fn swapped(&self) -> ProblemParams {
        let variant = match self.variant {
            OperatorVariant::Plus => OperatorVariant::Minus,
            OperatorVariant::Minus => OperatorVariant::Plus,
        };
        // Re-validation cannot fail: Minus accepts everything Plus accepts, and
        // a Plus swap target with n_plus <= 2 never existed in the first place.
        ProblemParams::new(
            variant,
            self.lambda,
            self.big_lambda,
            self.dim,
            self.p,
            self.a,
        )
        .expect("swapped parameters stay valid")
    }

    /// Piecewise weight applied to a single Hessian eigenvalue `s`.
    ///
    /// Plus: `lambda*s` for `s <= 0`, `Lambda*s` for `s > 0`.
    /// Minus: `Lambda*s` for `s <= 0`, `lambda*s` for `s > 0`.
    /// The lower branch owns `s = 0` exactly; both branches agree there.
    pub fn m(&self, s: f64) -> f64 {
        match self.variant {
            OperatorVariant::Plus => {
                if s <= 0.0 {
                    self.lambda * s
                } else {
                    self.big_lambda * s
                }
            }
            OperatorVariant::Minus => {
                if s <= 0.0 {
                    self.big_lambda * s
                } else {
                    self.lambda * s
                }
            }
        }
    }

    /// Inverse of [`m`](Self::m): divides by the weight the matching branch
    /// of `m` would have applied, so `m_inv(m(s)) == s` on either sign branch.
    pub fn m_inv(&self, s: f64) -> f64 {
        match self.variant {
            OperatorVariant::Plus => {
                if s <= 0.0 {
                    s / self.lambda
                } else {
                    s / self.big_lambda
                }
            }
            OperatorVariant::Minus => {
                if s <= 0.0 {
                    s / self.big_lambda
                } else {
                    s / self.lambda
                }
            }
        }
    }

    /// Full Pucci operator on a list of Hessian eigenvalues.
    ///
    /// Plus weights non-negative eigenvalues by `Lambda` and negative ones by
    /// `lambda`; Minus swaps the weights.
    pub fn pucci_eval(&self, eigenvalues: &[f64]) -> f64 {
        let (w_nonneg, w_neg) = match self.variant {
            OperatorVariant::Plus => (self.big_lambda, self.lambda),
            OperatorVariant::Minus => (self.lambda, self.big_lambda),
        };
        eigenvalues
            .iter()
            .map(|&e| if e >= 0.0 { w_nonneg * e } else { w_neg * e })
            .sum()
    }

    /// Odd superlinear nonlinearity `|u|^{p-1} u`.
    pub fn forcing(&self, u: f64) -> f64 {
        u.abs().powf(self.p - 1.0) * u
    }

    /// Second derivative selected by the extremal operator:
    ///
    /// ```text
    ///     u'' = m_inv( -(N-1)/r * m(u') - r^a |u|^{p-1} u )
    /// ```
    ///
    /// Solving the extremal equation for `u''` is exact because `m_inv`
    /// selects the branch matching the sign of `u''` itself.
    pub fn radial_rhs(&self, r: f64, u: f64, du: f64) -> f64 {
        assert!(r > 0.0, "radial_rhs requires r > 0, got r={r}");
        let nm1 = f64::from(self.dim) - 1.0;
        self.m_inv(-nm1 / r * self.m(du) - r.powf(self.a) * self.forcing(u))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn c1() -> ProblemParams {
        ProblemParams::new(OperatorVariant::Plus, 1.0, 1.5, 4, 4.0, 0.0).unwrap()
    }

    #[test]
    fn derived_exponents_reference_set() {
        let e = c1().exponents;
        assert_eq!(e.n_plus, 3.0);
        assert_eq!(e.n_minus, 5.5);
        assert_eq!(e.p_serrin, 3.0);
        assert_eq!(e.p_pseudo, 5.0);
        assert_eq!(e.p_laplace, 3.0);
        assert!((e.alpha - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn derived_exponents_equal_constants_collapse_to_laplacian() {
        let p = ProblemParams::new(OperatorVariant::Plus, 1.0, 1.0, 3, 5.0, 0.0).unwrap();
        let e = p.exponents;
        assert_eq!(e.n_plus, 3.0);
        assert_eq!(e.n_minus, 3.0);
        assert_eq!(e.p_pseudo, 5.0);
        assert_eq!(e.p_laplace, 5.0);
        assert_eq!(e.p_serrin, 3.0);
        assert!((e.alpha - 0.5).abs() < 1e-15);
    }

    #[test]
    fn derived_exponents_weighted_case() {
        let p = ProblemParams::new(OperatorVariant::Plus, 1.0, 1.5, 4, 5.0, 1.0).unwrap();
        let e = p.exponents;
        assert!((e.alpha - 0.75).abs() < 1e-15);
        assert_eq!(e.p_serrin, 4.0);
        assert_eq!(e.p_pseudo, 7.0);
    }

    #[test]
    fn exponent_ordering_holds_when_effective_dimension_exceeds_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let lambda = rng.gen_range(0.2..2.0);
            let big = lambda * rng.gen_range(1.0..3.0);
            let dim = rng.gen_range(3..8);
            let p = rng.gen_range(1.1..9.0);
            let a = rng.gen_range(-0.9..3.0);
            let Ok(params) = ProblemParams::new(OperatorVariant::Minus, lambda, big, dim, p, a)
            else {
                continue;
            };
            let e = params.exponents;
            assert!(
                e.p_serrin < e.p_pseudo,
                "serrin < pseudo failed for {params:?}"
            );
            if (lambda - big).abs() < 1e-12 {
                assert!((e.p_pseudo - e.p_laplace).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_invalid_parameters_naming_the_constraint() {
        use ParamsError::*;
        let err = ProblemParams::new(OperatorVariant::Plus, 2.0, 1.0, 4, 4.0, 0.0).unwrap_err();
        assert!(matches!(err, EllipticityOrder(..)));
        let err = ProblemParams::new(OperatorVariant::Plus, 1.0, 1.5, 2, 4.0, 0.0).unwrap_err();
        assert!(matches!(err, DimensionTooSmall(2)));
        let err = ProblemParams::new(OperatorVariant::Plus, 1.0, 1.5, 4, 1.0, 0.0).unwrap_err();
        assert!(matches!(err, ExponentNotSuperlinear(..)));
        let err = ProblemParams::new(OperatorVariant::Plus, 1.0, 1.5, 4, 4.0, -1.0).unwrap_err();
        assert!(matches!(err, WeightTooSingular(..)));
        // lambda/Lambda = 1/3 with N = 3 gives n_plus = 5/3 <= 2: rejected for
        // Plus, accepted for Minus.
        let err = ProblemParams::new(OperatorVariant::Plus, 1.0, 3.0, 3, 4.0, 0.0).unwrap_err();
        assert!(matches!(err, EffectiveDimensionTooSmall(..)));
        assert!(ProblemParams::new(OperatorVariant::Minus, 1.0, 3.0, 3, 4.0, 0.0).is_ok());
    }

    #[test]
    fn weight_examples_on_each_branch() {
        let minus = ProblemParams::new(OperatorVariant::Minus, 1.0, 1.5, 4, 4.0, 0.0).unwrap();
        assert_eq!(minus.m(2.0), 2.0); // lambda branch for s > 0
        assert_eq!(minus.m_inv(-3.0), -2.0); // divide by Lambda for s <= 0
        let plus = c1();
        assert_eq!(plus.m(2.0), 3.0);
        assert_eq!(plus.m(-2.0), -2.0);
        assert_eq!(plus.m_inv(3.0), 2.0);
        assert_eq!(plus.m_inv(-3.0), -3.0);
    }

    #[test]
    fn weights_are_mutually_inverse_and_odd_swapped() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let plus = c1();
        let minus = plus.swapped();
        for _ in 0..1000 {
            let s: f64 = rng.gen_range(-50.0..50.0);
            assert!((plus.m_inv(plus.m(s)) - s).abs() <= 1e-12 * s.abs().max(1.0));
            assert!((minus.m_inv(minus.m(s)) - s).abs() <= 1e-12 * s.abs().max(1.0));
            // m_plus(-s) = -m_minus(s), and the same for the inverses.
            assert_eq!(plus.m(-s), -minus.m(s));
            assert_eq!(plus.m_inv(-s), -minus.m_inv(s));
        }
    }

    #[test]
    fn pucci_eval_is_extremal_over_sign_patterns() {
        let plus = c1();
        let minus = plus.swapped();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let n = rng.gen_range(1..6);
            let eigs: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let hi = plus.pucci_eval(&eigs);
            let lo = minus.pucci_eval(&eigs);
            assert!(lo <= hi + 1e-12);
            // Extremality: any fixed weight choice in [lambda, Lambda] lands between.
            for _ in 0..20 {
                let w: f64 = rng.gen_range(1.0..1.5);
                let mid: f64 = eigs.iter().map(|&e| w * e).sum();
                assert!(mid <= hi + 1e-12 && mid >= lo - 1e-12);
            }
        }
    }

    #[test]
    fn radial_rhs_reference_values() {
        let plus = c1();
        // Launch state u=0, u'=delta: no forcing, argument negative, lower branch.
        let delta = 1.0;
        let got = plus.radial_rhs(1.0, 0.0, delta);
        assert!((got - (-4.5)).abs() < 1e-14); // -(N-1) * Lambda/lambda * delta
                                               // Critical point u'=0, u=1: u'' = -r^a u^p / lambda.
        let got = plus.radial_rhs(1.0, 1.0, 0.0);
        assert!((got - (-1.0)).abs() < 1e-14);
    }

    #[test]
    fn radial_rhs_solves_the_extremal_equation() {
        // Feeding the radial Hessian spectrum back through pucci_eval must
        // reproduce the equation with the forcing restored.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for params in [c1(), c1().swapped()] {
            for _ in 0..500 {
                let r = rng.gen_range(0.3..5.0);
                let u = rng.gen_range(-2.0..2.0);
                let du = rng.gen_range(-3.0..3.0);
                let ddu = params.radial_rhs(r, u, du);
                let mut eigs = vec![ddu];
                eigs.extend(std::iter::repeat(du / r).take(params.dim as usize - 1));
                let residual = params.pucci_eval(&eigs) + r.powf(params.a) * params.forcing(u);
                assert!(
                    residual.abs() <= 1e-10 * ddu.abs().max(1.0),
                    "residual {residual} at r={r} u={u} du={du}"
                );
            }
        }
    }

    #[test]
    fn radial_rhs_continuous_across_switching_surfaces() {
        let params = c1();
        // Straddle u' = 0 with shrinking gaps.
        for k in 1..=8 {
            let eps = 10f64.powi(-k);
            let lo = params.radial_rhs(1.3, 0.7, -eps);
            let hi = params.radial_rhs(1.3, 0.7, eps);
            assert!(
                (lo - hi).abs() <= 40.0 * eps,
                "jump {} at eps {eps}",
                (lo - hi).abs()
            );
        }
        // Straddle the operator-argument zero: pick u so the argument vanishes
        // at du = du0, then perturb du around it.
        let r = 1.1f64;
        let du0 = 0.8f64;
        let nm1 = 3.0;
        // argument = -nm1/r * Lambda*du - r^a u^p = 0 with u > 0.
        let u = (nm1 / r * params.big_lambda * du0 / r.powf(params.a)).powf(1.0 / params.p);
        for k in 1..=8 {
            let eps = 10f64.powi(-k);
            let lo = params.radial_rhs(r, u, du0 - eps);
            let hi = params.radial_rhs(r, u, du0 + eps);
            assert!((lo - hi).abs() <= 40.0 * eps);
        }
    }

    #[test]
    fn radial_rhs_sign_swap_identity() {
        let plus = c1();
        let minus = plus.swapped();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let r = rng.gen_range(0.2..8.0);
            let u = rng.gen_range(-3.0..3.0);
            let du = rng.gen_range(-3.0..3.0);
            let lhs = plus.radial_rhs(r, -u, -du);
            let rhs = -minus.radial_rhs(r, u, du);
            assert_eq!(lhs, rhs, "swap identity must be exact in floats");
        }
    }

    #[test]
    fn radial_rhs_semilinear_reduction() {
        let p = ProblemParams::new(OperatorVariant::Plus, 1.3, 1.3, 5, 3.0, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..300 {
            let r = rng.gen_range(0.2..5.0);
            let u = rng.gen_range(-2.0..2.0);
            let du = rng.gen_range(-2.0..2.0);
            let got = p.radial_rhs(r, u, du);
            let want = -(f64::from(p.dim) - 1.0) / r * du - r.powf(p.a) * p.forcing(u) / p.lambda;
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn exact_singular_profile_has_zero_residual() {
        // u = c r^{-alpha} with c^{p-1} = alpha * Lambda * (n_plus - 2 - alpha)
        // satisfies the Plus equation exactly (convex branch).
        let params = c1();
        let alpha = params.exponents.alpha;
        let z0 = alpha * params.big_lambda * (params.exponents.n_plus - 2.0 - alpha);
        let c = z0.powf(1.0 / (params.p - 1.0));
        for i in 0..200 {
            let r = 0.5 * (100.0f64).powf(i as f64 / 199.0);
            let u = c * r.powf(-alpha);
            let du = -alpha * c * r.powf(-alpha - 1.0);
            let ddu = alpha * (alpha + 1.0) * c * r.powf(-alpha - 2.0);
            let res = ddu - params.radial_rhs(r, u, du);
            assert!(
                res.abs() <= 1e-10 * ddu.abs().max(1.0),
                "residual {res} at r={r}"
            );
        }
    }
}
