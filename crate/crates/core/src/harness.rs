//! Seeded random instances and the cross-validation battery.
//!
//! Randomness comes from a self-contained splitmix-style 64-bit stream
//! ([`SplitMix64`]): one additive Weyl step plus two xor-multiply mixes per
//! draw. It is fully determined by the seed, has no global state, and its
//! output is stable across platforms and releases, which is what makes the
//! battery reports byte-for-byte reproducible.
//!
//! [`cross_validate`] replays every structural identity the rest of the
//! crate promises (scaling/shift/order of spectral radii, oracle agreement,
//! Gelfand bias, Neumann agreement, the resolvent factorization, curve
//! audits, unit-radius normalization, trichotomy cases with sign
//! equivalence, bisection recovery, strictness gaps, Perron residuals, and
//! irreducibility closure properties) over seeded generated instances and
//! reports worst-case violations per invariant.

use crate::linalg::DenseMatrix;
use crate::model::{ModelError, NonNegMatrix, SplitSystem, Tolerances};
use crate::ngm;
use crate::spectral;
use crate::structure;
use crate::trichotomy::{self, TrichotomyCase, TrichotomyError};
use std::fmt;

/// Bounded retries for degenerate (all-zero) draws before giving up.
const MAX_DRAW_RETRIES: usize = 16;

/// Deterministic 64-bit stream: Weyl increment `0x9E3779B97F4A7C15` with two
/// rounds of xor-shift multiplication.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 significant bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `(0, 1]`.
    pub fn next_f64_pos(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn next_range(&mut self, lo: usize, hi: usize) -> usize {
        debug_assert!(lo <= hi);
        lo + (self.next_u64() % (hi - lo + 1) as u64) as usize
    }
}

/// Generator configuration.
///
/// `density` is the probability of a nonzero entry, `scale` caps entry
/// magnitudes (0 is allowed and produces all-zero draws on purpose), and
/// `target_rt` is where the transition radius is rescaled to whenever the
/// drawn transition part has a nonzero radius.
#[derive(Clone, Debug, PartialEq)]
pub struct GenConfig {
    pub n_max: usize,
    pub density: f64,
    pub scale: f64,
    pub seed: u64,
    pub target_rt: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { n_max: 8, density: 0.6, scale: 1.0, seed: 1, target_rt: 0.5 }
    }
}

impl GenConfig {
    fn assert_valid(&self) {
        assert!(self.n_max >= 1, "n_max must be at least 1");
        assert!(
            (0.0..=1.0).contains(&self.density),
            "density must lie in [0, 1]"
        );
        assert!(self.scale >= 0.0 && self.scale.is_finite(), "scale must be finite and >= 0");
        assert!(
            self.target_rt > 0.0 && self.target_rt < 1.0,
            "target_rt must lie in (0, 1)"
        );
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum HarnessError {
    /// Repeated all-zero draws with parameters that should produce mass.
    DegenerateDraw { attempts: usize },
    Split(ModelError),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::DegenerateDraw { attempts } => {
                write!(f, "all-zero draw {attempts} times in a row")
            }
            HarnessError::Split(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<ModelError> for HarnessError {
    fn from(e: ModelError) -> Self {
        HarnessError::Split(e)
    }
}

fn draw_matrix(rng: &mut SplitMix64, n: usize, density: f64, scale: f64) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            // Consume the presence draw unconditionally to keep the stream
            // layout independent of earlier outcomes within the entry.
            let present = rng.next_f64() < density;
            if present {
                m.set(i, j, rng.next_f64_pos() * scale);
            }
        }
    }
    m
}

/// Draws a random splitting with `n <= n_max` and the transition part
/// rescaled so that `r(T) = target_rt` whenever the raw draw has a nonzero
/// transition radius. Every output passes full [`SplitSystem`] validation.
pub fn gen_split(cfg: &GenConfig) -> Result<SplitSystem, HarnessError> {
    cfg.assert_valid();
    let tol = Tolerances::default();
    let mut rng = SplitMix64::new(cfg.seed);
    let mass_expected = cfg.density > 0.0 && cfg.scale > 0.0;
    for _ in 0..MAX_DRAW_RETRIES {
        let n = rng.next_range(1, cfg.n_max);
        let t_raw = draw_matrix(&mut rng, n, cfg.density, cfg.scale);
        let f_raw = draw_matrix(&mut rng, n, cfg.density, cfg.scale);
        if mass_expected && t_raw.is_zero() && f_raw.is_zero() {
            continue;
        }
        let t = NonNegMatrix::from_dense_unchecked(t_raw);
        let f = NonNegMatrix::from_dense_unchecked(f_raw);
        let rt = spectral::spectral_radius(&t, &tol).map_err(ModelError::from)?.radius;
        let t = if rt > 0.0 { t.scale(cfg.target_rt / rt) } else { t };
        return Ok(SplitSystem::new(t, f, &tol)?);
    }
    Err(HarnessError::DegenerateDraw { attempts: MAX_DRAW_RETRIES })
}

/// Draws a random irreducible matrix with `2 <= n <= n_max` by overlaying a
/// full cycle `0 -> 1 -> ... -> n-1 -> 0` (in the influence convention,
/// entry `A[(i+1) mod n][i] > 0`) onto a random draw.
pub fn gen_irreducible(cfg: &GenConfig) -> NonNegMatrix {
    cfg.assert_valid();
    assert!(cfg.n_max >= 2, "irreducible draws need n_max >= 2");
    let mut rng = SplitMix64::new(cfg.seed);
    let n = rng.next_range(2, cfg.n_max);
    let mut m = draw_matrix(&mut rng, n, cfg.density, cfg.scale);
    let cap = if cfg.scale > 0.0 { cfg.scale } else { 1.0 };
    for i in 0..n {
        let j = (i + 1) % n;
        let v = rng.next_f64_pos() * cap;
        if m.get(j, i) == 0.0 {
            m.set(j, i, v);
        }
    }
    NonNegMatrix::from_dense_unchecked(m)
}

/// One invariant's aggregate over a battery run.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantCheck {
    pub name: &'static str,
    /// Sub-cases evaluated (an instance can contribute several).
    pub cases: usize,
    /// Worst violation observed; hard failures count as 1.
    pub worst: f64,
    pub tolerance: f64,
}

impl InvariantCheck {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

/// Cross-validation report: per-invariant worst violations plus hard-failure
/// notes. Rendering is deterministic for fixed inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub instances: usize,
    pub seed: u64,
    /// Set when `target_rt >= 0.95`: resolvent conditioning grows like
    /// `1 / (1 - r(T))`, so such runs stress the tolerances.
    pub near_boundary_stress: bool,
    pub checks: Vec<InvariantCheck>,
    pub failures: Vec<String>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.failures.is_empty() && self.checks.iter().all(InvariantCheck::passed)
    }

    /// Folds another report in: cases add up, worst violations take the max.
    pub fn merge(&mut self, other: Report) {
        self.instances += other.instances;
        self.near_boundary_stress |= other.near_boundary_stress;
        for oc in other.checks {
            match self.checks.iter_mut().find(|c| c.name == oc.name) {
                Some(c) => {
                    c.cases += oc.cases;
                    c.worst = c.worst.max(oc.worst);
                }
                None => self.checks.push(oc),
            }
        }
        self.failures.extend(other.failures);
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "invariant battery: {} instance(s), seed {}",
            self.instances, self.seed
        )?;
        if self.near_boundary_stress {
            writeln!(f, "note: near-boundary stress run (target r(T) >= 0.95)")?;
        }
        for c in &self.checks {
            writeln!(
                f,
                "[{}] {:<24} cases={:<6} worst={:.3e} tol={:.1e}",
                if c.passed() { "PASS" } else { "FAIL" },
                c.name,
                c.cases,
                c.worst,
                c.tolerance
            )?;
        }
        for note in &self.failures {
            writeln!(f, "failure: {note}")?;
        }
        if self.all_passed() {
            writeln!(f, "all invariants passed")
        } else {
            let failed = self.checks.iter().filter(|c| !c.passed()).count();
            writeln!(f, "{} invariant(s) FAILED", failed + usize::from(!self.failures.is_empty()))
        }
    }
}

struct Battery {
    checks: Vec<InvariantCheck>,
    failures: Vec<String>,
}

impl Battery {
    fn new() -> Self {
        let spec: &[(&'static str, f64)] = &[
            ("spectral_scaling", 1e-8),
            ("spectral_shift", 1e-8),
            ("spectral_order", 1e-8),
            ("oracle_equivalence", 1e-8),
            ("gelfand_upper_bias", 1e-8),
            ("neumann_agreement", 1e-8),
            ("resolvent_factorization", 1e-8),
            ("curve_audit", 1e-7),
            ("unit_radius", 1e-7),
            ("trichotomy_case", 1e-7),
            ("sign_equivalence", 0.0),
            ("bisect_identity", 1e-6),
            ("strict_gap", 0.0),
            ("r0_scaling", 1e-8),
            ("perron_residual", 1e-8),
            ("irreducibility_order", 0.0),
            ("splitting_closure", 0.0),
        ];
        Battery {
            checks: spec
                .iter()
                .map(|&(name, tolerance)| InvariantCheck { name, cases: 0, worst: 0.0, tolerance })
                .collect(),
            failures: Vec::new(),
        }
    }

    fn record(&mut self, name: &str, violation: f64) {
        let c = self
            .checks
            .iter_mut()
            .find(|c| c.name == name)
            .expect("check name registered");
        c.cases += 1;
        c.worst = c.worst.max(violation);
    }

    fn hard_fail(&mut self, name: &'static str, note: String) {
        self.record(name, 1.0);
        if self.failures.len() < 20 {
            self.failures.push(note);
        }
    }

    fn radius(&mut self, name: &'static str, m: &NonNegMatrix, tol: &Tolerances, seed: u64) -> Option<f64> {
        match spectral::spectral_radius(m, tol) {
            Ok(r) => Some(r.radius),
            Err(e) => {
                self.hard_fail(name, format!("seed {seed:#018x}: radius failed: {e}"));
                None
            }
        }
    }
}

fn rel_gap(x: f64, y: f64) -> f64 {
    (x - y).abs() / x.abs().max(y.abs()).max(1.0)
}

/// Runs the invariant battery over `count` seeded instances (a split draw
/// and an irreducible draw each) and aggregates worst-case violations.
/// Failures are report content, never panics.
pub fn cross_validate(count: usize, cfg: &GenConfig, tol: &Tolerances) -> Report {
    cfg.assert_valid();
    let mut battery = Battery::new();
    let mut master = SplitMix64::new(cfg.seed);
    for _ in 0..count {
        let split_seed = master.next_u64();
        let irr_seed = master.next_u64();
        let mut aux = SplitMix64::new(split_seed ^ 0xD1B5_4A32_D192_ED03);
        let split_cfg = GenConfig { seed: split_seed, ..cfg.clone() };
        match gen_split(&split_cfg) {
            Ok(sys) => split_battery(&mut battery, &sys, &mut aux, tol, split_seed),
            Err(e) => battery.hard_fail(
                "trichotomy_case",
                format!("seed {split_seed:#018x}: generator failed: {e}"),
            ),
        }
        if cfg.n_max >= 2 {
            let irr_cfg = GenConfig { seed: irr_seed, ..cfg.clone() };
            let a = gen_irreducible(&irr_cfg);
            structure_battery(&mut battery, &a, &mut aux, cfg, tol, irr_seed);
        }
    }
    Report {
        instances: count,
        seed: cfg.seed,
        near_boundary_stress: cfg.target_rt >= 0.95,
        checks: battery.checks,
        failures: battery.failures,
    }
}

fn split_battery(
    battery: &mut Battery,
    sys: &SplitSystem,
    aux: &mut SplitMix64,
    tol: &Tolerances,
    seed: u64,
) {
    let a = sys.combined();
    let Some(ra) = battery.radius("trichotomy_case", a, tol, seed) else { return };
    let r0v = match ngm::r0(sys, tol) {
        Ok(r) => r.radius,
        Err(e) => {
            battery.hard_fail("trichotomy_case", format!("seed {seed:#018x}: r0 failed: {e}"));
            return;
        }
    };

    // Positive homogeneity r(alpha A) = alpha r(A), including the collapse
    // at alpha = 0.
    for alpha in [0.0, 0.5, 10.0] {
        if let Some(rs) = battery.radius("spectral_scaling", &a.scale(alpha), tol, seed) {
            battery.record("spectral_scaling", rel_gap(rs, alpha * ra));
        }
    }

    // Diagonal shifts move the radius additively.
    for c in [0.5, 2.5] {
        if let Some(rs) = battery.radius("spectral_shift", &a.shifted(c), tol, seed) {
            battery.record("spectral_shift", rel_gap(rs, ra + c));
        }
    }

    // Entrywise domination bounds the radius.
    {
        let mut shrunk = a.dense().clone();
        for v in shrunk.data_mut() {
            *v *= aux.next_f64();
        }
        let b = NonNegMatrix::from_dense_unchecked(shrunk);
        match b.entrywise_leq(a) {
            Ok(true) => {}
            _ => battery.hard_fail("spectral_order", format!("seed {seed:#018x}: masked draw not <= original")),
        }
        if let Some(rb) = battery.radius("spectral_order", &b, tol, seed) {
            battery.record("spectral_order", (rb - ra).max(0.0) / ra.max(1.0));
        }
    }

    // Iterative radii agree with the characteristic-polynomial oracle, both
    // for A and for the next-generation operator.
    match spectral::eig_oracle(a) {
        Ok(roots) => battery.record("oracle_equivalence", rel_gap(spectral::max_modulus(&roots), ra)),
        Err(e) => battery.hard_fail("oracle_equivalence", format!("seed {seed:#018x}: oracle failed: {e}")),
    }
    match ngm::next_generation(sys, 1.0) {
        Ok(m) => match spectral::eig_oracle(&m.matrix) {
            Ok(roots) => {
                battery.record("oracle_equivalence", rel_gap(spectral::max_modulus(&roots), r0v))
            }
            Err(e) => battery.hard_fail("oracle_equivalence", format!("seed {seed:#018x}: ngm oracle failed: {e}")),
        },
        Err(e) => battery.hard_fail("oracle_equivalence", format!("seed {seed:#018x}: ngm failed: {e}")),
    }

    // The Gelfand estimate upper-bounds the radius at every squaring depth.
    for k in [1usize, 2, 4, 8] {
        let est = spectral::gelfand_estimate(a, k).radius;
        battery.record("gelfand_upper_bias", (ra - est).max(0.0) / ra.max(1.0));
    }

    // Truncated Neumann sums converge to the LU resolvent monotonically.
    neumann_check(battery, sys, tol, seed);

    // Resolvent factorization through the next-generation correction.
    match ngm::factorization_discrepancy(sys, ra + 1.0) {
        Ok(d) => battery.record("resolvent_factorization", d),
        Err(e) => battery.hard_fail(
            "resolvent_factorization",
            format!("seed {seed:#018x}: factorization failed: {e}"),
        ),
    }

    // Monotone decreasing, convex radius curve on [1, 4].
    match ngm::radius_curve(sys, 1.0, 4.0, 16, tol) {
        Ok(c) => battery.record("curve_audit", c.max_violation),
        Err(e) => battery.hard_fail("curve_audit", format!("seed {seed:#018x}: curve failed: {e}")),
    }

    // Renormalizing fertility by R0 lands the combined radius on 1.
    if r0v > 1e-6 {
        match trichotomy::verify_unit_radius(sys, tol) {
            Ok(v) => battery.record("unit_radius", (v - 1.0).abs()),
            Err(e) => battery.hard_fail("unit_radius", format!("seed {seed:#018x}: unit radius failed: {e}")),
        }
    }

    // Case assignment with its paired inequality, and R0/r(A) on the same
    // side of 1.
    let verdict = match trichotomy::classify(sys, tol) {
        Ok(v) => Some(v),
        Err(TrichotomyError::AmbiguousBoundary { r0, radius_a }) => {
            battery.hard_fail(
                "trichotomy_case",
                format!("seed {seed:#018x}: ambiguous boundary r0={r0:.6e} ra={radius_a:.6e}"),
            );
            None
        }
        Err(e) => {
            battery.hard_fail("trichotomy_case", format!("seed {seed:#018x}: classify failed: {e}"));
            None
        }
    };
    if let Some(v) = &verdict {
        let violation = match v.case {
            TrichotomyCase::Supercritical => (v.radius_a - v.r0).max(0.0),
            TrichotomyCase::Critical => 0.0,
            TrichotomyCase::Subcritical => (v.r0 - v.radius_a).max(0.0),
        };
        battery.record("trichotomy_case", violation / v.radius_a.max(1.0));
        let band = 1e-7;
        let conflict = (v.r0 > 1.0 + band && v.radius_a < 1.0 - band)
            || (v.r0 < 1.0 - band && v.radius_a > 1.0 + band);
        battery.record("sign_equivalence", if conflict { 1.0 } else { 0.0 });
    }

    // Bisection on the radius curve recovers r(A) in the supercritical
    // regime.
    if r0v >= 1.0 + 1e-6 {
        match ngm::bisect_radius(sys, tol) {
            Ok(b) => battery.record("bisect_identity", (b.lambda_star - ra).abs()),
            Err(e) => battery.hard_fail("bisect_identity", format!("seed {seed:#018x}: bisect failed: {e}")),
        }
    }

    // Strictness certification away from the boundary.
    if structure::is_irreducible(a) && !sys.transition().is_zero() && r0v > 1e-6 && (r0v - 1.0).abs() > 1e-3
    {
        match trichotomy::classify_strict(sys, tol) {
            Ok(v) if v.strict => {
                let gap = (v.r0 - v.radius_a).abs();
                battery.record("strict_gap", if gap > 1e-7 { 0.0 } else { 1.0 });
            }
            Ok(_) => battery.record("strict_gap", 1.0),
            Err(e) => battery.hard_fail("strict_gap", format!("seed {seed:#018x}: strict failed: {e}")),
        }
    }

    // R0 is homogeneous in the fertility part.
    match SplitSystem::new(sys.transition().clone(), sys.fertility().scale(0.5), tol) {
        Ok(half) => match ngm::r0(&half, tol) {
            Ok(r) => battery.record("r0_scaling", rel_gap(r.radius, 0.5 * r0v)),
            Err(e) => battery.hard_fail("r0_scaling", format!("seed {seed:#018x}: scaled r0 failed: {e}")),
        },
        Err(e) => battery.hard_fail("r0_scaling", format!("seed {seed:#018x}: scaled split failed: {e}")),
    }
}

fn neumann_check(battery: &mut Battery, sys: &SplitSystem, _tol: &Tolerances, seed: u64) {
    let lambda = 1.0;
    let q = (sys.transition_radius() / lambda).max(0.05);
    let terms = ((1e-13f64.ln() / q.ln()).ceil() as usize).clamp(8, 5000);
    let exact = match ngm::transition_resolvent(sys, lambda) {
        Ok(r) => r.matrix,
        Err(e) => {
            battery.hard_fail("neumann_agreement", format!("seed {seed:#018x}: resolvent failed: {e}"));
            return;
        }
    };
    let norm = exact.op_inf_norm().max(1.0);
    let err_at = |battery: &mut Battery, k: usize| -> Option<f64> {
        match ngm::neumann_resolvent(sys, lambda, k) {
            Ok(p) => Some(exact.dense().sub(p.dense()).op_inf_norm() / norm),
            Err(e) => {
                battery.hard_fail("neumann_agreement", format!("seed {seed:#018x}: neumann failed: {e}"));
                None
            }
        }
    };
    let Some(err_half) = err_at(battery, terms / 2) else { return };
    let Some(err_full) = err_at(battery, terms) else { return };
    // The dropped tail is entrywise nonnegative and shrinks with the term
    // count, so the error must be monotone in k and negligible at the
    // adaptive depth.
    let monotone_violation = (err_full - err_half).max(0.0);
    battery.record("neumann_agreement", err_full.max(monotone_violation));
}

fn structure_battery(
    battery: &mut Battery,
    a: &NonNegMatrix,
    aux: &mut SplitMix64,
    cfg: &GenConfig,
    tol: &Tolerances,
    seed: u64,
) {
    // Perron pair residuals and strict positivity.
    match structure::perron_pair(a, tol) {
        Ok(p) => battery.record("perron_residual", p.residual / p.value.max(1.0)),
        Err(e) => battery.hard_fail("perron_residual", format!("seed {seed:#018x}: perron failed: {e}")),
    }

    // Domination preserves irreducibility: anything entrywise above an
    // irreducible matrix is irreducible.
    {
        let extra = draw_matrix(aux, a.dim(), 0.3, cfg.scale.max(0.5));
        let c = a.dense().add(&extra);
        let c = NonNegMatrix::from_dense_unchecked(c);
        battery.record(
            "irreducibility_order",
            if structure::is_irreducible(&c) { 0.0 } else { 1.0 },
        );
    }

    // Positive recombinations a T + b F of any nonnegative split of an
    // irreducible matrix keep its support pattern, hence its irreducibility.
    {
        let n = a.dim();
        let mut t = a.dense().clone();
        let mut f = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let u = aux.next_f64();
                let v = t.get(i, j);
                t.set(i, j, v * u);
                f.set(i, j, v * (1.0 - u));
            }
        }
        for (wa, wb) in [(0.5, 3.0), (2.0, 0.1)] {
            let mix = t.scale(wa).add(&f.scale(wb));
            let mix = NonNegMatrix::from_dense_unchecked(mix);
            battery.record(
                "splitting_closure",
                if structure::is_irreducible(&mix) { 0.0 } else { 1.0 },
            );
        }
    }
}
