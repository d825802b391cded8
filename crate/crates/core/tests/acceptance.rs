//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its measured evidence (run with `cargo test --test acceptance --
//! --nocapture` to see the lines).

use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use opait_core::dovetail::{scalar_floor, universal_stream, DovetailState};
use opait_core::hhat::{hhat_upper, psi_transport, PsiMap};
use opait_core::linalg::complex::RationalComplex;
use opait_core::linalg::hermitian::RationalHermitian;
use opait_core::linalg::interval::neg_log2_interval;
use opait_core::machine::{Enumerator, TableMachine, Vm, Word};
use opait_core::rational::{pow2, rat, ratio_to_string, rint};
use opait_core::rng::{chunk, mix64};
use opait_core::semimeasure::{
    from_increasing_sequence, IncreasingSequence, SemiMeasureStream,
};
use opait_core::semipovm::{
    projective_stream, scalar_embed, validate_semipovm, SemiPovmStream, SemiPovmViolation,
};
use opait_core::{dovetail, BlockScalarOperator, StateVector};

fn shared_dovetail() -> Arc<Mutex<DovetailState>> {
    static DT: OnceLock<Arc<Mutex<DovetailState>>> = OnceLock::new();
    DT.get_or_init(|| Arc::new(Mutex::new(DovetailState::new())))
        .clone()
}

fn vm_enumerator() -> Arc<Enumerator> {
    static E: OnceLock<Arc<Enumerator>> = OnceLock::new();
    E.get_or_init(|| Arc::new(Enumerator::new(Box::new(Vm)))).clone()
}

fn fixture_machine() -> TableMachine {
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/fixtures/three.machine"
    ))
    .expect("fixture file");
    TableMachine::parse("three", &text).expect("fixture parses")
}

fn fixture_states() -> Vec<StateVector> {
    vec![
        StateVector::basis(1),
        StateVector::basis(2),
        StateVector::basis(5),
        StateVector::from_reals(&[rat(3, 5), rat(4, 5)]).unwrap(),
        StateVector::from_reals(&[rat(5, 13), rat(0, 1), rat(12, 13)]).unwrap(),
    ]
}

/// Deterministic random rational in `[-max, max]` with small denominators.
fn random_rational(seed: u64, draw: u64, word: u32) -> BigRational {
    let bits = chunk(seed, draw, word);
    let num = (bits % 9) as i64 - 4;
    let den = ((bits >> 8) % 4) as i64 + 1;
    rat(num, den)
}

fn random_hermitian(seed: u64, draw: u64, dim: usize) -> RationalHermitian {
    let mut upper = Vec::new();
    let mut word = 0u32;
    for i in 0..dim {
        for j in i..dim {
            let re = random_rational(seed, draw, word);
            let im = if i == j {
                BigRational::zero()
            } else {
                random_rational(seed, draw, word + 1)
            };
            upper.push(RationalComplex::new(re, im));
            word += 2;
        }
    }
    RationalHermitian::from_upper_triangle(dim, upper).unwrap()
}

fn random_vector(seed: u64, draw: u64, dim: usize) -> Vec<RationalComplex> {
    (0..dim)
        .map(|i| {
            RationalComplex::new(
                random_rational(seed, draw, 100 + 2 * i as u32),
                random_rational(seed, draw, 101 + 2 * i as u32),
            )
        })
        .collect()
}

#[test]
fn criterion_01_positivity_oracle_equivalence() {
    let start = Instant::now();
    let mut checked = 0u64;
    let mut psd_count = 0u64;
    for draw in 0..1100u64 {
        let dim = (mix64(draw) % 5) as usize + 1;
        let m = match draw % 3 {
            // raw random (usually indefinite)
            0 => random_hermitian(11, draw, dim),
            // Gram matrix: always PSD
            1 => RationalHermitian::outer(&random_vector(13, draw, dim)),
            // shifted: random plus a diagonal bump, sign varies
            _ => {
                let base = random_hermitian(17, draw, dim);
                let shift = random_rational(19, draw, 0);
                base.add(&RationalHermitian::scaled_identity(dim, &shift))
            }
        };
        let by_char_poly = m.is_psd();
        let by_minors = m.is_psd_by_principal_minors();
        assert_eq!(
            by_char_poly, by_minors,
            "disagreement on draw {draw} (dim {dim})"
        );
        checked += 1;
        if by_char_poly {
            psd_count += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(checked >= 1000);
    assert!(psd_count > 100 && psd_count < checked, "both outcomes exercised");
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    println!(
        "ACCEPTANCE 1 PASS: char-poly PSD test == principal-minor test on {checked} random blocks \
         ({psd_count} PSD) in {:.2}s",
        elapsed.as_secs_f64()
    );
}

/// Rational extension field Q(sqrt(2)), just enough for the rank-one
/// fixture: values `a + b*sqrt(2)`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct QuadExt {
    a: BigRational,
    b: BigRational,
}

impl QuadExt {
    fn rational(a: BigRational) -> Self {
        QuadExt {
            a,
            b: BigRational::zero(),
        }
    }

    fn sqrt2(scale: BigRational) -> Self {
        QuadExt {
            a: BigRational::zero(),
            b: scale,
        }
    }

    fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    fn add(&self, o: &Self) -> Self {
        QuadExt {
            a: &self.a + &o.a,
            b: &self.b + &o.b,
        }
    }

    fn sub(&self, o: &Self) -> Self {
        QuadExt {
            a: &self.a - &o.a,
            b: &self.b - &o.b,
        }
    }

    fn mul(&self, o: &Self) -> Self {
        QuadExt {
            a: &self.a * &o.a + rint(2) * &self.b * &o.b,
            b: &self.a * &o.b + &self.b * &o.a,
        }
    }

    fn scale(&self, c: &BigRational) -> Self {
        QuadExt {
            a: &self.a * c,
            b: &self.b * c,
        }
    }

    fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }
}

#[test]
fn criterion_02_rank_one_minorant_fixture() {
    // the symmetric 2x2 fixture [[2/3, r],[r, 1/3]] with r = sqrt(2)/3
    let off = QuadExt::sqrt2(rat(1, 3));
    let d0 = QuadExt::rational(rat(2, 3));
    let d1 = QuadExt::rational(rat(1, 3));
    let trace = d0.add(&d1);
    let det = d0.mul(&d1).sub(&off.mul(&off));
    assert_eq!(trace, QuadExt::rational(rint(1)));
    assert!(det.is_zero());
    // char(x) = x^2 - x, so the spectrum is exactly {0, 1}
    let eval_char = |x: &BigRational| -> QuadExt {
        QuadExt::rational(x * x).sub(&QuadExt::rational(x.clone()).scale(&trace.a))
    };
    assert!(eval_char(&rint(0)).is_zero());
    assert!(eval_char(&rint(1)).is_zero());

    // tau * A has the irrational off-diagonal tau*sqrt(2)/3 for tau != 0
    let mut irrational_confirmed = 0;
    for draw in 0..100u64 {
        let mut tau = random_rational(23, draw, 0);
        if tau.is_zero() {
            tau = rat(1, 3);
        }
        let entry = off.scale(&tau);
        assert!(!entry.is_rational(), "tau={}", ratio_to_string(&tau));
        irrational_confirmed += 1;
    }

    // rank-one sandwich order: for PSD rank-one A, 0 <= B <= A forces
    // B = tau * A with tau in [0, 1]
    let mut sandwich_checked = 0;
    let mut perturbation_checked = 0;
    for draw in 0..200u64 {
        let dim = (mix64(draw ^ 0xabc) % 3) as usize + 2;
        let mut v = random_vector(29, draw, dim);
        if v.iter().all(RationalComplex::is_zero) {
            v[0] = RationalComplex::one();
        }
        if v.iter().filter(|z| !z.is_zero()).count() < 2 {
            v[1] = RationalComplex::from_ints(1, 1);
        }
        let a = BlockScalarOperator::from_block(RationalHermitian::outer(&v));
        for k in 0..6u64 {
            let tau = match k {
                0 => rint(0),
                1 => rint(1),
                2 => rat(3, 4),
                3 => rat(5, 4),
                4 => rat(-1, 2),
                _ => random_rational(31, draw * 7 + k, 2),
            };
            let scaled = a.scale(&tau);
            let inside = !tau.is_negative() && tau <= rint(1);
            let sandwich =
                scaled.is_psd() && BlockScalarOperator::loewner_leq(&scaled, &a);
            assert_eq!(sandwich, inside, "tau = {}", ratio_to_string(&tau));
            // one-sided check against the direct PSD oracle on (1-tau)A
            let upper = BlockScalarOperator::loewner_leq(&scaled, &a);
            let oracle = a.scale(&(rint(1) - &tau)).is_psd();
            assert_eq!(upper, oracle);
            sandwich_checked += 1;
        }
        if draw < 50 {
            // a diagonal bump keeps the off-diagonal of A/2, so the result
            // is never a multiple of the rank-one A; the sandwich must break
            let eps = rat(1, 7);
            let corner = RationalHermitian::outer(&[RationalComplex::one()])
                .pad_to(dim, &BigRational::zero());
            let bump = RationalHermitian::scaled_identity(dim, &eps).sub(&corner);
            let block = RationalHermitian::outer(&v).scale(&rat(1, 2)).add(&bump);
            let b = BlockScalarOperator::from_block(block);
            assert!(
                !(b.is_psd() && BlockScalarOperator::loewner_leq(&b, &a)),
                "perturbation slipped through at draw {draw}"
            );
            perturbation_checked += 1;
        }
    }
    println!(
        "ACCEPTANCE 2 PASS: spectrum {{0,1}} exact; {irrational_confirmed} tau samples stay \
         irrational; {sandwich_checked} sandwich checks and {perturbation_checked} perturbations agree"
    );
}

#[test]
fn criterion_03_kraft_omega() {
    let e = vm_enumerator();
    let mut last = BigRational::zero();
    for n in 1..=20u64 {
        let v = e.omega_lower(n);
        assert!(v >= last, "mass decreased at stage {n}");
        assert!(v < BigRational::one(), "mass reached 1 at stage {n}");
        last = v;
    }
    let table = Arc::new(Enumerator::new(Box::new(fixture_machine())));
    assert_eq!(table.omega_lower(3), rat(7, 8));
    assert_eq!(table.omega_lower(12), rat(7, 8));
    println!(
        "ACCEPTANCE 3 PASS: machine mass nondecreasing and < 1 through stage 20 \
         (final {}), fixture machine reaches 7/8 exactly",
        ratio_to_string(&last)
    );
}

#[test]
fn criterion_04_stream_validator_suite() {
    let depth = 12;
    let dt = shared_dovetail();
    let mut clean = Vec::new();

    let proj = projective_stream();
    assert!(validate_semipovm(&proj, depth).is_clean());
    clean.push("projective");

    let table_pv = SemiMeasureStream::from_pv(Arc::new(Enumerator::new(Box::new(
        fixture_machine(),
    ))));
    let embed = scalar_embed(&table_pv);
    assert!(validate_semipovm(&embed, depth).is_clean());
    clean.push("scalar-embed");

    let mixed = dovetail::shift_mix(&proj);
    assert!(validate_semipovm(&mixed, depth).is_clean());
    clean.push("shift-mix");

    for l in 1..=8 {
        let g = dovetail::guarded_stream(dt.clone(), l);
        assert!(validate_semipovm(&g, depth).is_clean(), "guarded {l}");
    }
    clean.push("guarded 1..=8");

    let mix = universal_stream(dt.clone());
    assert!(validate_semipovm(&mix, depth).is_clean());
    clean.push("universal");

    let (swapped, _report) = psi_transport(PsiMap::SwapPairs, &mix, depth, depth);
    assert!(validate_semipovm(&swapped, depth).is_clean());
    clean.push("psi-swap");

    // adversarial mutants, each caught with the right witness
    let schedule_break = SemiPovmStream::from_fn(
        "mutant-schedule",
        false,
        |n, s| {
            if n <= 3 && s == 2 {
                BlockScalarOperator::scaled_block_identity(1, &rat(1, 2))
            } else {
                BlockScalarOperator::zero()
            }
        },
        |_, _| 1,
    );
    let report = validate_semipovm(&schedule_break, 5);
    assert!(report
        .violations
        .contains(&SemiPovmViolation::ScheduleViolated { n: 3, s: 2 }));

    let mass_break = SemiPovmStream::from_fn(
        "mutant-mass",
        true,
        |_n, _s| BlockScalarOperator::scaled_block_identity(1, &rat(3, 5)),
        |_, _| 1,
    );
    let report = validate_semipovm(&mass_break, 4);
    assert!(report
        .violations
        .contains(&SemiPovmViolation::MassViolated { n: 2 }));

    let positivity_break = SemiPovmStream::from_fn(
        "mutant-negative",
        false,
        |n, s| {
            if n == 2 && s == 1 {
                BlockScalarOperator::scaled_block_identity(1, &rat(-1, 8))
            } else {
                BlockScalarOperator::scaled_block_identity(1, &pow2(-(n as i64 + 4)))
            }
        },
        |_, _| 1,
    );
    let report = validate_semipovm(&positivity_break, 4);
    assert!(report
        .violations
        .contains(&SemiPovmViolation::NotPositive { n: 2, s: 1 }));

    println!(
        "ACCEPTANCE 4 PASS: {} stream families clean at depth {depth}; \
         schedule/mass/positivity mutants each caught with exact witnesses",
        clean.len()
    );
}

#[test]
fn criterion_05_mixture_domination() {
    let dt = shared_dovetail();
    let mut checks = 0u64;
    let mut state = dt.lock().unwrap();
    for n in 1..=10u64 {
        for s in 1..=10u64 {
            let mix = state.mixture_eval(n, s);
            for l in 1..=n {
                let comp = state.guarded_eval(l, n, s).scale(&pow2(-(l as i64)));
                assert!(
                    BlockScalarOperator::loewner_leq(&comp, &mix),
                    "domination failed at l={l}, n={n}, s={s}"
                );
                checks += 1;
            }
        }
    }
    println!("ACCEPTANCE 5 PASS: {checks} exact Loewner dominations of weighted components");
}

#[test]
fn criterion_06_omega_hat_monotone_bounds() {
    let dt = shared_dovetail();
    let states = fixture_states();
    let mut state = dt.lock().unwrap();
    let max = 14u64;
    // cache quad forms over the grid
    for x in &states {
        let mut grid = vec![vec![BigRational::zero(); max as usize + 1]; max as usize + 1];
        for n in 1..=max {
            for m in 1..=max {
                let q = state.omega_hat_lower(n, m).quad_form(x);
                assert!(q <= BigRational::one());
                assert!(!q.is_negative());
                grid[n as usize][m as usize] = q;
            }
        }
        for n in 1..=max as usize {
            for m in 1..=max as usize {
                if n > 1 {
                    assert!(grid[n][m] >= grid[n - 1][m], "stage monotonicity");
                }
                if m > 1 {
                    assert!(grid[n][m] >= grid[n][m - 1], "window monotonicity");
                }
            }
        }
        // planted floor: the first emitter's ramp alone already explains
        // this much of the quadratic form (its table reaches strings up to
        // the stage, so the sum stops at min(n, m))
        for n in 1..=max {
            for m in 1..=max {
                let mass = x.mass_within(n as usize + 1);
                let bound: BigRational = (1..=m.min(n))
                    .map(|s| scalar_floor(s) * (rint(1) - pow2(-(n as i64))) * &mass)
                    .sum();
                assert!(
                    grid[n as usize][m as usize] >= bound,
                    "floor bound failed at n={n}, m={m}"
                );
            }
        }
    }
    println!(
        "ACCEPTANCE 6 PASS: quad forms of the halting-mass bound monotone in (stage, window), \
         <= 1, and above the planted floor for {} states over a {max}x{max} grid",
        states.len()
    );
}

#[test]
fn criterion_07_hhat_soundness() {
    let dt = shared_dovetail();
    let eps = pow2(-10);
    let states = fixture_states();
    let enumerator = vm_enumerator();
    let mut state = dt.lock().unwrap();
    let mut jensen_checks = 0u64;

    for s in 1..=8u64 {
        let first_stage = s + 3;
        let mut prev_diag: Option<Vec<opait_core::RatInterval>> = None;
        for n in first_stage..=14 {
            let bound = hhat_upper(&mut state, s, n, &eps).unwrap();
            let diag = bound.enclosure.diag_entries();
            for d in &diag {
                assert!(!d.lo.is_negative(), "negative diagonal at s={s}, n={n}");
            }
            assert!(!bound.enclosure.tail().lo.is_negative());
            if let Some(prev) = &prev_diag {
                for (now, before) in diag.iter().zip(prev.iter()) {
                    assert!(
                        now.lo <= &before.hi + rint(2) * &eps,
                        "bound grew at s={s}, n={n}"
                    );
                }
            }
            prev_diag = Some(diag);

            if n == 14 {
                // scalar concavity: the enclosure's quadratic form cannot
                // undercut -log2 of the exact quadratic form of the
                // certified lower bound
                let lower = opait_core::hhat::certified_lower_bound(&mut state, s, n).unwrap();
                for x in &states {
                    let exact = lower.quad_form(x);
                    assert!(exact.is_positive());
                    let target = neg_log2_interval(&exact, 12);
                    let through_operator = bound.enclosure.quad_form_interval(x);
                    assert!(
                        through_operator.hi >= &target.lo - &eps,
                        "concavity direction failed at s={s}"
                    );
                    jensen_checks += 1;
                }
            }
        }
    }

    // recorded comparison against shortest discovered programs
    let fixtures = [Word::empty(), Word::parse("0").unwrap(), Word::parse("1").unwrap()];
    let stage = 14u64;
    let enum_stage = 16u64;
    let x = StateVector::basis(1);
    let mut rows = Vec::new();
    let mut reported = BigRational::zero();
    for w in &fixtures {
        let c = enumerator
            .complexity_upper(enum_stage, w)
            .expect("fixture strings have known programs");
        let bound = hhat_upper(&mut state, w.index(), stage, &eps).unwrap();
        let ub = bound.enclosure.quad_form_interval(&x).hi;
        let gap = &ub - rint(c as i64);
        if gap > reported {
            reported = gap;
        }
        rows.push((w.clone(), c, ub));
    }
    for (w, c, ub) in &rows {
        assert!(
            *ub <= rint(*c as i64) + &reported,
            "recorded constant fails on {w}"
        );
    }
    println!(
        "ACCEPTANCE 7 PASS: bounds nonincreasing with nonnegative diagonals for s <= 8; \
         {jensen_checks} concavity checks passed; recorded complexity-gap constant = {}",
        ratio_to_string(&reported)
    );
}

#[test]
fn criterion_08_conversion_algorithms() {
    let b = IncreasingSequence::from_fn(|n| rint(1) - pow2(-(n as i64)));
    let r = from_increasing_sequence(&b, 1, 64).unwrap();
    assert_eq!(r.eval(1, 1), rint(0));
    for s in 2..=64u64 {
        assert_eq!(r.eval(3, s), pow2(-(s as i64)), "r({s})");
    }
    for n in 1..=64u64 {
        let lhs = r.partial_mass(1, n);
        let rhs = b.eval(n) - b.eval(1);
        assert_eq!(lhs, rhs, "partial-sum identity at N={n}");
    }
    println!(
        "ACCEPTANCE 8 PASS: geometric sequence converts exactly (r(s) = 2^-s, r(1) = 0) \
         and the partial-sum identity holds for N <= 64"
    );
}

#[test]
fn criterion_10_projective_vs_scalar_demonstration() {
    // finite-stage demonstration table, no limit claim: the projective
    // stream concentrates unit mass per outcome, while any scalar
    // embedding spends shrinking mass there, so no single constant spans
    // the window.
    let n = 12u64;
    let proj = projective_stream();
    let geometric = SemiMeasureStream::from_fn("geometric", |_n, s| pow2(-(s as i64)));
    let embed = scalar_embed(&geometric);
    let mut admissible = Vec::new();
    println!("  s | projective mass at e_s | embedded mass at e_s | admissible constant");
    for s in 1..=10u64 {
        let e_s = StateVector::basis(s as usize);
        let p = proj.eval(n, s).quad_form(&e_s);
        let q = embed.eval(n, s).quad_form(&e_s);
        assert!(p >= BigRational::one());
        let c = &q / &p;
        println!(
            "  {s} | {} | {} | {}",
            ratio_to_string(&p),
            ratio_to_string(&q),
            ratio_to_string(&c)
        );
        admissible.push(c);
    }
    for w in admissible.windows(2) {
        assert!(w[1] < w[0], "admissible constants must shrink");
    }
    let spread = &admissible[0] / &admissible[9];
    assert!(spread >= rint(256));
    println!(
        "ACCEPTANCE 10 PASS: admissible constants shrink strictly across s <= 10 \
         (spread {}x); no single constant works over the window",
        ratio_to_string(&spread)
    );
}
