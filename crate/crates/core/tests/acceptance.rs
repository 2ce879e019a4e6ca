//! End-to-end acceptance suite. Each test covers one numbered criterion,
//! asserts its pinned tolerances and prints a single PASS line (visible
//! with `--nocapture`) carrying the measured numbers.

use std::time::Instant;

use orthosde::mc::{convergence_study, run_mc, McConfig};
use orthosde::moments::{
    exact_terminal_expectation, fourth_moment_bias, verify_moment_conditions, MOMENT_TOLERANCE,
};
use orthosde::orthogonal::{
    haar_product_moment, haar_value, is_odd_ordered, phi_gray, psi, tau_eval,
    walsh_product_expectation, HaarIndex, IndexSet, SignVector,
};
use orthosde::sde::ModelKind;
use orthosde::{GeneratorSpec, SchemeKind, SdeModel, TestFunction, UniformSource};

fn pass(criterion: u32, detail: String) {
    println!("acceptance criterion {criterion}: PASS ({detail})");
}

#[test]
fn criterion_1_moment_conditions_hold_exactly_for_every_level_and_dimension() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut checked = 0u32;
    for kind in SchemeKind::MIMICKING {
        for k in 1..=6u32 {
            for d in 1..=1usize << (k - 1) {
                for dt in [1.0, 1.0 / 16.0] {
                    let spec = GeneratorSpec::new(kind, d, Some(k), dt).unwrap();
                    let report = verify_moment_conditions(spec).unwrap();
                    assert!(
                        report.pass && report.max_violation() <= 1e-12,
                        "{kind} K={k} d={d} dt={dt}: violation {}",
                        report.max_violation()
                    );
                    worst = worst.max(report.max_violation());
                    checked += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "took {elapsed:.1}s, bound is 10s");
    assert_eq!(MOMENT_TOLERANCE, 1e-12);
    pass(
        1,
        format!("{checked} generator configurations, worst violation {worst:.2e}, {elapsed:.2}s"),
    );
}

#[test]
fn criterion_2_gray_enumeration_is_odd_ordered_and_satisfies_its_identities() {
    let start = Instant::now();
    for k in 1..=16u32 {
        assert!(
            is_odd_ordered(|j| phi_gray(j, k), k).unwrap(),
            "phi_gray not odd ordered at K={k}"
        );
    }
    for k in 1..=12u32 {
        for j in 1..=1u64 << (k - 1) {
            assert_eq!(
                psi(2 * j, k).unwrap().mask(),
                phi_gray(j, k).unwrap().mask(),
                "psi(2j) != phi(j) at K={k} j={j}"
            );
        }
        for l in 2..=k {
            let toggles = (1u64 << (l - 1)) | (1 << (l - 2));
            for j in 1..=1u64 << (l - 1) {
                assert_eq!(
                    psi((1 << (l - 1)) + j, k).unwrap().mask(),
                    psi(j, k).unwrap().mask() ^ toggles,
                    "level-doubling identity failed at K={k} l={l} j={j}"
                );
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "took {elapsed:.1}s, bound is 5s");
    pass(
        2,
        format!("odd order through K=16, both index identities through K=12, {elapsed:.2}s"),
    );
}

fn haar_brute_force_moment(k: u32, indices: &[u64]) -> f64 {
    let points = 1u64 << k;
    let mut total = 0.0;
    for x in 1..=points {
        let mut prod = 1.0;
        for &j in indices {
            prod *= haar_value(HaarIndex::new(k, j).unwrap(), x).unwrap();
        }
        total += prod;
    }
    total / points as f64
}

#[test]
fn criterion_3_haar_product_moments_match_enumeration() {
    let mut checked = 0u64;
    let assert_close = |k: u32, indices: &[u64]| {
        let formula = haar_product_moment(k, indices).unwrap();
        let enumerated = haar_brute_force_moment(k, indices);
        assert!(
            (formula - enumerated).abs() <= 1e-12 * formula.abs().max(1.0),
            "K={k} indices={indices:?}: formula {formula}, enumeration {enumerated}"
        );
    };
    for k in 1..=5u32 {
        let top = 1u64 << (k - 1);
        for j1 in 1..=top {
            assert_close(k, &[j1]);
            checked += 1;
            for j2 in 1..=top {
                assert_close(k, &[j1, j2]);
                checked += 1;
                for j3 in 1..=top {
                    assert_close(k, &[j1, j2, j3]);
                    checked += 1;
                }
            }
        }
    }
    let mut src = UniformSource::new(314159, 0);
    for _ in 0..1000 {
        let k = 1 + ((src.next_index(3) - 1) % 5) as u32;
        let p = 4 + ((src.next_index(2) - 1) % 3) as usize;
        let indices: Vec<u64> = (0..p)
            .map(|_| if k == 1 { 1 } else { src.next_index(k - 1) })
            .collect();
        assert_close(k, &indices);
        checked += 1;
    }
    pass(3, format!("{checked} index tuples, tolerance 1e-12"));
}

fn walsh_brute_force(sets: &[IndexSet], k: u32) -> f64 {
    let mut total: i64 = 0;
    for bits in 0..1u64 << k {
        let signs = SignVector::new(bits, k).unwrap();
        let mut prod = 1i64;
        for s in sets {
            prod *= tau_eval(s, &signs).unwrap() as i64;
        }
        total += prod;
    }
    total as f64 / (1u64 << k) as f64
}

#[test]
fn criterion_4_walsh_product_rule_matches_brute_force() {
    let mut src = UniformSource::new(271828, 0);
    for case in 0..10_000u32 {
        let k = 1 + ((src.next_index(4) - 1) % 10) as u32;
        let len = ((src.next_index(3) - 1) % 7) as usize;
        let sets: Vec<IndexSet> = (0..len)
            .map(|_| IndexSet::new(src.next_word() & ((1 << k) - 1), k).unwrap())
            .collect();
        let rule = walsh_product_expectation(&sets).unwrap();
        let brute = walsh_brute_force(&sets, k);
        assert_eq!(rule, brute, "case {case}: K={k} sets {sets:?}");
    }
    pass(4, "10000 random set tuples, exact equality".to_string());
}

#[test]
fn criterion_5_fourth_moment_gap_formula_and_monte_carlo() {
    let start = Instant::now();
    let t = 1.0;
    let mut worst = 0.0f64;
    let mut checked = 0u32;
    for kind in SchemeKind::MIMICKING {
        for k in 1..=4u32 {
            for d in 1..=4usize.min(1 << (k - 1)) {
                for n in 1..=4u64 {
                    let model = SdeModel::brownian(d).unwrap();
                    let spec = GeneratorSpec::new(kind, d, Some(k), t / n as f64).unwrap();
                    let exact =
                        exact_terminal_expectation(&model, TestFunction::FourthNorm, spec, n)
                            .unwrap();
                    let reference = model
                        .reference_expectation(TestFunction::FourthNorm, t)
                        .unwrap();
                    let analytic = fourth_moment_bias(kind, d, Some(k), t, n).unwrap().value;
                    let gap = (reference - exact - analytic).abs();
                    assert!(
                        gap <= 1e-10,
                        "{kind} d={d} K={k} n={n}: formula {analytic}, enumerated {}",
                        reference - exact
                    );
                    worst = worst.max(gap);
                    checked += 1;
                }
            }
        }
    }

    let d = 8;
    let n = 16;
    let model = SdeModel::brownian(d).unwrap();
    let expected = 79.0;
    let mut mc_detail = String::new();
    for kind in [SchemeKind::WalshGray, SchemeKind::Haar] {
        let spec = GeneratorSpec::new(kind, d, Some(4), t / n as f64).unwrap();
        let cfg = McConfig::new(1_000_000, 861_001);
        let result = run_mc(&model, TestFunction::FourthNorm, spec, n, t, &cfg).unwrap();
        let se = (result.variance / cfg.trials as f64).sqrt();
        assert!(
            (result.mean - expected).abs() <= 3.0 * se,
            "{kind}: mean {} vs {expected}, se {se}",
            result.mean
        );
        mc_detail.push_str(&format!(" {kind}={:.4}", result.mean));
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "took {elapsed:.1}s, bound is 120s");
    pass(
        5,
        format!(
            "{checked} enumerated gaps within 1e-10 (worst {worst:.2e}); \
             million-trial means vs 79:{mc_detail}; {elapsed:.1}s"
        ),
    );
}

#[test]
fn criterion_6_weak_error_decays_at_first_order() {
    let start = Instant::now();
    let t = 1.0;
    let d = 4;
    let trials = 10_000_000;
    let grid = [4u64, 8, 16, 32];
    let model = SdeModel::ornstein_uhlenbeck(d, 1.0).unwrap();
    let mut slopes = String::new();
    for kind in [SchemeKind::Gaussian, SchemeKind::WalshGray] {
        let spec = GeneratorSpec::new(kind, d, None, 1.0).unwrap();
        let cfg = McConfig::new(trials, 140_861);
        let study =
            convergence_study(&model, TestFunction::SquareNorm, spec, t, &grid, &cfg).unwrap();
        assert!(
            (-1.3..=-0.7).contains(&study.slope),
            "{kind}: slope {} outside [-1.3, -0.7]; errors {:?}",
            study.slope,
            study.points.iter().map(|p| p.abs_error).collect::<Vec<_>>()
        );
        slopes.push_str(&format!(" {kind}={:.3}", study.slope));
    }

    let model = SdeModel::brownian(d).unwrap();
    let reference = model
        .reference_expectation(TestFunction::FourthNorm, t)
        .unwrap();
    let expected_scaled_gap = 2.0 * d as f64 * t * t;
    let mut gaps = String::new();
    for n in [8u64, 16, 32] {
        let spec = GeneratorSpec::walsh_gray(d, None, t / n as f64).unwrap();
        let cfg = McConfig::new(trials, 928_371);
        let result = run_mc(&model, TestFunction::FourthNorm, spec, n, t, &cfg).unwrap();
        let scaled_gap = n as f64 * (reference - result.mean);
        assert!(
            (scaled_gap - expected_scaled_gap).abs() <= 0.15 * expected_scaled_gap,
            "n={n}: n*gap = {scaled_gap}, expected {expected_scaled_gap} within 15%"
        );
        gaps.push_str(&format!(" n{n}={scaled_gap:.3}"));
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 600.0, "took {elapsed:.1}s, bound is 600s");
    pass(
        6,
        format!(
            "ten-million-trial slopes{slopes}; scaled fourth-moment gaps vs 8:{gaps}; {elapsed:.0}s"
        ),
    );
}

#[test]
fn criterion_7_draw_counters_prove_the_single_word_cost() {
    let n = 50u64;
    let trials = 10u64;
    let t = 1.0;
    let mut detail = String::new();
    for d in [32usize, 256, 1024] {
        let model = SdeModel::brownian(d).unwrap();
        for kind in SchemeKind::MIMICKING {
            let spec = GeneratorSpec::new(kind, d, None, t / n as f64).unwrap();
            let cfg = McConfig::new(trials, 5);
            let result = run_mc(&model, TestFunction::SquareNorm, spec, n, t, &cfg).unwrap();
            assert_eq!(
                result.uniform_draws,
                trials * n,
                "{kind} at d={d} should draw exactly one word per step"
            );
        }
        let spec = GeneratorSpec::gaussian(d, t / n as f64).unwrap();
        let cfg = McConfig::new(trials, 5);
        let result = run_mc(&model, TestFunction::SquareNorm, spec, n, t, &cfg).unwrap();
        assert!(
            result.uniform_draws >= trials * n * (d as u64 / 2),
            "gaussian at d={d} drew {} words, expected at least {}",
            result.uniform_draws,
            trials * n * (d as u64 / 2)
        );
        detail.push_str(&format!(
            " d={d}: mimicking={}, gaussian={}",
            trials * n,
            result.uniform_draws
        ));
    }
    pass(
        7,
        format!("exact word counts over {trials}x{n} steps:{detail}"),
    );
}

#[test]
fn criterion_8_results_are_bit_identical_for_any_thread_count() {
    let d = 32;
    let n = 64u64;
    let t = 1.0;
    let model = SdeModel::mean_repulsion(d).unwrap();
    assert_eq!(model.kind(), ModelKind::MeanRepulsion);
    let mut detail = String::new();
    for kind in [SchemeKind::WalshGray, SchemeKind::Gaussian] {
        let spec = GeneratorSpec::new(kind, d, None, t / n as f64).unwrap();
        let base = run_mc(
            &model,
            TestFunction::CosSum,
            spec,
            n,
            t,
            &McConfig::new(10_000, 77),
        )
        .unwrap();
        for threads in [4usize, 8] {
            let other = run_mc(
                &model,
                TestFunction::CosSum,
                spec,
                n,
                t,
                &McConfig::new(10_000, 77).with_threads(threads),
            )
            .unwrap();
            assert_eq!(
                base.mean.to_bits(),
                other.mean.to_bits(),
                "{kind}: mean differs at {threads} threads"
            );
            assert_eq!(
                base.variance.to_bits(),
                other.variance.to_bits(),
                "{kind}: variance differs at {threads} threads"
            );
            assert_eq!(base.uniform_draws, other.uniform_draws);
        }
        detail.push_str(&format!(" {kind}={:.6}", base.mean));
    }
    pass(8, format!("threads 1/4/8 agree bit for bit:{detail}"));
}

#[test]
fn criterion_9_scheme_cost_is_dimension_free_in_draws() {
    // Wall-clock tables vary by machine and are not asserted; the
    // machine-checkable substitute is the draw accounting: mimicking
    // schemes consume one word per step at every dimension while the
    // gaussian scheme's consumption grows linearly with d.
    let n = 32u64;
    let t = 1.0;
    let trials = 100u64;
    let mut gaussian_draws = Vec::new();
    for d in [32usize, 128, 512] {
        let model = SdeModel::brownian(d).unwrap();
        let mimicking = GeneratorSpec::walsh_gray(d, None, t / n as f64).unwrap();
        let cfg = McConfig::new(trials, 99);
        let result = run_mc(&model, TestFunction::SquareNorm, mimicking, n, t, &cfg).unwrap();
        assert_eq!(result.uniform_draws, trials * n);
        let gaussian = GeneratorSpec::gaussian(d, t / n as f64).unwrap();
        let result = run_mc(&model, TestFunction::SquareNorm, gaussian, n, t, &cfg).unwrap();
        gaussian_draws.push((d, result.uniform_draws));
    }
    for window in gaussian_draws.windows(2) {
        let (d_small, draws_small) = window[0];
        let (d_large, draws_large) = window[1];
        let ratio = draws_large as f64 / draws_small as f64;
        let dims = d_large as f64 / d_small as f64;
        assert!(
            (ratio - dims).abs() < 0.1 * dims,
            "gaussian draws should scale with d: {draws_small} at d={d_small}, \
             {draws_large} at d={d_large}"
        );
    }
    pass(
        9,
        format!(
            "walsh-gray stays at {} draws while gaussian grows {:?}",
            trials * n,
            gaussian_draws
        ),
    );
}
