//! Acceptance suite: one test per criterion, each printing a summary line.
//!
//! Tolerances are pinned in code; Monte Carlo gates sit at four standard
//! errors (about a 6e-5 two-sided false-failure rate per gate).

use unimod::dani::{
    dirichlet_check_both, psi_to_r, r_to_psi, PsiFunction, RateFunction,
};
use unimod::dynamics::{
    bc_experiment, kr_revisit_under_flow, primitive_near_unit_covering, sample_kr_members,
    thickening_measure_mc, OrbitStart,
};
use unimod::haar::HaarSampler;
use unimod::moments::{
    kr_measure_asymptotic, kr_measure_exact, kr_measure_mc, mc_moment, overlap_integral,
    second_moment_disc_exact, second_moment_general, second_moment_square_exact,
    siegel_mean_exact, QuadOptions, ZETA2,
};
use unimod::ConvexRegion;

const MC_SAMPLES: u64 = 1_000_000;

fn pass(criterion: &str, detail: String) {
    eprintln!("ACCEPTANCE {criterion}: PASS  {detail}");
}

#[test]
fn criterion_01_square_moment_constant() {
    let value = second_moment_square_exact(0.0).unwrap();
    let expect = 144.0 / (std::f64::consts::PI * std::f64::consts::PI) - 8.0;
    assert!(
        (value - expect).abs() <= 1e-10,
        "closed form {value} vs 144/pi^2 - 8 = {expect}"
    );
    assert!((value - 6.59).abs() < 0.005, "published approximation 6.59");
    pass("01 square-moment constant", format!("value = {value}"));
}

#[test]
fn criterion_02_quadrature_vs_square_closed_form() {
    let mut worst: f64 = 0.0;
    for &r in &[0.05, 0.1, 0.2, 0.3] {
        let region = ConvexRegion::shrinking_square(r).unwrap();
        let quad = second_moment_general(&region, QuadOptions::default()).unwrap();
        let exact = second_moment_square_exact(r).unwrap();
        let rel = (quad.value - exact).abs() / exact;
        assert!(rel <= 1e-4, "r = {r}: quad {} vs exact {exact}", quad.value);
        worst = worst.max(rel);
    }
    pass(
        "02 quadrature vs square closed form",
        format!("worst relative deviation = {worst:.2e}"),
    );
}

#[test]
fn criterion_03_quadrature_vs_disc_closed_form() {
    let mut worst: f64 = 0.0;
    for &radius in &[1.2, 1.7, 2.5] {
        let region = ConvexRegion::disc(radius).unwrap();
        let quad = second_moment_general(&region, QuadOptions::default()).unwrap();
        let exact = second_moment_disc_exact(radius).unwrap();
        let rel = (quad.value - exact).abs() / exact;
        assert!(
            rel <= 1e-4,
            "R = {radius}: quad {} vs exact {exact}",
            quad.value
        );
        worst = worst.max(rel);
    }
    pass(
        "03 quadrature vs disc closed form",
        format!("worst relative deviation = {worst:.2e}"),
    );
}

#[test]
fn criterion_04_siegel_mean_monte_carlo() {
    let sampler = HaarSampler::new(0x5153_4D43);
    let mut details = Vec::new();
    for region in [
        ConvexRegion::disc(1.0).unwrap(),
        ConvexRegion::shrinking_square(0.1).unwrap(),
        ConvexRegion::rect(-0.8, -0.3, 0.5, 0.9).unwrap(),
    ] {
        let est = mc_moment(&region, 1, MC_SAMPLES, &sampler).unwrap();
        let expect = siegel_mean_exact(&region);
        let dev = (est.mean - expect).abs() / est.std_error;
        assert!(
            dev <= 4.0,
            "{region}: mean {} vs {expect}, {dev:.2} SE",
            est.mean
        );
        details.push(format!("{region}: {:.2} SE", dev));
    }
    pass("04 Siegel mean by MC", details.join(", "));
}

#[test]
fn criterion_05_second_moment_monte_carlo() {
    let sampler = HaarSampler::new(0x4D4F_4D32);
    let region = ConvexRegion::shrinking_square(0.1).unwrap();
    let est = mc_moment(&region, 2, MC_SAMPLES, &sampler).unwrap();
    let expect = second_moment_square_exact(0.1).unwrap();
    let dev = (est.mean - expect).abs() / est.std_error;
    assert!(dev <= 4.0, "mean {} vs {expect}, {dev:.2} SE", est.mean);
    pass(
        "05 second moment by MC",
        format!("{:.5} vs {expect:.5} ({dev:.2} SE)", est.mean),
    );
}

#[test]
fn criterion_06_kr_measure_monte_carlo() {
    let sampler = HaarSampler::new(0x4B52_4D43);
    let mut details = Vec::new();
    for &r in &[0.2, 0.3] {
        let est = kr_measure_mc(r, MC_SAMPLES, &sampler).unwrap();
        let expect = kr_measure_exact(r).unwrap();
        let dev = (est.fraction - expect).abs() / est.std_error;
        assert!(
            dev <= 4.0,
            "r = {r}: fraction {} vs {expect}, {dev:.2} SE",
            est.fraction
        );
        details.push(format!("r={r}: {dev:.2} SE"));
    }
    pass("06 K_r measure by MC", details.join(", "));
}

#[test]
fn criterion_07_asymptotic_regime() {
    let ratio = |r: f64| kr_measure_exact(r).unwrap() / kr_measure_asymptotic(r).unwrap();
    let r3 = ratio(1e-3);
    let r4 = ratio(1e-4);
    let r5 = ratio(1e-5);
    assert!(
        (r4 - 1.0).abs() < (r3 - 1.0).abs() && (r5 - 1.0).abs() < (r4 - 1.0).abs(),
        "ratios not monotone: {r3}, {r4}, {r5}"
    );
    assert!((r5 - 1.0).abs() < 0.2, "ratio at 1e-5: {r5}");
    pass(
        "07 asymptotic regime",
        format!("ratios {r3:.4}, {r4:.4}, {r5:.4}"),
    );
}

fn kr_member_pool(r: f64) -> Vec<unimod::LatticeBasis> {
    let sampler = HaarSampler::new(0x4B52_504C);
    let members = sample_kr_members(r, 500, 500, 3_000_000, &sampler).unwrap();
    assert!(
        members.len() == 1000,
        "expected 1000 members, got {}",
        members.len()
    );
    members
}

#[test]
fn criterion_08_flow_separation() {
    let r = 0.008;
    let members = kr_member_pool(r);
    let lo = 6.0 * r;
    let hi = 1.9f64.ln();
    let mut revisits = 0u64;
    let mut checks = 0u64;
    for basis in &members {
        for i in 0..20 {
            let s = lo + (hi - lo) * i as f64 / 19.0;
            if kr_revisit_under_flow(basis, r, s).unwrap() {
                revisits += 1;
            }
            checks += 1;
        }
    }
    assert_eq!(revisits, 0, "flow separation violated");
    pass(
        "08 flow separation",
        format!("{checks} member-flow checks, zero revisits"),
    );
}

#[test]
fn criterion_09_near_unit_covering() {
    let r = 0.008;
    let members = kr_member_pool(r);
    let mut violations = 0u64;
    for basis in &members {
        if !primitive_near_unit_covering(basis, r).unwrap() {
            violations += 1;
        }
    }
    assert_eq!(violations, 0, "covering violated");
    pass(
        "09 near-unit covering",
        format!("{} members, zero violations", members.len()),
    );
}

#[test]
fn criterion_10_thickening_band() {
    let sampler = HaarSampler::new(0x5448_4B4E);
    let mut ratios = Vec::new();
    let mut details = Vec::new();
    for &r in &[0.02, 0.05, 0.1] {
        let est = thickening_measure_mc(r, MC_SAMPLES, r / 4.0, &sampler).unwrap();
        assert!(
            est.indeterminate_fraction < 0.1 * est.estimate,
            "r = {r}: indeterminate fraction {} vs estimate {}",
            est.indeterminate_fraction,
            est.estimate
        );
        let scale = r * (1.0 / r).ln();
        let ratio = est.estimate / scale;
        assert!(
            (0.1..=10.0).contains(&ratio),
            "r = {r}: estimate/(r log(1/r)) = {ratio} outside [0.1, 10]"
        );
        ratios.push(ratio);
        // Containment: K_r sits inside its thickening at s = 0.
        let kr = kr_measure_mc(r, MC_SAMPLES, &sampler).unwrap();
        assert!(
            est.estimate >= kr.fraction - 4.0 * kr.std_error,
            "r = {r}: thickening {} below K_r measure {}",
            est.estimate,
            kr.fraction
        );
        details.push(format!("r={r}: est={:.5}", est.estimate));
    }
    let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
    assert!(
        max / min <= 3.0,
        "ratio band too wide: {ratios:?} (max/min = {})",
        max / min
    );
    pass(
        "10 thickening band",
        format!("{}; ratios within factor {:.2}", details.join(", "), max / min),
    );
}

#[test]
fn criterion_11_dani_roundtrip() {
    let mut worst_residual: f64 = 0.0;
    let mut worst_roundtrip: f64 = 0.0;
    for psi in [
        PsiFunction::power(0.9, None).unwrap(),
        PsiFunction::one_minus_inv_log(None).unwrap(),
    ] {
        let rate = RateFunction::dani_of(psi.clone());
        let s0 = rate.domain_start();
        for i in 0..1_000 {
            let s = s0 + 0.01 * i as f64;
            let r = psi_to_r(&psi, s).unwrap();
            // psi(e^{s-r}) e^{s+r} = 1 residual.
            let t = (s - r).exp();
            let residual = (psi.eval(t) * (s + r).exp() - 1.0).abs();
            worst_residual = worst_residual.max(residual);
            assert!(residual <= 1e-10, "residual {residual} at s = {s}");
            // Roundtrip psi -> r -> psi.
            let back = r_to_psi(&rate, t).unwrap();
            let err = (back - psi.eval(t)).abs() / psi.eval(t);
            worst_roundtrip = worst_roundtrip.max(err);
            assert!(err <= 1e-8, "roundtrip error {err} at t = {t}");
        }
    }
    pass(
        "11 Dani roundtrip",
        format!("worst residual {worst_residual:.2e}, worst roundtrip {worst_roundtrip:.2e}"),
    );
}

#[test]
fn criterion_12_dirichlet_cross_validation() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x4449_5243);
    let horizon = 1e5;
    let step = 0.013;
    let mut details = Vec::new();
    for a in [0.9, 0.5] {
        let psi = PsiFunction::power(a, None).unwrap();
        let mut boundary = 0u64;
        for _ in 0..100 {
            let x: f64 = rng.gen_range(1e-6..1.0);
            let cmp = dirichlet_check_both(x, &psi, horizon, step).unwrap();
            if !cmp.agree {
                assert!(
                    cmp.boundary,
                    "hard disagreement at x = {x}, a = {a}: cf failures {}, flow hits {}",
                    cmp.cf.failures.len(),
                    cmp.flow_hits_in_horizon
                );
                boundary += 1;
            }
        }
        assert!(boundary <= 5, "a = {a}: {boundary} boundary cases");
        details.push(format!("a={a}: {boundary} boundary cases"));
    }
    pass("12 Dirichlet cross-validation", details.join(", "));
}

#[test]
fn criterion_13_borel_cantelli_dichotomy() {
    let sampler = HaarSampler::new(0x4243_4243);
    let s_max = 1_000.0;

    let convergent = RateFunction::power(1.0, 2.0, None).unwrap();
    let stats = bc_experiment(&convergent, 500, s_max, 0.25, &sampler, OrbitStart::Haar).unwrap();
    let top = stats.windows.last().unwrap();
    assert_eq!(top.hi, s_max);
    assert!(
        top.hit_fraction < 0.05,
        "convergent rate hit fraction {} in [{}, {})",
        top.hit_fraction,
        top.lo,
        top.hi
    );
    let conv_fraction = top.hit_fraction;

    let divergent = RateFunction::power(1.0, 1.0, None).unwrap();
    let stats = bc_experiment(&divergent, 500, s_max, 0.25, &sampler, OrbitStart::Haar).unwrap();
    let top = stats.windows.last().unwrap();
    assert!(
        top.hit_fraction > 0.2,
        "divergent rate hit fraction {} in [{}, {})",
        top.hit_fraction,
        top.lo,
        top.hi
    );
    pass(
        "13 Borel-Cantelli dichotomy",
        format!(
            "window [500, 1000): 1/s^2 fraction = {conv_fraction}, 1/s fraction = {}",
            top.hit_fraction
        ),
    );
}

#[test]
fn criterion_14_structural_identity() {
    let sampler = HaarSampler::new(0x5354_5543);
    let mut details = Vec::new();
    for &r in &[0.1, 0.5] {
        let region = ConvexRegion::shrinking_square(r).unwrap();
        let est = mc_moment(&region, 1, MC_SAMPLES, &sampler).unwrap();
        for &count in est.counts.keys() {
            assert!(
                count == 0 || count == 2 || count == 4,
                "r = {r}: observed primitive count {count}"
            );
        }
        // mu(one pair) + 2 mu(two pairs) = 2 e^{-2r} / zeta(2).
        let n = est.samples as f64;
        let c2 = *est.counts.get(&2).unwrap_or(&0) as f64;
        let c4 = *est.counts.get(&4).unwrap_or(&0) as f64;
        let mean = (c2 + 2.0 * c4) / n;
        let second = (c2 + 4.0 * c4) / n;
        let se = (((second - mean * mean) * n / (n - 1.0)).max(0.0) / n).sqrt();
        let expect = 2.0 * (-2.0 * r).exp() / ZETA2;
        let dev = (mean - expect).abs() / se;
        assert!(dev <= 4.0, "r = {r}: combination {mean} vs {expect}, {dev:.2} SE");
        details.push(format!("r={r}: {dev:.2} SE"));
    }
    pass("14 structural identity", details.join(", "));
}

#[test]
fn criterion_15_continuity_seam() {
    let at_threshold = overlap_integral(std::f64::consts::LN_2 / 2.0).unwrap();
    assert!(at_threshold.abs() <= 1e-10, "value at log(2)/2: {at_threshold}");
    let at_zero = overlap_integral(0.0).unwrap();
    assert!(
        (at_zero - (2.0 - ZETA2)).abs() <= 1e-10,
        "value at 0: {at_zero} vs {}",
        2.0 - ZETA2
    );
    pass(
        "15 continuity seam",
        format!("I(log2/2) = {at_threshold:.2e}, I(0) - (2 - zeta(2)) = {:.2e}",
            at_zero - (2.0 - ZETA2)),
    );
}
