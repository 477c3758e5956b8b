//! Monte Carlo checks of the resampling procedures against each other and
//! against known population values.

use blb_core::engine::{
    blb_run, bofn_run, bootstrap_run, stationary_blb_run, subsampling_run, BlbConfig, BootstrapScheme, Clock,
    StationaryConfig, SubsetSize,
};
use blb_core::resampling::{Purpose, RngStream};
use blb_core::simgen::{gen_ma_series, ground_truth, GeneratorSpec};
use blb_core::{relative_deviation, Assessor, FitConfig, ObservationMatrix, RescaledMean, Ridge};

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt())
}

fn dataset(seed: u64, n: usize, d: usize) -> ObservationMatrix {
    GeneratorSpec::regression(n, d).generate_table(&mut RngStream::from_parts(seed, Purpose::Dataset, 0, 0)).unwrap()
}

fn ridge() -> Ridge {
    Ridge(FitConfig::default())
}

#[test]
fn blb_with_full_subsample_matches_bootstrap() {
    let data = dataset(1, 200, 2);
    let reps = 200;
    let (mut blb, mut boot) = (Vec::new(), Vec::new());
    for k in 0..reps {
        let cfg = BlbConfig { size: SubsetSize::Explicit(200), s: 1, r: 50, master_seed: k, ..BlbConfig::default() };
        blb.push(blb_run(&data, &ridge(), &Assessor::Stderr, &cfg).unwrap().quality.mean_value());
        let run =
            bootstrap_run(&data, &ridge(), &Assessor::Stderr, 50, BootstrapScheme::MultinomialFull, 10_000 + k, Clock::Frozen);
        boot.push(run.unwrap().quality.mean_value());
    }
    let ((ma, sa), (mb, sb)) = (mean_sd(&blb), mean_sd(&boot));
    let se = (sa * sa / reps as f64 + sb * sb / reps as f64).sqrt();
    assert!((ma - mb).abs() <= 3.0 * se, "blb {ma} boot {mb} se {se}");
}

fn width_deviation(run: impl Fn(u64) -> f64, reference: &[f64]) -> f64 {
    reference.iter().enumerate().map(|(i, r)| (run(i as u64) / r - 1.0).abs()).sum::<f64>() / reference.len() as f64
}

#[test]
fn bofn_and_subsampling_depend_on_subset_size() {
    let data: Vec<ObservationMatrix> = (0..4).map(|i| dataset(100 + i, 2000, 5)).collect();
    let a = Assessor::default();
    let boot: Vec<f64> = data
        .iter()
        .enumerate()
        .map(|(i, d)| {
            bootstrap_run(d, &ridge(), &a, 2000, BootstrapScheme::MultinomialFull, i as u64, Clock::Frozen)
                .unwrap()
                .quality
                .mean_value()
        })
        .collect();
    let bofn = |g: f64| {
        width_deviation(
            |i| bofn_run(&data[i as usize], &ridge(), &a, SubsetSize::Gamma(g), 2000, i, Clock::Frozen).unwrap().quality.mean_value(),
            &boot,
        )
    };
    let ss = |g: f64| {
        width_deviation(
            |i| {
                subsampling_run(&data[i as usize], &ridge(), &a, SubsetSize::Gamma(g), 2000, i, Clock::Frozen)
                    .unwrap()
                    .quality
                    .mean_value()
            },
            &boot,
        )
    };
    let (b5, b9, s5, s9) = (bofn(0.5), bofn(0.9), ss(0.5), ss(0.9));
    assert!(b9 <= 0.15, "bofn at n^0.9 deviates {b9}");
    assert!(b5 > 2.0 * b9, "bofn deviation at n^0.5 {b5} vs n^0.9 {b9}");
    // at n^0.5 both share the same small-sample inflation; at n^0.9 sampling
    // without replacement shrinks the subsampling spread
    assert!(s5 >= b5 - 0.02, "subsampling {s5} vs bofn {b5} at n^0.5");
    assert!(s9 > b9 + 0.1, "subsampling {s9} vs bofn {b9} at n^0.9");
}

#[test]
fn stationary_with_p_one_is_the_iid_bootstrap() {
    let series = gen_ma_series(300, &mut RngStream::from_parts(3, Purpose::Dataset, 0, 0)).unwrap();
    let reps = 50;
    let (mut st, mut iid) = (Vec::new(), Vec::new());
    for k in 0..reps {
        let cfg = StationaryConfig {
            size: SubsetSize::Explicit(300),
            s: 1,
            r: 100,
            p: 1.0,
            master_seed: k,
            clock: Clock::Frozen,
            ..StationaryConfig::default()
        };
        st.push(stationary_blb_run(&series, &Assessor::Stderr, &cfg).unwrap().quality.values[0]);
        let run = bootstrap_run(&series, &RescaledMean, &Assessor::Stderr, 100, BootstrapScheme::MultinomialFull, 500 + k, Clock::Frozen);
        iid.push(run.unwrap().quality.values[0]);
    }
    let ((ma, sa), (mb, sb)) = (mean_sd(&st), mean_sd(&iid));
    let se = (sa * sa / reps as f64 + sb * sb / reps as f64).sqrt();
    assert!((ma - mb).abs() <= 3.0 * se, "stationary {ma} iid {mb} se {se}");
}

#[test]
fn ma_rescaled_mean_truth_is_five() {
    let spec = GeneratorSpec::timeseries(5000);
    let q = ground_truth(|r: &mut RngStream| spec.generate_series(r), &RescaledMean, &Assessor::Stderr, 2000, 9, 4).unwrap();
    assert!((q.values[0] - 5.0).abs() <= 0.15, "truth {}", q.values[0]);
}

#[test]
fn blb_error_does_not_grow_with_n() {
    let mut prev: Option<(f64, f64)> = None;
    for n in [500usize, 1000, 2000] {
        let spec = GeneratorSpec::regression(n, 5);
        let truth =
            ground_truth(|r: &mut RngStream| spec.generate_table(r), &ridge(), &Assessor::default(), 1000, 40 + n as u64, 4)
                .unwrap();
        let errors: Vec<f64> = (0..10)
            .map(|i| {
                let data = spec.generate_table(&mut RngStream::from_parts(n as u64, Purpose::Dataset, i, 0)).unwrap();
                let cfg = BlbConfig { master_seed: i, parallelism: 4, ..BlbConfig::default() };
                relative_deviation(&blb_run(&data, &ridge(), &Assessor::default(), &cfg).unwrap().quality, &truth).unwrap()
            })
            .collect();
        let (m, sd) = mean_sd(&errors);
        let se = sd / (errors.len() as f64).sqrt();
        if let Some((pm, pse)) = prev {
            assert!(m <= pm + 2.0 * (se * se + pse * pse).sqrt(), "n={n}: error {m} after {pm}");
        }
        prev = Some((m, se));
    }
}
