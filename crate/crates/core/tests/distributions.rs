use covert_noma::model::{draw_channels, SystemParams};
use covert_noma::rng::{exponential, gamma_sum, stream};
use statrs::distribution::{ContinuousCDF, Exp, Gamma};

const SAMPLES: usize = 1_000_000;
const KS_MAX: f64 = 0.005;

fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn exponential_draws_pass_ks() {
    let mut rng = stream(42, 0);
    let xs: Vec<f64> = (0..SAMPLES).map(|_| exponential(&mut rng, 0.5)).collect();
    let d = ks_statistic(xs, |x| Exp::new(2.0).unwrap().cdf(x));
    assert!(d <= KS_MAX, "D = {d}");
}

#[test]
fn gamma_sums_pass_ks_on_both_samplers() {
    for shape in [3u32, 15, 100] {
        let mut rng = stream(43, u64::from(shape));
        let xs: Vec<f64> = (0..SAMPLES).map(|_| gamma_sum(&mut rng, shape, 0.5)).collect();
        let law = Gamma::new(f64::from(shape), 2.0).unwrap();
        let d = ks_statistic(xs, |x| law.cdf(x));
        assert!(d <= KS_MAX, "shape {shape}: D = {d}");
    }
}

#[test]
fn channel_draws_match_their_marginals() {
    let params = SystemParams::<f64>::reference();
    let mut rng = stream(44, 0);
    let chs: Vec<_> = (0..SAMPLES).map(|_| draw_channels(&params, &mut rng)).collect();
    let d_sr = ks_statistic(chs.iter().map(|c| c.g.sr).collect(), |x| Exp::new(1.0).unwrap().cdf(x));
    let d_re = ks_statistic(chs.iter().map(|c| c.g.re).collect(), |x| Exp::new(2.0).unwrap().cdf(x));
    let tau = Gamma::new(f64::from(params.n_samples), 2.0).unwrap();
    let d_tau = ks_statistic(chs.iter().map(|c| c.tau_se).collect(), |x| tau.cdf(x));
    assert!(
        d_sr <= KS_MAX && d_re <= KS_MAX && d_tau <= KS_MAX,
        "{d_sr} {d_re} {d_tau}"
    );
}
