//! Measures the quantities behind each frozen budget on its calibration grid.
//! Run with `cargo run --release --example calibrate`.

use ckcount::trig::{
    approx_error, bprocess_lhs, bprocess_normalizer, bprocess_rhs, coeff_asymptotic_residuals, ApproxMode,
    BKind, CoeffTable, HPolicy,
};
use ckcount::{Counter, Dilation, Q};

fn main() {
    let q3 = Q::new(3).unwrap();
    let which: Vec<String> = std::env::args().skip(1).collect();
    let want = |k: &str| which.is_empty() || which.iter().any(|w| w == k);

    if want("coeff") {
        let t = CoeffTable::build(q3, 200.0, 8).unwrap();
        let worst = coeff_asymptotic_residuals(&t)
            .iter()
            .map(|r| r.plain.max(r.twisted))
            .fold(0.0, f64::max);
        println!("coeff_asymptotic_c measured {worst:.4}");
    }
    if want("bprocess") {
        let mut worst: f64 = 0.0;
        for x in [20u64, 25, 30, 35, 40] {
            let t = (x as u128).pow(4);
            for d in 1..=5 {
                for h in 1..=10 {
                    for kind in [BKind::G, BKind::GHat] {
                        let l = bprocess_lhs(q3, t, d, h, kind).unwrap();
                        let r = bprocess_rhs(q3, t, d, h, kind).unwrap();
                        worst = worst.max((l - r).norm() / bprocess_normalizer(t, d, h));
                    }
                }
            }
        }
        println!("bprocess measured {worst:.4}");
    }
    if want("prop31") {
        let counter = Counter::new(q3, 24.0).unwrap();
        for x in [16.0, 20.0, 24.0] {
            let a = approx_error(q3, x, HPolicy::Default, ApproxMode::Prop31).unwrap();
            let e = counter.error_term(Dilation::from_real(x).unwrap()).unwrap().err;
            println!(
                "prop31 x={x} err={e:.6e} leading={:.6e} env={:.6e} scale={:.6e} ratio={:.4}",
                a.leading,
                a.envelope,
                a.remainder_scale,
                a.residual_ratio(e)
            );
        }
    }
    if want("prop32") {
        for big_x in [40.0f64, 60.0, 80.0] {
            let counter = Counter::new(q3, (big_x + 1.0).sqrt() + 1.0).unwrap();
            let mut worst = f64::NEG_INFINITY;
            for i in 0..=20 {
                let x = big_x - 1.0 + i as f64 * 0.1;
                let a = approx_error(q3, x, HPolicy::Fixed(big_x / 2.0), ApproxMode::Prop32).unwrap();
                let delta = counter.normalized_delta(x).unwrap();
                worst = worst.max(a.residual_ratio(delta));
            }
            println!("prop32 X={big_x} worst ratio {worst:.4}");
        }
    }
    if want("shape") {
        let counter = Counter::new(q3, 6.0).unwrap();
        let mut shape: f64 = 0.0;
        let mut c1a: f64 = 0.0;
        let mut chain: f64 = 0.0;
        for t in 1..=1296u64 {
            let s = counter.error_term(Dilation::from_quartic(t)).unwrap();
            shape = shape.max(s.err.abs() / s.x.powf(16.0 / 3.0));
            if t < 3 {
                continue;
            }
            let a = approx_error(q3, s.x, HPolicy::Default, ApproxMode::Thm1A).unwrap();
            c1a = c1a.max(s.err.abs() / (a.leading + a.envelope));
            chain = chain.max(s.err.abs() / a.trivial_chain.unwrap());
        }
        println!("error_shape_c measured {shape:.4}; thm1a_c measured {c1a:.4}; chain ratio {chain:.4}");
    }
    if want("moments") {
        let t0 = std::time::Instant::now();
        let r = ckcount::moments::moment_report(q3, &[8.0, 12.0, 16.0, 24.0, 32.0], 200_000).unwrap();
        for row in &r.rows {
            println!("moments X={} ms={:.6e} pred={:.6e} ratio={:.4}", row.big_x, row.mean_square, row.prediction, row.ratio);
        }
        println!(
            "moments slope {:.4} series {:.8} / {:.8} tail {:.3e} in {:?}",
            r.slope, r.series.value, r.series.value_d_major, r.series.tail_bound, t0.elapsed()
        );
    }
    if want("partial_summation") {
        let mut worst: f64 = 0.0;
        for d in 1..=5u64 {
            for p in [10.0, 100.0, 1000.0] {
                let (s, w) = ckcount::resonance::partial_summation_check(q3, d, p).unwrap();
                println!("partial_summation d={d} P={p} sum={s:.6} pred={w:.6} diff={:.6}", s - w);
                worst = worst.max((s - w).abs());
            }
        }
        println!("partial_summation_c measured {worst:.4}");
    }
    if want("fejer") {
        let mut worst: f64 = 0.0;
        for p in [5.0, 10.0, 40.0] {
            for k in 1..=120 {
                let theta = 0.5 * k as f64;
                for gamma in [0.0, 0.7, 2.0] {
                    let (i, pr) = ckcount::resonance::fejer_identity_check(p, theta, gamma).unwrap();
                    worst = worst.max((i - pr).abs() * theta);
                }
            }
        }
        println!("fejer_c measured {worst:.4}");
    }
    if want("d0") {
        for n in 3..=8 {
            let qq = Q::new(n).unwrap();
            println!("D0(q={n}) = {}", ckcount::resonance::choose_d0(qq).unwrap());
        }
    }
    if want("wsum") {
        let t = ckcount::RepTable::build(q3, 400).unwrap();
        let mut worst: f64 = 0.0;
        for k in 4..=800 {
            let y = 0.5 * k as f64;
            let s = ckcount::counting::weighted_sum(&t, ckcount::counting::WeightedSumKind::Cesaro, y).unwrap();
            worst = worst.max(s.residual.abs() / (y * y.ln()));
        }
        println!("weighted_sum_c measured {worst:.4}");
    }
}
