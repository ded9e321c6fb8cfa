//! Cross-checks of the public API against independent oracles written here.

use ckcount::geometry::ball_volume;
use ckcount::{Counter, Dilation, RepTable, Q};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Points of Z^{2q+1} with (Σv²)² + w² ≤ t, by plain nested loops.
fn naive_count(q: usize, t: i64) -> u128 {
    let r = (t as f64).sqrt().floor() as i64 + 1;
    let s_max = r;
    // Number of v ∈ Z^{2q} with Σv² = s, for every s ≤ s_max.
    let mut reps = vec![0u128; s_max as usize + 1];
    reps[0] = 1;
    for _ in 0..2 * q {
        let mut next = vec![0u128; reps.len()];
        for (s, &n) in reps.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let mut c = 0i64;
            while s as i64 + c * c <= s_max {
                let mult = if c == 0 { 1 } else { 2 };
                next[s + (c * c) as usize] += n * mult;
                c += 1;
            }
        }
        reps = next;
    }
    let mut total = 0u128;
    for (s, &n) in reps.iter().enumerate() {
        let s = s as i64;
        for w in -r..=r {
            if s * s + w * w <= t {
                total += n;
            }
        }
    }
    total
}

#[test]
fn counter_matches_nested_loops() {
    for q in 3..=4u32 {
        let counter = Counter::new(Q::new(q).unwrap(), 5.0).unwrap();
        for t in [1u64, 2, 5, 16, 17, 100, 257, 600] {
            let fast = counter.count(Dilation::from_quartic(t)).unwrap();
            assert_eq!(fast, naive_count(q as usize, t as i64), "q={q}, x⁴={t}");
        }
    }
}

#[test]
fn rep_table_matches_nested_loops() {
    let q = Q::new(3).unwrap();
    let table = RepTable::build(q, 60).unwrap();
    let mut direct = vec![0u128; 61];
    let r = 8i64;
    for a in -r..=r {
        for b in -r..=r {
            for c in -r..=r {
                for d in -r..=r {
                    for e in -r..=r {
                        let s4 = a * a + b * b + c * c + d * d + e * e;
                        if s4 > 60 {
                            continue;
                        }
                        for f in -r..=r {
                            let s = s4 + f * f;
                            if s <= 60 {
                                direct[s as usize] += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    assert_eq!(table.r2q(), &direct[..]);
}

/// Hit-or-miss estimate over [−1,1]^7; three standard errors separate the
/// ball volume from any value off by a factor of two.
#[test]
fn monte_carlo_volume() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 10_000_000u64;
    let mut hits = 0u64;
    for _ in 0..n {
        let mut s = 0.0;
        for _ in 0..6 {
            let c: f64 = rng.gen_range(-1.0..1.0);
            s += c * c;
        }
        let w: f64 = rng.gen_range(-1.0..1.0);
        if s * s + w * w <= 1.0 {
            hits += 1;
        }
    }
    let p = hits as f64 / n as f64;
    let estimate = 128.0 * p;
    let sigma = 128.0 * (p * (1.0 - p) / n as f64).sqrt();
    let vol = ball_volume(Q::new(3).unwrap());
    assert!((estimate - vol).abs() <= 3.0 * sigma, "{estimate} ± {sigma} vs {vol}");
    let pi4 = std::f64::consts::PI.powi(4);
    assert!((vol - pi4 / 16.0).abs() < 1e-14);
    assert!((estimate - pi4 / 32.0).abs() > 100.0 * sigma);
}
