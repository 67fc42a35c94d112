use bitkiln::gen::{gen_zipf, ZipfSpec};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn counts(s: f64, range: u64, rows: usize, seed: u64) -> Vec<u64> {
    let t = gen_zipf(&ZipfSpec {
        rows,
        dims: 1,
        s,
        range,
        seed,
    })
    .unwrap();
    let mut c = vec![0u64; range as usize + 1];
    for r in t.rows() {
        let v: usize = r[0].parse().unwrap();
        assert!((1..=range as usize).contains(&v));
        c[v] += 1;
    }
    c
}

fn expected(s: f64, range: u64, rows: usize) -> Vec<f64> {
    let norm: f64 = (1..=range).map(|v| (v as f64).powf(-s)).sum();
    let mut e = vec![0.0];
    e.extend((1..=range).map(|v| rows as f64 * (v as f64).powf(-s) / norm));
    e
}

#[test]
fn first_two_frequencies() {
    let c = counts(1.0, 1000, 100_000, 1);
    let ratio = c[1] as f64 / c[2] as f64;
    assert!((1.8..=2.2).contains(&ratio), "{ratio}");
}

#[test]
fn chi_square_goodness_of_fit() {
    let rows = 100_000;
    for (i, s) in [0.5, 1.0, 1.5, 2.0].into_iter().enumerate() {
        let range = 1000;
        let obs = counts(s, range, rows, 100 + i as u64);
        let exp = expected(s, range, rows);
        // Pool tail values until each cell expects at least 5.
        let (mut stat, mut cells) = (0.0, 0usize);
        let (mut o_acc, mut e_acc) = (0.0, 0.0);
        for v in 1..=range as usize {
            o_acc += obs[v] as f64;
            e_acc += exp[v];
            if e_acc >= 5.0 {
                stat += (o_acc - e_acc).powi(2) / e_acc;
                cells += 1;
                o_acc = 0.0;
                e_acc = 0.0;
            }
        }
        if e_acc > 0.0 {
            stat += (o_acc - e_acc).powi(2) / e_acc;
            cells += 1;
        }
        let critical = ChiSquared::new((cells - 1) as f64).unwrap().inverse_cdf(0.99);
        assert!(
            stat < critical,
            "s={s}: chi2 {stat:.1} >= {critical:.1} with {cells} cells"
        );
    }
}
