use awemixer::signal::{dwt_level, make_basis, rfft_amplitude, wavedec, waverec, WaveletBasis};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Circular convolution with `filter`, then keep every second sample
/// starting at `F/2`.
fn conv_decimate(x: &[f64], filter: &[f64]) -> Vec<f64> {
    let n = x.len() as isize;
    let full: Vec<f64> = (0..n)
        .map(|i| {
            filter
                .iter()
                .enumerate()
                .map(|(j, h)| h * x[(i - j as isize).rem_euclid(n) as usize])
                .sum()
        })
        .collect();
    let f = filter.len();
    (0..x.len() / 2).map(|k| full[(2 * k + f / 2) % x.len()]).collect()
}

fn oracle_wavedec(x: &[f64], basis: &WaveletBasis, levels: usize) -> Vec<Vec<f64>> {
    let mut approx = x.to_vec();
    let mut details = Vec::new();
    for _ in 0..levels {
        details.push(conv_decimate(&approx, &basis.dec_hi));
        approx = conv_decimate(&approx, &basis.dec_lo);
    }
    details.reverse();
    std::iter::once(approx).chain(details).collect()
}

fn naive_dft_amplitude(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..=n / 2)
        .map(|k| {
            let s: Complex64 = x
                .iter()
                .enumerate()
                .map(|(t, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * t) as f64 / n as f64))
                .sum();
            s.norm()
        })
        .collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

fn random_signals(seed: u64, count: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lens = [16usize, 32, 64, 96];
    (0..count)
        .map(|i| (0..lens[i % lens.len()]).map(|_| rng.gen_range(-3.0..3.0)).collect())
        .collect()
}

#[test]
fn wavedec_matches_convolution_oracle() {
    for name in ["haar", "db4"] {
        let basis = make_basis(name).unwrap();
        for levels in 1..=3 {
            for x in random_signals(levels as u64, 100) {
                let got = wavedec(&x, &basis, levels).unwrap();
                let want = oracle_wavedec(&x, &basis, levels);
                assert_eq!(got.coeffs.len(), levels + 1);
                for (g, w) in got.coeffs.iter().zip(&want) {
                    let err = max_abs_diff(g, w);
                    assert!(err <= 1e-12, "{name} J={levels} len={}: {err:e}", x.len());
                }
            }
        }
    }
}

#[test]
fn waverec_roundtrip() {
    for name in ["haar", "db4"] {
        let basis = make_basis(name).unwrap();
        for levels in 1..=3 {
            for x in random_signals(10 + levels as u64, 100) {
                let p = wavedec(&x, &basis, levels).unwrap();
                let back = waverec(&p, &basis).unwrap();
                assert!(max_abs_diff(&back, &x) < 1e-8);
            }
        }
    }
}

#[test]
fn energy_is_preserved() {
    for name in ["haar", "db4"] {
        let basis = make_basis(name).unwrap();
        for x in random_signals(99, 40) {
            let e: f64 = x.iter().map(|v| v * v).sum();
            let p = wavedec(&x, &basis, 3).unwrap();
            assert!((p.energy() - e).abs() < 1e-9, "{name}: {} vs {e}", p.energy());
        }
    }
}

#[test]
fn band_lengths_halve_per_level() {
    let basis = make_basis("db4").unwrap();
    let p = wavedec(&vec![0.5; 96], &basis, 3).unwrap();
    let lens: Vec<usize> = p.coeffs.iter().map(Vec::len).collect();
    assert_eq!(lens, vec![12, 12, 24, 48]);
    assert_eq!(p.band_names(), ["cA3", "cD3", "cD2", "cD1"]);
}

#[test]
fn constant_signal_has_no_detail() {
    for name in ["haar", "db4"] {
        let p = wavedec(&vec![2.5; 64], &make_basis(name).unwrap(), 3).unwrap();
        for d in &p.coeffs[1..] {
            assert!(d.iter().all(|v| v.abs() < 1e-12), "{name}");
        }
    }
}

#[test]
fn impulse_localises_in_finest_detail() {
    let basis = make_basis("db4").unwrap();
    for k in [10usize, 31, 50] {
        let mut x = vec![0.0; 64];
        x[k] = 1.0;
        let (_, cd) = dwt_level(&x, &basis).unwrap();
        let peak = (0..cd.len())
            .max_by(|&a, &b| cd[a].abs().total_cmp(&cd[b].abs()))
            .unwrap();
        let dist = (peak as isize - (k / 2) as isize).abs();
        assert!(dist <= basis.taps() as isize, "impulse at {k}, peak at {peak}");
    }
}

#[test]
fn rfft_amplitude_matches_naive_dft() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in [4usize, 8, 12, 96] {
        for _ in 0..20 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let got = rfft_amplitude(&x).amps;
            let want = naive_dft_amplitude(&x);
            assert!(max_abs_diff(&got, &want) < 1e-9, "n={n}");
        }
    }
}

#[test]
fn rfft_amplitude_is_shift_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x: Vec<f64> = (0..96).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let base = rfft_amplitude(&x).amps;
    for s in [1usize, 7, 50] {
        let shifted: Vec<f64> = (0..96).map(|i| x[(i + s) % 96]).collect();
        assert!(max_abs_diff(&rfft_amplitude(&shifted).amps, &base) < 1e-9);
    }
}

#[test]
fn parseval_holds_for_one_sided_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 96;
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let a = rfft_amplitude(&x).amps;
    let mut s = a[0] * a[0] + a[n / 2] * a[n / 2];
    s += 2.0 * a[1..n / 2].iter().map(|v| v * v).sum::<f64>();
    let e: f64 = x.iter().map(|v| v * v).sum();
    assert!((s / n as f64 - e).abs() < 1e-9);
}

#[test]
fn pure_tone_peaks_at_its_bin() {
    let n = 96;
    for bin in [1usize, 4, 13] {
        let x: Vec<f64> = (0..n).map(|t| (2.0 * PI * (bin * t) as f64 / n as f64).cos()).collect();
        let a = rfft_amplitude(&x).amps;
        let peak = (0..a.len()).max_by(|&p, &q| a[p].total_cmp(&a[q])).unwrap();
        assert_eq!(peak, bin);
        assert!((a[bin] - n as f64 / 2.0).abs() < 1e-9);
    }
}

const X: [f64; 32] = [0.0, 0.7616154319649621, 1.474287911628145, 0.8456986856800477, 1.34588084453764, 0.4612752029752999, 0.6965654722360868, 0.8240443416872761, -0.36940373210576716, -0.33729466354290316, -1.5298361409084933, -1.4006667821758176, -1.1631309305733166, -2.045239825769163, -1.5426476794282347, -2.169239857276262, -1.4552535599880427, -0.69318535992523, -1.1820394894276154, -0.4706953478551854, -1.101291904188373, -0.6035243852593997, -0.24062516610713613, -1.257572830091472, -1.1317717940790235, -2.3261105146195664, -2.2939843612538975, -2.2356033346142916, -3.354730909263467, -3.1149419305071877, -3.994552588203989, -3.489555218744486];
const HAAR_CA3: [f64; 4] = [2.2660537493199886, -3.7326256417963526, -2.476354430899817, -7.757403561619011];
const HAAR_CD3: [f64; 4] = [-0.08703205750271459, 1.1607359247796074, -0.21148130928187459, 2.109409356865696];
const HAAR_CD2: [f64; 8] = [-0.7791855826716155, 0.1432731167947885, 1.1119022637178206, 0.25175839018100854, -0.24785204131523586, -0.10330914662458246, 0.5358526935847998, 0.5072174835889105];
const HAAR_CD1: [f64; 16] = [-0.5385434365987464, 0.44447970424870253, 0.6255106478246072, -0.09014117304693064, -0.022704540118384936, -0.09133652948139281, 0.6237451815379566, 0.44306757799478746, -0.5388635919910414, -0.5029962662631888, -0.3519747880890803, 0.7190905893151425, 0.8445250083278829, -0.04128161982949763, -0.16955641293236212, -0.357087064426183];
const DB4_CA3: [f64; 4] = [-1.7109803246088235, -7.991747666636016, 1.4866877167582542, -3.4842896105086045];
const DB4_CD3: [f64; 4] = [-0.40143246228998114, -0.424603429623468, 0.8591314479156937, -1.6240120797982012];
const DB4_CD2: [f64; 8] = [-1.4995450339001433, 0.15025987361141138, 0.4811007992721116, 0.36496417454033186, -0.35390743179165696, -0.54726685235504, 0.349473288340099, 2.460786070798455];
const DB4_CD1: [f64; 16] = [-0.6001885356304548, -0.36727575812802893, 0.44306863181451717, 0.41260574704548303, 0.16981050962394656, -0.6267688752015358, -0.3918196743096616, 0.45707332288813374, 0.4156778850949745, 0.1603431732655829, -0.6438236737221652, -0.40754120291720425, 0.4509084122650873, 0.42229422837752195, -0.48355907758531097, -0.4067383993531568];

#[test]
fn wavedec_matches_reference_periodization_fixture() {
    let cases: [(&str, [&[f64]; 4]); 2] = [
        ("haar", [&HAAR_CA3, &HAAR_CD3, &HAAR_CD2, &HAAR_CD1]),
        ("db4", [&DB4_CA3, &DB4_CD3, &DB4_CD2, &DB4_CD1]),
    ];
    for (name, want) in cases {
        let p = wavedec(&X, &make_basis(name).unwrap(), 3).unwrap();
        for (band, (g, w)) in p.coeffs.iter().zip(want).enumerate() {
            let err = max_abs_diff(g, w);
            assert!(err < 1e-12, "{name} band {band}: {err:e}");
        }
    }
}
