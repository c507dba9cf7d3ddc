use phototherm::saft::*;
use phototherm::virtual_wave::VirtualField;
use proptest::prelude::*;

fn field(values: Vec<Vec<f64>>, xs: &[f64]) -> VirtualField {
    VirtualField { detector_xs: xs.to_vec(), dtp: 1.0, c: 1.0, values }
}

fn pulse_field(xs: &[f64], src: (f64, f64), ntp: usize) -> VirtualField {
    let values = xs
        .iter()
        .map(|&xd| {
            let r = (src.0 - xd).hypot(src.1);
            (0..ntp).map(|j| (-(j as f64 - r).powi(2) / 0.5).exp()).collect()
        })
        .collect();
    field(values, xs)
}

#[test]
fn point_source_focuses_to_its_position() {
    let xs: Vec<f64> = (0..64).map(f64::from).collect();
    let grid = ReconstructionGrid::new(64, 40, 0.0, 0.5, 1.0, 1.0).unwrap();
    for src in [(31.0, 10.5), (20.0, 20.5), (45.0, 30.5)] {
        let img = saft_backproject(&pulse_field(&xs, src, 120), &xs, &grid, 1.0).unwrap();
        let k = (0..img.values.len()).max_by(|&a, &b| img.values[a].total_cmp(&img.values[b])).unwrap();
        let (px, pz) = (img.x(k % img.nx), img.z(k / img.nx));
        assert!((px - src.0).hypot(pz - src.1) <= 1.0, "{src:?} -> ({px}, {pz})");
    }
}

#[test]
fn translation_covariance() {
    let xs: Vec<f64> = (0..32).map(f64::from).collect();
    let shifted: Vec<f64> = xs.iter().map(|x| x + 7.0).collect();
    let v = pulse_field(&xs, (12.0, 9.5), 80);
    let g = ReconstructionGrid::new(40, 20, 0.0, 0.5, 1.0, 1.0).unwrap();
    let g2 = ReconstructionGrid::new(40, 20, 7.0, 0.5, 1.0, 1.0).unwrap();
    let a = saft_backproject(&v, &xs, &g, 1.0).unwrap();
    let mut v2 = v.clone();
    v2.detector_xs = shifted.clone();
    let b = saft_backproject(&v2, &shifted, &g2, 1.0).unwrap();
    for (p, q) in a.values.iter().zip(&b.values) {
        assert!((p - q).abs() < 1e-12);
    }
}

#[test]
fn rejects_inconsistent_inputs() {
    let xs = [0.0, 1.0];
    let v = field(vec![vec![1.0; 4]; 2], &xs);
    let g = ReconstructionGrid::new(2, 2, 0.0, 0.5, 1.0, 1.0).unwrap();
    assert!(saft_backproject(&v, &[0.0], &g, 1.0).is_err());
    assert!(saft_backproject(&v, &xs, &g, 2.0).is_err());
    assert!(saft_backproject(&field(vec![], &[]), &[], &g, 1.0).is_err());
}

#[test]
fn averaging_gain_values() {
    let g = averaging_gain(200).unwrap();
    assert!((g.snr_factor - 200f64.sqrt()).abs() < 1e-12);
    assert!((g.resolution_factor - 0.5 * 200f64.ln()).abs() < 1e-12);
    assert!(averaging_gain(0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn backprojection_is_linear(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        v1 in prop::collection::vec(-1.0f64..1.0, 8 * 30),
        v2 in prop::collection::vec(-1.0f64..1.0, 8 * 30),
    ) {
        let xs: Vec<f64> = (0..8).map(|d| 2.0 * d as f64).collect();
        let split = |v: &[f64]| v.chunks(30).map(<[f64]>::to_vec).collect::<Vec<_>>();
        let f1 = field(split(&v1), &xs);
        let f2 = field(split(&v2), &xs);
        let combo: Vec<f64> = v1.iter().zip(&v2).map(|(p, q)| a * p + b * q).collect();
        let g = ReconstructionGrid::new(16, 10, -1.0, 0.5, 1.0, 1.5).unwrap();
        let r1 = saft_backproject(&f1, &xs, &g, 1.0).unwrap();
        let r2 = saft_backproject(&f2, &xs, &g, 1.0).unwrap();
        let rc = saft_backproject(&field(split(&combo), &xs), &xs, &g, 1.0).unwrap();
        for i in 0..rc.values.len() {
            prop_assert!((rc.values[i] - a * r1.values[i] - b * r2.values[i]).abs() < 1e-10);
        }
    }
}
